"""Semi-discrete right-hand side of the slice equations on the C-grid.

Index conventions (shared by every operator in this module):
  - scalars theta_s, D, v, Pi live at cell centers, arrays (nx, nz)
  - u lives on x-faces: u[i, k] sits at the *left* face of cell (i, k);
    x is periodic, so shifted views do all horizontal neighboring
  - w lives on z-faces: w[i, k] sits at the *bottom* face of cell (i, k);
    rows k = 0 and k = nz are the rigid floor/lid where w = 0
  - face i derivative of a center field: (q[i] - q[i-1]) / dx
  - divergence of face fluxes at center i: (F[i+1] - F[i]) / dx
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import thermo
from .domain import Grid, PhysicalConstants, State


@dataclass
class Tendency:
    """Time derivatives of the prognostic fields, on their native locations."""

    du: np.ndarray      # (nx, nz)
    dw: np.ndarray      # (nx, nz+1), boundary rows identically 0
    dv: np.ndarray      # (nx, nz)
    dtheta: np.ndarray  # (nx, nz)
    dD: np.ndarray      # (nx, nz)


# periodic x-shifts; concatenate is several times cheaper than np.roll
# in this array-size regime and this is the hottest code in the package
def _xm(a):
    return np.concatenate((a[-1:], a[:-1]), axis=0)


def _xp(a):
    return np.concatenate((a[1:], a[:1]), axis=0)


def _xm2(a):
    return np.concatenate((a[-2:], a[:-2]), axis=0)


def _xp2(a):
    return np.concatenate((a[2:], a[:2]), axis=0)


def center_to_xface(q):
    return 0.5 * (_xm(q) + q)


def xface_to_center(u):
    return 0.5 * (u + _xp(u))


def zface_to_center(w):
    return 0.5 * (w[:, :-1] + w[:, 1:])


def _ddx_upwind(f, sign, dx, order):
    """Upwind-biased x-derivative of a center field, selected by `sign`.

    order 1: donor-cell; order 3: third-order upwind-biased; order 2 is the
    centered difference (no bias, `sign` ignored).
    """
    fm1 = _xm(f)
    fp1 = _xp(f)
    if order == 2:
        return (fp1 - fm1) / (2 * dx)
    if order == 3:
        up = (_xm2(f) - 6 * fm1 + 3 * f + 2 * fp1) / (6 * dx)
        dn = (-_xp2(f) + 6 * fp1 - 3 * f - 2 * fm1) / (6 * dx)
    else:
        up = (f - fm1) / dx
        dn = (fp1 - f) / dx
    return np.where(sign >= 0, up, dn)


def _ddz_upwind(f, sign, dz, order):
    """Upwind-biased z-derivative of a center field.

    Third-order stencils are used only away from the walls; the two cell
    rows adjacent to each z-boundary fall back to first order, and the
    outermost rows use the one interior one-sided difference available.
    """
    nz = f.shape[1]
    ddz = np.empty_like(f)
    if order == 2:
        ddz[:, 0] = (f[:, 1] - f[:, 0]) / dz
        ddz[:, -1] = (f[:, -1] - f[:, -2]) / dz
        ddz[:, 1:-1] = (f[:, 2:] - f[:, :-2]) / (2 * dz)
        return ddz
    # wall rows: taking the in-domain difference on the outflow-from-wall side
    # would be a downwind (anti-dissipative) stencil, so fall back to the
    # donor value there (zero gradient) and stay upwind otherwise
    ddz[:, 0] = np.where(sign[:, 0] >= 0, 0.0, (f[:, 1] - f[:, 0]) / dz)
    ddz[:, -1] = np.where(sign[:, -1] <= 0, 0.0, (f[:, -1] - f[:, -2]) / dz)
    up1 = (f[:, 1:-1] - f[:, :-2]) / dz
    dn1 = (f[:, 2:] - f[:, 1:-1]) / dz
    ddz[:, 1:-1] = np.where(sign[:, 1:-1] >= 0, up1, dn1)
    if order == 3 and nz >= 6:
        K = slice(2, nz - 2)
        up3 = (f[:, 0:nz - 4] - 6 * f[:, 1:nz - 3] + 3 * f[:, 2:nz - 2]
               + 2 * f[:, 3:nz - 1]) / (6 * dz)
        dn3 = (-f[:, 4:nz] + 6 * f[:, 3:nz - 1] - 3 * f[:, 2:nz - 2]
               - 2 * f[:, 1:nz - 3]) / (6 * dz)
        ddz[:, K] = np.where(sign[:, K] >= 0, up3, dn3)
    return ddz


def advect_scalar(field, u, w, grid: Grid, order: int):
    """(u . grad) field at cell centers, upwind-biased at the given order."""
    u_c = xface_to_center(u)
    w_c = zface_to_center(w)
    return (u_c * _ddx_upwind(field, u_c, grid.dx, order)
            + w_c * _ddz_upwind(field, w_c, grid.dz, order))


def _xface_value_upwind(f, u, order):
    """Upwind-biased face reconstruction of a center field on x-faces."""
    fm1 = _xm(f)
    if order == 2:
        return 0.5 * (fm1 + f)
    if order == 3:
        up = (-_xm2(f) + 5.0 * fm1 + 2.0 * f) / 6.0
        dn = (2.0 * fm1 + 5.0 * f - _xp(f)) / 6.0
    else:
        up, dn = fm1, f
    return np.where(u >= 0, up, dn)


def _zface_value_upwind(f, w, order):
    """Face reconstruction on interior z-faces (k = 1 .. nz-1), (nx, nz-1).

    Third order needs two upwind cells; faces within one cell of a wall fall
    back to the donor value. Wall faces carry no flux, so they never need a
    reconstructed value.
    """
    nz = f.shape[1]
    wi = w[:, 1:-1]
    if order == 2:
        return 0.5 * (f[:, :-1] + f[:, 1:])
    up = f[:, :-1].copy()
    dn = f[:, 1:].copy()
    if order == 3 and nz >= 4:
        up[:, 1:] = (-f[:, 0:nz - 2] + 5.0 * f[:, 1:nz - 1] + 2.0 * f[:, 2:nz]) / 6.0
        dn[:, :-1] = (2.0 * f[:, 0:nz - 2] + 5.0 * f[:, 1:nz - 1] - f[:, 2:nz]) / 6.0
    return np.where(wi >= 0, up, dn)


def scalar_transport(field, state: State, Fx, Fz, divF, grid: Grid, order: int):
    """(u . grad) field at centers, in mass-flux-consistent flux form.

    Uses the same face mass fluxes as continuity, so D * field is advected
    conservatively and a constant field has exactly zero tendency. Agrees
    with advect_scalar at the scheme's order on smooth fields but does not
    manufacture energy or potential vorticity at fronts.
    """
    fxf = _xface_value_upwind(field, state.u, order)
    fzf = _zface_value_upwind(field, state.w, order)
    Gx = Fx * fxf
    div_f = (_xp(Gx) - Gx) / grid.dx
    Gz = Fz[:, 1:-1] * fzf
    div_f[:, 0] += Gz[:, 0] / grid.dz
    div_f[:, 1:-1] += (Gz[:, 1:] - Gz[:, :-1]) / grid.dz
    div_f[:, -1] -= Gz[:, -1] / grid.dz
    return (div_f - field * divF) / state.D


def velocity_advection_advective(state: State, grid: Grid,
                                 centered: bool = False):
    """(u . grad)u at x-faces and (u . grad)w at interior z-faces.

    First-order upwind by default (momentum dissipation kept minimal but
    stabilizing); `centered` switches every difference to second order for
    conservation checks.
    """
    u, w = state.u, state.w
    dx, dz = grid.dx, grid.dz
    nz = grid.nz

    # --- u advection, at u-points ---
    um1 = _xm(u)
    up1 = _xp(u)
    if centered:
        dudx = (up1 - um1) / (2 * dx)
    else:
        dudx = np.where(u >= 0, (u - um1) / dx, (up1 - u) / dx)
    wm1 = _xm(w)
    w_u = 0.25 * (wm1[:, :-1] + w[:, :-1] + wm1[:, 1:] + w[:, 1:])
    dudz = np.empty_like(u)
    if centered:
        dudz[:, 0] = (u[:, 1] - u[:, 0]) / dz
        dudz[:, -1] = (u[:, -1] - u[:, -2]) / dz
        dudz[:, 1:-1] = (u[:, 2:] - u[:, :-2]) / (2 * dz)
    else:
        # same donor-value fallback at the walls as the scalar operator
        dudz[:, 0] = np.where(w_u[:, 0] >= 0, 0.0, (u[:, 1] - u[:, 0]) / dz)
        dudz[:, -1] = np.where(w_u[:, -1] <= 0, 0.0, (u[:, -1] - u[:, -2]) / dz)
        dudz[:, 1:-1] = np.where(w_u[:, 1:-1] >= 0,
                                 (u[:, 1:-1] - u[:, :-2]) / dz,
                                 (u[:, 2:] - u[:, 1:-1]) / dz)
    adv_u = u * dudx + w_u * dudz

    # --- w advection, at interior w-points (k = 1 .. nz-1) ---
    wi = w[:, 1:-1]
    u_w = 0.25 * (u[:, :-1] + u[:, 1:] + up1[:, :-1] + up1[:, 1:])
    if centered:
        dwdx = (_xp(wi) - _xm(wi)) / (2 * dx)
        dwdz = (w[:, 2:] - w[:, :-2]) / (2 * dz)
    else:
        dwdx = np.where(u_w >= 0, (wi - _xm(wi)) / dx, (_xp(wi) - wi) / dx)
        dwdz = np.where(wi >= 0,
                        (w[:, 1:-1] - w[:, :-2]) / dz,
                        (w[:, 2:] - w[:, 1:-1]) / dz)
    adv_w = np.zeros((grid.nx, nz + 1))
    adv_w[:, 1:-1] = u_w * dwdx + wi * dwdz
    return adv_u, adv_w


def corner_vorticity(u, w, grid: Grid):
    """In-slice vorticity du/dz - dw/dx at cell corners, (nx, nz+1).

    Wall rows use the one-sided u difference one cell in, with w = 0 on
    the wall itself.
    """
    dz, dx = grid.dz, grid.dx
    eta = np.empty((grid.nx, grid.nz + 1))
    eta[:, 1:-1] = (u[:, 1:] - u[:, :-1]) / dz
    eta[:, 0] = (u[:, 1] - u[:, 0]) / dz
    eta[:, -1] = (u[:, -1] - u[:, -2]) / dz
    eta -= (w - _xm(w)) / dx
    return eta


def velocity_advection_vector_invariant(state: State, grid: Grid):
    """Rotational form on the full three-component velocity: omega x u plus
    the kinetic-energy gradient, as a one-cell-wide 3D code evaluates it.

    With d/dy = 0 the vorticity is omega = (-dv/dz, du/dz - dw/dx, dv/dx).
    All cross products are built at cell corners and averaged to the
    velocity points; the kinetic-energy gradient is the compact centered
    difference of K = (u^2 + v^2 + w^2)/2 at centers. The corner averaging
    of the v-coupled terms does not cancel the v part of grad K exactly
    (unlike face-local products, which do), which is what lets this form
    develop grid-scale noise once a front is present. Returns the (u, w)
    contributions; the matching v contribution comes from
    vector_invariant_v_advection.
    """
    u, w, v = state.u, state.w, state.v
    dx, dz = grid.dx, grid.dz
    eta = corner_vorticity(u, w, grid)

    w_corner = 0.5 * (_xm(w) + w)
    etaw = eta * w_corner
    rot_u = 0.5 * (etaw[:, :-1] + etaw[:, 1:])

    u_corner = np.empty_like(eta)
    u_corner[:, 1:-1] = 0.5 * (u[:, :-1] + u[:, 1:])
    u_corner[:, 0] = u[:, 0]
    u_corner[:, -1] = u[:, -1]
    etau = eta * u_corner
    rot_w = np.zeros_like(w)
    rot_w[:, 1:-1] = -0.5 * (etau + _xp(etau))[:, 1:-1]

    # out-of-slice vorticity couplings, built at corners like eta:
    # -omega_z v in x, +omega_x v in z
    omega_z, omega_x = _corner_v_vorticity(v, grid)
    v_corner = _center_to_corner(v)
    p_zx = omega_z * v_corner
    rot_u -= 0.5 * (p_zx[:, :-1] + p_zx[:, 1:])
    p_xz = omega_x * v_corner
    rot_w[:, 1:-1] += 0.5 * (p_xz + _xp(p_xz))[:, 1:-1]

    u_c = xface_to_center(u)
    w_c = zface_to_center(w)
    K = 0.5 * (u_c ** 2 + w_c ** 2 + v ** 2)
    dKdx = (K - _xm(K)) / dx
    dKdz = np.zeros_like(w)
    dKdz[:, 1:-1] = (K[:, 1:] - K[:, :-1]) / dz

    return rot_u + dKdx, rot_w + dKdz


def _center_to_corner(q):
    """Four-point average of a center field to corners, one-sided at walls."""
    nx, nz = q.shape
    out = np.empty((nx, nz + 1))
    qx = 0.5 * (_xm(q) + q)                  # at (x-face, z-center)
    out[:, 1:-1] = 0.5 * (qx[:, :-1] + qx[:, 1:])
    out[:, 0] = qx[:, 0]
    out[:, -1] = qx[:, -1]
    return out


def _corner_v_vorticity(v, grid: Grid):
    """Out-of-slice vorticity components (omega_z, omega_x) = (dv/dx, -dv/dz)
    at cell corners, averaged from their natural face locations."""
    dvdx = (v - _xm(v)) / grid.dx            # at (x-face, z-center)
    omega_z = np.empty((grid.nx, grid.nz + 1))
    omega_z[:, 1:-1] = 0.5 * (dvdx[:, :-1] + dvdx[:, 1:])
    omega_z[:, 0] = dvdx[:, 0]
    omega_z[:, -1] = dvdx[:, -1]
    dvdz = (v[:, 1:] - v[:, :-1]) / grid.dz  # at (x-center, interior z-face)
    omega_x = np.empty((grid.nx, grid.nz + 1))
    omega_x[:, 1:-1] = -0.5 * (_xm(dvdz) + dvdz)
    omega_x[:, 0] = omega_x[:, 1]
    omega_x[:, -1] = omega_x[:, -2]
    return omega_z, omega_x


def vector_invariant_v_advection(state: State, grid: Grid):
    """(omega x u)_y = omega_z u - omega_x w at centers: the rotational-form
    replacement for (u . grad)v, corner products, no upwind dissipation."""
    u, w, v = state.u, state.w, state.v
    omega_z, omega_x = _corner_v_vorticity(v, grid)
    u_corner = np.empty_like(omega_z)
    u_corner[:, 1:-1] = 0.5 * (u[:, :-1] + u[:, 1:])
    u_corner[:, 0] = u[:, 0]
    u_corner[:, -1] = u[:, -1]
    w_corner = 0.5 * (_xm(w) + w)
    p = omega_z * u_corner - omega_x * w_corner
    p_at_xface = 0.5 * (p[:, :-1] + p[:, 1:])        # corners -> u-points
    return 0.5 * (p_at_xface + _xp(p_at_xface))      # u-points -> centers


def tendencies(state: State, grid: Grid, c: PhysicalConstants,
               velocity_form: str = "advective", upwind_order: int = 3,
               centered: bool = False) -> Tendency:
    """Full right-hand side of the prognostic equations."""
    u, w, v, th, D = state.u, state.w, state.v, state.theta_s, state.D
    dx, dz = grid.dx, grid.dz
    pi = thermo.exner(D, th, c)

    if velocity_form == "vector-invariant":
        adv_u, adv_w = velocity_advection_vector_invariant(state, grid)
    else:
        adv_u, adv_w = velocity_advection_advective(state, grid, centered=centered)

    # in-slice momentum
    du = (-adv_u + c.f * center_to_xface(v)
          - c.cp * center_to_xface(th) * (pi - _xm(pi)) / dx)
    dw = np.zeros_like(w)
    th_zf = 0.5 * (th[:, :-1] + th[:, 1:])
    dw[:, 1:-1] = (-adv_w[:, 1:-1]
                   - c.cp * th_zf * (pi[:, 1:] - pi[:, :-1]) / dz - c.g)

    # flux-form continuity; face densities by arithmetic mean
    Fx = u * center_to_xface(D)
    Fz = np.zeros_like(w)
    Fz[:, 1:-1] = w[:, 1:-1] * 0.5 * (D[:, :-1] + D[:, 1:])
    divF = (_xp(Fx) - Fx) / dx + (Fz[:, 1:] - Fz[:, :-1]) / dz

    # out-of-slice momentum and temperature, with the slice source terms;
    # transport reuses the continuity mass fluxes (see scalar_transport).
    # The vector-invariant form treats v as the third velocity component,
    # so its advection becomes the rotational form as well.
    order = 2 if centered else upwind_order
    if velocity_form == "vector-invariant":
        adv_v = vector_invariant_v_advection(state, grid)
    else:
        adv_v = scalar_transport(v, state, Fx, Fz, divF, grid, order)
    dv = -adv_v - c.f * xface_to_center(u) + c.cp * c.s * (pi - c.Pi0)
    dtheta = -scalar_transport(th, state, Fx, Fz, divF, grid, order) - v * c.s

    return Tendency(du=du, dw=dw, dv=dv, dtheta=dtheta, dD=-divF)

"""Time integrators: explicit SSPRK3 for verification, implicit midpoint
with matrix-free Newton-Krylov for production runs.

The nonlinear solve is R(S*) = S* - S - dt * F((S + S*)/2) = 0, attacked by
inexact Newton: directional derivatives of R by finite differences along the
Krylov vectors, restarted right-preconditioned GMRES for the linear solves,
and a per-column direct solve of the vertical acoustic-gravity linearization
as the preconditioner (the vertical acoustic Courant number is O(100) at the
production time step; the horizontal one is O(1)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import splu

from . import dynamics, thermo
from .domain import Grid, PhysicalConstants, RunConfig, State


class CFLError(RuntimeError):
    """Explicit step requested above the acoustic stability bound."""


class NewtonError(RuntimeError):
    """Implicit solve failed; carries the SolverStats of the attempt."""

    def __init__(self, message: str, stats: "SolverStats"):
        self.stats = stats
        super().__init__(message)


class PreconditionerError(RuntimeError):
    """Singular column block in the preconditioner factorization."""


@dataclass
class SolverStats:
    newton_iterations: int = 0
    linear_iterations_total: int = 0
    final_residual_norm: float = 0.0
    converged: bool = False


@dataclass
class SolverConfig:
    """Newton/GMRES knobs, normally sourced from RunConfig."""

    newton_abs_tol: float = 1.0e-9
    newton_rel_tol: float = 1.0e-8
    newton_max_iters: int = 30
    linear_rel_tol: float = 1.0e-4
    linear_max_iters: int = 400
    linear_restart: int = 30
    preconditioner: str = "column-block"

    @classmethod
    def from_run_config(cls, cfg: RunConfig) -> "SolverConfig":
        return cls(newton_abs_tol=cfg.newton_abs_tol,
                   newton_rel_tol=cfg.newton_rel_tol,
                   newton_max_iters=cfg.newton_max_iters,
                   linear_rel_tol=cfg.linear_rel_tol,
                   linear_max_iters=cfg.linear_max_iters,
                   linear_restart=cfg.linear_restart,
                   preconditioner=cfg.preconditioner)


# ---------------------------------------------------------------------------
# Packing: the solver works on one flat vector. Boundary w rows are not
# unknowns; unpacking reconstructs them as zeros, which keeps the rigid-lid
# invariant for free.
# ---------------------------------------------------------------------------

def pack(state: State) -> np.ndarray:
    return np.concatenate([state.u.ravel(), state.w[:, 1:-1].ravel(),
                           state.v.ravel(), state.theta_s.ravel(),
                           state.D.ravel()])


def unpack(z: np.ndarray, grid: Grid, t: float) -> State:
    nx, nz = grid.nx, grid.nz
    nc = nx * nz
    nw = nx * (nz - 1)
    u = z[:nc].reshape(nx, nz).copy()
    w = np.zeros((nx, nz + 1))
    w[:, 1:-1] = z[nc:nc + nw].reshape(nx, nz - 1)
    v = z[nc + nw:2 * nc + nw].reshape(nx, nz).copy()
    th = z[2 * nc + nw:3 * nc + nw].reshape(nx, nz).copy()
    D = z[3 * nc + nw:4 * nc + nw].reshape(nx, nz).copy()
    return State(t=t, u=u, w=w, v=v, theta_s=th, D=D)


def residual_weights(grid: Grid, c: PhysicalConstants) -> np.ndarray:
    """Nondimensionalizing weights so the mixed-units residual norm is meaningful."""
    nx, nz = grid.nx, grid.nz
    wv = np.empty(nx * nz * 4 + nx * (nz - 1))
    nc = nx * nz
    nw = nx * (nz - 1)
    wv[:nc] = 1.0 / c.u0
    wv[nc:nc + nw] = 1.0 / c.u0
    wv[nc + nw:2 * nc + nw] = 1.0 / c.u0
    wv[2 * nc + nw:3 * nc + nw] = 1.0 / c.theta0
    wv[3 * nc + nw:] = c.R * c.theta0 / c.p0
    return wv


def make_packed_rhs(grid: Grid, c: PhysicalConstants, cfg: RunConfig):
    """tendencies() as a flat-vector function of the packed state."""

    def rhs(z: np.ndarray) -> np.ndarray:
        s = unpack(z, grid, 0.0)
        ten = dynamics.tendencies(s, grid, c,
                                  velocity_form=cfg.velocity_form,
                                  upwind_order=cfg.upwind_order,
                                  centered=cfg.centered_advection)
        return np.concatenate([ten.du.ravel(), ten.dw[:, 1:-1].ravel(),
                               ten.dv.ravel(), ten.dtheta.ravel(),
                               ten.dD.ravel()])

    return rhs


# ---------------------------------------------------------------------------
# Explicit SSPRK3
# ---------------------------------------------------------------------------

def acoustic_courant(state: State, grid: Grid, c: PhysicalConstants) -> float:
    """Pointwise acoustic Courant number max (cs+|u|)/dx*dt + (cs+|w|)/dz*dt, dt=1."""
    pi = thermo.exner(state.D, state.theta_s, c)
    cs = np.sqrt(c.cp * c.R * pi * state.theta_s / c.cv)
    u_c = dynamics.xface_to_center(state.u)
    w_c = dynamics.zface_to_center(state.w)
    return float(np.max((cs + np.abs(u_c)) / grid.dx + (cs + np.abs(w_c)) / grid.dz))


def step_ssprk3(state: State, dt: float, grid: Grid, c: PhysicalConstants,
                cfg: RunConfig, rhs=None) -> State:
    """Three-stage strong-stability-preserving RK3, acoustic-CFL guarded."""
    nu = acoustic_courant(state, grid, c) * dt
    if nu > cfg.cfl_max:
        raise CFLError(f"acoustic Courant number {nu:.3g} exceeds cap "
                       f"{cfg.cfl_max} at dt={dt}")
    F = rhs if rhs is not None else make_packed_rhs(grid, c, cfg)
    z0 = pack(state)
    z1 = z0 + dt * F(z0)
    z2 = 0.75 * z0 + 0.25 * (z1 + dt * F(z1))
    z3 = z0 / 3.0 + (2.0 / 3.0) * (z2 + dt * F(z2))
    out = unpack(z3, grid, state.t + dt)
    out.zero_boundary_w()
    return out


# ---------------------------------------------------------------------------
# Restarted GMRES, right-preconditioned. The true residual norm is available
# from the Givens recurrence, so converged cycles cost no extra matvec.
# ---------------------------------------------------------------------------

def gmres(apply_A, b: np.ndarray, apply_M, rtol: float, restart: int,
          maxiter: int):
    """Solve A x = b approximately. Returns (x, matvecs, converged)."""
    n = b.size
    x = np.zeros(n)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return x, 0, True
    target = rtol * bnorm
    nmv = 0
    r = b.copy()
    rnorm = bnorm
    while nmv < maxiter:
        m = min(restart, maxiter - nmv)
        Q = np.empty((m + 1, n))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        gv = np.zeros(m + 1)
        Q[0] = r / rnorm
        gv[0] = rnorm
        k_used = 0
        breakdown = False
        for k in range(m):
            vnew = apply_A(apply_M(Q[k]))
            nmv += 1
            for j in range(k + 1):
                H[j, k] = Q[j] @ vnew
                vnew -= H[j, k] * Q[j]
            H[k + 1, k] = np.linalg.norm(vnew)
            if H[k + 1, k] > 1e-14 * bnorm:
                Q[k + 1] = vnew / H[k + 1, k]
            else:
                breakdown = True
            for j in range(k):
                t = cs[j] * H[j, k] + sn[j] * H[j + 1, k]
                H[j + 1, k] = -sn[j] * H[j, k] + cs[j] * H[j + 1, k]
                H[j, k] = t
            denom = math.hypot(H[k, k], H[k + 1, k])
            if denom == 0.0:
                cs[k], sn[k] = 1.0, 0.0
            else:
                cs[k], sn[k] = H[k, k] / denom, H[k + 1, k] / denom
            H[k, k] = cs[k] * H[k, k] + sn[k] * H[k + 1, k]
            H[k + 1, k] = 0.0
            gv[k + 1] = -sn[k] * gv[k]
            gv[k] = cs[k] * gv[k]
            k_used = k + 1
            if abs(gv[k_used]) <= target or breakdown:
                break
        y = np.zeros(k_used)
        for i in range(k_used - 1, -1, -1):
            y[i] = (gv[i] - H[i, i + 1:k_used] @ y[i + 1:k_used]) / H[i, i]
        x = x + apply_M(Q[:k_used].T @ y)
        rnorm = abs(gv[k_used])
        if rnorm <= target or breakdown:
            return x, nmv, rnorm <= target or breakdown
        if nmv >= maxiter:
            break
        r = b - apply_A(x)
        nmv += 1
        rnorm = float(np.linalg.norm(r))
        if rnorm <= target:
            return x, nmv, True
    return x, nmv, rnorm <= target


# ---------------------------------------------------------------------------
# Column-block preconditioner
# ---------------------------------------------------------------------------

class ColumnPreconditioner:
    """Exact per-column solve of I - (dt/2) L_col on the (w, theta_s, D) block.

    L_col is the vertical acoustic-gravity linearization about a reference
    state: pressure gradient and buoyancy in the w rows, vertical advection
    of the reference stratification in the theta rows, vertical mass flux in
    the D rows. u and v pass through unchanged. The blocks are assembled
    into one block-diagonal sparse matrix and LU-factorized once.
    """

    def __init__(self, state: State, grid: Grid, c: PhysicalConstants, dt: float):
        self.grid = grid
        nx, nz = grid.nx, grid.nz
        nc = nx * nz
        self._off_w = nc
        self._off_v = nc + nx * (nz - 1)
        self._off_th = self._off_v + nc
        self._off_D = self._off_th + nc
        self._nz = nz
        self._m = 3 * nz - 1
        if dt == 0.0:
            self._lu = None
            return

        dz = grid.dz
        th, D = state.theta_s, state.D
        pi = thermo.exner(D, th, c)
        k_ = c.R / c.cv
        a = k_ * pi / D          # dPi/dD
        b = k_ * pi / th         # dPi/dtheta
        thf = 0.5 * (th[:, :-1] + th[:, 1:])        # interior faces 1..nz-1
        dpidz = (pi[:, 1:] - pi[:, :-1]) / dz
        Df = 0.5 * (D[:, :-1] + D[:, 1:])
        dthdz = np.empty_like(th)
        dthdz[:, 1:-1] = (th[:, 2:] - th[:, :-2]) / (2 * dz)
        dthdz[:, 0] = (th[:, 1] - th[:, 0]) / dz
        dthdz[:, -1] = (th[:, -1] - th[:, -2]) / dz

        # local unknown layout per column: w_1..w_{nz-1}, th_0..th_{nz-1}, D_0..D_{nz-1}
        lw = lambda k: k - 1
        lth = lambda k: (nz - 1) + k
        lD = lambda k: (2 * nz - 1) + k

        rows, cols, vals = [], [], []

        def add(local_rows, local_cols, v):
            # v has shape (nx, len(local_rows)); offset each column's block
            base = (np.arange(nx) * self._m)[:, None]
            rows.append((base + local_rows[None, :]).ravel())
            cols.append((base + local_cols[None, :]).ravel())
            vals.append(v.ravel())

        kk = np.arange(1, nz)            # interior faces
        j = kk - 1                       # index into face-centered arrays
        cp = c.cp
        # w rows: pressure gradient through dPi, plus buoyancy through theta
        add(lw(kk), lD(kk), -cp * thf[:, j] * a[:, kk] / dz)
        add(lw(kk), lD(kk - 1), cp * thf[:, j] * a[:, kk - 1] / dz)
        add(lw(kk), lth(kk), -cp * thf[:, j] * b[:, kk] / dz - 0.5 * cp * dpidz[:, j])
        add(lw(kk), lth(kk - 1), cp * thf[:, j] * b[:, kk - 1] / dz - 0.5 * cp * dpidz[:, j])
        # theta rows: -0.5*dthdz*(w_k + w_{k+1})
        kc = np.arange(1, nz)            # theta rows with a w_k neighbor below
        add(lth(kc), lw(kc), -0.5 * dthdz[:, kc])
        kc = np.arange(0, nz - 1)        # theta rows with a w_{k+1} neighbor above
        add(lth(kc), lw(kc + 1), -0.5 * dthdz[:, kc])
        # D rows: -(Df_{k+1} w_{k+1} - Df_k w_k)/dz
        kc = np.arange(0, nz - 1)
        add(lD(kc), lw(kc + 1), -Df[:, kc] / dz)
        kc = np.arange(1, nz)
        add(lD(kc), lw(kc), Df[:, kc - 1] / dz)

        n = nx * self._m
        rows = np.concatenate(rows + [np.arange(n)])
        cols = np.concatenate(cols + [np.arange(n)])
        vals = np.concatenate([(-0.5 * dt) * np.concatenate(vals), np.ones(n)])
        M = coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsc()
        try:
            self._lu = splu(M)
        except RuntimeError as exc:
            raise PreconditionerError(f"column block factorization failed: {exc}")

    def apply(self, z: np.ndarray) -> np.ndarray:
        """Apply the inverse to a packed state increment."""
        if self._lu is None:
            return z.copy()
        nx, nz = self.grid.nx, self.grid.nz
        out = z.copy()
        wsub = z[self._off_w:self._off_v].reshape(nx, nz - 1)
        thsub = z[self._off_th:self._off_D].reshape(nx, nz)
        Dsub = z[self._off_D:].reshape(nx, nz)
        y = np.concatenate([wsub, thsub, Dsub], axis=1).ravel()
        sol = self._lu.solve(y).reshape(nx, self._m)
        out[self._off_w:self._off_v] = sol[:, :nz - 1].ravel()
        out[self._off_th:self._off_D] = sol[:, nz - 1:2 * nz - 1].ravel()
        out[self._off_D:] = sol[:, 2 * nz - 1:].ravel()
        return out


def column_preconditioner(increment: np.ndarray, reference: State, grid: Grid,
                          c: PhysicalConstants, dt: float) -> np.ndarray:
    """One-shot convenience wrapper around ColumnPreconditioner.apply."""
    return ColumnPreconditioner(reference, grid, c, dt).apply(increment)


# ---------------------------------------------------------------------------
# Implicit midpoint
# ---------------------------------------------------------------------------

def _positive_fields(z: np.ndarray, grid: Grid) -> bool:
    nc = grid.nx * grid.nz
    nw = grid.nx * (grid.nz - 1)
    th = z[2 * nc + nw:3 * nc + nw]
    D = z[3 * nc + nw:]
    return bool(np.all(th > 0) and np.all(D > 0))


def step_implicit_midpoint(state: State, dt: float, grid: Grid,
                           c: PhysicalConstants, cfg: RunConfig,
                           solver: SolverConfig | None = None,
                           rhs=None, precond=None, guess_delta=None):
    """Advance one implicit-midpoint step. Returns (new_state, SolverStats).

    `rhs` may inject an alternative packed right-hand side (testing hook);
    the column preconditioner is then skipped unless `precond` is supplied.
    `guess_delta` warm-starts Newton with the previous step's increment;
    the convergence tolerance stays anchored to the cold residual so warm
    starts change cost, never accuracy.
    """
    if solver is None:
        solver = SolverConfig.from_run_config(cfg)
    custom_rhs = rhs is not None
    F = rhs if custom_rhs else make_packed_rhs(grid, c, cfg)
    weights = residual_weights(grid, c)
    z0 = pack(state)
    sqrt_eps = math.sqrt(np.finfo(float).eps)

    def residual(zs):
        return zs - z0 - dt * F(0.5 * (z0 + zs))

    if precond is not None:
        M = precond
    elif not custom_rhs and solver.preconditioner == "column-block":
        M = ColumnPreconditioner(state, grid, c, dt)
    else:
        M = None
    apply_M = M.apply if M is not None else (lambda p: p)

    stats = SolverStats()
    zs = z0.copy()
    R = residual(zs)
    rnorm = float(np.linalg.norm(R * weights))
    tol = max(solver.newton_abs_tol, solver.newton_rel_tol * rnorm)
    if guess_delta is not None and guess_delta.shape == z0.shape and rnorm > tol:
        z_try = z0 + guess_delta
        if _positive_fields(z_try, grid):
            try:
                R_try = residual(z_try)
                rnorm_try = float(np.linalg.norm(R_try * weights))
                if rnorm_try < rnorm:
                    zs, R, rnorm = z_try, R_try, rnorm_try
            except thermo.ThermoDomainError:
                pass

    while True:
        stats.newton_iterations += 1
        stats.final_residual_norm = rnorm
        if rnorm <= tol:
            stats.converged = True
            break
        if stats.newton_iterations > solver.newton_max_iters:
            raise NewtonError(
                f"Newton did not converge in {solver.newton_max_iters} iterations "
                f"(residual {rnorm:.3e}, tol {tol:.3e})", stats)

        znorm = float(np.linalg.norm(zs))

        # The linear system is solved in the nondimensionalized space
        # (rows and preconditioner conjugated by the weights) so the GMRES
        # tolerance is measured in the same norm Newton converges in.
        def jvp(p):
            pnorm = float(np.linalg.norm(p))
            if pnorm == 0.0:
                return np.zeros_like(p)
            eps = sqrt_eps * (1.0 + znorm) / pnorm
            return weights * (residual(zs + eps * p) - R) / eps

        delta, nmv, _ = gmres(jvp, -weights * R,
                              lambda q: apply_M(q / weights),
                              solver.linear_rel_tol,
                              solver.linear_restart, solver.linear_max_iters)
        stats.linear_iterations_total += nmv

        accepted = False
        alpha = 1.0
        for _ in range(5):
            z_try = zs + alpha * delta
            if _positive_fields(z_try, grid):
                try:
                    R_try = residual(z_try)
                except thermo.ThermoDomainError:
                    R_try = None
                if R_try is not None:
                    rnorm_try = float(np.linalg.norm(R_try * weights))
                    if rnorm_try < rnorm:
                        zs, R, rnorm = z_try, R_try, rnorm_try
                        accepted = True
                        break
            alpha *= 0.5
        if not accepted:
            stats.final_residual_norm = rnorm
            raise NewtonError(
                "Newton stalled: no admissible step improves the residual "
                f"(residual {rnorm:.3e}, tol {tol:.3e})", stats)

    out = unpack(zs, grid, state.t + dt)
    out.zero_boundary_w()
    return out, stats

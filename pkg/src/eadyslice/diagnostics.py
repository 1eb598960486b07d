"""Scalar and field diagnostics: energies, RMSV, potential vorticity,
front intensity, and the grid-noise metric."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dynamics, thermo
from .domain import Grid, PhysicalConstants, State


@dataclass
class DiagnosticRecord:
    """One time sample of the run diagnostics (energies per unit y-width)."""

    t: float
    K_u: float
    K_v: float
    P: float
    E: float
    rmsv: float
    mass: float
    front_intensity: float
    noise_metric: float
    newton_iters: int = 0
    gmres_iters: int = 0


def energies(state: State, grid: Grid, c: PhysicalConstants):
    """(K_u, K_v, P, E) by midpoint quadrature over cells."""
    area = grid.cell_area
    u_c = dynamics.xface_to_center(state.u)
    w_c = dynamics.zface_to_center(state.w)
    D, th = state.D, state.theta_s
    pi = thermo.exner(D, th, c)
    K_u = 0.5 * float(np.sum(D * (u_c ** 2 + w_c ** 2))) * area
    K_v = 0.5 * float(np.sum(D * state.v ** 2)) * area
    gz = c.g * grid.z_centers[None, :]
    P = float(np.sum(D * (gz + c.cv * pi * th - c.cp * c.Pi0 * th))) * area
    return K_u, K_v, P, K_u + K_v + P


def rmsv(state: State, grid: Grid, mass_weighted: bool = False) -> float:
    """Root mean square of v; area-weighted unless mass weighting is asked for."""
    if mass_weighted:
        return float(np.sqrt(np.sum(state.D * state.v ** 2) / np.sum(state.D)))
    return float(np.sqrt(np.mean(state.v ** 2)))


def mass(state: State, grid: Grid) -> float:
    """Total mass per unit y-width."""
    return float(np.sum(state.D)) * grid.cell_area


def potential_vorticity(state: State, grid: Grid, c: PhysicalConstants) -> np.ndarray:
    """Materially conserved PV at cell corners, (nx, nz+1).

    q = s * (du/dz - dw/dx) + dtheta/dz * (dv/dx + f) - dtheta/dx * dv/dz,
    the out-of-slice component of the slice circulation density.
    """
    dx, dz = grid.dx, grid.dz
    th, v = state.theta_s, state.v
    eta = dynamics.corner_vorticity(state.u, state.w, grid)

    def ddz_corner(q):
        g_face = (q[:, 1:] - q[:, :-1]) / dz          # (nx, nz-1) interior faces
        out = np.empty((grid.nx, grid.nz + 1))
        out[:, 1:-1] = g_face
        out[:, 0] = g_face[:, 0]
        out[:, -1] = g_face[:, -1]
        return 0.5 * (np.roll(out, 1, axis=0) + out)  # x-average to corners

    def ddx_corner(q):
        d = (q - np.roll(q, 1, axis=0)) / dx          # (nx, nz) at x-face, center-z
        out = np.empty((grid.nx, grid.nz + 1))
        out[:, 1:-1] = 0.5 * (d[:, :-1] + d[:, 1:])
        out[:, 0] = d[:, 0]
        out[:, -1] = d[:, -1]
        return out

    return (c.s * eta + ddz_corner(th) * (ddx_corner(v) + c.f)
            - ddx_corner(th) * ddz_corner(v))


def front_intensity(state: State, grid: Grid) -> float:
    """Largest centered x-gradient magnitude of theta_s, K/m."""
    th = state.theta_s
    grad = (np.roll(th, -1, axis=0) - np.roll(th, 1, axis=0)) / (2 * grid.dx)
    return float(np.max(np.abs(grad)))


def noise_metric(state: State, grid: Grid) -> float:
    """Relative size of the second x-difference of v: grid-scale noise gauge."""
    v = state.v
    d2 = np.roll(v, -1, axis=0) - 2 * v + np.roll(v, 1, axis=0)
    return float(np.linalg.norm(d2) / (np.linalg.norm(v) + 1e-12))


def record(state: State, grid: Grid, c: PhysicalConstants,
           mass_weighted_rmsv: bool = False,
           newton_iters: int = 0, gmres_iters: int = 0) -> DiagnosticRecord:
    K_u, K_v, P, E = energies(state, grid, c)
    return DiagnosticRecord(
        t=state.t, K_u=K_u, K_v=K_v, P=P, E=E,
        rmsv=rmsv(state, grid, mass_weighted_rmsv),
        mass=mass(state, grid),
        front_intensity=front_intensity(state, grid),
        noise_metric=noise_metric(state, grid),
        newton_iters=newton_iters, gmres_iters=gmres_iters)

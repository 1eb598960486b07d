import dataclasses
import math

import numpy as np
import pytest

import eadyslice as es
from eadyslice import dynamics, thermo
from eadyslice.dynamics import (advect_scalar, scalar_transport, tendencies,
                                velocity_advection_advective,
                                velocity_advection_vector_invariant)

from conftest import random_admissible_state


def balanced_state(nx=16, nz=16, amplitude=0.0):
    cfg = dataclasses.replace(es.RunConfig(), nx=nx, nz=nz,
                              amplitude=amplitude, breed=False)
    grid = cfg.grid()
    return es.initial_state(cfg, grid), grid, cfg.constants


def test_balanced_state_is_discretely_steady():
    state, grid, c = balanced_state()
    ten = tendencies(state, grid, c)
    assert np.abs(ten.du).max() < 1e-10
    assert np.abs(ten.dw).max() < 1e-10
    assert np.abs(ten.dv).max() < 1e-10
    assert np.abs(ten.dtheta).max() < 1e-12
    assert np.abs(ten.dD).max() < 1e-12


def test_rest_state_tendencies():
    """u = v = w = 0 with hydrostatic density: only the slice source acts."""
    state, grid, c = balanced_state()
    state.u[:] = 0.0
    state.v[:] = 0.0
    ten = tendencies(state, grid, c)
    pi = thermo.exner(state.D, state.theta_s, c)
    np.testing.assert_allclose(ten.dv, c.cp * c.s * (pi - c.Pi0), atol=1e-15)
    np.testing.assert_allclose(ten.dtheta, 0.0, atol=1e-15)


def test_uniform_flow_transports_nothing_x_independent():
    state, grid, c = balanced_state()
    state.u[:] = 3.0
    state.v[:] = 0.0
    ten = tendencies(state, grid, c)
    np.testing.assert_allclose(ten.dtheta, 0.0, atol=1e-13)
    np.testing.assert_allclose(ten.dD, 0.0, atol=1e-13)


def test_mass_tendency_sums_to_zero(constants):
    grid = es.build_grid(12, 10, constants)
    state = random_admissible_state(grid, constants, seed=3, amp=1.0)
    ten = tendencies(state, grid, constants)
    total = abs(np.sum(ten.dD)) / np.max(np.abs(ten.dD))
    assert total < 1e-13


def test_boundary_w_tendency_zero(constants):
    grid = es.build_grid(12, 10, constants)
    state = random_admissible_state(grid, constants, seed=4, amp=1.0)
    for form in ("advective", "vector-invariant"):
        ten = tendencies(state, grid, constants, velocity_form=form)
        assert np.all(ten.dw[:, 0] == 0.0)
        assert np.all(ten.dw[:, -1] == 0.0)


def test_extra_terms_switch_off_with_zero_shear(constants):
    """s = 0 turns the system into a plain 2D slice: v purely advected plus
    Coriolis, theta purely advected."""
    c0 = dataclasses.replace(constants, shear=0.0)
    grid = es.build_grid(12, 10, c0)
    state = random_admissible_state(grid, c0, seed=5, amp=0.5)
    ten = tendencies(state, grid, c0, upwind_order=1)

    Fx = state.u * dynamics.center_to_xface(state.D)
    Fz = np.zeros_like(state.w)
    Fz[:, 1:-1] = state.w[:, 1:-1] * 0.5 * (state.D[:, :-1] + state.D[:, 1:])
    divF = ((dynamics._xp(Fx) - Fx) / grid.dx
            + (Fz[:, 1:] - Fz[:, :-1]) / grid.dz)
    adv_v = scalar_transport(state.v, state, Fx, Fz, divF, grid, 1)
    adv_th = scalar_transport(state.theta_s, state, Fx, Fz, divF, grid, 1)
    u_c = dynamics.xface_to_center(state.u)
    np.testing.assert_allclose(ten.dv, -adv_v - c0.f * u_c, atol=1e-15)
    np.testing.assert_allclose(ten.dtheta, -adv_th, atol=1e-15)


# ---------------------------------------------------------------------------
# advect_scalar
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("order", [1, 2, 3])
def test_advect_constant_field(constants, order):
    grid = es.build_grid(12, 10, constants)
    state = random_admissible_state(grid, constants, seed=6, amp=1.0)
    field = np.full((grid.nx, grid.nz), 7.25)
    out = advect_scalar(field, state.u, state.w, grid, order)
    np.testing.assert_allclose(out, 0.0, atol=1e-12)


def test_advect_step_donor_cell(constants):
    grid = es.build_grid(16, 8, constants)
    u = np.ones((grid.nx, grid.nz))
    w = np.zeros((grid.nx, grid.nz + 1))
    field = np.zeros((grid.nx, grid.nz))
    field[8:, :] = 1.0     # step up at face 8, step down at face 0 (wrap)
    out = advect_scalar(field, u, w, grid, 1)
    # u > 0 donor: tendency (u/dx)*(f[i] - f[i-1]) nonzero only at i = 8, 0
    nonzero = np.where(np.abs(out[:, 0]) > 0)[0]
    np.testing.assert_array_equal(nonzero, [0, 8])
    assert out[8, 0] == pytest.approx(1.0 / grid.dx)


def test_advect_third_order_convergence(constants):
    """Solid-body x-translation of a sine: error drops ~8x per halving."""
    errs = []
    for nx in (32, 64):
        grid = es.build_grid(nx, 8, constants)
        u = np.ones((grid.nx, grid.nz))
        w = np.zeros((grid.nx, grid.nz + 1))
        field = np.sin(math.pi * grid.x_centers / constants.L)[:, None] * np.ones(grid.nz)
        out = advect_scalar(field, u, w, grid, 3)
        exact = (math.pi / constants.L) * np.cos(math.pi * grid.x_centers / constants.L)[:, None]
        errs.append(np.max(np.abs(out - exact)))
    assert errs[0] / errs[1] > 6.0


# ---------------------------------------------------------------------------
# flux-consistent transport
# ---------------------------------------------------------------------------

def _mass_fluxes(state, grid):
    Fx = state.u * dynamics.center_to_xface(state.D)
    Fz = np.zeros_like(state.w)
    Fz[:, 1:-1] = state.w[:, 1:-1] * 0.5 * (state.D[:, :-1] + state.D[:, 1:])
    divF = ((dynamics._xp(Fx) - Fx) / grid.dx
            + (Fz[:, 1:] - Fz[:, :-1]) / grid.dz)
    return Fx, Fz, divF


@pytest.mark.parametrize("order", [1, 2, 3])
def test_transport_constant_exactly_zero(constants, order):
    grid = es.build_grid(12, 10, constants)
    state = random_admissible_state(grid, constants, seed=7, amp=1.0)
    field = np.full((grid.nx, grid.nz), 3.5)
    Fx, Fz, divF = _mass_fluxes(state, grid)
    out = scalar_transport(field, state, Fx, Fz, divF, grid, order)
    np.testing.assert_allclose(out, 0.0, atol=1e-13)


@pytest.mark.parametrize("order", [1, 3])
def test_transport_conserves_mass_weighted_integral(constants, order):
    grid = es.build_grid(12, 10, constants)
    state = random_admissible_state(grid, constants, seed=8, amp=1.0)
    rng = np.random.default_rng(9)
    field = 1.0 + 0.3 * rng.standard_normal((grid.nx, grid.nz))
    Fx, Fz, divF = _mass_fluxes(state, grid)
    adv = scalar_transport(field, state, Fx, Fz, divF, grid, order)
    # d(D f)/dt = D*(-adv) + f*(-divF) must integrate to zero
    total = np.sum(state.D * (-adv) + field * (-divF))
    scale = np.max(np.abs(state.D * adv))
    assert abs(total) / scale < 1e-12


def test_transport_matches_advective_on_smooth_fields(constants):
    """Flux-consistent and advective forms agree at second order."""
    errs = []
    for n in (16, 32):
        grid = es.build_grid(n, n, constants)
        X = grid.x_centers[:, None] / constants.L
        Z = grid.z_centers[None, :] / constants.H
        state = es.State(
            t=0.0,
            u=1.0 + 0.5 * np.sin(math.pi * grid.x_faces / constants.L)[:, None]
              * np.sin(math.pi * grid.z_centers / constants.H)[None, :],
            w=np.zeros((n, n + 1)),
            v=np.zeros((n, n)),
            theta_s=np.full((n, n), 300.0),
            D=1.0 + 0.2 * np.cos(math.pi * X) * np.sin(math.pi * Z))
        state.w[:, 1:-1] = 0.1 * np.sin(math.pi * grid.x_centers / constants.L)[:, None] \
            * np.sin(math.pi * grid.z_faces[1:-1] / constants.H)[None, :]
        field = 2.0 + np.cos(math.pi * X) * np.cos(math.pi * Z)
        Fx, Fz, divF = _mass_fluxes(state, grid)
        a = scalar_transport(field, state, Fx, Fz, divF, grid, 2)
        b = advect_scalar(field, state.u, state.w, grid, 2)
        errs.append(np.max(np.abs(a - b)))
    assert errs[0] / errs[1] > 3.0


# ---------------------------------------------------------------------------
# momentum advection
# ---------------------------------------------------------------------------

def test_advective_uniform_flow_zero(constants):
    grid = es.build_grid(12, 10, constants)
    state = random_admissible_state(grid, constants, seed=10, amp=0.0)
    state.u[:] = 4.0
    adv_u, adv_w = velocity_advection_advective(state, grid)
    np.testing.assert_allclose(adv_u, 0.0, atol=1e-13)
    np.testing.assert_allclose(adv_w, 0.0, atol=1e-13)


def test_advective_pure_shear_zero(constants):
    grid = es.build_grid(12, 10, constants)
    state = random_admissible_state(grid, constants, seed=11, amp=0.0)
    state.u[:] = np.linspace(-3.0, 3.0, grid.nz)[None, :]
    adv_u, adv_w = velocity_advection_advective(state, grid)
    np.testing.assert_allclose(adv_u, 0.0, atol=1e-13)
    np.testing.assert_allclose(adv_w, 0.0, atol=1e-13)


def test_advective_burgers_profile(constants):
    """u(x) smooth, w = 0: contribution approximates u u_x at first order."""
    errs = []
    for nx in (64, 128):
        grid = es.build_grid(nx, 8, constants)
        k = math.pi / constants.L
        state = random_admissible_state(grid, constants, seed=12, amp=0.0)
        state.u = (10.0 + 3.0 * np.sin(k * grid.x_faces))[:, None] * np.ones(grid.nz)
        state.w[:] = 0.0
        adv_u, _ = velocity_advection_advective(state, grid)
        u_exact = 10.0 + 3.0 * np.sin(k * grid.x_faces)
        exact = (u_exact * 3.0 * k * np.cos(k * grid.x_faces))[:, None]
        errs.append(np.max(np.abs(adv_u - exact)))
    # first-order upwind: error halves when dx halves
    assert errs[0] / errs[1] > 1.7


def test_vector_invariant_uniform_flow_zero(constants):
    grid = es.build_grid(12, 10, constants)
    state = random_admissible_state(grid, constants, seed=13, amp=0.0)
    state.u[:] = 2.5
    adv_u, adv_w = velocity_advection_vector_invariant(state, grid)
    np.testing.assert_allclose(adv_u, 0.0, atol=1e-13)
    np.testing.assert_allclose(adv_w, 0.0, atol=1e-13)


def test_vector_invariant_irrotational(constants):
    """u = grad(phi) with phi = cos(pi x / L): rotational part vanishes and
    the total reduces to the kinetic-energy gradient."""
    grid = es.build_grid(48, 8, constants)
    k = math.pi / constants.L
    state = random_admissible_state(grid, constants, seed=14, amp=0.0)
    state.u = (-k * np.sin(k * grid.x_faces))[:, None] * np.ones(grid.nz)
    state.w[:] = 0.0
    eta = dynamics.corner_vorticity(state.u, state.w, grid)
    np.testing.assert_allclose(eta, 0.0, atol=1e-18)
    adv_u, adv_w = velocity_advection_vector_invariant(state, grid)
    u_c = dynamics.xface_to_center(state.u)
    K = 0.5 * u_c ** 2
    dKdx = (K - dynamics._xm(K)) / grid.dx
    np.testing.assert_allclose(adv_u, dKdx, atol=1e-18)
    np.testing.assert_allclose(adv_w, 0.0, atol=1e-18)


def test_forms_agree_on_smooth_divergence_free_field(constants):
    """Advective and vector-invariant forms agree at O(dx^2 + dz^2)."""
    errs = []
    for n in (16, 32):
        grid = es.build_grid(n, n, constants)
        kx = math.pi / constants.L
        kz = math.pi / constants.H
        # streamfunction psi = sin(kx x) sin(kz z): u = dpsi/dz, w = -dpsi/dx
        state = random_admissible_state(grid, constants, seed=15, amp=0.0)
        state.u = (np.sin(kx * grid.x_faces)[:, None]
                   * (kz * np.cos(kz * grid.z_centers))[None, :]) * 1e3
        state.w = np.zeros((n, n + 1))
        state.w[:, :] = (-(kx * np.cos(kx * grid.x_centers))[:, None]
                         * np.sin(kz * grid.z_faces)[None, :]) * 1e3
        state.w[:, 0] = 0.0
        state.w[:, -1] = 0.0
        a_u, a_w = velocity_advection_advective(state, grid, centered=True)
        b_u, b_w = velocity_advection_vector_invariant(state, grid)
        scale = np.max(np.abs(a_u)) + np.max(np.abs(a_w))
        errs.append((np.max(np.abs(a_u - b_u)) + np.max(np.abs(a_w - b_w))) / scale)
    assert errs[0] / errs[1] > 3.0

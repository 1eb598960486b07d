import dataclasses
import math

import numpy as np
import pytest

import eadyslice as es
from eadyslice import diagnostics, driver, timestep
from eadyslice.timestep import (CFLError, ColumnPreconditioner, NewtonError,
                                SolverConfig, gmres, pack, unpack,
                                step_implicit_midpoint, step_ssprk3)

from conftest import random_admissible_state


def smooth_config(nx=16, nz=16, **kw):
    return dataclasses.replace(es.RunConfig(), nx=nx, nz=nz, breed=False, **kw)


def test_pack_unpack_round_trip(constants):
    grid = es.build_grid(10, 8, constants)
    state = random_admissible_state(grid, constants, seed=20, amp=1.0)
    state.t = 123.0
    back = unpack(pack(state), grid, state.t)
    for name in ("u", "w", "v", "theta_s", "D"):
        np.testing.assert_array_equal(getattr(back, name), getattr(state, name))
    assert back.t == state.t


def test_gmres_solves_linear_system():
    rng = np.random.default_rng(1)
    n = 40
    A = np.eye(n) + 0.3 * rng.standard_normal((n, n))
    b = rng.standard_normal(n)
    x, nmv, converged = gmres(lambda p: A @ p, b, lambda p: p,
                              rtol=1e-12, restart=n + 1, maxiter=400)
    assert converged
    assert np.linalg.norm(A @ x - b) < 1e-10 * np.linalg.norm(b)


def test_gmres_uses_preconditioner():
    rng = np.random.default_rng(2)
    n = 60
    d = np.linspace(1.0, 500.0, n)
    A = np.diag(d) + 0.5 * rng.standard_normal((n, n))
    b = rng.standard_normal(n)
    _, nmv_plain, _ = gmres(lambda p: A @ p, b, lambda p: p,
                            rtol=1e-10, restart=30, maxiter=2000)
    Minv = np.linalg.inv(np.diag(d))
    x, nmv_prec, conv = gmres(lambda p: A @ p, b, lambda p: Minv @ p,
                              rtol=1e-10, restart=30, maxiter=2000)
    assert conv and nmv_prec < nmv_plain
    assert np.linalg.norm(A @ x - b) < 1e-8 * np.linalg.norm(b)


# ---------------------------------------------------------------------------
# SSPRK3
# ---------------------------------------------------------------------------

def test_ssprk3_steady_state_unchanged():
    cfg = smooth_config(amplitude=0.0)
    grid = cfg.grid()
    state = es.initial_state(cfg, grid)
    out = step_ssprk3(state, 0.5, grid, cfg.constants, cfg)
    assert np.abs(out.u - state.u).max() < 1e-12
    assert np.abs(out.w - state.w).max() < 1e-10
    assert np.abs(out.theta_s - state.theta_s).max() < 1e-10


def test_ssprk3_cfl_guard():
    """dt = 300 s is two orders beyond the acoustic bound at dz = 333 m."""
    cfg = es.RunConfig()
    grid = cfg.grid()
    state = es.initial_state(cfg, grid)
    with pytest.raises(CFLError):
        step_ssprk3(state, 300.0, grid, cfg.constants, cfg)


def test_ssprk3_third_order_in_dt():
    cfg = smooth_config()
    grid = cfg.grid()
    c = cfg.constants
    state0 = es.initial_state(cfg, grid)
    T = 8.0

    def advance(dt):
        s = state0.copy()
        for _ in range(int(round(T / dt))):
            s = step_ssprk3(s, dt, grid, c, cfg)
        return pack(s)

    ref = advance(0.125)
    e1 = np.linalg.norm(advance(1.0) - ref)
    e2 = np.linalg.norm(advance(0.5) - ref)
    assert e1 / e2 > 6.0


# ---------------------------------------------------------------------------
# implicit midpoint
# ---------------------------------------------------------------------------

def test_midpoint_steady_state_one_iteration():
    cfg = smooth_config(amplitude=0.0)
    grid = cfg.grid()
    state = es.initial_state(cfg, grid)
    out, stats = step_implicit_midpoint(state, 300.0, grid, cfg.constants, cfg)
    assert stats.converged
    assert stats.newton_iterations == 1
    assert np.abs(out.u - state.u).max() == 0.0


def test_midpoint_conserves_energy_of_linear_skew_system():
    """Midpoint rule on z' = A (z - z0) with A skew in the solver's weighted
    inner product: the quadratic energy |W (z - z0)|^2 is exactly conserved
    by the scheme, so the discrete solution holds it to solver round-off
    over 1000 steps."""
    cfg = smooth_config(nx=6, nz=6,
                        newton_rel_tol=1e-10, newton_abs_tol=1e-15,
                        linear_rel_tol=1e-12, linear_max_iters=5000,
                        linear_restart=200)
    grid = cfg.grid()
    c = cfg.constants
    state = es.initial_state(cfg, grid)
    z0 = pack(state)
    n = z0.size
    w = timestep.residual_weights(grid, c)
    rng = np.random.default_rng(3)
    B = rng.standard_normal((n, n))
    S0 = (B - B.T) / math.sqrt(n)        # skew, spectral radius O(1)
    # A = W^-1 S0 W makes W^2 A skew, so E = |W(z-z0)|^2 is invariant
    rhs = lambda z: (S0 @ ((z - z0) * w)) / w
    delta = 1e-2 * rng.standard_normal(n) / w
    s = unpack(z0 + delta, grid, 0.0)
    E0 = np.sum(((pack(s) - z0) * w) ** 2)
    for _ in range(1000):
        s, stats = step_implicit_midpoint(s, 0.05, grid, c, cfg, rhs=rhs)
        assert stats.converged
    E1 = np.sum(((pack(s) - z0) * w) ** 2)
    assert abs(E1 - E0) / E0 < 1e-10


def test_midpoint_second_order_in_dt():
    cfg = smooth_config()
    grid = cfg.grid()
    c = cfg.constants
    state0 = es.initial_state(cfg, grid)
    T = 3600.0

    def advance(dt):
        s = state0.copy()
        for _ in range(int(round(T / dt))):
            s, _ = step_implicit_midpoint(s, dt, grid, c, cfg)
        return pack(s)

    ref = advance(T / 96)
    e1 = np.linalg.norm(advance(600.0) - ref)
    e2 = np.linalg.norm(advance(300.0) - ref)
    assert e1 / e2 > 3.0


def test_midpoint_time_symmetry():
    cfg = smooth_config(newton_rel_tol=1e-10)
    grid = cfg.grid()
    c = cfg.constants
    state = es.initial_state(cfg, grid)
    fwd, _ = step_implicit_midpoint(state, 300.0, grid, c, cfg)
    back, _ = step_implicit_midpoint(fwd, -300.0, grid, c, cfg)
    z0, zb = pack(state), pack(back)
    w = timestep.residual_weights(grid, c)
    assert np.linalg.norm((zb - z0) * w) < 1e-6


def test_midpoint_mass_conservation_per_step():
    cfg = smooth_config()
    grid = cfg.grid()
    c = cfg.constants
    state = es.initial_state(cfg, grid)
    m0 = diagnostics.mass(state, grid)
    out, _ = step_implicit_midpoint(state, 300.0, grid, c, cfg)
    assert abs(diagnostics.mass(out, grid) - m0) / m0 < 1e-11


def test_midpoint_rejects_inadmissible_iterates():
    cfg = smooth_config(newton_max_iters=2)
    grid = cfg.grid()
    state = es.initial_state(cfg, grid)
    with pytest.raises(NewtonError) as err:
        step_implicit_midpoint(state, 1e7, grid, cfg.constants, cfg)
    assert err.value.stats.newton_iterations >= 1


# ---------------------------------------------------------------------------
# column preconditioner
# ---------------------------------------------------------------------------

def test_preconditioner_identity_at_zero_dt():
    cfg = smooth_config()
    grid = cfg.grid()
    state = es.initial_state(cfg, grid)
    M = ColumnPreconditioner(state, grid, cfg.constants, 0.0)
    z = np.random.default_rng(4).standard_normal(pack(state).size)
    np.testing.assert_array_equal(M.apply(z), z)


def test_preconditioner_linearity():
    cfg = smooth_config()
    grid = cfg.grid()
    state = es.initial_state(cfg, grid)
    M = ColumnPreconditioner(state, grid, cfg.constants, 300.0)
    rng = np.random.default_rng(5)
    x = rng.standard_normal(pack(state).size)
    y = rng.standard_normal(x.size)
    lhs = M.apply(2.0 * x - 3.0 * y)
    rhs = 2.0 * M.apply(x) - 3.0 * M.apply(y)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-13)


def test_preconditioner_reduces_gmres_iterations():
    cfg = smooth_config(nx=16, nz=30, linear_max_iters=3000, linear_restart=50)
    grid = cfg.grid()
    c = cfg.constants
    state = es.initial_state(cfg, grid)
    for _ in range(10):                      # develop some flow
        state, _ = step_implicit_midpoint(state, 300.0, grid, c, cfg)

    counts = {}
    for name in ("column-block", "none"):
        cfg_i = dataclasses.replace(cfg, preconditioner=name)
        _, stats = step_implicit_midpoint(state.copy(), 300.0, grid, c, cfg_i)
        counts[name] = stats.linear_iterations_total
    assert counts["column-block"] < counts["none"]

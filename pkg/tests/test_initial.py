import dataclasses
import math

import numpy as np
import pytest

import eadyslice as es
from eadyslice import driver, initial, thermo
from eadyslice.initial import BreedingError


def test_background_theta_values(constants):
    c = constants
    assert initial.background_theta(c.H / 2, c) == pytest.approx(300.0, rel=1e-15)
    assert initial.background_theta(c.H, c) == pytest.approx(
        300.0 * math.exp(0.0125), rel=1e-14)                 # 303.7735...
    assert initial.background_theta(0.0, c) == pytest.approx(
        300.0 * math.exp(-0.0125), rel=1e-14)                # 296.2733...


def test_mode_constant_value():
    # frozen from a 40-digit arbitrary-precision evaluation of the closed form
    assert initial.mode_constant(0.5) == pytest.approx(0.2791179454590939, rel=1e-12)


def test_mode_constant_small_bu_finite():
    n = initial.mode_constant(1e-6)
    assert math.isfinite(n)
    # limit is 1/(2 sqrt(3)); loose check only, cancellation costs digits
    assert n == pytest.approx(1.0 / (2.0 * math.sqrt(3.0)), rel=1e-2)


def test_mode_constant_continuity():
    assert abs(initial.mode_constant(0.5) - initial.mode_constant(0.5 + 1e-8)) < 1e-6


def test_mode_constant_rejects_nonpositive():
    with pytest.raises(ValueError):
        initial.mode_constant(0.0)


def test_perturbed_theta_zero_amplitude(constants):
    grid = es.build_grid(12, 10, constants)
    theta = initial.perturbed_theta(grid, 0.0, constants)
    expected = initial.background_theta(grid.z_centers, constants)
    np.testing.assert_array_equal(theta, np.broadcast_to(expected, theta.shape))


def test_perturbation_x_mean_vanishes(constants):
    grid = es.build_grid(24, 10, constants)
    theta = initial.perturbed_theta(grid, -7.5, constants)
    pert = theta - initial.background_theta(grid.z_centers, constants)[None, :]
    np.testing.assert_allclose(np.mean(pert, axis=0), 0.0, atol=1e-12)


def test_perturbation_amplitude_scale(constants):
    c = constants
    # theta0*|a|*N/g = 300 * 7.5 * 5e-3 / 10 = 1.125 K
    assert c.theta0 * 7.5 * c.N / c.g == pytest.approx(1.125, rel=1e-12)
    grid = es.build_grid(64, 32, c)
    theta = initial.perturbed_theta(grid, -7.5, c)
    pert = theta - initial.background_theta(grid.z_centers, c)[None, :]
    # the mode bracket is O(0.14) at Bu = 0.5, so the field peak is below the scale
    assert np.max(np.abs(pert)) < 1.125
    assert np.max(np.abs(pert)) > 0.1


def test_perturbation_bracket_symmetry(constants):
    """The z-odd part of the perturbation is exactly the sinh*cos term and the
    z-even part exactly the cosh*sin term (cell centers mirror about H/2)."""
    c = constants
    grid = es.build_grid(16, 12, c)
    theta = initial.perturbed_theta(grid, -7.5, c)
    pert = theta - initial.background_theta(grid.z_centers, c)[None, :]
    odd = 0.5 * (pert - pert[:, ::-1])
    even = 0.5 * (pert + pert[:, ::-1])

    Bu = c.Bu
    n = initial.mode_constant(Bu)
    Z = Bu * (grid.z_centers / c.H - 0.5)
    phase = math.pi * grid.x_centers / c.L
    amp = c.theta0 * (-7.5) * c.N / c.g
    coth = 1.0 / math.tanh(Bu / 2)
    sinh_cos = -amp * (1.0 - (Bu / 2) * coth) * np.outer(np.cos(phase), np.sinh(Z))
    cosh_sin = -amp * n * Bu * np.outer(np.sin(phase), np.cosh(Z))
    np.testing.assert_allclose(odd, sinh_cos, atol=1e-12)
    np.testing.assert_allclose(even, cosh_sin, atol=1e-12)


def test_hydrostatic_residual_converged(constants):
    c = constants
    grid = es.build_grid(12, 20, c)
    theta = initial.perturbed_theta(grid, 0.0, c)
    D = initial.hydrostatic_density(theta, grid, c)
    pi = thermo.exner(D, theta, c)
    thf = 0.5 * (theta[:, :-1] + theta[:, 1:])
    res = c.cp * thf * (pi[:, 1:] - pi[:, :-1]) / grid.dz + c.g
    assert np.max(np.abs(res)) < 1e-9 * c.g


def test_hydrostatic_exner_decreases_with_height(constants):
    c = constants
    grid = es.build_grid(12, 20, c)
    theta = initial.perturbed_theta(grid, -7.5, c)
    pi = thermo.exner(initial.hydrostatic_density(theta, grid, c), theta, c)
    assert np.all(np.diff(pi, axis=1) < 0)


def test_hydrostatic_matches_analytic_profile_second_order(constants):
    """Discrete column vs the closed-form background profile: O(dz^2)."""
    c = constants
    errs = []
    for nz in (20, 40):
        grid = es.build_grid(4, nz, c)
        theta = initial.perturbed_theta(grid, 0.0, c)
        D = initial.hydrostatic_density(theta, grid, c)
        pi = thermo.exner(D, theta, c)
        exact = initial.background_exner(grid.z_centers, c)
        errs.append(np.max(np.abs(pi[0] - exact)))
    assert errs[0] < 1e-4
    assert errs[0] / errs[1] > 3.0


def test_hydrostatic_newton_superlinear(constants):
    c = constants
    grid = es.build_grid(8, 16, c)
    theta = initial.perturbed_theta(grid, -7.5, c)
    _, history = initial.hydrostatic_density(theta, grid, c, return_history=True)
    assert len(history) >= 3
    drops = [history[i + 1] / history[i] for i in range(len(history) - 1)
             if history[i] > 1e-11]
    # successive contraction factors must shrink (superlinear convergence)
    assert all(drops[i + 1] < drops[i] for i in range(len(drops) - 1))


def test_hydrostatic_error_carries_column(constants):
    c = constants
    grid = es.build_grid(6, 8, c)
    theta = initial.perturbed_theta(grid, 0.0, c)
    theta[3, 4] = -1.0
    with pytest.raises(initial.HydrostaticSolveError) as err:
        initial.hydrostatic_density(theta, grid, c)
    assert err.value.column == 3


def test_geostrophic_v_zero_for_x_independent(constants):
    c = constants
    grid = es.build_grid(12, 10, c)
    theta = initial.perturbed_theta(grid, 0.0, c)
    D = initial.hydrostatic_density(theta, grid, c)
    np.testing.assert_allclose(initial.geostrophic_v(theta, D, grid, c), 0.0,
                               atol=1e-12)


def test_geostrophic_v_zero_x_mean(constants):
    c = constants
    grid = es.build_grid(24, 12, c)
    theta = initial.perturbed_theta(grid, -7.5, c)
    D = initial.hydrostatic_density(theta, grid, c)
    v = initial.geostrophic_v(theta, D, grid, c)
    level_means = np.mean(v, axis=0)
    assert np.max(np.abs(level_means)) < 1e-4 * np.max(np.abs(v))


def test_geostrophic_v_sign(constants):
    """Where Pi increases eastward, v > 0 (f > 0)."""
    c = constants
    grid = es.build_grid(24, 12, c)
    theta = initial.perturbed_theta(grid, -7.5, c)
    D = initial.hydrostatic_density(theta, grid, c)
    pi = thermo.exner(D, theta, c)
    v = initial.geostrophic_v(theta, D, grid, c)
    dpidx = (np.roll(pi, -1, axis=0) - np.roll(pi, 1, axis=0)) / (2 * grid.dx)
    mask = np.abs(dpidx) > 0.1 * np.max(np.abs(dpidx))
    assert np.all(np.sign(v[mask]) == np.sign(dpidx[mask]))


def test_initial_u_structure(constants):
    c = constants
    grid = es.build_grid(12, 30, c)
    theta = initial.perturbed_theta(grid, 0.0, c)
    D = initial.hydrostatic_density(theta, grid, c)
    u = initial.initial_u(theta, D, grid, c)
    pi = thermo.exner(D, theta, c)
    # cp*s/f = -30.135 m/s per unit (Pi - Pi0)
    assert c.cp * c.s / c.f == pytest.approx(-30.135, rel=1e-12)
    np.testing.assert_allclose(u, (c.cp * c.s / c.f) * (pi - c.Pi0), atol=1e-12)
    # vertically sheared, sign flip where Pi crosses Pi0
    assert u[0, 0] < 0 < u[0, -1]
    assert np.all(np.diff(u, axis=1) > 0)


def test_breed_errors_without_perturbation():
    cfg = dataclasses.replace(es.RunConfig(), nx=8, nz=8, amplitude=0.0,
                              breed_max_days=0.01)
    grid = cfg.grid()
    state = es.initial_state(cfg, grid)
    step = driver.make_stepper(cfg, grid)
    with pytest.raises(BreedingError):
        initial.breed(state, cfg, lambda s: step(s)[0])


def test_breed_postcondition():
    cfg = dataclasses.replace(es.RunConfig(), nx=8, nz=8, dt=900.0)
    grid = cfg.grid()
    state = es.initial_state(cfg, grid)
    v0 = np.max(np.abs(state.v))
    cfg = dataclasses.replace(cfg, breed_vmax=v0 * 1.02)
    step = driver.make_stepper(cfg, grid)
    state, t_breed = initial.breed(state, cfg, lambda s: step(s)[0])
    assert state.t == 0.0
    assert t_breed > 0.0
    assert np.max(np.abs(state.v)) >= cfg.breed_vmax

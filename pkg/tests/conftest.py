import dataclasses

import numpy as np
import pytest

import eadyslice as es


@pytest.fixture
def constants():
    return es.default_constants()


@pytest.fixture
def control_config():
    return es.RunConfig()


@pytest.fixture
def small_config():
    """Coarse grid for cheap solver exercises."""
    return dataclasses.replace(es.RunConfig(), nx=8, nz=8)


def random_admissible_state(grid, c, seed=0, amp=0.1):
    """A positive, boundary-respecting state with smooth-ish random fields."""
    rng = np.random.default_rng(seed)
    nx, nz = grid.nx, grid.nz
    u = amp * rng.standard_normal((nx, nz))
    w = np.zeros((nx, nz + 1))
    w[:, 1:-1] = amp * rng.standard_normal((nx, nz - 1))
    v = amp * rng.standard_normal((nx, nz))
    theta = 300.0 + 5.0 * rng.standard_normal((nx, nz))
    D = 0.9 + 0.1 * rng.standard_normal((nx, nz))
    return es.State(t=0.0, u=u, w=w, v=v, theta_s=theta, D=D)

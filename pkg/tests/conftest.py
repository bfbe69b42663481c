from __future__ import annotations

import pytest

from swlab.continuum import solve_stationary
from swlab.semiclassical import semiclassical_sweep

SWEEP_H = (0.05, 0.04, 0.03, 0.02)


@pytest.fixture(scope="session")
def sweep():
    """Default desk-scale sweep: V0 = 1, kL = pi, N = 8."""
    return {p.h: p for p in semiclassical_sweep(SWEEP_H)}


@pytest.fixture(scope="session")
def one_mode(sweep):
    """Assembled one-mode continuum solutions, keyed by h."""
    return {
        h: solve_stationary(p.model, basis=p.basis, params=p.params)
        for h, p in sweep.items()
    }

from __future__ import annotations

import math

import numpy as np
import pytest

from swlab.anticontinuous import SolutionSet
from swlab.continuum import (
    NonContractionError,
    WindowError,
    assemble_psi,
    continuum_residual,
    fixed_point_perp,
    ladder_translation_check,
    lipschitz_constant,
    r4_diagnostic,
    solve_stationary,
)
from swlab.semiclassical import ContinuumModel, bloch_function


def unit_c(basis, n=0):
    c = np.zeros(len(basis.indices))
    c[basis.column(n)] = 1.0
    return c


def test_zero_forcing_gives_zero(sweep):
    p = sweep[0.04]
    free = ContinuumModel(h=0.04)
    res = fixed_point_perp(unit_c(p.basis), free, p.basis, p.params.Lambda1)
    assert np.all(res.psi_perp == 0)


def test_fixed_point_properties(one_mode):
    for h, sol in one_mode.items():
        perp = sol.perp
        assert perp.converged
        assert perp.contraction_factor < 1
        assert perp.leakage < 1e-8
        assert np.max(np.abs(sol.basis.coefficients(sol.psi_perp))) < 1e-8
        ratios = perp.displacement_ratios
        assert all(r < 1 for r in ratios[:3])
    norms = [sol.perp_H1_norm / math.sqrt(h) for h, sol in one_mode.items()]
    assert max(norms) / min(norms) < 3


def test_delta0_precondition(sweep):
    p = sweep[0.05]
    with pytest.raises(ValueError):
        fixed_point_perp(3 * unit_c(p.basis), p.model, p.basis, p.params.Lambda1)


def test_non_contraction_detected(sweep):
    p = sweep[0.05]
    strong = ContinuumModel(h=0.05, F=0.0, eta=40.0)
    with pytest.raises(NonContractionError):
        fixed_point_perp(unit_c(p.basis), strong, p.basis, p.params.Lambda1, max_iter=30)


def test_lipschitz_in_c(one_mode):
    sol = one_mode[0.04]
    K = lipschitz_constant(sol.c, sol.model, sol.basis, sol.lam, n_samples=2)
    assert math.isfinite(K) and K > 0


def test_assemble(sweep, one_mode):
    basis = sweep[0.05].basis
    zero = np.zeros(basis.grid.n_points)
    assert np.array_equal(assemble_psi(unit_c(basis), zero, basis), basis.u(0))
    for sol in one_mode.values():
        assert sol.pythagoras_defect() < 1e-8


def test_psi1_lp_bounds(sweep):
    ratios4, ratiosinf = [], []
    for h, p in sweep.items():
        c = unit_c(p.basis) + 0.5 * unit_c(p.basis, 1)
        psi1 = p.basis.synthesize(c)
        g = p.basis.grid
        l4 = (np.sum(psi1**4) * g.spacing) ** 0.25
        ratios4.append(l4 / (h ** (-1 / 8) * np.sum(np.abs(c))))
        ratiosinf.append(np.max(np.abs(psi1)) / (h ** (-1 / 4) * np.sum(np.abs(c))))
    assert max(ratios4) / min(ratios4) < 2 and max(ratiosinf) / min(ratiosinf) < 2


def test_linear_eigenpair_residual(sweep):
    p = sweep[0.03]
    grid = p.basis.grid
    E, phi = bloch_function(p.model, 0.0, 0, grid.x)
    free = ContinuumModel(h=0.03)
    assert continuum_residual(phi.real, E, free, grid) < 1e-8


def test_end_to_end_residual(one_mode):
    hs = sorted(one_mode, reverse=True)
    res = [one_mode[h].residual_L2 for h in hs]
    assert res[-1] < 1e-2
    assert all(b < a for a, b in zip(res, res[1:]))
    for sol in one_mode.values():
        assert sol.residual_L2 <= sol.residual_mu * (1 + 1e-12)


def test_two_mode_solution(sweep):
    p = sweep[0.02]
    sol = solve_stationary(p.model, SolutionSet(0, (0, 1)), p.basis, p.params)
    assert sol.residual_L2 < 1e-2
    assert abs(sol.lattice.norm - 1) < 1e-13


def test_ladder_translation(one_mode, sweep):
    sol = one_mode[0.02]
    check = ladder_translation_check(sol.psi, sol.lam, sol.model, sol.basis)
    assert 0.5 <= check.ratio <= 2
    assert ladder_translation_check(sol.psi, sol.lam, sol.model, sol.basis, shift=0).ratio == 1.0
    linear = ContinuumModel(h=0.02, F=sol.model.F, eta=sol.model.eta, W_kind="linear")
    exact = ladder_translation_check(sol.psi, sol.lam, linear, sol.basis)
    assert abs(exact.shifted - exact.original) < 1e-10
    with pytest.raises(WindowError):
        ladder_translation_check(np.roll(sol.psi, 6 * sol.basis.n_cell), sol.lam, sol.model, sol.basis)


def test_r4_diagnostic(sweep, one_mode):
    p = sweep[0.03]
    zero = np.zeros(p.basis.grid.n_points)
    rep = r4_diagnostic(unit_c(p.basis), zero, p.basis)
    overlaps = p.basis.coefficients(p.basis.u(0) ** 3)
    assert np.allclose(rep.r4, overlaps - p.params.C1 * unit_c(p.basis), atol=1e-15)
    off = np.abs(np.delete(rep.r4, p.basis.column(0)))
    assert off.max() < 1e-6
    sol = one_mode[0.03]
    only_perp = r4_diagnostic(np.zeros_like(sol.c), sol.psi_perp, sol.basis)
    assert np.allclose(only_perp.r4, sol.basis.coefficients(sol.psi_perp**3))
    assert only_perp.terms[0] == max(only_perp.terms)
    Ks = [r4_diagnostic(s.c, s.psi_perp, s.basis).K_min for s in one_mode.values()]
    assert max(Ks) / min(Ks) < 10

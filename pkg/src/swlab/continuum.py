"""Continuum stationary states ``psi = sum_n c_n u_n + psi_perp``.

Given lattice coefficients ``c`` the orthogonal part solves

    psi_perp = A^{-1} Pi_perp (-eta psi^3 - F W psi_1),
    A = Pi_perp (H_B + F W - lambda) Pi_perp ,

which is iterated to a fixed point. ``A`` is positive on the range of
``Pi_perp`` (``lambda`` sits near the first band, below the gap), so each
application is a preconditioned conjugate-gradient solve followed by a
re-projection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .anticontinuous import SolutionSet, amplitudes
from .lattice import LATTICE_PADDING, LatticeSolution, continue_in_beta, continue_normalized
from .semiclassical import (
    ContinuumModel,
    EffectiveParameters,
    Grid1D,
    LocalizedBasis,
    build_basis,
    effective_parameters,
)

DEFAULT_DELTA0 = 2.0
FIXED_POINT_TOL = 1e-10
FIXED_POINT_MAX_ITER = 100
CG_RTOL = 1e-13


class NonContractionError(RuntimeError):
    """Measured contraction factor of the ``psi_perp`` map is >= 1."""


class ResolventError(RuntimeError):
    """The conjugate-gradient solve on the orthogonal complement failed."""


class WindowError(ValueError):
    """A solution reaches into the region where ``W`` is tapered."""


# --------------------------------------------------------------------------
# resolvent on the orthogonal complement
# --------------------------------------------------------------------------


class PerpResolvent:
    """Applies ``(Pi_perp (H_B + F W - lambda) Pi_perp)^{-1}`` on ``Pi_perp L^2``."""

    def __init__(self, basis: LocalizedBasis, model: ContinuumModel, lam: float):
        self.basis = basis
        self.model = model
        self.lam = float(lam)
        grid = basis.grid
        n = grid.n_points
        self._shifted = basis.V + model.F * basis.W - self.lam
        kinetic = model.h**2 * grid.wavenumbers**2
        precond = 1.0 / (kinetic + 0.5 * model.V0 + max(1e-3, 0.5 * model.V0))
        self._op = LinearOperator((n, n), matvec=self._apply, dtype=float)
        self._pre = LinearOperator(
            (n, n),
            matvec=lambda v: basis.project_perp(np.fft.ifft(precond * np.fft.fft(basis.project_perp(v))).real),
            dtype=float,
        )
        self.cg_iterations: list[int] = []

    def _apply(self, v):
        v = self.basis.project_perp(np.ravel(v))
        out = self.basis.grid.kinetic(v, self.model.h) + self._shifted * v
        return self.basis.project_perp(out)

    def solve(self, rhs) -> np.ndarray:
        rhs = self.basis.project_perp(rhs)
        if not np.any(rhs):
            self.cg_iterations.append(0)
            return np.zeros_like(rhs)
        count = [0]

        def tick(_):
            count[0] += 1

        sol, info = cg(self._op, rhs, rtol=CG_RTOL, atol=0.0, maxiter=5000, M=self._pre, callback=tick)
        if info != 0:
            raise ResolventError(f"conjugate gradients stopped with info = {info}")
        self.cg_iterations.append(count[0])
        return self.basis.project_perp(sol)


# --------------------------------------------------------------------------
# fixed point
# --------------------------------------------------------------------------


@dataclass
class PerpResult:
    psi_perp: np.ndarray
    iterations: int
    displacements: list
    contraction_factor: float
    probe_factor: float
    leakage: float
    converged: bool
    cg_iterations: list = field(default_factory=list)

    @property
    def displacement_ratios(self) -> list:
        d = self.displacements
        return [b / a for a, b in zip(d, d[1:]) if a > 0]


def _perp_map(c, psi1, psi_perp, model, basis, resolvent, psi1_tilt):
    psi = psi1 + psi_perp
    rhs = -model.eta * psi**3 - psi1_tilt
    return resolvent.solve(rhs)


def fixed_point_perp(
    c,
    model: ContinuumModel,
    basis: LocalizedBasis,
    lam: float,
    tol: float = FIXED_POINT_TOL,
    max_iter: int = FIXED_POINT_MAX_ITER,
    delta0: float = DEFAULT_DELTA0,
    psi_perp0=None,
) -> PerpResult:
    """Iterate ``psi_perp <- A^{-1} Pi_perp(-eta psi^3 - F W psi_1)`` from ``psi_perp0`` (0).

    Stops when the H^1 displacement drops below ``tol``. The contraction
    factor is the larger of the observed displacement ratios and a direct
    probe of the map's Lipschitz constant at the fixed point.
    """
    c = np.asarray(c, dtype=float)
    if c.shape != (len(basis.indices),):
        raise ValueError(f"c must have one entry per basis index ({len(basis.indices)})")
    if np.sum(np.abs(c)) > delta0:
        raise ValueError(f"|c|_1 = {np.sum(np.abs(c)):.3g} exceeds delta0 = {delta0}")
    grid = basis.grid
    resolvent = PerpResolvent(basis, model, lam)
    psi1 = basis.synthesize(c)
    psi1_tilt = model.F * basis.W * psi1
    current = np.zeros(grid.n_points) if psi_perp0 is None else basis.project_perp(psi_perp0)
    displacements = []
    leakage = 0.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        new = _perp_map(c, psi1, current, model, basis, resolvent, psi1_tilt)
        leakage = max(leakage, float(np.max(np.abs(basis.coefficients(new)))))
        step = grid.h1(new - current)
        displacements.append(step)
        current = new
        if step < tol:
            converged = True
            break
        if len(displacements) >= 3 and displacements[-1] >= displacements[-2] >= displacements[-3]:
            raise NonContractionError(f"displacements grow: {displacements[-3:]}")

    # Lipschitz probe along a fixed direction of the complement
    direction = basis.project_perp(psi1**3 if np.any(psi1) else grid.x * np.exp(-grid.x**2))
    norm = grid.h1(direction)
    probe = 0.0
    if norm > 0:
        eps = 1e-4 * max(grid.h1(current), 1e-6) / norm
        moved = _perp_map(c, psi1, current + eps * direction, model, basis, resolvent, psi1_tilt)
        base = _perp_map(c, psi1, current, model, basis, resolvent, psi1_tilt)
        probe = grid.h1(moved - base) / (eps * norm)
    scale = max(grid.h1(current), 1e-300)
    ratios = [
        b / a
        for a, b in zip(displacements, displacements[1:])
        if a > 1e-8 * scale and b > 1e-12 * scale
    ]
    factor = max([probe] + ratios)
    if factor >= 1.0:
        raise NonContractionError(f"measured contraction factor {factor:.3g} >= 1 (h too large)")
    return PerpResult(current, it, displacements, factor, probe, leakage, converged, resolvent.cg_iterations)


def lipschitz_constant(
    c,
    model: ContinuumModel,
    basis: LocalizedBasis,
    lam: float,
    n_samples: int = 3,
    size: float = 1e-3,
    seed: int = 0,
) -> float:
    """Smallest ``K`` with ``|psi_perp(c+q) - psi_perp(c)|_{H^1} <= K h |q|_1`` over random ``q``."""
    rng = np.random.default_rng(seed)
    c = np.asarray(c, dtype=float)
    base = fixed_point_perp(c, model, basis, lam).psi_perp
    support = np.flatnonzero(np.abs(basis.indices) <= 2)
    worst = 0.0
    for _ in range(n_samples):
        q = np.zeros_like(c)
        q[support] = rng.uniform(-size, size, len(support))
        moved = fixed_point_perp(c + q, model, basis, lam, psi_perp0=base).psi_perp
        worst = max(worst, basis.grid.h1(moved - base) / (model.h * np.sum(np.abs(q))))
    return worst


# --------------------------------------------------------------------------
# assembly and residuals
# --------------------------------------------------------------------------


def assemble_psi(c, psi_perp, basis: LocalizedBasis) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.shape != (len(basis.indices),) or np.shape(psi_perp) != (basis.grid.n_points,):
        raise ValueError("c and psi_perp do not match the basis")
    return basis.synthesize(c) + np.asarray(psi_perp, dtype=float)


def residual_vector(psi, lam: float, model: ContinuumModel, grid: Grid1D) -> np.ndarray:
    """``H_B psi + F W psi + eta psi^3 - lambda psi`` on the grid."""
    psi = np.asarray(psi, dtype=float)
    x = grid.x
    return grid.kinetic(psi, model.h) + (model.V(x) + model.F * model.W(x) - lam) * psi + model.eta * psi**3


def continuum_residual(psi, lam: float, model: ContinuumModel, grid: Grid1D, mask=None) -> float:
    """Relative residual ``|H psi + eta psi^3 - lambda psi|_2 / |psi|_2`` (optionally on ``mask``)."""
    r = residual_vector(psi, lam, model, grid)
    psi = np.asarray(psi, dtype=float)
    if mask is not None:
        r = r[mask]
    return float(np.linalg.norm(r) / np.linalg.norm(psi))


@dataclass
class ContinuumSolution:
    psi: np.ndarray
    lam: float
    c: np.ndarray
    psi_perp: np.ndarray
    perp_H1_norm: float
    residual_L2: float
    lambda_mu: float
    residual_mu: float
    lattice: LatticeSolution
    perp: PerpResult
    basis: LocalizedBasis
    params: EffectiveParameters
    solution_set: SolutionSet

    @property
    def model(self) -> ContinuumModel:
        return self.basis.model

    def pythagoras_defect(self) -> float:
        g = self.basis.grid
        return abs(g.inner(self.psi, self.psi) - float(self.c @ self.c) - g.inner(self.psi_perp, self.psi_perp))


def lattice_halfwidth(basis: LocalizedBasis, window: int) -> int:
    return int(min(window + LATTICE_PADDING, -basis.indices[0] - 1, basis.indices[-1]))


def solve_stationary(
    model: ContinuumModel,
    sset: SolutionSet | None = None,
    basis: LocalizedBasis | None = None,
    params: EffectiveParameters | None = None,
    normalized: bool = True,
    tol: float = FIXED_POINT_TOL,
) -> ContinuumSolution:
    """Effective parameters, lattice continuation, ``psi_perp`` and the PDE residual.

    ``lambda = Lambda1 + F C0 + lambda~`` with ``lambda~`` from the lattice
    branch (normalized by default). The residual with ``lambda~ = mu^S`` is
    reported next to it for comparison.
    """
    sset = SolutionSet(0, (0,)) if sset is None else sset
    window = model.W_window_N
    if basis is None:
        basis = build_basis(model, window)
    if params is None:
        params = effective_parameters(model, basis, window)
    lp = params.lattice_params(window)
    seed = amplitudes(sset, lp)
    hw = lattice_halfwidth(basis, window)
    if normalized:
        lattice, lam_tilde = continue_normalized(seed, lp, params.beta, halfwidth=hw)
    else:
        lattice = continue_in_beta(seed, lp, params.beta, halfwidth=hw)[-1]
        lam_tilde = lattice.lambda_tilde
    c = np.zeros(len(basis.indices))
    for n, value in zip(lattice.sites, lattice.g):
        c[basis.column(int(n))] = value
    shift = params.Lambda1 + model.F * params.C0
    lam = shift + lam_tilde
    perp = fixed_point_perp(c, model, basis, lam, tol=tol)
    psi = assemble_psi(c, perp.psi_perp, basis)
    grid = basis.grid
    lam_mu = shift + seed.mu
    return ContinuumSolution(
        psi,
        lam,
        c,
        perp.psi_perp,
        grid.h1(perp.psi_perp),
        continuum_residual(psi, lam, model, grid),
        lam_mu,
        continuum_residual(psi, lam_mu, model, grid),
        lattice,
        perp,
        basis,
        params,
        sset,
    )


# --------------------------------------------------------------------------
# ladder translation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LadderCheck:
    shift: int
    original: float
    shifted: float

    @property
    def ratio(self) -> float:
        return self.shifted / self.original if self.original > 0 else 1.0


def ladder_translation_check(
    psi,
    lam: float,
    model: ContinuumModel,
    basis: LocalizedBasis,
    shift: int = 1,
    support_tol: float = 1e-8,
) -> LadderCheck:
    """Residual of ``psi(x - shift a)`` at ``lambda + F a shift`` against the original.

    Both residual norms are taken over the window where ``W(x) = x``.
    """
    psi = np.asarray(psi, dtype=float)
    grid = basis.grid
    x = grid.x
    a = model.a
    N = model.W_window_N
    moved = np.roll(psi, shift * basis.n_cell)
    if model.W_kind == "tapered":
        outside = np.abs(x) > (N - 2) * a
        peak = float(np.max(np.abs(psi)))
        for f in (psi, moved):
            if np.max(np.abs(f[outside])) > support_tol * peak:
                raise WindowError("solution support reaches |x| > (N - 2) a where W is tapered")
        window = np.abs(x) <= (N + 0.5) * a
    else:
        window = np.abs(x) <= (N + 0.5) * a
    r0 = residual_vector(psi, lam, model, grid)[window]
    r1 = residual_vector(moved, lam + model.F * a * shift, model, grid)[window]
    return LadderCheck(shift, float(np.linalg.norm(r0)), float(np.linalg.norm(r1)))


# --------------------------------------------------------------------------
# nonlinear remainder
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class R4Report:
    r4: np.ndarray
    r4_l1: float
    bound: float
    terms: tuple

    @property
    def K_min(self) -> float:
        return self.r4_l1 / self.bound if self.bound > 0 else math.inf

    def within(self, K: float) -> bool:
        return self.r4_l1 <= K * self.bound


def r4_diagnostic(c, psi_perp, basis: LocalizedBasis, rho_fraction: float = 0.2) -> R4Report:
    """``r4_n = <u_n, psi^3> - C1 c_n^3`` and its bound

    ``h^{-1/2}|psi_perp|^3 + |c|_1 |psi_perp|^2 + |c|_1^2 h^{-1/4}|psi_perp| + |c|_1^3 e^{-(S0-rho)/h}``
    with H^1 norms and ``rho = 0.2 S0``.
    """
    from .semiclassical import agmon_action

    model = basis.model
    grid = basis.grid
    c = np.asarray(c, dtype=float)
    psi = assemble_psi(c, psi_perp, basis)
    C1 = float(np.sum(basis.u(0) ** 4) * grid.spacing)
    r4 = basis.coefficients(psi**3) - C1 * c**3
    h = model.h
    p = grid.h1(psi_perp)
    c1 = float(np.sum(np.abs(c)))
    S0 = agmon_action(model)
    rho = rho_fraction * S0
    terms = (
        h**-0.5 * p**3,
        c1 * p**2,
        c1**2 * h**-0.25 * p,
        c1**3 * math.exp(-(S0 - rho) / h),
    )
    return R4Report(r4, float(np.sum(np.abs(r4))), float(sum(terms)), terms)

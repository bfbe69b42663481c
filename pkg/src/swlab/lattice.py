"""Truncated-lattice DNLSWE and Newton continuation away from ``beta = 0``.

The stationary equation on sites ``n = -N_lat .. N_lat`` (zero beyond) is

    lambda g_n = -beta (g_{n+1} + g_{n-1}) + f xi(n) g_n + nu g_n^3 .

Residuals, Jacobians and Newton iterates live on that truncated lattice; the
Jacobian is tridiagonal and is factored with LAPACK's ``?gttrf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import lapack

from .anticontinuous import (
    FiniteModeSolution,
    PositivityError,
    SolutionSet,
    amplitudes,
    energy_of,
    is_bifurcation_point,
)
from .params import ModelParams

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 50
CONDITION_CAP = 1e12
MAX_HALVINGS = 8
LATTICE_PADDING = 10


class SingularJacobianError(RuntimeError):
    """Jacobian condition estimate above the cap: too close to a bifurcation."""

    def __init__(self, condition: float):
        self.condition = condition
        super().__init__(
            f"bifurcation-adjacent, refine nu/f (Jacobian condition estimate {condition:.3e})"
        )


class ConvergenceError(RuntimeError):
    def __init__(self, residual: float, iterations: int, history=()):
        self.residual = residual
        self.iterations = iterations
        self.history = list(history)
        super().__init__(
            f"Newton did not converge in {iterations} iterations (final residual {residual:.3e})"
        )


class ContinuationError(RuntimeError):
    """A homotopy step failed even after repeated step bisection."""

    def __init__(self, last_beta: float, solutions, cause: Exception):
        self.last_beta = last_beta
        self.solutions = solutions
        super().__init__(f"continuation stopped at beta = {last_beta:.6g}: {cause}")


def lattice_sites(halfwidth: int) -> np.ndarray:
    return np.arange(-halfwidth, halfwidth + 1)


def _halfwidth(g: np.ndarray) -> int:
    if g.ndim != 1 or len(g) % 2 == 0:
        raise ValueError("lattice vectors must have odd length 2*N_lat + 1")
    return (len(g) - 1) // 2


def _onsite(params: ModelParams, halfwidth: int) -> np.ndarray:
    return params.f * np.asarray(params.tilt.evaluate(lattice_sites(halfwidth)), dtype=float)


def _hop(g: np.ndarray) -> np.ndarray:
    out = np.zeros_like(g)
    out[:-1] += g[1:]
    out[1:] += g[:-1]
    return out


def dnlswe_residual(g, lambda_tilde: float, params: ModelParams) -> np.ndarray:
    """``R_n = -beta (g_{n+1} + g_{n-1}) + f xi(n) g_n + nu g_n^3 - lambda g_n``."""
    g = np.asarray(g, dtype=float)
    hw = _halfwidth(g)
    return -params.beta * _hop(g) + (_onsite(params, hw) - lambda_tilde) * g + params.nu * g**3


@dataclass(frozen=True)
class TridiagJacobian:
    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.sub, -1) + np.diag(self.sup, 1)

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = self.diag * x
        out[1:] += self.sub * x[:-1]
        out[:-1] += self.sup * x[1:]
        return out

    def _factor(self):
        dl, d, du, du2, ipiv, info = lapack.dgttrf(self.sub, self.diag, self.sup)
        return dl, d, du, du2, ipiv, info

    def solve(self, rhs) -> np.ndarray:
        dl, d, du, du2, ipiv, info = self._factor()
        if info > 0:
            raise SingularJacobianError(math.inf)
        x, info = lapack.dgttrs(dl, d, du, du2, ipiv, np.asarray(rhs, dtype=float))
        return x

    def condition(self) -> float:
        """1-norm condition estimate from the LU factors."""
        dl, d, du, du2, ipiv, info = self._factor()
        if info > 0:
            return math.inf
        a = np.abs(self.diag).copy()
        a[:-1] += np.abs(self.sub)
        a[1:] += np.abs(self.sup)
        anorm = float(a.max())
        rcond, info = lapack.dgtcon(dl, d, du, du2, ipiv, anorm)
        return math.inf if rcond == 0 else 1.0 / rcond


def jacobian(g, lambda_tilde: float, params: ModelParams) -> TridiagJacobian:
    g = np.asarray(g, dtype=float)
    hw = _halfwidth(g)
    off = np.full(len(g) - 1, -params.beta)
    diag = _onsite(params, hw) - lambda_tilde + 3.0 * params.nu * g**2
    return TridiagJacobian(off, diag, off.copy())


# --------------------------------------------------------------------------
# stability diagnostic
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class StabilityReport:
    sites: np.ndarray
    T: np.ndarray
    on_set: np.ndarray

    @property
    def inf_abs(self) -> float:
        return float(np.min(np.abs(self.T)))

    @property
    def min_abs_on_set(self) -> float:
        return float(np.min(np.abs(self.T[self.on_set])))

    @property
    def exceeds_half(self) -> bool:
        return self.inf_abs > 0.5


def stability_diagnostic(
    sset: SolutionSet, params: ModelParams, sites: Sequence[int] | None = None
) -> StabilityReport:
    """Diagonal of the scaled linearization at ``beta = 0``.

    ``T_n = (f xi(n) - mu)/mu`` off the set and ``-2 (f xi(n) - mu)/mu`` on it.
    Sites default to the linear window ``[-N, N]``.
    """
    mu = energy_of(sset, params)
    if mu == 0:
        raise ZeroDivisionError("mu^S = 0: the scaled linearization is singular")
    if sites is None:
        sites = lattice_sites(params.window_N)
    sites = np.asarray(sites)
    ratio = (params.f * np.asarray(params.tilt.evaluate(sites), dtype=float) - mu) / mu
    on_set = np.isin(sites, sset.sites)
    T = np.where(on_set, -2.0 * ratio, ratio)
    return StabilityReport(sites, T, on_set)


# --------------------------------------------------------------------------
# Newton
# --------------------------------------------------------------------------


@dataclass
class LatticeSolution:
    lattice_halfwidth: int
    g: np.ndarray
    lambda_tilde: float
    beta: float
    residual_norm: float
    iterations: int
    residual_history: list = field(default_factory=list)
    l1_error: float | None = None

    @property
    def sites(self) -> np.ndarray:
        return lattice_sites(self.lattice_halfwidth)

    def amplitude(self, n: int) -> float:
        if abs(n) > self.lattice_halfwidth:
            return 0.0
        return float(self.g[n + self.lattice_halfwidth])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.g))

    @property
    def tail_ratio(self) -> float:
        """``max(|g_{-N_lat}|, |g_{N_lat}|) / max |g|``."""
        peak = float(np.max(np.abs(self.g)))
        return max(abs(self.g[0]), abs(self.g[-1])) / peak if peak > 0 else 0.0


def perturbative_seed(d, lambda_tilde: float, params: ModelParams, resonance_tol: float = 1e-9):
    """First-order-in-beta correction of an anticontinuous vector ``d``.

    Off resonance ``g_n = d_n + beta (d_{n+1} + d_{n-1}) / D_n`` with ``D_n`` the
    ``beta = 0`` Jacobian diagonal. Where ``D_n`` vanishes (``f xi(n) = lambda``
    off the set) the cubic term balances the hopping instead, giving
    ``g_n = (beta (g_{n+1} + g_{n-1}) / nu)^{1/3}``. Without this the Jacobian
    at the bare seed is singular at such resonant sites.
    """
    d = np.asarray(d, dtype=float)
    hw = _halfwidth(d)
    if params.beta == 0:
        return d.copy()
    D = _onsite(params, hw) - lambda_tilde + 3.0 * params.nu * d**2
    resonant = np.abs(D) <= resonance_tol * max(1.0, abs(lambda_tilde))
    safe = np.where(resonant, 1.0, D)
    g = d + np.where(resonant, 0.0, params.beta * _hop(d) / safe)
    if params.nu > 0 and np.any(resonant):
        g[resonant] = np.cbrt(params.beta * _hop(g)[resonant] / params.nu)
    return g


def newton_solve(
    seed,
    lambda_tilde: float,
    params: ModelParams,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    condition_cap: float = CONDITION_CAP,
) -> LatticeSolution:
    """Newton iteration at fixed ``lambda_tilde`` with step halving on increase."""
    g = np.array(seed, dtype=float)
    hw = _halfwidth(g)
    R = dnlswe_residual(g, lambda_tilde, params)
    res = float(np.max(np.abs(R)))
    history = [res]
    it = 0
    while res >= tol:
        if it >= max_iter:
            raise ConvergenceError(res, it, history)
        J = jacobian(g, lambda_tilde, params)
        cond = J.condition()
        if cond > condition_cap:
            raise SingularJacobianError(cond)
        step = J.solve(-R)
        t = 1.0
        for _ in range(MAX_HALVINGS + 1):
            trial = g + t * step
            R_trial = dnlswe_residual(trial, lambda_tilde, params)
            res_trial = float(np.max(np.abs(R_trial)))
            if res_trial <= res:
                break
            t *= 0.5
        g, R, res = trial, R_trial, res_trial
        it += 1
        history.append(res)
        if not math.isfinite(res):
            raise ConvergenceError(res, it, history)
    return LatticeSolution(hw, g, float(lambda_tilde), params.beta, res, it, history)


def newton_bordered(
    seed,
    lambda0: float,
    params: ModelParams,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    condition_cap: float = CONDITION_CAP,
) -> LatticeSolution:
    """Newton on ``{R(g, lambda) = 0, (|g|^2 - 1)/2 = 0}`` with ``lambda`` free.

    The bordered system is reduced by block elimination to two tridiagonal
    solves per iteration.
    """
    g = np.array(seed, dtype=float)
    hw = _halfwidth(g)
    lam = float(lambda0)

    def residuals(g, lam):
        R = dnlswe_residual(g, lam, params)
        c = 0.5 * (float(g @ g) - 1.0)
        return R, c, max(float(np.max(np.abs(R))), abs(c))

    R, c, res = residuals(g, lam)
    history = [res]
    it = 0
    while res >= tol:
        if it >= max_iter:
            raise ConvergenceError(res, it, history)
        J = jacobian(g, lam, params)
        cond = J.condition()
        if cond > condition_cap:
            raise SingularJacobianError(cond)
        x1 = J.solve(-R)
        x2 = J.solve(g)
        denom = float(g @ x2)
        if denom == 0.0:
            raise SingularJacobianError(math.inf)
        dlam = (-c - float(g @ x1)) / denom
        dg = x1 + dlam * x2
        t = 1.0
        for _ in range(MAX_HALVINGS + 1):
            trial_g, trial_lam = g + t * dg, lam + t * dlam
            R_t, c_t, res_t = residuals(trial_g, trial_lam)
            if res_t <= res:
                break
            t *= 0.5
        g, lam, R, c, res = trial_g, trial_lam, R_t, c_t, res_t
        it += 1
        history.append(res)
        if not math.isfinite(res):
            raise ConvergenceError(res, it, history)
    return LatticeSolution(hw, g, lam, params.beta, res, it, history)


# --------------------------------------------------------------------------
# continuation in beta
# --------------------------------------------------------------------------


def beta_schedule(beta_target: float, scale: float, n_steps: int) -> np.ndarray:
    """Log-spaced homotopy from ``1e-4 beta_target`` (direct if ``beta/scale < 1e-4``)."""
    if beta_target == 0:
        return np.array([])
    if beta_target / scale < 1e-4 or n_steps <= 1:
        return np.array([beta_target])
    return np.geomspace(1e-4 * beta_target, beta_target, n_steps)


def _check_continuable(params: ModelParams, beta_target: float):
    if beta_target < 0 or not math.isfinite(beta_target):
        raise ValueError(f"beta_target must be finite and >= 0, got {beta_target}")
    if params.f > 0 and is_bifurcation_point(params.nu / params.f):
        raise ValueError(
            f"nu/f = {params.nu / params.f:.12g} is a bifurcation point (integer); continuation needs nu/f not in N"
        )


def _continue(sol0, params, beta_target, n_steps, halfwidth, solver, lam0, max_bisections):
    hw = params.window_N + LATTICE_PADDING if halfwidth is None else halfwidth
    d = sol0.vector(hw)
    first = LatticeSolution(hw, d.copy(), lam0, 0.0, 0.0, 0, [0.0], 0.0)
    out = []
    if beta_target == 0:
        return [first]
    prev = first
    for beta in beta_schedule(beta_target, abs(lam0) or 1.0, n_steps):
        target = float(beta)
        attempt = target
        for _ in range(max_bisections + 1):
            p_attempt = params.with_beta(attempt)
            start = perturbative_seed(d, lam0, p_attempt) if prev is first else prev.g
            try:
                sol = solver(start, prev.lambda_tilde, p_attempt)
            except (ConvergenceError, SingularJacobianError) as exc:
                err = exc
                attempt = math.sqrt(max(prev.beta, 1e-300) * attempt) if prev.beta > 0 else 0.5 * attempt
                continue
            sol.l1_error = float(np.sum(np.abs(sol.g - d)))
            out.append(sol)
            prev = sol
            if attempt == target:
                break
            attempt = target
        else:
            raise ContinuationError(prev.beta, out, err)
    return out


def continue_in_beta(
    sol0: FiniteModeSolution,
    params: ModelParams,
    beta_target: float,
    n_steps: int = 12,
    halfwidth: int | None = None,
    max_bisections: int = 12,
) -> list[LatticeSolution]:
    """Homotopy in ``beta`` at fixed ``lambda = mu^S``; each step seeds the next.

    Every returned solution carries ``l1_error = |g - d|_1``. ``beta_target = 0``
    returns the anticontinuous seed itself.
    """
    _check_continuable(params, beta_target)

    def solver(seed, lam, p):
        return newton_solve(seed, lam, p)

    return _continue(sol0, params, beta_target, n_steps, halfwidth, solver, sol0.mu, max_bisections)


def continue_normalized_path(
    sol0: FiniteModeSolution,
    params: ModelParams,
    beta_target: float,
    n_steps: int = 12,
    halfwidth: int | None = None,
    max_bisections: int = 12,
) -> list[LatticeSolution]:
    """Every step of the normalized homotopy (``|g|_2 = 1``, ``lambda`` free)."""
    _check_continuable(params, beta_target)
    return _continue(
        sol0, params, beta_target, n_steps, halfwidth, lambda s, l, p: newton_bordered(s, l, p),
        sol0.mu, max_bisections,
    )


def continue_normalized(
    sol0: FiniteModeSolution,
    params: ModelParams,
    beta_target: float,
    n_steps: int = 12,
    halfwidth: int | None = None,
    max_bisections: int = 12,
) -> tuple[LatticeSolution, float]:
    """Normalized branch endpoint: ``|g|_2 = 1`` enforced, ``lambda`` solved for."""
    last = continue_normalized_path(sol0, params, beta_target, n_steps, halfwidth, max_bisections)[-1]
    return last, last.lambda_tilde


@dataclass(frozen=True)
class BranchRow:
    nu_over_f: float
    status: str
    lambda_over_f: float | None = None
    l1_error: float | None = None


def branch_sweep_nu(
    sset: SolutionSet,
    params: ModelParams,
    nu_over_f_values: Sequence[float],
    beta: float,
    halfwidth: int | None = None,
) -> list[BranchRow]:
    """Normalized branch of one set traced over ``nu/f`` at fixed ``beta``.

    Each point re-seeds from its own anticontinuous solution. Ratios where
    the set does not yet exist are recorded with status ``below-threshold``.
    """
    if params.f <= 0:
        raise ValueError("branch sweeps need f > 0")
    rows = []
    for x in sorted(float(v) for v in nu_over_f_values):
        p = params.with_nu(x * params.f)
        if is_bifurcation_point(x):
            rows.append(BranchRow(x, "bifurcation-point"))
            continue
        try:
            seed = amplitudes(sset, p)
        except PositivityError:
            rows.append(BranchRow(x, "below-threshold"))
            continue
        try:
            sol, lam = continue_normalized(seed, p, beta, halfwidth=halfwidth)
        except ContinuationError:
            rows.append(BranchRow(x, "continuation-failed"))
            continue
        rows.append(BranchRow(x, "ok", lam / params.f, sol.l1_error))
    return rows


# --------------------------------------------------------------------------
# scaled form
# --------------------------------------------------------------------------


def to_scaled(g, lambda_tilde: float, params: ModelParams):
    """``g' = (nu/lambda)^{1/2} g``, ``beta' = beta/lambda``, ``f' = f/lambda``."""
    if lambda_tilde <= 0 or params.nu <= 0:
        raise ValueError("scaling needs lambda > 0 and nu > 0")
    factor = math.sqrt(params.nu / lambda_tilde)
    return np.asarray(g, dtype=float) * factor, params.beta / lambda_tilde, params.f / lambda_tilde


def from_scaled(gp, lambda_tilde: float, nu: float) -> np.ndarray:
    return np.asarray(gp, dtype=float) * math.sqrt(lambda_tilde / nu)


def scaled_residual(gp, beta_p: float, f_p: float, params: ModelParams) -> np.ndarray:
    """``(1 - g'^2) g' + beta' (g'_{n+1} + g'_{n-1}) - f' xi(n) g'``.

    Zero exactly when the unscaled residual vanishes (it equals
    ``-R / (lambda (lambda/nu)^{1/2})``).
    """
    gp = np.asarray(gp, dtype=float)
    hw = _halfwidth(gp)
    xi = np.asarray(params.tilt.evaluate(lattice_sites(hw)), dtype=float)
    return (1.0 - gp**2) * gp + beta_p * _hop(gp) - f_p * xi * gp

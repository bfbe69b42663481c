"""Effective lattice parameters from a periodic potential ``V0 sin^2(kL x)``.

Everything here is spectral. One-cell Bloch problems are solved in a
plane-wave basis ``e^{i(k + b m)x}``, ``|m| <= M``, where ``V`` couples only
neighbouring ``m`` and the Bloch matrix is tridiagonal. Supercell functions
live on a periodic grid with ``4M`` points per cell and FFT kinetic energy.

The localized basis follows the single-well construction: the ground state
``w0`` of ``V + theta`` (all wells but one lifted by ``theta``) is translated
to every cell, projected onto the first band and orthonormalized
symmetrically (Loewdin).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate, optimize, stats
from scipy.linalg import eigh, eigh_tridiagonal

from ._parallel import parallel_map
from .params import ModelParams, TiltProfile, smoothstep, tapered_linear

DRIFT_TOL = 1e-8
THETA_DELTA = 0.24  # filling starts at 0.24 a from the well, fully on at 0.48 a
WELL_PAD_CELLS = 3
W_TAPER_CELLS = 2


class ResolutionError(RuntimeError):
    pass


class WindowError(ValueError):
    pass


# --------------------------------------------------------------------------
# model and grid
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ContinuumModel:
    """``H = -h^2 d^2/dx^2 + V0 sin^2(kL x) + F W(x)`` with cubic term ``eta``.

    ``W(x) = x`` for ``|x| <= (N + 1/2) a`` and switches off smoothly over
    ``W_TAPER_CELLS`` further cells; ``W_kind="linear"`` keeps ``W = x``
    everywhere (only meaningful on grids where wrap-around is harmless).
    """

    V0: float = 1.0
    kL: float = math.pi
    h: float = 0.02
    F: float = 0.0
    eta: float = 0.0
    W_window_N: int = 8
    W_kind: str = "tapered"

    def __post_init__(self):
        if not (self.V0 >= 0 and math.isfinite(self.V0)):
            raise ValueError(f"V0 must be finite and >= 0, got {self.V0}")
        if not self.kL > 0:
            raise ValueError(f"kL must be > 0, got {self.kL}")
        if not self.h > 0:
            raise ValueError(f"h must be > 0, got {self.h}")
        if int(self.W_window_N) != self.W_window_N or self.W_window_N < 1:
            raise ValueError("W_window_N must be an integer >= 1")
        if self.W_kind not in ("tapered", "linear"):
            raise ValueError(f"unknown W_kind {self.W_kind!r}")

    @classmethod
    def scaled(cls, h: float, V0: float = 1.0, kL: float = math.pi, F_coeff: float = 1.0,
               eta_coeff: float = 1.0, W_window_N: int = 8) -> "ContinuumModel":
        """Model with ``F = F_coeff h^2`` and ``eta = eta_coeff h^2``."""
        return cls(V0, kL, h, F_coeff * h * h, eta_coeff * h * h, W_window_N)

    def with_h(self, h: float) -> "ContinuumModel":
        return ContinuumModel(self.V0, self.kL, h, self.F, self.eta, self.W_window_N, self.W_kind)

    @property
    def a(self) -> float:
        return math.pi / self.kL

    @property
    def b(self) -> float:
        return 2.0 * self.kL

    @property
    def plane_wave_cutoff(self) -> int:
        """``M`` such that ``h b M`` exceeds ``4 sqrt(V0)``."""
        return max(16, math.ceil(4.0 * math.sqrt(self.V0) / (self.h * self.b)))

    def V(self, x):
        return self.V0 * np.sin(self.kL * np.asarray(x, dtype=float)) ** 2

    def W(self, x):
        x = np.asarray(x, dtype=float)
        if self.W_kind == "linear":
            return x.copy()
        a = self.a
        return a * tapered_linear(x / a, self.W_window_N + 0.5, W_TAPER_CELLS)

    def lattice_tilt(self) -> TiltProfile:
        """Site tilt matching ``W(n a) / a``."""
        return TiltProfile(self.W_window_N, "linear-tapered", W_TAPER_CELLS)


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic grid ``x_k = x_min + k spacing``, ``k < n_points``."""

    x_min: float
    n_points: int
    spacing: float

    @property
    def x_max(self) -> float:
        return self.x_min + self.n_points * self.spacing

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.spacing * np.arange(self.n_points)

    @property
    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.spacing)

    def derivative(self, f) -> np.ndarray:
        return np.fft.ifft(1j * self.wavenumbers * np.fft.fft(f)).real

    def kinetic(self, f, h: float) -> np.ndarray:
        """``-h^2 f''`` spectrally."""
        return np.fft.ifft(h * h * self.wavenumbers**2 * np.fft.fft(f)).real

    def inner(self, f, g) -> float:
        return float(np.dot(f, g) * self.spacing)

    def l2(self, f) -> float:
        return math.sqrt(self.inner(f, f))

    def h1(self, f) -> float:
        """``|f|_2 + |f'|_2`` with a spectral derivative."""
        return self.l2(f) + self.l2(self.derivative(f))

    def kinetic_matrix(self, h: float) -> np.ndarray:
        k = self.wavenumbers
        n = self.n_points
        K = np.fft.ifft(h * h * k[:, None] ** 2 * np.fft.fft(np.eye(n), axis=0), axis=0).real
        return 0.5 * (K + K.T)


# --------------------------------------------------------------------------
# Agmon action
# --------------------------------------------------------------------------


def agmon_action(model: ContinuumModel) -> float:
    """``S0 = int_0^a sqrt(V)`` between adjacent minima, by adaptive quadrature."""
    if model.V0 <= 0:
        raise ValueError("the Agmon action needs V0 > 0")
    value, _ = integrate.quad(
        lambda q: math.sqrt(model.V0) * abs(math.sin(model.kL * q)), 0.0, model.a,
        epsabs=1e-14, epsrel=1e-13,
    )
    return value


def half_agmon_points(model: ContinuumModel, x0: float = 0.0) -> tuple[float, float]:
    """``a_-, a_+`` with Agmon distance ``S0/2`` from the well at ``x0``."""
    S0 = agmon_action(model)

    def dist(x):
        lo, hi = sorted((x0, x))
        return integrate.quad(lambda q: math.sqrt(model.V(q)), lo, hi, epsabs=1e-14)[0]

    a = model.a
    a_plus = optimize.brentq(lambda x: dist(x) - S0 / 2, x0, x0 + a, xtol=1e-14)
    a_minus = optimize.brentq(lambda x: dist(x) - S0 / 2, x0 - a, x0, xtol=1e-14)
    return a_minus, a_plus


# --------------------------------------------------------------------------
# bands
# --------------------------------------------------------------------------


def _bloch_tridiag(model: ContinuumModel, k: float, M: int):
    m = np.arange(-M, M + 1)
    diag = model.h**2 * (k + model.b * m) ** 2 + model.V0 / 2
    off = np.full(2 * M, -model.V0 / 4)
    return diag, off


def _sturm_count(d, e2, x) -> int:
    """Eigenvalues below ``x`` of the symmetric tridiagonal ``(d, e)``."""
    q = d[0] - x
    count = int(q < 0)
    tiny = np.longdouble(1e-300)
    for i in range(1, len(d)):
        if q == 0:
            q = tiny
        q = d[i] - x - e2[i - 1] / q
        count += int(q < 0)
    return count


def _edge_longdouble(model: ContinuumModel, k: float, index: int, M: int, guess: float) -> np.longdouble:
    """Bisection on the Sturm count in extended precision."""
    ld = np.longdouble
    m = np.arange(-M, M + 1).astype(ld)
    d = ld(model.h) ** 2 * (ld(k) + ld(model.b) * m) ** 2 + ld(model.V0) / 2
    e2 = np.full(2 * M, (ld(model.V0) / 4) ** 2)
    width = 1e-9 * max(1.0, abs(guess))
    lo, hi = ld(guess - width), ld(guess + width)
    if not (_sturm_count(d, e2, lo) <= index < _sturm_count(d, e2, hi)):
        lo, hi = ld(-1.0), ld(model.V0 + model.h**2 * (abs(k) + model.b * M) ** 2 + 1.0)
    for _ in range(200):
        mid = (lo + hi) / 2
        if mid == lo or mid == hi:
            break
        if _sturm_count(d, e2, mid) > index:
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2


@dataclass(frozen=True)
class BandData:
    k: np.ndarray
    energies: np.ndarray  # (n_k, n_bands)
    vectors: np.ndarray  # (n_k, 2M+1, n_bands) plane-wave coefficients
    M: int
    E1_bottom: float
    E1_top: float
    E2_bottom: float
    bandwidth: float
    drift: float

    @property
    def gap(self) -> float:
        return self.E2_bottom - self.E1_top

    def symmetry_defect(self) -> float:
        """``max |E_l(k) - E_l(-k)|`` over the symmetric interior samples."""
        order = np.argsort(self.k)
        E = self.energies[order]
        ks = self.k[order]
        inner = np.abs(ks) < ks.max() - 1e-12
        Ei = E[inner]
        return float(np.max(np.abs(Ei - Ei[::-1]))) if len(Ei) else 0.0


def _band_edges(model: ContinuumModel, M: int):
    zb = model.b / 2
    d0, e0 = _bloch_tridiag(model, 0.0, M)
    dz, ez = _bloch_tridiag(model, zb, M)
    E0 = eigh_tridiagonal(d0, e0, eigvals_only=True, select="i", select_range=(0, 1))
    Ez = eigh_tridiagonal(dz, ez, eigvals_only=True, select="i", select_range=(0, 1))
    return E0[0], Ez[0], Ez[1]


def solve_bands(model: ContinuumModel, n_k: int = 33, n_bands: int = 3) -> BandData:
    """Bloch bands on ``(-b/2, b/2]``; edges ``E1(0), E1(b/2), E2(b/2)``.

    The first band edges are refined by extended-precision bisection so the
    exponentially small bandwidth is resolved. Raises ``ResolutionError`` when
    the edges drift by more than ``1e-8`` (relative) on doubling ``M``.
    """
    if n_k < 2 or n_bands < 2:
        raise ValueError("need n_k >= 2 and n_bands >= 2")
    M = model.plane_wave_cutoff
    zb = model.b / 2
    ks = np.linspace(-zb, zb, n_k + 1)[1:]
    energies = np.empty((n_k, n_bands))
    vectors = np.empty((n_k, 2 * M + 1, n_bands))
    for i, k in enumerate(ks):
        d, e = _bloch_tridiag(model, k, M)
        w, v = eigh_tridiagonal(d, e, select="i", select_range=(0, n_bands - 1))
        energies[i] = w
        vectors[i] = v
    coarse = np.array(_band_edges(model, M))
    fine = np.array(_band_edges(model, 2 * M))
    drift = float(np.max(np.abs(fine - coarse) / np.maximum(np.abs(fine), 1e-300)))
    if drift > DRIFT_TOL:
        raise ResolutionError(f"band edges drift {drift:.2e} > {DRIFT_TOL:.0e} under doubling M = {M}")
    e1b = _edge_longdouble(model, 0.0, 0, M, coarse[0])
    e1t = _edge_longdouble(model, zb, 0, M, coarse[1])
    e2b = _edge_longdouble(model, zb, 1, M, coarse[2])
    return BandData(ks, energies, vectors, M, float(e1b), float(e1t), float(e2b), float(e1t - e1b), drift)


def bloch_function(model: ContinuumModel, k: float, band: int, x) -> tuple[float, np.ndarray]:
    """Energy and samples of the ``band``-th (0-based) Bloch state at ``k``, unit norm per cell."""
    M = model.plane_wave_cutoff
    d, e = _bloch_tridiag(model, k, M)
    ev, vv = eigh_tridiagonal(d, e, select="i", select_range=(band, band))
    m = np.arange(-M, M + 1)
    phi = np.exp(1j * np.outer(np.asarray(x, dtype=float), k + model.b * m)) @ vv[:, 0]
    return float(ev[0]), phi / math.sqrt(model.a)


# --------------------------------------------------------------------------
# single well and localized basis
# --------------------------------------------------------------------------


def filling_function(model: ContinuumModel, x, x0: float = 0.0):
    """``theta = (V0/2) sigma((|x - x0| - delta)/delta)``, ``delta = 0.24 a``."""
    delta = THETA_DELTA * model.a
    return 0.5 * model.V0 * smoothstep((np.abs(np.asarray(x) - x0) - delta) / delta)


@dataclass(frozen=True)
class SingleWell:
    Lambda1: float
    grid: Grid1D
    w0: np.ndarray

    def parity_defect(self) -> float:
        """``max |w0(x) - w0(-x)|`` on the grid (centre at index n/2)."""
        w = self.w0
        mirrored = np.roll(w[::-1], 1)
        return float(np.max(np.abs(w - mirrored)))


def _cell_points(model: ContinuumModel) -> int:
    return 4 * model.plane_wave_cutoff


def single_well_state(model: ContinuumModel) -> SingleWell:
    """Ground state of ``-h^2 d^2 + V + theta`` on a periodic box of ``6`` cells."""
    nc = _cell_points(model)
    dx = model.a / nc
    grid = Grid1D(-WELL_PAD_CELLS * model.a, 2 * WELL_PAD_CELLS * nc, dx)
    x = grid.x
    H = grid.kinetic_matrix(model.h)
    H[np.diag_indices_from(H)] += model.V(x) + filling_function(model, x)
    lam, vec = eigh(H, subset_by_index=[0, 0])
    w = vec[:, 0] / math.sqrt(dx)
    w *= np.sign(w[grid.n_points // 2])
    return SingleWell(float(lam[0]), grid, w)


@dataclass
class LocalizedBasis:
    """Orthonormal first-band functions ``u_n`` on a periodic supercell."""

    model: ContinuumModel
    grid: Grid1D
    n_cell: int
    indices: np.ndarray
    U: np.ndarray  # (n_points, n_indices)
    Lambda1: float
    band_energies: np.ndarray
    orthonormality_defect: float
    gauge_flipped: bool = False
    _cache: dict = field(default_factory=dict, repr=False)

    def column(self, n: int) -> int:
        pos = int(n) - int(self.indices[0])
        if not 0 <= pos < len(self.indices):
            raise WindowError(f"index {n} outside basis range [{self.indices[0]}, {self.indices[-1]}]")
        return pos

    def u(self, n: int) -> np.ndarray:
        return self.U[:, self.column(n)]

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def coefficients(self, f) -> np.ndarray:
        """``<u_n, f>`` for every basis index."""
        return self.U.T @ np.asarray(f) * self.grid.spacing

    def project(self, f) -> np.ndarray:
        return self.U @ self.coefficients(f)

    def project_perp(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        return f - self.project(f)

    def synthesize(self, c) -> np.ndarray:
        """``sum_n c_n u_n`` for ``c`` indexed like ``indices``."""
        return self.U @ np.asarray(c, dtype=float)

    def apply_HB(self, f) -> np.ndarray:
        return self.grid.kinetic(f, self.model.h) + self.V * f

    @property
    def V(self) -> np.ndarray:
        if "V" not in self._cache:
            self._cache["V"] = self.model.V(self.x)
        return self._cache["V"]

    @property
    def W(self) -> np.ndarray:
        if "W" not in self._cache:
            self._cache["W"] = self.model.W(self.x)
        return self._cache["W"]

    def translation_defect(self, n: int = 0) -> float:
        """``max |u_{n+1}(x) - u_n(x - a)|``."""
        return float(np.max(np.abs(np.roll(self.u(n), self.n_cell) - self.u(n + 1))))


def supercell_cells(window: int) -> int:
    return 2 * (window + 3)


def build_basis(model: ContinuumModel, window: int | None = None, cells: int | None = None) -> LocalizedBasis:
    """Loewdin-orthonormalized first-band projections of translated ``w0``.

    The supercell holds ``cells`` (default ``2 (window + 3)``) periodic cells,
    centred on the origin; the first-band projector is spanned by the
    supercell-commensurate Bloch states, one per cell, so the basis has one
    function per cell and is exactly translation covariant.
    """
    if window is None:
        window = model.W_window_N
    L = supercell_cells(window) if cells is None else int(cells)
    if L < 2 * (window + 2):
        raise WindowError(f"{L} cells cannot cover [-(window+2)a, (window+2)a] for window {window}")
    if L % 2:
        raise WindowError("the supercell needs an even number of cells")
    M = model.plane_wave_cutoff
    nc = _cell_points(model)
    a = model.a
    dx = a / nc
    grid = Grid1D(-L / 2 * a, L * nc, dx)
    x = grid.x

    well = single_well_state(model)
    w0 = np.zeros(grid.n_points)
    start = (L // 2 - WELL_PAD_CELLS) * nc
    w0[start:start + well.grid.n_points] = well.w0

    m = np.arange(-M, M + 1)
    kj = 2.0 * np.pi * np.arange(-L // 2 + 1, L // 2 + 1) / (L * a)
    Phi = np.empty((grid.n_points, L), dtype=complex)
    E = np.empty(L)
    for j, k in enumerate(kj):
        d, e = _bloch_tridiag(model, k, M)
        ev, vv = eigh_tridiagonal(d, e, select="i", select_range=(0, 0))
        phi = np.exp(1j * np.outer(x, k + model.b * m)) @ vv[:, 0]
        phi /= math.sqrt(np.sum(np.abs(phi) ** 2) * dx)
        Phi[:, j] = phi
        E[j] = ev[0]

    indices = np.arange(-L // 2, L // 2)
    translates = np.stack([np.roll(w0, n * nc) for n in indices], axis=1)
    projected = (Phi @ (Phi.conj().T @ translates * dx)).real
    gram = projected.T @ projected * dx
    evals, evecs = np.linalg.eigh(gram)
    if evals.min() <= 1e-12 * evals.max():
        raise WindowError("projected translates are rank deficient")
    U = projected @ (evecs @ np.diag(evals**-0.5) @ evecs.T)
    defect = float(np.max(np.abs(U.T @ U * dx - np.eye(L))))

    basis = LocalizedBasis(model, grid, nc, indices, U, well.Lambda1, E, defect)
    if _raw_hopping(basis) < 0:
        U = U * np.where(indices % 2 == 0, 1.0, -1.0)
        basis = LocalizedBasis(model, grid, nc, indices, U, well.Lambda1, E, defect, True)
    return basis


def _raw_hopping(basis: LocalizedBasis, n: int = 0) -> float:
    g = basis.grid
    u0, u1 = basis.u(n), basis.u(n + 1)
    return -(basis.model.h**2 * g.inner(g.derivative(u0), g.derivative(u1)) + g.inner(basis.V * u0, u1))


# --------------------------------------------------------------------------
# effective parameters
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class EffectiveParameters:
    Lambda1: float
    beta: float
    C0: float
    C1: float
    S0: float
    xi_tilde: dict
    nu: float
    f: float
    a_minus: float
    a_plus: float

    def lattice_params(self, window_N: int, tilt: TiltProfile | None = None) -> ModelParams:
        if tilt is None:
            tilt = TiltProfile(window_N, "linear-tapered", W_TAPER_CELLS)
        return ModelParams(self.nu, self.f, self.beta, window_N, tilt)

    def as_dict(self) -> dict:
        return {
            "Lambda1": self.Lambda1,
            "beta": self.beta,
            "C0": self.C0,
            "C1": self.C1,
            "S0": self.S0,
            "nu": self.nu,
            "f": self.f,
            "a_minus": self.a_minus,
            "a_plus": self.a_plus,
            "xi_tilde": {str(k): v for k, v in sorted(self.xi_tilde.items())},
        }


def _partial_integral(grid: Grid1D, values, lo: float, hi: float) -> float:
    """``int_lo^hi`` of grid samples, trapezoid with interpolated end cells."""
    x = grid.x
    xs = np.concatenate(([lo], x[(x > lo) & (x < hi)], [hi]))
    ys = np.interp(xs, x, values)
    return float(integrate.trapezoid(ys, xs))


def effective_parameters(model: ContinuumModel, basis: LocalizedBasis, window: int | None = None) -> EffectiveParameters:
    """``Lambda1, beta, C0, C1, S0, xi~(n)`` and the derived ``nu = eta C1, f = F a``."""
    if window is None:
        window = model.W_window_N
    g = basis.grid
    u0 = basis.u(0)
    beta = _raw_hopping(basis)
    C1 = float(np.sum(u0**4) * g.spacing)
    a_minus, a_plus = half_agmon_points(model)
    C0 = _partial_integral(g, basis.x * u0**2, a_minus, a_plus)
    W = basis.W
    xi = {int(n): g.inner(basis.u(n), W * basis.u(n)) / model.a for n in range(-window, window + 1)}
    S0 = agmon_action(model)
    return EffectiveParameters(
        basis.Lambda1, float(beta), C0, C1, S0, xi, model.eta * C1, model.F * model.a, a_minus, a_plus
    )


# --------------------------------------------------------------------------
# sweeps and scaling fits
# --------------------------------------------------------------------------


@dataclass
class SweepPoint:
    model: ContinuumModel
    bands: BandData
    basis: LocalizedBasis
    params: EffectiveParameters

    @property
    def h(self) -> float:
        return self.model.h

    def u0u1_l1(self) -> float:
        return float(np.sum(np.abs(self.basis.u(0) * self.basis.u(1))) * self.basis.grid.spacing)

    def u0_sup(self) -> float:
        return float(np.max(np.abs(self.basis.u(0))))

    def envelope_sup(self, window: int | None = None) -> float:
        """``max_x sum_{|n| <= window} |u_n(x)|``."""
        window = self.model.W_window_N if window is None else window
        cols = [self.basis.column(n) for n in range(-window, window + 1)]
        return float(np.max(np.sum(np.abs(self.basis.U[:, cols]), axis=1)))

    def band_distance(self) -> float:
        """Distance of ``Lambda1`` to ``[E1_bottom, E1_top]``."""
        lam = self.params.Lambda1
        return max(0.0, self.bands.E1_bottom - lam, lam - self.bands.E1_top)


def sweep_point(model: ContinuumModel) -> SweepPoint:
    bands = solve_bands(model)
    basis = build_basis(model)
    return SweepPoint(model, bands, basis, effective_parameters(model, basis))


def semiclassical_sweep(h_values: Sequence[float], template: ContinuumModel | None = None) -> list[SweepPoint]:
    """One :class:`SweepPoint` per ``h`` (``F, eta`` rescaled as ``h^2``)."""
    template = ContinuumModel() if template is None else template
    models = [
        ContinuumModel.scaled(h, template.V0, template.kL, W_window_N=template.W_window_N)
        for h in h_values
    ]
    return parallel_map(sweep_point, models)


@dataclass(frozen=True)
class LogFit:
    slope: float
    intercept: float
    r2: float


def fit_exponential(h_values, values) -> LogFit:
    """Least squares ``log(values) = slope * (-1/h) + intercept``."""
    x = -1.0 / np.asarray(h_values, dtype=float)
    y = np.log(np.asarray(values, dtype=float))
    res = stats.linregress(x, y)
    return LogFit(float(res.slope), float(res.intercept), float(res.rvalue**2))


@dataclass(frozen=True)
class ScalingReport:
    h: np.ndarray
    beta: np.ndarray
    bandwidth: np.ndarray
    gap: np.ndarray
    C1: np.ndarray
    S0: float
    fit: LogFit
    rho: float
    bracket_ok: np.ndarray

    @property
    def slope_ratio(self) -> float:
        return self.fit.slope / self.S0

    def as_dict(self) -> dict:
        return {
            "h": self.h.tolist(),
            "beta": self.beta.tolist(),
            "bandwidth": self.bandwidth.tolist(),
            "gap": self.gap.tolist(),
            "C1": self.C1.tolist(),
            "S0": self.S0,
            "slope": self.fit.slope,
            "slope_over_S0": self.slope_ratio,
            "r2": self.fit.r2,
            "rho": self.rho,
            "bracket_ok": [bool(v) for v in self.bracket_ok],
        }


def hopping_scaling_report(points: Sequence[SweepPoint], rho_fraction: float = 0.2) -> ScalingReport:
    """Fit ``log beta`` against ``-1/h`` and check ``e^{-(S0+rho)/h} <= beta <= e^{-(S0-rho)/h}``."""
    if len(points) < 4:
        raise ValueError("the scaling fit needs at least 4 values of h")
    pts = sorted(points, key=lambda p: -p.h)
    h = np.array([p.h for p in pts])
    beta = np.array([p.params.beta for p in pts])
    S0 = pts[0].params.S0
    rho = rho_fraction * S0
    bracket = (np.exp(-(S0 + rho) / h) <= beta) & (beta <= np.exp(-(S0 - rho) / h))
    return ScalingReport(
        h,
        beta,
        np.array([p.bands.bandwidth for p in pts]),
        np.array([p.bands.gap for p in pts]),
        np.array([p.params.C1 for p in pts]),
        S0,
        fit_exponential(h, beta),
        rho,
        bracket,
    )

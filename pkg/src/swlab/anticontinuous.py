"""Finite-mode solutions of the decoupled lattice (hopping ``beta = 0``).

At zero hopping each site obeys ``(mu - nu d_n^2) d_n = f xi(n) d_n``. A
normalized solution is fixed by its support ``S`` (the solution-set): the
energy is ``mu = nu/|S| + (f/|S|) sum_{n in S} xi(n)`` and the amplitudes
follow from ``d_n^2 = (mu - f xi(n)) / nu`` on ``S``.

Energies and admissibility tests run in exact rational arithmetic (floats
convert to :class:`fractions.Fraction` without loss), so degeneracies such as
``mu({0,3,4}) == mu({0,2,5})`` hold exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, NamedTuple, Sequence

import numpy as np
from scipy.special import erfi

from .params import ModelParams, TiltProfile

INTEGER_TOL = 1e-9


class PositivityError(ValueError):
    """A site of the solution-set has ``mu - f xi(n) <= 0``."""

    def __init__(self, site: int, deficit: float):
        self.site = site
        self.deficit = deficit
        super().__init__(
            f"positivity violated at site {site}: mu - f*xi(n) = {deficit:.17g} <= 0"
        )


class WindowError(ValueError):
    """A required lattice site lies outside the linear window ``[-N, N]``."""

    def __init__(self, site: int, window_N: int):
        self.site = site
        self.window_N = window_N
        super().__init__(f"site {site} lies outside the linear window [-{window_N}, {window_N}]")


# --------------------------------------------------------------------------
# counting
# --------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _distinct_partition_table(n: int) -> tuple[int, ...]:
    table = [1] + [0] * n
    for part in range(1, n + 1):
        for total in range(n, part - 1, -1):
            table[total] += table[total - part]
    return tuple(table)


def q_distinct_partitions(n: int) -> int:
    """Number of partitions of ``n`` into distinct positive parts, ``Q(0) = 1``."""
    if int(n) != n or n < 0:
        raise ValueError(f"Q(n) needs a nonnegative integer, got {n}")
    n = int(n)
    # grow the cached table in powers of two so repeated calls stay cheap
    size = 1 << max(n, 1).bit_length()
    return _distinct_partition_table(size)[n]


def distinct_partitions(n: int) -> Iterator[tuple[int, ...]]:
    """Yield the partitions of ``n`` into distinct parts, parts descending."""

    def rec(remaining: int, cap: int) -> Iterator[tuple[int, ...]]:
        if remaining == 0:
            yield ()
            return
        for part in range(min(remaining, cap), 0, -1):
            for rest in rec(remaining - part, part - 1):
                yield (part,) + rest

    if n < 0:
        return
    yield from rec(n, n)


def snap_ratio(nu_over_f: float) -> Fraction:
    """Exact ratio, snapped onto a positive integer closer than ``INTEGER_TOL``."""
    x = float(nu_over_f)
    m = round(x)
    if m >= 1 and abs(x - m) < INTEGER_TOL:
        return Fraction(m)
    return Fraction(x)


def is_bifurcation_point(nu_over_f: float) -> bool:
    """True when ``nu/f`` is a positive integer (within ``INTEGER_TOL``)."""
    return snap_ratio(nu_over_f).denominator == 1 and nu_over_f >= 1 - INTEGER_TOL


def count_solution_sets(nu_over_f: float) -> int:
    """``M(nu/f) = sum_{0 < n < nu/f} Q(n)``: multi-site sets with ``min S = 0``.

    The singleton ``{0}`` exists for every ratio and is not counted.
    """
    x = float(nu_over_f)
    if not math.isfinite(x) or x <= 0:
        raise ValueError(f"nu/f must be positive and finite, got {nu_over_f}")
    ratio = snap_ratio(x)
    top = math.ceil(ratio) - 1  # largest integer strictly below the ratio
    return sum(q_distinct_partitions(n) for n in range(1, top + 1))


class CountingAsymptotics(NamedTuple):
    q_asymptotic: float
    m_asymptotic: float
    q_exact: int
    m_exact: int

    @property
    def q_ratio(self) -> float:
        return self.q_exact / self.q_asymptotic

    @property
    def m_ratio(self) -> float:
        return self.m_exact / self.m_asymptotic


def counting_asymptotics(n: int) -> CountingAsymptotics:
    """Large-``n`` forms of ``Q(n)`` and ``M(n)`` next to the exact counts."""
    if n < 1:
        raise ValueError("asymptotics need n >= 1")
    q_asym = math.exp(math.pi * math.sqrt(n / 3.0)) / (4.0 * 3.0**0.25 * n**0.75)
    m_asym = 0.5 * float(erfi(math.sqrt(math.pi) * (n / 3.0) ** 0.25))
    return CountingAsymptotics(q_asym, m_asym, q_distinct_partitions(n), count_solution_sets(n))


# --------------------------------------------------------------------------
# solution-sets
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SolutionSet:
    """Sites ``rung_j + offsets[k]`` with ``offsets[0] == 0`` strictly increasing."""

    rung_j: int
    offsets: tuple[int, ...]

    def __post_init__(self):
        offsets = tuple(int(o) for o in self.offsets)
        if not offsets or offsets[0] != 0:
            raise ValueError(f"offsets must start with 0, got {offsets}")
        if any(b <= a for a, b in zip(offsets, offsets[1:])):
            raise ValueError(f"offsets must be strictly increasing, got {offsets}")
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "rung_j", int(self.rung_j))

    @classmethod
    def from_sites(cls, sites: Sequence[int]) -> "SolutionSet":
        s = sorted(int(n) for n in sites)
        if len(set(s)) != len(s):
            raise ValueError(f"repeated site in {sites}")
        return cls(s[0], tuple(n - s[0] for n in s))

    @property
    def sites(self) -> tuple[int, ...]:
        return tuple(self.rung_j + o for o in self.offsets)

    @property
    def cardinality(self) -> int:
        return len(self.offsets)

    @property
    def label(self) -> str:
        """Offsets joined by ``+``; the branch identity used in tables."""
        return "+".join(str(o) for o in self.offsets)

    def shifted(self, j: int) -> "SolutionSet":
        return SolutionSet(self.rung_j + j, self.offsets)

    def sort_key(self):
        return (self.cardinality, self.offsets, self.rung_j)

    def __str__(self):
        return "{" + ",".join(str(n) for n in self.sites) + "}"


def _xi_exact(tilt: TiltProfile, n: int) -> Fraction:
    return Fraction(tilt.evaluate(n))


def _ratio(params: ModelParams) -> Fraction:
    if params.f <= 0:
        raise ValueError("enumeration needs f > 0 (every set is admissible at f = 0)")
    return snap_ratio(params.nu / params.f)


def admissibility_key(sset: SolutionSet, params: ModelParams) -> Fraction:
    """``|S| max_S xi - sum_S xi``; the set is admissible iff this is ``< nu/f``."""
    xis = [_xi_exact(params.tilt, n) for n in sset.sites]
    return len(xis) * max(xis) - sum(xis)


def is_admissible(sset: SolutionSet, params: ModelParams) -> bool:
    if sset.cardinality == 1:
        return True
    return admissibility_key(sset, params) < _ratio(params)


def enumerate_solution_sets(
    params: ModelParams,
    rung_j: int = 0,
    max_card: int | None = None,
    *,
    clip_to_window: bool = False,
) -> list[SolutionSet]:
    """All admissible solution-sets with ``min S = rung_j``.

    Candidate offsets run over ``[0, floor(nu/f)]``; every candidate site
    must lie in ``[-N, N]`` unless ``clip_to_window`` drops the ones beyond.
    Sorted by cardinality, then offsets. The singleton is always first.
    """
    if max_card is not None and max_card < 1:
        raise ValueError("max_card must be >= 1")
    N = params.window_N
    if abs(rung_j) > N:
        raise WindowError(rung_j, N)
    ratio = _ratio(params)
    max_offset = math.floor(ratio)
    if rung_j + max_offset > N:
        if not clip_to_window:
            raise WindowError(N + 1, N)
        max_offset = N - rung_j
    cap = max_card if max_card is not None else max_offset + 1
    xi = [_xi_exact(params.tilt, rung_j + o) for o in range(max_offset + 1)]

    found: list[SolutionSet] = [SolutionSet(rung_j, (0,))]

    def extend(offsets: tuple[int, ...], total: Fraction):
        if len(offsets) >= cap:
            return
        for nxt in range(offsets[-1] + 1, max_offset + 1):
            new_total = total + xi[nxt]
            key = (len(offsets) + 1) * xi[nxt] - new_total
            if key >= ratio:
                break  # xi increases on the window, so larger offsets fail too
            new = offsets + (nxt,)
            found.append(SolutionSet(rung_j, new))
            extend(new, new_total)

    extend((0,), xi[0])
    found.sort(key=SolutionSet.sort_key)
    return found


# --------------------------------------------------------------------------
# energies and amplitudes
# --------------------------------------------------------------------------


def energy_exact(sset: SolutionSet, params: ModelParams) -> Fraction:
    """``mu^S`` as an exact rational."""
    n_card = sset.cardinality
    total = sum((_xi_exact(params.tilt, n) for n in sset.sites), Fraction(0))
    return Fraction(params.nu) / n_card + Fraction(params.f) * total / n_card


def energy_of(sset: SolutionSet, params: ModelParams) -> float:
    return float(energy_exact(sset, params))


@dataclass(frozen=True)
class FiniteModeSolution:
    solution_set: SolutionSet
    mu: float
    amplitudes: dict[int, float]
    signs: tuple[int, ...]
    mu_exact: Fraction | None = None

    def d(self, n: int) -> float:
        return self.amplitudes.get(int(n), 0.0)

    def vector(self, halfwidth: int) -> np.ndarray:
        """Amplitudes on sites ``-halfwidth .. halfwidth``."""
        out = np.zeros(2 * halfwidth + 1)
        for n, value in self.amplitudes.items():
            if abs(n) > halfwidth:
                raise WindowError(n, halfwidth)
            out[n + halfwidth] = value
        return out

    @property
    def normalization_defect(self) -> float:
        return abs(math.fsum(v * v for v in self.amplitudes.values()) - 1.0)

    def residual(self, params: ModelParams, sites: Sequence[int] | None = None) -> np.ndarray:
        """``(mu - nu d_n^2) d_n - f xi(n) d_n`` at each site (default: the set)."""
        if sites is None:
            sites = self.solution_set.sites
        d = np.array([self.d(n) for n in sites])
        xi = np.asarray(params.tilt.evaluate(np.asarray(sites)), dtype=float)
        return (self.mu - params.nu * d * d) * d - params.f * xi * d

    def flipped(self) -> "FiniteModeSolution":
        return FiniteModeSolution(
            self.solution_set,
            self.mu,
            {n: -v for n, v in self.amplitudes.items()},
            tuple(-s for s in self.signs),
            self.mu_exact,
        )


def amplitudes(
    sset: SolutionSet,
    params: ModelParams,
    signs: Sequence[int] | None = None,
) -> FiniteModeSolution:
    """Normalized finite-mode solution on ``sset`` with the given sign pattern."""
    sites = sset.sites
    if signs is None:
        signs = (1,) * len(sites)
    signs = tuple(int(s) for s in signs)
    if len(signs) != len(sites) or any(s not in (1, -1) for s in signs):
        raise ValueError(f"need one sign (+1/-1) per site, got {signs}")
    mu = energy_exact(sset, params)
    if params.nu == 0:
        if len(sites) != 1:
            raise ValueError("nu = 0 admits only single-site solutions")
        return FiniteModeSolution(sset, float(mu), {sites[0]: float(signs[0])}, signs, mu)
    nu = Fraction(params.nu)
    f = Fraction(params.f)
    amps = {}
    for n, s in zip(sites, signs):
        deficit = mu - f * _xi_exact(params.tilt, n)
        if deficit <= 0:
            raise PositivityError(n, float(deficit))
        amps[n] = s * math.sqrt(deficit / nu)
    return FiniteModeSolution(sset, float(mu), amps, signs, mu)


def sign_variants(sol: FiniteModeSolution) -> list[FiniteModeSolution]:
    """All ``2^|S|`` sign patterns; the first keeps every amplitude positive."""
    sites = sol.solution_set.sites
    magnitudes = [abs(sol.amplitudes[n]) for n in sites]
    out = []
    for pattern in itertools.product((1, -1), repeat=len(sites)):
        amps = {n: s * m for n, s, m in zip(sites, pattern, magnitudes)}
        out.append(FiniteModeSolution(sol.solution_set, sol.mu, amps, pattern, sol.mu_exact))
    return out


# --------------------------------------------------------------------------
# bifurcation structure
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Threshold:
    value: int
    new_sets: tuple[SolutionSet, ...]
    consecutive_cardinality: int | None

    @property
    def description(self) -> str:
        text = f"nu/f > {self.value}: {len(self.new_sets)} new set(s) " + ", ".join(
            str(s) for s in self.new_sets
        )
        if self.consecutive_cardinality is not None:
            text += f"; consecutive {self.consecutive_cardinality}-site branch appears"
        return text


def sets_with_key(m: int, max_card: int | None = None) -> list[SolutionSet]:
    """Sets with ``min S = 0`` and ``sum_S (max S - l) == m`` (linear tilt)."""
    out = []
    for parts in distinct_partitions(m):
        reflected = (0,) + parts  # S* = {max S - l}
        top = parts[0]
        offsets = tuple(sorted(top - p for p in reflected))
        if max_card is None or len(offsets) <= max_card:
            out.append(SolutionSet(0, offsets))
    out.sort(key=SolutionSet.sort_key)
    return out


def bifurcation_thresholds(max_card: int, max_threshold: int | None = None) -> list[Threshold]:
    """New solution-sets born as ``nu/f`` crosses each integer ``m``.

    ``max_threshold`` defaults to ``max_card (max_card - 1) / 2``, the point where
    the consecutive ``max_card``-site branch appears.
    """
    if max_card < 2:
        raise ValueError("max_card must be >= 2")
    if max_threshold is None:
        max_threshold = max_card * (max_card - 1) // 2
    consecutive = {k * (k - 1) // 2: k for k in range(2, max_card + 1)}
    return [
        Threshold(m, tuple(sets_with_key(m, max_card)), consecutive.get(m))
        for m in range(1, max_threshold + 1)
    ]


@dataclass(frozen=True)
class DiagramRow:
    nu_over_f: float
    set_id: str
    cardinality: int
    mu_over_f: float


def diagram_data(
    nu_over_f_values: Sequence[float],
    max_card: int | None = None,
    rung_j: int = 0,
) -> list[DiagramRow]:
    """``mu/f`` of every admissible set (``min S = rung_j``) at each ratio.

    Uses ``f = 1`` and a clamped linear tilt wide enough for all candidates.
    """
    rows = []
    for x in nu_over_f_values:
        x = float(x)
        if x < 0 or not math.isfinite(x):
            raise ValueError(f"nu/f must be finite and >= 0, got {x}")
        window = max(1, abs(rung_j) + math.ceil(x) + 1)
        params = ModelParams(nu=x, f=1.0, window_N=window)
        for sset in enumerate_solution_sets(params, rung_j, max_card):
            rows.append(DiagramRow(x, sset.label, sset.cardinality, energy_of(sset, params)))
    return rows

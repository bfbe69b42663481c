"""Independent brute-force references used by the test-suite.

None of these import the package; they recompute quantities from their
definitions by exhaustive search.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np


def q_bruteforce(n: int) -> int:
    """Subsets of {1..n} summing to n."""
    if n == 0:
        return 1
    # subset-sum counting over bitmasks of {1..n}, chunked to bound memory
    parts = np.arange(1, n + 1, dtype=np.int64)
    count = 0
    chunk_bits = min(n, 20)
    low = np.arange(1 << chunk_bits, dtype=np.int64)
    low_bits = ((low[:, None] >> np.arange(chunk_bits)) & 1).astype(np.int64)
    low_sums = low_bits @ parts[:chunk_bits]
    high_parts = parts[chunk_bits:]
    for mask in range(1 << len(high_parts)):
        s = sum(int(p) for i, p in enumerate(high_parts) if mask >> i & 1)
        if s > n:
            continue
        count += int(np.count_nonzero(low_sums == n - s))
    return count


def xi_clamped(n: int, N: int) -> int:
    return int(np.sign(n)) * min(abs(n), N)


def admissible_direct(sites, nu: float, f: float, N: int) -> bool:
    """xi(max) < nu/(f |S|) + mean xi, in exact arithmetic."""
    xi = [Fraction(xi_clamped(n, N)) for n in sites]
    k = len(xi)
    return max(xi) < Fraction(nu) / (Fraction(f) * k) + sum(xi) / k


def bruteforce_sets(nu_over_f: float, j: int, K: int, N: int, max_card=None):
    """All subsets of {j..j+K} containing j that satisfy the admissibility test.

    Subsets are scanned as bitmasks with numpy; the inequality
    ``xi(max) < nu/(f |S|) + mean xi`` is evaluated in float and every
    borderline case (within 1e-9) is re-decided in exact arithmetic.
    """
    sites = np.arange(j + 1, j + K + 1)
    xi_rest = np.array([xi_clamped(int(n), N) for n in sites], dtype=float)
    xi0 = float(xi_clamped(j, N))
    masks = np.arange(1 << K, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(K)) & 1).astype(bool)
    card = bits.sum(axis=1) + 1
    total = bits @ xi_rest + xi0
    top = np.max(np.where(bits, xi_rest, -np.inf), axis=1, initial=-np.inf)
    top = np.maximum(top, xi0)
    rhs = nu_over_f / card + total / card
    ok = top < rhs
    close = np.abs(top - rhs) < 1e-9
    if max_card is not None:
        ok &= card <= max_card
        close &= card <= max_card
    for idx in np.flatnonzero(close):
        chosen = (j,) + tuple(int(n) for n in sites[bits[idx]])
        ok[idx] = admissible_direct(chosen, nu_over_f, 1.0, N)
    out = [(0,) + tuple(int(n - j) for n in sites[bits[idx]]) for idx in np.flatnonzero(ok)]
    return sorted(out, key=lambda o: (len(o), o))


class SubsetKeyTable:
    """Keys sum_S(max S - l) of every S = {0} u T, T subset of {1..K}."""

    def __init__(self, K: int = 20):
        masks = np.arange(1, 1 << K, dtype=np.int64)
        bits = ((masks[:, None] >> np.arange(K)) & 1).astype(np.int64)
        values = np.arange(1, K + 1, dtype=np.int64)
        card = bits.sum(axis=1) + 1
        top = np.max(np.where(bits == 1, values, 0), axis=1)
        total = bits @ values
        self.keys = np.sort(card * top - total)

    def count_below(self, x: float) -> int:
        """Multi-site sets with key < x."""
        return int(np.searchsorted(self.keys, x, side="left"))

"""Parameter records shared by the lattice-side modules."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TILT_KINDS = ("linear-clamped", "linear-tapered")


def smoothstep(t):
    """Cubic smoothstep ``3t^2 - 2t^3`` clipped to [0, 1]."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def tapered_linear(x, half_width: float, taper: float):
    """``x`` on ``|x| <= half_width``, smoothly switched off over ``taper``.

    Returns ``x * (1 - smoothstep((|x| - half_width) / taper))``, which is
    C^1, vanishes for ``|x| >= half_width + taper`` and never exceeds
    ``|x|`` in magnitude. ``taper == 0`` gives a hard cutoff.
    """
    x = np.asarray(x, dtype=float)
    excess = np.abs(x) - half_width
    if taper > 0:
        switch = smoothstep(excess / taper)
    else:
        switch = (excess > 0).astype(float)
    return x * (1.0 - switch)


@dataclass(frozen=True)
class TiltProfile:
    """Bounded site tilt ``xi(n)``, equal to ``n`` on ``|n| <= N``.

    ``linear-clamped`` extends by ``sign(n) * min(|n|, N)``. ``linear-tapered``
    stays linear up to ``N + 1/2`` and switches off over ``taper_width`` sites
    with the same profile used for the continuum potential ``W``.
    """

    N: int
    kind: str = "linear-clamped"
    taper_width: int = 0

    def __post_init__(self):
        if self.kind not in TILT_KINDS:
            raise ValueError(f"unknown tilt kind {self.kind!r}; expected one of {TILT_KINDS}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"tilt window N must be an integer >= 1, got {self.N}")
        if int(self.taper_width) != self.taper_width or self.taper_width < 0:
            raise ValueError(f"taper_width must be a nonnegative integer, got {self.taper_width}")

    def evaluate(self, n):
        """Tilt at site(s) ``n``; scalar in, float out."""
        n_arr = np.asarray(n)
        if self.kind == "linear-clamped":
            out = np.sign(n_arr) * np.minimum(np.abs(n_arr), self.N)
            out = out.astype(float)
        else:
            out = tapered_linear(n_arr, self.N + 0.5, self.taper_width)
        if np.ndim(n) == 0:
            return float(out)
        return out

    __call__ = evaluate

    @property
    def bound(self) -> float:
        if self.kind == "linear-clamped":
            return float(self.N)
        return float(self.N + self.taper_width + 0.5)


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless lattice parameters ``(nu, f, beta)`` plus the linear window."""

    nu: float
    f: float
    beta: float = 0.0
    window_N: int = 10
    tilt: TiltProfile = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        for name in ("nu", "f", "beta"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value}")
        if int(self.window_N) != self.window_N or self.window_N < 1:
            raise ValueError(f"window_N must be an integer >= 1, got {self.window_N}")
        if self.tilt is None:
            object.__setattr__(self, "tilt", TiltProfile(int(self.window_N)))
        elif self.tilt.N != self.window_N:
            raise ValueError(
                f"tilt window {self.tilt.N} does not match window_N {self.window_N}"
            )

    @property
    def nu_over_f(self) -> float:
        return self.nu / self.f if self.f > 0 else float("inf")

    def xi(self, n):
        return self.tilt.evaluate(n)

    def with_beta(self, beta: float) -> "ModelParams":
        return ModelParams(self.nu, self.f, beta, self.window_N, self.tilt)

    def with_nu(self, nu: float) -> "ModelParams":
        return ModelParams(nu, self.f, self.beta, self.window_N, self.tilt)

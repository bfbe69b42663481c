"""Stationary solutions of the discrete nonlinear Stark-Wannier equation.

Submodules
----------
anticontinuous
    Finite-mode solutions of the decoupled (zero hopping) lattice, their
    enumeration and the bifurcation counting function.
lattice
    The tilted cubic lattice equation with hopping, Newton continuation.
semiclassical
    Bands, localized first-band basis and effective lattice parameters of
    ``-h^2 d^2/dx^2 + V0 sin^2(kL x)``.
continuum
    Orthogonal correction, assembled continuum solutions and residuals.
cli
    Command-line front end (``swlab``).
"""

from .params import ModelParams, TiltProfile

__all__ = ["ModelParams", "TiltProfile"]
__version__ = "0.1.0"

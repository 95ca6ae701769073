"""The entire functions phi_0(z) = exp(z), phi_j(z) = int_0^1 exp((1-xi)z) xi^(j-1)/(j-1)! dxi.

Evaluation switches between a 31-term Taylor series for |z| < 1/2 and the
upward recurrence phi_{j+1}(z) = (phi_j(z) - 1/j!)/z otherwise; truncation
error at the switchover is below 1e-17.  Arguments in this solver are
always purely imaginary (z = -i*h*omega) but general complex z is
supported.  Everything here is vectorized over numpy arrays and stateless.
"""

from __future__ import annotations

from math import factorial

import numpy as np

__all__ = ["phi", "phi_diag", "phi_series_oracle"]

_SERIES_TERMS = 30  # highest series index n; terms n = 0..30
_SWITCH_RADIUS = 0.5


def phi(j: int, z):
    """phi_j evaluated at complex scalar or array z."""
    if j < 0:
        raise ValueError(f"phi order must be >= 0, got {j}")
    z = np.asarray(z, dtype=np.complex128)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty_like(z)

    small = np.abs(z) < _SWITCH_RADIUS
    if small.any():
        zs = z[small]
        acc = np.zeros_like(zs)
        for n in range(_SERIES_TERMS, -1, -1):
            acc = acc * zs + 1.0 / factorial(n + j)
        out[small] = acc
    if (~small).any():
        zl = z[~small]
        val = np.exp(zl)
        for i in range(j):
            val = (val - 1.0 / factorial(i)) / zl
        out[~small] = val
    return complex(out[0]) if scalar else out


def phi_diag(j: int, g, h: float, scale: float = 1.0) -> np.ndarray:
    """Per-mode multipliers phi_j(scale * v_j) with v_j = -i*h*omega_j.

    This is the action of phi_j(i*h*A) on the mode spectrum: the Laplacian
    part A maps mode j to -omega_j, so i*h*A contributes -i*h*omega_j.
    """
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    return phi(j, scale * (-1j * h * g.omega))


def phi_series_oracle(j: int, z: complex, terms: int) -> complex:
    """Plain partial sum sum_{n=0}^{terms-1} z^n/(n+j)!; test cross-check only."""
    if terms < 1:
        raise ValueError(f"terms must be >= 1, got {terms}")
    acc = 0.0 + 0.0j
    for n in range(terms - 1, -1, -1):
        acc = acc * z + 1.0 / factorial(n + j)
    return complex(acc)

"""Quadrature rules on [0,1] for the continuous-stage integral."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["QuadRule", "gauss_legendre", "midpoint", "quad_by_name"]


@dataclass(frozen=True, eq=False)
class QuadRule:
    name: str
    nodes: np.ndarray    # strictly increasing, in (0,1)
    weights: np.ndarray  # positive, sum to 1

    def __len__(self) -> int:
        return len(self.nodes)


def gauss_legendre(n: int) -> QuadRule:
    """n-point Gauss-Legendre on [0,1], exact through degree 2n-1."""
    if n < 1:
        raise ValueError(f"need n >= 1 nodes, got {n}")
    x, w = np.polynomial.legendre.leggauss(n)
    return QuadRule(name=f"gl{n}", nodes=(x + 1.0) / 2.0, weights=w / 2.0)


def midpoint() -> QuadRule:
    return QuadRule(name="mp", nodes=np.array([0.5]), weights=np.array([1.0]))


def quad_by_name(name: str) -> QuadRule:
    """Parse 'mp' or 'gl2'..'gl10'."""
    name = name.strip().lower()
    if name == "mp":
        return midpoint()
    if name.startswith("gl"):
        n = int(name[2:])
        if 1 <= n <= 10:
            return gauss_legendre(n)
    raise ValueError(f"unknown quadrature rule {name!r} (expected mp or gl1..gl10)")

"""Coefficient functions C_tau(V), A_{tau,sigma}(V) of the continuous-stage
exponential integrators EP1, EP2(m), EP3, plus the explicit ETD2 baseline,
evaluated per Fourier mode at the scalar argument z = -i*h*omega.

EP1 and EP2 use their closed forms directly.  EP3 is assembled from its
fitting nodes {0, 1/3, c2, 1}: with l_k the Lagrange basis over the nodes,

    C_tau      = sum_k l_k(tau) exp(c_k z),
    A_tau,sigma = -sum_{k>p} (c_k - c_p) phi_1((c_k - c_p) z) l_k(tau) l_p'(sigma),

which reproduces the EP1/EP2 closed forms exactly at their node sets and
satisfies the energy-preservation conditions (checked numerically by
`ep_condition_residuals`).  All coefficient functions are polynomials in
tau (exponentials in tau for ETD2), so the tau-derivatives are exact.

Everything is vectorized over z and stateless.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .phifun import phi
from .quadrature import QuadRule, gauss_legendre

__all__ = [
    "Scheme",
    "ep1",
    "ep2",
    "ep3",
    "etd2",
    "scheme_by_name",
    "EP3_C1",
    "EP3_C2",
    "coeff_C",
    "coeff_A",
    "coeff_dC",
    "coeff_dA",
    "ep_condition_residuals",
    "ep_residual_grid",
    "default_quadrature",
]

EP3_C1 = 1.0 / 3.0
EP3_C2 = (14.0 + (71.0 - 9.0 * np.sqrt(58.0)) ** (1.0 / 3.0)
          + (71.0 + 9.0 * np.sqrt(58.0)) ** (1.0 / 3.0)) / 18.0


@dataclass(frozen=True)
class Scheme:
    """One of the integrators; `m` only applies to ep2."""

    name: str
    m: float = 0.5

    @property
    def label(self) -> str:
        if self.name == "ep2" and self.m != 0.5:
            return f"ep2[m={self.m:g}]"
        return self.name

    @property
    def nodes(self) -> tuple[float, ...]:
        """Fitting nodes c_0..c_s (ETD2 fits at every tau)."""
        return {
            "ep1": (0.0, 1.0),
            "ep2": (0.0, self.m, 1.0),
            "ep3": (0.0, EP3_C1, EP3_C2, 1.0),
            "etd2": (0.0, 1.0),
        }[self.name]

    @property
    def implicit(self) -> bool:
        return self.name != "etd2"


def ep1() -> Scheme:
    return Scheme("ep1")


def ep2(m: float = 0.5) -> Scheme:
    if m in (0.0, 1.0):
        raise ValueError("ep2 parameter m must not be 0 or 1")
    return Scheme("ep2", m=m)


def ep3() -> Scheme:
    return Scheme("ep3")


def etd2() -> Scheme:
    return Scheme("etd2")


def scheme_by_name(name: str, m: float = 0.5) -> Scheme:
    name = name.strip().lower()
    if name == "ep1":
        return ep1()
    if name == "ep2":
        return ep2(m)
    if name == "ep3":
        return ep3()
    if name == "etd2":
        return etd2()
    raise ValueError(f"unknown scheme {name!r} (expected ep1|ep2|ep3|etd2)")


# ---------------------------------------------------------------------------
# Lagrange-basis machinery (used by EP3 and by nothing else at runtime)

def _lagrange_basis(nodes: tuple[float, ...]) -> list[np.ndarray]:
    """Coefficients (ascending powers) of the Lagrange basis over `nodes`."""
    basis = []
    for k, ck in enumerate(nodes):
        c = np.array([1.0])
        for i, ci in enumerate(nodes):
            if i != k:
                c = np.convolve(c, np.array([-ci, 1.0])) / (ck - ci)
        basis.append(c)
    return basis


def _polyder(c: np.ndarray) -> np.ndarray:
    return c[1:] * np.arange(1, len(c))


def _polyval(c: np.ndarray, x):
    acc = np.zeros_like(np.asarray(x, dtype=float))
    for a in c[::-1]:
        acc = acc * x + a
    return acc


@lru_cache(maxsize=None)
def _node_data(nodes: tuple[float, ...]):
    basis = _lagrange_basis(nodes)
    dbasis = [_polyder(c) for c in basis]
    pairs = [(k, p) for k in range(len(nodes)) for p in range(k)]
    return basis, dbasis, pairs


def _nodal_C(nodes, tau, z):
    basis, _, _ = _node_data(nodes)
    return sum(_polyval(basis[k], tau) * np.exp(ck * z) for k, ck in enumerate(nodes))


def _nodal_dC(nodes, tau, z):
    _, dbasis, _ = _node_data(nodes)
    return sum(_polyval(dbasis[k], tau) * np.exp(ck * z) for k, ck in enumerate(nodes))


def _nodal_A(nodes, tau, sigma, z, dtau: bool):
    basis, dbasis, pairs = _node_data(nodes)
    taufun = dbasis if dtau else basis
    acc = np.zeros_like(np.asarray(z, dtype=np.complex128))
    for k, p in pairs:
        d = nodes[k] - nodes[p]
        acc = acc - d * phi(1, d * z) * _polyval(taufun[k], tau) * _polyval(dbasis[p], sigma)
    return acc


# ---------------------------------------------------------------------------
# EP2 closed forms

def _ep2_a(m: float, z):
    p1 = phi(1, z)
    p1m = phi(1, m * z)
    p1c = phi(1, (1.0 - m) * z)
    a11 = (1 + m) / (m * (1 - m)) * p1m + (m + 1) / (m - 1) * p1 + p1c / (1 - m)
    a22 = 2.0 / (m * (1 - m)) * (p1m - p1 + p1c)
    a21 = (1 + 1 / m) * p1 - (1 / m) * p1c - a11
    a12 = -(2 / m) * (p1 - p1c) - a22
    return a11, a21, a12, a22


# ---------------------------------------------------------------------------
# ETD2: explicit exponential RK2 cast as a continuous-stage pair, with the
# sigma-dependence reading the two f-samples through linear interpolation.

def _etd2_ab(z):
    p1 = phi(1, z)
    p2 = phi(2, z)
    return 4.0 * p1 - 6.0 * p2, 12.0 * p2 - 6.0 * p1


def coeff_C(scheme: Scheme, tau: float, z):
    """C_tau at scalar argument z (vectorized over z)."""
    z = np.asarray(z, dtype=np.complex128)
    if scheme.name == "ep1":
        return (1.0 - tau) + tau * np.exp(z)
    if scheme.name == "ep2":
        m = scheme.m
        return ((tau - 1) * (tau - m) / m
                + tau * (tau - 1) / (m * (m - 1)) * np.exp(m * z)
                + tau * (m - tau) / (m - 1) * np.exp(z))
    if scheme.name == "ep3":
        return _nodal_C(scheme.nodes, tau, z)
    if scheme.name == "etd2":
        return np.exp(tau * z)
    raise ValueError(scheme.name)


def coeff_dC(scheme: Scheme, tau: float, z):
    z = np.asarray(z, dtype=np.complex128)
    if scheme.name == "ep1":
        return np.exp(z) - 1.0 + 0.0 * z
    if scheme.name == "ep2":
        m = scheme.m
        return ((2 * tau - 1 - m) / m
                + (2 * tau - 1) / (m * (m - 1)) * np.exp(m * z)
                + (m - 2 * tau) / (m - 1) * np.exp(z))
    if scheme.name == "ep3":
        return _nodal_dC(scheme.nodes, tau, z)
    if scheme.name == "etd2":
        return z * np.exp(tau * z)
    raise ValueError(scheme.name)


def coeff_A(scheme: Scheme, tau: float, sigma: float, z):
    """A_{tau,sigma} at scalar argument z (vectorized over z)."""
    z = np.asarray(z, dtype=np.complex128)
    if scheme.name == "ep1":
        return tau * phi(1, z)
    if scheme.name == "ep2":
        a11, a21, a12, a22 = _ep2_a(scheme.m, z)
        return a11 * tau + a21 * tau**2 + a12 * tau * sigma + a22 * tau**2 * sigma
    if scheme.name == "ep3":
        return _nodal_A(scheme.nodes, tau, sigma, z, dtau=False)
    if scheme.name == "etd2":
        a, b = _etd2_ab(z)
        return a * tau + b * tau * sigma
    raise ValueError(scheme.name)


def coeff_dA(scheme: Scheme, tau: float, sigma: float, z):
    z = np.asarray(z, dtype=np.complex128)
    if scheme.name == "ep1":
        return phi(1, z)
    if scheme.name == "ep2":
        a11, a21, a12, a22 = _ep2_a(scheme.m, z)
        return a11 + 2 * a21 * tau + a12 * sigma + 2 * a22 * tau * sigma
    if scheme.name == "ep3":
        return _nodal_A(scheme.nodes, tau, sigma, z, dtau=True)
    if scheme.name == "etd2":
        a, b = _etd2_ab(z)
        return a + b * sigma
    raise ValueError(scheme.name)


# ---------------------------------------------------------------------------
# Energy-preservation conditions, reduced per mode.
#
# On one Fourier mode the mass operator acts as a real scalar and K = h*J*M
# as the rotation generator, so operator transposition becomes complex
# conjugation and the three conditions collapse to scalar identities in
# z = -i*theta:
#
#   r1 = A_{0,sigma}(z)
#   r2 = conj(e^z) z A_{1,tau}(z) + conj(C'_tau(z))
#   r3 = conj(z A_{1,tau}(z)) z A_{1,sigma}(z) + z A'_{tau,sigma}(z)
#        + conj(z A'_{sigma,tau}(z))
#
# They vanish for EP1-EP3 and generally not for ETD2.

def ep_condition_residuals(scheme: Scheme, theta, tau: float, sigma: float):
    """Residuals (r1, r2, r3) at theta = h*omega; theta must be real."""
    theta = np.asarray(theta)
    if np.iscomplexobj(theta):
        raise ValueError("theta must be real (z = -i*theta is purely imaginary)")
    z = -1j * np.asarray(theta, dtype=float)
    r1 = coeff_A(scheme, 0.0, sigma, z)
    a1t = coeff_A(scheme, 1.0, tau, z)
    r2 = np.conj(np.exp(z)) * z * a1t + np.conj(coeff_dC(scheme, tau, z))
    a1s = coeff_A(scheme, 1.0, sigma, z)
    r3 = (np.conj(z * a1t) * z * a1s
          + z * coeff_dA(scheme, tau, sigma, z)
          + np.conj(z * coeff_dA(scheme, sigma, tau, z)))
    return r1, r2, r3


def ep_residual_grid(scheme: Scheme, thetas, taus, sigmas):
    """Max |r1|, |r2|, |r3| over a theta x tau x sigma sample grid."""
    thetas = np.asarray(thetas, dtype=float)
    m1 = m2 = m3 = 0.0
    for tau in np.asarray(taus, dtype=float):
        for sigma in np.asarray(sigmas, dtype=float):
            r1, r2, r3 = ep_condition_residuals(scheme, thetas, tau, sigma)
            m1 = max(m1, float(np.abs(r1).max()))
            m2 = max(m2, float(np.abs(r2).max()))
            m3 = max(m3, float(np.abs(r3).max()))
    return m1, m2, m3


def default_quadrature(scheme: Scheme) -> QuadRule:
    """Three-point Gauss-Legendre for every scheme."""
    return gauss_legendre(3)

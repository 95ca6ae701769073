"""Periodic Fourier pseudospectral discretization of the cubic NLS.

The interval is [-L/2, L/2) with 2M collocation points x_k = L*k/(2M),
k = -M..M-1.  A state is represented by its 2M Fourier coefficients
u_j, j = -M..M-1 (natural order), with wavenumbers k_j = 2*pi*j/L and
linear-part frequencies omega_j = k_j**2 / eps.  Transforms go through
the FFT; all operations here are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid",
    "FourierState",
    "PhysicalState",
    "Observables",
    "build_grid",
    "to_physical",
    "to_fourier",
    "nonlinearity",
    "observables",
    "sobolev_norm",
    "weighted_action_deviation",
]


@dataclass(frozen=True, eq=False)
class Grid:
    """Spatial discretization: 2M modes on a length-L periodic interval."""

    M: int
    L: float
    eps: float
    lam: float
    j: np.ndarray = field(repr=False)      # mode indices -M..M-1
    k: np.ndarray = field(repr=False)      # wavenumbers 2*pi*j/L
    omega: np.ndarray = field(repr=False)  # k**2/eps
    x: np.ndarray = field(repr=False)      # collocation points

    @property
    def n(self) -> int:
        return 2 * self.M


@dataclass(frozen=True, eq=False)
class FourierState:
    """Fourier coefficients (natural order j = -M..M-1) at time t."""

    coeffs: np.ndarray
    t: float = 0.0


@dataclass(frozen=True, eq=False)
class PhysicalState:
    """Collocation samples u(x_k), k = -M..M-1, at time t."""

    values: np.ndarray
    t: float = 0.0


@dataclass(frozen=True)
class Observables:
    energy: float
    density: float
    momentum: float
    actions: np.ndarray


def build_grid(M: int, L: float, eps: float, lam: float) -> Grid:
    """Build the periodic grid; rejects M < 2 and non-positive L or eps."""
    if M < 2:
        raise ValueError(f"M must be >= 2, got {M}")
    if L <= 0:
        raise ValueError(f"L must be positive, got {L}")
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    j = np.arange(-M, M)
    k = 2.0 * np.pi * j / L
    omega = k**2 / eps
    x = L * np.arange(-M, M) / (2 * M)
    return Grid(M=M, L=float(L), eps=float(eps), lam=float(lam),
                j=j, k=k, omega=omega, x=x)


def _check_len(g: Grid, arr: np.ndarray) -> None:
    if arr.shape[-1] != g.n:
        raise ValueError(f"state length {arr.shape[-1]} does not match grid (2M = {g.n})")


# Natural order j=-M..M-1 <-> numpy FFT order [0..M-1, -M..-1] via fftshift.
# values[k] = sum_j u_j exp(2i*pi*j*k/(2M)) is 2M * inverse DFT in FFT order.

def coeffs_to_values(coeffs: np.ndarray) -> np.ndarray:
    """Natural-order coefficients -> natural-order collocation values (batched on axis -1)."""
    n = coeffs.shape[-1]
    return np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(coeffs, axes=-1), axis=-1), axes=-1) * n


def values_to_coeffs(values: np.ndarray) -> np.ndarray:
    """Exact inverse of :func:`coeffs_to_values`."""
    n = values.shape[-1]
    return np.fft.fftshift(np.fft.fft(np.fft.ifftshift(values, axes=-1), axis=-1), axes=-1) / n


def to_physical(g: Grid, s: FourierState) -> PhysicalState:
    _check_len(g, s.coeffs)
    return PhysicalState(values=coeffs_to_values(s.coeffs), t=s.t)


def to_fourier(g: Grid, p: PhysicalState) -> FourierState:
    _check_len(g, p.values)
    return FourierState(coeffs=values_to_coeffs(p.values), t=p.t)


def cubic_coeffs(coeffs: np.ndarray, lam: float, dealias_mode_cut: int | None = None) -> np.ndarray:
    """Fourier coefficients of -i*lam*|u|^2*u via collocation, natural order.

    With `dealias_mode_cut` the output modes |j| >= cut are zeroed (2/3-rule
    style); plain collocation otherwise.
    """
    v = coeffs_to_values(coeffs)
    w = -1j * lam * (v.real**2 + v.imag**2) * v
    out = values_to_coeffs(w)
    if dealias_mode_cut is not None:
        n = coeffs.shape[-1]
        j = np.arange(-(n // 2), n // 2)
        out = np.where(np.abs(j) >= dealias_mode_cut, 0.0, out)
    return out


def nonlinearity(g: Grid, s: FourierState, dealias: bool = False) -> FourierState:
    """Collocation nonlinearity f(u) = -i*lam*Q(|u|^2 u) in Fourier space."""
    _check_len(g, s.coeffs)
    cut = (2 * g.M) // 3 if dealias else None
    return FourierState(coeffs=cubic_coeffs(s.coeffs, g.lam, cut), t=s.t)


def observables(g: Grid, s: FourierState) -> Observables:
    """Energy, density, momentum and the action spectrum of a state.

    energy   = 1/(2 eps) sum_j k_j^2 |u_j|^2 + lam/4 * mean_k |u(x_k)|^4
    density  = sum_j |u_j|^2
    momentum = 2 sum_j k_j |u_j|^2
    actions  I_j = |u_j|^2 / 2
    """
    _check_len(g, s.coeffs)
    a2 = np.abs(s.coeffs) ** 2
    grad = 0.5 / g.eps * float(np.sum(g.k**2 * a2))
    v = coeffs_to_values(s.coeffs)
    quart = g.lam / 4.0 * float(np.mean((v.real**2 + v.imag**2) ** 2))
    return Observables(
        energy=grad + quart,
        density=float(np.sum(a2)),
        momentum=2.0 * float(np.sum(g.k * a2)),
        actions=0.5 * a2,
    )


def sobolev_norm(g: Grid, s: FourierState, sidx: float) -> float:
    """Discrete Sobolev norm (sum_j (1+k_j^2)^sidx |u_j|^2)^(1/2); sidx=0 is L^2."""
    if sidx < 0:
        raise ValueError(f"sidx must be >= 0, got {sidx}")
    _check_len(g, s.coeffs)
    return float(np.sqrt(np.sum((1.0 + g.k**2) ** sidx * np.abs(s.coeffs) ** 2)))


def weighted_action_deviation(g: Grid, s: FourierState, s0: FourierState,
                              sidx: float, eps_tilde: float) -> float:
    """sum_j |omega_j|^sidx |I_j(s) - I_j(s0)| / eps_tilde^2.

    The j=0 term always carries weight zero (omega_0 = 0), including at
    sidx = 0.
    """
    if eps_tilde <= 0:
        raise ValueError(f"eps_tilde must be positive, got {eps_tilde}")
    _check_len(g, s.coeffs)
    _check_len(g, s0.coeffs)
    dI = 0.5 * np.abs(np.abs(s.coeffs) ** 2 - np.abs(s0.coeffs) ** 2)
    w = np.where(g.j == 0, 0.0, np.abs(g.omega) ** sidx)
    return float(np.sum(w * dI)) / eps_tilde**2

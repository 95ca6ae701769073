"""Time integration: quadrature discretization of the stage integral, the
fixed-point stage solve, the one-step map, and the evolution loop.

A step of an implicit scheme solves the coupled stage system

    U_q = C_{c_q} u^n + h sum_r w_r A_{c_q,c_r} fhat(U_r),   q = 1..Q,

by fixed-point iteration started from the free flight U_q = C_{c_q} u^n,
then forms u^{n+1} = e^V u^n + h sum_r w_r A_{1,c_r} fhat(U_r).  The
iteration stops at the absolute tolerance, or accepts the most
self-consistent iterate once the residual has stopped improving (rounding
floor); an iteration that never improves on its first residual is reported
as non-convergent and raises.  ETD2 is explicit and applied directly.

Per-mode multipliers depend only on (scheme, grid, h, quadrature) and are
precomputed by `Stepper`; with 2M collocation points the transforms run
through dense DFT matrices (faster than FFT dispatch at the mode counts
used here).  A numba kernel is used when available; the numpy path is
equivalent and always present.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quadrature import QuadRule, gauss_legendre
from .schemes import Scheme, coeff_A, coeff_C, ep1
from .spectral import FourierState, Grid

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False

__all__ = [
    "SolverConfig",
    "StepReport",
    "StepConvergenceError",
    "Stepper",
    "step",
    "evolve",
    "ep1_two_step_residual",
    "reference_solution",
]

_CONVERGED, _STAGNATED, _DIVERGED = 0, 1, 2
_DIVERGENCE_GUARD = 1e6  # bail once the residual exceeds this multiple of the first


@dataclass(frozen=True)
class SolverConfig:
    """Fixed-point controls: absolute l-inf tolerance on the coefficients."""

    fp_tol: float = 1e-14
    fp_max: int = 100
    stagnation_window: int = 3

    def __post_init__(self):
        if self.fp_tol <= 0:
            raise ValueError("fp_tol must be positive")
        if self.fp_max < 1:
            raise ValueError("fp_max must be >= 1")


@dataclass(frozen=True)
class StepReport:
    iterations: int
    final_residual: float
    converged: bool
    stagnated: bool = False


class StepConvergenceError(RuntimeError):
    """Fixed point made no progress within fp_max iterations."""

    def __init__(self, residual: float, iterations: int, step_index: int | None = None):
        self.residual = residual
        self.iterations = iterations
        self.step_index = step_index
        at = "" if step_index is None else f" at step {step_index}"
        super().__init__(
            f"stage fixed point did not converge{at}: residual {residual:.3e} "
            f"after {iterations} iterations (reduce h)")


def _dft_matrices(g: Grid):
    """Dense transforms in natural mode order: values = coeffs @ ET."""
    jk = np.outer(g.j, g.j)
    ET = np.exp(2j * np.pi * jk / g.n).T.copy()
    EinvT = np.conj(ET) / g.n
    return ET, EinvT


if _HAVE_NUMBA:

    @numba.njit(cache=True)
    def _fp_kernel(u, Cq, WA, WA1, expz, ET, NLmat,
                   fp_tol, fp_max, stag_window, guard):  # pragma: no cover - jit
        Q, N = Cq.shape
        CqU0 = np.empty((Q, N), dtype=np.complex128)
        for q in range(Q):
            for n in range(N):
                CqU0[q, n] = Cq[q, n] * u[n]
        U = CqU0.copy()
        Unew = np.empty_like(U)
        bestU = U.copy()
        best = np.inf
        first = np.inf
        since_best = 0
        it = 0
        status = _DIVERGED
        while it < fp_max:
            V = np.dot(U, ET)
            for q in range(Q):
                for n in range(N):
                    v = V[q, n]
                    V[q, n] = (v.real * v.real + v.imag * v.imag) * v
            F = np.dot(V, NLmat)
            res2 = 0.0
            for q in range(Q):
                for n in range(N):
                    acc = CqU0[q, n]
                    for r in range(Q):
                        acc += WA[q, r, n] * F[r, n]
                    d = acc - U[q, n]
                    m2 = d.real * d.real + d.imag * d.imag
                    if m2 > res2:
                        res2 = m2
                    Unew[q, n] = acc
            res = np.sqrt(res2)
            it += 1
            if it == 1:
                first = res
            if res < best:
                best = res
                bestU[:, :] = U
                since_best = 0
            else:
                since_best += 1
            if res <= fp_tol:
                U, Unew = Unew, U
                status = _CONVERGED
                break
            if since_best >= stag_window:
                if best < first:
                    U, Unew = bestU, U
                    status = _STAGNATED
                break
            if not np.isfinite(res) or res > guard * first:
                break
            U, Unew = Unew, U
        unext = np.empty(N, dtype=np.complex128)
        if status != _DIVERGED:
            V = np.dot(U, ET)
            for q in range(Q):
                for n in range(N):
                    v = V[q, n]
                    V[q, n] = (v.real * v.real + v.imag * v.imag) * v
            F = np.dot(V, NLmat)
            for n in range(N):
                acc = expz[n] * u[n]
                for r in range(Q):
                    acc += WA1[r, n] * F[r, n]
                unext[n] = acc
        res_out = best if status == _STAGNATED else res
        return unext, it, res_out, status


class Stepper:
    """One-step map with per-mode multipliers precomputed for (scheme, g, h, quad)."""

    def __init__(self, scheme: Scheme, g: Grid, h: float, quad: QuadRule | None = None,
                 cfg: SolverConfig | None = None, engine: str = "auto"):
        if h <= 0:
            raise ValueError(f"h must be positive, got {h}")
        self.scheme = scheme
        self.g = g
        self.h = float(h)
        self.quad = quad if quad is not None else gauss_legendre(3)
        self.cfg = cfg if cfg is not None else SolverConfig()
        if engine == "auto":
            engine = "numba" if _HAVE_NUMBA else "numpy"
        if engine == "numba" and not _HAVE_NUMBA:
            raise RuntimeError("numba engine requested but numba is not installed")
        self.engine = engine

        z = -1j * self.h * g.omega
        c, w = self.quad.nodes, self.quad.weights
        Q = len(c)
        self.expz = np.exp(z)
        self.ET, EinvT = _dft_matrices(g)
        self.NLmat = (-1j * g.lam) * EinvT
        if scheme.implicit:
            self.Cq = np.array([coeff_C(scheme, cq, z) for cq in c])
            self.WA = np.array([[self.h * w[r] * coeff_A(scheme, c[q], c[r], z)
                                 for r in range(Q)] for q in range(Q)])
            self.WA1 = np.array([self.h * w[r] * coeff_A(scheme, 1.0, c[r], z)
                                 for r in range(Q)])
        else:
            from .phifun import phi

            self.p1 = phi(1, z)
            self.p2 = phi(2, z)

    def _fhat(self, U: np.ndarray) -> np.ndarray:
        V = U @ self.ET
        return ((V.real**2 + V.imag**2) * V) @ self.NLmat

    def _step_explicit(self, u: np.ndarray):
        f0 = self._fhat(u)
        stage = self.expz * u + self.h * self.p1 * f0
        f1 = self._fhat(stage)
        unext = self.expz * u + self.h * ((self.p1 - self.p2) * f0 + self.p2 * f1)
        return unext, StepReport(iterations=0, final_residual=0.0, converged=True)

    def _step_numpy(self, u: np.ndarray):
        cfg = self.cfg
        CqU0 = self.Cq * u
        U = CqU0.copy()
        bestU = U
        best = np.inf
        first = np.inf
        since_best = 0
        it = 0
        status = _DIVERGED
        while it < cfg.fp_max:
            F = self._fhat(U)
            Unew = CqU0 + np.einsum('qrn,rn->qn', self.WA, F)
            res = float(np.abs(Unew - U).max())
            it += 1
            if it == 1:
                first = res
            if res < best:
                best, bestU, since_best = res, U, 0
            else:
                since_best += 1
            if res <= cfg.fp_tol:
                U, status = Unew, _CONVERGED
                break
            if since_best >= cfg.stagnation_window:
                if best < first:
                    U, status = bestU, _STAGNATED
                break
            if not np.isfinite(res) or res > _DIVERGENCE_GUARD * first:
                break
            U = Unew
        if status == _DIVERGED:
            raise StepConvergenceError(residual=min(best, res), iterations=it)
        F = self._fhat(U)
        unext = self.expz * u + np.einsum('rn,rn->n', self.WA1, F)
        report = StepReport(iterations=it, final_residual=best if status == _STAGNATED else res,
                            converged=True, stagnated=status == _STAGNATED)
        return unext, report

    def step_coeffs(self, u: np.ndarray):
        """Advance one step on a raw coefficient vector (natural order)."""
        if not self.scheme.implicit:
            return self._step_explicit(u)
        if self.engine == "numba":
            unext, it, res, status = _fp_kernel(
                u, self.Cq, self.WA, self.WA1, self.expz, self.ET, self.NLmat,
                self.cfg.fp_tol, self.cfg.fp_max, self.cfg.stagnation_window,
                _DIVERGENCE_GUARD)
            if status == _DIVERGED:
                raise StepConvergenceError(residual=res, iterations=it)
            return unext, StepReport(iterations=it, final_residual=res, converged=True,
                                     stagnated=status == _STAGNATED)
        return self._step_numpy(u)


def step(scheme: Scheme, g: Grid, h: float, quad: QuadRule | None, cfg: SolverConfig | None,
         s: FourierState):
    """One step of the scheme; returns (state at t+h, StepReport)."""
    if s.coeffs.shape[-1] != g.n:
        raise ValueError("state incompatible with grid")
    st = Stepper(scheme, g, h, quad, cfg)
    unew, report = st.step_coeffs(np.asarray(s.coeffs, dtype=np.complex128))
    return FourierState(coeffs=unew, t=s.t + h), report


def evolve(scheme: Scheme, g: Grid, h: float, quad: QuadRule | None, cfg: SolverConfig | None,
           s0: FourierState, n_steps: int, observer=None, observe_every: int = 1,
           engine: str = "auto") -> FourierState:
    """Apply `n_steps` steps from s0; deterministic for fixed inputs.

    The observer is called as observer(step_index, t, state, report) at step 0
    (report None), every `observe_every`-th step, and at the final step.  Step
    errors propagate with the failing step index attached.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    stp = Stepper(scheme, g, h, quad, cfg, engine=engine)
    u = np.asarray(s0.coeffs, dtype=np.complex128).copy()
    t0 = s0.t
    if observer is not None:
        observer(0, t0, FourierState(coeffs=u.copy(), t=t0), None)
    for i in range(1, n_steps + 1):
        try:
            u, report = stp.step_coeffs(u)
        except StepConvergenceError as exc:
            exc.step_index = i
            raise
        if observer is not None and (i % observe_every == 0 or i == n_steps):
            observer(i, t0 + i * h, FourierState(coeffs=u.copy(), t=t0 + i * h), report)
    return FourierState(coeffs=u, t=t0 + n_steps * h)


def ep1_two_step_residual(g: Grid, h: float, quad: QuadRule | None,
                          cfg: SolverConfig | None, s0: FourierState) -> float:
    """l-inf defect of the symmetric two-step identity satisfied by EP1:

    u2 - 2 cos(h*Omega) u1 + u0 = h [phi_1(V) S(u1,u2) - phi_1(-V) S(u0,u1)]

    where S(a,b) is the same quadrature applied to sigma -> fhat((1-sigma)a
    + sigma b).  Bounded by fixed-point tolerance propagation.
    """
    from .phifun import phi
    from .spectral import cubic_coeffs

    quad = quad if quad is not None else gauss_legendre(3)
    stp = Stepper(ep1(), g, h, quad, cfg)
    u0 = np.asarray(s0.coeffs, dtype=np.complex128)
    u1, _ = stp.step_coeffs(u0)
    u2, _ = stp.step_coeffs(u1)

    def stage_integral(a, b):
        acc = np.zeros_like(a)
        for cq, wq in zip(quad.nodes, quad.weights):
            acc += wq * cubic_coeffs((1 - cq) * a + cq * b, g.lam)
        return acc

    z = -1j * h * g.omega
    lhs = u2 - 2.0 * np.cos(h * g.omega) * u1 + u0
    rhs = h * (phi(1, z) * stage_integral(u1, u2) - phi(1, -z) * stage_integral(u0, u1))
    return float(np.abs(lhs - rhs).max())


def reference_solution(g: Grid, T: float, s0: FourierState, h_ref: float,
                       engine: str = "auto") -> FourierState:
    """High-accuracy baseline: EP3 with GL5 at step h_ref, fp_tol 1e-14."""
    if T <= 0:
        raise ValueError("T must be positive")
    from .schemes import ep3

    n = round(T / h_ref)
    if abs(n * h_ref - T) > 1e-9 * max(1.0, T):
        raise ValueError(f"T = {T} is not an integer multiple of h_ref = {h_ref}")
    cfg = SolverConfig(fp_tol=1e-14, fp_max=400)
    return evolve(ep3(), g, h_ref, gauss_legendre(5), cfg, s0, n, engine=engine)

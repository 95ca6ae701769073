"""Experiment drivers: solve / converge / conserve / epcheck.

Sweep drivers (converge, conserve) fan their independent trajectories out
to a process pool when more than one worker is available and assemble the
CSV at the end; single-trajectory runs stream rows as they are produced.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..quadrature import quad_by_name
from ..schemes import ep_residual_grid, scheme_by_name
from ..spectral import (FourierState, build_grid, observables, sobolev_norm,
                        weighted_action_deviation)
from ..stepper import StepConvergenceError, Stepper, evolve, reference_solution
from .config import ConfigError, ExperimentConfig, load_initial
from .csvio import CsvWriter
from .snapshot import write_snapshot

__all__ = ["run_solve", "run_converge", "run_conserve", "run_epcheck",
           "SolveResult", "ConvergeResult", "ConserveResult", "EpcheckResult"]

_EPCHECK_QUADS = ["mp"] + [f"gl{n}" for n in range(2, 11)]
_K_REL_FLOOR = 1e-8  # |K(0)| below this -> absolute momentum error


def _workers(cfg: ExperimentConfig, n_jobs: int) -> int:
    w = cfg.workers if cfg.workers > 0 else (os.cpu_count() or 1)
    return max(1, min(w, n_jobs))


def _pool_map(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def _default_snapshot_path(out: str) -> str:
    root, _ = os.path.splitext(out)
    return root + ".nls1"


# ---------------------------------------------------------------------------
# solve

@dataclass
class SolveResult:
    columns: list[str]
    rows: list[tuple]
    final: FourierState
    csv_path: str
    snapshot_path: str


def run_solve(cfg: ExperimentConfig) -> SolveResult:
    """Evolve one trajectory, streaming (t, observables, errors, iterations) rows."""
    if cfg.mode != "solve":
        raise ConfigError(f"run_solve needs mode='solve', got {cfg.mode!r}")
    g = cfg.grid()
    scheme = cfg.scheme(cfg.schemes[0])
    quad = cfg.quad_rule()
    s0 = load_initial(g, cfg.ic)
    obs0 = observables(g, s0)
    k_rel = abs(obs0.momentum) > _K_REL_FLOOR
    columns = ["t", "energy", "density", "momentum",
               "H_rel_err", "m_rel_err", "K_err", "fp_iterations"]
    rows: list[tuple] = []
    n = cfg.n_steps(cfg.h[0])

    comments = [f"scheme: {scheme.label}",
                f"momentum error is {'relative' if k_rel else 'absolute (|K(0)| below floor)'}"]
    writer = CsvWriter(cfg.out, columns, cfg.describe(), comments)

    def emit(i, t, s, report):
        ob = observables(g, s)
        row = (t, ob.energy, ob.density, ob.momentum,
               abs(ob.energy - obs0.energy) / abs(obs0.energy) if obs0.energy else abs(ob.energy),
               abs(ob.density - obs0.density) / abs(obs0.density) if obs0.density else abs(ob.density),
               (abs(ob.momentum - obs0.momentum) / abs(obs0.momentum) if k_rel
                else abs(ob.momentum - obs0.momentum)),
               report.iterations if report is not None else 0)
        rows.append(row)
        writer.row(*row)

    try:
        final = evolve(scheme, g, cfg.h[0], quad, cfg.solver(), s0, n,
                       observer=emit, observe_every=cfg.stride, engine=cfg.engine)
    except StepConvergenceError:
        writer.comment("aborted: stage fixed point did not converge")
        writer.close()
        raise
    writer.close()

    snap = cfg.snapshot or _default_snapshot_path(cfg.out)
    write_snapshot(snap, g, final)
    if cfg.plot:
        from .plots import plot_solve

        plot_solve(cfg.out, columns, rows)
    return SolveResult(columns, rows, final, cfg.out, snap)


# ---------------------------------------------------------------------------
# converge

@dataclass
class ConvergePoint:
    scheme: str
    eps: float
    h: float
    err_l2: float
    err_h1: float
    failed: bool = False


@dataclass
class ConvergeResult:
    points: list[ConvergePoint]
    # (scheme, eps) -> dict(slope_l2, slope_h1, resid_l2, resid_h1)
    slopes: dict = field(default_factory=dict)
    csv_path: str = ""

    def point(self, scheme: str, eps: float, h: float) -> ConvergePoint:
        for p in self.points:
            if (p.scheme == scheme and math.isclose(p.eps, eps)
                    and math.isclose(p.h, h)):
                return p
        raise KeyError((scheme, eps, h))


@dataclass(frozen=True)
class _ConvergeJob:
    scheme: str
    ep2_m: float
    eps: float
    h: float
    n_steps: int
    M: int
    L: float
    lam_eff: float
    fp_tol: float
    fp_max: int
    quad: str
    engine: str
    ref_coeffs: np.ndarray
    ic_coeffs: np.ndarray


def _converge_point(job: _ConvergeJob) -> ConvergePoint:
    g = build_grid(job.M, job.L, 1.0, job.lam_eff)
    s0 = FourierState(coeffs=job.ic_coeffs, t=0.0)
    from ..stepper import SolverConfig

    cfgs = SolverConfig(fp_tol=job.fp_tol, fp_max=job.fp_max)
    try:
        out = evolve(scheme_by_name(job.scheme, job.ep2_m), g, job.h,
                     quad_by_name(job.quad), cfgs, s0, job.n_steps, engine=job.engine)
    except StepConvergenceError:
        return ConvergePoint(job.scheme, job.eps, job.h, math.nan, math.nan, failed=True)
    diff = FourierState(coeffs=out.coeffs - job.ref_coeffs)
    return ConvergePoint(job.scheme, job.eps, job.h,
                         sobolev_norm(g, diff, 0.0), sobolev_norm(g, diff, 1.0))


def _fit_loglog(hs: list[float], errs: list[float]):
    """Least-squares slope of log err vs log h and the rms fit residual."""
    x = np.log(np.asarray(hs))
    y = np.log(np.asarray(errs))
    A = np.vstack([x, np.ones_like(x)]).T
    sol, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ sol - y) ** 2)))
    return float(sol[0]), resid


def run_converge(cfg: ExperimentConfig) -> ConvergeResult:
    """Long-term-mapped convergence sweep with an EP3 reference per eps.

    The mapped problem keeps eps = 1 in the Laplacian, scales the
    nonlinearity to eps*lambda, and integrates to horizon T/eps; h plays the
    role of the rescaled step.  Points whose stage iteration diverges are
    recorded with NaN errors and skipped by the slope fits.
    """
    if cfg.mode != "converge":
        raise ConfigError(f"run_converge needs mode='converge', got {cfg.mode!r}")
    if cfg.ic.preset != "converge":
        raise ConfigError("run_converge requires the converge preset")
    eps_list = cfg.eps_list or (cfg.eps,)
    h_list = sorted(cfg.h, reverse=True)
    h_min = min(h_list)

    jobs: list[_ConvergeJob] = []
    L = cfg.domain_length
    for eps in eps_list:
        lam_eff = eps * cfg.lam
        g = build_grid(cfg.M, L, 1.0, lam_eff)
        s0 = load_initial(g, cfg.ic)
        horizon = cfg.T / eps
        ref = reference_solution(g, horizon, s0, h_min / 10.0, engine=cfg.engine)
        for name in cfg.schemes:
            for h in h_list:
                n = round(horizon / h)
                if abs(n * h - horizon) > 1e-9 * horizon:
                    raise ConfigError(f"horizon T/eps = {horizon} not a multiple of h = {h}")
                jobs.append(_ConvergeJob(
                    scheme=name, ep2_m=cfg.ep2_m, eps=eps, h=h, n_steps=n,
                    M=cfg.M, L=L, lam_eff=lam_eff, fp_tol=cfg.fp_tol,
                    fp_max=cfg.fp_max, quad=cfg.quad, engine=cfg.engine,
                    ref_coeffs=ref.coeffs, ic_coeffs=s0.coeffs))

    points = _pool_map(_converge_point, jobs, _workers(cfg, len(jobs)))
    result = ConvergeResult(points=points, csv_path=cfg.out)

    for name in cfg.schemes:
        for eps in eps_list:
            ok = [p for p in points
                  if p.scheme == name and p.eps == eps and not p.failed]
            if len(ok) >= 2:
                s2, r2 = _fit_loglog([p.h for p in ok], [p.err_l2 for p in ok])
                s1, r1 = _fit_loglog([p.h for p in ok], [p.err_h1 for p in ok])
            else:
                s2 = s1 = r2 = r1 = math.nan
            result.slopes[(name, eps)] = {
                "slope_l2": s2, "slope_h1": s1, "resid_l2": r2, "resid_h1": r1,
                "n_points": len(ok)}

    columns = ["scheme", "eps", "h", "err_L2", "err_H1",
               "slope_L2", "slope_H1", "fit_resid_L2", "fit_resid_H1"]
    with CsvWriter(cfg.out, columns, cfg.describe(),
                   ["failed (non-convergent) points carry NaN errors and are"
                    " excluded from the slope fits"]) as w:
        for p in points:
            sl = result.slopes[(p.scheme, p.eps)]
            w.row(p.scheme, p.eps, p.h, p.err_l2, p.err_h1,
                  sl["slope_l2"], sl["slope_h1"], sl["resid_l2"], sl["resid_h1"])
            if p.failed:
                w.comment(f"point scheme={p.scheme} eps={p.eps:g} h={p.h:g}"
                          " did not converge; excluded from fit")
    if cfg.plot:
        from .plots import plot_converge

        plot_converge(cfg.out, result)
    return result


# ---------------------------------------------------------------------------
# conserve

@dataclass
class ConserveSeries:
    scheme: str
    quad: str
    t: np.ndarray
    m_rel: np.ndarray
    k_err: np.ndarray
    action_dev: np.ndarray

    def drift_rates(self) -> tuple[float, float]:
        """Least-squares slopes of the density/momentum error series vs t."""
        A = np.vstack([self.t, np.ones_like(self.t)]).T
        sm = float(np.linalg.lstsq(A, self.m_rel, rcond=None)[0][0])
        sk = float(np.linalg.lstsq(A, self.k_err, rcond=None)[0][0])
        return sm, sk


@dataclass
class ConserveResult:
    series: dict  # (scheme, quad) -> ConserveSeries
    eps_tilde: float
    csv_path: str = ""


@dataclass(frozen=True)
class _ConserveJob:
    scheme: str
    ep2_m: float
    quad: str
    M: int
    L: float
    eps: float
    lam: float
    h: float
    n_steps: int
    stride: int
    fp_tol: float
    fp_max: int
    engine: str
    eps_tilde: float
    ic_coeffs: np.ndarray


def _conserve_series(job: _ConserveJob) -> ConserveSeries:
    g = build_grid(job.M, job.L, job.eps, job.lam)
    s0 = FourierState(coeffs=job.ic_coeffs, t=0.0)
    ob0 = observables(g, s0)
    k_rel = abs(ob0.momentum) > _K_REL_FLOOR
    ts, dm, dk, di = [0.0], [0.0], [0.0], [0.0]

    def emit(i, t, s, report):
        if i == 0:
            return
        ob = observables(g, s)
        ts.append(t)
        dm.append(abs(ob.density - ob0.density) / abs(ob0.density))
        dk.append(abs(ob.momentum - ob0.momentum) / abs(ob0.momentum) if k_rel
                  else abs(ob.momentum - ob0.momentum))
        di.append(weighted_action_deviation(g, s, s0, 2.0, job.eps_tilde))

    from ..stepper import SolverConfig

    cfgs = SolverConfig(fp_tol=job.fp_tol, fp_max=job.fp_max)
    evolve(scheme_by_name(job.scheme, job.ep2_m), g, job.h, quad_by_name(job.quad),
           cfgs, s0, job.n_steps, observer=emit, observe_every=job.stride,
           engine=job.engine)
    return ConserveSeries(job.scheme, job.quad, np.asarray(ts), np.asarray(dm),
                          np.asarray(dk), np.asarray(di))


def run_conserve(cfg: ExperimentConfig) -> ConserveResult:
    """Long-run conservation series for every configured scheme."""
    if cfg.mode != "conserve":
        raise ConfigError(f"run_conserve needs mode='conserve', got {cfg.mode!r}")
    g = cfg.grid()
    s0 = load_initial(g, cfg.ic)
    eps_tilde = sobolev_norm(g, s0, 2.0)
    h = cfg.h[0]
    n = cfg.n_steps(h)
    jobs = [
        _ConserveJob(scheme=name, ep2_m=cfg.ep2_m, quad=cfg.quad, M=cfg.M,
                     L=cfg.domain_length, eps=cfg.eps, lam=cfg.lam, h=h, n_steps=n,
                     stride=cfg.stride, fp_tol=cfg.fp_tol, fp_max=cfg.fp_max,
                     engine=cfg.engine, eps_tilde=eps_tilde, ic_coeffs=s0.coeffs)
        for name in cfg.schemes
    ]
    series_list = _pool_map(_conserve_series, jobs, _workers(cfg, len(jobs)))
    series = {(s.scheme, s.quad): s for s in series_list}

    columns = ["scheme", "quad", "t", "m_rel_err", "K_rel_err", "action_dev"]
    with CsvWriter(cfg.out, columns, cfg.describe(),
                   [f"eps_tilde (H^2 norm of u0): {eps_tilde:.16e}",
                    "action_dev: sum |omega_j|^2 |I_j - I_j(0)| / eps_tilde^2"]) as w:
        for s in series_list:
            sm, sk = s.drift_rates()
            w.comment(f"{s.scheme}/{s.quad}: density drift rate {sm:.3e}/t,"
                      f" momentum drift rate {sk:.3e}/t")
            for i in range(len(s.t)):
                w.row(s.scheme, s.quad, s.t[i], s.m_rel[i], s.k_err[i], s.action_dev[i])
    if cfg.plot:
        from .plots import plot_conserve

        plot_conserve(cfg.out, series_list)
    return ConserveResult(series=series, eps_tilde=eps_tilde, csv_path=cfg.out)


# ---------------------------------------------------------------------------
# epcheck

@dataclass
class EpcheckResult:
    residuals: dict    # scheme -> (max_r1, max_r2, max_r3)
    defects: dict      # (scheme, quad) -> relative one-step energy defect
    csv_path: str = ""


def _random_state(g, seed: int) -> FourierState:
    rng = np.random.default_rng(seed)
    amp = 0.3 * np.exp(-np.abs(g.j) / 6.0) * (np.abs(g.j) <= g.M // 2)
    coeffs = amp * (rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n))
    return FourierState(coeffs=coeffs, t=0.0)


def run_epcheck(cfg: ExperimentConfig) -> EpcheckResult:
    """Max energy-preservation-condition residuals per scheme over a
    (theta, tau, sigma) grid, plus the relative energy defect of a single
    step on random data for each quadrature rule.
    """
    if cfg.mode != "epcheck":
        raise ConfigError(f"run_epcheck needs mode='epcheck', got {cfg.mode!r}")
    thetas = np.linspace(0.0, cfg.theta_max, cfg.theta_samples)
    taus = np.linspace(0.0, 1.0, cfg.tau_samples)
    sigmas = np.linspace(0.0, 1.0, cfg.sigma_samples)

    residuals = {name: ep_residual_grid(cfg.scheme(name), thetas, taus, sigmas)
                 for name in cfg.schemes}

    g = cfg.grid()
    s0 = _random_state(g, cfg.seed)
    h = cfg.h[0]
    e0 = observables(g, s0).energy
    defects = {}
    for name in cfg.schemes:
        scheme = cfg.scheme(name)
        for qname in _EPCHECK_QUADS:
            # single steps: plain numpy engine avoids jit warmup cost here
            st = Stepper(scheme, g, h, quad_by_name(qname), cfg.solver(fp_max=400),
                         engine="numpy")
            u1, _ = st.step_coeffs(s0.coeffs)
            e1 = observables(g, FourierState(coeffs=u1)).energy
            defects[(name, qname)] = abs(e1 - e0) / abs(e0)

    columns = ["scheme", "quad", "max_r1", "max_r2", "max_r3", "energy_defect"]
    with CsvWriter(cfg.out, columns, cfg.describe(),
                   [f"residual grid: theta in [0, {cfg.theta_max:g}] x{cfg.theta_samples},"
                    f" tau x{cfg.tau_samples}, sigma x{cfg.sigma_samples}",
                    f"energy defect: one step of size h={h:g} on seeded random data"]) as w:
        for name in cfg.schemes:
            r1, r2, r3 = residuals[name]
            for qname in _EPCHECK_QUADS:
                w.row(name, qname, r1, r2, r3, defects[(name, qname)])
    if cfg.plot:
        from .plots import plot_epcheck

        plot_epcheck(cfg.out, residuals, defects, _EPCHECK_QUADS)
    return EpcheckResult(residuals=residuals, defects=defects, csv_path=cfg.out)

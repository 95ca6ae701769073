"""Experiment configuration and the initial-condition library.

Presets:
  fig1(mu)   u0(x) = 0.5i + 0.025 cos(mu x), natural domain L = 4*sqrt(2)*pi,
             default mu = 2*pi/L (one full wave).
  converge   u0(x) = cos(x) + sin(x), requires L = 2*pi.
  smalldata  u0(x) = 0.1 (x/pi - 1)^3 (x/pi + 1)^2
                   + 0.1i (x/pi - 1)^3 (x/pi + 1)^3, requires L = 2*pi.
  fourier    explicit list of (j, re, im) coefficients.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..quadrature import QuadRule, quad_by_name
from ..schemes import Scheme, scheme_by_name
from ..spectral import FourierState, Grid, PhysicalState, build_grid, to_fourier
from ..stepper import SolverConfig

__all__ = ["ConfigError", "InitialCondition", "ExperimentConfig", "load_initial",
           "natural_length"]

MODES = ("solve", "converge", "conserve", "epcheck")
_PRESET_LENGTHS = {
    "fig1": 4.0 * math.sqrt(2.0) * math.pi,
    "converge": 2.0 * math.pi,
    "smalldata": 2.0 * math.pi,
    "fourier": 2.0 * math.pi,
}


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 1)."""


@dataclass(frozen=True)
class InitialCondition:
    preset: str
    mu: float | None = None                      # fig1 only
    modes: tuple[tuple[int, float, float], ...] = ()  # fourier only

    def __post_init__(self):
        if self.preset not in _PRESET_LENGTHS:
            raise ConfigError(f"unknown initial condition {self.preset!r}")


def natural_length(ic: InitialCondition) -> float:
    """Domain length the preset is defined on."""
    return _PRESET_LENGTHS[ic.preset]


def load_initial(g: Grid, ic: InitialCondition) -> FourierState:
    """Sample the preset at the collocation points and transform."""
    if ic.preset == "fourier":
        coeffs = np.zeros(g.n, dtype=np.complex128)
        for j, re, im in ic.modes:
            if not (-g.M <= j < g.M):
                raise ConfigError(f"fourier mode {j} outside -M..M-1 for M={g.M}")
            coeffs[j + g.M] = re + 1j * im
        return FourierState(coeffs=coeffs, t=0.0)
    if ic.preset == "fig1":
        mu = ic.mu if ic.mu is not None else 2.0 * np.pi / g.L
        vals = 0.5j + 0.025 * np.cos(mu * g.x)
    elif ic.preset == "converge":
        _require_length(g, 2.0 * np.pi, "converge")
        vals = np.cos(g.x) + np.sin(g.x) + 0.0j
    elif ic.preset == "smalldata":
        _require_length(g, 2.0 * np.pi, "smalldata")
        xp = g.x / np.pi
        vals = (0.1 * (xp - 1.0) ** 3 * (xp + 1.0) ** 2
                + 0.1j * (xp - 1.0) ** 3 * (xp + 1.0) ** 3)
    else:  # pragma: no cover
        raise ConfigError(ic.preset)
    return to_fourier(g, PhysicalState(values=vals, t=0.0))


def _require_length(g: Grid, L: float, preset: str) -> None:
    if abs(g.L - L) > 1e-12 * L:
        raise ConfigError(f"preset {preset!r} is defined on L = {L:.6f}, grid has L = {g.L:.6f}")


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "solve"
    schemes: tuple[str, ...] = ("ep1",)
    ep2_m: float = 0.5
    M: int = 32
    L: float | None = None            # None -> preset's natural length
    eps: float = 1.0
    eps_list: tuple[float, ...] = ()  # converge only; empty -> (eps,)
    lam: float = -2.0
    h: tuple[float, ...] = (0.01,)
    T: float = 100.0
    quad: str = "gl3"
    fp_tol: float = 1e-14
    fp_max: int = 100
    ic: InitialCondition = field(default_factory=lambda: InitialCondition("fig1"))
    out: str = "out.csv"
    stride: int = 100
    snapshot: str | None = None
    plot: bool = True
    engine: str = "auto"
    workers: int = 0                  # 0 -> os.cpu_count()
    # epcheck controls
    theta_max: float = 50.0
    theta_samples: int = 200
    tau_samples: int = 20
    sigma_samples: int = 20
    seed: int = 2024

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if not self.schemes:
            raise ConfigError("at least one scheme is required")
        if self.mode != "epcheck":
            if not self.h or any(hh <= 0 for hh in self.h):
                raise ConfigError("h values must be positive")
            if self.T <= 0:
                raise ConfigError("T must be positive")
        if self.mode in ("solve", "conserve") and len(self.h) != 1:
            raise ConfigError(f"mode {self.mode!r} takes a single h, got {len(self.h)}")
        if self.stride < 1:
            raise ConfigError("stride must be >= 1")
        try:
            for name in self.schemes:
                scheme_by_name(name, self.ep2_m if name == "ep2" else 0.5)
            quad_by_name(self.quad)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    # -- derived pieces ------------------------------------------------

    @property
    def domain_length(self) -> float:
        return self.L if self.L is not None else natural_length(self.ic)

    def grid(self, eps: float | None = None, lam: float | None = None) -> Grid:
        return build_grid(self.M, self.domain_length,
                          self.eps if eps is None else eps,
                          self.lam if lam is None else lam)

    def scheme(self, name: str) -> Scheme:
        return scheme_by_name(name, self.ep2_m if name == "ep2" else 0.5)

    def quad_rule(self) -> QuadRule:
        return quad_by_name(self.quad)

    def solver(self, fp_max: int | None = None) -> SolverConfig:
        return SolverConfig(fp_tol=self.fp_tol,
                            fp_max=self.fp_max if fp_max is None else fp_max)

    def n_steps(self, h: float, T: float | None = None) -> int:
        T = self.T if T is None else T
        n = round(T / h)
        if n < 1 or abs(n * h - T) > 1e-9 * max(1.0, abs(T)):
            raise ConfigError(f"T = {T} is not an integer multiple of h = {h}")
        return n

    def describe(self) -> dict:
        d = {
            "mode": self.mode, "schemes": ",".join(self.schemes), "ep2_m": self.ep2_m,
            "M": self.M, "L": self.domain_length, "eps": self.eps, "lambda": self.lam,
            "h": ",".join(f"{x:g}" for x in self.h), "T": self.T, "quad": self.quad,
            "fp_tol": self.fp_tol, "fp_max": self.fp_max, "ic": self.ic.preset,
            "stride": self.stride,
        }
        if self.ic.preset == "fig1":
            d["mu"] = self.ic.mu if self.ic.mu is not None else 2.0 * np.pi / self.domain_length
        if self.mode == "converge":
            d["eps_list"] = ",".join(f"{x:g}" for x in (self.eps_list or (self.eps,)))
        return d


def _parse_reals(v) -> tuple[float, ...]:
    if isinstance(v, (int, float)):
        return (float(v),)
    if isinstance(v, (list, tuple)):
        return tuple(float(x) for x in v)
    return tuple(float(x) for x in str(v).split(",") if x.strip())


def parse_ic(spec: str, mu: float | None) -> InitialCondition:
    """Parse the CLI form: fig1 | converge | smalldata | fourier:<file>."""
    spec = spec.strip()
    if spec.startswith("fourier:"):
        path = spec[len("fourier:"):]
        try:
            with open(path) as f:
                modes = json.load(f)
            modes = tuple((int(j), float(re), float(im)) for j, re, im in modes)
        except (OSError, ValueError, TypeError) as exc:
            raise ConfigError(f"cannot read fourier modes from {path!r}: {exc}") from exc
        return InitialCondition("fourier", modes=modes)
    if spec == "fig1":
        return InitialCondition("fig1", mu=mu)
    return InitialCondition(spec)


def config_from_dict(d: dict) -> ExperimentConfig:
    """Build a config from a flat dict (JSON config file / merged CLI flags)."""
    d = dict(d)
    known = {
        "mode", "scheme", "ep2_m", "M", "L", "eps", "eps_list", "lambda", "h", "T",
        "quad", "fp_tol", "fp_max", "ic", "mu", "out", "stride", "snapshot", "plot",
        "engine", "workers", "theta_max", "theta_samples", "tau_samples",
        "sigma_samples", "seed",
    }
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kw: dict = {}
    if "mode" in d:
        kw["mode"] = str(d["mode"])
    if "scheme" in d:
        v = d["scheme"]
        kw["schemes"] = tuple(s.strip().lower() for s in
                              (v if isinstance(v, (list, tuple)) else str(v).split(",")))
    for src, dst, conv in [
        ("ep2_m", "ep2_m", float), ("M", "M", int), ("L", "L", float),
        ("eps", "eps", float), ("lambda", "lam", float), ("T", "T", float),
        ("quad", "quad", str), ("fp_tol", "fp_tol", float), ("fp_max", "fp_max", int),
        ("out", "out", str), ("stride", "stride", int), ("snapshot", "snapshot", str),
        ("plot", "plot", bool), ("engine", "engine", str), ("workers", "workers", int),
        ("theta_max", "theta_max", float), ("theta_samples", "theta_samples", int),
        ("tau_samples", "tau_samples", int), ("sigma_samples", "sigma_samples", int),
        ("seed", "seed", int),
    ]:
        if src in d and d[src] is not None:
            kw[dst] = conv(d[src])
    if "h" in d:
        kw["h"] = _parse_reals(d["h"])
    if "eps_list" in d and d["eps_list"] is not None:
        kw["eps_list"] = _parse_reals(d["eps_list"])
    if "ic" in d:
        kw["ic"] = parse_ic(str(d["ic"]), d.get("mu"))
    elif "mu" in d and d["mu"] is not None:
        kw["ic"] = InitialCondition("fig1", mu=float(d["mu"]))
    try:
        return ExperimentConfig(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config_file(path: str) -> dict:
    try:
        with open(path) as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load config file {path!r}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path!r} must hold a JSON object")
    return data


def with_mode_defaults(cfg: ExperimentConfig, given: set[str]) -> ExperimentConfig:
    """Fill mode-dependent defaults for fields the user did not set."""
    upd: dict = {}
    if cfg.mode == "converge":
        if "ic" not in given:
            upd["ic"] = InitialCondition("converge")
        if "T" not in given:
            upd["T"] = 1.0
        if "h" not in given:
            upd["h"] = tuple(0.5**i for i in range(1, 7))
        if "scheme" not in given:
            upd["schemes"] = ("ep1", "ep2", "ep3")
        if "eps_list" not in given and "eps" not in given:
            upd["eps_list"] = (1.0, 0.1, 0.01)
        if "fp_max" not in given:
            upd["fp_max"] = 400
    elif cfg.mode == "conserve":
        if "ic" not in given:
            upd["ic"] = InitialCondition("smalldata")
        if "T" not in given:
            upd["T"] = 10000.0
        if "scheme" not in given:
            upd["schemes"] = ("ep1", "ep2", "ep3", "etd2")
    elif cfg.mode == "epcheck":
        if "L" not in given and "ic" not in given:
            upd["L"] = 2.0 * math.pi
    elif cfg.mode == "solve":
        if "scheme" not in given:
            upd["schemes"] = cfg.schemes[:1]
    return replace(cfg, **upd) if upd else cfg

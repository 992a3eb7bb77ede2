"""Seeded random-bars recovery studies written to CSV, PGM and a manifest.

One experiment draws an image (or a sequence of frames), a sensing matrix and
measurement noise from named sub-streams of a single seed, recovers the Haar
coefficients with every selected solver at the lambda chosen by the residual
budget, and scores each recovery by PSNR in pixel space.
"""

import dataclasses
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..core_model import HuberParams, SensingProblem, estimate_scale_mad
from ..regpath import (PathConfig, PathResult, criterion_value, estimate_epsilon,
                       select_lambda, solver_names, write_path_csv)
from ..solvers import MultiTaskProblem, SolverOptions, sum_constraint
from .data import (Cauchy, Gaussian, GaussianMixture, apply_noise, gen_bar_sequence,
                   gen_random_bars, gen_sensing_matrix, psnr, sub_rng)
from .io import format_keyvalue, sha256_file, write_csv, write_pgm
from .wavelets import haar2d, ihaar2d, is_power_of_two

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ExperimentData",
    "ExperimentReport",
    "make_data",
    "huber_params",
    "run_solver",
    "run_experiment",
    "residual_budget",
    "natural_criterion",
    "SUMMARY_FILE",
    "MANIFEST_FILE",
]

NOISE_KINDS = ("gmm", "gaussian", "cauchy")
SCALE_RULES = ("pilot", "measurements", "noise")
EPSILON_RULES = ("oracle", "model")
SUMMARY_FILE = "psnr.csv"
MANIFEST_FILE = "manifest.txt"
_MULTITASK = ("mt-admm", "mt-fista")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines an experiment; the seed fixes all randomness.

    ``huber_scale`` picks the scale behind the Huber threshold
    ``c = huber_k * nu``: ``"pilot"`` takes the MAD of the residual of the
    plain CS recovery, ``"measurements"`` the MAD of ``y`` itself and
    ``"noise"`` the nominal noise scale. ``epsilon`` is the residual budget:
    ``"oracle"`` evaluates the criterion on the realized noise, ``"model"``
    uses its expectation under the noise spec (not available for Cauchy).
    ``cauchy_scale = 0`` means the Gaussian sigma at ``snr_db``.
    """

    size: int = 32
    bars: int = 2
    frames: int = 1
    block: int = 2
    seed: int = 0
    ratio: float = 0.4
    orthogonal: bool = False
    noise: str = "gmm"
    snr_db: float = 20.0
    contamination: float = 0.1
    kappa: float = 100.0
    cauchy_scale: float = 0.0
    solvers: Tuple[str, ...] = ("cs", "admm")
    huber_k: float = 1.345
    huber_scale: str = "pilot"
    epsilon: str = "oracle"
    grid_points: int = 20
    decades: float = 4.0
    bisect_width: float = 1e-2
    eta: float = 2.0
    mu: float = 1.0
    max_iter: int = 5000
    abs_tol: float = 1e-4
    rel_tol: float = 1e-2
    inner_abs_tol: float = 1e-4
    inner_rel_tol: float = 1e-2
    inner_max_iter: int = 1000
    out_dir: str = "out"

    def __post_init__(self):
        if not is_power_of_two(self.size) or self.size < 8:
            raise ConfigError("size must be a power of two >= 8")
        if self.bars < 0 or self.frames < 1 or not 0 <= self.block <= self.size:
            raise ConfigError("need bars >= 0, frames >= 1 and 0 <= block <= size")
        if not 0 < self.ratio <= 1:
            raise ConfigError("ratio must lie in (0, 1]")
        if self.noise not in NOISE_KINDS:
            raise ConfigError(f"noise must be one of {NOISE_KINDS}")
        if not 0 <= self.contamination < 1 or self.kappa < 1 or self.cauchy_scale < 0:
            raise ConfigError("need 0 <= contamination < 1, kappa >= 1, cauchy_scale >= 0")
        if not self.solvers:
            raise ConfigError("at least one solver is required")
        bad = [s for s in self.solvers if s not in solver_names()]
        if bad:
            raise ConfigError(f"unknown solver(s) {bad}; choose from {solver_names()}")
        if len(set(self.solvers)) != len(self.solvers):
            raise ConfigError("solvers must not repeat")
        if self.huber_scale not in SCALE_RULES:
            raise ConfigError(f"huber_scale must be one of {SCALE_RULES}")
        if self.epsilon not in EPSILON_RULES:
            raise ConfigError(f"epsilon must be one of {EPSILON_RULES}")
        if self.epsilon == "model" and self.noise == "cauchy":
            raise ConfigError("epsilon = model needs finite noise moments; use oracle")
        positive = ("huber_k", "decades", "bisect_width", "eta", "mu", "abs_tol",
                    "rel_tol", "inner_abs_tol", "inner_rel_tol")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.grid_points < 2 or self.max_iter < 1 or self.inner_max_iter < 1:
            raise ConfigError("need grid_points >= 2 and positive iteration caps")

    @property
    def n(self) -> int:
        return self.size * self.size

    @property
    def m(self) -> int:
        return max(1, int(round(self.ratio * self.n)))

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def solver_options(self) -> SolverOptions:
        return SolverOptions(eta=self.eta, mu=self.mu, max_iter=self.max_iter,
                             abs_tol=self.abs_tol, rel_tol=self.rel_tol)

    def inner_options(self) -> SolverOptions:
        return SolverOptions(eta=self.eta, mu=self.mu, max_iter=self.inner_max_iter,
                             abs_tol=self.inner_abs_tol, rel_tol=self.inner_rel_tol)

    def path_config(self, epsilon: float) -> PathConfig:
        return PathConfig(epsilon, grid_points=self.grid_points, decades=self.decades,
                          bisect_rel_width=self.bisect_width)

    def items(self):
        """``(key, value)`` pairs in declaration order, values as config text."""
        out = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                out.append((f.name, list(v)))
            elif isinstance(v, bool):
                out.append((f.name, str(v).lower()))
            else:
                out.append((f.name, repr(v) if isinstance(v, float) else str(v)))
        return out

    @classmethod
    def from_mapping(cls, mapping) -> "ExperimentConfig":
        """Build from string values, e.g. a parsed ``key = value`` file."""
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, raw in mapping.items():
            if key not in types:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[key] = _convert(key, types[key], raw)
        return cls(**kwargs)


def _convert(key, typ, raw):
    if isinstance(raw, (list, tuple)) and typ != Tuple[str, ...]:
        raise ConfigError(f"{key} given more than once")
    try:
        if typ == Tuple[str, ...]:
            items = raw if isinstance(raw, (list, tuple)) else [raw]
            return tuple(s.strip() for item in items for s in str(item).split(",")
                         if s.strip())
        if typ is bool:
            text = str(raw).strip().lower()
            if text not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return text in ("true", "1", "yes")
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return str(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


@dataclass
class ExperimentData:
    """Ground truth, operator and measurements; columns index frames."""

    frames: List[np.ndarray]
    phi: np.ndarray
    coeffs: np.ndarray
    clean: np.ndarray
    noise: np.ndarray
    nominal_scale: np.ndarray

    @property
    def y(self) -> np.ndarray:
        return self.clean + self.noise

    def problem(self, t: int) -> SensingProblem:
        return SensingProblem(self.phi, self.y[:, t])

    def multitask(self) -> MultiTaskProblem:
        return MultiTaskProblem(self.phi, self.y)


def _noise_spec(cfg: ExperimentConfig, clean):
    if cfg.noise == "gmm":
        spec = GaussianMixture(cfg.snr_db, cfg.contamination, cfg.kappa)
        return spec, spec.base_sigma(clean)
    gauss = GaussianMixture(cfg.snr_db, 0.0, 1.0)
    if cfg.noise == "gaussian":
        return Gaussian(cfg.snr_db), gauss.base_sigma(clean)
    scale = cfg.cauchy_scale or gauss.base_sigma(clean)
    return Cauchy(scale), scale


def make_data(cfg: ExperimentConfig) -> ExperimentData:
    """Draw frames, matrix and noise from the ``image``, ``matrix`` and ``noise`` streams."""
    image_seed = int(sub_rng(cfg.seed, "image").integers(2**31))
    if cfg.frames == 1:
        frames = [gen_random_bars(cfg.size, cfg.bars, image_seed)]
    else:
        frames = gen_bar_sequence(cfg.size, cfg.bars, cfg.frames, cfg.block, image_seed)
    phi = gen_sensing_matrix(cfg.m, cfg.n, int(sub_rng(cfg.seed, "matrix").integers(2**31)),
                             orthogonal=cfg.orthogonal)
    coeffs = np.column_stack([haar2d(f) for f in frames])
    clean = phi @ coeffs
    noise_seeds = sub_rng(cfg.seed, "noise").integers(2**31, size=cfg.frames)
    noise = np.empty_like(clean)
    scales = np.empty(cfg.frames)
    for t in range(cfg.frames):
        spec, scales[t] = _noise_spec(cfg, clean[:, t])
        noise[:, t] = apply_noise(clean[:, t], spec, int(noise_seeds[t])) - clean[:, t]
    return ExperimentData(frames, phi, coeffs, clean, noise, scales)


def residual_budget(cfg, data, params, kind, t=None) -> float:
    """Epsilon for frame ``t`` (all frames summed when ``t`` is None)."""
    cols = range(cfg.frames) if t is None else [t]
    if cfg.epsilon == "oracle":
        return sum(criterion_value(data.noise[:, j], params, kind) for j in cols)
    return sum(estimate_epsilon(params, cfg.m, data.nominal_scale[j], kind,
                                cfg.contamination if cfg.noise == "gmm" else 0.0,
                                cfg.kappa) for j in cols)


def natural_criterion(solver) -> str:
    return {"cs": "l2", "l1": "l1"}.get(solver, "huber")


def pilot_residual(cfg, data, pilot: Dict[int, PathResult] = None):
    """Residuals of the plain CS recoveries, one column per frame."""
    quad = HuberParams.quadratic()
    r = np.empty_like(data.y)
    for t in range(cfg.frames):
        res = pilot.get(t) if pilot else None
        if res is None:
            res = select_lambda(data.problem(t), quad, "cs",
                                cfg.path_config(residual_budget(cfg, data, quad, "l2", t)),
                                cfg.solver_options())
            if pilot is not None:
                pilot[t] = res
        r[:, t] = data.y[:, t] - data.phi @ res.solution.x
    return r


def huber_params(cfg: ExperimentConfig, data: ExperimentData,
                 pilot: Dict[int, PathResult] = None) -> HuberParams:
    """Huber threshold ``huber_k * nu`` with ``nu`` from the configured rule.

    Sequences pool all frames into one scale estimate.
    """
    if cfg.huber_scale == "noise":
        nu = float(np.median(data.nominal_scale))
    elif cfg.huber_scale == "measurements":
        nu = estimate_scale_mad(data.y.ravel())
    else:
        nu = estimate_scale_mad(pilot_residual(cfg, data, pilot).ravel())
    return HuberParams.from_scale(nu, cfg.huber_k)


@dataclass
class SolverRun:
    solver: str
    frame: Optional[int]  # None for a joint multi-task run
    path: PathResult
    epsilon: float
    psnr: List[float]
    criterion: List[float]
    recovered: List[np.ndarray]
    seconds: float


def run_solver(cfg: ExperimentConfig, data: ExperimentData, solver: str,
               params: HuberParams, frame: Optional[int] = None,
               pilot: Dict[int, PathResult] = None) -> SolverRun:
    """Select lambda for one solver on one frame (or jointly for multi-task)."""
    start = time.perf_counter()
    kind = natural_criterion(solver)
    loss = HuberParams.quadratic() if kind != "huber" else params
    opts = cfg.solver_options()
    kwargs = {}
    if solver == "nested":
        kwargs["inner_opts"] = cfg.inner_options()
    if solver in _MULTITASK:
        prob, cols = data.multitask(), list(range(cfg.frames))
        eps = residual_budget(cfg, data, loss, kind)
    else:
        prob, cols = data.problem(frame), [frame]
        eps = residual_budget(cfg, data, loss, kind, frame)
        if solver == "affine":
            kwargs["c"] = sum_constraint(float(np.sum(data.coeffs[:, frame])), cfg.n)
    if solver == "cs" and pilot is not None and frame in pilot:
        res = pilot[frame]
    else:
        res = select_lambda(prob, loss, solver, cfg.path_config(eps), opts, **kwargs)
    x = res.solution.x.reshape(cfg.n, -1)
    recovered = [np.clip(ihaar2d(x[:, i], cfg.size, cfg.size), 0.0, 1.0)
                 for i in range(len(cols))]
    scores = [psnr(data.frames[t], rec) for t, rec in zip(cols, recovered)]
    resid = data.y[:, cols] - data.phi @ x
    crits = [criterion_value(resid[:, i], loss, kind) for i in range(len(cols))]
    return SolverRun(solver, None if solver in _MULTITASK else frame, res, eps, scores,
                     crits, recovered, time.perf_counter() - start)


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    params: HuberParams
    runs: List[SolverRun] = field(default_factory=list)
    files: List[str] = field(default_factory=list)

    def frame_psnr(self, solver: str) -> np.ndarray:
        """PSNR per frame, in frame order."""
        out = np.full(self.config.frames, np.nan)
        for run in self.runs:
            if run.solver != solver:
                continue
            cols = range(self.config.frames) if run.frame is None else [run.frame]
            out[list(cols)] = run.psnr
        return out

    def mean_psnr(self, solver: str) -> float:
        return float(np.mean(self.frame_psnr(solver)))


SUMMARY_HEADER = ["solver", "frame", "psnr_db", "lambda", "epsilon", "criterion", "met",
                  "path_solves", "iterations", "factorizations", "seconds"]
TRACE_HEADER = ["iteration", "objective", "primal", "dual", "eps_primal", "eps_dual",
                "seconds"]
TIMING_COLUMNS = ("seconds",)


def _suffix(cfg, frame):
    return "" if cfg.frames == 1 or frame is None else f"_f{frame:02d}"


def _norm(parts):
    return repr(float(np.linalg.norm(parts))) if len(parts) else ""


def _write_trace(path, solution):
    rows = []
    for k, rec in enumerate(solution.trace.records, 1):
        rows.append([k, repr(float(rec.objective)), _norm(rec.primal), _norm(rec.dual),
                     _norm(rec.eps_primal), _norm(rec.eps_dual), f"{rec.seconds:.6f}"])
    write_csv(path, TRACE_HEADER, rows)


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> ExperimentReport:
    """Run every configured solver and (optionally) write the report files.

    Files in ``cfg.out_dir``: ``psnr.csv`` (one row per solver and frame),
    ``path_<solver>.csv`` and ``convergence_<solver>.csv`` (the lambda path and
    the iteration trace at the selected lambda), ``truth.pgm`` and
    ``recovered_<solver>.pgm``, and finally ``manifest.txt``. Sequences add a
    ``_fNN`` frame suffix except for joint multi-task runs.
    """
    data = make_data(cfg)
    pilot = {}
    params = huber_params(cfg, data, pilot)
    report = ExperimentReport(cfg, params)
    for solver in cfg.solvers:
        if solver in _MULTITASK:
            report.runs.append(run_solver(cfg, data, solver, params, None, pilot))
        else:
            for t in range(cfg.frames):
                report.runs.append(run_solver(cfg, data, solver, params, t, pilot))
    if write:
        _write_outputs(cfg, data, report)
    return report


def _write_outputs(cfg, data, report):
    out = Path(cfg.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    manifest = out / MANIFEST_FILE
    if manifest.exists():
        manifest.unlink()  # its presence marks a complete run
    files = []

    for t, frame in enumerate(data.frames):
        name = f"truth{_suffix(cfg, t)}.pgm"
        write_pgm(out / name, frame)
        files.append(name)

    rows = []
    for run in report.runs:
        tag = f"{run.solver}{_suffix(cfg, run.frame)}"
        sol = run.path.solution
        write_path_csv(run.path, out / f"path_{tag}.csv")
        _write_trace(out / f"convergence_{tag}.csv", sol)
        files += [f"path_{tag}.csv", f"convergence_{tag}.csv"]
        cols = range(cfg.frames) if run.frame is None else [run.frame]
        for t, score, crit, rec in zip(cols, run.psnr, run.criterion, run.recovered):
            name = f"recovered_{run.solver}{_suffix(cfg, t)}.pgm"
            write_pgm(out / name, rec)
            files.append(name)
            rows.append([run.solver, t, repr(float(score)), repr(run.path.lambda_star),
                         repr(float(run.epsilon)),
                         repr(float(crit)),
                         str(run.path.met).lower(), len(run.path.records), sol.iterations,
                         run.path.n_factorizations, f"{run.seconds:.6f}"])
    write_csv(out / SUMMARY_FILE, SUMMARY_HEADER, rows)
    files.append(SUMMARY_FILE)

    items = list(cfg.items())
    items.append(("huber_threshold", repr(report.params.c)))
    items += [(f"sha256.{name}", sha256_file(out / name)) for name in sorted(files)]
    manifest.write_text(format_keyvalue(items))
    report.files = sorted(files) + [MANIFEST_FILE]

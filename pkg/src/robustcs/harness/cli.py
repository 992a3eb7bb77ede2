"""Command-line entry point: ``gen``, ``solve``, ``path``, ``experiment``, ``compare``.

Configuration comes from an optional ``key = value`` file (``--config``) with
per-key flag overrides (``--snr-db 15``, ``--solver admm --solver l1``).
Exit codes: 0 success, 1 invalid configuration, 2 runtime failure, 3 an
assertion miss in ``compare --assert``.
"""

import argparse
import dataclasses
import re
import sys
from pathlib import Path
from typing import Tuple

import numpy as np

from ..core_model import HuberParams
from ..regpath import solver_names, write_path_csv
from ..solvers import (solve_admm_affine, solve_admm_l1loss, solve_admm_robust,
                       solve_fista_robust, solve_multitask, solve_nested_robust,
                       sum_constraint)
from .experiment import (MANIFEST_FILE, SUMMARY_FILE, ConfigError, ExperimentConfig,
                         huber_params, make_data, run_experiment, run_solver)
from .io import format_keyvalue, read_csv, read_keyvalue, sha256_file, write_csv, write_pgm
from .data import psnr
from .wavelets import ihaar2d

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_ASSERT = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _flag(name):
    return "--" + name.replace("_", "-")


def _add_config_flags(p):
    p.add_argument("--config", help="key = value configuration file")
    for f in dataclasses.fields(ExperimentConfig):
        if f.type == Tuple[str, ...]:
            p.add_argument("--solver", dest="solvers", action="append", metavar="NAME",
                           help=f"repeatable; one of {', '.join(solver_names())}")
        else:
            p.add_argument(_flag(f.name), dest=f.name, metavar=f.name.upper())


def _config(args) -> ExperimentConfig:
    mapping = {}
    if args.config:
        try:
            mapping.update(read_keyvalue(args.config))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except ValueError as exc:
            raise ConfigError(f"{args.config}: {exc}") from None
    for f in dataclasses.fields(ExperimentConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            mapping[f.name] = value
    return ExperimentConfig.from_mapping(mapping)


def _out(cfg):
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_gen(args):
    cfg = _config(args)
    data = make_data(cfg)
    out = _out(cfg)
    files = []
    for t, frame in enumerate(data.frames):
        name = f"truth_f{t:02d}.pgm" if cfg.frames > 1 else "truth.pgm"
        write_pgm(out / name, frame)
        files.append(name)
    np.savez(out / "data.npz", phi=data.phi, coeffs=data.coeffs, y=data.y, noise=data.noise)
    files.append("data.npz")
    items = cfg.items() + [(f"sha256.{n}", sha256_file(out / n)) for n in sorted(files)]
    (out / MANIFEST_FILE).write_text(format_keyvalue(items))
    print(f"wrote {len(files)} artifacts to {out}")


def _single_solver(cfg):
    if len(cfg.solvers) != 1:
        raise ConfigError("this command takes exactly one --solver")
    return cfg.solvers[0]


def cmd_solve(args):
    cfg = _config(args)
    solver = _single_solver(cfg)
    if args.lam is None or not args.lam > 0:
        raise ConfigError("--lam must be a positive number")
    data = make_data(cfg)
    params = huber_params(cfg, data)
    opts = cfg.solver_options()
    out = _out(cfg)
    for t in range(1 if solver.startswith("mt-") else cfg.frames):
        prob = data.multitask() if solver.startswith("mt-") else data.problem(t)
        if solver == "cs":
            sol = solve_admm_robust(prob, args.lam, HuberParams.quadratic(), opts)
        elif solver == "admm":
            sol = solve_admm_robust(prob, args.lam, params, opts)
        elif solver == "fista":
            sol = solve_fista_robust(prob, args.lam, params, opts)
        elif solver == "nested":
            sol = solve_nested_robust(prob, args.lam, params, opts, cfg.inner_options())
        elif solver == "affine":
            c = sum_constraint(float(np.sum(data.coeffs[:, t])), cfg.n)
            sol = solve_admm_affine(prob, args.lam, c, params, opts)
        elif solver == "l1":
            sol = solve_admm_l1loss(prob, args.lam, opts)
        else:
            sol = solve_multitask(prob, args.lam, params, solver[3:], opts)
        x = sol.x.reshape(cfg.n, -1)
        cols = range(cfg.frames) if solver.startswith("mt-") else [t]
        for i, j in enumerate(cols):
            rec = np.clip(ihaar2d(x[:, i], cfg.size, cfg.size), 0.0, 1.0)
            tag = solver if cfg.frames == 1 else f"{solver}_f{j:02d}"
            write_pgm(out / f"recovered_{tag}.pgm", rec)
            print(f"{tag}: psnr {psnr(data.frames[j], rec):.3f} dB, "
                  f"{sol.iterations} iterations, {sol.status.value}")
        tag = solver if cfg.frames == 1 or solver.startswith("mt-") else f"{solver}_f{t:02d}"
        rows = [[k, repr(float(r.objective)), f"{r.seconds:.6f}"]
                for k, r in enumerate(sol.trace.records, 1)]
        write_csv(out / f"convergence_{tag}.csv", ["iteration", "objective", "seconds"], rows)


def cmd_path(args):
    cfg = _config(args)
    data = make_data(cfg)
    params = huber_params(cfg, data)
    out = _out(cfg)
    for solver in cfg.solvers:
        mt = solver.startswith("mt-")
        for t in [None] if mt else range(cfg.frames):
            run = run_solver(cfg, data, solver, params, t)
            tag = solver if t is None or cfg.frames == 1 else f"{solver}_f{t:02d}"
            write_path_csv(run.path, out / f"path_{tag}.csv")
            print(f"{tag}: lambda* {run.path.lambda_star:.6g} (epsilon {run.epsilon:.6g}, "
                  f"{len(run.path.records)} solves, met={run.path.met})")


def cmd_experiment(args):
    cfg = _config(args)
    report = run_experiment(cfg)
    print(f"{'solver':<10} {'mean PSNR (dB)':>15}")
    for solver in cfg.solvers:
        print(f"{solver:<10} {report.mean_psnr(solver):>15.3f}")
    print(f"wrote {len(report.files)} files to {cfg.out_dir}")


# "admm >= cs + 1.0", "l1 >= 20" or "affine <= admm + 1.5"
_ASSERT = re.compile(r"^\s*([A-Za-z][\w-]*)\s*(>=|<=)\s*(?:([A-Za-z][\w-]*)\s*(?:([+-])\s*)?)?"
                     r"(\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)?\s*$")


def _summary(run_dir):
    path = Path(run_dir) / SUMMARY_FILE
    if not (Path(run_dir) / MANIFEST_FILE).exists():
        raise RuntimeError(f"{run_dir} has no {MANIFEST_FILE}; the run is incomplete")
    means = {}
    for row in read_csv(path):
        means.setdefault(row["solver"], []).append(float(row["psnr_db"]))
    return {k: float(np.mean(v)) for k, v in means.items()}


def cmd_compare(args):
    summaries = [(d, _summary(d)) for d in args.runs]
    solvers = sorted({s for _, m in summaries for s in m})
    width = max([len(str(d)) for d, _ in summaries] + [3])
    print(f"{'run':<{width}} " + " ".join(f"{s:>9}" for s in solvers))
    for d, m in summaries:
        print(f"{str(d):<{width}} " + " ".join(
            f"{m[s]:>9.3f}" if s in m else f"{'-':>9}" for s in solvers))
    failed = False
    for expr in args.assertions or []:
        match = _ASSERT.match(expr)
        if match is None:
            raise ConfigError(f"bad assertion {expr!r}; use e.g. 'admm >= cs + 1.0'")
        a, op, b, sign, bound = match.groups()
        if bound is None and b is None or b is not None and bound is not None and sign is None:
            raise ConfigError(f"bad assertion {expr!r}; use e.g. 'admm >= cs + 1.0'")
        offset = float(bound or 0.0) * (-1.0 if sign == "-" else 1.0)
        vals = []
        for d, m in summaries:
            if a not in m or (b and b not in m):
                raise ConfigError(f"assertion {expr!r} names a solver missing from {d}")
            vals.append(m[a] - (m[b] if b else 0.0))
        med = float(np.median(vals))
        ok = med >= offset if op == ">=" else med <= offset
        failed |= not ok
        print(f"{'PASS' if ok else 'FAIL'} {expr.strip()} (median {med:.3f} over "
              f"{len(vals)} runs)")
    return EXIT_ASSERT if failed else EXIT_OK


def build_parser():
    parser = _Parser(prog="robustcs", description="Robust compressed-sensing studies "
                     "on synthetic random-bars images.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {"gen": "write the image, matrix and noise artifacts",
             "solve": "run one solver at one lambda",
             "path": "select lambda along the regularization path",
             "experiment": "full study: every solver, CSV traces, PGM images, manifest"}
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        _add_config_flags(p)
        if name == "solve":
            p.add_argument("--lam", type=float, help="regularization weight")
    p = sub.add_parser("compare", help="tabulate PSNR from prior experiment runs")
    p.add_argument("runs", nargs="+", help="experiment output directories")
    p.add_argument("--assert", dest="assertions", action="append", metavar="EXPR",
                   help="e.g. 'admm >= cs + 1.0', checked on the median over runs; "
                   "repeatable")
    return parser


_COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "path": cmd_path,
             "experiment": cmd_experiment, "compare": cmd_compare}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    try:
        code = _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"robustcs: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # reported, not swallowed: the exit code carries it
        print(f"robustcs: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())

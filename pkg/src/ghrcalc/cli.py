"""``ghrcalc`` command line: verify, qlms, optimize, qls.

Exit codes:

0  success, every check passed
1  a verification check failed
2  bad configuration or arguments
3  numerical failure (singular or rank-deficient matrix, divergence)
4  I/O failure
5  input file could not be parsed

Settings come from flags and an optional ``--config`` JSON file; flags
given on the command line win.  Relative ``--out`` paths are resolved
against ``$GHRCALC_OUTPUT_DIR`` when it is set.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .linalg import QVector, SingularMatrixError, real_adjoint
from .optimize import OptimizeConfig, minimize
from .qlms import LearningCurve, qlms_run, read_stream_csv, system_identification_stream
from .qls import QlsProblem, load_problem, qls_field, qls_gradient, qls_hessian, qls_report, random_problem
from .suite import SuiteConfig, run_suite, summarize, write_report

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4
EXIT_PARSE = 5

OUTPUT_DIR_ENV = "GHRCALC_OUTPUT_DIR"


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="generator seed (default 0)")
    p.add_argument("--config", help="JSON file with settings; command-line flags override it")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--json", action="store_true", default=None, help="emit JSON instead of CSV")
    p.add_argument("--parallel", type=int, help="worker processes for independent repetitions (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ghrcalc", description="GHR quaternion calculus experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the rule and identity suite and write a JSON report")
    _common(p)
    p.add_argument("--points", type=int, help="random points per field (default 20)")
    p.add_argument("--mus", type=int, help="random mu per point (default 10)")
    p.add_argument("--inject-fault", action="store_true", default=None, help="flip a sign in the product rule (harness self-test)")

    p = sub.add_parser("qlms", help="QLMS system identification; writes the learning curve")
    _common(p)
    p.add_argument("--taps", type=int, help="filter length N (default 4)")
    p.add_argument("--alpha", type=float, help="step size (default 0.02)")
    p.add_argument("--samples", type=int, help="stream length (default 5000)")
    p.add_argument("--sigma", type=float, help="measurement noise std (default 0.01)")
    p.add_argument("--variant", choices=["ghr", "componentwise", "conjugate"], help="update rule (default ghr)")
    p.add_argument("--absorb-half", action="store_true", default=None, help="fold the 1/2 into alpha")
    p.add_argument("--repeats", type=int, help="independent runs averaged into one curve (default 1)")
    p.add_argument("--input", help="signal-stream CSV to filter instead of a synthetic stream")

    p = sub.add_parser("optimize", help="minimize a QLS objective; writes the trace")
    _common(p)
    p.add_argument("--method", choices=["qgd", "newton_full", "newton_approx"], help="default qgd")
    p.add_argument("--problem", help="QLS problem JSON {A, b}; default is a random instance")
    p.add_argument("--m", type=int, help="rows of the random instance (default 8)")
    p.add_argument("--n", type=int, help="columns of the random instance (default 4)")
    p.add_argument("--step-size", type=float, help="QGD step (default 1/L, L the largest real Hessian eigenvalue)")
    p.add_argument("--max-iters", type=int, help="default 100")
    p.add_argument("--grad-tol", type=float, help="default 1e-8")
    p.add_argument("--backtracking", action="store_true", default=None)
    p.add_argument("--numeric-derivatives", action="store_true", default=None, help="finite differences instead of closed forms")

    p = sub.add_parser("qls", help="solve a quaternion least squares problem")
    _common(p)
    p.add_argument("problem", help="problem JSON {A, b}")
    return parser


DEFAULTS = {
    "verify": {"points": 20, "mus": 10, "inject_fault": False},
    "qlms": {
        "taps": 4,
        "alpha": 0.02,
        "samples": 5000,
        "sigma": 0.01,
        "variant": "ghr",
        "absorb_half": False,
        "repeats": 1,
        "input": None,
    },
    "optimize": {
        "method": "qgd",
        "problem": None,
        "m": 8,
        "n": 4,
        "step_size": None,
        "max_iters": 100,
        "grad_tol": 1e-8,
        "backtracking": False,
        "numeric_derivatives": False,
    },
    "qls": {},
}
COMMON = {"seed": 0, "out": None, "json": False, "parallel": 1}


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    cfg = dict(COMMON, **DEFAULTS[args.command])
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise CliError(EXIT_IO, f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise CliError(EXIT_PARSE, f"config is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise CliError(EXIT_CONFIG, "config file must hold a JSON object")
        loaded = {k.replace("-", "_"): v for k, v in loaded.items()}
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise CliError(EXIT_CONFIG, f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key, value in vars(args).items():
        if key in cfg and value is not None:
            cfg[key] = value
    if args.command == "qls":
        cfg["problem"] = args.problem
    if not isinstance(cfg["parallel"], int) or cfg["parallel"] < 1:
        raise CliError(EXIT_CONFIG, "--parallel must be a positive integer")
    return cfg


def output_path(out: str | None) -> Path | None:
    if out is None:
        return None
    path = Path(out)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    return path


def emit(text: str, out: str | None) -> None:
    path = output_path(out)
    if path is None:
        sys.stdout.write(text)
        return
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc}") from exc


def _positive(cfg: dict, *keys: str) -> None:
    for key in keys:
        if not cfg[key] > 0:
            raise CliError(EXIT_CONFIG, f"{key} must be positive, got {cfg[key]}")


# commands


def cmd_verify(cfg: dict) -> int:
    _positive(cfg, "points", "mus")
    suite_cfg = SuiteConfig(
        points=cfg["points"],
        mus=cfg["mus"],
        fault=bool(cfg["inject_fault"]),
        parallel=cfg["parallel"],
    )
    records = run_suite(cfg["seed"], suite_cfg)
    buf = io.StringIO()
    write_report(records, buf)
    emit(buf.getvalue(), cfg["out"])
    failed = 0
    for rule, s in summarize(records).items():
        failed += s["failures"]
        print(f"{rule:24s} {s['checks']:6d} checks  {s['failures']:4d} failed  extreme {s['worst']:.3e}", file=sys.stderr)
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def _qlms_repeat(job: tuple) -> LearningCurve:
    seq, cfg = job
    rng = np.random.default_rng(seq)
    samples, w_true = system_identification_stream(rng, cfg["taps"], cfg["samples"], cfg["sigma"])
    return qlms_run(samples, cfg["alpha"], QVector.zeros(cfg["taps"]), w_true, cfg["variant"], cfg["absorb_half"])


def _mean_curve(curves: list[LearningCurve]) -> LearningCurve:
    length = min(len(c.weight_error) for c in curves)
    mean = LearningCurve(
        weight_error=np.mean([c.weight_error[:length] for c in curves], axis=0).tolist(),
        squared_error=np.mean([c.squared_error[:length] for c in curves], axis=0).tolist(),
    )
    mean.diverged = any(c.diverged for c in curves)
    return mean


def cmd_qlms(cfg: dict) -> int:
    if cfg["alpha"] < 0:
        raise CliError(EXIT_CONFIG, "alpha must be nonnegative")
    _positive(cfg, "taps", "samples", "repeats")
    if cfg["sigma"] < 0:
        raise CliError(EXIT_CONFIG, "sigma must be nonnegative")
    if cfg["input"]:
        try:
            with open(cfg["input"], newline="") as fh:
                samples = read_stream_csv(fh)
        except OSError as exc:
            raise CliError(EXIT_IO, f"cannot read {cfg['input']}: {exc}") from exc
        except ValueError as exc:
            raise CliError(EXIT_PARSE, f"cannot parse {cfg['input']}: {exc}") from exc
        if not samples:
            raise CliError(EXIT_PARSE, "signal stream is empty")
        try:
            curve = qlms_run(samples, cfg["alpha"], QVector.zeros(len(samples[0].x)), None, cfg["variant"], cfg["absorb_half"])
        except ValueError as exc:
            raise CliError(EXIT_CONFIG, str(exc)) from exc
    else:
        root = np.random.SeedSequence(cfg["seed"])
        # a single run uses the root seed, matching default_rng(seed) in library code
        seqs = [root] if cfg["repeats"] == 1 else root.spawn(cfg["repeats"])
        jobs = [(s, cfg) for s in seqs]
        if cfg["parallel"] > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(cfg["parallel"]) as pool:
                curves = list(pool.map(_qlms_repeat, jobs))
        else:
            curves = [_qlms_repeat(j) for j in jobs]
        curve = curves[0] if len(curves) == 1 else _mean_curve(curves)

    if cfg["json"]:
        data = {
            "n": list(range(len(curve.weight_error))),
            "weight_error": [None if np.isnan(v) else v for v in curve.weight_error],
            "squared_error": curve.squared_error,
            "diverged": curve.diverged,
        }
        text = json.dumps(data) + "\n"
    else:
        buf = io.StringIO()
        curve.write_csv(buf)
        text = buf.getvalue()
    emit(text, cfg["out"])
    if curve.diverged:
        print("filter diverged", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _load_problem(path: str) -> QlsProblem:
    try:
        return load_problem(path)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc}") from exc
    except (ValueError, KeyError, TypeError) as exc:
        raise CliError(EXIT_PARSE, f"cannot parse problem {path}: {exc}") from exc


def cmd_optimize(cfg: dict) -> int:
    try:
        opt = OptimizeConfig(
            step_size=cfg["step_size"] or 0.1,
            max_iters=cfg["max_iters"],
            grad_tol=cfg["grad_tol"],
            method=cfg["method"],
            backtracking=bool(cfg["backtracking"]),
        )
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from exc
    rng = np.random.default_rng(cfg["seed"])
    if cfg["problem"]:
        problem = _load_problem(cfg["problem"])
    else:
        _positive(cfg, "m", "n")
        try:
            problem = random_problem(rng, cfg["m"], cfg["n"])
        except ValueError as exc:
            raise CliError(EXIT_CONFIG, str(exc)) from exc
    f = qls_field(problem)
    q0 = QVector.zeros(problem.n)
    if cfg["step_size"] is None:
        # the real Hessian of the QLS cost has spectrum 4 eig(chi(H_qq*))
        lam = float(np.linalg.eigvalsh(real_adjoint(qls_hessian(problem).Hqq_conj)).max())
        if lam > 0:
            opt = dataclasses.replace(opt, step_size=0.25 / lam)
    if cfg["numeric_derivatives"]:
        trace = minimize(f, q0, opt)
    else:
        bundle = qls_hessian(problem)
        trace = minimize(f, q0, opt, lambda q: qls_gradient(problem, q), lambda q: bundle)

    if cfg["json"]:
        text = trace.dumps() + "\n"
    else:
        buf = io.StringIO()
        trace.write_csv(buf)
        text = buf.getvalue()
    emit(text, cfg["out"])
    print(f"termination: {trace.termination} after {trace.iterations} iterations", file=sys.stderr)
    if trace.termination in ("singular_hessian", "diverged"):
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_qls(cfg: dict) -> int:
    problem = _load_problem(cfg["problem"])
    try:
        report = qls_report(problem)
    except SingularMatrixError as exc:
        raise CliError(EXIT_NUMERICAL, f"A^H A is singular or too ill-conditioned: {exc}") from exc
    if report.condition > 1e8:
        print(f"warning: condition estimate {report.condition:.3e}", file=sys.stderr)
    data = report.to_json()
    if cfg["json"]:
        text = json.dumps(data, indent=1) + "\n"
    else:
        buf = io.StringIO()
        buf.write("index,a,b,c,d\n")
        for k, row in enumerate(report.q.data):
            buf.write(",".join([str(k)] + [repr(float(v)) for v in row]) + "\n")
        text = buf.getvalue()
        print(
            f"residual_norm {report.residual_norm!r}  normal_equation_residual {report.normal_residual!r}"
            f"  condition_estimate {report.condition!r}",
            file=sys.stderr,
        )
    emit(text, cfg["out"])
    return EXIT_OK


COMMANDS = {"verify": cmd_verify, "qlms": cmd_qlms, "optimize": cmd_optimize, "qls": cmd_qls}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except CliError as exc:
        print(f"ghrcalc {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except (TypeError, ValueError) as exc:
        # bad values that slipped in through the config file
        print(f"ghrcalc {args.command}: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

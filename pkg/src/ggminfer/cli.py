"""Command-line interface.

Node indices on the command line and in every file are one-based. Results go
to stdout as ``key=value`` lines; diagnostics go to stderr. Exit codes: 0 on
success, 2 for usage, input or config errors, 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import platform
import shutil
import sys
import tempfile
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import BACKEND
from .ant import threshold
from .errors import NoConvergence
from .numkit import DataMatrix
from .pair_inference import confidence_interval, estimate_full, estimate_pair, partial_correlation
from .scaled_lasso import PenaltyPolicy
from .sim_harness import (
    ExperimentConfig,
    run_coverage_experiment,
    run_estimation_experiment,
    run_normality_diagnostic,
    run_roc_sweep,
    run_support_experiment,
)
from .sim_harness import output

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
DATA_COMMANDS = ("estimate", "recover", "entry")
SIM_COMMANDS = ("simulate", "coverage", "roc", "normality")


class UsageError(Exception):
    pass


def _add_policy_flags(p):
    p.add_argument("--method", choices=("sl", "lse"), default=None, help="node regression (default lse)")
    p.add_argument("--policy", choices=("conservative", "quantile"), default=None, help="penalty rule (default quantile)")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--k", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ggminfer", description="Entrywise inference for Gaussian graphical models.")
    parser.add_argument("--version", action="version", version=f"ggminfer {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, helptext in (
        ("estimate", "estimate the full precision matrix"),
        ("recover", "thresholded support recovery"),
        ("entry", "estimate and CI for one entry"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--data", required=True, help="headerless CSV, rows are observations")
        p.add_argument("--transpose", action="store_true", help="file rows are variables")
        p.add_argument("--seed", type=int, default=None, help="recorded; these commands draw no random numbers")
        p.add_argument("--out", default=None, help="directory for CSV output")
        _add_policy_flags(p)
        if name == "recover":
            p.add_argument("--xi0", type=float, default=2.0)
        if name == "entry":
            p.add_argument("--i", type=int, required=True)
            p.add_argument("--j", type=int, required=True)
            p.add_argument("--level", type=float, default=0.95)

    for name, helptext in (
        ("simulate", "point estimates over replications"),
        ("coverage", "confidence interval coverage"),
        ("roc", "support recovery over a threshold grid"),
        ("normality", "standardized errors and KS test"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", default=None, help="JSON file with ExperimentConfig fields")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--p", type=int, default=None)
        p.add_argument("--reps", type=int, default=None)
        _add_policy_flags(p)
        p.add_argument("--xi0", type=float, default=None)
        p.add_argument("--level", type=float, default=None)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--out", required=True, help="output directory")
        if name == "simulate":
            p.add_argument("--both", action="store_true", help="run both node regressions")
        if name == "normality":
            p.add_argument("--i", type=int, default=None)
            p.add_argument("--j", type=int, default=None)
            p.add_argument("--oracle", action="store_true", help="use the true regression coefficients")
    return parser


def _policy(args, base: PenaltyPolicy | None = None) -> PenaltyPolicy:
    base = base or PenaltyPolicy.quantile(k=1, eps=0.0)
    kind = args.policy or base.kind
    fields = {"delta": base.delta, "eps": base.eps, "k": base.k} if kind == base.kind else {}
    for key in ("delta", "eps", "k"):
        if getattr(args, key) is not None:
            fields[key] = getattr(args, key)
    return PenaltyPolicy(kind, **fields)


def load_data(path, transpose=False) -> DataMatrix:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            v = np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    except (OSError, ValueError, UserWarning) as exc:
        raise UsageError(f"cannot read data file {path}: {exc}") from exc
    if transpose:
        v = v.T
    try:
        return DataMatrix(v)
    except ValueError as exc:
        raise UsageError(f"bad data file {path}: {exc}") from exc


def _emit(**kv):
    for k, v in kv.items():
        print(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}")


def _method(args):
    return args.method or "lse"


def _node(k, p, flag):
    if k is None or not 1 <= k <= p:
        raise UsageError(f"{flag} must be between 1 and {p}")
    return k - 1


def cmd_entry(args):
    x = load_data(args.data, args.transpose)
    i, j = _node(args.i, x.p, "--i"), _node(args.j, x.p, "--j")
    if i == j:
        raise UsageError("--i and --j must differ")
    if not 0.0 <= args.level < 1.0:
        raise UsageError("--level must lie in [0, 1)")
    pe = estimate_pair(x, i, j, _policy(args), _method(args))
    ci = confidence_interval(pe, level=args.level)
    r, rci = partial_correlation(pe, level=args.level)
    vals = dict(
        i=i + 1, j=j + 1, n=x.n, p=x.p, method=pe.method,
        omega_ii=float(pe.omega[0, 0]), omega_jj=float(pe.omega[1, 1]), omega_ij=pe.omega_ij,
        ci_lo=ci.lower, ci_hi=ci.upper, r_ij=r, r_ci_lo=rci.lower, r_ci_hi=rci.upper, level=args.level,
    )
    if args.seed is not None:
        vals["seed"] = args.seed
    _emit(**vals)
    if args.out:
        def write(tmp):
            path = tmp / "entry.csv"
            output._write(path, tuple(vals), [tuple(vals.values())])
            return ["entry.csv"]
        _publish(Path(args.out), write)


def cmd_estimate(args):
    x = load_data(args.data, args.transpose)
    est = estimate_full(x, _policy(args), _method(args))
    _emit(n=x.n, p=x.p, method=est.method, lambda0=est.lambda0, solver_runs=est.solver_runs,
          mean_support_size=est.mean_support_size, missing_pairs=len(est.missing))
    if args.out:
        _publish(Path(args.out), lambda tmp: [output.write_matrix(tmp / "omega_hat.csv", est.omega_hat).name])


def cmd_recover(args):
    x = load_data(args.data, args.transpose)
    if not args.xi0 > 0:
        raise UsageError("--xi0 must be positive")
    est = estimate_full(x, _policy(args), _method(args))
    thr = threshold(est, args.xi0)
    _emit(n=x.n, p=x.p, method=est.method, xi0=args.xi0, edges=len(thr.edges), missing_pairs=len(est.missing))
    out = Path(args.out or ".")

    def write(tmp):
        output.write_matrix(tmp / "omega_thr.csv", thr.omega_thr)
        output.write_edges(tmp / "edges.csv", thr.edges, thr.omega_thr)
        return ["omega_thr.csv", "edges.csv"]

    _publish(out, write)


def _publish(out: Path, write):
    """Write into a scratch directory, then move finished files into ``out``."""
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".ggminfer-", dir=out.parent))
    try:
        names = write(tmp)
        out.mkdir(parents=True, exist_ok=True)
        for name in names:
            (tmp / name).replace(out / name)
    finally:
        shutil.rmtree(tmp, ignore_errors=True)


def experiment_config(args) -> ExperimentConfig:
    d = {}
    if args.config:
        try:
            d = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(d, dict):
            raise UsageError("config must be a JSON object")
    for flag, key in (("seed", "seed"), ("n", "n"), ("p", "p"), ("reps", "replications"),
                      ("xi0", "xi0"), ("level", "ci_level"), ("method", "method")):
        if getattr(args, flag, None) is not None:
            d[key] = getattr(args, flag)
    if getattr(args, "both", False):
        d["method"] = "both"
    if getattr(args, "oracle", False):
        d["use_oracle"] = True
    if getattr(args, "i", None) is not None or getattr(args, "j", None) is not None:
        if args.i is None or args.j is None:
            raise UsageError("--i and --j go together")
        d["normality_entry"] = [args.i, args.j]
    missing = [k for k in ("seed", "n", "p") if k not in d]
    if missing:
        raise UsageError(f"missing required settings: {', '.join(missing)} (give flags or a config)")
    try:
        base = d.pop("policy", None)
        base = PenaltyPolicy(**base) if isinstance(base, dict) else None
        d["policy"] = _policy(args, base)
        return ExperimentConfig.from_dict(d)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid config: {exc}") from exc


def config_hash(cfg: ExperimentConfig) -> str:
    blob = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _manifest(command, cfg, files, failures):
    import scipy

    return {
        "command": command,
        "config": cfg.to_dict(),
        "config_sha256": config_hash(cfg),
        "seed": cfg.seed,
        "failures": [{"rep": f.rep + 1, "error": f.error, "message": f.message} for f in failures],
        "files": sorted(files),
        "versions": {
            "ggminfer": __version__,
            "kernels": BACKEND,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }


def cmd_experiment(args):
    cfg = experiment_config(args)
    command = args.command
    threads = max(1, args.threads)
    if command in ("roc", "normality") and cfg.method == "both":
        raise UsageError(f"{command} runs a single method")

    if command in ("simulate", "coverage"):
        res = (run_estimation_experiment if command == "simulate" else run_coverage_experiment)(cfg, threads)
        failures = res.failures

        def write(tmp):
            output.write_estimates(tmp / "estimates.csv", res)
            output.write_coverage(tmp / "coverage.csv", res)
            return ["estimates.csv", "coverage.csv"]

        for s in res.summary:
            tag = f"{s.method}.{s.i + 1}.{s.j + 1}"
            _emit(**{f"{tag}.mean": s.mean, f"{tag}.sd": s.sd, f"{tag}.coverage": s.coverage})
    elif command == "roc":
        rep = run_roc_sweep(cfg, threads=threads)
        failures = rep.failures

        def write(tmp):
            output.write_support(tmp / "support.csv", rep)
            output.write_roc(tmp / "roc.csv", rep)
            return ["support.csv", "roc.csv"]

        for scope, st in rep.scopes.items():
            _emit(**{f"{scope}.tp": st.tp, f"{scope}.fp": st.fp, f"{scope}.tpr": st.tpr, f"{scope}.fpr": st.fpr})
        _emit(roc_points=len(rep.roc))
    else:
        res = run_normality_diagnostic(cfg, threads=threads)
        failures = res.failures

        def write(tmp):
            output.write_normality(tmp / "normality.csv", res)
            return ["normality.csv"]

        _emit(oracle=res.oracle, count=int(res.kappa.size), ks_statistic=res.ks_statistic, ks_pvalue=res.ks_pvalue)

    _emit(replications=cfg.replications, failures=len(failures), config_sha256=config_hash(cfg))
    for f in failures:
        print(f"warning: replication {f.rep + 1} failed: {f.error}: {f.message}", file=sys.stderr)

    def write_all(tmp):
        names = write(tmp)
        manifest = _manifest(command, cfg, names, failures)
        (tmp / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return names + ["manifest.json"]

    _publish(Path(args.out), write_all)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {"estimate": cmd_estimate, "recover": cmd_recover, "entry": cmd_entry}
    handler = handlers.get(args.command, cmd_experiment)
    try:
        handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, NoConvergence) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

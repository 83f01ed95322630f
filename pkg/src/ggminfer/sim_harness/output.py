"""CSV writers for experiment results.

Files are UTF-8 with a header row and ``\\n`` line endings. Floats use
Python's shortest round-trip repr, so identical results give identical
bytes. Node and replication indices are written one-based.
"""

from __future__ import annotations

import csv
from pathlib import Path

ESTIMATES_HEADER = ("rep", "i", "j", "method", "omega_hat", "r_hat", "ci_lo", "ci_hi")
SUPPORT_HEADER = ("rep", "scope", "tp", "fp", "tpr", "fpr")
ROC_HEADER = ("multiplier", "tpr", "fpr")
NORMALITY_HEADER = ("rep", "kappa")
COVERAGE_HEADER = ("method", "i", "j", "truth", "mean", "sd", "coverage", "r_truth", "r_mean", "r_sd", "r_coverage")


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write(path, header, rows):
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def write_estimates(path, result):
    rows = (
        (r["rep"] + 1, r["i"] + 1, r["j"] + 1, r["method"],
         r["omega_hat"], r["r_hat"], r["ci_lo"], r["ci_hi"])
        for r in result.rows
    )
    return _write(path, ESTIMATES_HEADER, rows)


def write_coverage(path, result):
    rows = (
        (s.method, s.i + 1, s.j + 1, s.truth, s.mean, s.sd, s.coverage,
         s.r_truth, s.r_mean, s.r_sd, s.r_coverage)
        for s in result.summary
    )
    return _write(path, COVERAGE_HEADER, rows)


def write_support(path, report):
    rows = ((r["rep"] + 1, r["scope"], r["tp"], r["fp"], r["tpr"], r["fpr"]) for r in report.rows)
    return _write(path, SUPPORT_HEADER, rows)


def write_roc(path, report):
    return _write(path, ROC_HEADER, report.roc)


def write_normality(path, result):
    # failed replications are absent, so rep numbers can skip
    failed = {f.rep for f in result.failures}
    reps = [r for r in range(result.config.replications) if r not in failed]
    return _write(path, NORMALITY_HEADER, ((r + 1, float(k)) for r, k in zip(reps, result.kappa)))


def write_matrix(path, m):
    return _write_headerless(path, ([float(v) for v in row] for row in m))


def _write_headerless(path, rows):
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def write_edges(path, edges, values=None):
    """Edge list ``i, j[, omega]`` with one-based indices in ascending order."""
    rows = []
    for i, j in sorted(edges):
        row = [i + 1, j + 1]
        if values is not None:
            row.append(float(values[i, j]))
        rows.append(row)
    header = ("i", "j", "omega") if values is not None else ("i", "j")
    return _write(path, header, rows)

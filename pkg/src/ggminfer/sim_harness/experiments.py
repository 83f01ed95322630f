"""Replicated Monte Carlo experiments on synthetic graphical models.

Every replication draws its data from its own random stream (the
replication index), so results do not depend on execution order or on the
number of worker processes. Aggregation folds replications in index order.
"""

from __future__ import annotations

import functools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np
from scipy import stats

from ..ant import threshold, truncate
from ..errors import NoConvergence
from ..numkit import DataMatrix, _column_stream, demean_transform, inverse_spd, sample_mvn
from ..pair_inference import (
    GraphDesign,
    confidence_interval,
    estimate_full,
    estimate_oracle_pair,
    graph_penalty,
    normalize_method,
    pair_from_design,
    partial_correlation,
    true_pair_coefficients,
)
from ..scaled_lasso import PenaltyPolicy
from .models import (
    BlockModelSpec,
    LatentModelSpec,
    build_block_precision,
    build_latent_model,
    norm_losses,
    true_edges,
)

DEFAULT_ENTRIES = ((0, 1), (0, 2), (0, 3), (0, 9))
DEFAULT_MULTIPLIERS = tuple(round(0.05 * k, 2) for k in range(61))
_METHOD_SETS = {
    "sl": ("scaled_lasso",),
    "lse": ("lse_refit",),
    "both": ("scaled_lasso", "lse_refit"),
}
_RECOVERABLE = (ArithmeticError, NoConvergence, ValueError)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines an experiment's output.

    Node indices in ``entries`` and ``normality_entry`` are zero-based.
    ``method`` is ``"sl"``, ``"lse"`` or ``"both"``. A positive ``latent_h``
    selects the latent-variable model built around the block model.
    """

    seed: int
    n: int
    p: int
    replications: int = 100
    method: str = "lse"
    policy: PenaltyPolicy = PenaltyPolicy.quantile(k=1, eps=0.0)
    xi0: float = 2.0
    ci_level: float = 0.95
    entries: tuple = DEFAULT_ENTRIES
    normality_entry: tuple = (0, 9)
    use_oracle: bool = False
    multipliers: tuple = DEFAULT_MULTIPLIERS
    alphas: tuple = (1.0, 2.0, 4.0)
    band1: float = 0.5
    band2: float = 0.4
    latent_h: int = 0
    coupling_scale: float = 0.0
    max_a_n: float = 1.0
    demean: bool = False

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(tuple(int(k) for k in e) for e in self.entries))
        object.__setattr__(self, "normality_entry", tuple(int(k) for k in self.normality_entry))
        object.__setattr__(self, "multipliers", tuple(float(m) for m in self.multipliers))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if isinstance(self.policy, dict):
            object.__setattr__(self, "policy", PenaltyPolicy(**self.policy))
        self.validate()

    def validate(self):
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if self.n < 4:
            raise ValueError("n must be at least 4")
        if self.method not in _METHOD_SETS:
            raise ValueError(f"method must be one of {sorted(_METHOD_SETS)}")
        if not 0.0 <= self.ci_level < 1.0:
            raise ValueError("ci_level must lie in [0, 1)")
        if not self.xi0 > 0:
            raise ValueError("xi0 must be positive")
        if self.latent_h < 0 or self.coupling_scale < 0:
            raise ValueError("latent_h and coupling_scale must be nonnegative")
        if any(m < 0 or not math.isfinite(m) for m in self.multipliers):
            raise ValueError("multipliers must be finite and nonnegative")
        self.block_spec()  # checks p
        for e in (*self.entries, self.normality_entry):
            if len(e) != 2 or e[0] == e[1] or not all(0 <= k < self.p for k in e):
                raise ValueError(f"entry {e} is not a pair of distinct nodes below p={self.p}")

    @property
    def methods(self) -> tuple:
        return tuple(normalize_method(m) for m in _METHOD_SETS[self.method])

    def block_spec(self) -> BlockModelSpec:
        return BlockModelSpec(self.p, self.alphas, self.band1, self.band2)

    def to_dict(self) -> dict:
        """JSON-ready mapping; node indices become one-based."""
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["policy"] = self.policy.to_dict()
        d["entries"] = [[i + 1, j + 1] for i, j in self.entries]
        d["normality_entry"] = [k + 1 for k in self.normality_entry]
        d["multipliers"] = list(self.multipliers)
        d["alphas"] = list(self.alphas)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        """Inverse of :meth:`to_dict` (one-based node indices)."""
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        d = dict(d)
        if "entries" in d:
            d["entries"] = tuple((int(i) - 1, int(j) - 1) for i, j in d["entries"])
        if "normality_entry" in d:
            d["normality_entry"] = tuple(int(k) - 1 for k in d["normality_entry"])
        if "policy" in d and isinstance(d["policy"], dict):
            d["policy"] = PenaltyPolicy(**d["policy"])
        for key in ("alphas", "multipliers"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class Failure:
    rep: int
    error: str
    message: str


@dataclass(eq=False)
class _Truth:
    sample_omega: np.ndarray  # precision of the sampled variables
    sigma: np.ndarray
    edges: np.ndarray  # boolean truth for support recovery
    labels: np.ndarray  # block index of each node
    a_n: float = 0.0
    latent: object = None


@functools.lru_cache(maxsize=4)
def _truth(cfg: ExperimentConfig) -> _Truth:
    spec = cfg.block_spec()
    if cfg.latent_h > 0:
        model = build_latent_model(
            LatentModelSpec(cfg.p, cfg.latent_h, cfg.n, cfg.coupling_scale, spec, cfg.max_a_n), cfg.seed
        )
        omega = model.omega
        return _Truth(omega, inverse_spd(omega), true_edges(model.sparse), spec.labels(), model.a_n, model)
    omega = build_block_precision(spec)
    return _Truth(omega, inverse_spd(omega), true_edges(omega), spec.labels())


def truth_for(cfg: ExperimentConfig) -> np.ndarray:
    """Precision matrix the experiment samples from (the effective one for latent models)."""
    return _truth(cfg).sample_omega


def latent_model_for(cfg: ExperimentConfig):
    """The :class:`LatentModel` behind a latent config, or ``None`` for the plain block model."""
    return _truth(cfg).latent


def draw_sample(cfg: ExperimentConfig, rep: int) -> DataMatrix:
    """Data for replication ``rep`` (zero-based)."""
    t = _truth(cfg)
    if not cfg.demean:
        return sample_mvn(cfg.seed, cfg.n, t.sigma, stream=rep)
    # one extra row is spent on removing an unknown mean
    mean = 3.0 * _column_stream(cfg.seed, rep, cfg.p).standard_normal(cfg.p)
    return demean_transform(sample_mvn(cfg.seed, cfg.n + 1, t.sigma, mean=mean, stream=rep))


def _run_reps(task, cfg, threads):
    reps = range(cfg.replications)
    if threads is None or threads <= 1 or cfg.replications == 1:
        return [task(cfg, r) for r in reps]
    with ProcessPoolExecutor(max_workers=min(threads, cfg.replications)) as pool:
        return list(pool.map(task, [cfg] * cfg.replications, reps))


def _guard(fn):
    @functools.wraps(fn)
    def run(cfg, rep):
        try:
            return fn(cfg, rep)
        except _RECOVERABLE as exc:
            return Failure(rep, type(exc).__name__, str(exc))

    return run


# point estimation and coverage


@dataclass(frozen=True)
class EntrySummary:
    method: str
    i: int
    j: int
    truth: float
    mean: float
    sd: float
    r_truth: float
    r_mean: float
    r_sd: float
    coverage: float
    r_coverage: float
    count: int


@dataclass(eq=False)
class EstimationResult:
    config: ExperimentConfig
    rows: list  # dicts, one per (rep, method, entry), replication-ordered
    summary: list  # EntrySummary per (method, entry)
    failures: list

    def entry(self, method: str, i: int, j: int) -> EntrySummary:
        method = normalize_method(method)
        for s in self.summary:
            if (s.method, s.i, s.j) == (method, i, j):
                return s
        raise KeyError((method, i, j))


@_guard
def _estimation_rep(cfg, rep):
    x = draw_sample(cfg, rep)
    design = GraphDesign(x)
    lam0 = graph_penalty(cfg.policy, x.n, x.p)
    rows = []
    for method in cfg.methods:
        for i, j in cfg.entries:
            pe = pair_from_design(design, i, j, lam0, method)
            ci = confidence_interval(pe, level=cfg.ci_level)
            r, rci = partial_correlation(pe, level=cfg.ci_level)
            rows.append({
                "rep": rep, "i": i, "j": j, "method": method,
                "omega_hat": pe.omega_ij, "r_hat": r,
                "ci_lo": ci.lower, "ci_hi": ci.upper,
                "r_ci_lo": rci.lower, "r_ci_hi": rci.upper,
            })
    return rows


def _partial_corr(omega, i, j):
    return float(-omega[i, j] / math.sqrt(omega[i, i] * omega[j, j]))


def run_estimation_experiment(cfg: ExperimentConfig, threads: int = 1) -> EstimationResult:
    """Mean, sample sd and CI coverage of each tracked entry per method."""
    omega = _truth(cfg).sample_omega
    rows, failures = [], []
    for out in _run_reps(_estimation_rep, cfg, threads):
        (failures.append if isinstance(out, Failure) else rows.extend)(out)
    summary = []
    for method in cfg.methods:
        for i, j in cfg.entries:
            sel = [r for r in rows if r["method"] == method and (r["i"], r["j"]) == (i, j)]
            w = np.array([r["omega_hat"] for r in sel])
            rr = np.array([r["r_hat"] for r in sel])
            truth, rt = float(omega[i, j]), _partial_corr(omega, i, j)
            cov = np.mean([r["ci_lo"] <= truth <= r["ci_hi"] for r in sel]) if sel else math.nan
            rcov = np.mean([r["r_ci_lo"] <= rt <= r["r_ci_hi"] for r in sel]) if sel else math.nan
            summary.append(EntrySummary(
                method, i, j, truth,
                float(np.mean(w)) if sel else math.nan,
                float(np.std(w, ddof=1)) if len(sel) > 1 else math.nan,
                rt,
                float(np.mean(rr)) if sel else math.nan,
                float(np.std(rr, ddof=1)) if len(sel) > 1 else math.nan,
                float(cov), float(rcov), len(sel),
            ))
    return EstimationResult(cfg, rows, summary, failures)


def run_coverage_experiment(cfg: ExperimentConfig, threads: int = 1) -> EstimationResult:
    """Same run as :func:`run_estimation_experiment`; read ``coverage`` and ``r_coverage``."""
    return run_estimation_experiment(cfg, threads)


# support recovery


SCOPES = ("overall", "block1", "block2", "block3")


@dataclass(frozen=True)
class ScopeStats:
    tp: float
    fp: float
    tpr: float
    fpr: float
    true_edges: int
    non_edges: int


@dataclass(eq=False)
class SupportReport:
    config: ExperimentConfig
    method: str
    scopes: dict  # scope -> ScopeStats (means over successful replications)
    rows: list  # per (rep, scope) dicts
    roc: list = field(default_factory=list)  # (multiplier, tpr, fpr)
    edge_sets: list = field(default_factory=list, repr=False)
    failures: list = field(default_factory=list)


def _scope_masks(truth: _Truth):
    p = truth.labels.shape[0]
    upper = np.triu(np.ones((p, p), dtype=bool), 1)
    masks = {"overall": upper}
    for k in range(3):
        inside = truth.labels == k
        masks[f"block{k + 1}"] = upper & inside[:, None] & inside[None, :]
    return masks


def _single_method(cfg) -> str:
    if len(cfg.methods) != 1:
        raise ValueError("support recovery runs one method at a time; choose sl or lse")
    return cfg.methods[0]


def _count(found, truth, masks):
    out = {}
    for scope, mask in masks.items():
        t = truth & mask
        f = ~truth & mask
        tp = int(np.sum(found & t))
        fp = int(np.sum(found & f))
        nt, nf = int(np.sum(t)), int(np.sum(f))
        out[scope] = (tp, fp, tp / nt if nt else 0.0, fp / nf if nf else 0.0)
    return out


def _support_body(cfg, rep, with_roc):
    t = _truth(cfg)
    x = draw_sample(cfg, rep)
    est = estimate_full(x, cfg.policy, _single_method(cfg))
    thr = threshold(est, cfg.xi0)
    found = thr.edge_matrix()
    masks = _scope_masks(t)
    counts = _count(found, t.edges, masks)
    roc = []
    if with_roc:
        w = np.abs(est.omega_hat)
        finite = np.isfinite(w) & masks["overall"]
        for m in cfg.multipliers:
            keep = finite & (w >= m * thr.thresholds)
            tp, fp, tpr, fpr = _count(keep, t.edges, {"overall": masks["overall"]})["overall"]
            roc.append((tpr, fpr))
    return counts, roc, thr.edges


@_guard
def _support_rep(cfg, rep):
    return _support_body(cfg, rep, False)


@_guard
def _roc_rep(cfg, rep):
    return _support_body(cfg, rep, True)


def _support_report(cfg, outs, with_roc):
    t = _truth(cfg)
    masks = _scope_masks(t)
    rows, failures, edge_sets, rocs = [], [], [], []
    for rep, out in enumerate(outs):
        if isinstance(out, Failure):
            failures.append(out)
            continue
        counts, roc, edges = out
        edge_sets.append(edges)
        rocs.append(roc)
        for scope in SCOPES:
            tp, fp, tpr, fpr = counts[scope]
            rows.append({"rep": rep, "scope": scope, "tp": tp, "fp": fp, "tpr": tpr, "fpr": fpr})
    scopes = {}
    for scope in SCOPES:
        sel = [r for r in rows if r["scope"] == scope]
        nt = int(np.sum(t.edges & masks[scope]))
        nf = int(np.sum(~t.edges & masks[scope]))
        mean = (lambda k: float(np.mean([r[k] for r in sel]))) if sel else (lambda k: math.nan)
        scopes[scope] = ScopeStats(mean("tp"), mean("fp"), mean("tpr"), mean("fpr"), nt, nf)
    roc = []
    if with_roc and rocs:
        arr = np.array(rocs)  # reps x multipliers x 2
        avg = arr.mean(axis=0)
        roc = [(m, float(a), float(b)) for m, (a, b) in zip(cfg.multipliers, avg)]
    return SupportReport(cfg, _single_method(cfg), scopes, rows, roc, edge_sets, failures)


def run_support_experiment(cfg: ExperimentConfig, threads: int = 1) -> SupportReport:
    """ANT support recovery at ``cfg.xi0``; TP/FP/TPR/FPR per scope."""
    _single_method(cfg)
    return _support_report(cfg, _run_reps(_support_rep, cfg, threads), False)


def run_roc_sweep(cfg: ExperimentConfig, multipliers=None, threads: int = 1) -> SupportReport:
    """Support recovery with every threshold scaled by each multiplier in turn."""
    if multipliers is not None:
        cfg = cfg.with_(multipliers=tuple(multipliers))
    _single_method(cfg)
    return _support_report(cfg, _run_reps(_roc_rep, cfg, threads), True)


# normality


@dataclass(eq=False)
class NormalityResult:
    config: ExperimentConfig
    kappa: np.ndarray
    ks_statistic: float
    ks_pvalue: float
    oracle: bool
    failures: list


def ks_normal(values):
    """One-sample Kolmogorov-Smirnov test against N(0, 1): ``(statistic, p-value)``."""
    res = stats.kstest(np.asarray(values, dtype=float), "norm")
    return float(res.statistic), float(res.pvalue)


@_guard
def _normality_rep(cfg, rep):
    omega = _truth(cfg).sample_omega
    i, j = cfg.normality_entry
    x = draw_sample(cfg, rep)
    truth = omega[i, j]
    if cfg.use_oracle:
        pe = estimate_oracle_pair(x, i, j, true_pair_coefficients(omega, i, j))
        var = omega[i, i] * omega[j, j] + omega[i, j] ** 2
    else:
        design = GraphDesign(x)
        pe = pair_from_design(design, i, j, graph_penalty(cfg.policy, x.n, x.p), _single_method(cfg))
        var = pe.variance
    return math.sqrt(x.n / var) * (pe.omega_ij - truth)


def run_normality_diagnostic(cfg: ExperimentConfig, use_oracle: bool | None = None, threads: int = 1) -> NormalityResult:
    """Standardized errors of one entry and their KS distance from N(0, 1).

    The plug-in path scales by the estimated Fisher information; the oracle
    path uses the true regression coefficients and the true information.
    """
    if use_oracle is not None:
        cfg = cfg.with_(use_oracle=bool(use_oracle))
    if not cfg.use_oracle:
        _single_method(cfg)
    outs = _run_reps(_normality_rep, cfg, threads)
    failures = [o for o in outs if isinstance(o, Failure)]
    kappa = np.array([o for o in outs if not isinstance(o, Failure)], dtype=float)
    stat, pval = ks_normal(kappa) if kappa.size else (math.nan, math.nan)
    return NormalityResult(cfg, kappa, stat, pval, cfg.use_oracle, failures)


# norm losses


@dataclass(eq=False)
class LossResult:
    config: ExperimentConfig
    losses: list  # per replication dict keyed 1, 2, inf, "max"
    failures: list

    def median(self, w) -> float:
        return float(np.median([d[w] for d in self.losses]))


@_guard
def _loss_rep(cfg, rep):
    x = draw_sample(cfg, rep)
    est = estimate_full(x, cfg.policy, _single_method(cfg))
    return norm_losses(truncate(threshold(est, cfg.xi0)), _truth(cfg).sample_omega)


def run_norm_loss_experiment(cfg: ExperimentConfig, threads: int = 1) -> LossResult:
    """Operator-norm losses of the truncated thresholded estimate."""
    _single_method(cfg)
    outs = _run_reps(_loss_rep, cfg, threads)
    return LossResult(cfg, [o for o in outs if not isinstance(o, Failure)],
                      [o for o in outs if isinstance(o, Failure)])

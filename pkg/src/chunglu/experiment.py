"""Seeded Monte Carlo campaigns over independent graph replicas.

Each replica ``r`` samples a graph from ``(master_seed, r)``, finds its
principal eigenpair, and records the quantities the limit theorems speak
about.  Replicas are independent and aggregated in index order, so a
campaign's outputs are byte-identical for any worker count.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import connected_components

from . import __version__
from .degrees import (DegreeSequence, check_assumptions, degree_vector_e, moments,
                      normalized_degree_vector, read_degree_file)
from .errors import ChungLuError, InvalidInput, InvalidParameter, ReplicaFailure
from .sampler import Model, SampleSeed, matvec, sample_fast
from .spectral import (CenteredOperator, eigvec_from_resolvent, expansion_diagnostics,
                       fixed_point_solve, power_iteration_top, secular_solve, spectral_norm_H)
from .stats import empirical_moments, gof, histogram_rows
from .theory import PredictionReport, predict

CSV_FIXED = ["replica", "lambda1", "alignment", "linf_dist", "norm_H", "q1", "iters", "wall_ms"]


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines a campaign's results.

    ``degree_source`` is ``constant``, ``uniform``, ``file`` or ``list``; for
    ``erdos_renyi:<p>`` models it may be left as ``auto`` and the degrees are
    the constant ``n p``.  ``tracked`` holds 0-based vertex indices (None picks
    the vertices at the minimum, quartiles, median and maximum degree).  The
    last block holds the pass/fail thresholds of the verdict table.
    """

    degree_source: str = "auto"
    n: int | None = None
    constant: float | None = None
    uniform_low: int | None = None
    uniform_high: int | None = None
    degree_file: str | None = None
    degrees: tuple = ()
    model: str = "chung_lu"
    self_loops: bool = True
    replicas: int = 100
    master_seed: int = 0
    xi: float = 2.1
    solver: str = "power"
    tracked: tuple | None = None
    power_tol: float = 1e-8
    power_max_iter: int = 10_000
    secular_tol: float = 1e-9
    norm_tol: float = 1e-6
    norm_max_iter: int = 200
    angle_tol: float = 1e-5
    centering: str = "empirical_mean"
    record_timing: bool = False
    alpha: float = 0.01
    lambda_var_window: tuple = (1.5, 2.5)
    v1_var_window: tuple = (0.7, 1.3)
    mean_gap_se: float = 4.0
    require_correction_gain: bool = True
    alignment_threshold: float = 0.99
    alignment_fraction: float = 0.99
    deloc_max: float = 10.0

    def __post_init__(self):
        if self.replicas < 1:
            raise InvalidParameter("replicas must be at least 1")
        if self.solver not in ("power", "secular", "both"):
            raise InvalidParameter(f"unknown solver {self.solver!r}")
        if self.centering not in ("empirical_mean", "predicted_mean"):
            raise InvalidParameter(f"unknown centering {self.centering!r}")
        if not self.xi > 2:
            raise InvalidParameter(f"xi must exceed 2, got {self.xi}")
        Model.parse(self.model)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        """Flat JSON layout; ``tracked`` there is a list of 1-based labels."""
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidInput(f"unknown config keys: {', '.join(sorted(unknown))}")
        data = dict(data)
        for key in ("degrees", "lambda_var_window", "v1_var_window"):
            if key in data and data[key] is not None:
                data[key] = tuple(data[key])
        if data.get("tracked") is not None:
            data["tracked"] = tuple(int(t) - 1 for t in data["tracked"])
        return cls(**data)

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("degrees", "lambda_var_window", "v1_var_window"):
            out[key] = list(out[key])
        if self.tracked is not None:
            out["tracked"] = [t + 1 for t in self.tracked]
        return out

    def degree_sequence(self) -> DegreeSequence:
        model = Model.parse(self.model)
        src = self.degree_source
        if src == "auto":
            if model.kind == "erdos_renyi":
                src = "er"
            elif self.degree_file:
                src = "file"
            elif self.degrees:
                src = "list"
            elif self.uniform_low is not None:
                src = "uniform"
            else:
                src = "constant"
        if src == "er":
            if self.n is None:
                raise InvalidInput("erdos_renyi model needs n")
            return DegreeSequence.constant(self.n, self.n * model.p)
        if src == "constant":
            if self.n is None or self.constant is None:
                raise InvalidInput("constant degrees need n and constant")
            return DegreeSequence.constant(self.n, self.constant)
        if src == "uniform":
            if self.n is None or self.uniform_low is None or self.uniform_high is None:
                raise InvalidInput("uniform degrees need n, uniform_low and uniform_high")
            return DegreeSequence.uniform_integers(self.n, self.uniform_low, self.uniform_high, self.master_seed)
        if src == "file":
            return read_degree_file(self.degree_file)
        if src == "list":
            return DegreeSequence(np.array(self.degrees, dtype=float))
        raise InvalidInput(f"unknown degree source {self.degree_source!r}")


def default_tracked(seq: DegreeSequence, k: int = 5) -> tuple:
    """Vertices at evenly spaced ranks of the degree order, min to max."""
    order = np.argsort(seq.d, kind="stable")
    ranks = np.unique(np.round(np.linspace(0, seq.n - 1, min(k, seq.n))).astype(int))
    return tuple(int(order[r]) for r in ranks)


@dataclass
class Context:
    seq: DegreeSequence
    model: Model
    e: np.ndarray
    e_tilde: np.ndarray
    report: PredictionReport
    tracked: np.ndarray


@lru_cache(maxsize=8)
def context(config: ExperimentConfig) -> Context:
    seq = config.degree_sequence()
    mom = moments(seq)
    tracked = default_tracked(seq) if config.tracked is None else config.tracked
    tracked = np.asarray(tracked, dtype=int)
    if tracked.size and (tracked.min() < 0 or tracked.max() >= seq.n):
        raise InvalidInput("tracked coordinate out of range")
    return Context(seq, Model.parse(config.model), degree_vector_e(seq, mom),
                   normalized_degree_vector(seq, mom), predict(seq, mom, config.xi), tracked)


@dataclass
class ReplicaRecord:
    replica_index: int
    lambda1: float
    v1_tracked: tuple
    alignment: float
    linf_dist: float
    norm_H: float
    q1: float
    iterations: int
    wall_ms: float
    lambda_secular: float | None = None
    cross_gap: float | None = None
    cross_angle: float | None = None
    qforms: tuple = ()
    expansion_gap: float = 0.0
    expansion_bound: float = 0.0
    rayleigh: float = 0.0
    connected: bool = True
    min_entry: float = 0.0


def _angle(u: np.ndarray, v: np.ndarray) -> float:
    # sin of the angle, stable near zero
    return float(np.linalg.norm(u - (u @ v) * v))


def run_replica(config: ExperimentConfig, replica_index: int) -> ReplicaRecord:
    ctx = context(config)
    try:
        t0 = time.perf_counter()
        seq = ctx.seq
        mom = moments(seq)
        adj = sample_fast(seq, mom, config.self_loops, SampleSeed(config.master_seed, replica_index), ctx.model)
        op = CenteredOperator(adj, ctx.e)
        norm_h = spectral_norm_H(op, config.norm_tol, config.norm_max_iter)
        power = secular = None
        if config.solver in ("power", "both"):
            power = power_iteration_top(adj, config.power_tol, config.power_max_iter, start=ctx.e_tilde)
        if config.solver in ("secular", "both"):
            res = secular_solve(op, ctx.e, norm_h, config.secular_tol)
            secular = eigvec_from_resolvent(res, op)
        eig = power if power is not None else secular
        cross_gap = cross_angle = None
        if power is not None and secular is not None:
            cross_gap = abs(power.value - secular.value)
            cross_angle = _angle(power.vector, secular.vector)
            allowed = 10 * max(config.power_tol, config.secular_tol) * abs(power.value)
            if cross_gap > allowed or cross_angle > config.angle_tol:
                raise ChungLuError(
                    f"power and secular solvers disagree: gap {cross_gap:.3g} (allowed {allowed:.3g}), "
                    f"angle {cross_angle:.3g}")
        diag = expansion_diagnostics(op, ctx.e, eig, norm_h)
        v = eig.vector
        ncomp, _ = connected_components(adj.csr, directed=False)
        wall = (time.perf_counter() - t0) * 1e3 if config.record_timing else 0.0
        return ReplicaRecord(
            replica_index=replica_index,
            lambda1=eig.value,
            v1_tracked=tuple(float(x) for x in v[ctx.tracked]),
            alignment=float(v @ ctx.e_tilde),
            linf_dist=float(np.max(np.abs(v - ctx.e_tilde))),
            norm_H=norm_h,
            q1=float(diag.qforms[1]) if diag.L >= 1 else float(ctx.e @ (op @ ctx.e)),
            iterations=eig.iterations,
            wall_ms=wall,
            lambda_secular=None if secular is None else secular.value,
            cross_gap=cross_gap,
            cross_angle=cross_angle,
            qforms=tuple(float(q) for q in diag.qforms),
            expansion_gap=diag.gap,
            expansion_bound=diag.tail_bound,
            rayleigh=float(ctx.e_tilde @ matvec(adj, ctx.e_tilde)),
            connected=ncomp == 1,
            min_entry=float(v.min()),
        )
    except ReplicaFailure:
        raise
    except Exception as exc:  # noqa: BLE001 - every solver failure is fatal for the campaign
        raise ReplicaFailure(replica_index, exc) from exc


def _safe_replica(args):
    config, r = args
    try:
        return run_replica(config, r)
    except ReplicaFailure as exc:
        return exc


def standardize_lambda(samples, report: PredictionReport, centering: str = "empirical_mean") -> np.ndarray:
    """``lambda_z_scale * (lambda1 - center)``; limit law N(0, 2)."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < 2:
        raise InvalidInput("need at least two eigenvalue samples")
    center = math.fsum(x) / x.size if centering == "empirical_mean" else report.lambda1_mean
    return report.lambda_z_scale * (x - center)


def standardize_eigvec(samples, report: PredictionReport, coordinates, centering: str = "empirical_mean",
                       scale=None) -> np.ndarray:
    """Per-coordinate z-scores ``scale_i * (v1(i) - center_i)``; limit law N(0, 1).

    ``samples`` has one row per replica and one column per coordinate.
    ``scale`` defaults to the report's ``v1_z_scale``.
    """
    V = np.asarray(samples, dtype=np.float64)
    if V.ndim == 1:
        V = V[:, None]
    if V.shape[0] < 2:
        raise InvalidInput("need at least two eigenvector samples")
    coordinates = np.asarray(coordinates, dtype=int)
    if centering == "empirical_mean":
        center = np.array([math.fsum(col) / col.size for col in V.T])
    else:
        center = report.v1_mean[coordinates]
    s = report.v1_z_scale[coordinates] if scale is None else np.asarray(scale)
    return (V - center) * s


def _check(value, threshold, passed):
    return {"value": value, "threshold": threshold, "passed": None if passed is None else bool(passed)}


@dataclass
class ExperimentSummary:
    config: ExperimentConfig
    report: PredictionReport
    tracked: np.ndarray
    records: list
    sections: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c["passed"] is not False for c in self.checks.values())

    def to_dict(self) -> dict:
        return {
            "environment": {"artifact": "chunglu", "artifact_version": __version__,
                            "master_seed": self.config.master_seed},
            "config": self.config.to_dict(),
            "prediction": self.report.to_dict(self.tracked),
            **self.sections,
            "checks": self.checks,
            "passed": self.passed,
            "replicas": [_record_dict(r) for r in self.records],
        }

    def to_json(self) -> str:
        return json.dumps(_clean(self.to_dict()), indent=2, allow_nan=False) + "\n"


def _record_dict(r: ReplicaRecord) -> dict:
    out = asdict(r)
    out["v1_tracked"] = list(r.v1_tracked)
    out["qforms"] = list(r.qforms)
    return out


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def summarize(config: ExperimentConfig, records: list) -> ExperimentSummary:
    """Aggregate replica records (already in index order) into a summary."""
    ctx = context(config)
    rep = ctx.report
    mom = moments(ctx.seq)
    R = len(records)
    summary = ExperimentSummary(config, rep, ctx.tracked, records)
    sec, checks = summary.sections, summary.checks
    sec["assumptions"] = check_assumptions(ctx.seq, config.xi).as_dict()
    lam = np.array([r.lambda1 for r in records])
    n = ctx.seq.n

    # structural checks hold replica by replica
    rank_one = rep.lambda1_rank_one
    weyl_bad = sum(abs(r.lambda1 - rank_one) > r.norm_H + 1e-8 for r in records)
    rayleigh_bad = sum(r.lambda1 < r.rayleigh - 1e-10 * abs(r.lambda1) for r in records)
    tail_bad = sum(r.expansion_gap > r.expansion_bound + 1e-10 * abs(r.lambda1) for r in records)
    perron_bad = sum(r.connected and r.min_entry < -1e-10 for r in records)
    checks["weyl_sandwich"] = _check(int(weyl_bad), 0, weyl_bad == 0)
    checks["rayleigh_bound"] = _check(int(rayleigh_bad), 0, rayleigh_bad == 0)
    checks["expansion_tail"] = _check(int(tail_bad), 0, tail_bad == 0)
    checks["perron_sign"] = _check(int(perron_bad), 0, perron_bad == 0)
    sec["structure"] = {
        "connected_fraction": sum(r.connected for r in records) / R,
        "norm_H_mean": float(np.mean([r.norm_H for r in records])),
        "norm_H_over_2sqrt_minf": float(np.mean([r.norm_H for r in records]) / (2 * math.sqrt(mom.m_inf))),
        "max_cross_gap": max((r.cross_gap for r in records if r.cross_gap is not None), default=None),
        "max_cross_angle": max((r.cross_angle for r in records if r.cross_angle is not None), default=None),
    }

    align = np.array([r.alignment for r in records])
    deloc = np.array([r.linf_dist for r in records]) * math.sqrt(n * mom.m_inf) / math.log(n) ** config.xi
    frac = float(np.mean(align >= config.alignment_threshold))
    sec["eigenvector_shape"] = {
        "alignment_min": float(align.min()),
        "alignment_mean": float(np.mean(align)),
        "alignment_predicted": rep.alignment_predicted,
        "alignment_fraction_above_threshold": frac,
        "delocalization_ratio_max": float(deloc.max()),
        "delocalization_ratio_mean": float(np.mean(deloc)),
    }
    checks["alignment"] = _check(frac, config.alignment_fraction, frac >= config.alignment_fraction)
    checks["delocalization"] = _check(float(deloc.max()), config.deloc_max, deloc.max() <= config.deloc_max)

    if R < 2:
        sec["lambda1"] = {"samples": R, "status": "insufficient data", "mean": float(lam[0])}
        return summary

    lm = empirical_moments(lam)
    gap_full = lm.mean - rep.lambda1_mean
    gap_rank_one = lm.mean - rank_one
    gap_se = gap_full / lm.se_mean if lm.se_mean > 0 else math.inf
    improves = abs(gap_full) < abs(gap_rank_one)
    q1 = empirical_moments([r.q1 for r in records])
    cbar = np.mean(np.array([r.qforms for r in records]), axis=0)
    try:
        x0 = fixed_point_solve(cbar, (0.5 * cbar[0], 2.0 * cbar[0] + 2.0))
    except ChungLuError:
        x0 = None
    sec["lambda1"] = {
        "samples": R,
        "mean": lm.mean,
        "variance": lm.variance,
        "se_mean": lm.se_mean,
        "predicted_mean": rep.lambda1_mean,
        "rank_one_value": rank_one,
        "correction_term": rep.lambda1_mean - rank_one,
        "gap": gap_full,
        "gap_in_se": gap_se,
        "gap_rank_one": gap_rank_one,
        "correction_improves_fit": bool(improves),
        "fixed_point_x0": x0,
        "mean_minus_x0_in_se": None if x0 is None else (lm.mean - x0) / lm.se_mean,
        "q1_mean": q1.mean,
        "q1_se": q1.se_mean,
        "q1_mean_in_se": q1.mean / q1.se_mean if q1.se_mean > 0 else None,
    }
    checks["mean_lambda1"] = _check(abs(gap_se), config.mean_gap_se, abs(gap_se) <= config.mean_gap_se)
    if config.require_correction_gain:
        checks["mean_correction_detected"] = _check(abs(gap_full), abs(gap_rank_one), improves)

    z_lam = standardize_lambda(lam, rep, config.centering)
    g_lam = gof(z_lam, 2.0, config.alpha)
    z_lam_pred = standardize_lambda(lam, rep, "predicted_mean")
    sec["lambda_clt"] = {
        "gof": g_lam.as_dict(),
        "predicted_centering": {"mean": float(np.mean(z_lam_pred)), "variance": float(np.var(z_lam_pred, ddof=1))},
    }
    lo, hi = config.lambda_var_window
    checks["lambda_z_variance"] = _check(g_lam.variance, [lo, hi], lo <= g_lam.variance <= hi)
    checks["lambda_ks"] = _check(g_lam.ks_p_value, config.alpha, g_lam.passed)

    V = np.array([r.v1_tracked for r in records])
    if V.size:
        z_v = standardize_eigvec(V, rep, ctx.tracked, config.centering)
        per = [gof(z_v[:, c], 1.0, config.alpha).as_dict() for c in range(V.shape[1])]
        pooled = gof(z_v.ravel(), 1.0, config.alpha)
        z_lit = standardize_eigvec(V, rep, ctx.tracked, config.centering,
                                   scale=rep.v1_z_scale_literal[ctx.tracked])
        lit_var = float(np.var(z_lit.ravel(), ddof=1))
        lo, hi = config.v1_var_window
        sec["eigvec_clt"] = {
            "coordinates": [int(t) for t in ctx.tracked],
            "per_coordinate": per,
            "pooled": pooled.as_dict(),
            "literal_multiplier_variance": lit_var,
        }
        checks["v1_z_variance"] = _check(pooled.variance, [lo, hi], lo <= pooled.variance <= hi)
        checks["v1_ks"] = _check(pooled.ks_p_value, config.alpha, pooled.passed)
        checks["v1_literal_multiplier_rejected"] = _check(lit_var, [lo, hi], not lo <= lit_var <= hi)
    return summary


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentSummary:
    """Run all replicas and aggregate.

    On the first failing replica (in index order) raises
    :class:`ReplicaFailure` with ``partial`` set to the records before it.
    """
    context(config)
    jobs = [(config, r) for r in range(config.replicas)]
    records = []
    if workers <= 1:
        results = map(_safe_replica, jobs)
        pool = None
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        results = pool.map(_safe_replica, jobs, chunksize=max(1, len(jobs) // (4 * workers)))
    try:
        for res in results:
            if isinstance(res, ReplicaFailure):
                res.partial = records
                raise res
            records.append(res)
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    return summarize(config, records)


def write_replica_csv(config: ExperimentConfig, records: list, path) -> None:
    k = len(context(config).tracked)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIXED + [f"v1_c{c + 1}" for c in range(k)])
        for r in records:
            w.writerow([r.replica_index, repr(r.lambda1), repr(r.alignment), repr(r.linf_dist),
                        repr(r.norm_H), repr(r.q1), r.iterations, repr(r.wall_ms)]
                       + [repr(x) for x in r.v1_tracked])


def write_histogram(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_left", "bin_right", "count", "reference_density"])
        for a, b, c, d in rows:
            w.writerow([repr(a), repr(b), c, repr(d)])


def write_outputs(summary: ExperimentSummary, out_dir) -> dict:
    """Replica CSV, summary JSON and z-score histograms; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"replicas": out / "replicas.csv", "summary": out / "summary.json"}
    write_replica_csv(summary.config, summary.records, paths["replicas"])
    paths["summary"].write_text(summary.to_json())
    if len(summary.records) >= 2:
        rep, cfg = summary.report, summary.config
        lam = [r.lambda1 for r in summary.records]
        paths["hist_lambda"] = out / "hist_lambda.csv"
        write_histogram(histogram_rows(standardize_lambda(lam, rep, cfg.centering), 2.0), paths["hist_lambda"])
        V = np.array([r.v1_tracked for r in summary.records])
        if V.size:
            z = standardize_eigvec(V, rep, summary.tracked, cfg.centering)
            paths["hist_v1"] = out / "hist_v1.csv"
            write_histogram(histogram_rows(z, 1.0), paths["hist_v1"])
    return paths


def load_config(path, **overrides) -> ExperimentConfig:
    with open(path) as fh:
        data = json.load(fh)
    cfg = ExperimentConfig.from_dict(data)
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})

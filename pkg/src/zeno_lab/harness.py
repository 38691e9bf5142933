"""Config-driven sweeps over ``(function, t, n)`` cells, rate fits and persistence."""
from concurrent.futures import ThreadPoolExecutor
import csv
from dataclasses import dataclass, field
import io
import json
import logging
import math
import os
from pathlib import Path

import numpy as np

from . import engine
from .estimators import PowerLawRate
from .exceptions import NumericalGuardError, ValidationError, ZenoLabError
from .functions import function_from_config, kato_part_decompose
from .models import ModelSpec, build_model, describe_model, momentum_test_vectors

logger = logging.getLogger(__name__)

METRICS = ("strong", "norm", "time-averaged", "bound", "diagnostics", "graf-guekos", "counterexample")
NON_NEGATIVE_METRICS = {"strong", "norm", "time-averaged", "bound", "diagnostics", "graf-guekos"}
CSV_HEADER = (
    "model_id", "function_id", "t", "n", "norm_error", "strong_error_max",
    "avg_error", "bound_lhs", "bound_rhs", "pass",
)
THREADS_ENV = "ZENO_LAB_THREADS"


@dataclass(frozen=True)
class RateFit:
    beta: float
    prefactor: float
    r_squared: float
    fitted: bool = True
    points: int = 0

    def to_dict(self):
        if not self.fitted:
            return {"fitted": False, "points": self.points, "beta": None, "prefactor": None, "r_squared": None}
        return {
            "fitted": True,
            "points": self.points,
            "beta": self.beta,
            "prefactor": self.prefactor,
            "r_squared": self.r_squared,
        }


def fit_rate(n_values, errors, floor=1e-14):
    """Log-log least-squares rate; errors at or below ``floor`` count as converged."""
    est = PowerLawRate(floor=floor).fit(n_values, errors)
    return RateFit(est.beta_, est.prefactor_, est.r_squared_, est.fitted_, est.n_used_)


@dataclass
class ExperimentConfig:
    model: ModelSpec
    functions: list
    t_grid: list
    n_list: list
    alpha: float = 1.0
    metrics: list = field(default_factory=lambda: ["norm"])
    quadrature_nodes: int = 33
    seed: int = 0
    output: str = "results"

    def __post_init__(self):
        if not self.functions:
            raise ValidationError("functions must be non-empty")
        if not self.t_grid or any(not (isinstance(t, (int, float)) and math.isfinite(t) and t > 0) for t in self.t_grid):
            raise ValidationError("t_grid must be a non-empty list of positive reals")
        if not self.n_list:
            raise ValidationError("n_list must be non-empty")
        if any(isinstance(n, bool) or not isinstance(n, int) or n < 1 for n in self.n_list):
            raise ValidationError("n_list entries must be positive integers")
        if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise ValidationError("n_list must be strictly increasing")
        if not self.metrics:
            raise ValidationError("metrics must be non-empty")
        unknown = set(self.metrics) - set(METRICS)
        if unknown:
            raise ValidationError(f"unknown metrics {sorted(unknown)}; known: {', '.join(METRICS)}")
        if not (isinstance(self.alpha, (int, float)) and self.alpha > 0):
            raise ValidationError("alpha must be positive")
        if self.quadrature_nodes < 33 or self.quadrature_nodes % 2 == 0:
            raise ValidationError("quadrature_nodes must be odd and >= 33")

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ValidationError("config must be a JSON object")
        known = {"model", "functions", "t_grid", "n_list", "alpha", "metrics", "quadrature_nodes", "seed", "output"}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        missing = {"model", "functions", "t_grid", "n_list"} - set(d)
        if missing:
            raise ValidationError(f"missing config keys: {sorted(missing)}")
        kw = dict(d)
        kw["model"] = ModelSpec.from_dict(d["model"])
        return cls(**kw)

    def to_dict(self):
        return {
            "model": self.model.to_dict(),
            "functions": list(self.functions),
            "t_grid": list(self.t_grid),
            "n_list": list(self.n_list),
            "alpha": self.alpha,
            "metrics": list(self.metrics),
            "quadrature_nodes": self.quadrature_nodes,
            "seed": self.seed,
            "output": self.output,
        }


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path} is not valid JSON: {exc}") from exc
    return ExperimentConfig.from_dict(data)


def worker_count():
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return max(1, min(8, os.cpu_count() or 1))
    try:
        value = int(raw)
    except ValueError:
        value = 0
    if value < 1:
        raise ValidationError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


class _Context:
    """Per-run immutable inputs shared by all cells."""

    def __init__(self, config):
        self.config = config
        self.model = build_model(config.model)
        self.specs = [function_from_config(entry) for entry in config.functions]
        self.vectors = engine.standard_test_vectors(self.model.rank, seed=config.seed)
        self.K = engine.zeno_generator(self.model) if self.model.non_negative else None
        self.decompositions = {}
        for spec in self.specs:
            try:
                self.decompositions[spec.id] = kato_part_decompose(spec)
            except ValidationError:
                self.decompositions[spec.id] = None


def _evaluate_cell(ctx, spec, t, n):
    cfg, model = ctx.config, ctx.model
    rec = engine.ConvergenceRecord(model.name, spec.id, float(t), int(n))
    for metric in cfg.metrics:
        try:
            if metric in NON_NEGATIVE_METRICS and not model.non_negative:
                raise ValidationError(f"metric {metric!r} needs a non-negative model")
            if metric in ("norm", "strong"):
                if rec.norm_error is None:
                    product = engine.zeno_product(model, spec, t, n)
                    target = engine.zeno_target(model, t, ctx.K)
                    m = engine.error_metrics(product, target, ctx.vectors)
                    if "norm" in cfg.metrics:
                        rec.norm_error = m["norm_error"]
                    if "strong" in cfg.metrics:
                        rec.strong_errors = m["strong_errors"]
            elif metric == "time-averaged":
                rec.avg_error = engine.time_averaged_error(
                    model, spec, n, t, cfg.quadrature_nodes, ctx.vectors, ctx.K
                )
            elif metric == "bound":
                cert = engine.certify_bound(model, spec, t, n, cfg.alpha)
                rec.bound_lhs, rec.bound_rhs, rec.bound_pass = cert.lhs, cert.rhs, bool(cert.passed)
                rec.diagnostics["chernoff_term"] = float(cert.chernoff_term)
                rec.diagnostics["semigroup_term"] = float(cert.semigroup_term)
            elif metric == "diagnostics":
                tau = t / n
                rec.diagnostics["factorization"] = engine.factorization_residual(model, spec, tau)
                dec = ctx.decompositions[spec.id]
                if dec is None:
                    raise ValidationError(f"{spec.id!r} fails Im(phi) <= 0; resolvent diagnostics skipped")
                res = engine.proof_path_diagnostics(model, spec, [tau], dec)
                for name, values in res.items():
                    rec.diagnostics[name] = float(values[0])
                sw = engine.sandwich_check(model, dec, tau, ctx.vectors)
                rec.diagnostics["sandwich_lower_margin"] = float(np.min(sw.lower_margins))
                rec.diagnostics["sandwich_upper_margin"] = float(np.min(sw.upper_margins))
            elif metric == "graf-guekos":
                rec.diagnostics["graf_guekos"] = engine.graf_guekos_residual(model, t)
            elif metric == "counterexample":
                if not model.out_of_assumption:
                    raise ValidationError("metric 'counterexample' needs a momentum-circle model")
                if spec.id != "exp":
                    raise ValidationError("metric 'counterexample' is defined for the function 'exp' only")
                vectors = momentum_test_vectors(model, t)
                out = engine.counterexample_run(model, t, n, vectors)
                rec.diagnostics["identity_residual"] = out.identity_residual
                rec.diagnostics["limit_residual"] = out.limit_residual
                rec.diagnostics["contraction_witness"] = out.contraction_witness
                rec.notes.append(out.note)
        except NumericalGuardError as exc:
            rec.notes.append(f"guard[{metric}]: {exc}")
        except ZenoLabError as exc:
            rec.notes.append(f"skipped[{metric}]: {exc}")
    return rec


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".17g")


def records_to_csv(records):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in records:
        writer.writerow([
            r.model_id, r.function_id, _fmt(r.t), _fmt(r.n), _fmt(r.norm_error),
            _fmt(r.strong_error_max), _fmt(r.avg_error), _fmt(r.bound_lhs),
            _fmt(r.bound_rhs), _fmt(r.bound_pass),
        ])
    return buf.getvalue()


def read_records(path):
    """Read ``records.json`` back into :class:`ConvergenceRecord` objects."""
    with open(path) as fh:
        return [engine.ConvergenceRecord.from_dict(d) for d in json.load(fh)]


def _series_metric(records):
    for attr in ("norm_error", "strong_error_max", "avg_error"):
        if any(getattr(r, attr) is not None for r in records):
            return attr
    return None


def summarize(config, model, records):
    fits = []
    groups = {}
    for r in records:
        groups.setdefault((r.function_id, r.t), []).append(r)
    for (fid, t), group in sorted(groups.items()):
        attr = _series_metric(group)
        if attr is None:
            continue
        pts = [(r.n, getattr(r, attr)) for r in group if getattr(r, attr) is not None]
        entry = {"function_id": fid, "t": t, "metric": attr}
        if len(pts) < 2:
            entry.update(RateFit(math.nan, math.nan, math.nan, False, len(pts)).to_dict())
        else:
            ns, errs = zip(*pts)
            entry.update(fit_rate(ns, errs).to_dict())
        fits.append(entry)
    bound = [r.bound_pass for r in records if r.bound_pass is not None]
    exploration = [
        {"function_id": r.function_id, "t": r.t, "n": r.n, "avg_error": r.avg_error}
        for r in records
        if r.avg_error is not None and r.function_id == "exp" and not model.commuting
    ]
    return {
        "model": describe_model(model),
        "config": config.to_dict(),
        "cells": len(records),
        "cells_with_notes": sum(1 for r in records if r.notes),
        "rate_fits": fits,
        "bound": {"passed": sum(bound), "failed": len(bound) - sum(bound)},
        "conjecture_exploration": exploration,
    }


def _dump_json(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def run_experiment(config, write=True, threads=None):
    """Evaluate every ``(function, t, n)`` cell of ``config``.

    Records are sorted by ``(function_id, t, n)`` so the written files do not
    depend on scheduling. Returns ``(records, summary)``.
    """
    if isinstance(config, dict):
        config = ExperimentConfig.from_dict(config)
    ctx = _Context(config)
    cells = [(spec, t, n) for spec in ctx.specs for t in config.t_grid for n in config.n_list]
    workers = worker_count() if threads is None else threads
    logger.info("running %d cells on %d workers", len(cells), workers)
    if workers == 1:
        records = [_evaluate_cell(ctx, *cell) for cell in cells]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda cell: _evaluate_cell(ctx, *cell), cells))
    records.sort(key=lambda r: (r.function_id, r.t, r.n))
    summary = summarize(config, ctx.model, records)
    if write:
        out = Path(config.output)
        out.mkdir(parents=True, exist_ok=True)
        (out / "records.csv").write_text(records_to_csv(records))
        (out / "records.json").write_text(_dump_json([r.to_dict() for r in records]))
        (out / "summary.json").write_text(_dump_json(summary))
    return records, summary

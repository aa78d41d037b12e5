"""Experiment orchestration: config, query protocol, quality reports.

The evaluation protocol operationalizes the all-queries coreset guarantee
with an adversarial-but-finite battery: solver output on the input, solver
output on the coreset itself (stressing exactly where a coreset gets used),
uniform random k-subsets of the input, and uniform random centers in the
data bounding box.  Relative cost error is measured per query against the
full input; zero-cost queries are skipped.

Reports are plain dicts with schema 1, serialized canonically by
dataio.write_report, so identical (config, seed) pairs produce identical
bytes.  Wall-clock timings are only included when measure_time is set,
keeping default reports deterministic.

Stream mode keeps the raw stream in memory purely for evaluation at the
ten prefix checkpoints; the streaming structures themselves never see it.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import metric, rng as rngmod, solvers
from .bicriterion import reduce_to_constant
from .dataio import DataError, read_points, write_coreset, write_report
from .merge_reduce import MergeReduce
from .metric import CostModel
from .offline import build_coreset, sensitivity_from_assignment
from .points import Point, dense
from .stream_sampler import StreamCoreset
from .weighted import QuerySpec, WeightedSet, bar_cost, sample_size

__all__ = ["ConfigError", "ExperimentConfig", "make_queries", "evaluate",
           "run", "gen_mixture", "MEDOID_CAP"]

MEDOID_CAP = 4096      # medoid path materializes n x n distances


class ConfigError(Exception):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    input: str
    mode: str                       # offline | stream | mergereduce
    model: str = "kmeans"
    fmt: str = "csv"
    weighted: bool = False
    k: int = 3
    eps: float = 0.2
    delta: float = 0.1
    c_const: float = 0.02
    alpha_bar: float = 5.0
    schedule: str = "sensitivity"   # stream mode only
    m: int | None = None            # algorithm1 sample scale, else derived
    phi: float | None = None
    gamma: float | None = None
    n_bound: int | None = None
    d_q: float | None = None
    seed: int | None = None
    query_count: int = 40
    output: str | None = None       # JSON report path
    coreset_out: str | None = None
    measure_time: bool = False

    def validate(self) -> None:
        if self.mode not in ("offline", "stream", "mergereduce"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.schedule not in ("sensitivity", "algorithm1"):
            raise ConfigError(f"unknown schedule {self.schedule!r}")
        if self.fmt not in ("csv", "sparse"):
            raise ConfigError(f"unknown format {self.fmt!r}")
        if not (0.0 < self.eps < 1.0):
            raise ConfigError("eps must lie in (0, 1)")
        if not (0.0 < self.delta < 1.0):
            raise ConfigError("delta must lie in (0, 1)")
        if self.k < 1:
            raise ConfigError("k must be at least 1")
        if self.seed is None:
            raise ConfigError("seed is mandatory")
        if self.query_count < 4:
            raise ConfigError("query_count must be at least 4")
        if self.c_const <= 0:
            raise ConfigError("c_const must be positive")
        if self.alpha_bar < 1.0:
            raise ConfigError("alpha_bar must be at least 1")
        try:
            metric.model_from_spec(self.model)
        except ValueError as e:
            raise ConfigError(str(e)) from e


def solve_on(model: CostModel, data: WeightedSet, k: int, seed: int) -> list[Point]:
    """Best-effort k centers on data, for query generation."""
    kk = min(k, len(data.points))
    if model.centroid_exact and model.base == "euclidean":
        return solvers.weighted_lloyd(model, data, kk, seed).centers
    if len(data.points) > MEDOID_CAP:
        gen = rngmod.generator(seed)
        pick = gen.choice(len(data.points), MEDOID_CAP, replace=False)
        data = data.subset(np.sort(pick))
    return solvers.medoid_swap(model, data, kk, seed, max_sweeps=2).centers


def _box_query(model: CostModel, lo: np.ndarray, hi: np.ndarray, k: int,
               gen: np.random.Generator, base_id: int) -> list[Point]:
    coords = gen.uniform(lo, hi, size=(k, lo.shape[0]))
    return [dense(base_id + j, coords[j]) for j in range(k)]


def make_queries(model: CostModel, P: WeightedSet, S: WeightedSet | None,
                 k: int, count: int, seed: int) -> list[list[Point]]:
    """The fixed evaluation battery; deterministic in seed."""
    seeds = rngmod.split(seed, 4)
    gen = rngmod.generator(seeds[0])
    queries: list[list[Point]] = []
    queries.append(solve_on(model, P, k, seeds[1]))
    if S is not None and len(S.points) >= 1:
        queries.append(solve_on(model, S, k, seeds[2]))
    n = len(P.points)
    remaining = max(count - len(queries), 0)
    n_subsets = remaining // 2 if model.base == "euclidean" else remaining
    n_boxes = remaining - n_subsets if model.base == "euclidean" else 0
    for _ in range(n_subsets):
        pick = gen.choice(n, size=min(k, n), replace=False)
        queries.append([P.points[int(i)] for i in np.sort(pick)])
    if n_boxes:
        X = P.block.X
        lo, hi = X.min(axis=0), X.max(axis=0)
        for j in range(n_boxes):
            queries.append(_box_query(model, lo, hi, k, gen, 10**9 + j * k))
    return queries


def evaluate(model: CostModel, P: WeightedSet, S: WeightedSet,
             queries: list[list[Point]]) -> dict:
    """Relative cost error of S against P per query; aggregates included."""
    if not queries:
        raise ConfigError("queries must be nonempty")
    errs: list[float] = []
    skipped = 0
    for Z in queries:
        cp = bar_cost(model, P, Z)
        if cp <= 0.0:
            skipped += 1
            continue
        cs = bar_cost(model, S, Z) if len(S.points) else 0.0
        errs.append(abs(cs - cp) / cp)
    if not errs:
        raise DataError("every query had zero cost on the input")
    return {
        "per_query": errs,
        "max": max(errs),
        "mean": float(np.mean(errs)),
        "count": len(queries),
        "skipped": skipped,
    }


def gen_mixture(n: int, k_gen: int, dim: int, spread: float, seed: int) -> np.ndarray:
    """Synthetic Gaussian mixture rows: k_gen unit-variance blobs."""
    if n < 1 or k_gen < 1 or dim < 1:
        raise ConfigError("n, k, dim must all be positive")
    gen = rngmod.generator(seed)
    centers = gen.uniform(-spread, spread, size=(k_gen, dim))
    idx = gen.integers(0, k_gen, size=n)
    return centers[idx] + gen.standard_normal((n, dim))


def _offline_build(cfg: ExperimentConfig, model: CostModel, P: WeightedSet,
                   seeds: list[int]) -> tuple[WeightedSet, dict]:
    A = reduce_to_constant(model, P, cfg.k, seeds[0], alpha_bar=cfg.alpha_bar,
                           delta=cfg.delta, c_const=cfg.c_const, d_q=cfg.d_q)
    prof = sensitivity_from_assignment(model, P, A, cfg.alpha_bar)
    d_q = cfg.d_q if cfg.d_q is not None else float(P.block.X.shape[1])
    m = cfg.m or sample_size(prof.total, QuerySpec(k=cfg.k, d_q=d_q),
                             cfg.eps, cfg.delta, c_const=cfg.c_const)
    params = {"t_total": prof.total, "m": m, "alpha_bar": cfg.alpha_bar}
    if m >= len(P.points):
        return P, params | {"verbatim": True}
    sample = build_coreset(P, A, m, seeds[1])
    return sample.S, params | {"verbatim": False}


def _eval_section(model: CostModel, P: WeightedSet, S: WeightedSet,
                  k: int, count: int, seed: int) -> dict:
    queries = make_queries(model, P, S, k, count, seed)
    return evaluate(model, P, S, queries)


def run(config: ExperimentConfig) -> dict:
    """Execute one experiment; returns (and optionally writes) the report."""
    config.validate()
    model = metric.model_from_spec(config.model)
    t0 = time.perf_counter()
    P = read_points(config.input, config.fmt, config.weighted)
    t_load = time.perf_counter() - t0
    seeds = rngmod.split(config.seed, 6)
    n = len(P.points)
    report: dict = {
        "schema": 1,
        "config": {k: v for k, v in asdict(config).items()},
        "n": n,
        "total_weight": P.total_weight,
    }
    timings: dict[str, float] = {"load_s": t_load}

    t1 = time.perf_counter()
    if config.mode == "offline":
        S, params = _offline_build(config, model, P, seeds[:2])
        report["params"] = params
        report["peak_points"] = n
    elif config.mode == "stream":
        n_bound = config.n_bound or n
        sc = StreamCoreset(model, config.k, n_bound, config.eps, config.delta,
                           seeds[0], schedule=config.schedule,
                           alpha_bar=config.alpha_bar, c_const=config.c_const,
                           m=config.m, phi=config.phi, gamma=config.gamma)
        cuts = {max(1, round(n * j / 10)) for j in range(1, 11)}
        prefix_reports: list[dict] = []
        done = 0
        for i, (pt, w) in enumerate(zip(P.points, P.weights), start=1):
            sc.push(pt, float(w))
            if i in cuts:
                res = sc.result()
                prefix = P.subset(np.arange(i))
                ev = _eval_section(model, prefix, res.coreset, config.k,
                                   config.query_count, seeds[2] + done)
                prefix_reports.append({
                    "count": i,
                    "retained": res.retained,
                    "coreset_points": len(res.coreset.points),
                    "max": ev["max"],
                    "mean": ev["mean"],
                })
                done += 1
        res = sc.result()
        S = res.coreset
        report["prefixes"] = prefix_reports
        report["peak_points"] = res.peak_points
        report["params"] = {
            "schedule": config.schedule,
            "lambda": sc.lag,
            "phi": sc.bic.phi,
            "gamma": sc.bic.gamma,
            "t_prime": res.t_prime,
            "x_scale": res.x_scale,
            "phase": res.phase,
            "anchor": res.anchor,
            "predicted_peak": sc.predicted_peak(),
            "degenerate": res.degenerate,
        }
    else:
        n_bound = config.n_bound or n
        mr = MergeReduce(model, config.k, n_bound, config.eps, config.delta,
                         seeds[0], alpha_bar=config.alpha_bar,
                         c_const=config.c_const, d_q=config.d_q)
        for pt, w in zip(P.points, P.weights):
            mr.push(pt, float(w))
        mres = mr.result()
        S = mres.coreset
        report["peak_points"] = mres.peak_points
        report["params"] = {
            "levels": mres.levels,
            "eps_leaf": mres.eps_leaf,
            "segment_size": mres.segment_size,
            "reduces": mres.reduces,
            "eps_reported": mres.eps_reported,
            "occupied": mres.meta["occupied"],
        }
    timings["build_s"] = time.perf_counter() - t1

    t2 = time.perf_counter()
    report["errors"] = _eval_section(model, P, S, config.k,
                                     config.query_count, seeds[3])
    timings["evaluate_s"] = time.perf_counter() - t2
    report["coreset"] = {"points": len(S.points), "weight": S.total_weight}
    if config.measure_time:
        report["wall_clock"] = timings
    if config.coreset_out:
        write_coreset(config.coreset_out, S, config.fmt)
    if config.output:
        write_report(config.output, report)
    return report

"""Weighted point sets and the sensitivity calculus on top of them.

Holds the shared currency of the package: WeightedSet (points + positive
weights), query evaluation bar_cost, the normalized nu-distance used by the
analysis, the brute-force sensitivity oracle, and the sample-size formulas.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import metric
from .metric import Block, CostModel
from .points import Point, dense

__all__ = [
    "WeightedSet", "QuerySpec", "SensitivityProfile", "bar_cost",
    "nu_distance", "brute_sensitivity", "sample_size", "default_candidates",
]


@dataclass
class WeightedSet:
    points: list[Point]
    weights: np.ndarray
    _block: Block | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if len(self.points) != len(self.weights):
            raise ValueError("points and weights length mismatch")
        if len(self.weights) and (not np.all(np.isfinite(self.weights)) or np.any(self.weights <= 0)):
            raise ValueError("weights must be finite and strictly positive")

    @classmethod
    def from_matrix(cls, X, weights=None, ids: Iterable[int] | None = None) -> "WeightedSet":
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        n = X.shape[0]
        ids = list(range(n)) if ids is None else list(ids)
        w = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64)
        return cls([dense(i, row) for i, row in zip(ids, X)], w)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    @property
    def block(self) -> Block:
        if self._block is None or len(self._block) != len(self.points):
            self._block = metric.block(self.points)
        return self._block

    def subset(self, indices, weights=None) -> "WeightedSet":
        indices = np.asarray(indices, dtype=np.int64)
        w = self.weights[indices] if weights is None else weights
        return WeightedSet([self.points[i] for i in indices], np.asarray(w, dtype=np.float64))


@dataclass(frozen=True)
class QuerySpec:
    """Query-space shape: number of centers and the dimension constant
    entering the sample-size formulas (roughly the Euclidean dimension)."""

    k: int
    d_q: float

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.d_q <= 0:
            raise ValueError("d_q must be positive")


@dataclass
class SensitivityProfile:
    ids: np.ndarray
    s: np.ndarray

    @property
    def total(self) -> float:
        return float(self.s.sum())

    def by_id(self) -> dict[int, float]:
        return {int(i): float(v) for i, v in zip(self.ids, self.s)}


def bar_cost(model: CostModel, A: WeightedSet, centers: Sequence[Point]) -> float:
    """Weighted clustering cost of A against a fixed center set."""
    if len(A) == 0:
        return 0.0
    _, d = metric.nearest(model, A.block, metric.block(list(centers)))
    return float(np.dot(A.weights, d))


def nu_distance(a: float, b: float, nu: float) -> float:
    """Normalized gap |a-b| / (a+b+nu); lies in [0, 1) for nonnegative a, b."""
    if a < 0 or b < 0:
        raise ValueError("nu_distance arguments must be nonnegative")
    if nu <= 0:
        raise ValueError("nu must be positive")
    return abs(a - b) / (a + b + nu)


def brute_sensitivity(model: CostModel, P: WeightedSet, k: int,
                      candidate_queries: Sequence[Sequence[Point]]) -> SensitivityProfile:
    """Max over candidate queries of each point's share of the total cost.

    A restricted candidate list only lowers the result, so downstream
    domination checks stay sound.  Queries with zero total cost are skipped;
    if every query is degenerate there is nothing to maximize over.
    """
    if len(candidate_queries) == 0:
        raise ValueError("need at least one candidate query")
    n = len(P)
    s = np.zeros(n)
    a = P.block
    live = 0
    for Z in candidate_queries:
        if len(Z) == 0 or len(Z) > k:
            raise ValueError("each candidate query needs between 1 and k centers")
        _, d = metric.nearest(model, a, metric.block(list(Z)))
        contrib = P.weights * d
        total = contrib.sum()
        if total <= 0.0:
            continue
        live += 1
        np.maximum(s, contrib / total, out=s)
    if live == 0:
        raise ValueError("every candidate query has zero total cost")
    return SensitivityProfile(ids=a.ids.copy(), s=s)


def sample_size(t: float, q: QuerySpec, eps: float, delta: float,
                c_const: float = 1.0, formula: str = "main", beta: float = 1.0) -> int:
    """Coreset size for total sensitivity t at accuracy eps, confidence 1-delta.

    formula="main":  ceil(c * t/eps^2 * (d_q * k * log t + log(1/delta)))
    formula="alt":   ceil(c * k*(t+beta)/eps^2 * (d_q*log t + log(beta*k) + log(1/delta)))

    Natural logs; log t clamps to log 2 when t <= 1 (same clamp for the
    beta*k term).  c_const absorbs the unstated constants and any log-base
    conversions; calibrate it once per deployment.
    """
    if not (0.0 < eps < 1.0):
        raise ValueError("eps must lie in (0, 1)")
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    if t <= 0:
        raise ValueError("total sensitivity must be positive")
    if c_const <= 0:
        raise ValueError("c_const must be positive")
    lt = math.log(t) if t > 1.0 else math.log(2.0)
    if formula == "main":
        m = c_const * t / eps**2 * (q.d_q * q.k * lt + math.log(1.0 / delta))
    elif formula == "alt":
        if beta <= 0:
            raise ValueError("beta must be positive")
        lbk = math.log(beta * q.k) if beta * q.k > 1.0 else math.log(2.0)
        m = c_const * q.k * (t + beta) / eps**2 * (q.d_q * lt + lbk + math.log(1.0 / delta))
    else:
        raise ValueError("formula must be 'main' or 'alt'")
    return max(1, math.ceil(m))


def default_candidates(model: CostModel, P: WeightedSet, k: int,
                       grid_points: int | None = None, subset_cap: int = 5000,
                       seed: int = 0) -> list[list[Point]]:
    """Candidate query lists for the brute-force oracle.

    Low dimensions get a bounding-box grid (dense for k=1, coarse for the
    combinatorial k >= 2 case); every dimension gets the k-subsets of the
    distinct input points, capped by random choice, plus the global
    weighted centroid for k=1.
    """
    if len(P) == 0:
        raise ValueError("empty input")
    X = P.block.X
    dim = X.shape[1]
    queries: list[list[Point]] = []
    next_id = max((p.id for p in P.points), default=-1) + 1

    def fresh(coords_list) -> list[Point]:
        nonlocal next_id
        pts = [dense(next_id + i, c) for i, c in enumerate(coords_list)]
        next_id += len(pts)
        return pts

    # grid candidates only where the cross product stays small
    if dim in (1, 2) and model.base == "euclidean":
        lo, hi = X.min(axis=0), X.max(axis=0)
        span = np.maximum(hi - lo, 1.0)
        lo, hi = lo - 0.25 * span, hi + 0.25 * span
        if dim == 1:
            g = grid_points or (2001 if k == 1 else 61)
            axis = np.linspace(lo[0], hi[0], g)
            cells = [[v] for v in axis]
        else:
            g = grid_points or (45 if k == 1 else 12)
            ax0 = np.linspace(lo[0], hi[0], g)
            ax1 = np.linspace(lo[1], hi[1], g)
            cells = [[a, b] for a in ax0 for b in ax1]
        if k == 1:
            queries.extend(fresh([c]) for c in cells)
        else:
            combos = itertools.combinations(range(len(cells)), k)
            queries.extend(fresh([cells[i] for i in c]) for c in combos)

    # k-subsets of the distinct input locations
    distinct: list[int] = []
    seen = set()
    for i, p in enumerate(P.points):
        key = tuple(np.round(X[i], 12))
        if key not in seen:
            seen.add(key)
            distinct.append(i)
    all_subsets = list(itertools.combinations(distinct, k))
    if len(all_subsets) > subset_cap:
        rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
        pick = rng.choice(len(all_subsets), size=subset_cap, replace=False)
        all_subsets = [all_subsets[i] for i in pick]
    for sub in all_subsets:
        queries.append([P.points[i] for i in sub])

    if k == 1 and model.base == "euclidean" and dim > 0:
        centroid = np.average(X, axis=0, weights=P.weights)
        queries.append(fresh([centroid]))
    return queries

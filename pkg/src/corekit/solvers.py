"""Clustering solvers and small-instance oracles.

weighted_lloyd and medoid_swap are the workhorse approximate solvers used
for query generation and for shrinking center sets; exact_partition is the
brute-force oracle for tiny instances, and opt_lower_bound turns it into a
certified lower bound on the continuous optimum for larger inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import metric, rng as rngmod
from .metric import CostModel
from .points import Point, dense
from .weighted import WeightedSet

__all__ = [
    "Solution", "dsquared_pick", "weighted_lloyd", "medoid_swap",
    "exact_partition", "opt_lower_bound",
]

EXACT_MAX_N = 12
EXACT_MAX_K = 3


@dataclass
class Solution:
    centers: list[Point]
    cost: float
    assign: np.ndarray | None = None      # index into centers, aligned to input order
    meta: dict = field(default_factory=dict)


def dsquared_pick(model: CostModel, P: WeightedSet, count: int,
                  rng: np.random.Generator) -> list[int]:
    """Indices of up to ``count`` seeding centers, drawn w(p)*D(p, chosen)-
    proportionally (first pick weight-proportional).  Stops early once every
    point sits on a chosen center."""
    n = len(P)
    if n == 0:
        raise ValueError("empty input")
    w = P.weights
    first = int(rng.choice(n, p=w / w.sum()))
    chosen = [first]
    mind = metric.cross(model, P.block, metric.block([P.points[first]]))[:, 0]
    while len(chosen) < count:
        mass = w * mind
        total = mass.sum()
        if total <= 0.0:
            break
        nxt = int(rng.choice(n, p=mass / total))
        chosen.append(nxt)
        d = metric.cross(model, P.block, metric.block([P.points[nxt]]))[:, 0]
        np.minimum(mind, d, out=mind)
    return chosen


def _assign(model: CostModel, P: WeightedSet, centers: list[Point]):
    idx, d = metric.nearest(model, P.block, metric.block(centers))
    return idx, d, float(np.dot(P.weights, d))


def weighted_lloyd(model: CostModel, P: WeightedSet, k: int, seed: int,
                   rounds: int = 25) -> Solution:
    """Weighted Lloyd iterations after D-weighted seeding.

    Requires a model whose per-cluster minimizer is the weighted centroid
    (Euclidean k-means).  Cost never increases from round to round; empty
    clusters keep their stale center.
    """
    if not model.centroid_exact or model.base != "euclidean":
        raise ValueError("weighted_lloyd needs the Euclidean k-means model")
    if k < 1:
        raise ValueError("k must be at least 1")
    gen = rngmod.generator(seed)
    X = P.block.X
    w = P.weights
    picks = dsquared_pick(model, P, k, gen)
    C = X[picks].copy()
    for _ in range(rounds):
        centers = [dense(i, c) for i, c in enumerate(C)]
        idx, _, _ = _assign(model, P, centers)
        moved = False
        for j in range(len(C)):
            sel = idx == j
            if not np.any(sel):
                continue
            c_new = np.average(X[sel], axis=0, weights=w[sel])
            if not np.array_equal(c_new, C[j]):
                C[j] = c_new
                moved = True
        if not moved:
            break
    centers = [dense(i, c) for i, c in enumerate(C)]
    idx, _, cost = _assign(model, P, centers)
    return Solution(centers=centers, cost=cost, assign=idx, meta={"rounds": rounds})


def medoid_swap(model: CostModel, P: WeightedSet, k: int, seed: int,
                max_sweeps: int = 8) -> Solution:
    """Single-swap local search over input points as centers.

    Works for any model.  Each sweep tries every (center, candidate) swap
    and applies the best strict improvement; stops at a local optimum or
    after max_sweeps.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    n = len(P)
    if n > 4096:
        raise ValueError("medoid_swap materializes an n x n distance matrix; n > 4096 refused")
    gen = rngmod.generator(seed)
    med = dsquared_pick(model, P, k, gen)
    D = metric.cross(model, P.block, P.block)
    w = P.weights

    def setcost(ms):
        return float(np.dot(w, D[:, ms].min(axis=1)))

    cost = setcost(med)
    for _ in range(max_sweeps):
        best = (0.0, None, None)
        for ci in range(len(med)):
            rest = [m for j, m in enumerate(med) if j != ci]
            alt = D[:, rest].min(axis=1) if rest else np.full(n, np.inf)
            for cand in range(n):
                if cand in med:
                    continue
                trial = float(np.dot(w, np.minimum(alt, D[:, cand])))
                gain = cost - trial
                if gain > best[0] + 1e-15:
                    best = (gain, ci, cand)
        if best[1] is None:
            break
        med[best[1]] = best[2]
        cost = setcost(med)
    centers = [P.points[m] for m in med]
    idx, _, cost = _assign(model, P, centers)
    return Solution(centers=centers, cost=cost, assign=idx, meta={"medoids": med})


def _partitions(n: int, kmax: int):
    """Restricted growth strings: all partitions of range(n) into <= kmax blocks."""
    a = [0] * n
    while True:
        yield a
        # increment the rightmost position that can grow
        i = n - 1
        while i > 0:
            cap = max(a[:i]) + 1
            if a[i] < cap and a[i] + 1 < kmax:
                a[i] += 1
                for j in range(i + 1, n):
                    a[j] = 0
                break
            i -= 1
        else:
            return


def exact_partition(model: CostModel, P: WeightedSet, k: int) -> Solution:
    """Optimal clustering by exhaustive partition enumeration.

    Euclidean k-means gets the continuous optimum (weighted centroid per
    block); other models get the optimum over input-point centers.  Guarded
    to n <= 12, k <= 3.
    """
    n = len(P)
    if n == 0:
        raise ValueError("empty input")
    if n > EXACT_MAX_N or k > EXACT_MAX_K:
        raise ValueError(f"exact_partition is limited to n <= {EXACT_MAX_N}, k <= {EXACT_MAX_K}")
    if k < 1:
        raise ValueError("k must be at least 1")
    X = P.block.X
    w = P.weights
    D = None if model.centroid_exact else metric.cross(model, P.block, P.block)

    best_cost = np.inf
    best_centers: list[Point] = []
    best_assign: np.ndarray | None = None
    for a in _partitions(n, k):
        labels = np.asarray(a)
        cost = 0.0
        centers = []
        for b in range(labels.max() + 1):
            sel = labels == b
            if model.centroid_exact:
                c = np.average(X[sel], axis=0, weights=w[sel])
                diff = X[sel] - c
                cost += float(np.dot(w[sel], model.wrap(np.sqrt((diff * diff).sum(axis=1)))))
                centers.append(c)
            else:
                idxs = np.flatnonzero(sel)
                block_costs = [float(np.dot(w[idxs], D[idxs, j])) for j in idxs]
                j = int(np.argmin(block_costs))
                cost += block_costs[j]
                centers.append(idxs[j])
            if cost >= best_cost:
                break
        if cost < best_cost:
            best_cost = cost
            best_assign = labels.copy()
            if model.centroid_exact:
                best_centers = [dense(i, c) for i, c in enumerate(centers)]
            else:
                best_centers = [P.points[j] for j in centers]
    return Solution(centers=best_centers, cost=best_cost, assign=best_assign,
                    meta={"method": "exact_partition"})


def opt_lower_bound(model: CostModel, P: WeightedSet, k: int, seed: int = 0) -> float:
    """Certified lower bound on the continuous-center optimum.

    Uses exact_partition directly when it fits; larger inputs fall back to a
    random <=12-point weighted subset (pointwise cost monotonicity keeps the
    bound valid).  Non-centroid models divide the restricted optimum by
    2*rho, since relocating each optimal center to the nearest input point
    at most doubles-and-rho-inflates the cost.
    """
    if k > EXACT_MAX_K:
        return 0.0
    n = len(P)
    if n > EXACT_MAX_N:
        gen = rngmod.generator(seed)
        sub = np.sort(gen.choice(n, size=EXACT_MAX_N, replace=False))
        P = P.subset(sub)
    val = exact_partition(model, P, k).cost
    if not model.centroid_exact:
        val /= 2.0 * model.rho
    return float(val)

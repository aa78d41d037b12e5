"""Offline bicriterion approximations.

A bicriterion (alpha, beta)-approximation trades center count for cost: it
may open beta*k centers but must stay within alpha of the k-center optimum.
Oversampled D-weighted seeding gets there cheaply; compose() chains two
approximations (points -> B -> C) with the rho-aware cost bound; and
reduce_to_constant() shrinks any input to exactly k centers at O(1) cost
blowup via an intermediate half-accuracy coreset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import metric, rng as rngmod, solvers
from .metric import CostModel
from .points import Point
from .weighted import QuerySpec, WeightedSet, sample_size

__all__ = ["Assignment", "assign_to_centers", "dsquared_seed", "compose",
           "reduce_to_constant", "compose_alpha"]


@dataclass
class Assignment:
    """A center set plus the map sending every input point to one center.

    centers.weights carry the total input weight assigned to each center.
    alpha_hint/beta_hint are bookkeeping for downstream sensitivity bounds:
    0 means unknown.
    """

    P: WeightedSet
    centers: WeightedSet
    assign_idx: np.ndarray
    dist: np.ndarray
    alpha_hint: float = 0.0
    beta_hint: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def conn_cost(self) -> float:
        return float(np.dot(self.P.weights, self.dist))

    def cluster_weight(self, j: int) -> float:
        return float(self.centers.weights[j])

    def check(self) -> None:
        n, m = len(self.P), len(self.centers)
        if len(self.assign_idx) != n or len(self.dist) != n:
            raise ValueError("assignment arrays must align with the input set")
        if n and (self.assign_idx.min() < 0 or self.assign_idx.max() >= m):
            raise ValueError("assignment index out of range")
        got = np.bincount(self.assign_idx, weights=self.P.weights, minlength=m)
        if not np.allclose(got, self.centers.weights, rtol=1e-9, atol=0.0):
            raise ValueError("cluster weights out of sync with the assignment")


def assign_to_centers(model: CostModel, P: WeightedSet, centers: list[Point],
                      alpha_hint: float = 0.0, beta_hint: float = 0.0) -> Assignment:
    """Assignment of P to its nearest center in the given list."""
    idx, d = metric.nearest(model, P.block, metric.block(centers))
    cw = np.bincount(idx, weights=P.weights, minlength=len(centers))
    # drop centers that attracted nothing so cluster weights stay positive
    keep = np.flatnonzero(cw > 0)
    if len(keep) < len(centers):
        remap = -np.ones(len(centers), dtype=np.int64)
        remap[keep] = np.arange(len(keep))
        idx = remap[idx]
        centers = [centers[i] for i in keep]
        cw = cw[keep]
    B = WeightedSet(list(centers), cw)
    return Assignment(P=P, centers=B, assign_idx=idx, dist=d,
                      alpha_hint=alpha_hint, beta_hint=beta_hint)


def dsquared_seed(model: CostModel, P: WeightedSet, k: int, seed: int,
                  oversample: int = 2) -> Assignment:
    """Oversampled D-weighted seeding: oversample * k * ceil(log2 n) centers.

    With k at or above the number of distinct locations the seeding collects
    them all and the connection cost is exactly zero.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if oversample < 1:
        raise ValueError("oversample must be at least 1")
    n = len(P)
    if n == 0:
        raise ValueError("empty input")
    count = oversample * k * math.ceil(math.log2(max(n, 2)))
    gen = rngmod.generator(seed)
    picks = solvers.dsquared_pick(model, P, min(count, n), gen)
    A = assign_to_centers(model, P, [P.points[i] for i in picks])
    A.beta_hint = len(A.centers) / k
    A.meta["oversample"] = oversample
    return A


def compose_alpha(rho: float, alpha: float, gamma: float) -> float:
    """Cost factor of a chained approximation: rho*alpha + 2*rho^2*gamma*(alpha+1)."""
    return rho * alpha + 2.0 * rho * rho * gamma * (alpha + 1.0)


def compose(model: CostModel, inner: Assignment, outer: Assignment) -> Assignment:
    """Chain P -> B -> C into an assignment of P onto C's centers.

    ``outer`` must be an assignment of ``inner.centers``; its id layout is
    validated.  alpha_hint follows the composition bound when both inputs
    carry hints.
    """
    if len(outer.P) != len(inner.centers) or not np.array_equal(
            outer.P.block.ids, inner.centers.block.ids):
        raise ValueError("outer assignment does not cover the inner center set")
    P = inner.P
    comp = outer.assign_idx[inner.assign_idx]
    C = outer.centers
    M = metric.cross(model, P.block, C.block)
    d = M[np.arange(len(P)), comp]
    cw = np.bincount(comp, weights=P.weights, minlength=len(C))
    alpha = 0.0
    if inner.alpha_hint > 0 and outer.alpha_hint > 0:
        alpha = compose_alpha(model.rho, inner.alpha_hint, outer.alpha_hint)
    return Assignment(P=P, centers=WeightedSet(list(C.points), cw), assign_idx=comp,
                      dist=d, alpha_hint=alpha, beta_hint=outer.beta_hint,
                      meta={"composed": True})


def reduce_to_constant(model: CostModel, P: WeightedSet, k: int, seed: int, *,
                       alpha_bar: float = 5.0, gamma_hint: float = 5.0,
                       delta: float = 0.1, c_const: float = 0.02,
                       d_q: float | None = None) -> Assignment:
    """Exactly k centers at constant-factor cost.

    Seeds an oversampled bicriterion, condenses P to a half-accuracy coreset
    under it, solves k-clustering on the coreset, then reassigns all of P to
    the k solved centers.
    """
    from .offline import build_coreset, sensitivity_from_assignment  # import cycle: offline uses Assignment

    if k < 1:
        raise ValueError("k must be at least 1")
    seeds = rngmod.split(seed, 3)
    A0 = dsquared_seed(model, P, k, seeds[0])
    if d_q is None:
        d_q = max(float(P.block.X.shape[1]), 1.0)
    prof = sensitivity_from_assignment(model, P, A0, alpha_bar=alpha_bar)
    m = sample_size(prof.total, QuerySpec(k=k, d_q=d_q), eps=0.5, delta=delta,
                    c_const=c_const)
    if m < len(P):
        core = build_coreset(P, A0, m, seeds[1]).S
    else:
        core = P
    if model.centroid_exact and model.base == "euclidean":
        sol = solvers.weighted_lloyd(model, core, k, seeds[2])
    else:
        sol = solvers.medoid_swap(model, core, k, seeds[2])
    A = assign_to_centers(model, P, sol.centers)
    # half-accuracy coreset turns a gamma-solver into a 3*gamma one on P
    A.alpha_hint = 3.0 * gamma_hint
    A.beta_hint = len(A.centers) / k
    A.meta["pipeline"] = "seed/condense/solve/reassign"
    return A

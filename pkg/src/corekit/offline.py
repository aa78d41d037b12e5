"""Offline coreset construction by importance sampling.

Given any bicriterion assignment of the data, each point's sampling weight
mixes its share of the connection cost with its share of its cluster's
weight; m i.i.d. draws from that distribution, reweighted by 1/(m*pr),
form the coreset.  sensitivity_from_assignment exposes the matching
per-point sensitivity upper bounds used by the streaming samplers and the
sample-size formulas.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .bicriterion import Assignment
from .metric import CostModel
from .weighted import SensitivityProfile, WeightedSet

__all__ = ["CoresetSample", "AliasTable", "sampling_distribution",
           "build_coreset", "sensitivity_from_assignment"]


class AliasTable:
    """Vose alias method: O(n) setup, O(1) per draw, vectorized draws."""

    def __init__(self, prob: np.ndarray):
        prob = np.asarray(prob, dtype=np.float64)
        if len(prob) == 0 or np.any(prob < 0) or not np.all(np.isfinite(prob)):
            raise ValueError("need a nonempty vector of nonnegative probabilities")
        total = prob.sum()
        if total <= 0:
            raise ValueError("probabilities sum to zero")
        n = len(prob)
        scaled = prob * (n / total)
        self.accept = np.ones(n)
        self.alias = np.arange(n)
        small = [i for i, v in enumerate(scaled) if v < 1.0]
        large = [i for i, v in enumerate(scaled) if v >= 1.0]
        scaled = scaled.copy()
        while small and large:
            s, l = small.pop(), large.pop()
            self.accept[s] = scaled[s]
            self.alias[s] = l
            scaled[l] -= 1.0 - scaled[s]
            (small if scaled[l] < 1.0 else large).append(l)
        for i in small + large:
            self.accept[i] = 1.0

    def draw(self, gen: np.random.Generator, size: int) -> np.ndarray:
        cols = gen.integers(0, len(self.accept), size=size)
        flip = gen.random(size)
        return np.where(flip < self.accept[cols], cols, self.alias[cols])


@dataclass
class CoresetSample:
    S: WeightedSet
    m: int
    pr: np.ndarray                      # sampling distribution over the source set
    source_ids: np.ndarray
    counts: np.ndarray                  # multiplicity per retained point
    source_w: np.ndarray                # original weight per retained point
    provenance: str = "offline"
    meta: dict = field(default_factory=dict)

    def check(self) -> None:
        """Reweighting identity: u(p) = count(p) * w(p) / (m * pr(p))."""
        if int(self.counts.sum()) != self.m:
            raise ValueError("draw multiplicities must sum to m")
        if abs(self.pr.sum() - 1.0) > 1e-9:
            raise ValueError("sampling distribution must sum to one")
        pr_by_id = {int(i): p for i, p in zip(self.source_ids, self.pr)}
        for pt, u, c, w in zip(self.S.points, self.S.weights, self.counts, self.source_w):
            expect = c * w / (self.m * pr_by_id[pt.id])
            if abs(u - expect) > 1e-12 * max(abs(expect), 1e-300):
                raise ValueError(f"coreset weight for point {pt.id} violates the reweighting identity")


def sampling_distribution(P: WeightedSet, A: Assignment) -> np.ndarray:
    """Per-point draw probabilities: half cost share, half cluster share.

    pr(p) = w(p) D(p, B(p)) / (2 * conn_cost)
          + w(p) / (2 |B| * clusterweight(B(p)))

    When the assignment cost is exactly zero the first share is vacuous and
    the second doubles, keeping the total at one.
    """
    if A.P is not P:
        if len(A.P) != len(P) or not np.array_equal(A.P.block.ids, P.block.ids):
            raise ValueError("assignment does not cover this point set")
    w = P.weights
    total = float(np.dot(w, A.dist))
    nb = len(A.centers)
    clw = A.centers.weights[A.assign_idx]
    count_term = w / (nb * clw)
    if total > 0.0:
        pr = w * A.dist / (2.0 * total) + 0.5 * count_term
    else:
        pr = count_term
    return pr


def build_coreset(P: WeightedSet, A: Assignment, m: int, seed: int) -> CoresetSample:
    """m i.i.d. draws from sampling_distribution, duplicates merged.

    Each draw carries weight w(p)/(m*pr(p)); a point drawn c times keeps one
    entry with weight c*w(p)/(m*pr(p)).
    """
    if m < 1:
        raise ValueError("sample size must be at least 1")
    pr = sampling_distribution(P, A)
    gen = rngmod.generator(seed)
    draws = AliasTable(pr).draw(gen, m)
    return _merge_draws(P, A, pr, m, draws)


def _merge_draws(P: WeightedSet, A: Assignment, pr: np.ndarray, m: int,
                 draws: np.ndarray) -> CoresetSample:
    counts = np.bincount(draws, minlength=len(P))
    hit = np.flatnonzero(counts)
    u = counts[hit] * P.weights[hit] / (m * pr[hit])
    S = WeightedSet([P.points[i] for i in hit], u)
    return CoresetSample(S=S, m=m, pr=pr, source_ids=P.block.ids.copy(),
                         counts=counts[hit], source_w=P.weights[hit].copy(),
                         provenance="offline", meta={"source_n": len(P)})


def sensitivity_from_assignment(model: CostModel, P: WeightedSet, A: Assignment,
                                alpha_bar: float) -> SensitivityProfile:
    """Closed-form sensitivity upper bounds from a bicriterion assignment.

    s'(p) = rho*a * w(p) D(p, B(p)) / conn_cost
          + rho^2 (a+1) * w(p) / clusterweight(B(p))

    Valid whenever alpha_bar really bounds conn_cost/OPT from above.  The
    totals telescope: sum s' = rho*a + rho^2 (a+1) |B| exactly.  A zero-cost
    assignment drops the vacuous first term.
    """
    if alpha_bar < 1.0:
        raise ValueError("alpha_bar below 1 cannot bound any approximation factor")
    if len(A.centers) and A.centers.weights.min() <= 0.0:
        raise ValueError("assignment has a cluster of zero weight")
    rho = model.rho
    w = P.weights
    total = float(np.dot(w, A.dist))
    clw = A.centers.weights[A.assign_idx]
    s = rho * rho * (alpha_bar + 1.0) * w / clw
    if total > 0.0:
        s = s + rho * alpha_bar * w * A.dist / total
    return SensitivityProfile(ids=P.block.ids.copy(), s=s)

"""Merge-and-reduce streaming baseline.

A binary-counter tree of coresets-of-coresets: the stream is cut into
fixed-size segments; level 0 holds one raw segment, and whenever two
buckets of the same level are occupied they are unioned and reduced by the
offline sampler at the per-level accuracy eps_leaf.  Accuracy compounds
additively with tree height, so eps_leaf = eps / levels keeps the emitted
union inside the overall eps budget.  Peak storage is the quantity of
interest: it carries the extra log factors the direct streaming sampler
avoids, and the driver records it per push so the comparison is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .bicriterion import dsquared_seed
from .metric import CostModel
from .offline import build_coreset, sensitivity_from_assignment
from .points import Point
from .weighted import QuerySpec, WeightedSet, sample_size

__all__ = ["MergeReduce", "MergeReduceResult", "plan_tree"]


def plan_tree(model: CostModel, k: int, n_bound: int, eps: float, delta: float,
              alpha_bar: float, c_const: float, d_q: float) -> tuple[int, float, int]:
    """(levels, eps_leaf, segment_size) for a stream of at most n_bound points.

    Levels are fixed from n_bound against a 64-point floor segment, which
    breaks the circularity between segment size and per-level accuracy; the
    actual segment size then doubles the leaf sample size so every reduce
    genuinely shrinks its input.
    """
    if n_bound < 1:
        raise ValueError("n_bound must be positive")
    levels = max(1, math.ceil(math.log2(max(n_bound / 64.0, 2.0))))
    eps_leaf = eps / levels
    rho = model.rho
    t_hint = rho * alpha_bar + rho * rho * (alpha_bar + 1.0) * k
    m_leaf = sample_size(t_hint, QuerySpec(k=k, d_q=d_q), eps_leaf, delta,
                         c_const=c_const)
    segment = max(2 * m_leaf, 64)
    return levels, eps_leaf, segment


@dataclass
class _Bucket:
    data: WeightedSet
    eps_acc: float        # accumulated accuracy, multiples of eps_leaf
    n_summarized: int     # raw stream points this bucket stands for


@dataclass
class MergeReduceResult:
    coreset: WeightedSet
    eps_reported: float
    levels: int
    eps_leaf: float
    segment_size: int
    reduces: int
    peak_points: int
    meta: dict = field(default_factory=dict)


def _concat(a: WeightedSet, b: WeightedSet) -> WeightedSet:
    return WeightedSet(list(a.points) + list(b.points),
                       np.concatenate([a.weights, b.weights]))


class MergeReduce:
    """Streaming driver around the bucket tree."""

    def __init__(self, model: CostModel, k: int, n_bound: int, eps: float,
                 delta: float, seed: int, *, alpha_bar: float = 5.0,
                 c_const: float = 0.02, d_q: float | None = None,
                 oversample: int = 2):
        if not (0.0 < eps < 1.0) or not (0.0 < delta < 1.0):
            raise ValueError("eps and delta must lie in (0, 1)")
        self.model = model
        self.k = k
        self.n_bound = n_bound
        self.eps = eps
        self.delta = delta
        self.alpha_bar = alpha_bar
        self.c_const = c_const
        self.oversample = oversample
        self._d_q = d_q
        self._seed_gen = rngmod.generator(seed)
        self._planned = d_q is not None
        if self._planned:
            self.levels, self.eps_leaf, self.segment_size = plan_tree(
                model, k, n_bound, eps, delta, alpha_bar, c_const, d_q)
        self.buckets: list[_Bucket | None] = []
        self._buf_pts: list[Point] = []
        self._buf_w: list[float] = []
        self._next_id = 0
        self.count = 0
        self.total_weight = 0.0
        self.reduces = 0
        self.peak_points = 0

    def _plan_from(self, p: Point) -> None:
        d_q = float(p.max_index() + 1) if p.max_index() >= 0 else 1.0
        self._d_q = d_q
        self.levels, self.eps_leaf, self.segment_size = plan_tree(
            self.model, self.k, self.n_bound, self.eps, self.delta,
            self.alpha_bar, self.c_const, d_q)
        self._planned = True

    def _as_point(self, x) -> Point:
        if isinstance(x, Point):
            if x.id is None:
                raise ValueError("stream points need ids")
            self._next_id = max(self._next_id, x.id + 1)
            return x
        from .points import dense
        p = dense(self._next_id, np.asarray(x, dtype=np.float64))
        self._next_id += 1
        return p

    def push(self, x, w: float = 1.0) -> None:
        p = self._as_point(x)
        if not self._planned:
            self._plan_from(p)
        self._buf_pts.append(p)
        self._buf_w.append(float(w))
        self.count += 1
        self.total_weight += float(w)
        if len(self._buf_pts) >= self.segment_size:
            seg = WeightedSet(self._buf_pts, np.asarray(self._buf_w))
            self._buf_pts, self._buf_w = [], []
            self._insert_segment(seg)
        self._track(0)

    def _stored(self) -> int:
        return len(self._buf_pts) + sum(len(b.data.points) for b in self.buckets if b)

    def _track(self, transient: int) -> None:
        self.peak_points = max(self.peak_points, self._stored() + transient)

    def _reduce(self, data: WeightedSet) -> WeightedSet:
        """Offline-sample data down to the leaf-accuracy size, weight-exact."""
        target_w = data.total_weight
        s1 = int(self._seed_gen.integers(2**62))
        s2 = int(self._seed_gen.integers(2**62))
        A = dsquared_seed(self.model, data, self.k, s1, oversample=self.oversample)
        prof = sensitivity_from_assignment(self.model, data, A, self.alpha_bar)
        m = sample_size(prof.total, QuerySpec(k=self.k, d_q=self._d_q),
                        self.eps_leaf, self.delta, c_const=self.c_const)
        if m >= len(data.points):
            return data
        sample = build_coreset(data, A, m, s2)
        S = sample.S
        self.reduces += 1
        tw = S.total_weight
        if tw > 0:
            S = WeightedSet(list(S.points), S.weights * (target_w / tw))
        return S

    def _insert_segment(self, seg: WeightedSet) -> None:
        """Binary-counter carry: union equal-level buckets, reduce, move up."""
        carry = _Bucket(data=seg, eps_acc=0.0, n_summarized=len(seg.points))
        j = 0
        while True:
            if j >= len(self.buckets):
                self.buckets.append(None)
            if self.buckets[j] is None:
                self.buckets[j] = carry
                break
            other = self.buckets[j]
            self.buckets[j] = None
            merged = _concat(other.data, carry.data)
            before_w = merged.total_weight
            self._track(len(merged.points))
            reduced = self._reduce(merged)
            assert abs(reduced.total_weight - before_w) <= 1e-9 * max(before_w, 1.0), \
                "carry lost weight"
            grew = 0.0 if reduced is merged else self.eps_leaf
            carry = _Bucket(data=reduced,
                            eps_acc=max(other.eps_acc, carry.eps_acc) + grew,
                            n_summarized=other.n_summarized + carry.n_summarized)
            j += 1

    def occupied_levels(self) -> list[int]:
        return [j for j, b in enumerate(self.buckets) if b is not None]

    def result(self) -> MergeReduceResult:
        parts: list[WeightedSet] = [b.data for b in self.buckets if b is not None]
        eps_out = max((b.eps_acc for b in self.buckets if b is not None), default=0.0)
        if self._buf_pts:
            parts.append(WeightedSet(list(self._buf_pts), np.asarray(self._buf_w)))
        if not parts:
            raise ValueError("nothing ingested")
        out = parts[0]
        for pt in parts[1:]:
            out = _concat(out, pt)
        assert abs(out.total_weight - self.total_weight) <= 1e-9 * max(self.total_weight, 1.0)
        return MergeReduceResult(coreset=out, eps_reported=eps_out,
                                 levels=self.levels, eps_leaf=self.eps_leaf,
                                 segment_size=self.segment_size,
                                 reduces=self.reduces, peak_points=self.peak_points,
                                 meta={"occupied": self.occupied_levels(),
                                       "count": self.count})

"""Online bicriterion clustering over a stream, in geometric phases.

Each phase works against a cost stake L: an arriving point either opens a
center (with probability proportional to its connection cost, scaled by
k(1+log2 n)/L) or folds its weight onto the nearest existing center,
charging the move's cost to the running tab K.  When K overruns gamma*L or
the center count overruns the budget, the phase ends: the live centers are
snapshotted, flagged, and replayed into the next phase, whose stake is
phi*L.  Replay keeps the total folded weight exact, and the per-phase tabs
K_i certify an earth-mover bound between any snapshot and the prefix it
condenses.

Assignments B(x) are online: they are written once, when the point first
arrives, and never revised.
"""

from __future__ import annotations

import collections
import math
from dataclasses import dataclass, field

import numpy as np

from . import metric, rng as rngmod
from .metric import CostModel
from .points import Point
from .weighted import WeightedSet

__all__ = ["Snapshot", "MoveRecord", "StreamBicriterion", "lambda_phases"]


def lambda_phases(rho: float, phi: float, gamma: float, eps: float) -> int:
    """Trailing-phase lag: replaying this many phases back, the accumulated
    move cost is at most eps times the stream optimum.

    lag = 2 + ceil(log_phi(rho*gamma / ((phi - rho) * eps))), floored at 2.
    """
    if phi <= rho:
        raise ValueError("phi must exceed rho")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if not (0.0 < eps < 1.0):
        raise ValueError("eps must lie in (0, 1)")
    x = rho * gamma / ((phi - rho) * eps)
    steps = math.ceil(math.log(x) / math.log(phi) - 1e-12)
    return 2 + max(steps, 0)


@dataclass(frozen=True)
class MoveRecord:
    phase: int
    src: int
    dst: int
    weight: float
    cost: float


@dataclass
class Snapshot:
    """Frozen center set at a phase boundary, with its certified move budget."""

    phase: int
    points: list[Point]
    u: np.ndarray
    budget: float                  # sum of K_1..K_phase, an EMD bound vs the prefix
    prefix_weight: float

    def as_weighted_set(self) -> WeightedSet:
        return WeightedSet(list(self.points), self.u.copy())

    def __len__(self) -> int:
        return len(self.points)


class StreamBicriterion:
    """Single-pass center maintenance; see the module docstring.

    Call prime() with the opening run of points (k distinct locations, two
    for k=1) to fix the first stake L1, then update() per stream element in
    order, including those already shown to prime().
    """

    def __init__(self, model: CostModel, k: int, n_bound: int, seed: int, *,
                 phi: float | None = None, gamma: float | None = None,
                 ring: int = 8, log_moves: bool = False):
        if k < 1:
            raise ValueError("k must be at least 1")
        if n_bound < 2:
            raise ValueError("n_bound must be at least 2")
        rho = model.rho
        self.model = model
        self.k = k
        self.phi = float(phi) if phi is not None else 4.0 * rho
        self.gamma = float(gamma) if gamma is not None else max(8.0, 4.0 * rho)
        if self.phi <= rho:
            raise ValueError("phi must exceed rho")
        if self.gamma <= 1.0:
            raise ValueError("gamma must exceed 1")
        self.n_bound = n_bound
        log2n = math.log2(n_bound)
        self.rate = k * (1.0 + log2n)
        self.center_cap = (self.gamma - 1.0) * (1.0 + log2n) * k
        self._gen = rngmod.generator(seed)

        self._cids: list[int] = []
        self._cpts: list[Point] = []
        self._cu: list[float] = []
        self._cmat: np.ndarray | None = None
        self._cwidth = 0

        self.bmap: dict[int, int] = {}          # fresh-point id -> first assigned center id
        self._fwd: dict[int, int] = {}          # move chain, written once per entity
        self.pending: collections.deque = collections.deque()

        self.phase = 1
        self.L: float | None = None
        self.K = 0.0
        self.k_done: list[float] = []
        self._kcum: list[float] = [0.0]
        self.ring: collections.deque[Snapshot] = collections.deque(maxlen=max(ring, 2))
        self.version = 0
        self.total_weight = 0.0
        self.moves: list[MoveRecord] | None = [] if log_moves else None
        self.replayed_last_update = 0

    # -- setup ------------------------------------------------------------

    @staticmethod
    def distinct_needed(k: int) -> int:
        return k if k >= 2 else 2

    def prime(self, opening: list[Point]) -> None:
        """Fix L1 as the smallest pairwise cost among the first k distinct
        locations (k=1 uses two).  Does not consume the points; feed them
        through update() afterwards in arrival order."""
        if self.L is not None:
            raise RuntimeError("stream already primed")
        need = self.distinct_needed(self.k)
        reps: list[Point] = []
        for p in opening:
            if all(metric.distance(self.model, p, q) > 0.0 for q in reps):
                reps.append(p)
            if len(reps) == need:
                break
        if len(reps) < need:
            raise ValueError(f"need {need} distinct locations to prime the stream")
        b = metric.block(reps)
        M = metric.cross(self.model, b, b)
        iu = np.triu_indices(need, 1)
        self.L = float(M[iu].min())
        if self.L <= 0.0:
            raise ValueError("distinct locations produced a zero stake")

    def acceptance_probability(self, w: float, d: float) -> float:
        """min{w * D * k(1+log2 n) / L, 1} for the current stake."""
        if self.L is None:
            raise RuntimeError("stream not primed")
        return min(w * d * self.rate / self.L, 1.0)

    # -- streaming --------------------------------------------------------

    def update(self, x: Point, w: float = 1.0) -> tuple[int, float, list[Snapshot]]:
        """Ingest one stream element.

        Returns (B(x) entity id, connection cost D(x, B(x)) at assignment
        time, snapshots of any phases that ended).  Any replay left over
        from an earlier trigger is consumed first, and replay caused by this
        element is consumed before returning, so the state is settled when
        control comes back.
        """
        if self.L is None:
            raise RuntimeError("stream not primed")
        if not (w > 0.0) or not math.isfinite(w):
            raise ValueError("weights must be positive and finite")
        self.total_weight += w
        self.replayed_last_update = len(self.pending)
        self.pending.append((x, float(w), 0))
        out_id, out_d = -1, 0.0
        snaps: list[Snapshot] = []
        while self.pending:
            p, pw, flag = self.pending.popleft()
            cid, cd = self._process(p, pw, flag)
            if flag == 0:
                out_id, out_d = cid, cd
            snap = self._maybe_rollover()
            if snap is not None:
                snaps.append(snap)
        return out_id, out_d, snaps

    def _process(self, p: Point, w: float, flag: int) -> tuple[int, float]:
        fresh = flag == 0
        if not self._cids:
            self._open(p, w)
            if fresh:
                self.bmap[p.id] = p.id
            return p.id, 0.0
        d, j = self._nearest(p)
        yid = self._cids[j]
        if d > 0.0 and self._gen.random() < min(w * d * self.rate / self.L, 1.0):
            self._open(p, w)
            if fresh:
                self.bmap[p.id] = p.id
            return p.id, 0.0
        self.K += w * d
        self._cu[j] += w
        self._fwd[p.id] = yid
        if fresh:
            self.bmap[p.id] = yid
        if self.moves is not None:
            self.moves.append(MoveRecord(self.phase, p.id, yid, w, w * d))
        return yid, d

    def _open(self, p: Point, w: float) -> None:
        self._cids.append(p.id)
        self._cpts.append(p)
        self._cu.append(w)
        row = np.asarray(p.to_dense(max(p.max_index() + 1, self._cwidth)))
        if self._cmat is None:
            self._cmat = row.reshape(1, -1).copy()
            self._cwidth = row.shape[0]
        else:
            if row.shape[0] > self._cwidth:
                self._cmat = np.pad(self._cmat, ((0, 0), (0, row.shape[0] - self._cwidth)))
                self._cwidth = row.shape[0]
            elif row.shape[0] < self._cwidth:
                row = np.pad(row, (0, self._cwidth - row.shape[0]))
            self._cmat = np.vstack([self._cmat, row])
        self.version += 1

    def _nearest(self, p: Point) -> tuple[float, int]:
        if self.model.base == "table":
            base = self.model.table[p.id, np.asarray(self._cids)]
        else:
            row = p.to_dense(self._cwidth) if p.max_index() + 1 <= self._cwidth else None
            if row is None:
                # wider point: live centers gain implicit zero coordinates
                width = p.max_index() + 1
                self._cmat = np.pad(self._cmat, ((0, 0), (0, width - self._cwidth)))
                self._cwidth = width
                row = p.to_dense(width)
            diff = self._cmat - row
            base = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        d = np.asarray(self.model.wrap(base), dtype=np.float64)
        j = int(np.argmin(d))
        tied = np.flatnonzero(d == d[j])
        if len(tied) > 1:
            ids = np.asarray(self._cids)[tied]
            j = int(tied[np.argmin(ids)])
        return float(d[j]), j

    def _maybe_rollover(self) -> Snapshot | None:
        if self.K <= self.gamma * self.L and len(self._cids) <= self.center_cap:
            return None
        self.k_done.append(self.K)
        self._kcum.append(self._kcum[-1] + self.K)
        u = np.asarray(self._cu, dtype=np.float64)
        snap = Snapshot(phase=self.phase, points=list(self._cpts), u=u,
                        budget=self._kcum[-1], prefix_weight=float(u.sum()))
        self.ring.append(snap)
        items = [(pt, w, 1) for pt, w in zip(self._cpts, self._cu)]
        self.pending.extendleft(reversed(items))
        self._cids.clear()
        self._cpts.clear()
        self._cu.clear()
        self._cmat = None
        self._cwidth = 0
        self.version += 1
        self.phase += 1
        self.L *= self.phi
        self.K = 0.0
        return snap

    # -- inspection --------------------------------------------------------

    def resolve(self, entity: int) -> int:
        """Follow the move chain to the entity currently holding the weight."""
        seen = []
        e = entity
        while e in self._fwd:
            seen.append(e)
            e = self._fwd[e]
        for s in seen[:-1]:
            self._fwd[s] = e
        return e

    def live_centers(self) -> WeightedSet:
        return WeightedSet(list(self._cpts), np.asarray(self._cu, dtype=np.float64))

    def live_center_ids(self) -> list[int]:
        return list(self._cids)

    def center_weight(self, entity: int) -> float:
        return self._cu[self._cids.index(entity)]

    @property
    def stored_points(self) -> int:
        return len(self._cids) + len(self.pending) + sum(len(s) for s in self.ring)

    def held_weight(self) -> float:
        """Weight on live centers plus weight parked in the replay queue."""
        return float(sum(self._cu)) + float(sum(it[1] for it in self.pending))

    def emd_budget(self, j: int) -> float:
        """Certified transport budget sum(K_1..K_j) for a completed phase j."""
        if j == 0:
            return 0.0
        if not (1 <= j <= len(self.k_done)):
            raise ValueError(f"phase {j} has not completed")
        return self._kcum[j]

    def snapshot_for(self, j: int) -> Snapshot | None:
        for s in self.ring:
            if s.phase == j:
                return s
        return None

"""Streaming coreset samplers driven by the online bicriterion.

Two schedules share one threshold idea: every point draws one uniform
number at arrival and stays retained exactly while that number sits under
scale * score(p).  Scores only ever decrease as the stream reveals more
mass, so deletions are permanent and the end-of-stream retention marginal
is min(scale * final_score, 1).

schedule="sensitivity" scores points by the closed-form sensitivity bound
    z(p) = rho*a * w(p) D(p,p') / L  +  rho^2 (a+1) * w(p) / W(p')
where p' is the solved k-center condensation of the live bicriterion
centers that p's weight currently sits under, W(p') that condensation
cluster's weight, and L a running lower estimate of the connection cost.
One retained set spans the whole stream.

schedule="algorithm1" scores points by the offline two-part draw
probability pr(p), evaluated against the online assignment map; a fresh
window opens at every phase boundary so a query can pair the lagged
snapshot with a sample of exactly the points after it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import metric, rng as rngmod, solvers
from .metric import CostModel
from .points import Point, dense
from .stream_bicriterion import Snapshot, StreamBicriterion, lambda_phases
from .weighted import WeightedSet

__all__ = ["SensitivitySampler", "WindowSampler", "WindowEmit", "assemble",
           "StreamCoreset", "StreamResult", "x_scale_for", "t_prime_for"]


def t_prime_for(model: CostModel, k: int, alpha_bar: float) -> float:
    """Total-sensitivity budget rho*a + rho^2 (a+1) k."""
    rho = model.rho
    return rho * alpha_bar + rho * rho * (alpha_bar + 1.0) * k


def x_scale_for(eps: float, delta: float, n_bound: int, t_prime: float,
                c_const: float) -> float:
    """Threshold multiplier 2c/eps^2 * (log n log t' + log(1/delta))."""
    if not (0.0 < eps < 1.0) or not (0.0 < delta < 1.0):
        raise ValueError("eps and delta must lie in (0, 1)")
    lt = math.log(t_prime) if t_prime > 1.0 else math.log(2.0)
    return 2.0 * c_const / eps**2 * (math.log(max(n_bound, 2)) * lt + math.log(1.0 / delta))


class SensitivitySampler:
    """Whole-stream threshold sampler over the closed-form sensitivity score."""

    def __init__(self, model: CostModel, k: int, n_bound: int, eps: float,
                 delta: float, seed: int, alpha_bar: float, c_const: float,
                 bic: StreamBicriterion, *, strict_refresh: bool = False,
                 track_all: bool = False):
        if alpha_bar < 1.0:
            raise ValueError("alpha_bar must be at least 1")
        self.model = model
        self.k = k
        self.eps = eps
        self.rho = model.rho
        self.alpha_bar = alpha_bar
        self.t_prime = t_prime_for(model, k, alpha_bar)
        self.x_scale = x_scale_for(eps, delta, n_bound, self.t_prime, c_const)
        self.bic = bic
        self.strict = strict_refresh
        seeds = rngmod.split(seed, 2)
        self._gen = rngmod.generator(seeds[0])
        self._solver_gen = rngmod.generator(seeds[1])

        # retained set, parallel columns
        self._pts: list[Point] = []
        self._w: list[float] = []
        self._uthr: list[float] = []
        self._sprime: list[float] = []
        self._bid: list[int] = []
        self._dnear: list[float] = []

        # condensation C of the live centers
        self._C: list[Point] = []
        self._Cmat: np.ndarray | None = None
        self._c_of: dict[int, int] = {}
        self._W: np.ndarray = np.zeros(0)
        self._version = -1
        self._solved_at = 0
        self._king = 0.0
        self._L_sweep = 0.0
        self._n_sweep = 0
        self.shadow: dict[int, float] | None = {} if track_all else None
        self.exact_cost_hook = None      # test instrumentation: L override

    # -- bookkeeping against the live bicriterion --------------------------

    def _solve_C(self) -> None:
        live = self.bic.live_centers()
        kk = min(self.k, len(live))
        sseed = int(self._solver_gen.integers(2**62))
        if self.model.centroid_exact and self.model.base == "euclidean":
            sol = solvers.weighted_lloyd(self.model, live, kk, sseed, rounds=12)
        elif len(live) <= 4096:
            sol = solvers.medoid_swap(self.model, live, kk, sseed, max_sweeps=3)
        else:
            sol = solvers.Solution(centers=list(live.points)[:kk], cost=0.0)
        self._C = sol.centers
        self._Cmat = metric.block(self._C).X if self.model.base == "euclidean" else None
        self._solved_at = len(live)

    def _remap(self) -> None:
        """Rebuild live-center -> C mapping and cluster weights."""
        live = self.bic.live_centers()
        idx, _ = metric.nearest(self.model, live.block, metric.block(self._C))
        self._c_of = {int(cid): int(j) for cid, j in zip(self.bic.live_center_ids(), idx)}
        self._W = np.bincount(idx, weights=live.weights, minlength=len(self._C)).astype(np.float64)
        self._version = self.bic.version

    def _refresh(self) -> tuple[bool, bool]:
        """Sync with the bicriterion; returns (re-solved C, rebuilt map/W)."""
        if self.bic.version == self._version and self._C:
            return False, False
        live_n = len(self.bic.live_center_ids())
        solved = False
        if (not self._C or self.strict or live_n > 1.5 * self._solved_at
                or live_n < 0.5 * self._solved_at):
            self._solve_C()
            solved = True
        self._remap()
        return solved, True

    def _crow(self, x: Point) -> np.ndarray:
        """Wrapped distances from x to every member of C."""
        if self.model.base == "table":
            ids = np.asarray([c.id for c in self._C])
            return np.asarray(self.model.wrap(self.model.table[x.id, ids]), dtype=np.float64)
        width = self._Cmat.shape[1]
        if x.max_index() + 1 > width:
            self._Cmat = np.pad(self._Cmat, ((0, 0), (0, x.max_index() + 1 - width)))
            width = self._Cmat.shape[1]
        row = x.to_dense(width)
        diff = self._Cmat - row
        return np.asarray(self.model.wrap(np.sqrt(np.einsum("ij,ij->i", diff, diff))),
                          dtype=np.float64)

    # -- the per-point step -------------------------------------------------

    def ingest(self, x: Point, w: float, bid: int) -> bool:
        """Score and threshold one fresh stream point; True if retained."""
        solved, remapped = self._refresh()
        c = self._c_of.get(bid)
        if c is None:                     # assignment raced ahead of the map
            self._remap()
            remapped = True
            c = self._c_of[self.bic.resolve(bid)]
        if not remapped:
            # between version bumps the move target is exactly bid's cluster,
            # so the per-cluster weight stays exact under this one increment
            self._W[c] += w
        crow = self._crow(x)
        dmin = float(crow.min())
        # running estimate of the prefix cost against C: arrival term plus the
        # inverse-probability-weighted connection costs of the retained set
        L = dmin + self._king / (1.0 + self.eps)
        if self.exact_cost_hook is not None:
            L = float(self.exact_cost_hook())
        if solved or self.strict or (self._L_sweep > 0 and L > 1.25 * self._L_sweep):
            self._sweep(L)
        z = self._score(w, float(crow[c]), float(self._W[c]), L)
        if self.shadow is not None:
            self.shadow[x.id] = min(self.shadow.get(x.id, math.inf), z)
        u = float(self._gen.random())
        if u <= self.x_scale * z:
            self._pts.append(x)
            self._w.append(w)
            self._uthr.append(u)
            self._sprime.append(z)
            self._bid.append(bid)
            self._dnear.append(dmin)
            self._king += w * dmin / min(self.x_scale * z, 1.0)
            # 1.05x keeps the transient overshoot inside the storage budget
            # for the extreme seeds, not just on average
            if len(self._pts) >= max(int(1.05 * self._n_sweep), 64):
                self._sweep(L)
            return True
        return False

    def _score(self, w: float, d_rep: float, W_cluster: float, L: float) -> float:
        first = 0.0
        num = self.rho * self.alpha_bar * w * d_rep
        if num > 0.0:
            first = num / L if L > 0.0 else math.inf
        return first + self.rho * self.rho * (self.alpha_bar + 1.0) * w / W_cluster

    def _sweep(self, L: float) -> None:
        """Rescore every retained point at estimate L; drop broken thresholds."""
        self._L_sweep = L
        n = len(self._pts)
        if n == 0:
            self._king = 0.0
            self._n_sweep = 0
            return
        R = metric.block(self._pts)
        M = metric.cross(self.model, R, metric.block(self._C))
        reps = np.asarray([self._c_of[self.bic.resolve(b)] for b in self._bid])
        w = np.asarray(self._w)
        d_rep = M[np.arange(n), reps]
        with np.errstate(divide="ignore", invalid="ignore"):
            first = np.where(d_rep > 0.0,
                             self.rho * self.alpha_bar * w * d_rep / L if L > 0.0 else np.inf,
                             0.0)
        z = first + self.rho * self.rho * (self.alpha_bar + 1.0) * w / self._W[reps]
        s = np.minimum(np.asarray(self._sprime), z)
        if self.shadow is not None:
            for pt, val in zip(self._pts, s):
                self.shadow[pt.id] = float(val)
        keep = np.asarray(self._uthr) <= self.x_scale * s
        dnear = M.min(axis=1)
        cols = (self._pts, self._w, self._uthr, list(s), self._bid, list(dnear))
        kept = [[v for v, k_ in zip(col, keep) if k_] for col in cols]
        self._pts, self._w, self._uthr, self._sprime, self._bid, self._dnear = kept
        wk = np.asarray(self._w)
        sk = np.asarray(self._sprime)
        dk = np.asarray(self._dnear)
        pi = np.minimum(self.x_scale * sk, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(pi > 0, wk * dk / pi, 0.0)
        self._king = float(terms.sum())
        self._n_sweep = len(self._pts)

    # -- output -------------------------------------------------------------

    def emit(self, rescale_to: float | None = None) -> WeightedSet:
        """Weighted suffix sample.

        Each survivor weighs w(r) / min(x_scale * s'(r), 1): the inverse of
        its retention probability, so cost estimates are unbiased.  Where no
        score caps at 1 this is proportional to w/s', i.e. the normalized
        1/(|R| s') weighting, and the final rescale (total weight pinned to
        the ingested stream weight) makes the two coincide exactly.
        """
        if self._C:
            self._refresh()
            self._sweep(self._king / (1.0 + self.eps))
        if not self._pts:
            return WeightedSet([], np.zeros(0))
        w = np.asarray(self._w)
        s = np.asarray(self._sprime)
        v = w / np.minimum(self.x_scale * s, 1.0)
        target = self.bic.total_weight if rescale_to is None else rescale_to
        total = v.sum()
        if target is not None and total > 0:
            v = v * (target / total)
        return WeightedSet(list(self._pts), v)

    @property
    def retained(self) -> int:
        return len(self._pts)

    def total_sensitivity(self) -> float:
        """Sum of maintained scores over every point seen (shadow mode only)."""
        if self.shadow is None:
            raise RuntimeError("construct with track_all=True")
        return float(sum(self.shadow.values()))


class WindowSampler:
    """Per-phase-suffix sampler under the offline draw probabilities.

    Scores are the two-part pr(p) of the offline builder, computed from the
    online assignment map restricted to points after this window's anchor
    boundary.  Retention couples one uniform per point against m * pr, so
    the end-of-stream marginal is exactly min(m * pr_final(p), 1).
    """

    def __init__(self, anchor: int, m: int, seed: int):
        if m < 1:
            raise ValueError("window sample scale must be at least 1")
        self.anchor = anchor
        self.m = m
        self._gen = rngmod.generator(seed)
        self.T = 0.0                     # sum of w(x) D(x, B(x)) over the suffix
        self.clw: dict[int, float] = {}  # per-assigned-center suffix weight
        self.ingested_weight = 0.0
        self._pts: list[Point] = []
        self._w: list[float] = []
        self._uthr: list[float] = []
        self._d: list[float] = []
        self._bid: list[int] = []

    def _pr(self, w: float, d: float, bid: int) -> float:
        count = w / (len(self.clw) * self.clw[bid])
        if self.T > 0.0:
            return w * d / (2.0 * self.T) + 0.5 * count
        return count

    def ingest(self, x: Point, w: float, bid: int, d: float) -> bool:
        self.T += w * d
        self.clw[bid] = self.clw.get(bid, 0.0) + w
        self.ingested_weight += w
        pr = self._pr(w, d, bid)
        u = float(self._gen.random())
        if u <= min(self.m * pr, 1.0):
            self._pts.append(x)
            self._w.append(w)
            self._uthr.append(u)
            self._d.append(d)
            self._bid.append(bid)
            return True
        return False

    def sweep(self) -> None:
        """Apply the current (hence smallest-so-far) pr to every survivor."""
        keep_cols = ([], [], [], [], [])
        for pt, w, u, d, b in zip(self._pts, self._w, self._uthr, self._d, self._bid):
            if u <= self.m * self._pr(w, d, b):
                for col, v in zip(keep_cols, (pt, w, u, d, b)):
                    col.append(v)
        self._pts, self._w, self._uthr, self._d, self._bid = keep_cols

    def emit(self) -> "WindowEmit":
        self.sweep()
        pr = np.asarray([self._pr(w, d, b) for w, d, b in zip(self._w, self._d, self._bid)])
        w = np.asarray(self._w)
        # inverse retention probability; assemble() rescales the total
        v = w / np.minimum(self.m * pr, 1.0) if len(w) else np.zeros(0)
        return WindowEmit(anchor=self.anchor, points=list(self._pts), w=w,
                          v_raw=v, m=self.m, suffix_weight=self.ingested_weight)

    @property
    def retained(self) -> int:
        return len(self._pts)


@dataclass
class WindowEmit:
    anchor: int
    points: list[Point]
    w: np.ndarray
    v_raw: np.ndarray
    m: int
    suffix_weight: float


def assemble(snapshot: Snapshot | None, sample: WindowEmit,
             total_weight: float) -> WeightedSet:
    """Union a lagged snapshot with its suffix sample.

    The sample is rescaled so the union's weight equals the full stream
    weight; anchor bookkeeping must line up or the call refuses.
    """
    anchor_phase = 0 if snapshot is None else snapshot.phase
    if sample.anchor != anchor_phase:
        raise ValueError(f"window anchored at phase {sample.anchor} cannot pair "
                         f"with snapshot of phase {anchor_phase}")
    snap_w = 0.0 if snapshot is None else snapshot.prefix_weight
    deficit = total_weight - snap_w
    pts: list[Point] = [] if snapshot is None else list(snapshot.points)
    ws = [] if snapshot is None else list(snapshot.u)
    if len(sample.points) and deficit > 0:
        scale = deficit / float(sample.v_raw.sum()) if sample.v_raw.sum() > 0 else 0.0
        pts.extend(sample.points)
        ws.extend(list(sample.v_raw * scale))
    return WeightedSet(pts, np.asarray(ws, dtype=np.float64))


@dataclass
class StreamResult:
    coreset: WeightedSet
    schedule: str
    phase: int
    anchor: int
    emd_budget: float
    retained: int
    peak_points: int
    t_prime: float
    x_scale: float
    degenerate: bool = False
    meta: dict = field(default_factory=dict)


class StreamCoreset:
    """Lock-step driver: buffer, prime, bicriterion update, sampler ingest.

    Points may be pushed as Point objects or bare coordinate arrays; ids are
    assigned sequentially in arrival order when absent.
    """

    def __init__(self, model: CostModel, k: int, n_bound: int, eps: float,
                 delta: float, seed: int, *, schedule: str = "sensitivity",
                 alpha_bar: float = 5.0, c_const: float = 0.02,
                 m: int | None = None, phi: float | None = None,
                 gamma: float | None = None, strict_refresh: bool = False,
                 track_all: bool = False, log_moves: bool = False):
        if schedule not in ("sensitivity", "algorithm1"):
            raise ValueError("schedule must be 'sensitivity' or 'algorithm1'")
        self.model = model
        self.k = k
        self.eps = eps
        self.schedule = schedule
        seeds = rngmod.split(seed, 3)
        rho = model.rho
        phi_eff = float(phi) if phi is not None else 4.0 * rho
        gamma_eff = float(gamma) if gamma is not None else max(8.0, 4.0 * rho)
        self.lag = lambda_phases(rho, phi_eff, gamma_eff, eps)
        self.bic = StreamBicriterion(model, k, n_bound, seeds[0], phi=phi,
                                     gamma=gamma, ring=self.lag + 1,
                                     log_moves=log_moves)
        self.sampler: SensitivitySampler | None = None
        self.windows: list[WindowSampler] = []
        self._window_seeds = rngmod.generator(seeds[2])
        self.m = m
        if schedule == "sensitivity":
            self.sampler = SensitivitySampler(model, k, n_bound, eps, delta,
                                              seeds[1], alpha_bar, c_const,
                                              self.bic, strict_refresh=strict_refresh,
                                              track_all=track_all)
            self.t_prime = self.sampler.t_prime
            self.x_scale = self.sampler.x_scale
        else:
            if m is None:
                raise ValueError("schedule='algorithm1' needs a sample scale m")
            self.t_prime = t_prime_for(model, k, alpha_bar)
            self.x_scale = float(m)
            self.windows.append(WindowSampler(0, m, self._next_window_seed()))
        self._buffer: list[tuple[Point, float]] = []
        self._primed = False
        self._next_id = 0
        self.count = 0
        self.peak_points = 0

    def _next_window_seed(self) -> int:
        return int(self._window_seeds.integers(2**62))

    def _as_point(self, x) -> Point:
        if isinstance(x, Point):
            if x.id is None:
                raise ValueError("stream points need ids")
            self._next_id = max(self._next_id, x.id + 1)
            return x
        p = dense(self._next_id, np.asarray(x, dtype=np.float64))
        self._next_id += 1
        return p

    def push(self, x, w: float = 1.0) -> None:
        p = self._as_point(x)
        self.count += 1
        if not self._primed:
            self._buffer.append((p, float(w)))
            need = StreamBicriterion.distinct_needed(self.k)
            reps: list[Point] = []
            for q, _ in self._buffer:
                if all(metric.distance(self.model, q, r) > 0.0 for r in reps):
                    reps.append(q)
                if len(reps) == need:
                    break
            if len(reps) < need:
                self._track()
                return
            self.bic.prime([q for q, _ in self._buffer])
            self._primed = True
            for q, qw in self._buffer:
                self._feed(q, qw)
            self._buffer.clear()
            self._track()
            return
        self._feed(p, float(w))
        self._track()

    def _feed(self, p: Point, w: float) -> None:
        bid, d, snaps = self.bic.update(p, w)
        if self.sampler is not None:
            self.sampler.ingest(p, w, bid)
        else:
            for win in self.windows:
                win.ingest(p, w, bid, d)
            for snap in snaps:
                self.windows.append(WindowSampler(snap.phase, self.m,
                                                  self._next_window_seed()))
            while len(self.windows) > self.lag + 1:
                self.windows.pop(0)

    def _track(self) -> None:
        stored = self.bic.stored_points + len(self._buffer)
        if self.sampler is not None:
            stored += self.sampler.retained
        else:
            stored += sum(w.retained for w in self.windows)
        self.peak_points = max(self.peak_points, stored)

    def predicted_peak(self) -> float:
        """x_scale * t' sampling budget plus the bicriterion's own storage."""
        cap = self.bic.center_cap + 1.0
        return self.x_scale * self.t_prime + cap * (self.lag + 3.0)

    def result(self) -> StreamResult:
        if not self._primed:
            pts = [p for p, _ in self._buffer]
            ws = np.asarray([w for _, w in self._buffer], dtype=np.float64)
            core = WeightedSet(pts, ws) if len(pts) else WeightedSet([], np.zeros(0))
            return StreamResult(coreset=core, schedule=self.schedule, phase=0,
                                anchor=0, emd_budget=0.0, retained=len(pts),
                                peak_points=self.peak_points, t_prime=self.t_prime,
                                x_scale=self.x_scale, degenerate=True)
        if self.sampler is not None:
            core = self.sampler.emit(rescale_to=self.bic.total_weight)
            return StreamResult(coreset=core, schedule=self.schedule,
                                phase=self.bic.phase, anchor=0, emd_budget=0.0,
                                retained=self.sampler.retained,
                                peak_points=self.peak_points,
                                t_prime=self.t_prime, x_scale=self.x_scale)
        anchor = max(self.bic.phase - self.lag, 0)
        snap = self.bic.snapshot_for(anchor) if anchor >= 1 else None
        if anchor >= 1 and snap is None:
            raise RuntimeError(f"snapshot for phase {anchor} fell out of the ring")
        win = next((w for w in self.windows if w.anchor == anchor), None)
        if win is None:
            raise RuntimeError(f"no sampler window anchored at phase {anchor}")
        core = assemble(snap, win.emit(), self.bic.total_weight)
        return StreamResult(coreset=core, schedule=self.schedule,
                            phase=self.bic.phase, anchor=anchor,
                            emd_budget=self.bic.emd_budget(anchor),
                            retained=win.retained, peak_points=self.peak_points,
                            t_prime=self.t_prime, x_scale=self.x_scale)

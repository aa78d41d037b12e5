"""Threshold samplers over the online bicriterion, and coreset assembly."""

import math

import numpy as np
import pytest

from corekit import metric, rng
from corekit.points import dense
from corekit.stream_bicriterion import Snapshot, StreamBicriterion
from corekit.stream_sampler import (
    SensitivitySampler,
    StreamCoreset,
    WindowSampler,
    assemble,
    t_prime_for,
    x_scale_for,
)
from corekit.weighted import WeightedSet, bar_cost
from corekit.harness import gen_mixture

KM = metric.kmeans()


class TestBudgetFormulas:
    def test_t_prime_formula(self):
        rho = KM.rho
        for k, ab in [(1, 1.0), (3, 5.0), (10, 2.0)]:
            want = rho * ab + rho * rho * (ab + 1.0) * k
            assert t_prime_for(KM, k, ab) == pytest.approx(want)

    def test_t_prime_within_classic_bound(self):
        rho = KM.rho
        for k in (1, 2, 5, 20):
            for ab in (1.0, 2.0, 5.0, 12.0):
                assert t_prime_for(KM, k, ab) <= 3 * rho * rho * ab * k

    def test_x_scale_positive_and_monotone(self):
        tp = t_prime_for(KM, 3, 5.0)
        a = x_scale_for(0.2, 0.1, 1000, tp, 0.02)
        b = x_scale_for(0.1, 0.1, 1000, tp, 0.02)
        assert 0 < a < b


def _driven_sampler(rows, k=2, seed=7, eps=0.25, c_const=0.05, track_all=False):
    n = len(rows)
    bic = StreamBicriterion(KM, k, max(n, 2), seed=seed)
    sam = SensitivitySampler(KM, k, max(n, 2), eps, 0.1, seed + 1,
                             alpha_bar=5.0, c_const=c_const, bic=bic,
                             track_all=track_all)
    pts = [dense(i, r) for i, r in enumerate(rows)]
    bic.prime(pts)
    for p in pts:
        bid, _, _ = bic.update(p)
        sam.ingest(p, 1.0, bid)
    return bic, sam


class TestSensitivitySampler:
    def test_weight_conserved_after_emit(self):
        rows = gen_mixture(400, 3, 2, 8.0, seed=3)
        bic, sam = _driven_sampler(rows)
        S = sam.emit(rescale_to=bic.total_weight)
        assert S.total_weight == pytest.approx(400.0, rel=1e-9)

    def test_threshold_invariant_after_emit(self):
        rows = gen_mixture(300, 3, 2, 8.0, seed=5)
        _, sam = _driven_sampler(rows)
        sam.emit()
        u = np.asarray(sam._uthr)
        s = np.asarray(sam._sprime)
        assert (u <= sam.x_scale * s + 1e-12).all()

    def test_deletions_are_permanent(self):
        rows = gen_mixture(250, 3, 2, 8.0, seed=11)
        n = len(rows)
        bic = StreamBicriterion(KM, 2, n, seed=2)
        sam = SensitivitySampler(KM, 2, n, 0.25, 0.1, 3, alpha_bar=5.0,
                                 c_const=0.05, bic=bic, track_all=True)
        pts = [dense(i, r) for i, r in enumerate(rows)]
        bic.prime(pts)
        gone: set[int] = set()
        prev: set[int] = set()
        for p in pts:
            bid, _, _ = bic.update(p)
            sam.ingest(p, 1.0, bid)
            cur = {q.id for q in sam._pts}
            dropped = prev - cur
            gone |= dropped
            assert not (cur & gone), "a deleted point reappeared"
            prev = cur

    def test_shadow_scores_never_increase(self):
        rows = gen_mixture(250, 3, 2, 8.0, seed=13)
        n = len(rows)
        bic = StreamBicriterion(KM, 2, n, seed=4)
        sam = SensitivitySampler(KM, 2, n, 0.25, 0.1, 5, alpha_bar=5.0,
                                 c_const=0.05, bic=bic, track_all=True)
        pts = [dense(i, r) for i, r in enumerate(rows)]
        bic.prime(pts)
        floor: dict[int, float] = {}
        for p in pts:
            bid, _, _ = bic.update(p)
            sam.ingest(p, 1.0, bid)
            for pid, sc in sam.shadow.items():
                if pid in floor:
                    assert sc <= floor[pid] + 1e-12
                floor[pid] = sc

    def test_symmetric_clusters_get_equal_weights(self):
        # two tight locations fed alternately: within a location every point
        # ends with the same bound, so emitted weights match
        rows = [[0.0], [1.0]] * 100
        bic, sam = _driven_sampler(np.asarray(rows), k=2, seed=9, c_const=0.2)
        S = sam.emit(rescale_to=bic.total_weight)
        by_loc: dict[float, set[float]] = {}
        for p, w in zip(S.points, S.weights):
            by_loc.setdefault(float(p.vec[0]), set()).add(round(float(w), 9))
        for loc, ws in by_loc.items():
            assert len(ws) == 1, f"unequal weights at {loc}: {ws}"

    def test_shadow_covers_every_stream_point(self):
        rows = gen_mixture(300, 3, 2, 8.0, seed=17)
        _, sam = _driven_sampler(np.asarray(rows), k=2, seed=21, track_all=True)
        assert set(sam.shadow) == set(range(300))
        assert all(sc >= 0.0 for sc in sam.shadow.values())
        assert sam.total_sensitivity() == pytest.approx(
            sum(sam.shadow.values()))


class TestWindowSampler:
    def test_pr_two_part_formula(self):
        win = WindowSampler(anchor=0, m=8, seed=0)
        win.ingest(dense(0, [0.0]), 1.0, 100, 2.0)
        win.ingest(dense(1, [1.0]), 1.0, 100, 1.0)
        win.ingest(dense(2, [2.0]), 1.0, 200, 1.0)
        # T=4, clusters: 100 has weight 2, 200 has weight 1
        want0 = 1.0 * 2.0 / (2 * 4.0) + 0.5 * 1.0 / (2 * 2.0)
        want2 = 1.0 * 1.0 / (2 * 4.0) + 0.5 * 1.0 / (2 * 1.0)
        assert win._pr(1.0, 2.0, 100) == pytest.approx(want0)
        assert win._pr(1.0, 1.0, 200) == pytest.approx(want2)

    def test_pr_zero_cost_doubles_count_term(self):
        win = WindowSampler(anchor=0, m=8, seed=0)
        win.ingest(dense(0, [0.0]), 1.0, 100, 0.0)
        win.ingest(dense(1, [0.0]), 1.0, 100, 0.0)
        assert win._pr(1.0, 0.0, 100) == pytest.approx(1.0 / (1 * 2.0))

    def test_retention_marginal_matches_probability(self):
        # replay the same 12-point suffix under many seeds; empirical
        # retention must track min(m*pr_final, 1)
        g = np.random.default_rng(23)
        stream = [(dense(i, [g.normal()]), 1.0, int(g.integers(2)),
                   float(g.uniform(0.1, 2.0))) for i in range(12)]
        runs = 4000
        kept = np.zeros(12)
        for s in range(runs):
            win = WindowSampler(anchor=0, m=3, seed=s)
            for j, (p, w, b, d) in enumerate(stream):
                win.ingest(p, w, b, d)
            win.sweep()
            alive = {q.id for q in win._pts}
            for j in range(12):
                if j in alive:
                    kept[j] += 1
        win = WindowSampler(anchor=0, m=3, seed=0)
        for p, w, b, d in stream:
            win.ingest(p, w, b, d)
        marg = np.array([min(3 * win._pr(w, d, b), 1.0)
                         for (_, w, b, d) in stream])
        emp = kept / runs
        se = np.sqrt(np.maximum(marg * (1 - marg), 1e-9) / runs)
        assert (np.abs(emp - marg) <= 3 * se + 1e-12).all()

    def test_sweep_idempotent(self):
        g = np.random.default_rng(29)
        win = WindowSampler(anchor=0, m=4, seed=1)
        for i in range(40):
            win.ingest(dense(i, [g.normal()]), 1.0, int(g.integers(3)),
                       float(g.uniform(0.1, 1.0)))
        win.sweep()
        first = [p.id for p in win._pts]
        win.sweep()
        assert [p.id for p in win._pts] == first

    def test_emit_weights_inverse_capped_probability(self):
        g = np.random.default_rng(31)
        win = WindowSampler(anchor=0, m=5, seed=2)
        for i in range(30):
            win.ingest(dense(i, [g.normal()]), 1.0, int(g.integers(2)),
                       float(g.uniform(0.1, 1.0)))
        out = win.emit()
        pr = np.array([win._pr(w, d, b) for w, d, b in
                       zip(win._w, win._d, win._bid)])
        assert np.allclose(out.v_raw, out.w / np.minimum(win.m * pr, 1.0))


class TestAssemble:
    def _snap(self, phase=2, w=10.0):
        pts = [dense(1000, [0.0]), dense(1001, [1.0])]
        return Snapshot(phase=phase, points=pts, u=np.array([6.0, 4.0]),
                        budget=0.5, prefix_weight=w)

    def _sample(self, anchor, n=3, suffix_weight=5.0):
        win = WindowSampler(anchor=anchor, m=50, seed=3)
        for i in range(n):
            win.ingest(dense(i, [float(i)]), suffix_weight / n, 7, 0.5)
        return win.emit()

    def test_empty_suffix_returns_snapshot(self):
        snap = self._snap()
        empty = WindowSampler(anchor=2, m=4, seed=0).emit()
        S = assemble(snap, empty, total_weight=10.0)
        assert [p.id for p in S.points] == [1000, 1001]
        assert S.total_weight == pytest.approx(10.0)

    def test_empty_snapshot_returns_sample(self):
        out = self._sample(anchor=0)
        S = assemble(None, out, total_weight=5.0)
        assert len(S) == len(out.points)
        assert S.total_weight == pytest.approx(5.0, rel=1e-9)

    def test_phase_mismatch_rejected(self):
        with pytest.raises(ValueError):
            assemble(self._snap(phase=2), self._sample(anchor=1), 15.0)
        with pytest.raises(ValueError):
            assemble(None, self._sample(anchor=3), 5.0)

    def test_union_weight_exact(self):
        S = assemble(self._snap(phase=2, w=10.0), self._sample(anchor=2), 17.5)
        assert S.total_weight == pytest.approx(17.5, rel=1e-9)


class TestStreamCoreset:
    def test_degenerate_short_stream_verbatim(self):
        sc = StreamCoreset(KM, 3, 16, 0.25, 0.1, seed=1)
        sc.push([4.0, 4.0], 2.0)
        res = sc.result()
        assert res.degenerate
        assert len(res.coreset) == 1
        assert res.coreset.total_weight == 2.0

    def test_sensitivity_schedule_end_to_end(self):
        # small c so the budget sits below n and the sampler must thin
        rows = gen_mixture(600, 3, 2, 9.0, seed=6)
        sc = StreamCoreset(KM, 3, 600, 0.25, 0.1, seed=6, c_const=0.004)
        for r in rows:
            sc.push(r)
        res = sc.result()
        assert not res.degenerate
        assert res.coreset.total_weight == pytest.approx(600.0, rel=1e-9)
        assert res.retained < 600
        assert res.peak_points <= sc.predicted_peak()

    def test_algorithm1_schedule_end_to_end(self):
        rows = gen_mixture(600, 3, 2, 9.0, seed=8)
        sc = StreamCoreset(KM, 3, 600, 0.25, 0.1, seed=8,
                           schedule="algorithm1", m=120)
        for r in rows:
            sc.push(r)
        res = sc.result()
        assert res.coreset.total_weight == pytest.approx(600.0, rel=1e-9)
        assert res.anchor == max(res.phase - sc.lag, 0)

    def test_algorithm1_requires_m(self):
        with pytest.raises(ValueError):
            StreamCoreset(KM, 3, 100, 0.25, 0.1, seed=0, schedule="algorithm1")

    def test_unknown_schedule_rejected(self):
        with pytest.raises(ValueError):
            StreamCoreset(KM, 3, 100, 0.25, 0.1, seed=0, schedule="other")

    def test_same_seed_reproduces(self):
        rows = gen_mixture(300, 3, 2, 8.0, seed=10)

        def run():
            sc = StreamCoreset(KM, 3, 300, 0.25, 0.1, seed=42)
            for r in rows:
                sc.push(r)
            res = sc.result()
            return [p.id for p in res.coreset.points], res.coreset.weights

        ids_a, w_a = run()
        ids_b, w_b = run()
        assert ids_a == ids_b
        assert np.array_equal(w_a, w_b)

    def test_quality_on_benign_stream(self):
        rows = gen_mixture(1500, 4, 2, 10.0, seed=12)
        sc = StreamCoreset(KM, 3, 1500, 0.2, 0.1, seed=12)
        for r in rows:
            sc.push(r)
        S = sc.result().coreset
        P = WeightedSet([dense(i, r) for i, r in enumerate(rows)],
                        np.ones(len(rows)))
        g = np.random.default_rng(0)
        worst = 0.0
        for _ in range(15):
            C = [dense(10_000 + j, g.uniform(-12, 12, 2)) for j in range(3)]
            t, e = bar_cost(KM, P, C), bar_cost(KM, S, C)
            worst = max(worst, abs(e - t) / t)
        assert worst <= 0.2

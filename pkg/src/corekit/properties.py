"""Registered randomized properties with a shared runner.

Each case owns a generator over (seed, n) and a checker that returns None
on success or a human-readable violation.  check_all runs every case over
a seed range, and on failure re-runs the case with halved n until it
passes, reporting the smallest instance that still fails.  The whole suite
is deterministic in the seed range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import metric, rng as rngmod, solvers
from .bicriterion import dsquared_seed
from .metric import CostModel, psi
from .offline import build_coreset, sampling_distribution, sensitivity_from_assignment
from .points import dense
from .weighted import WeightedSet, bar_cost, brute_sensitivity, default_candidates, nu_distance

__all__ = ["PropertyCase", "REGISTRY", "check_all", "register"]


@dataclass
class PropertyCase:
    name: str
    check: Callable[[int, int], str | None]   # (seed, n) -> violation or None
    n: int = 32
    repetitions: int = 20
    tolerance: float = 0.0
    notes: str = ""


REGISTRY: list[PropertyCase] = []


def register(case: PropertyCase) -> PropertyCase:
    REGISTRY.append(case)
    return case


def _models(seed: int) -> list[CostModel]:
    return [metric.kmedian(), metric.kmeans(), metric.lp(3.0),
            metric.huber(1.0 + (seed % 3)), metric.cauchy(1.5), metric.tukey(2.0)]


def _cloud(seed: int, n: int, dim: int = 2) -> np.ndarray:
    gen = rngmod.generator(seed)
    scale = 10.0 ** gen.integers(-1, 3)
    return gen.standard_normal((n, dim)) * scale


def _rho_triangle(seed: int, n: int) -> str | None:
    X = _cloud(seed, max(n, 3))
    gen = rngmod.generator(seed + 1)
    pts = [dense(i, row) for i, row in enumerate(X)]
    for model in _models(seed):
        rho = model.rho
        for _ in range(40):
            i, j, l = gen.integers(0, len(pts), 3)
            dxz = metric.distance(model, pts[i], pts[l])
            dxy = metric.distance(model, pts[i], pts[j])
            dyz = metric.distance(model, pts[j], pts[l])
            if dxz > rho * (dxy + dyz) * (1 + 1e-9) + 1e-12:
                return (f"{model.name}: D(x,z)={dxz} > rho*(D(x,y)+D(y,z))"
                        f"={rho * (dxy + dyz)} at triple ({i},{j},{l})")
    return None


def _psi_inequality(seed: int, n: int) -> str | None:
    X = _cloud(seed, max(n, 3))
    gen = rngmod.generator(seed + 2)
    pts = [dense(i, row) for i, row in enumerate(X)]
    eps = float(gen.uniform(0.05, 0.9))
    for model in _models(seed):
        ps = psi(model, eps)
        for _ in range(40):
            i, j, l = gen.integers(0, len(pts), 3)
            dxz = metric.distance(model, pts[i], pts[l])
            dyz = metric.distance(model, pts[j], pts[l])
            dxy = metric.distance(model, pts[i], pts[j])
            lhs = abs(dxz - dyz)
            rhs = ps * dxy + eps * dyz
            if lhs > rhs * (1 + 1e-9) + 1e-12:
                return (f"{model.name}: |D(x,z)-D(y,z)|={lhs} > psi*D(x,y)+eps*D(y,z)"
                        f"={rhs} (eps={eps})")
    return None


def _sensitivity_domination(seed: int, n: int) -> str | None:
    gen = rngmod.generator(seed + 3)
    n = min(max(n, 4), 64)
    dim = int(gen.integers(1, 3))
    k = int(gen.integers(1, 3))
    X = gen.standard_normal((n, dim)) * float(gen.uniform(0.5, 20.0))
    w = gen.uniform(0.5, 2.0, n)
    P = WeightedSet([dense(i, row) for i, row in enumerate(X)], w)
    model = metric.kmeans() if seed % 2 == 0 else metric.kmedian()
    A = dsquared_seed(model, P, k, seed + 4)
    s_up = sensitivity_from_assignment(model, P, A, alpha_bar=5.0)
    s_true = brute_sensitivity(model, P, k, default_candidates(model, P, k, seed + 5))
    bad = s_up.s < s_true.s - 1e-9
    if bad.any():
        i = int(np.argmax(bad))
        return (f"point {i}: bound {s_up.s[i]} < true {s_true.s[i]} "
                f"(model {model.name}, n={n}, k={k})")
    return None


def _unbiased_cost(seed: int, n: int) -> str | None:
    gen = rngmod.generator(seed + 6)
    n = min(max(n, 6), 40)
    X = gen.standard_normal((n, 2)) * 3.0
    P = WeightedSet([dense(i, row) for i, row in enumerate(X)], gen.uniform(0.5, 2.0, n))
    model = metric.kmeans()
    A = dsquared_seed(model, P, 2, seed + 7)
    Z = [dense(700 + j, gen.standard_normal(2) * 3.0) for j in range(2)]
    true = bar_cost(model, P, Z)
    reps, m = 600, 8
    vals = np.empty(reps)
    for r in range(reps):
        S = build_coreset(P, A, m, seed * 1000 + r).S
        vals[r] = bar_cost(model, S, Z)
    se = vals.std(ddof=1) / math.sqrt(reps)
    if abs(vals.mean() - true) > 4.0 * max(se, 1e-12):
        return f"mean {vals.mean()} vs true {true}, se {se}"
    return None


def _pr_is_distribution(seed: int, n: int) -> str | None:
    gen = rngmod.generator(seed + 8)
    n = max(n, 4)
    X = gen.standard_normal((n, 2))
    P = WeightedSet([dense(i, row) for i, row in enumerate(X)], gen.uniform(0.5, 2.0, n))
    A = dsquared_seed(metric.kmeans(), P, 2, seed + 9)
    pr = sampling_distribution(P, A)
    if abs(pr.sum() - 1.0) > 1e-9:
        return f"pr sums to {pr.sum()}"
    if (pr <= 0).any():
        return "pr has a nonpositive entry"
    return None


def _nu_scaling(seed: int, n: int) -> str | None:
    gen = rngmod.generator(seed + 10)
    for _ in range(50):
        a, b = gen.uniform(0, 5.0, 2)
        nu, t = float(gen.uniform(0.01, 2.0)), float(gen.uniform(0.1, 10.0))
        if a + b + nu == 0:
            continue
        lhs = nu_distance(t * a, t * b, nu)
        rhs = nu_distance(a, b, nu / t)
        if abs(lhs - rhs) > 1e-9:
            return f"|{t}a-{t}b|_nu={lhs} != |a-b|_(nu/t)={rhs}"
    return None


def _opt_lower_bound_valid(seed: int, n: int) -> str | None:
    gen = rngmod.generator(seed + 11)
    n = min(max(n, 3), 10)
    X = gen.standard_normal((n, 2)) * 2.0
    P = WeightedSet([dense(i, row) for i, row in enumerate(X)], gen.uniform(0.5, 2.0, n))
    for model in (metric.kmeans(), metric.kmedian()):
        for k in (1, 2):
            lb = solvers.opt_lower_bound(model, P, k, seed)
            exact = solvers.exact_partition(model, P, k).cost
            if lb > exact * (1 + 1e-9) + 1e-12:
                return f"{model.name}, k={k}: lower bound {lb} > exact {exact}"
    return None


register(PropertyCase("rho_triangle", _rho_triangle, n=24, repetitions=30))
register(PropertyCase("psi_eps_inequality", _psi_inequality, n=24, repetitions=30))
register(PropertyCase("sensitivity_domination", _sensitivity_domination, n=48,
                      repetitions=25))
register(PropertyCase("offline_unbiasedness", _unbiased_cost, n=24, repetitions=3,
                      notes="Monte-Carlo, 4 SE gate"))
register(PropertyCase("sampling_distribution_normalized", _pr_is_distribution,
                      n=32, repetitions=25))
register(PropertyCase("nu_distance_scaling", _nu_scaling, n=8, repetitions=25))
register(PropertyCase("opt_lower_bound_validity", _opt_lower_bound_valid, n=8,
                      repetitions=15))


def _shrink(case: PropertyCase, seed: int, n: int) -> tuple[int, str]:
    smallest_n, last = n, ""
    while n >= 2:
        msg = case.check(seed, n)
        if msg is None:
            break
        smallest_n, last = n, msg
        n //= 2
    return smallest_n, last


def check_all(seed_range: range | None = None) -> dict:
    """Run every registered case; failures carry their minimal seed and size."""
    seeds = list(seed_range if seed_range is not None else range(100, 120))
    cases = []
    ok = True
    for case in REGISTRY:
        failures = []
        for rep, seed in enumerate(seeds[: case.repetitions]):
            msg = case.check(seed, case.n)
            if msg is not None:
                n_min, detail = _shrink(case, seed, case.n)
                failures.append({"seed": seed, "n_min": n_min, "detail": detail})
        cases.append({
            "name": case.name,
            "passed": not failures,
            "repetitions": min(case.repetitions, len(seeds)),
            "failures": failures,
        })
        ok = ok and not failures
    return {"schema": 1, "suite": "properties", "ok": ok, "cases": cases}

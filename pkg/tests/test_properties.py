"""Registered randomized-property suite: registry shape and runner behavior."""

import pytest

from corekit.properties import REGISTRY, PropertyCase, check_all, register

EXPECTED = {
    "rho_triangle",
    "psi_eps_inequality",
    "sensitivity_domination",
    "offline_unbiasedness",
    "sampling_distribution_normalized",
    "nu_distance_scaling",
    "opt_lower_bound_validity",
}


class TestRegistry:
    def test_all_cases_registered(self):
        names = [c.name for c in REGISTRY]
        assert set(names) >= EXPECTED
        assert len(names) == len(set(names))

    def test_cases_carry_runnable_checkers(self):
        for case in REGISTRY:
            assert case.repetitions >= 1
            assert case.n >= 2
            assert callable(case.check)


class TestRunner:
    def test_small_seed_range_passes(self):
        # a couple of seeds keeps this quick; the full sweep runs in the
        # acceptance tier
        out = check_all(range(100, 102))
        assert out["ok"] is True
        assert out["schema"] == 1
        assert out["suite"] == "properties"
        for case in out["cases"]:
            assert case["passed"] is True
            assert case["failures"] == []
            assert case["repetitions"] == 2

    def test_output_is_deterministic(self):
        a = check_all(range(105, 107))
        b = check_all(range(105, 107))
        assert a == b

    def test_failing_case_is_shrunk_and_reported(self):
        bad = PropertyCase("always_breaks",
                           lambda seed, n: f"boom at n={n}" if n > 4 else None,
                           n=64, repetitions=2)
        register(bad)
        try:
            out = check_all(range(100, 102))
            assert out["ok"] is False
            (case,) = [c for c in out["cases"] if c["name"] == "always_breaks"]
            assert case["passed"] is False
            # shrinker halves 64 -> 8, the smallest size still failing
            assert all(f["n_min"] == 8 for f in case["failures"])
            assert all("boom" in f["detail"] for f in case["failures"])
        finally:
            REGISTRY.remove(bad)

    def test_individual_checkers_pass_on_a_seed(self):
        for case in REGISTRY:
            assert case.check(111, case.n) is None, case.name

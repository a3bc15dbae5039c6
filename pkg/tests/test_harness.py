"""Monte Carlo bound checks at reduced trial counts, plus scan plumbing."""

import math

import pytest

from subsetprune import (
    BoundCheckResult,
    BoundDirection,
    ParameterError,
    SeedSpec,
    SolverParams,
    TrialPlan,
    check_chi_squared_tails,
    check_intersection_tail,
    check_joint_upper_bound,
    check_most_probable_interval,
    check_nsn_hit_lower_bound,
    check_second_moment_identity,
    sample_nsn,
    scan_mrss_phase,
    scan_prune_success,
    scan_rssp_phase,
    solve_mrss,
)
from subsetprune.harness import (
    binomial_std_error,
    chi_squared_tail_bound,
    intersection_tail_bound,
    joint_hit_upper_bound,
    nsn_hit_lower_bound,
    wilson_interval,
    write_csv,
)

SEED = SeedSpec(777)
SMALL = 20_000


class TestVerdictRule:
    def test_lower_bound_rule(self):
        ok = BoundCheckResult("x", 0.5, 0.01, 0.52, BoundDirection.LOWER, 100)
        assert ok.passed  # 0.5 >= 0.52 - 0.03
        bad = BoundCheckResult("x", 0.5, 0.001, 0.52, BoundDirection.LOWER, 100)
        assert not bad.passed

    def test_upper_bound_rule(self):
        ok = BoundCheckResult("x", 0.52, 0.01, 0.5, BoundDirection.UPPER, 100)
        assert ok.passed
        bad = BoundCheckResult("x", 0.55, 0.001, 0.5, BoundDirection.UPPER, 100)
        assert not bad.passed

    def test_line_mentions_verdict(self):
        result = BoundCheckResult("name", 0.1, 0.01, 0.2, BoundDirection.UPPER, 10)
        assert "[pass]" in result.line()


def test_binomial_std_error_positive_at_zero_hits():
    assert binomial_std_error(0, 1000) > 0.0
    assert binomial_std_error(1000, 1000) > 0.0


def test_wilson_interval_brackets_rate():
    low, high = wilson_interval(50, 100)
    assert low < 0.5 < high
    assert wilson_interval(0, 100)[0] == 0.0
    assert wilson_interval(100, 100)[1] == pytest.approx(1.0, abs=1e-12)


class TestChiSquared:
    @pytest.mark.parametrize("d,t", [(1, 4.0), (4, 1.0), (16, 0.5)])
    def test_tails_respect_bound(self, d, t):
        upper, lower = check_chi_squared_tails(d, t, SMALL, SEED.substream(1))
        assert upper.passed and lower.passed
        assert upper.bound == lower.bound == chi_squared_tail_bound(t)

    def test_large_t_tail_vanishes(self):
        upper, _ = check_chi_squared_tails(1, 30.0, SMALL, SEED.substream(2))
        assert upper.estimate == 0.0
        assert upper.passed

    def test_exact_tail_sanity_against_closed_form(self):
        # chi2_1 upper tail at threshold 1 + 4 + 8 = 13: 2 Phi(-sqrt(13))
        upper, _ = check_chi_squared_tails(1, 4.0, 200_000, SEED.substream(3))
        exact = math.erfc(math.sqrt(13.0 / 2.0))
        assert abs(upper.estimate - exact) <= 5.0 * binomial_std_error(
            int(exact * 200_000), 200_000
        )


class TestMostProbableInterval:
    def test_centre_equals_shift_zero(self):
        res = check_most_probable_interval(1.0, 0.0, 0.1, SMALL, SEED.substream(4))
        assert res.estimate == 0.0 and res.passed

    def test_shifted_interval_less_likely(self):
        res = check_most_probable_interval(1.0, 2.0, 0.1, SMALL, SEED.substream(5))
        assert res.passed
        assert res.estimate > 0.0

    def test_far_shift_frequency_vanishes(self):
        res = check_most_probable_interval(1.0, 50.0, 0.1, SMALL, SEED.substream(6))
        assert res.passed  # shifted frequency is zero, diff = centre frequency >= 0


class TestNsnHitBound:
    def test_bound_formula_dimension_one(self):
        # frozen: (1/16) * (0.4 / sqrt(pi * 1.625 * 64)) computed by hand
        expect = (2.0 * 0.2 / math.sqrt(math.pi * 1.625 * 64)) / 16.0
        assert nsn_hit_lower_bound(1, 64, 0.2) == pytest.approx(expect, rel=1e-12)

    def test_bound_scales_with_epsilon_power_d(self):
        for d in (1, 2, 3):
            ratio = nsn_hit_lower_bound(d, 64, 0.2) / nsn_hit_lower_bound(d, 64, 0.1)
            assert ratio == pytest.approx(2.0**d, rel=1e-12)

    @pytest.mark.parametrize("d", [1, 2])
    def test_empirical_respects_bound(self, d):
        res = check_nsn_hit_lower_bound(d, 64, 0.2, [0.0] * d, SMALL, SEED.substream(7))
        assert res.passed

    def test_hypotheses_enforced(self):
        with pytest.raises(ParameterError):
            check_nsn_hit_lower_bound(1, 8, 0.2, [0.0], 10, SEED)  # k < 16
        with pytest.raises(ParameterError):
            check_nsn_hit_lower_bound(1, 64, 0.3, [0.0], 10, SEED)  # eps >= 1/4
        with pytest.raises(ParameterError):
            check_nsn_hit_lower_bound(1, 64, 0.2, [9.0], 10, SEED)  # |z|_1 > sqrt(k)


class TestJointUpperBound:
    @pytest.mark.parametrize("j", [8, 64])
    def test_empirical_respects_bound(self, j):
        res = check_joint_upper_bound(1, 64, j, 0.1, [0.0], SMALL, SEED.substream(8))
        assert res.passed

    def test_tiny_epsilon_frequency_vanishes(self):
        res = check_joint_upper_bound(1, 64, 8, 1e-4, [0.0], 5_000, SEED.substream(9))
        assert res.estimate == 0.0

    def test_parameter_checks(self):
        with pytest.raises(ParameterError):
            check_joint_upper_bound(1, 64, 0, 0.1, [0.0], 10, SEED)
        with pytest.raises(ParameterError):
            check_joint_upper_bound(1, 32, 8, 0.1, [0.0], 10, SEED)  # k < 64


class TestSecondMoment:
    def test_k_equals_n_collapses(self):
        # single subset: T in {0,1} so E[T^2] = E[T]; need n >= 2k, so use n=2,k=1
        report = check_second_moment_identity(2, 1, 1, 0.5, [0.0], 2000, SEED.substream(10))
        assert report.passed

    def test_huge_epsilon_exact(self):
        report = check_second_moment_identity(6, 2, 1, 50.0, [0.0], 500, SEED.substream(11))
        assert report.mean_count == 15.0  # C(6,2), every subset hits
        assert report.first_diff == 0.0 and report.second_diff == 0.0
        assert report.passed

    def test_reference_configuration(self):
        report = check_second_moment_identity(6, 2, 1, 0.3, [0.0], SMALL, SEED.substream(12))
        assert report.passed

    def test_enumeration_budget_guard(self):
        with pytest.raises(ParameterError):
            check_second_moment_identity(12, 2, 1, 0.3, [0.0], 10, SEED)


class TestIntersectionTail:
    def test_bound_value(self):
        # frozen: exp(-2 * 4 * (11/12)^2) = exp(-6.7222...)
        assert intersection_tail_bound(36, 3) == pytest.approx(
            math.exp(-2.0 * 4.0 * (11.0 / 12.0) ** 2), rel=1e-12
        )

    def test_empirical_respects_bound(self):
        res = check_intersection_tail(1296, 36, 3, SMALL, SEED.substream(13))
        assert res.passed

    def test_parameter_rejections(self):
        with pytest.raises(ParameterError):
            check_intersection_tail(1296, 36, 1, 10, SEED)  # d < 2
        with pytest.raises(ParameterError):
            check_intersection_tail(1296, 2, 3, 10, SEED)  # k <= d
        with pytest.raises(ParameterError):
            check_intersection_tail(100, 36, 3, 10, SEED)  # n < k^2

    def test_tail_shrinks_with_n(self):
        sparse = check_intersection_tail(144, 6, 2, SMALL, SEED.substream(14))
        dense = check_intersection_tail(36, 6, 2, SMALL, SEED.substream(15))
        assert sparse.estimate <= dense.estimate


class TestTrialPlan:
    def test_validation(self):
        plan = TrialPlan(trials=10, seed=SEED, n_values=(1, 2))
        assert plan.trials == 10
        with pytest.raises(ParameterError):
            TrialPlan(trials=0, seed=SEED)
        with pytest.raises(ParameterError):
            TrialPlan(trials=1, seed=SEED, epsilon_values=(0.0,))


class TestScans:
    def test_rssp_scan_monotone_by_pairing(self):
        rows = scan_rssp_phase(0.2, [4, 8, 16], 11, 30, SEED.substream(16))
        rates = [row["rate"] for row in rows]
        assert rates == sorted(rates)  # prefix pairing makes this exact
        for row in rows:
            assert 0.0 <= row["wilson_low"] <= row["rate"] <= row["wilson_high"] <= 1.0
            assert row["epsilon"] == 0.2 and row["trials"] == 30

    def test_rssp_scan_loose_regime_saturates(self):
        # true rate at n=10, eps=0.5 is about 0.97: the extreme targets +-1
        # fail when the one-sided positive (negative) parts sum below 0.5,
        # roughly Phi(-1.96) per side
        rows = scan_rssp_phase(0.5, [10], 11, 200, SEED.substream(17))
        assert rows[0]["rate"] >= 0.9

    def test_rssp_single_variable_fails_fine_grid(self):
        rows = scan_rssp_phase(0.05, [1], 41, 20, SEED.substream(18))
        assert rows[0]["rate"] <= 0.05

    def test_mrss_scan_k1_with_vector_targets(self):
        # k=1 and the target equal to an ensemble vector always hits
        ensemble = sample_nsn(5, 2, SEED.substream(19))
        params = SolverParams(epsilon=1e-9, k=1)
        for i in range(5):
            sol = solve_mrss(ensemble, ensemble.vectors[i], params)
            assert sol is not None and sol.indices == (i,)

    def test_mrss_scan_monotone_in_n(self):
        rows = scan_mrss_phase(1, 2, [2, 4, 8], 0.1, 40, SEED.substream(20))
        rates = [row["rate"] for row in rows]
        assert rates == sorted(rates)  # enumeration over a prefix-paired family

    def test_prune_scan_schema(self):
        rows = scan_prune_success(1, 1, 1, [8, 16], 0.25, 3, SEED.substream(21))
        assert [row["n"] for row in rows] == [8, 16]
        for row in rows:
            assert 0.0 <= row["channel_rate"] <= 1.0
            assert row["channel_total"] == 2 * 3  # signs x trials

    def test_write_csv_is_deterministic(self, tmp_path):
        rows = scan_rssp_phase(0.2, [4, 8], 11, 10, SEED.substream(22))
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(a, rows)
        write_csv(b, scan_rssp_phase(0.2, [4, 8], 11, 10, SEED.substream(22)))
        assert a.read_bytes() == b.read_bytes()
        header = a.read_text().splitlines()[0]
        assert header.startswith("n,trials,successes,rate,wilson_low,wilson_high")


def test_reproducibility_of_checks():
    a = check_nsn_hit_lower_bound(1, 64, 0.2, [0.0], 5_000, SEED.substream(23))
    b = check_nsn_hit_lower_bound(1, 64, 0.2, [0.0], 5_000, SEED.substream(23))
    assert a.estimate == b.estimate and a.std_error == b.std_error


def test_joint_bound_formula_uses_dimension_constant():
    # for d <= 4 the constant is 1/16, so the denominator factor is 1/2
    expect = 3.0 * (4.0 * 0.01 / (math.pi * 0.5 * 8.0)) ** 1
    assert joint_hit_upper_bound(1, 8, 0.1) == pytest.approx(expect, rel=1e-12)

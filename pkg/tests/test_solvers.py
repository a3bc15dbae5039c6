"""Subset-sum solvers against exhaustive oracles."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subsetprune import (
    BudgetError,
    CapacityError,
    CardinalityMode,
    NsnEnsemble,
    ParameterError,
    SeedSpec,
    SolverParams,
    Strategy,
    cover_targets,
    inflated_sum_intervals,
    partition_boost,
    sample_nsn,
    sample_uniform,
    search_subsets,
    solve_mrss,
    solve_rssp_1d,
    subset_sum_number,
    verify_solution,
)


def enumerate_1d_hits(xs, target, epsilon):
    """Oracle: all subsets within epsilon, any cardinality."""
    hits = []
    n = len(xs)
    for mask in range(2**n):
        total = 0.0
        for i in range(n):
            if mask >> i & 1:
                total += xs[i]
        if abs(total - target) <= epsilon:
            hits.append(tuple(i for i in range(n) if mask >> i & 1))
    return hits


def enumerate_k_hits(vectors, target, k, epsilon):
    """Oracle: all k-subsets of row vectors within the epsilon box."""
    hits = []
    for combo in itertools.combinations(range(len(vectors)), k):
        total = np.zeros(len(target))
        for i in combo:
            total = total + vectors[i]
        if np.abs(total - np.asarray(target)).max() <= epsilon:
            hits.append(combo)
    return hits


class TestRssp1d:
    def test_exact_hit(self):
        xs = np.array([0.5, -0.25, 0.75])
        sol = solve_rssp_1d(xs, 0.25, 0.01)
        assert sol.indices == (0, 1)
        assert sol.residual_inf == 0.0
        assert verify_solution(sol, xs[:, None], [0.25])

    def test_infeasible_by_range(self):
        assert solve_rssp_1d(np.array([0.5, -0.25, 0.75]), 2.0, 0.01) is None

    def test_empty_subset_hits_small_targets(self):
        sol = solve_rssp_1d(np.array([5.0, 7.0]), 0.0, 0.5)
        assert sol.indices == ()

    @pytest.mark.parametrize("trial", range(3))
    def test_mitm_equals_enumeration_on_grid(self, trial):
        xs = sample_uniform(12, SeedSpec(300 + trial), -1.0, 1.0)
        eps = 0.03
        for z in np.linspace(-1.0, 1.0, 21):
            oracle = enumerate_1d_hits(xs.tolist(), float(z), eps)
            got = solve_rssp_1d(xs, float(z), eps)
            assert (got is not None) == bool(oracle)
            if got is not None:
                assert got.residual_inf <= eps
                assert verify_solution(got, xs[:, None], [float(z)])

    def test_exhaustive_strategy_matches_mitm(self):
        xs = sample_uniform(10, SeedSpec(55), -1.0, 1.0)
        for z in (-0.7, 0.0, 0.4):
            a = solve_rssp_1d(xs, z, 0.05, strategy=Strategy.EXHAUSTIVE)
            b = solve_rssp_1d(xs, z, 0.05, strategy=Strategy.MEET_IN_THE_MIDDLE)
            assert (a is None) == (b is None)
            if a is not None:
                assert a.residual_inf == b.residual_inf

    def test_tie_break_prefers_lexicographically_smallest(self):
        sol = solve_rssp_1d(np.array([0.25, 0.25]), 0.25, 0.01)
        assert sol.indices == (0,)

    def test_capacity_and_budget_errors(self):
        with pytest.raises(CapacityError):
            solve_rssp_1d(np.zeros(64), 0.0, 0.1)
        with pytest.raises(BudgetError):
            solve_rssp_1d(np.zeros(30), 0.0, 0.1, strategy=Strategy.EXHAUSTIVE)
        with pytest.raises(BudgetError):
            solve_rssp_1d(np.zeros(60), 0.0, 0.1, enumeration_budget=1000)


def ensemble_from_values(values):
    return NsnEnsemble.from_parts(np.asarray(values, dtype=float), np.ones((len(values), 1)))


class TestMrss:
    def test_1d_pair(self):
        ensemble = ensemble_from_values([0.3, 0.2, -0.1])
        params = SolverParams(epsilon=0.05, k=2)
        sol = solve_mrss(ensemble, [0.1], params)
        assert sol.indices == (1, 2)

    def test_singleton_vector_target(self):
        ensemble = NsnEnsemble.from_parts(np.array([1.0]), np.array([[0.3, 0.3]]))
        sol = solve_mrss(ensemble, [0.3, 0.3], SolverParams(epsilon=1e-6, k=1))
        assert sol.indices == (0,)

    def test_exact_k_larger_than_n_rejected(self):
        ensemble = ensemble_from_values([0.1, 0.2])
        with pytest.raises(ParameterError):
            solve_mrss(ensemble, [0.0], SolverParams(epsilon=0.1, k=5))

    @pytest.mark.parametrize("d", [1, 2])
    def test_greedy_subset_of_enum_and_ground_truth(self, d):
        k = 3
        for trial in range(8):
            ensemble = sample_nsn(10, d, SeedSpec(700 + trial, d))
            targets = [
                sample_uniform(d, SeedSpec(800 + trial, 10 * d + i), -1.0, 1.0)
                for i in range(25)
            ]
            targets = [z / max(1.0, np.abs(z).sum()) for z in targets]
            for i, z in enumerate(targets):
                enum = solve_mrss(
                    ensemble, z, SolverParams(epsilon=0.2, k=k, strategy=Strategy.EXHAUSTIVE)
                )
                greedy = solve_mrss(
                    ensemble,
                    z,
                    SolverParams(
                        epsilon=0.2,
                        k=k,
                        strategy=Strategy.GREEDY_SWAP,
                        seed=SeedSpec(900 + trial, i),
                    ),
                )
                oracle = enumerate_k_hits(ensemble.vectors, z, k, 0.2)
                assert (enum is not None) == bool(oracle)
                if greedy is not None:  # greedy success implies enum success
                    assert enum is not None
                    assert verify_solution(greedy, ensemble.vectors, z)

    def test_enum_monotone_in_epsilon(self):
        ensemble = sample_nsn(9, 2, SeedSpec(42, 42))
        params_small = SolverParams(epsilon=0.1, k=3)
        params_large = SolverParams(epsilon=0.2, k=3)
        for i in range(20):
            z = sample_uniform(2, SeedSpec(43, i), -1.0, 1.0)
            if solve_mrss(ensemble, z, params_small) is not None:
                assert solve_mrss(ensemble, z, params_large) is not None

    def test_at_most_mode_allows_smaller_subsets(self):
        ensemble = ensemble_from_values([0.5, 0.6, 0.7])
        params = SolverParams(epsilon=0.01, k=2, mode=CardinalityMode.AT_MOST)
        sol = solve_mrss(ensemble, [0.5], params)
        assert sol.indices == (0,)

    @given(seed=st.integers(0, 2**31 - 1))
    @settings(max_examples=25, deadline=None)
    def test_witnesses_reverify(self, seed):
        ensemble = sample_nsn(8, 2, SeedSpec(seed))
        z = sample_uniform(2, SeedSpec(seed, 1), -1.0, 1.0)
        outcome = search_subsets(
            ensemble.vectors, z, SolverParams(epsilon=0.3, k=3, mode=CardinalityMode.AT_MOST)
        )
        assert outcome.best is not None
        assert verify_solution(outcome.best, ensemble.vectors, z)
        if outcome.solution is not None:
            assert outcome.solution.residual_inf <= 0.3


class TestSubsetSumNumber:
    def test_counts_single_pair(self):
        ensemble = ensemble_from_values([0.3, 0.2, -0.1])
        assert subset_sum_number(ensemble, [0.1], 2, 0.05) == 1

    def test_huge_epsilon_counts_everything(self):
        ensemble = ensemble_from_values([0.3, 0.2, -0.1])
        assert subset_sum_number(ensemble, [0.1], 2, 10.0) == 3

    def test_zero_epsilon_generic_ensemble(self):
        ensemble = sample_nsn(8, 1, SeedSpec(77))
        assert subset_sum_number(ensemble, [0.123], 3, 0.0) == 0

    def test_budget_guard(self):
        ensemble = sample_nsn(40, 1, SeedSpec(78))
        with pytest.raises(BudgetError):
            subset_sum_number(ensemble, [0.0], 20, 0.1, enumeration_budget=1000)

    def test_positive_count_iff_enum_success(self):
        for trial in range(10):
            ensemble = sample_nsn(9, 2, SeedSpec(500 + trial))
            z = sample_uniform(2, SeedSpec(600 + trial), -1.0, 1.0)
            count = subset_sum_number(ensemble, z, 3, 0.2)
            sol = solve_mrss(ensemble, z, SolverParams(epsilon=0.2, k=3))
            assert (count > 0) == (sol is not None)


class TestPartitionBoost:
    def test_single_group_reduces_to_plain_solve(self):
        ensemble = sample_nsn(9, 1, SeedSpec(31))
        params = SolverParams(epsilon=0.1, k=2)
        plain = solve_mrss(ensemble, [0.2], params)
        boosted = partition_boost(ensemble, [[0.2]], params, group_size=9)[0]
        assert (plain is None) == (boosted.solution is None)
        if plain is not None:
            assert boosted.solution.indices == plain.indices

    def test_solution_comes_from_the_feasible_group(self):
        # group 1 entries are huge in magnitude; only group 2 can hit
        scalars = np.array([100.0, 100.0, 100.0, 100.0, 1.0, 0.5, 0.25, 0.1])
        directions = np.ones((8, 1))
        ensemble = NsnEnsemble.from_parts(scalars, directions)
        params = SolverParams(epsilon=0.05, k=2)
        result = partition_boost(ensemble, [[1.5]], params, group_size=4)[0]
        assert result.solution is not None
        assert all(i >= 4 for i in result.solution.indices)
        assert result.attempts[0].status == "proven-infeasible"
        assert result.attempts[1].status == "hit"

    def test_boost_at_least_single_group_rate(self):
        params = SolverParams(epsilon=0.08, k=2)
        single = 0
        boosted = 0
        trials = 40
        for trial in range(trials):
            ensemble = sample_nsn(8, 2, SeedSpec(1500 + trial))
            z = sample_uniform(2, SeedSpec(1600 + trial), -0.5, 0.5)
            first_group = ensemble.take(4)
            single += int(solve_mrss(first_group, z, params) is not None)
            boosted += int(
                partition_boost(ensemble, [z], params, group_size=4)[0].solution is not None
            )
        assert boosted >= single

    def test_group_size_must_cover_k_squared(self):
        ensemble = sample_nsn(8, 1, SeedSpec(1))
        with pytest.raises(ParameterError):
            partition_boost(ensemble, [[0.0]], SolverParams(epsilon=0.1, k=3), group_size=8)


class TestCover:
    def test_origin_always_covered(self):
        report = cover_targets(np.array([]), np.array([0.0]), 0.0)
        assert report.success

    def test_single_value_misses_far_target(self):
        report = cover_targets(np.array([0.5]), np.array([-0.9]), 0.1)
        assert not report.success
        assert report.excess[0] == pytest.approx(0.8)

    @pytest.mark.parametrize("trial", range(5))
    def test_interval_engine_matches_enumeration(self, trial):
        xs = sample_uniform(12, SeedSpec(2000 + trial), -1.0, 1.0)
        grid = np.linspace(-1.0, 1.0, 41)
        eps = 0.05
        report = cover_targets(xs, grid, eps)
        for z, covered in zip(grid, report.covered):
            assert covered == bool(enumerate_1d_hits(xs.tolist(), float(z), eps))

    def test_cover_matches_mitm_oracle_at_n40(self):
        xs = sample_uniform(40, SeedSpec(2100), -1.0, 1.0)
        grid = np.linspace(-1.0, 1.0, 41)
        eps = 0.05
        report = cover_targets(xs, grid, eps)
        for z, covered in zip(grid, report.covered):
            assert covered == (solve_rssp_1d(xs, float(z), eps) is not None)

    def test_intervals_grow_with_values(self):
        lo1, hi1 = inflated_sum_intervals(np.array([0.3]), 0.1)
        lo2, hi2 = inflated_sum_intervals(np.array([0.3, 0.4]), 0.1)
        # every point covered before stays covered
        for point in np.linspace(-0.2, 0.5, 30):
            in1 = any(a <= point <= b for a, b in zip(lo1, hi1))
            in2 = any(a <= point <= b for a, b in zip(lo2, hi2))
            assert in2 or not in1

    def test_ensemble_cover_uses_solver(self):
        ensemble = sample_nsn(8, 2, SeedSpec(2200))
        params = SolverParams(epsilon=0.3, k=3, mode=CardinalityMode.AT_MOST)
        grid = [sample_uniform(2, SeedSpec(2201, i), -0.5, 0.5) for i in range(5)]
        report = cover_targets(ensemble, np.array(grid), epsilon=0.3, params=params)
        for z, covered in zip(grid, report.covered):
            sol = search_subsets(ensemble.vectors, z, params).solution
            assert covered == (sol is not None)

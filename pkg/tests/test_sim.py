"""Monte Carlo simulator, exhaustive search, and slate rendering."""
from __future__ import annotations

import numpy as np
import pytest

from cacherec import Policy, Scenario, evaluate
from cacherec.sim import (brute_force_optimum, merge_reports, render_slate, simulate)
from conftest import random_positional_policy, random_scenario, random_uniform_policy


def two_state(alpha=0.5):
    s = Scenario(u=[[0, 1], [1, 0]], c=[0, 1], p0=[0.5, 0.5], alpha=alpha, n=1)
    return s, Policy.uniform([[0, 1], [1, 0]])


class TestSimulate:
    def test_iid_when_alpha_zero(self, rng):
        s = random_scenario(rng, alpha=0.0, binary_costs=False)
        p = random_uniform_policy(rng, s)
        rep = simulate(p, s, steps=200_000, seed=1)
        want = float(s.p0 @ s.c)
        assert abs(rep.empirical_cost_rate - want) <= 3 * rep.stderr
        assert rep.mean_cycle_length == pytest.approx(1.0)

    def test_forced_two_state_matches_analytic(self):
        s, p = two_state()
        rep = simulate(p, s, steps=300_000, seed=2)
        assert abs(rep.empirical_cost_rate - 0.5) <= 3 * rep.stderr

    def test_cycle_length_law(self):
        s, p = two_state(alpha=0.8)
        rep = simulate(p, s, steps=300_000, seed=3)
        assert abs(rep.mean_cycle_length - 5.0) <= 3 * rep.cycle_length_stderr

    def test_positional_matches_analytic(self, rng):
        s = random_scenario(rng, k=8, n=2, alpha=0.7, v="skewed")
        p = random_positional_policy(rng, s)
        rep = simulate(p, s, steps=400_000, seed=4)
        want = evaluate(p, s).ltec
        assert abs(rep.empirical_cost_rate - want) <= 3 * rep.stderr

    def test_seed_reproducibility(self, rng):
        s = random_scenario(rng, k=6)
        p = random_uniform_policy(rng, s)
        a = simulate(p, s, steps=5_000, seed=42)
        b = simulate(p, s, steps=5_000, seed=42)
        assert a == b
        c = simulate(p, s, steps=5_000, seed=43)
        assert c.empirical_cost_rate != a.empirical_cost_rate

    def test_invalid_policy_rejected(self, rng):
        s = random_scenario(rng, k=5, n=2)
        with pytest.raises(ValueError, match="invalid policy"):
            simulate(Policy.uniform(np.zeros((5, 5))), s, steps=10, seed=0)

    def test_rate_within_cost_range(self, rng):
        s = random_scenario(rng, binary_costs=False)
        p = random_uniform_policy(rng, s)
        rep = simulate(p, s, steps=10_000, seed=5)
        assert s.c.min() <= rep.empirical_cost_rate <= s.c.max()
        assert rep.mean_cycle_length > 0

    def test_never_self_loops_via_recommendations(self, rng):
        # r_ii = 0: within a cycle, consecutive repeats are impossible
        from cacherec.sim import _sample_path
        s = random_scenario(rng, k=4, n=1, alpha=0.9)
        p = random_uniform_policy(rng, s)
        path, lengths, _ = _sample_path(p, s, 50_000, np.random.default_rng(6))
        boundaries = set(np.cumsum(lengths[:-1]).tolist())  # renewals may repeat
        repeats = np.flatnonzero(path[1:] == path[:-1]) + 1
        assert all(int(i) in boundaries for i in repeats)

    def test_merge_reports_pools(self):
        s, p = two_state()
        reps = [simulate(p, s, steps=50_000, seed=seed) for seed in (1, 2, 3, 4)]
        merged = merge_reports(reps)
        assert merged.steps == 200_000
        assert abs(merged.empirical_cost_rate - 0.5) <= 3 * merged.stderr
        assert merged.stderr < max(r.stderr for r in reps)


class TestBruteForce:
    def test_routes_to_cached_item(self):
        s = Scenario(u=np.ones((3, 3)) - np.eye(3), c=[0, 1, 1],
                     p0=np.full(3, 1 / 3), alpha=0.9, n=1, q=0.0)
        best, policy = brute_force_optimum(s)
        assert policy.matrix[1, 0] == 1.0
        assert policy.matrix[2, 0] == 1.0
        assert best == pytest.approx(evaluate(policy, s).ltec)

    def test_full_quality_forces_baseline(self, rng):
        # q = 1 with unique top-N sets leaves exactly one feasible policy
        s = random_scenario(rng, k=5, n=2, q=1.0)
        u = rng.random((5, 5))
        u = np.maximum(u, u.T)  # distinct values => unique top-2 sets
        np.fill_diagonal(u, 0.0)
        s = s.replace(u=u)
        from cacherec.model import baseline_policy
        best, policy = brute_force_optimum(s)
        assert np.array_equal(policy.matrix, baseline_policy(s.u, s.n).matrix)

    def test_constant_costs_make_everything_equal(self, rng):
        s = random_scenario(rng, k=4, n=1, q=0.0)
        kappa = 0.7
        s = s.replace(c=np.full(4, kappa))
        best, _ = brute_force_optimum(s)
        assert best == pytest.approx(kappa)

    def test_cap_enforced(self, rng):
        s = random_scenario(rng, k=8, n=3, q=0.0)
        with pytest.raises(ValueError, match="cap"):
            brute_force_optimum(s, cap=10)

    def test_batched_scores_match_evaluator(self, rng):
        # the vectorized scorer must agree with the per-policy evaluator
        s = random_scenario(rng, k=5, n=2, q=0.0)
        best, policy = brute_force_optimum(s, chunk=7)  # odd chunk exercises batching
        assert best == pytest.approx(evaluate(policy, s).ltec, rel=1e-12)

    def test_positional_scenarios_rejected(self, rng):
        s = random_scenario(rng, k=5, n=2, v="skewed")
        with pytest.raises(ValueError, match="uniform-click"):
            brute_force_optimum(s)


class TestRenderSlate:
    def test_always_included_item(self):
        row = np.array([0.0, 1.0, 0.5, 0.5, 0.0])
        rng = np.random.default_rng(0)
        for _ in range(200):
            slate = render_slate(row, 2, rng)
            assert slate.shape == (2,)
            assert 1 in slate
            assert len(set(slate.tolist())) == 2

    def test_indicator_row_deterministic(self):
        row = np.array([0.0, 1.0, 0.0, 1.0])
        for seed in range(5):
            assert list(render_slate(row, 2, seed)) == [1, 3]

    def test_inclusion_probabilities_exact(self):
        row = np.array([0.0, 1.0, 0.5, 0.3, 0.2])
        rng = np.random.default_rng(1)
        draws = 100_000
        counts = np.zeros(5)
        for _ in range(draws):
            counts[render_slate(row, 2, rng)] += 1
        freq = counts / draws
        stderr = np.sqrt(row * (1 - row) / draws)
        assert np.all(np.abs(freq - row) <= 3 * stderr + 1e-12)

    def test_budget_violation_rejected(self):
        with pytest.raises(ValueError, match="sums to"):
            render_slate(np.array([0.0, 0.5, 0.2]), 2, 0)

    def test_positional_no_duplicates(self):
        rows = np.array([[0.0, 1.0, 0.0, 0.0],
                         [0.0, 1.0, 0.0, 0.0]])  # both slots want item 1
        rng = np.random.default_rng(2)
        for _ in range(50):
            slate = render_slate(rows, 2, rng)
            assert len(set(slate.tolist())) == 2
            assert slate[0] == 1  # slot 1 always gets its item

    def test_positional_row_sum_checked(self):
        rows = np.array([[0.0, 0.5, 0.0], [0.0, 0.0, 1.0]])
        with pytest.raises(ValueError, match="sum to 1"):
            render_slate(rows, 2, 0)

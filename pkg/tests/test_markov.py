"""Analytic session evaluation: fundamental matrix, cycle cost, cost rate."""
from __future__ import annotations

import numpy as np
import pytest

from cacherec import (Policy, Scenario, evaluate, expected_cycle_cost,
                      expected_cycle_length, fundamental_matrix, transient_matrix)
from conftest import random_positional_policy, random_scenario, random_uniform_policy


def two_state(alpha=0.5, c=(0, 1), p0=(0.5, 0.5)):
    s = Scenario(u=[[0, 1], [1, 0]], c=list(c), p0=list(p0), alpha=alpha, n=1)
    p = Policy.uniform([[0, 1], [1, 0]])
    return s, p


class TestFundamentalMatrix:
    def test_identity_when_alpha_zero(self, rng):
        s = random_scenario(rng, alpha=0.0)
        p = random_uniform_policy(rng, s)
        assert np.allclose(fundamental_matrix(p, s), np.eye(s.k))

    def test_hand_inverted_2x2(self):
        s, p = two_state()
        g = fundamental_matrix(p, s)
        assert np.allclose(g, [[4 / 3, 2 / 3], [2 / 3, 4 / 3]])

    def test_row_sums_are_cycle_length(self, rng):
        for _ in range(5):
            s = random_scenario(rng)
            p = random_uniform_policy(rng, s)
            g = fundamental_matrix(p, s)
            assert np.allclose(g.sum(axis=1), 1.0 / (1.0 - s.alpha))

    def test_invalid_policy_rejected(self, rng):
        s = random_scenario(rng, k=5, n=2)
        with pytest.raises(ValueError, match="invalid policy"):
            fundamental_matrix(Policy.uniform(np.zeros((5, 5))), s)


class TestCycleQuantities:
    def test_zero_costs(self, rng):
        s = random_scenario(rng)
        s = s.replace(c=np.zeros(s.k))
        p = random_uniform_policy(rng, s)
        assert expected_cycle_cost(p, s) == pytest.approx(0.0)

    def test_alpha_zero_is_single_request(self, rng):
        s = random_scenario(rng, alpha=0.0, binary_costs=False)
        p = random_uniform_policy(rng, s)
        assert expected_cycle_cost(p, s) == pytest.approx(float(s.p0 @ s.c))

    def test_hand_case_cost(self):
        s, p = two_state()
        assert expected_cycle_cost(p, s) == pytest.approx(1.0)

    @pytest.mark.parametrize("alpha,want", [(0.8, 5.0), (0.0, 1.0), (0.5, 2.0)])
    def test_cycle_length_formula(self, alpha, want):
        assert expected_cycle_length(alpha) == pytest.approx(want)

    def test_cycle_length_domain(self):
        with pytest.raises(ValueError):
            expected_cycle_length(1.0)


class TestEvaluate:
    def test_hand_case_ltec(self):
        s, p = two_state()
        rep = evaluate(p, s)
        assert rep.ltec == pytest.approx(0.5)
        assert rep.chr == pytest.approx(0.5)
        assert rep.cycle_length == pytest.approx(2.0)

    def test_alpha_zero_iid(self, rng):
        s = random_scenario(rng, alpha=0.0, binary_costs=False)
        p = random_uniform_policy(rng, s)
        assert evaluate(p, s).ltec == pytest.approx(float(s.p0 @ s.c))

    def test_all_cached_is_free(self, rng):
        s = random_scenario(rng)
        s = s.replace(c=np.zeros(s.k))
        rep = evaluate(random_uniform_policy(rng, s), s)
        assert rep.ltec == pytest.approx(0.0)
        assert rep.chr == pytest.approx(1.0)

    def test_chr_none_for_general_costs(self, rng):
        s = random_scenario(rng, binary_costs=False)
        assert evaluate(random_uniform_policy(rng, s), s).chr is None

    def test_visit_rate_normalization(self, rng):
        for _ in range(5):
            s = random_scenario(rng)
            rep = evaluate(random_uniform_policy(rng, s), s)
            assert (1.0 - s.alpha) * rep.z.sum() == pytest.approx(1.0)
            assert rep.cycle_length == pytest.approx(1.0 / (1.0 - s.alpha))
            assert np.allclose(rep.g_row_sums, 1.0 / (1.0 - s.alpha))

    def test_visit_rate_fixed_point(self, rng):
        # z_j = (alpha/N) sum_i z_i r_ij + p0_j
        s = random_scenario(rng)
        p = random_uniform_policy(rng, s)
        z = evaluate(p, s).z
        want = (s.alpha / s.n) * (p.matrix.T @ z) + s.p0
        assert np.allclose(z, want)

    def test_positional_fixed_point(self, rng):
        s = random_scenario(rng, v="skewed")
        p = random_positional_policy(rng, s)
        rep = evaluate(p, s)
        q = transient_matrix(p, s)
        assert np.allclose(rep.z, q.T @ rep.z + s.p0)
        assert (1.0 - s.alpha) * rep.z.sum() == pytest.approx(1.0)

    def test_relabeling_equivariance(self, rng):
        s = random_scenario(rng, k=7)
        p = random_uniform_policy(rng, s)
        perm = rng.permutation(s.k)
        s2 = Scenario(u=s.u[np.ix_(perm, perm)], c=s.c[perm], p0=s.p0[perm],
                      alpha=s.alpha, n=s.n, v=s.v, q=s.q)
        p2 = Policy.uniform(p.matrix[np.ix_(perm, perm)])
        assert evaluate(p2, s2).ltec == pytest.approx(evaluate(p, s).ltec)

    def test_positional_matches_direct_inverse(self, rng):
        s = random_scenario(rng, v="skewed")
        p = random_positional_policy(rng, s)
        q = transient_matrix(p, s)
        want = (1 - s.alpha) * float(s.p0 @ np.linalg.inv(np.eye(s.k) - q) @ s.c)
        assert evaluate(p, s).ltec == pytest.approx(want)


class TestTransientMatrix:
    def test_uniform_scaling(self):
        s, p = two_state(alpha=0.8)
        assert np.allclose(transient_matrix(p, s), 0.8 * np.array([[0, 1], [1, 0]]))

    def test_positional_mixture(self, rng):
        s = random_scenario(rng, v="skewed")
        p = random_positional_policy(rng, s)
        want = s.alpha * sum(s.v[i] * p.slot_matrices[i] for i in range(s.n))
        assert np.allclose(transient_matrix(p, s), want)

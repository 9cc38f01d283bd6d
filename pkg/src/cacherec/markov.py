"""Analytic policy evaluation via the session absorbing Markov chain.

A session alternates between runs of recommendation-followed requests and
renewals where the user picks from the whole catalog. Each run is an
absorbing chain over the K contents whose transient kernel is
Q = (alpha/N) * R for uniform clicks, or Q = alpha * sum_n v_n * R^n when
the user prefers some slate positions. Everything of interest falls out of
the fundamental matrix G = (I - Q)^{-1}: expected per-cycle cost p0' G c,
expected cycle length 1/(1 - alpha), and the long-term expected cost per
request (LTEC) = (1 - alpha) * p0' G c.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .model import Policy, Scenario, validate_policy

#: Validation tolerance used before evaluating; loose enough to accept
#: policies recovered from LP solutions at solver accuracy.
EVAL_TOL = 1e-6


@dataclass(frozen=True)
class EvalReport:
    """Analytic evaluation of a policy on a scenario.

    ltec: expected cost per request over a long session.
    chr: cache hit rate, 1 - ltec; only defined for binary costs (1 = miss).
    z: (K,) scaled visit rates, z = G' p0; (1 - alpha) * z_j is the long-run
       probability that a request is for content j.
    g_row_sums: (K,) row sums of G (expected cycle length started from each
       content); equals 1/(1 - alpha) everywhere for a valid policy.
    cycle_length: expected renewal-cycle length p0' G 1 = 1/(1 - alpha).
    """

    ltec: float
    chr: float | None
    z: np.ndarray
    g_row_sums: np.ndarray
    cycle_length: float


def transient_matrix(policy: Policy, scenario: Scenario) -> np.ndarray:
    """Transient kernel Q of the session chain (absorption prob. 1 - alpha)."""
    if policy.is_positional:
        mixed = np.einsum("n,nij->ij", scenario.v, policy.slot_matrices)
        return scenario.alpha * mixed
    return (scenario.alpha / scenario.n) * policy.matrix


def _factor(policy: Policy, scenario: Scenario, check: bool = True):
    if check:
        bad = validate_policy(policy, scenario, tol=EVAL_TOL)
        if bad:
            raise ValueError("invalid policy: " + "; ".join(bad[:5]))
    a = np.eye(scenario.k) - transient_matrix(policy, scenario)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # scipy warns instead of raising on singular U
        lu = lu_factor(a)
    if np.abs(np.diag(lu[0])).min() < 1e-300:
        raise ValueError("singular session system; the policy violates its invariants")
    return lu, a


def fundamental_matrix(policy: Policy, scenario: Scenario) -> np.ndarray:
    """G = (I - Q)^{-1}; entry (i, j) is the expected number of visits to j
    before the cycle ends, starting from i. Computed by a dense LU solve."""
    lu, a = _factor(policy, scenario)
    g = lu_solve(lu, np.eye(scenario.k))
    if __debug__:
        resid = np.abs(a @ g - np.eye(scenario.k)).max()
        assert resid <= 1e-9 * scenario.k, f"fundamental matrix residual {resid:.3e}"
    return g


def expected_cycle_cost(policy: Policy, scenario: Scenario) -> float:
    """Expected total access cost accumulated over one renewal cycle, p0' G c."""
    lu, _ = _factor(policy, scenario)
    return float(scenario.p0 @ lu_solve(lu, scenario.c))


def expected_cycle_length(alpha: float) -> float:
    """Expected number of requests in one renewal cycle, 1/(1 - alpha)."""
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must be in [0, 1), got {alpha}")
    return 1.0 / (1.0 - alpha)


def evaluate(policy: Policy, scenario: Scenario, check: bool = True) -> EvalReport:
    """Full analytic report: LTEC, hit rate, visit rates, cycle diagnostics.

    One LU factorization serves all three solves (cost, visit rates, row sums).
    """
    lu, _ = _factor(policy, scenario, check=check)
    k = scenario.k
    y = lu_solve(lu, scenario.c)                # G c
    z = lu_solve(lu, scenario.p0, trans=1)      # G' p0
    g1 = lu_solve(lu, np.ones(k))               # G 1
    ltec = float((1.0 - scenario.alpha) * (scenario.p0 @ y))
    hit_rate = 1.0 - ltec if scenario.binary_costs else None
    return EvalReport(
        ltec=ltec,
        chr=hit_rate,
        z=z,
        g_row_sums=g1,
        cycle_length=float(scenario.p0 @ g1),
    )

"""High-level policy construction: baseline, myopic (P1), and the two
long-session optima (P2 uniform clicks, P3 position-aware).

Each function builds the relevant LP(s), solves them, recovers the policy,
and evaluates it analytically. The positional optimum is compared against
the uniform one on equal footing: a uniform-click policy whose slate is
placed uniformly at random over the positions is insensitive to the click
distribution, so its session cost is exactly its uniform-click cost.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

from . import lp, markov, simplex
from .markov import EvalReport
from .model import Policy, Scenario, baseline_policy, quality_profile

POLICY_NAMES = ("baseline", "P1", "P2", "P3")


class InfeasibleProblem(RuntimeError):
    """The LP reported an infeasible constraint system."""


class SolverFailure(RuntimeError):
    """The LP solver failed (unbounded, iteration limit, backend error)."""


@dataclass(frozen=True)
class PolicyResult:
    """A solved policy plus its analytic evaluation and solver diagnostics."""

    name: str
    policy: Policy
    report: EvalReport
    objective: float | None
    status: str
    iterations: int
    residual: float
    seconds: float

    def quality_summary(self, scenario: Scenario) -> tuple[float, float]:
        """(min, mean) achieved-over-maximum quality ratio across contents."""
        ratio = quality_profile(self.policy, scenario).ratio()
        return float(ratio.min()), float(ratio.mean())


def _raise_for_status(solution, what: str):
    if solution.status == "optimal":
        return
    if solution.status == "infeasible":
        raise InfeasibleProblem(f"{what}: infeasible ({solution.message})")
    raise SolverFailure(f"{what}: solver returned {solution.status} ({solution.message})")


def solve_baseline(scenario: Scenario) -> PolicyResult:
    """Most-similar-items policy; positional variant when clicks are non-uniform."""
    t0 = time.perf_counter()
    v = None if scenario.uniform_clicks else scenario.v
    policy = baseline_policy(scenario.u, scenario.n, v)
    report = markov.evaluate(policy, scenario)
    return PolicyResult(
        name="baseline", policy=policy, report=report, objective=None,
        status="optimal", iterations=0, residual=0.0,
        seconds=time.perf_counter() - t0)


def solve_greedy(scenario: Scenario, **solve_kw) -> PolicyResult:
    """P1: myopic policy minimizing only the next request's expected cost."""
    t0 = time.perf_counter()
    problems = lp.build_greedy_row_lps(scenario)
    xs, iters, resid = [], 0, 0.0
    for prob in problems:
        sol = simplex.solve(prob, **solve_kw)
        _raise_for_status(sol, prob.name)
        xs.append(sol.x)
        iters += sol.iterations
        resid = max(resid, sol.max_residual)
    policy = lp.assemble_greedy_policy(xs, scenario)
    report = markov.evaluate(policy, scenario)
    myopic_cost = float(sum(p0i * (prob.c @ x)
                            for p0i, prob, x in zip(scenario.p0, problems, xs)))
    return PolicyResult(
        name="P1", policy=policy, report=report, objective=myopic_cost,
        status="optimal", iterations=iters, residual=resid,
        seconds=time.perf_counter() - t0)


def _solve_session(scenario: Scenario, positional: bool, name: str, **solve_kw) -> PolicyResult:
    t0 = time.perf_counter()
    builder = lp.build_positional_lp if positional else lp.build_session_lp
    problem = builder(scenario)
    sol = simplex.solve(problem, **solve_kw)
    _raise_for_status(sol, problem.name)
    rec = lp.recover_policy(sol, scenario, positional=positional, problem=problem)
    report = markov.evaluate(rec.policy, scenario)
    return PolicyResult(
        name=name, policy=rec.policy, report=report,
        objective=rec.objective_value,
        status=sol.status, iterations=sol.iterations, residual=rec.residuals,
        seconds=time.perf_counter() - t0)


def solve_session(scenario: Scenario, **solve_kw) -> PolicyResult:
    """P2: optimal long-session policy under uniform clicks."""
    return _solve_session(scenario, positional=False, name="P2", **solve_kw)


def solve_positional(scenario: Scenario, **solve_kw) -> PolicyResult:
    """P3: optimal long-session policy aware of the position click distribution."""
    return _solve_session(scenario, positional=True, name="P3", **solve_kw)


def solve_named(name: str, scenario: Scenario, **solve_kw) -> PolicyResult:
    """Dispatch on the policy names used across sweeps and the CLI."""
    table = {
        "baseline": solve_baseline,
        "P1": solve_greedy,
        "P2": solve_session,
        "P3": solve_positional,
    }
    if name not in table:
        raise ValueError(f"unknown policy {name!r}; choose from {sorted(table)}")
    if name == "baseline":
        return solve_baseline(scenario)
    return table[name](scenario, **solve_kw)

"""Cost-aware recommendation policies for long viewing sessions.

Build a `Scenario` (similarity matrix, access costs, popularity, click
model), then solve for a policy (`policies.solve_session` and friends),
evaluate it analytically (`markov.evaluate`), and cross-check by simulation
(`sim.simulate`).
"""
from .data import (GraphStats, gen_poisson_graph, load_edgelist, place_cache,
                   scenario_from_config, zipf_popularity)
from .lp import (LpProblem, RecoveredPolicy, build_greedy_row_lps,
                 build_positional_lp, build_session_lp, format_lp, parse_lp,
                 recover_policy)
from .markov import (EvalReport, evaluate, expected_cycle_cost,
                     expected_cycle_length, fundamental_matrix, transient_matrix)
from .model import (Policy, QualityProfile, Scenario, baseline_policy, entropy,
                    max_quality, max_quality_positional, quality_of,
                    quality_profile, validate_policy)
from .policies import (InfeasibleProblem, PolicyResult, SolverFailure,
                       solve_baseline, solve_greedy, solve_named,
                       solve_positional, solve_session)
from .sim import SimReport, brute_force_optimum, merge_reports, render_slate, simulate
from .simplex import LpSolution, solve

__version__ = "0.1.0"

__all__ = [
    "EvalReport", "GraphStats", "InfeasibleProblem", "LpProblem", "LpSolution",
    "Policy", "PolicyResult", "QualityProfile", "RecoveredPolicy", "Scenario",
    "SimReport", "SolverFailure", "baseline_policy", "brute_force_optimum",
    "build_greedy_row_lps", "build_positional_lp", "build_session_lp",
    "entropy", "evaluate", "expected_cycle_cost", "expected_cycle_length",
    "format_lp", "fundamental_matrix", "gen_poisson_graph", "load_edgelist",
    "max_quality", "max_quality_positional", "merge_reports", "parse_lp",
    "place_cache", "quality_of", "quality_profile", "recover_policy",
    "render_slate", "scenario_from_config", "simulate", "solve",
    "solve_baseline", "solve_greedy", "solve_named", "solve_positional",
    "solve_session", "transient_matrix", "validate_policy", "zipf_popularity",
]

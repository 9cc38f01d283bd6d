"""Stochastic session simulation, exhaustive search, and slate rendering.

The simulator plays the request process exactly as modeled: each renewal
cycle starts with a draw from the catalog popularity, then keeps following
recommendations with probability alpha per step. Cycle lengths are therefore
geometric and independent of the visited path, which lets the simulator draw
all cycle lengths up front and advance every active cycle in lock-step with
vectorized sampling - the produced request sequence is distributed exactly
like the sequential step-by-step walk.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import markov
from .model import Policy, Scenario, max_quality, validate_policy

#: Number of batches used for the batch-means standard error.
N_BATCHES = 100

#: Default ceiling on the number of deterministic policies the exhaustive
#: search will evaluate.
BRUTE_FORCE_CAP = 10 ** 6


@dataclass(frozen=True)
class SimReport:
    """Empirical averages from one simulated session.

    stderr is the batch-means standard error of the per-request cost (the
    request stream is autocorrelated within renewal cycles, so plain i.i.d.
    errors would be too small). cycle_length_stderr is the plain standard
    error over completed cycles.
    """

    steps: int
    empirical_cost_rate: float
    empirical_chr: float | None
    mean_cycle_length: float
    stderr: float
    seed: int
    cycle_length_stderr: float
    n_cycles: int


def _sample_path(policy: Policy, scenario: Scenario, steps: int,
                 rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, bool]:
    """Draw one session of `steps` requests.

    Returns (path, cycle_lengths, truncated): the visited contents in request
    order, the length of each renewal cycle (the last one possibly cut short
    at `steps`), and whether that cut happened.
    """
    k, n, alpha = scenario.k, scenario.n, scenario.alpha

    # Draw renewal-cycle lengths until they cover the requested step count.
    if alpha == 0.0:
        lengths = np.ones(steps, dtype=np.int64)
    else:
        chunks = []
        total = 0
        est = int(steps * (1.0 - alpha)) + 16
        while total < steps:
            block = rng.geometric(1.0 - alpha, size=est)
            chunks.append(block)
            total += int(block.sum())
            est = max(16, est // 4)
        lengths = np.concatenate(chunks)
    ends = np.cumsum(lengths)
    n_cycles = int(np.searchsorted(ends, steps)) + 1
    lengths = lengths[:n_cycles]
    truncated = int(ends[n_cycles - 1]) > steps
    if truncated:
        lengths[-1] -= int(ends[n_cycles - 1]) - steps
    offsets = np.concatenate([[0], np.cumsum(lengths[:-1])])

    # Conditional next-state sampling: position-then-item for the positional
    # variant, uniform over the slate otherwise. Cumulative rows let one
    # uniform draw pick the next state for every active cycle at once.
    if policy.is_positional:
        slot_cum = np.cumsum(policy.slot_matrices, axis=2)          # (N, K, K)
        v_cum = np.cumsum(scenario.v)
    else:
        row_cum = np.cumsum(policy.matrix / n, axis=1)              # (K, K)

    path = np.empty(steps, dtype=np.int64)
    p0_cum = np.cumsum(scenario.p0)
    starts = np.searchsorted(p0_cum, rng.random(n_cycles), side="right")
    starts = np.minimum(starts, k - 1)
    path[offsets] = starts

    max_len = int(lengths.max())
    current = starts.copy()
    for t in range(1, max_len):
        active = lengths > t
        cur = current[active]
        u = rng.random(cur.shape[0])
        if policy.is_positional:
            pos = np.minimum(np.searchsorted(v_cum, rng.random(cur.shape[0]), side="right"),
                             scenario.n - 1)
            rows = slot_cum[pos, cur]
        else:
            rows = row_cum[cur]
        nxt = np.minimum((rows < u[:, None]).sum(axis=1), k - 1)
        path[offsets[active] + t] = nxt
        current[active] = nxt
    return path, lengths, truncated


def simulate(policy: Policy, scenario: Scenario, steps: int, seed: int,
             tol: float = 1e-6) -> SimReport:
    """Simulate `steps` requests and report empirical cost rate and cycle stats."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    bad = validate_policy(policy, scenario, tol=tol)
    if bad:
        raise ValueError("invalid policy: " + "; ".join(bad[:5]))
    seed = int(seed)
    path, lengths, truncated = _sample_path(policy, scenario, steps,
                                            np.random.default_rng(seed))
    costs = scenario.c[path]
    rate = float(costs.mean())
    hit_rate = 1.0 - rate if scenario.binary_costs else None

    if steps >= N_BATCHES:
        size = steps // N_BATCHES
        batches = costs[: N_BATCHES * size].reshape(N_BATCHES, size).mean(axis=1)
        stderr = float(batches.std(ddof=1) / math.sqrt(N_BATCHES))
    else:
        stderr = float(costs.std(ddof=1) / math.sqrt(steps)) if steps > 1 else float("nan")

    completed = lengths[:-1] if truncated else lengths
    if completed.size:
        mean_len = float(completed.mean())
        len_se = (float(completed.std(ddof=1) / math.sqrt(completed.size))
                  if completed.size > 1 else float("nan"))
    else:
        mean_len = float(lengths[-1])
        len_se = float("nan")

    return SimReport(
        steps=steps,
        empirical_cost_rate=rate,
        empirical_chr=hit_rate,
        mean_cycle_length=mean_len,
        stderr=stderr,
        seed=seed,
        cycle_length_stderr=len_se,
        n_cycles=int(completed.size),
    )


def merge_reports(reports: list[SimReport]) -> SimReport:
    """Pool independent replications (weighted means, pooled standard errors)."""
    if not reports:
        raise ValueError("nothing to merge")
    steps = np.array([r.steps for r in reports], dtype=float)
    w = steps / steps.sum()
    rate = float(np.sum(w * [r.empirical_cost_rate for r in reports]))
    stderr = float(np.sqrt(np.sum((w * [r.stderr for r in reports]) ** 2)))
    cycles = np.array([max(r.n_cycles, 1) for r in reports], dtype=float)
    cw = cycles / cycles.sum()
    mean_len = float(np.sum(cw * [r.mean_cycle_length for r in reports]))
    len_se = float(np.sqrt(np.nansum((cw * [r.cycle_length_stderr for r in reports]) ** 2)))
    any_chr = all(r.empirical_chr is not None for r in reports)
    return SimReport(
        steps=int(steps.sum()),
        empirical_cost_rate=rate,
        empirical_chr=1.0 - rate if any_chr else None,
        mean_cycle_length=mean_len,
        stderr=stderr,
        seed=reports[0].seed,
        cycle_length_stderr=len_se,
        n_cycles=int(cycles.sum()),
    )


# ---------------------------------------------------------------------------
# Exhaustive search over deterministic policies (oracle for the LP).

def _feasible_rows(scenario: Scenario, tol: float = 1e-9) -> list[list[tuple[int, ...]]]:
    k, n = scenario.k, scenario.n
    qmax = max_quality(scenario.u, n)
    rows: list[list[tuple[int, ...]]] = []
    for i in range(k):
        floor = scenario.q * qmax[i] - tol
        others = [j for j in range(k) if j != i]
        cands = [c for c in itertools.combinations(others, n)
                 if scenario.u[i, list(c)].sum() >= floor]
        rows.append(cands)
    return rows


def brute_force_optimum(scenario: Scenario, cap: int = BRUTE_FORCE_CAP,
                        chunk: int = 50_000) -> tuple[float, Policy]:
    """Best deterministic slate assignment by exhaustive enumeration.

    Enumerates every policy whose rows are N-subsets meeting the quality
    floor, scores each through the same session-chain formula the analytic
    evaluator uses, and returns the smallest cost with its policy. Intended
    as an independent check for the LP pipeline at toy sizes.
    """
    if not scenario.uniform_clicks:
        raise ValueError("exhaustive search covers the uniform-click model only")
    k, n, alpha = scenario.k, scenario.n, scenario.alpha
    rows = _feasible_rows(scenario)
    for i, cands in enumerate(rows):
        if not cands:
            raise ValueError(f"row {i} has no feasible slate: quality floor unattainable")
    total = math.prod(len(c) for c in rows)
    if total > cap:
        raise ValueError(f"{total} candidate policies exceed the cap of {cap}")

    eye = np.eye(k)
    best_cost = np.inf
    best_combo: tuple[tuple[int, ...], ...] | None = None
    it = itertools.product(*rows)
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            break
        bsz = len(block)
        r = np.zeros((bsz, k, k))
        rows_idx = np.repeat(np.arange(k)[None, :], bsz, axis=0)
        slates = np.array(block)                      # (bsz, k, n)
        b_idx = np.arange(bsz)[:, None, None]
        r[b_idx, rows_idx[:, :, None], slates] = 1.0
        rhs = np.broadcast_to(scenario.c[:, None], (bsz, k, 1))
        y = np.linalg.solve(eye[None] - (alpha / n) * r, rhs)[..., 0]
        costs = (1.0 - alpha) * (y @ scenario.p0)
        local = int(np.argmin(costs))
        if costs[local] < best_cost:
            best_cost = float(costs[local])
            best_combo = block[local]

    r_best = np.zeros((k, k))
    for i, slate in enumerate(best_combo):
        r_best[i, list(slate)] = 1.0
    policy = Policy.uniform(r_best)
    report = markov.evaluate(policy, scenario)  # authoritative evaluation
    return report.ltec, policy


# ---------------------------------------------------------------------------
# Slate rendering.

def render_slate(row_policy: np.ndarray, n: int, seed) -> np.ndarray:
    """Draw one concrete slate of N distinct items from a policy row.

    Uniform rows (length K, summing to N) use systematic sampling, so every
    item's inclusion probability equals its row entry exactly. Positional
    rows (shape (N, K), each row-stochastic) are drawn slot by slot with
    already-used items removed and the remainder renormalized; that
    de-duplication is cosmetic and does not preserve per-slot marginals.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    row = np.asarray(row_policy, dtype=float)

    if row.ndim == 1:
        if abs(row.sum() - n) > 1e-7:
            raise ValueError(f"row sums to {row.sum()!r}, expected the slot count {n}")
        if np.any(row < -1e-7) or np.any(row > 1.0 + 1e-7):
            raise ValueError("row entries must lie in [0, 1]")
        cum = np.concatenate([[0.0], np.cumsum(np.maximum(row, 0.0))])
        targets = rng.random() + np.arange(n)
        picks = np.searchsorted(cum, targets, side="right") - 1
        # entries <= 1 make successive picks strictly increasing, hence distinct
        return picks

    if row.ndim == 2:
        if row.shape[0] != n:
            raise ValueError(f"expected {n} positional rows, got {row.shape[0]}")
        sums = row.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-7):
            raise ValueError("each positional row must sum to 1")
        k = row.shape[1]
        chosen: list[int] = []
        used = np.zeros(k, dtype=bool)
        for slot in range(n):
            weights = np.where(used, 0.0, np.maximum(row[slot], 0.0))
            total = weights.sum()
            if total <= 1e-12:
                weights = np.where(used, 0.0, 1.0)   # degenerate residual: any unused item
                total = weights.sum()
            cum = np.cumsum(weights / total)
            pick = int(np.minimum(np.searchsorted(cum, rng.random(), side="right"), k - 1))
            chosen.append(pick)
            used[pick] = True
        return np.array(chosen)

    raise ValueError(f"row_policy must be 1-D or 2-D, got shape {row.shape}")

"""Domain types: problem scenarios, recommendation policies, quality accounting.

A `Scenario` bundles everything the optimizers and evaluators need: the
content similarity matrix, per-content access costs, catalog popularity,
the probability that a request follows the recommender, the number of
recommendation slots, the per-position click distribution, and the required
quality level. A `Policy` is either a single row-budget matrix (the user
clicks uniformly over the slots) or one row-stochastic matrix per slot
(the user clicks position n with probability v_n).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Default feasibility tolerance for policy validation. LP solver tolerance
#: propagates into recovered policies, so checks cannot be exact.
FEAS_TOL = 1e-7


def _as_vector(x, k: int | None, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got shape {arr.shape}")
    if k is not None and arr.shape[0] != k:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {k}")
    return arr


@dataclass(frozen=True)
class Scenario:
    """Immutable problem instance.

    Attributes:
        u: (K, K) pairwise similarity scores in [0, 1]; diagonal forced to 0.
        c: (K,) nonnegative access costs. Binary {0, 1} with 1 = cache miss
           for hit-rate scenarios.
        p0: (K,) catalog popularity; strictly positive, sums to 1.
        alpha: probability a request follows the recommender, in [0, 1).
        n: number of recommendation slots, 1 <= n <= K-1.
        v: (n,) position click probabilities, sums to 1. Defaults to uniform.
        q: required fraction of the per-content maximum quality, in [0, 1].
    """

    u: np.ndarray
    c: np.ndarray
    p0: np.ndarray
    alpha: float
    n: int
    v: np.ndarray | None = None
    q: float = 1.0

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ValueError(f"u must be square, got shape {u.shape}")
        k = u.shape[0]
        np.fill_diagonal(u, 0.0)
        if np.any(u < 0.0) or np.any(u > 1.0):
            raise ValueError("similarity scores must lie in [0, 1]")

        c = _as_vector(self.c, k, "c")
        if np.any(c < 0.0):
            raise ValueError("access costs must be nonnegative")

        p0 = _as_vector(self.p0, k, "p0")
        if abs(p0.sum() - 1.0) > 1e-9:
            raise ValueError(f"p0 must sum to 1, got {p0.sum()!r}")
        if np.any(p0 <= 0.0):
            raise ValueError("p0 must be strictly positive for every content")

        if not 0.0 <= self.alpha < 1.0:
            raise ValueError(f"alpha must be in [0, 1), got {self.alpha}")

        n = int(self.n)
        if not 1 <= n <= k - 1:
            raise ValueError(f"n must satisfy 1 <= n <= K-1, got n={n}, K={k}")

        v = self.v
        if v is None:
            v = np.full(n, 1.0 / n)
        else:
            v = _as_vector(v, n, "v")
            if np.any(v < 0.0) or abs(v.sum() - 1.0) > 1e-9:
                raise ValueError("v must be a probability vector over the slots")

        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"q must be in [0, 1], got {self.q}")

        for name, val in (("u", u), ("c", c), ("p0", p0), ("v", v), ("n", n)):
            object.__setattr__(self, name, val)

    @property
    def k(self) -> int:
        """Catalog size."""
        return self.u.shape[0]

    @property
    def uniform_clicks(self) -> bool:
        return bool(np.allclose(self.v, 1.0 / self.n))

    @property
    def binary_costs(self) -> bool:
        return bool(np.all((self.c == 0.0) | (self.c == 1.0)))

    def replace(self, **changes) -> "Scenario":
        """Return a copy with the given fields replaced (re-validated)."""
        kwargs = dict(u=self.u, c=self.c, p0=self.p0, alpha=self.alpha,
                      n=self.n, v=self.v, q=self.q)
        if "n" in changes and "v" not in changes:
            kwargs["v"] = None  # slot count changed: fall back to uniform clicks
        kwargs.update(changes)
        return Scenario(**kwargs)


@dataclass(frozen=True)
class Policy:
    """Recommendation policy.

    kind "uniform": `mats` is one (K, K) matrix whose rows sum to the slot
    count N; entry (i, j) is the probability that j appears somewhere in the
    slate shown after i.

    kind "positional": `mats` is an (N, K, K) stack of row-stochastic
    matrices; entry (n, i, j) is the probability that slot n shows j after i.
    """

    kind: str
    mats: np.ndarray

    def __post_init__(self):
        mats = np.asarray(self.mats, dtype=float)
        if self.kind == "uniform":
            if mats.ndim != 2 or mats.shape[0] != mats.shape[1]:
                raise ValueError(f"uniform policy needs a square matrix, got {mats.shape}")
        elif self.kind == "positional":
            if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
                raise ValueError(f"positional policy needs an (N, K, K) stack, got {mats.shape}")
        else:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        object.__setattr__(self, "mats", mats)

    @classmethod
    def uniform(cls, r: np.ndarray) -> "Policy":
        return cls("uniform", r)

    @classmethod
    def positional(cls, slot_mats: np.ndarray) -> "Policy":
        return cls("positional", slot_mats)

    @property
    def is_positional(self) -> bool:
        return self.kind == "positional"

    @property
    def k(self) -> int:
        return self.mats.shape[-1]

    @property
    def n_slots(self) -> int | None:
        """Slot count for positional policies (None for uniform)."""
        return self.mats.shape[0] if self.is_positional else None

    @property
    def matrix(self) -> np.ndarray:
        if self.is_positional:
            raise ValueError("positional policy has no single matrix; use .mats")
        return self.mats

    @property
    def slot_matrices(self) -> np.ndarray:
        if not self.is_positional:
            raise ValueError("uniform policy has no slot matrices; use .matrix")
        return self.mats


@dataclass(frozen=True)
class QualityProfile:
    """Per-content maximum achievable quality and quality achieved by a policy."""

    q_max: np.ndarray
    achieved: np.ndarray

    def __post_init__(self):
        if self.q_max.shape != self.achieved.shape:
            raise ValueError("q_max and achieved must have the same shape")
        if np.any(self.achieved > self.q_max + FEAS_TOL):
            worst = int(np.argmax(self.achieved - self.q_max))
            raise ValueError(
                f"achieved quality {self.achieved[worst]!r} exceeds maximum "
                f"{self.q_max[worst]!r} at content {worst}")

    def ratio(self) -> np.ndarray:
        """achieved / q_max, treating rows with q_max == 0 as fully satisfied."""
        out = np.ones_like(self.q_max)
        pos = self.q_max > 0
        out[pos] = self.achieved[pos] / self.q_max[pos]
        return out


def validate_policy(policy: Policy, scenario: Scenario, tol: float = FEAS_TOL) -> list[str]:
    """Check every policy invariant; return a list of human-readable violations.

    An empty list means the policy is feasible within `tol`. Dimension
    mismatches raise instead of being reported, since no entry-level
    diagnosis is possible.
    """
    k, n = scenario.k, scenario.n
    if policy.k != k:
        raise ValueError(f"policy is {policy.k}x{policy.k}, scenario has K={k}")
    out: list[str] = []

    def check_box(mat: np.ndarray, label: str):
        diag = np.abs(np.diagonal(mat, axis1=-2, axis2=-1))
        for idx in np.argwhere(diag > tol):
            out.append(f"{label}diagonal nonzero at {tuple(idx)}: {diag[tuple(idx)]:.3g}")
        low = np.argwhere(mat < -tol)
        for idx in low[:20]:
            out.append(f"{label}entry {tuple(idx)} negative: {mat[tuple(idx)]:.3g}")
        high = np.argwhere(mat > 1.0 + tol)
        for idx in high[:20]:
            out.append(f"{label}entry {tuple(idx)} above 1: {mat[tuple(idx)]:.3g}")

    if not policy.is_positional:
        r = policy.matrix
        check_box(r, "")
        sums = r.sum(axis=1)
        for i in np.flatnonzero(np.abs(sums - n) > tol):
            out.append(f"row {i} sums to {sums[i]:.9g}, expected {n} "
                       f"(off by {abs(sums[i] - n):.3g})")
    else:
        if policy.n_slots != n:
            raise ValueError(f"policy has {policy.n_slots} slot matrices, scenario has N={n}")
        mats = policy.slot_matrices
        check_box(mats, "")
        sums = mats.sum(axis=2)
        for sn, i in np.argwhere(np.abs(sums - 1.0) > tol):
            out.append(f"slot {sn} row {i} sums to {sums[sn, i]:.9g}, expected 1 "
                       f"(off by {abs(sums[sn, i] - 1.0):.3g})")
        cross = mats.sum(axis=0)
        for i, j in np.argwhere(cross > 1.0 + tol):
            out.append(f"entry ({i}, {j}) appears in slots with total frequency "
                       f"{cross[i, j]:.9g} > 1")
    return out


def _top_n_indices(row: np.ndarray, i: int, n: int) -> np.ndarray:
    """Indices of the N largest scores in row i (excluding i), ties by lowest index."""
    masked = row.copy()
    masked[i] = -1.0  # scores are >= 0, so self never ranks top-N
    order = np.argsort(-masked, kind="stable")
    return order[:n]


def _baseline_matrix(u: np.ndarray, n: int) -> np.ndarray:
    k = u.shape[0]
    if n >= k:
        raise ValueError(f"need n < K, got n={n}, K={k}")
    r = np.zeros((k, k))
    for i in range(k):
        r[i, _top_n_indices(u[i], i, n)] = 1.0
    return r


def _baseline_slot_matrices(u: np.ndarray, n: int, v: np.ndarray) -> np.ndarray:
    k = u.shape[0]
    if n >= k:
        raise ValueError(f"need n < K, got n={n}, K={k}")
    if v.shape != (n,):
        raise ValueError(f"v must have length n={n}, got {v.shape}")
    slot_order = np.argsort(-v, kind="stable")  # most-clicked slot first
    mats = np.zeros((n, k, k))
    for i in range(k):
        items = _top_n_indices(u[i], i, n)
        for rank, slot in enumerate(slot_order):
            mats[slot, i, items[rank]] = 1.0
    return mats


def max_quality(u: np.ndarray, n: int) -> np.ndarray:
    """Per-content maximum slate quality: sum of the N largest off-diagonal scores.

    Computed through the top-N indicator rows so it is bitwise identical to
    `quality_of(baseline_policy(u, n), ...)`.
    """
    u = np.asarray(u, dtype=float)
    return (_baseline_matrix(u, n) * u).sum(axis=1)


def max_quality_positional(u: np.ndarray, n: int, v: np.ndarray) -> np.ndarray:
    """Position-weighted maximum quality.

    The best placement pairs the n-th most likely slot with the n-th most
    similar item; the result is the click-probability-weighted quality of
    that placement (same arithmetic as evaluating the baseline placement).
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    mats = _baseline_slot_matrices(u, n, v)
    per_slot = (mats * u[None, :, :]).sum(axis=2)
    return v @ per_slot


def baseline_policy(u: np.ndarray, n: int, v: np.ndarray | None = None) -> Policy:
    """Similarity-only policy: always recommend the N most similar items.

    With `v` given, returns the positional variant that places the t-th most
    similar item in the t-th most clicked slot, which attains the positional
    maximum quality exactly. Ties are broken by lowest content index.
    """
    u = np.asarray(u, dtype=float)
    if v is None:
        return Policy.uniform(_baseline_matrix(u, n))
    return Policy.positional(_baseline_slot_matrices(u, n, np.asarray(v, dtype=float)))


def quality_of(policy: Policy, scenario: Scenario) -> np.ndarray:
    """Expected per-content slate quality under a policy."""
    if policy.k != scenario.k:
        raise ValueError("policy/scenario dimension mismatch")
    if not policy.is_positional:
        return (policy.matrix * scenario.u).sum(axis=1)
    if policy.n_slots != scenario.n:
        raise ValueError("policy slot count does not match scenario")
    per_slot = (policy.slot_matrices * scenario.u[None, :, :]).sum(axis=2)  # (N, K)
    return scenario.v @ per_slot


def quality_profile(policy: Policy, scenario: Scenario) -> QualityProfile:
    """Maximum vs achieved quality for every content under a policy."""
    if policy.is_positional:
        qm = max_quality_positional(scenario.u, scenario.n, scenario.v)
    else:
        qm = max_quality(scenario.u, scenario.n)
    return QualityProfile(q_max=qm, achieved=quality_of(policy, scenario))


def entropy(v) -> float:
    """Normalized entropy of a position click distribution.

    Uses the base-N logarithm so the uniform vector scores exactly 1 and a
    deterministic click scores 0. A single slot has entropy 0 by convention.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("v must be a nonempty vector")
    if np.any(v < 0) or abs(v.sum() - 1.0) > 1e-9:
        raise ValueError(f"v must be a probability vector, got sum {v.sum()!r}")
    n = v.size
    if n == 1:
        return 0.0
    pos = v[v > 0]
    return float(-(pos * (np.log(pos) / np.log(n))).sum())

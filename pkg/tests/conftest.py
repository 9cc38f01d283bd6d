"""Shared generators for scenarios, policies, and random LPs."""
from __future__ import annotations

import numpy as np
import pytest

from cacherec import Policy, Scenario
from cacherec.lp import LpProblem
from scipy import sparse


def random_scenario(rng: np.random.Generator, k: int | None = None,
                    n: int | None = None, alpha: float | None = None,
                    q: float | None = None, v: np.ndarray | str | None = None,
                    binary_costs: bool = True) -> Scenario:
    """A feasible random instance: random similarity graph, positive popularity."""
    k = int(k if k is not None else rng.integers(4, 12))
    n = int(n if n is not None else rng.integers(1, min(4, k)))
    alpha = float(alpha if alpha is not None else rng.uniform(0.3, 0.9))
    q = float(q if q is not None else rng.uniform(0.0, 1.0))
    if rng.random() < 0.5:
        u = (rng.random((k, k)) < rng.uniform(0.2, 0.6)).astype(float)
    else:
        u = rng.random((k, k)) * (rng.random((k, k)) < 0.7)
    u = np.maximum(u, u.T)
    np.fill_diagonal(u, 0.0)
    p0 = rng.dirichlet(np.full(k, 2.0))
    p0 = np.maximum(p0, 1e-6)
    p0 = p0 / p0.sum()
    if binary_costs:
        c = np.ones(k)
        cached = rng.choice(k, size=max(1, k // 4), replace=False)
        c[cached] = 0.0
    else:
        c = rng.uniform(0.0, 3.0, size=k)
    if v == "skewed":
        raw = rng.uniform(0.5, 2.0, size=n)
        v = np.sort(raw / raw.sum())[::-1]
    return Scenario(u=u, c=c, p0=p0, alpha=alpha, n=n, v=v, q=q)


def random_uniform_policy(rng: np.random.Generator, scenario: Scenario,
                          mixtures: int = 4) -> Policy:
    """Random feasible fractional policy: convex mix of deterministic slates."""
    k, n = scenario.k, scenario.n
    w = rng.dirichlet(np.ones(mixtures))
    r = np.zeros((k, k))
    for m in range(mixtures):
        for i in range(k):
            others = np.delete(np.arange(k), i)
            picks = rng.choice(others, size=n, replace=False)
            r[i, picks] += w[m]
    return Policy.uniform(r)


def random_positional_policy(rng: np.random.Generator, scenario: Scenario,
                             mixtures: int = 4) -> Policy:
    """Random feasible positional policy: convex mix of deterministic slate placements."""
    k, n = scenario.k, scenario.n
    w = rng.dirichlet(np.ones(mixtures))
    mats = np.zeros((n, k, k))
    for m in range(mixtures):
        for i in range(k):
            others = np.delete(np.arange(k), i)
            picks = rng.choice(others, size=n, replace=False)
            for slot in range(n):
                mats[slot, i, picks[slot]] += w[m]
    return Policy.positional(mats)


def random_box_lp(rng: np.random.Generator, n_vars: int | None = None) -> LpProblem:
    """Random LP with finite box bounds (bounded region => vertex optimum).

    Built around a known interior point so the instance is always feasible.
    """
    n = int(n_vars if n_vars is not None else rng.integers(2, 6))
    mu = int(rng.integers(1, 4))
    me = int(rng.integers(0, 2)) if n > 2 else 0
    lb = np.zeros(n)
    ub = rng.uniform(0.5, 2.0, size=n)
    x0 = ub * rng.uniform(0.2, 0.8, size=n)
    a_ub = rng.normal(size=(mu, n)).round(3)
    b_ub = a_ub @ x0 + rng.uniform(0.05, 1.0, size=mu)
    a_eq = rng.normal(size=(me, n)).round(3)
    b_eq = a_eq @ x0
    c = rng.normal(size=n).round(3)
    return LpProblem(
        c=c, a_eq=sparse.csr_matrix(a_eq) if me else sparse.csr_matrix((0, n)),
        b_eq=b_eq, a_ub=sparse.csr_matrix(a_ub), b_ub=b_ub,
        lb=lb, ub=ub, var_names=[f"x{i}" for i in range(n)], name="random-box-lp")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)

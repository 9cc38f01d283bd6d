"""Scenario construction: graph ingestion, synthetic graphs, popularity, caching.

The edge-list reader and the random-graph generator both produce a symmetric
zero-diagonal similarity matrix together with simple graph statistics
("arcs" counts directed neighbor links, i.e. twice the undirected edge
count). Popularity follows a Zipf law over catalog ranks and the cache holds
the most popular contents.

A scenario can also be assembled from a single YAML/JSON config document;
see `scenario_from_config` for the recognized keys.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .model import Scenario


@dataclass(frozen=True)
class GraphStats:
    """Node/arc counts of a similarity graph. mean_neighbors == arcs / nodes."""

    nodes: int
    arcs: int
    mean_neighbors: float
    std_neighbors: float


def _stats_of(u: np.ndarray) -> GraphStats:
    deg = (u > 0).sum(axis=1)
    nodes = u.shape[0]
    arcs = int(deg.sum())
    return GraphStats(
        nodes=nodes,
        arcs=arcs,
        mean_neighbors=arcs / nodes,
        std_neighbors=float(deg.std()),
    )


def _largest_component(u: np.ndarray) -> np.ndarray:
    n_comp, labels = connected_components(csr_matrix(u > 0), directed=False)
    if n_comp <= 1:
        return u
    sizes = np.bincount(labels)
    keep = np.flatnonzero(labels == int(np.argmax(sizes)))
    return u[np.ix_(keep, keep)]


def load_edgelist(path, saturation_threshold: float,
                  component_before_saturation: bool = False) -> tuple[np.ndarray, GraphStats]:
    """Read a "i j [w]" edge list into a similarity matrix.

    Weights above `saturation_threshold` saturate to 1, the rest drop to 0;
    a negative threshold keeps the raw weights. The matrix is symmetrized by
    the elementwise max and reduced to its largest connected component
    (by default after saturation). '#' starts a comment, blank lines are
    skipped, node ids are remapped to 0..K-1 in sorted order.
    """
    text = Path(path).read_text()
    edges: list[tuple[int, int, float]] = []
    ids: set[int] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ValueError(f"line {lineno}: expected 'i j [w]', got {raw!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from exc
        ids.update((i, j))
        edges.append((i, j, w))
    if not ids:
        raise ValueError(f"{path}: no nodes found")

    remap = {node: pos for pos, node in enumerate(sorted(ids))}
    k = len(remap)
    u = np.zeros((k, k))
    for i, j, w in edges:
        a, b = remap[i], remap[j]
        if a == b:
            continue
        u[a, b] = max(u[a, b], w)
    u = np.maximum(u, u.T)

    def saturate(mat: np.ndarray) -> np.ndarray:
        if saturation_threshold < 0:
            return mat
        return (mat > saturation_threshold).astype(float)

    if component_before_saturation:
        u = saturate(_largest_component(u))
    else:
        u = _largest_component(saturate(u))
    np.fill_diagonal(u, 0.0)
    if u.shape[0] < 2:
        raise ValueError(f"{path}: largest component has fewer than 2 nodes")
    return u, _stats_of(u)


def gen_poisson_graph(k: int, mean_degree: float, seed: int) -> tuple[np.ndarray, GraphStats]:
    """Random graph with independent edges and the given expected degree."""
    if k < 2:
        raise ValueError("need at least 2 nodes")
    if not 0.0 < mean_degree < k - 1:
        raise ValueError(f"mean_degree must be in (0, {k - 1}), got {mean_degree}")
    p = mean_degree / (k - 1)
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(k, 1)
    mask = rng.random(iu[0].shape[0]) < p
    u = np.zeros((k, k))
    u[iu[0][mask], iu[1][mask]] = 1.0
    u = np.maximum(u, u.T)
    return u, _stats_of(u)


def zipf_popularity(k: int, s: float, ranks=None) -> np.ndarray:
    """Zipf popularity with exponent s over ranks 1..K (identity rank order
    by default; pass a permutation of 0..K-1 to reorder)."""
    if s < 0:
        raise ValueError("exponent must be nonnegative")
    if ranks is None:
        rank = np.arange(1, k + 1, dtype=float)
    else:
        ranks = np.asarray(ranks)
        if sorted(ranks.tolist()) != list(range(k)):
            raise ValueError("ranks must be a permutation of 0..K-1")
        rank = ranks.astype(float) + 1.0
    weights = rank ** (-s)
    return weights / weights.sum()


def place_cache(p0: np.ndarray, cache_size: int) -> np.ndarray:
    """Binary miss-cost vector: 0 for the `cache_size` most popular contents
    (ties broken by lowest index), 1 elsewhere."""
    p0 = np.asarray(p0, dtype=float)
    k = p0.shape[0]
    if not 0 <= cache_size <= k:
        raise ValueError(f"cache size must be in [0, {k}], got {cache_size}")
    c = np.ones(k)
    cached = np.argsort(-p0, kind="stable")[:cache_size]
    c[cached] = 0.0
    return c


# ---------------------------------------------------------------------------
# Config documents and scenario files.

def load_config(path) -> dict:
    """Read a YAML (or JSON) scenario config into a dict."""
    with open(path) as fh:
        cfg = yaml.safe_load(fh)
    if not isinstance(cfg, dict):
        raise ValueError(f"{path}: config must be a key/value document")
    return cfg


def scenario_from_config(cfg: dict, base_dir=".") -> tuple[Scenario, GraphStats | None]:
    """Build a Scenario from a config dict.

    Recognized keys:
        graph:  {kind: poisson, k, mean_degree}              (synthetic)
                {kind: edgelist, path, saturation, component_first}
                {kind: matrix, u: [[...]]}                   (inline, tests)
        alpha, n, q: scalars
        v:      "uniform" or a list of N click probabilities
        p0:     explicit popularity list  |  zipf_s: exponent
        c:      explicit cost list        |  cache_size: count
        seed:   base RNG seed (graph generation; also returned to callers)
    """
    cfg = dict(cfg)
    seed = int(cfg.get("seed", 0))
    graph = cfg.get("graph")
    if graph is None:
        raise ValueError("config needs a 'graph' section")
    kind = graph.get("kind", "poisson")
    stats: GraphStats | None = None
    if kind == "poisson":
        k = int(graph["k"])
        u, stats = gen_poisson_graph(k, float(graph.get("mean_degree", 8.0)), seed)
    elif kind == "edgelist":
        u, stats = load_edgelist(
            Path(base_dir) / graph["path"],
            float(graph.get("saturation", -1.0)),
            component_before_saturation=bool(graph.get("component_first", False)),
        )
        k = u.shape[0]
    elif kind == "matrix":
        u = np.asarray(graph["u"], dtype=float)
        k = u.shape[0]
    else:
        raise ValueError(f"unknown graph kind {kind!r}")

    if "p0" in cfg:
        p0 = np.asarray(cfg["p0"], dtype=float)
    else:
        p0 = zipf_popularity(k, float(cfg.get("zipf_s", 0.7)))

    if "c" in cfg:
        c = np.asarray(cfg["c"], dtype=float)
    else:
        c = place_cache(p0, int(cfg.get("cache_size", max(1, k // 50))))

    n = int(cfg.get("n", 2))
    v_cfg = cfg.get("v", "uniform")
    v = None if (v_cfg is None or v_cfg == "uniform") else np.asarray(v_cfg, dtype=float)

    scenario = Scenario(
        u=u, c=c, p0=p0,
        alpha=float(cfg.get("alpha", 0.8)),
        n=n, v=v,
        q=float(cfg.get("q", 0.9)),
    )
    return scenario, stats


def save_scenario_npz(path, scenario: Scenario) -> None:
    """Persist a scenario to a single .npz file."""
    np.savez_compressed(
        path, u=scenario.u, c=scenario.c, p0=scenario.p0, v=scenario.v,
        alpha=scenario.alpha, n=scenario.n, q=scenario.q)


def load_scenario_npz(path) -> Scenario:
    with np.load(path) as z:
        return Scenario(
            u=z["u"], c=z["c"], p0=z["p0"], v=z["v"],
            alpha=float(z["alpha"]), n=int(z["n"]), q=float(z["q"]))

"""Seeded random instance families used by ``verify`` and the acceptance tests."""

from __future__ import annotations

import numpy as np

from .doptimal import LinearSensorModel
from .expdet import BlockEnsemble, RankOneEnsemble, random_block_ensemble
from .graphs import Edge, WeightedGraph


def instance_seed(master: int, family: int, index: int) -> int:
    """A 64-bit seed for instance ``index`` of ``family`` under ``master``."""
    state = np.random.SeedSequence([master, family, index]).generate_state(1, np.uint64)
    return int(state[0])


def rank_one(rng: np.random.Generator, max_n: int = 4, max_m: int = 10) -> RankOneEnsemble:
    n = int(rng.integers(1, max_n + 1))
    m = int(rng.integers(n, max_m + 1))
    U = rng.uniform(-1.0, 1.0, (n, m))
    V = rng.uniform(-1.0, 1.0, (n, m))
    return RankOneEnsemble(U, V, rng.uniform(0.0, 1.0, m))


def symmetric_blocks(
    rng: np.random.Generator, max_n: int = 4, max_k: int = 6, max_r: int = 3
) -> BlockEnsemble:
    n = int(rng.integers(1, max_n + 1))
    k = int(rng.integers(1, max_k + 1))
    ranks = rng.integers(1, max_r + 1, size=k).tolist()
    return random_block_ensemble(rng, n, ranks, symmetric=True)


def _weight(rng: np.random.Generator) -> float:
    # uniform on (0, 10]
    return 10.0 * (1.0 - rng.random())


def connected_graph(
    rng: np.random.Generator,
    max_vertices: int = 6,
    max_edges: int = 12,
    random_probs: bool = True,
) -> WeightedGraph:
    """Random spanning tree plus extra random edges (parallel edges possible)."""
    nv = int(rng.integers(2, max_vertices + 1))
    pairs = [(int(rng.integers(0, i)), i) for i in range(1, nv)]
    extra = int(rng.integers(0, max_edges - len(pairs) + 1))
    for _ in range(extra):
        a, b = rng.choice(nv, size=2, replace=False)
        pairs.append((int(a), int(b)))
    order = rng.permutation(len(pairs))
    edges = []
    for j in order:
        a, b = pairs[j]
        prob = float(rng.random()) if random_probs else 1.0
        edges.append(Edge(a, b, _weight(rng), prob))
    return WeightedGraph(nv, edges)


def block_graph(
    rng: np.random.Generator,
    max_vertices: int = 5,
    max_edges: int = 10,
    max_blocks: int = 5,
) -> WeightedGraph:
    base = connected_graph(rng, max_vertices, max_edges, random_probs=False)
    nb = int(rng.integers(1, max_blocks + 1))
    labels = rng.integers(0, nb, size=base.edge_count)
    block_p = rng.uniform(0.0, 1.0, nb)
    edges = [
        Edge(e.tail, e.head, e.weight, float(block_p[b]), int(b))
        for e, b in zip(base.edges, labels)
    ]
    return WeightedGraph(base.vertex_count, edges)


def sensor_model(rng: np.random.Generator, max_m: int = 8, max_n: int = 3) -> LinearSensorModel:
    n = int(rng.integers(1, max_n + 1))
    m = int(rng.integers(max(n, 2), max_m + 1))
    H = rng.normal(size=(m, n))
    return LinearSensorModel(H, rng.uniform(0.5, 2.0, m), rng.uniform(0.0, 1.0, m))

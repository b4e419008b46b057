"""Spanning trees of random edge-weighted graphs.

The weighted tree count ``t_w(G)`` (sum over spanning trees of the product of
edge weights) is the determinant of the reduced weighted Laplacian
``A W A^T``. When edge i survives independently with probability ``p_i``,
the expected count is the count of the same graph with weights ``p_i w_i``.
When edges fail together in blocks, exact values come from enumerating block
states or the spanning trees themselves.
"""

from __future__ import annotations

import itertools
import math
import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from os import PathLike

import numpy as np

from . import expdet, linalg
from .errors import CapacityError, DomainError, ParseError
from .expdet import BlockEnsemble, RankOneEnsemble
from .linalg import Matrix

DEFAULT_MAX_EDGES = 16
DEFAULT_MAX_BLOCKS = 20


@dataclass(frozen=True)
class Edge:
    tail: int
    head: int
    weight: float = 1.0
    prob: float = 1.0
    block: int | None = None


class WeightedGraph:
    """Undirected multigraph on vertices ``0 .. vertex_count-1``.

    Parallel edges are allowed, self-loops are not. If any edge names a block,
    every edge must, and edges sharing a block must share a probability.
    """

    def __init__(self, vertex_count: int, edges: Iterable[Edge | Sequence]):
        if int(vertex_count) != vertex_count or vertex_count < 2:
            raise DomainError(f"vertex_count must be an integer >= 2, got {vertex_count}")
        self.vertex_count = int(vertex_count)
        self.edges: tuple[Edge, ...] = tuple(
            e if isinstance(e, Edge) else Edge(*e) for e in edges
        )
        self._validate()

    def _validate(self):
        for i, e in enumerate(self.edges):
            for v in (e.tail, e.head):
                if not 0 <= v < self.vertex_count:
                    raise DomainError(f"edge {i}: vertex {v} out of range")
            if e.tail == e.head:
                raise DomainError(f"edge {i}: self-loop at vertex {e.tail}")
            if not (math.isfinite(e.weight) and e.weight > 0):
                raise DomainError(f"edge {i}: weight must be positive, got {e.weight}")
            if not 0.0 <= e.prob <= 1.0:
                raise DomainError(f"edge {i}: prob must lie in [0, 1], got {e.prob}")
        tagged = [e.block is not None for e in self.edges]
        if any(tagged) and not all(tagged):
            raise DomainError("block ids must be given for all edges or none")
        block_prob: dict[int, float] = {}
        for i, e in enumerate(self.edges):
            if e.block is None:
                continue
            if block_prob.setdefault(e.block, e.prob) != e.prob:
                raise DomainError(
                    f"edge {i}: block {e.block} mixes probabilities "
                    f"{block_prob[e.block]} and {e.prob}"
                )

    def __repr__(self):
        return f"WeightedGraph(vertex_count={self.vertex_count}, edges={list(self.edges)!r})"

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def weights(self) -> np.ndarray:
        return np.array([e.weight for e in self.edges], dtype=np.float64)

    @property
    def probs(self) -> np.ndarray:
        return np.array([e.prob for e in self.edges], dtype=np.float64)

    @property
    def has_blocks(self) -> bool:
        return bool(self.edges) and self.edges[0].block is not None

    def block_ids(self) -> list[int]:
        """Distinct block ids, sorted."""
        return sorted({e.block for e in self.edges if e.block is not None})

    def with_edges(self, edges: Iterable[Edge]) -> WeightedGraph:
        return WeightedGraph(self.vertex_count, edges)


def reduced_incidence(
    g: WeightedGraph,
    removed_vertex: int = 0,
    orientation: str = "lower",
) -> Matrix:
    """Unweighted incidence matrix with the row of ``removed_vertex`` deleted.

    ``orientation="lower"`` puts +1 at the lower-numbered endpoint and -1 at
    the other; ``"given"`` puts +1 at ``tail`` and -1 at ``head``. Only
    ``A A^T`` enters any result, so the choice does not matter. A graph with
    no edges yields an ``n x 0`` array.
    """
    if not 0 <= removed_vertex < g.vertex_count:
        raise DomainError(f"removed_vertex {removed_vertex} is not a vertex")
    if orientation not in ("lower", "given"):
        raise DomainError(f"unknown orientation {orientation!r}")
    full = np.zeros((g.vertex_count, g.edge_count))
    for i, e in enumerate(g.edges):
        plus, minus = e.tail, e.head
        if orientation == "lower" and plus > minus:
            plus, minus = minus, plus
        full[plus, i] = 1.0
        full[minus, i] = -1.0
    return np.delete(full, removed_vertex, axis=0)


def weighted_incidence(g: WeightedGraph, removed_vertex: int = 0, orientation: str = "lower") -> Matrix:
    """``A_w = A sqrt(W)``."""
    return reduced_incidence(g, removed_vertex, orientation) * np.sqrt(g.weights)


def _ensemble(g: WeightedGraph, p, removed_vertex: int, orientation: str) -> RankOneEnsemble:
    Aw = weighted_incidence(g, removed_vertex, orientation)
    return RankOneEnsemble(Aw, Aw, p)


def weighted_tree_count(g: WeightedGraph, removed_vertex: int = 0, orientation: str = "lower") -> float:
    """``t_w(G) = det(A_w A_w^T)``; zero for a disconnected graph."""
    if g.edge_count == 0:
        return 0.0
    return linalg.det(weighted_laplacian(g, removed_vertex, orientation))


def weighted_laplacian(g: WeightedGraph, removed_vertex: int = 0, orientation: str = "lower") -> Matrix:
    """Reduced weighted Laplacian ``A W A^T``."""
    Aw = weighted_incidence(g, removed_vertex, orientation)
    return Aw @ Aw.T


def expected_tree_count(g: WeightedGraph, removed_vertex: int = 0, orientation: str = "lower") -> float:
    """Expected ``t_w`` when edge i survives independently with ``prob_i``.

    Equal to the tree count with every weight scaled by its probability.
    """
    if g.edge_count == 0:
        return 0.0
    return expdet.expected_det_closed_form(_ensemble(g, g.probs, removed_vertex, orientation))


def expected_tree_count_bruteforce(g: WeightedGraph, max_edges: int = DEFAULT_MAX_EDGES) -> float:
    """Expected ``t_w`` summed over all ``2^m`` surviving-edge patterns."""
    if g.edge_count > max_edges:
        raise CapacityError(f"{g.edge_count} edges exceed the brute-force cap of {max_edges}")
    if g.edge_count == 0:
        return 0.0
    return expdet.expected_det_bruteforce(_ensemble(g, g.probs, 0, "lower"), max_m=max_edges)


class _UnionFind:
    def __init__(self, size: int):
        self.parent = list(range(size))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        """Merge the sets of a and b; False if they were already joined."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def enumerate_spanning_trees(g: WeightedGraph, max_edges: int = DEFAULT_MAX_EDGES) -> list[tuple[int, ...]]:
    """Edge-index sets of all spanning trees, in colexicographic order.

    Each (V-1)-subset of edges is tested with union-find: it is a spanning
    tree iff it closes no cycle.
    """
    if g.edge_count > max_edges:
        raise CapacityError(f"{g.edge_count} edges exceed the enumeration cap of {max_edges}")
    n = g.vertex_count - 1
    ends = [(e.tail, e.head) for e in g.edges]
    trees = []
    for subset in expdet.colex_subsets(g.edge_count, n):
        uf = _UnionFind(g.vertex_count)
        if all(uf.union(*ends[i]) for i in subset):
            trees.append(subset)
    return trees


def tree_weight_sum(g: WeightedGraph, weights=None, max_edges: int = DEFAULT_MAX_EDGES) -> float:
    """Sum over enumerated spanning trees of the product of ``weights`` (default: edge weights)."""
    w = g.weights if weights is None else np.asarray(weights, dtype=np.float64)
    return linalg.fsum(
        math.prod(w[i] for i in tree) for tree in enumerate_spanning_trees(g, max_edges)
    )


def _block_index(g: WeightedGraph) -> tuple[list[int], list[int]]:
    if not g.has_blocks:
        raise DomainError("graph has no block partition")
    ids = g.block_ids()
    pos = {b: j for j, b in enumerate(ids)}
    return ids, [pos[e.block] for e in g.edges]


def block_ensemble(g: WeightedGraph, removed_vertex: int = 0) -> BlockEnsemble:
    """Group the columns of ``A_w`` by block; symmetric blocks ``U_i = V_i = A_i``."""
    ids, of = _block_index(g)
    Aw = weighted_incidence(g, removed_vertex)
    blocks = []
    probs = []
    for j in range(len(ids)):
        cols = [i for i, bj in enumerate(of) if bj == j]
        Ai = Aw[:, cols]
        blocks.append((Ai, Ai))
        probs.append(g.edges[cols[0]].prob)
    return BlockEnsemble(tuple(blocks), probs)


def _block_closed(g: WeightedGraph, max_edges: int) -> float:
    ids, of = _block_index(g)
    p = [0.0] * len(ids)
    for e, j in zip(g.edges, of):
        p[j] = e.prob
    w = g.weights
    terms = []
    for tree in enumerate_spanning_trees(g, max_edges):
        touched = [of[i] for i in tree]
        factor = 1.0
        for i, j in zip(tree, touched):
            factor *= _frac_power(p[j], touched.count(j)) * w[i]
        terms.append(factor)
    return linalg.fsum(terms)


def _frac_power(p: float, count: int) -> float:
    """``p ** (1/count)`` as ``exp(log(p)/count)``, with ``0 ** (1/count) = 0``."""
    if p == 0.0:
        return 0.0
    return math.exp(math.log(p) / count)


def block_expected_tree_count(
    g: WeightedGraph,
    method: str = "closed",
    max_edges: int = DEFAULT_MAX_EDGES,
    max_blocks: int = DEFAULT_MAX_BLOCKS,
) -> float:
    """Expected ``t_w`` when each block of edges survives or fails as a unit.

    ``"bruteforce"`` sums over block on/off states; ``"closed"`` sums over
    spanning trees T the product of ``p_b ** (1/n_b(T)) * w_e`` across the
    tree's edges, ``n_b(T)`` being the number of tree edges in block b.
    """
    if method == "closed":
        return _block_closed(g, max_edges)
    if method == "bruteforce":
        _block_index(g)
        if g.edge_count == 0:
            return 0.0
        return expdet.block_expected_det_bruteforce(block_ensemble(g), max_k=max_blocks)
    raise DomainError(f"unknown method {method!r}")


_FIELDS_RE = re.compile(r"\s+")


def parse_edge_list(text: str, source: str | None = None) -> WeightedGraph:
    """Parse ``tail head weight prob [block]`` lines; ``#`` starts a comment.

    The vertex count is one more than the largest id mentioned.
    """
    edges = []
    has_block = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = _FIELDS_RE.split(line)
        if len(fields) not in (4, 5):
            raise ParseError(f"expected 4 or 5 fields, got {len(fields)}", source, lineno)
        if has_block is None:
            has_block = len(fields) == 5
        elif has_block != (len(fields) == 5):
            raise ParseError("block column must be present on all lines or none", source, lineno)
        try:
            tail, head = int(fields[0]), int(fields[1])
            weight, prob = float(fields[2]), float(fields[3])
            block = int(fields[4]) if has_block else None
        except ValueError as exc:
            raise ParseError(str(exc), source, lineno) from None
        if tail < 0 or head < 0:
            raise ParseError("vertex ids must be nonnegative", source, lineno)
        edges.append((lineno, Edge(tail, head, weight, prob, block)))
    if not edges:
        raise ParseError("no edges", source)
    vertex_count = max(max(e.tail, e.head) for _, e in edges) + 1
    try:
        return WeightedGraph(vertex_count, [e for _, e in edges])
    except DomainError as exc:
        hit = re.match(r"edge (\d+):", str(exc))
        line = edges[int(hit.group(1))][0] if hit else None
        raise ParseError(str(exc), source, line) from None


def read_edge_list(path: str | PathLike) -> WeightedGraph:
    with open(path) as fh:
        return parse_edge_list(fh.read(), str(path))


def complete_graph(vertex_count: int, weight: float = 1.0, prob: float = 1.0) -> WeightedGraph:
    return WeightedGraph(
        vertex_count,
        [Edge(a, b, weight, prob) for a, b in itertools.combinations(range(vertex_count), 2)],
    )

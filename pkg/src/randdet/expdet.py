"""Expected determinant of a Bernoulli-weighted sum of rank-one matrices.

For independent indicators ``pi_i ~ Bernoulli(p_i)`` the expectation

    E[det(sum_i pi_i u_i v_i^T)]

equals ``det(U diag(p) V^T)``. This module computes that closed form and the
exhaustive routes it is checked against: enumeration of all ``2^m`` outcomes,
the n-subset (Cauchy-Binet) sum, and Monte Carlo sampling. Blocks of rank-r
terms sharing one indicator get an exhaustive expectation and the
``det(sum p_i U_i V_i^T)`` lower bound.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from . import linalg
from .errors import CapacityError, DimensionError, DomainError
from .linalg import Matrix, Vector

DEFAULT_MAX_TERMS = 20
MAX_SUBSETS = 10**6
# outcomes evaluated per vectorized batch
_CHUNK = 1 << 14


@dataclass(frozen=True)
class RankOneEnsemble:
    """Column families ``u_i`` (of ``U``), ``v_i`` (of ``V``) with probabilities ``p``.

    ``underdetermined`` is set when ``m < n``; every realization is then
    singular and all expectations are zero, which is legal.
    """

    U: Matrix
    V: Matrix
    p: Vector
    underdetermined: bool = field(init=False)

    def __post_init__(self):
        U = linalg.as_matrix(self.U, "U")
        V = linalg.as_matrix(self.V, "V")
        if U.shape != V.shape:
            raise DimensionError(f"U {U.shape} and V {V.shape} must share a shape")
        p = linalg.as_probabilities(self.p, U.shape[1])
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "underdetermined", U.shape[1] < U.shape[0])

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def m(self) -> int:
        return self.U.shape[1]

    def outer_products(self) -> np.ndarray:
        """Stack of ``u_i v_i^T``, shape ``(m, n, n)``."""
        return np.einsum("ai,bi->iab", self.U, self.V)

    def realization(self, pi: ArrayLike) -> Matrix:
        """``U diag(pi) V^T`` for one indicator vector (or any weights)."""
        return (self.U * np.asarray(pi, dtype=np.float64)) @ self.V.T


@dataclass(frozen=True)
class BlockEnsemble:
    """Blocks ``(U_i, V_i)`` of shape ``n x r_i``; block i is kept with probability ``p_i``."""

    blocks: tuple[tuple[Matrix, Matrix], ...]
    p: Vector

    def __post_init__(self):
        if len(self.blocks) < 1:
            raise DimensionError("a block ensemble needs at least one block")
        checked = []
        n = None
        for i, (Ui, Vi) in enumerate(self.blocks):
            Ui = linalg.as_matrix(Ui, f"U_{i}")
            Vi = linalg.as_matrix(Vi, f"V_{i}")
            if Ui.shape != Vi.shape:
                raise DimensionError(f"block {i}: U {Ui.shape} and V {Vi.shape} differ")
            if n is None:
                n = Ui.shape[0]
            elif Ui.shape[0] != n:
                raise DimensionError(f"block {i} has {Ui.shape[0]} rows, expected {n}")
            checked.append((Ui, Vi))
        object.__setattr__(self, "blocks", tuple(checked))
        object.__setattr__(self, "p", linalg.as_probabilities(self.p, len(checked)))

    @property
    def n(self) -> int:
        return self.blocks[0][0].shape[0]

    @property
    def k(self) -> int:
        return len(self.blocks)

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(Ui.shape[1] for Ui, _ in self.blocks)

    def block_products(self) -> np.ndarray:
        """Stack of ``U_i V_i^T``, shape ``(k, n, n)``."""
        return np.stack([Ui @ Vi.T for Ui, Vi in self.blocks])

    @classmethod
    def from_rank_one(cls, e: RankOneEnsemble) -> BlockEnsemble:
        blocks = tuple((e.U[:, [i]], e.V[:, [i]]) for i in range(e.m))
        return cls(blocks, e.p)


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    samples: int
    seed: int


def expected_det_closed_form(e: RankOneEnsemble) -> float:
    """``det(U diag(p) V^T)``, the exact expectation."""
    return linalg.det((e.U * e.p) @ e.V.T)


def _outcome_sum(terms: np.ndarray, p: Vector, max_terms: int, what: str) -> float:
    """Sum over all 2^k on/off states of P(state) * det(sum of the active terms)."""
    k, n, _ = terms.shape
    if k > max_terms:
        raise CapacityError(
            f"{what}: 2^{k} outcomes exceed the cap of 2^{max_terms}; "
            "use the closed form or Monte Carlo"
        )
    flat = terms.reshape(k, n * n)
    bits = np.arange(k)
    parts: list[float] = []
    for start in range(0, 1 << k, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, 1 << k), dtype=np.int64)
        states = ((idx[:, None] >> bits) & 1).astype(np.float64)
        weights = np.prod(np.where(states > 0, p, 1.0 - p), axis=1)
        dets = linalg.det_stack((states @ flat).reshape(-1, n, n))
        parts.extend((weights * dets).tolist())
    return linalg.fsum(parts)


def expected_det_bruteforce(e: RankOneEnsemble, max_m: int = DEFAULT_MAX_TERMS) -> float:
    """The expectation by enumerating all ``2^m`` indicator vectors."""
    return _outcome_sum(e.outer_products(), e.p, max_m, "expected_det_bruteforce")


def colex_subsets(m: int, k: int) -> Iterator[tuple[int, ...]]:
    """k-subsets of ``range(m)`` in colexicographic order."""
    if k == 0:
        yield ()
        return
    for top in range(k - 1, m):
        for rest in colex_subsets(top, k - 1):
            yield rest + (top,)


def expected_det_cauchy_binet(e: RankOneEnsemble, max_subsets: int = MAX_SUBSETS) -> float:
    """Sum over n-subsets Q of ``det(sum_{j in Q} p_j u_j v_j^T)``."""
    n, m = e.n, e.m
    count = math.comb(m, n)
    if count > max_subsets:
        raise CapacityError(f"C({m},{n}) = {count} subsets exceed the cap of {max_subsets}")
    if count == 0:
        return 0.0
    Up = e.U * e.p
    parts: list[float] = []
    subsets = colex_subsets(m, n)
    while True:
        batch = list(itertools.islice(subsets, _CHUNK))
        if not batch:
            break
        idx = np.array(batch, dtype=np.int64)
        left = np.transpose(Up[:, idx], (1, 0, 2))
        right = np.transpose(e.V[:, idx], (1, 2, 0))
        parts.extend(linalg.det_stack(left @ right).tolist())
    return linalg.fsum(parts)


def expected_det_monte_carlo(e: RankOneEnsemble, samples: int, seed: int) -> McEstimate:
    """Sample mean of ``det(U Pi V^T)`` over ``samples`` Bernoulli draws.

    The stream comes from numpy's PCG64 seeded through ``SeedSequence(seed)``,
    drawn in fixed-size chunks, so a seed determines the result bit for bit.
    """
    if samples < 2:
        raise DomainError("Monte Carlo needs at least 2 samples")
    if not 0 <= seed < 2**64:
        raise DomainError("seed must be a 64-bit unsigned integer")
    rng = np.random.default_rng(seed)
    n = e.n
    flat = e.outer_products().reshape(e.m, n * n)
    values = np.empty(samples)
    for start in range(0, samples, _CHUNK):
        stop = min(start + _CHUNK, samples)
        pi = (rng.random((stop - start, e.m)) < e.p).astype(np.float64)
        values[start:stop] = linalg.det_stack((pi @ flat).reshape(-1, n, n))
    # shifting by the first draw keeps a degenerate sample exactly constant
    shift = float(values[0])
    dev = values - shift
    mean_dev = linalg.fsum(dev.tolist()) / samples
    var = linalg.fsum(((dev - mean_dev) ** 2).tolist()) / (samples - 1)
    return McEstimate(
        mean=shift + mean_dev,
        std_error=math.sqrt(var / samples),
        samples=samples,
        seed=seed,
    )


def block_expected_det_bruteforce(b: BlockEnsemble, max_k: int = DEFAULT_MAX_TERMS) -> float:
    """Exact expectation over the ``2^k`` block on/off states."""
    return _outcome_sum(b.block_products(), b.p, max_k, "block_expected_det_bruteforce")


def block_lower_bound(b: BlockEnsemble) -> float:
    """``det(sum_i p_i U_i V_i^T)``.

    Bounds the exact expectation from below whenever every n-column minor
    product ``det(U_Q) det(V_Q)`` is nonnegative, e.g. when ``V_i = U_i``.
    """
    return linalg.det(np.tensordot(b.p, b.block_products(), axes=1))


@dataclass
class BoundViolation:
    trial: int
    bound: float
    exact: float
    blocks: BlockEnsemble


def random_block_ensemble(
    rng: np.random.Generator,
    n: int,
    ranks: Sequence[int],
    symmetric: bool,
) -> BlockEnsemble:
    blocks = []
    for r in ranks:
        Ui = rng.uniform(-1.0, 1.0, (n, r))
        Vi = Ui.copy() if symmetric else rng.uniform(-1.0, 1.0, (n, r))
        blocks.append((Ui, Vi))
    return BlockEnsemble(tuple(blocks), rng.uniform(0.0, 1.0, len(ranks)))


def search_lower_bound_violations(
    seed: int,
    trials: int = 200,
    max_n: int = 4,
    max_k: int = 6,
    max_r: int = 3,
    atol: float = 1e-10,
) -> list[BoundViolation]:
    """Randomized search for general (``V_i != U_i``) ensembles where the bound fails.

    Findings are returned for reporting; they are not errors.
    """
    rng = np.random.default_rng(seed)
    found = []
    for t in range(trials):
        n = int(rng.integers(1, max_n + 1))
        k = int(rng.integers(1, max_k + 1))
        ranks = rng.integers(1, max_r + 1, size=k).tolist()
        b = random_block_ensemble(rng, n, ranks, symmetric=False)
        bound = block_lower_bound(b)
        exact = block_expected_det_bruteforce(b)
        if bound > exact + atol:
            found.append(BoundViolation(t, bound, exact, b))
    return found

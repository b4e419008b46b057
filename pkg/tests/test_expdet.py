import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randdet import expdet
from randdet.errors import CapacityError, DimensionError, DomainError
from randdet.expdet import BlockEnsemble, RankOneEnsemble

UV = [[1, 0, 1], [0, 1, 1]]


def enumerate_expectation(U, V, p):
    """Definition of the expectation, evaluated outcome by outcome."""
    U, V, p = np.asarray(U, float), np.asarray(V, float), np.asarray(p, float)
    total = 0.0
    for s in itertools.product((0, 1), repeat=len(p)):
        prob = math.prod(pi if si else 1 - pi for pi, si in zip(p, s))
        total += prob * np.linalg.det((U * np.array(s)) @ V.T)
    return total


def test_example_ensemble_oracle_value():
    # 8 outcomes: all on -> det [[2,1],[1,2]] = 3; pairs -> 1 each; others 0
    assert enumerate_expectation(UV, UV, [0.5] * 3) == pytest.approx(0.75, abs=1e-15)
    assert (3 + 1 + 1 + 1) / 8 == 0.75


def test_scalar_example():
    e = RankOneEnsemble([[2.0]], [[3.0]], [0.5])
    assert expdet.expected_det_closed_form(e) == 3.0
    assert expdet.expected_det_bruteforce(e) == 3.0
    assert expdet.expected_det_cauchy_binet(e) == pytest.approx(3.0, rel=1e-15)


def test_two_by_three_example_all_routes():
    e = RankOneEnsemble(UV, UV, [0.5, 0.5, 0.5])
    assert expdet.expected_det_closed_form(e) == pytest.approx(0.75, abs=1e-15)
    assert expdet.expected_det_bruteforce(e) == pytest.approx(0.75, abs=1e-15)
    assert expdet.expected_det_cauchy_binet(e) == pytest.approx(0.75, abs=1e-15)


def test_all_ones_probabilities_give_plain_det():
    rng = np.random.default_rng(3)
    U, V = rng.uniform(-1, 1, (3, 5)), rng.uniform(-1, 1, (3, 5))
    e = RankOneEnsemble(U, V, np.ones(5))
    assert expdet.expected_det_closed_form(e) == pytest.approx(np.linalg.det(U @ V.T), rel=1e-12)


def test_zero_probabilities_give_zero():
    rng = np.random.default_rng(4)
    e = RankOneEnsemble(rng.normal(size=(2, 4)), rng.normal(size=(2, 4)), np.zeros(4))
    assert expdet.expected_det_bruteforce(e) == 0.0
    assert expdet.expected_det_closed_form(e) == 0.0


def test_underdetermined_flag():
    e = RankOneEnsemble(np.ones((3, 2)), np.ones((3, 2)), [0.3, 0.4])
    assert e.underdetermined
    assert expdet.expected_det_closed_form(e) == 0.0
    assert expdet.expected_det_cauchy_binet(e) == 0.0


def test_construction_errors():
    with pytest.raises(DimensionError):
        RankOneEnsemble(np.ones((2, 3)), np.ones((3, 2)), [0.5] * 3)
    with pytest.raises(DimensionError):
        RankOneEnsemble(np.ones((2, 3)), np.ones((2, 3)), [0.5] * 2)
    with pytest.raises(DomainError):
        RankOneEnsemble(np.ones((2, 3)), np.ones((2, 3)), [0.5, 1.5, 0.1])


def test_bruteforce_cap():
    e = RankOneEnsemble(np.ones((1, 5)), np.ones((1, 5)), [0.5] * 5)
    with pytest.raises(CapacityError):
        expdet.expected_det_bruteforce(e, max_m=4)


def test_cauchy_binet_guard():
    e = RankOneEnsemble(np.ones((3, 30)), np.ones((3, 30)), [0.5] * 30)
    with pytest.raises(CapacityError):
        expdet.expected_det_cauchy_binet(e, max_subsets=1000)


def test_cauchy_binet_single_subset_and_scalar():
    rng = np.random.default_rng(5)
    U, V, p = rng.normal(size=(3, 3)), rng.normal(size=(3, 3)), rng.random(3)
    e = RankOneEnsemble(U, V, p)
    assert expdet.expected_det_cauchy_binet(e) == pytest.approx(
        np.linalg.det((U * p) @ V.T), rel=1e-12
    )
    u, v, q = rng.normal(size=6), rng.normal(size=6), rng.random(6)
    e1 = RankOneEnsemble(u[None], v[None], q)
    assert expdet.expected_det_cauchy_binet(e1) == pytest.approx(float(np.sum(q * u * v)), rel=1e-12)


def test_cauchy_binet_random_two_by_four():
    rng = np.random.default_rng(6)
    e = RankOneEnsemble(rng.normal(size=(2, 4)), rng.normal(size=(2, 4)), rng.random(4))
    assert expdet.expected_det_cauchy_binet(e) == pytest.approx(
        expdet.expected_det_closed_form(e), rel=1e-10
    )


def test_colex_order():
    assert list(expdet.colex_subsets(4, 2)) == [(0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3)]
    subsets = list(expdet.colex_subsets(7, 3))
    assert len(subsets) == math.comb(7, 3)
    assert subsets == sorted(subsets, key=lambda s: tuple(reversed(s)))


ensembles = st.tuples(st.integers(1, 4), st.integers(0, 8), st.integers(0, 2**32 - 1))


def _ensemble(case):
    n, extra, seed = case
    m = min(n + extra, 12)
    rng = np.random.default_rng(seed)
    return RankOneEnsemble(
        rng.uniform(-1, 1, (n, m)), rng.uniform(-1, 1, (n, m)), rng.uniform(0, 1, m)
    )


@settings(max_examples=80, deadline=None)
@given(ensembles)
def test_closed_form_matches_enumeration(case):
    e = _ensemble(case)
    bf = expdet.expected_det_bruteforce(e)
    assert abs(expdet.expected_det_closed_form(e) - bf) <= 1e-9 * max(1.0, abs(bf))


@settings(max_examples=30, deadline=None)
@given(st.tuples(st.integers(1, 3), st.integers(0, 4), st.integers(0, 2**32 - 1)))
def test_bruteforce_matches_independent_loop(case):
    e = _ensemble(case)
    ref = enumerate_expectation(e.U, e.V, e.p)
    assert expdet.expected_det_bruteforce(e) == pytest.approx(ref, rel=1e-10, abs=1e-13)


@settings(max_examples=80, deadline=None)
@given(ensembles)
def test_cauchy_binet_matches_closed_form(case):
    e = _ensemble(case)
    closed = expdet.expected_det_closed_form(e)
    assert expdet.expected_det_cauchy_binet(e) == pytest.approx(closed, rel=1e-9, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(ensembles, st.integers(0, 11))
def test_closed_form_affine_in_each_probability(case, which):
    e = _ensemble(case)
    i = which % e.m
    values = []
    for q in (0.0, 0.5, 1.0):
        p = e.p.copy()
        p[i] = q
        values.append(expdet.expected_det_closed_form(RankOneEnsemble(e.U, e.V, p)))
    assert abs(values[1] - 0.5 * (values[0] + values[2])) <= 1e-12


def test_monte_carlo_degenerate_cases():
    rng = np.random.default_rng(8)
    U, V = rng.normal(size=(2, 3)), rng.normal(size=(2, 3))
    est = expdet.expected_det_monte_carlo(RankOneEnsemble(U, V, np.ones(3)), 100, seed=1)
    assert est.mean == pytest.approx(np.linalg.det(U @ V.T), rel=1e-12)
    assert est.std_error == 0.0
    est = expdet.expected_det_monte_carlo(RankOneEnsemble(U, V, np.zeros(3)), 100, seed=1)
    assert est.mean == 0.0 and est.std_error == 0.0


@pytest.mark.parametrize("seed", [0, 1, 2**63 + 5])
def test_monte_carlo_within_four_standard_errors(seed):
    e = RankOneEnsemble(UV, UV, [0.5] * 3)
    est = expdet.expected_det_monte_carlo(e, 10**5, seed)
    assert abs(est.mean - 0.75) <= 4 * est.std_error
    assert est.samples == 10**5 and est.seed == seed


def test_monte_carlo_bit_identical():
    rng = np.random.default_rng(9)
    e = RankOneEnsemble(rng.normal(size=(3, 6)), rng.normal(size=(3, 6)), rng.random(6))
    a = expdet.expected_det_monte_carlo(e, 50_000, 123)
    b = expdet.expected_det_monte_carlo(e, 50_000, 123)
    assert a == b


def test_monte_carlo_argument_checks():
    e = RankOneEnsemble([[1.0]], [[1.0]], [0.5])
    with pytest.raises(DomainError):
        expdet.expected_det_monte_carlo(e, 1, 0)
    with pytest.raises(DomainError):
        expdet.expected_det_monte_carlo(e, 10, -1)


def test_block_identity_example():
    b = BlockEnsemble(((np.eye(2), np.eye(2)),), [0.5])
    assert expdet.block_expected_det_bruteforce(b) == pytest.approx(0.5, abs=1e-15)
    assert expdet.block_lower_bound(b) == pytest.approx(0.25, abs=1e-15)


def test_block_rank_one_degenerates_to_rank_one_case():
    rng = np.random.default_rng(10)
    e = RankOneEnsemble(rng.normal(size=(3, 7)), rng.normal(size=(3, 7)), rng.random(7))
    b = BlockEnsemble.from_rank_one(e)
    assert b.ranks == (1,) * 7
    assert expdet.block_expected_det_bruteforce(b) == pytest.approx(
        expdet.expected_det_bruteforce(e), rel=1e-12, abs=1e-15
    )
    # with rank-one blocks the bound is the closed form, hence tight
    assert expdet.block_lower_bound(b) == pytest.approx(expdet.expected_det_closed_form(e), rel=1e-12)


def test_block_bound_tight_with_all_ones():
    rng = np.random.default_rng(11)
    b = expdet.random_block_ensemble(rng, 3, [2, 1, 3], symmetric=False)
    b = BlockEnsemble(b.blocks, np.ones(3))
    assert expdet.block_lower_bound(b) == pytest.approx(
        expdet.block_expected_det_bruteforce(b), rel=1e-12, abs=1e-15
    )


def test_block_cap_and_shapes():
    blocks = tuple((np.eye(2), np.eye(2)) for _ in range(4))
    with pytest.raises(CapacityError):
        expdet.block_expected_det_bruteforce(BlockEnsemble(blocks, [0.5] * 4), max_k=3)
    with pytest.raises(DimensionError):
        BlockEnsemble(((np.eye(2), np.eye(3)),), [0.5])
    with pytest.raises(DimensionError):
        BlockEnsemble(((np.eye(2), np.eye(2)), (np.ones((3, 1)), np.ones((3, 1)))), [0.5, 0.5])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_lower_bound_holds_for_symmetric_blocks(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    ranks = rng.integers(1, 4, size=int(rng.integers(1, 7))).tolist()
    b = expdet.random_block_ensemble(rng, n, ranks, symmetric=True)
    assert expdet.block_lower_bound(b) <= expdet.block_expected_det_bruteforce(b) + 1e-10


def test_general_search_reports_without_raising():
    found = expdet.search_lower_bound_violations(seed=2024, trials=60)
    for v in found:
        assert v.bound > v.exact
        # symmetric inputs never appear: every reported case has V != U somewhere
        assert any(not np.array_equal(U, V) for U, V in v.blocks.blocks)

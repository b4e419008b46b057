"""Randomized oracle cross-checks over seeded instance families.

Every library call goes through its module attribute, so a patched (or
broken) implementation is what gets checked.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Callable, Iterator
from dataclasses import dataclass, field

import numpy as np

from . import doptimal, expdet, graphs, instances

# (rank-one, graphs, symmetric blocks, block graphs, sensor models)
SIZES = {
    "small": (50, 25, 50, 15, 5),
    "medium": (200, 100, 200, 50, 20),
}


@dataclass
class CheckResult:
    name: str
    passed: bool
    max_dev: float
    instances: int
    tolerance: float
    failing_seed: int | None = None
    notes: dict = field(default_factory=dict)


def rel_dev(value: float, reference: float) -> float:
    scale = max(abs(value), abs(reference))
    return 0.0 if scale == 0.0 else abs(value - reference) / scale


def scaled_dev(value: float, reference: float) -> float:
    return abs(value - reference) / max(1.0, abs(reference))


def _seeds(master: int, family: int, count: int) -> Iterator[tuple[int, np.random.Generator]]:
    for i in range(count):
        s = instances.instance_seed(master, family, i)
        yield s, np.random.default_rng(s)


def _run(
    name: str,
    master: int,
    family: int,
    count: int,
    tol: float,
    deviation: Callable[[np.random.Generator], float],
) -> CheckResult:
    worst = 0.0
    failing = None
    for s, rng in _seeds(master, family, count):
        try:
            dev = deviation(rng)
        except Exception:  # a crash on an instance is a failed check
            dev = math.inf
        if not math.isfinite(dev):
            dev = math.inf
        if dev > worst:
            worst = dev
        if dev > tol and failing is None:
            failing = s
    return CheckResult(name, failing is None, worst, count, tol, failing)


def closed_form_vs_enumeration(rng) -> float:
    e = instances.rank_one(rng)
    return scaled_dev(expdet.expected_det_closed_form(e), expdet.expected_det_bruteforce(e))


def cauchy_binet(rng) -> float:
    e = instances.rank_one(rng)
    return rel_dev(expdet.expected_det_cauchy_binet(e), expdet.expected_det_closed_form(e))


def matrix_tree(rng) -> float:
    g = instances.connected_graph(rng, random_probs=False)
    return rel_dev(graphs.weighted_tree_count(g), graphs.tree_weight_sum(g))


def expected_trees(rng) -> float:
    g = instances.connected_graph(rng)
    return rel_dev(graphs.expected_tree_count(g), graphs.expected_tree_count_bruteforce(g))


def block_bound_excess(rng) -> float:
    """Amount by which the bound exceeds the exact value (0 when it holds)."""
    b = instances.symmetric_blocks(rng)
    return max(0.0, expdet.block_lower_bound(b) - expdet.block_expected_det_bruteforce(b))


def block_tree_methods(rng) -> float:
    g = instances.block_graph(rng)
    return rel_dev(
        graphs.block_expected_tree_count(g, "closed"),
        graphs.block_expected_tree_count(g, "bruteforce"),
    )


def finite_difference_gradient(model, p, h: float = 1e-6) -> np.ndarray:
    fd = np.empty(p.size)
    for i in range(p.size):
        up, down = p.copy(), p.copy()
        up[i] += h
        down[i] -= h
        fd[i] = (doptimal.logdet_objective(model, up) - doptimal.logdet_objective(model, down)) / (2 * h)
    return fd


def gradient(rng) -> float:
    model = instances.sensor_model(rng)
    p = rng.uniform(0.2, 0.8, model.m)
    g = doptimal.logdet_gradient(model, p)
    fd = finite_difference_gradient(model, p)
    # normwise: componentwise relative error is floored by rounding for tiny entries
    return float(np.max(np.abs(g - fd)) / np.max(np.abs(g)))


def best_boolean_logdet(model, k: int) -> float:
    return max(
        doptimal.logdet_objective(model, doptimal.indicator(c, model.m))
        for c in itertools.combinations(range(model.m), k)
    )


def relaxation(rng) -> float:
    """Shortfall of the relaxed optimum below the best k-subset, or a non-ascent step."""
    model = instances.sensor_model(rng)
    k = int(rng.integers(model.n, model.m + 1))
    res = doptimal.select_sensors(model, k)
    values = [v for _, v in res.objective_trace]
    if any(b < a for a, b in zip(values, values[1:])):
        return math.inf
    if abs(res.probs.sum() - k) > 1e-8:
        return math.inf
    return max(0.0, best_boolean_logdet(model, k) - res.objective)


def run_battery(seed: int, size: str = "small") -> list[CheckResult]:
    n_r1, n_g, n_b, n_bg, n_s = SIZES[size]
    checks = [
        _run("closed_form_vs_enumeration", seed, 1, n_r1, 1e-9, closed_form_vs_enumeration),
        _run("cauchy_binet_equivalence", seed, 1, n_r1, 1e-9, cauchy_binet),
        _run("matrix_tree", seed, 2, n_g, 1e-9, matrix_tree),
        _run("expected_tree_count", seed, 3, n_g, 1e-9, expected_trees),
        _run("block_lower_bound_symmetric", seed, 4, n_b, 1e-10, block_bound_excess),
        _run("block_tree_count_agreement", seed, 5, n_bg, 1e-9, block_tree_methods),
        _run("gradient_check", seed, 6, n_s, 1e-5, gradient),
        _run("relaxation_dominance", seed, 7, n_s, 1e-9, relaxation),
    ]
    search_seed = instances.instance_seed(seed, 8, 0)
    found = expdet.search_lower_bound_violations(search_seed, trials=n_b)
    checks[4].notes = {
        "general_search_seed": search_seed,
        "general_search_trials": n_b,
        "general_search_violations": len(found),
    }
    return checks

"""Command-line front end.

Subcommands ``expdet``, ``trees``, ``select`` and ``verify`` print a report
as ``key=value`` lines (or one JSON object with ``--json``).

Exit codes: 0 success, 1 verification failure, 2 bad input, 3 capacity or
singularity error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field

from . import doptimal, expdet, graphs, linalg, verify
from .errors import (
    CapacityError,
    DimensionError,
    DomainError,
    ParseError,
    SingularityError,
)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INPUT = 2
EXIT_CAPACITY = 3

MAX_BRUTE_ENV = "EXPDET_MAX_BRUTE"


@dataclass
class RunReport:
    command: str
    inputs: dict[str, str] = field(default_factory=dict)
    result: dict[str, object] = field(default_factory=dict)
    checks: list[dict[str, object]] = field(default_factory=list)
    elapsed_ms: float = 0.0

    def as_dict(self) -> dict:
        d = {"command": self.command, "inputs": self.inputs, "result": self.result}
        if self.command == "verify":
            d["checks"] = self.checks
        d["elapsed_ms"] = self.elapsed_ms
        return d

    def lines(self) -> list[str]:
        out = [f"command={self.command}"]
        out += [f"input.{k}={v}" for k, v in self.inputs.items()]
        out += [f"result.{k}={_fmt(v)}" for k, v in self.result.items()]
        for c in self.checks:
            name = c["name"]
            out += [f"check.{name}.{k}={_fmt(v)}" for k, v in c.items() if k != "name"]
        out.append(f"elapsed_ms={self.elapsed_ms:.3f}")
        return out


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if not math.isfinite(v):
            raise ValueError(f"non-finite report value {v}")
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ",".join(_fmt(x) for x in v)
    if v is None:
        return "none"
    return str(v)


def _brute_cap(default: int) -> int:
    raw = os.environ.get(MAX_BRUTE_ENV)
    if raw is None:
        return default
    try:
        cap = int(raw)
    except ValueError:
        raise DomainError(f"{MAX_BRUTE_ENV} must be an integer, got {raw!r}") from None
    if cap < 0:
        raise DomainError(f"{MAX_BRUTE_ENV} must be nonnegative")
    return cap


def _deviation(report: RunReport, label: str, value: float, reference: float) -> None:
    report.result[f"{label}.abs_dev"] = abs(value - reference)
    report.result[f"{label}.rel_dev"] = verify.rel_dev(value, reference)


def cmd_expdet(args) -> RunReport:
    report = RunReport("expdet", {"u": args.u_file, "v": args.v_file, "p": args.p_file})
    U = linalg.read_csv_matrix(args.u_file)
    V = linalg.read_csv_matrix(args.v_file)
    p = linalg.read_csv_vector(args.p_file)
    e = expdet.RankOneEnsemble(U, V, p)
    closed = expdet.expected_det_closed_form(e)
    report.result["n"] = e.n
    report.result["m"] = e.m
    report.result["closed_form"] = closed
    if args.bruteforce:
        bf = expdet.expected_det_bruteforce(e, max_m=_brute_cap(expdet.DEFAULT_MAX_TERMS))
        report.result["bruteforce"] = bf
        _deviation(report, "bruteforce", closed, bf)
    if args.cauchy_binet:
        cb = expdet.expected_det_cauchy_binet(e)
        report.result["cauchy_binet"] = cb
        _deviation(report, "cauchy_binet", closed, cb)
    if args.mc is not None:
        est = expdet.expected_det_monte_carlo(e, args.mc, args.seed)
        report.result["mc.mean"] = est.mean
        report.result["mc.std_error"] = est.std_error
        report.result["mc.samples"] = est.samples
        report.result["mc.seed"] = est.seed
        _deviation(report, "mc", closed, est.mean)
    return report


def cmd_trees(args) -> RunReport:
    report = RunReport("trees", {"edges": args.edge_file})
    g = graphs.read_edge_list(args.edge_file)
    report.result["vertices"] = g.vertex_count
    report.result["edges"] = g.edge_count
    report.result["tree_count"] = graphs.weighted_tree_count(g)
    if args.expected or args.bruteforce:
        report.result["expected_tree_count"] = graphs.expected_tree_count(g)
    if args.bruteforce:
        bf = graphs.expected_tree_count_bruteforce(g, max_edges=_brute_cap(graphs.DEFAULT_MAX_EDGES))
        report.result["expected_tree_count_bruteforce"] = bf
        _deviation(report, "bruteforce", report.result["expected_tree_count"], bf)
    if args.blocks:
        if not g.has_blocks:
            raise DomainError(f"{args.edge_file}: --blocks needs a block column")
        closed = graphs.block_expected_tree_count(g, "closed", max_edges=_brute_cap(graphs.DEFAULT_MAX_EDGES))
        brute = graphs.block_expected_tree_count(
            g, "bruteforce", max_blocks=_brute_cap(graphs.DEFAULT_MAX_BLOCKS)
        )
        report.result["blocks"] = len(g.block_ids())
        report.result["block_closed"] = closed
        report.result["block_bruteforce"] = brute
        _deviation(report, "block", closed, brute)
    return report


def cmd_select(args) -> RunReport:
    inputs = {"H": args.H}
    if args.noise:
        inputs["noise"] = args.noise
    if args.survival:
        inputs["survival"] = args.survival
    report = RunReport("select", inputs)
    H = linalg.read_csv_matrix(args.H)
    noise = linalg.read_csv_matrix(args.noise) if args.noise else None
    survival = linalg.read_csv_vector(args.survival) if args.survival else None
    model = doptimal.LinearSensorModel(H, noise, survival)
    opts = doptimal.SolverOptions(max_iters=args.max_iters, step=args.step, tol=args.tol)
    res = doptimal.select_sensors(model, args.k, opts)
    trace = res.objective_trace
    report.result.update(
        {
            "m": model.m,
            "n": model.n,
            "k": args.k,
            "probs": [float(x) for x in res.probs],
            "selected": list(res.selected),
            "converged": res.converged,
            "iterations": trace[-1][0],
            "accepted_steps": len(trace) - 1,
            "objective_initial": trace[0][1],
            "objective_final": trace[-1][1],
            "det_relaxed": doptimal.expected_doptimality(model, res.probs),
            "det_rounded": doptimal.expected_doptimality(
                model, doptimal.indicator(res.selected, model.m)
            ),
        }
    )
    if survival is not None:
        report.result["expected_doptimality_survival"] = doptimal.expected_doptimality(model)
    return report


def cmd_verify(args) -> tuple[RunReport, bool]:
    report = RunReport("verify")
    report.result["seed"] = args.seed
    report.result["size"] = args.size
    ok = True
    for c in verify.run_battery(args.seed, args.size):
        ok &= c.passed
        entry = {
            "name": c.name,
            "status": "pass" if c.passed else "fail",
            "max_dev": c.max_dev if math.isfinite(c.max_dev) else sys.float_info.max,
            "tolerance": c.tolerance,
            "instances": c.instances,
        }
        if c.failing_seed is not None:
            entry["failing_seed"] = c.failing_seed
        entry.update(c.notes)
        report.checks.append(entry)
    report.result["passed"] = ok
    return report, ok


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit one JSON object")

    parser = argparse.ArgumentParser(
        prog="randdet",
        description="Expected determinants of random rank-one sums and their applications.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("expdet", parents=[common], help="expected determinant of a rank-one ensemble")
    p.add_argument("u_file", help="CSV matrix U (n x m)")
    p.add_argument("v_file", help="CSV matrix V (n x m)")
    p.add_argument("p_file", help="CSV row of m probabilities")
    p.add_argument("--bruteforce", action="store_true", help="add the 2^m enumeration")
    p.add_argument("--cauchy-binet", action="store_true", help="add the n-subset sum")
    p.add_argument("--mc", type=int, metavar="N", help="add a Monte Carlo estimate with N samples")
    p.add_argument("--seed", type=int, default=0, help="Monte Carlo seed (default 0)")
    p.set_defaults(func=cmd_expdet)

    p = sub.add_parser("trees", parents=[common], help="weighted spanning-tree counts")
    p.add_argument("edge_file", help="edge list: tail head weight prob [block]")
    p.add_argument("--expected", action="store_true", help="expected count under edge failures")
    p.add_argument("--bruteforce", action="store_true", help="add the 2^m enumeration")
    p.add_argument("--blocks", action="store_true", help="block-correlated expectation, both methods")
    p.set_defaults(func=cmd_trees)

    p = sub.add_parser("select", parents=[common], help="relaxed D-optimal sensor selection")
    p.add_argument("--H", required=True, help="CSV observation matrix (m x n)")
    p.add_argument("--noise", help="CSV variances row or m x m covariance (default identity)")
    p.add_argument("--survival", help="CSV row of sensor survival probabilities")
    p.add_argument("--k", type=int, required=True, help="number of sensors to select")
    p.add_argument("--max-iters", type=int, default=doptimal.SolverOptions.max_iters)
    p.add_argument("--step", type=float, default=doptimal.SolverOptions.step)
    p.add_argument("--tol", type=float, default=doptimal.SolverOptions.tol)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("verify", parents=[common], help="run the randomized oracle cross-checks")
    p.add_argument("--size", choices=sorted(verify.SIZES), default="small")
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_verify)
    return parser


def _emit(report: RunReport, as_json: bool, stream) -> None:
    if as_json:
        json.dump(report.as_dict(), stream, sort_keys=False)
        stream.write("\n")
    else:
        stream.write("\n".join(report.lines()) + "\n")


def main(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        outcome = args.func(args)
    except (ParseError, DimensionError, DomainError, OSError) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except (CapacityError, SingularityError) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_CAPACITY
    ok = True
    if isinstance(outcome, tuple):
        outcome, ok = outcome
    outcome.elapsed_ms = (time.perf_counter() - start) * 1000.0
    _emit(outcome, args.json, stdout)
    return EXIT_OK if ok else EXIT_VERIFY_FAILED


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

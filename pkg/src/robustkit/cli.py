"""Command-line front end: generate, solve, verify, benchmark, plot.

All file formats are deterministic for a fixed configuration and seed:
JSON is dumped with sorted keys, CSV cells use shortest-roundtrip float
formatting, and figures omit timestamp metadata.  Wall-clock timings are
therefore left out of reports unless explicitly requested.

Exit codes: 0 success / verification passed, 2 usage or malformed input,
3 infeasibility verdict / verification failed, 4 oracle budget exhausted.
Set ROBUSTKIT_LOG=debug|info|warning|error to control log verbosity.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .learners import (
    FplState,
    OgdState,
    RegretTrace,
    accumulate_reward,
    fpl_step,
    measure_regret,
    ogd_step,
    split_key,
    suboptimal_ball_max,
)
from .oracles import (
    RobustLpInstance,
    RobustQpInstance,
    RobustSdpInstance,
    build_problem,
    generate_instance,
    oracle_for,
)
from .robust_core import (
    CertifiedInfeasible,
    OracleBudgetError,
    RunReport,
    Solved,
    dual_perturbation_solve,
    dual_subgradient_solve,
)
from .uncertainty import BallSet
from .verify import check_epsilon_robust, worst_case_violation

SCHEMA_VERSION = 1
EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_BUDGET = 4

_FAMILIES = ("linear", "quadratic", "semidefinite")
_ALGORITHMS = ("subgradient", "perturbation")

log = logging.getLogger("robustkit")


def main(argv: Optional[Sequence[str]] = None) -> int:
    _configure_logging()
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except OracleBudgetError as exc:
        print(f"error: oracle budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (KeyError, ValueError, TypeError) as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE


def _configure_logging() -> None:
    level_name = os.environ.get("ROBUSTKIT_LOG", "warning").strip().lower()
    level = {"debug": logging.DEBUG, "info": logging.INFO, "warning": logging.WARNING,
             "error": logging.ERROR}.get(level_name)
    if level is None:
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(name)s %(levelname)s: %(message)s")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robustkit",
        description="Robust feasibility solving via repeated nominal oracle calls.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a random problem instance to JSON")
    gen.add_argument("--family", choices=_FAMILIES, required=True)
    gen.add_argument("--n", type=int, required=True, help="decision dimension")
    gen.add_argument("--m", type=int, required=True, help="number of constraints")
    gen.add_argument("--k", type=int, required=True, help="noise dimension per constraint")
    gen.add_argument("--sigma", type=float, default=1.0, help="noise mixing scale")
    gen.add_argument("--margin", type=float, default=0.3, help="worst-case slack of the planted point")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--infeasible", action="store_true", help="plant a contradiction instead (linear only)")
    gen.add_argument("--out", type=Path, required=True)
    gen.set_defaults(handler=cmd_generate)

    solve = sub.add_parser("solve", help="run a solver on an instance file")
    solve.add_argument("--instance", type=Path, required=True)
    solve.add_argument("--alg", choices=_ALGORITHMS, required=True)
    solve.add_argument("--eps", type=float, required=True, help="oracle accuracy target")
    solve.add_argument("--delta", type=float, default=0.1, help="failure probability (perturbation only)")
    solve.add_argument("--seed", type=int, default=0, help="perturbation seed (perturbation only)")
    solve.add_argument("--t-mode", choices=("formula", "derived"), default="formula",
                       help="how the perturbation round count is computed")
    solve.add_argument("--budget", type=int, default=None, help="override the oracle iteration budget")
    solve.add_argument("--out", type=Path, required=True, help="output directory")
    solve.add_argument("--plot", action="store_true", help="also render the convergence figure")
    solve.add_argument("--timing", action="store_true",
                       help="include wall time in the summary (breaks byte determinism)")
    solve.set_defaults(handler=cmd_solve)

    ver = sub.add_parser("verify", help="certify a solution's worst-case violations")
    ver.add_argument("--instance", type=Path, required=True)
    ver.add_argument("--solution", type=Path, required=True, help="summary.json from solve")
    ver.add_argument("--threshold", type=float, required=True)
    ver.add_argument("--out", type=Path, default=None, help="certificate JSON path")
    ver.set_defaults(handler=cmd_verify)

    bench = sub.add_parser("regret-bench", help="regret of the online learners vs the theory bound")
    bench.add_argument("--learner", choices=("ogd", "fpl"), required=True)
    bench.add_argument("--dims", type=int, default=5)
    bench.add_argument("--rounds", type=int, required=True)
    bench.add_argument("--seeds", type=int, default=50)
    bench.add_argument("--seed", type=int, default=0, help="base seed")
    bench.add_argument("--scale", type=float, default=1.0, help="reward vector norm")
    bench.add_argument("--eps-degradation", type=float, default=0.0,
                       help="per-step shortfall of the fpl maximizer")
    bench.add_argument("--out", type=Path, required=True)
    bench.set_defaults(handler=cmd_regret_bench)

    plot = sub.add_parser("plot", help="render convergence traces to an SVG figure")
    plot.add_argument("--trace", type=Path, action="append", required=True,
                      help="trace CSV from solve (repeatable)")
    plot.add_argument("--out", type=Path, required=True)
    plot.set_defaults(handler=cmd_plot)

    return parser


# ---------------------------------------------------------------------------
# generate


def cmd_generate(args: argparse.Namespace) -> int:
    if args.n < 1 or args.m < 1 or args.k < 1:
        raise ValueError("dimensions and constraint count must be positive")
    instance = generate_instance(
        args.family,
        dimension=args.n,
        num_constraints=args.m,
        noise_dimension=args.k,
        sigma=args.sigma,
        seed=args.seed,
        margin=args.margin,
        feasible=not args.infeasible,
    )
    payload = {
        "schema_version": SCHEMA_VERSION,
        "kind": "instance",
        "family": args.family,
        "config": {
            "dimension": args.n,
            "num_constraints": args.m,
            "noise_dimension": args.k,
            "sigma": args.sigma,
            "margin": args.margin,
            "seed": args.seed,
            "feasible": not args.infeasible,
        },
        "data": _instance_data(instance),
    }
    _dump_json(payload, args.out)
    log.info("wrote %s instance to %s", args.family, args.out)
    return EXIT_OK


def _instance_data(instance) -> dict:
    if isinstance(instance, RobustLpInstance):
        return {
            "rows": _listify(instance.rows),
            "offsets": _listify(instance.offsets),
            "mixing": _listify(instance.mixing),
        }
    if isinstance(instance, RobustQpInstance):
        return {
            "base": _listify(instance.base),
            "mixing": _listify(instance.mixing),
            "linear": _listify(instance.linear),
            "offsets": _listify(instance.offsets),
        }
    if isinstance(instance, RobustSdpInstance):
        return {
            "base": _listify(instance.base),
            "mixing": _listify(instance.mixing),
            "offsets": _listify(instance.offsets),
        }
    raise TypeError(f"unsupported instance type {type(instance).__name__}")


def load_instance(path: Path):
    """Read an instance JSON file back into its dataclass."""
    payload = json.loads(Path(path).read_text())
    if payload.get("kind") != "instance":
        raise ValueError(f"{path} is not an instance file")
    if payload.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {payload.get('schema_version')}")
    family = payload["family"]
    data = payload["data"]
    if family == "linear":
        instance = RobustLpInstance(
            np.array(data["rows"]), np.array(data["offsets"]), np.array(data["mixing"])
        )
    elif family == "quadratic":
        instance = RobustQpInstance(
            np.array(data["base"]), np.array(data["mixing"]),
            np.array(data["linear"]), np.array(data["offsets"]),
        )
    elif family == "semidefinite":
        instance = RobustSdpInstance(
            np.array(data["base"]), np.array(data["mixing"]), np.array(data["offsets"])
        )
    else:
        raise ValueError(f"unknown family {family!r}")
    return instance, payload


# ---------------------------------------------------------------------------
# solve


def cmd_solve(args: argparse.Namespace) -> int:
    instance, meta = load_instance(args.instance)
    family = meta["family"]
    problem = build_problem(instance)
    oracle = oracle_for(instance, args.eps, budget=args.budget)

    if args.alg == "subgradient":
        outcome = dual_subgradient_solve(problem, oracle, args.eps)
    else:
        outcome = dual_perturbation_solve(
            problem, oracle, args.eps, args.delta, args.seed, args.t_mode
        )

    args.out.mkdir(parents=True, exist_ok=True)
    summary_path = args.out / "summary.json"
    summary = {
        "schema_version": SCHEMA_VERSION,
        "kind": "solution",
        "family": family,
        "instance": str(args.instance),
        "algorithm": args.alg,
        "epsilon": args.eps,
    }
    if args.alg == "perturbation":
        summary["delta"] = args.delta
        summary["seed"] = args.seed
        summary["rounds_mode"] = args.t_mode

    if isinstance(outcome, CertifiedInfeasible):
        cert = outcome.certificate
        summary.update(
            verdict="infeasible",
            at_round=outcome.at_round,
            certificate={
                "weights": _listify(cert.weights),
                "noise": _listify(cert.noise),
                "bound": float(cert.bound),
                "family": cert.family,
            },
        )
        _dump_json(summary, summary_path)
        log.info("infeasible at round %d with dual bound %.3e", outcome.at_round, cert.bound)
        print(f"infeasible: dual bound {cert.bound:.6g} at round {outcome.at_round}")
        return EXIT_INFEASIBLE

    report = outcome.report
    trace_path = args.out / "trace.csv"
    _write_trace(report, trace_path, include_timing=args.timing)
    summary.update(
        verdict="solved",
        rounds=report.rounds,
        step_size=report.step_size,
        decision=_listify(report.average),
        constants_estimated=report.constants_estimated,
        mean_violation_per_constraint=_listify(report.violations.mean(axis=0)),
        trace="trace.csv",
    )
    if args.timing:
        summary["wall_time_s"] = report.wall_time
    _dump_json(summary, summary_path)
    if args.plot:
        _render_traces([trace_path], args.out / "convergence.svg")
    log.info("solved in %d rounds (eta=%.4g)", report.rounds, report.step_size)
    print(f"solved: {report.rounds} rounds, decision written to {summary_path}")
    return EXIT_OK


def _write_trace(report: RunReport, path: Path, include_timing: bool = False) -> None:
    """Fixed-layout per-round trace.

    Columns: round index, max violation across constraints, running mean
    of that max, oracle inner iterations, then one violation column per
    constraint.  A wall-time column is appended only on request.
    """
    m = report.violations.shape[1]
    max_violation = report.max_violation_per_round()
    running = np.cumsum(max_violation) / np.arange(1, report.rounds + 1)
    header = ["t", "max_violation", "avg_max_violation", "oracle_inner_iterations"]
    header += [f"violation_{i}" for i in range(m)]
    if include_timing:
        header.append("wall_time_s")
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t in range(report.rounds):
            row = [
                str(t + 1),
                repr(float(max_violation[t])),
                repr(float(running[t])),
                str(int(report.oracle_iterations[t])),
            ]
            row += [repr(float(v)) for v in report.violations[t]]
            if include_timing:
                row.append(repr(float(report.wall_time)))
            writer.writerow(row)


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args: argparse.Namespace) -> int:
    instance, _ = load_instance(args.instance)
    solution = json.loads(args.solution.read_text())
    if solution.get("kind") != "solution":
        raise ValueError(f"{args.solution} is not a solution summary")
    if solution.get("verdict") != "solved":
        raise ValueError("solution summary does not contain a decision to verify")
    decision = np.array(solution["decision"], dtype=float)
    certificate = worst_case_violation(instance, decision)
    ok, report = check_epsilon_robust(certificate, args.threshold)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "kind": "certificate",
        "instance": str(args.instance),
        "solution": str(args.solution),
        "ok": ok,
        "violations": _listify(certificate.violations),
        "maximizers": _listify(certificate.maximizers),
        **report,
    }
    if args.out is not None:
        _dump_json(payload, args.out)
    if ok:
        print(f"pass: max worst-case violation {report['max_violation']:.6g} "
              f"<= threshold {args.threshold:.6g}")
        return EXIT_OK
    worst = max(report["offending"], key=lambda item: item["violation"])
    print(f"fail: constraint {worst['constraint']} violates by {worst['violation']:.6g} "
          f"(threshold {args.threshold:.6g})")
    return EXIT_INFEASIBLE


# ---------------------------------------------------------------------------
# regret-bench


def cmd_regret_bench(args: argparse.Namespace) -> int:
    if args.rounds < 1:
        raise ValueError(f"rounds must be positive, got {args.rounds}")
    if args.seeds < 1 or args.dims < 1:
        raise ValueError("seeds and dims must be positive")
    if args.scale <= 0:
        raise ValueError(f"scale must be positive, got {args.scale}")
    rows = []
    for s in range(args.seeds):
        if args.learner == "ogd":
            regret, bound = _ogd_run(args.dims, args.rounds, [args.seed, s], args.scale)
        else:
            regret, bound = _fpl_run(
                args.dims, args.rounds, args.seed, s, args.scale, args.eps_degradation
            )
        rows.append((s, regret, bound))
    with args.out.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "regret", "bound"])
        for s, regret, bound in rows:
            writer.writerow([str(s), repr(float(regret)), repr(float(bound))])
    exceeded = sum(1 for _, regret, bound in rows if regret > bound)
    print(f"{args.learner}: {len(rows)} runs, {exceeded} above the bound")
    return EXIT_OK


def _reward_sequence(rng: np.random.Generator, rounds: int, dims: int, scale: float) -> list:
    rewards = []
    for t in range(rounds):
        f = rng.standard_normal(dims)
        f *= scale / float(np.linalg.norm(f))
        if t % 7 == 6:  # inject reversals so the sequence is not a drift
            f = -f
        rewards.append(f)
    return rewards


def _ogd_run(dims: int, rounds: int, seed, scale: float) -> tuple[float, float]:
    rng = np.random.default_rng(seed)
    ball = BallSet(dims)
    rewards = _reward_sequence(rng, rounds, dims, scale)
    diameter = ball.l2_diameter
    eta = diameter / (scale * np.sqrt(rounds))
    state = OgdState(np.zeros(dims), eta)
    trace = RegretTrace(reward_bound=scale, l1_bound=scale * np.sqrt(dims),
                        l1_diameter=diameter * np.sqrt(dims))
    for f in rewards:
        trace.record(f, state.point)
        state = ogd_step(state, f, ball)
    regret = measure_regret(trace, ball.linear_max)
    return regret, scale * diameter * np.sqrt(rounds)


def _fpl_run(
    dims: int, rounds: int, base_seed: int, row: int, scale: float, degradation: float
) -> tuple[float, float]:
    rng = np.random.default_rng([base_seed, row])
    ball = BallSet(dims)
    rewards = _reward_sequence(rng, rounds, dims, scale)
    reward_bound = max(float(np.linalg.norm(f)) for f in rewards)
    l1_bound = max(float(np.linalg.norm(f, 1)) for f in rewards)
    l1_diameter = 2.0 * np.sqrt(dims)
    eta = np.sqrt(l1_diameter / (reward_bound * l1_bound * rounds))
    maximizer = ball.linear_max if degradation == 0.0 else suboptimal_ball_max(dims, degradation)
    state = FplState(np.zeros(dims), 1.0 / eta, split_key(base_seed, row))
    trace = RegretTrace(reward_bound, l1_bound, l1_diameter)
    for f in rewards:
        decision, state = fpl_step(state, maximizer)
        trace.record(f, decision)
        state = accumulate_reward(state, f)
    regret = measure_regret(trace, ball.linear_max)
    bound = 2.0 * np.sqrt(l1_diameter * reward_bound * l1_bound * rounds)
    return regret, bound + 2.0 * degradation * rounds


# ---------------------------------------------------------------------------
# plot


def cmd_plot(args: argparse.Namespace) -> int:
    _render_traces(args.trace, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def _render_traces(trace_paths: Sequence[Path], out: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "robustkit"
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for path in trace_paths:
        data = np.genfromtxt(path, delimiter=",", names=True)
        if data.size == 0:
            raise ValueError(f"trace {path} has no rows")
        t = np.atleast_1d(data["t"])
        ax.plot(t, np.atleast_1d(data["max_violation"]), label=f"{Path(path).stem}: max")
        ax.plot(t, np.atleast_1d(data["avg_max_violation"]), linestyle="--",
                label=f"{Path(path).stem}: running mean")
    ax.set_xlabel("round")
    ax.set_ylabel("constraint violation")
    ax.axhline(0.0, color="black", linewidth=0.8, alpha=0.5)
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)


# ---------------------------------------------------------------------------
# shared helpers


def _listify(arr: np.ndarray):
    return np.asarray(arr, dtype=float).tolist()


def _dump_json(payload: dict, path: Path) -> None:
    path = Path(path)
    if path.parent != Path("."):
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


if __name__ == "__main__":
    sys.exit(main())

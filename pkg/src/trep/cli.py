"""Command-line interface: decode scores, verify equilibria, sweep noise,
and simulate bootstrapping runs from scenario files."""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .bootstrap import BootstrapConfig, honest_majority_check, run_bootstrap, trace_event_log
from .decoder import decode, decode_result_csv, f2_check, noisy_belief_two_point
from .equilibrium import (
    DegenerateBelief,
    GameScenario,
    hierarchy_best_response_gains,
    measure_epsilon_prime,
    truth_telling_profile,
    verify_unique_nash,
)
from .game import TRepGame
from .pagerank import AllServersUntrusted, NonConvergence
from .repgraph import Config, ParseError, load
from .rng import substream

DEFAULT_EPSILONS = [0.001, 0.005, 0.01, 0.02]


def _fmt(value: float) -> str:
    return "%.17g" % float(value)


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _run_jobs(fn, jobs, parallel: int):
    if parallel and parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(fn, jobs))
    return [fn(job) for job in jobs]


def _load_scenario(args) -> tuple:
    graph, cfg = load(args.scenario)
    cfg = Config(
        alpha=args.alpha if args.alpha is not None else cfg.alpha,
        tol=args.tol if args.tol is not None else cfg.tol,
        max_iters=args.max_iters if args.max_iters is not None else cfg.max_iters,
    )
    return graph, cfg


def _require_trust(graph, command: str) -> np.ndarray:
    if graph.trust is None:
        raise ValueError(f"scenario has no trust line; {command} needs server trust levels")
    return graph.trust


def cmd_decode(args) -> int:
    graph, cfg = _load_scenario(args)
    result = decode(graph.edges, cfg, trust=graph.trust)
    _write_text(Path(args.out) / "decode.csv", decode_result_csv(result, trust=graph.trust))
    print("rho " + " ".join(_fmt(v) for v in result.rho))
    print(f"inversions {'n/a' if result.inversions is None else result.inversions}")
    linf = "n/a" if result.linf_error is None else _fmt(result.linf_error)
    print(f"linf_error {linf}")
    return 0


def cmd_nash(args) -> int:
    graph, cfg = _load_scenario(args)
    trust = _require_trust(graph, "nash")
    n = args.n or graph.n
    if args.k:
        rows = []
        reference = None
        worst_gain = 0.0
        worst_drift = 0.0
        for draw in range(args.trials):
            rng = substream(args.seed, "fresh", draw)
            weights = rng.dirichlet(np.ones(args.k), size=n - args.k)
            scenario = GameScenario(
                kind="hierarchy", trust=trust, n=n, k=args.k, fresh_weights=weights
            )
            gains = hierarchy_best_response_gains(
                scenario, cfg, rng=substream(args.seed, "gains", draw)
            )
            rho = decode(truth_telling_profile(scenario), cfg).rho
            if reference is None:
                reference = rho
            drift = float(np.max(np.abs(rho - reference)))
            worst_gain = max(worst_gain, float(gains.max()))
            worst_drift = max(worst_drift, drift)
            rows.append(f"{draw},{_fmt(gains.max())},{_fmt(drift)}")
        text = "draw,max_gain,rho_drift\n" + "\n".join(rows) + "\n"
        _write_text(Path(args.out) / "nash.csv", text)
        print(
            f"hierarchy k={args.k} draws={args.trials} "
            f"max_gain {_fmt(worst_gain)} max_rho_drift {_fmt(worst_drift)}"
        )
        return 0
    report = verify_unique_nash(
        trust, n, cfg, probes=args.trials, rng=substream(args.seed, "probes")
    )
    rows = [
        f"{i + 1},{_fmt(report.utilities[i])},{_fmt(report.gains[i])}" for i in range(n)
    ]
    text = "player,utility,gain\n" + "\n".join(rows) + "\n"
    _write_text(Path(args.out) / "nash.csv", text)
    print(f"epsilon_prime {_fmt(report.epsilon_prime)}")
    print(f"expected_value {_fmt(report.expected_value)}")
    print(f"probe_min {_fmt(report.probe_min)}")
    print(f"closed_form_deviation {_fmt(report.closed_form_deviation)}")
    return 0


def cmd_noisy(args) -> int:
    graph, cfg = _load_scenario(args)
    trust = _require_trust(graph, "noisy")
    n = args.n or graph.n
    epsilons = args.epsilon or list(DEFAULT_EPSILONS)

    def one(job):
        index, trial = job
        eps = epsilons[index]
        rng = substream(args.seed, "noisy", index, trial)
        belief = noisy_belief_two_point(trust, eps, rng)
        scenario = GameScenario(kind="noisy", trust=trust, n=n, belief=belief, epsilon=eps)
        report = measure_epsilon_prime(scenario, cfg)
        return eps, report.epsilon_prime, report.bound

    jobs = [(i, t) for i in range(len(epsilons)) for t in range(args.trials)]
    results = _run_jobs(one, jobs, args.parallel)
    rows = [f"{_fmt(eps)},{_fmt(gain)},{_fmt(bound)}" for eps, gain, bound in results]
    _write_text(
        Path(args.out) / "noisy.csv", "epsilon,epsilon_prime,bound\n" + "\n".join(rows) + "\n"
    )
    worst = max((gain for _, gain, _ in results), default=0.0)
    print(f"epsilons {len(epsilons)} trials {args.trials} max_epsilon_prime {_fmt(worst)}")
    if args.delta is not None:
        f2_rows = []
        for index, eps in enumerate(epsilons):
            report = f2_check(
                trust,
                epsilon=eps,
                p=args.p,
                delta=args.delta,
                trials=args.trials,
                config=cfg,
                rng=substream(args.seed, "f2", index),
                n=n,
            )
            f2_rows.append(
                f"{_fmt(eps)},{_fmt(report['empirical_prob'])},{_fmt(report['bound'])},"
                f"{_fmt(report['q'])},{_fmt(report['threshold'])}"
            )
            print(
                f"f2 eps {_fmt(eps)} empirical {_fmt(report['empirical_prob'])} "
                f"bound {_fmt(report['bound'])}"
            )
        _write_text(
            Path(args.out) / "f2.csv",
            "epsilon,empirical_prob,bound,q,threshold\n" + "\n".join(f2_rows) + "\n",
        )
    return 0


def cmd_bootstrap(args) -> int:
    graph, cfg = _load_scenario(args)
    trust = _require_trust(graph, "bootstrap")
    game = TRepGame(n=graph.n, m=graph.m, trust=trust, config=cfg)
    committee = args.committee if args.committee is not None else min(3, graph.m)
    ell = args.ell if args.ell is not None else graph.m
    bcfg = BootstrapConfig(
        lam=args.lam, committee_size=committee, ell=ell, fraction=args.fraction
    )

    def one(trial):
        trace = run_bootstrap(game, graph.edges, bcfg, substream(args.seed, "boot", trial))
        majority, margin = honest_majority_check(trace.committee, trace.honest)
        detected = ";".join(str(j + 1) for j in trace.detected) or "none"
        row = (
            f"{trial},{trace.restarts},{len(trace.events)},{detected},"
            f"{'true' if majority else 'false'},{margin}"
        )
        return trace, row, majority

    results = _run_jobs(one, list(range(args.trials)), args.parallel)
    _write_text(Path(args.out) / "bootstrap.log", trace_event_log(results[0][0]))
    header = "trial,restarts,rounds,detected,majority,margin\n"
    _write_text(
        Path(args.out) / "bootstrap.csv",
        header + "\n".join(row for _, row, _ in results) + "\n",
    )
    mean_restarts = float(np.mean([trace.restarts for trace, _, _ in results]))
    majority_rate = float(np.mean([1.0 if ok else 0.0 for _, _, ok in results]))
    print(
        f"trials {args.trials} mean_restarts {_fmt(mean_restarts)} "
        f"majority_rate {_fmt(majority_rate)}"
    )
    return 0


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("scenario", help="scenario file in the trep v1 format")
    sub.add_argument("--alpha", type=float, default=None, help="restart probability override")
    sub.add_argument("--tol", type=float, default=None, help="convergence tolerance override")
    sub.add_argument("--max-iters", type=int, default=None, help="iteration budget override")
    sub.add_argument("--seed", type=int, default=0, help="master seed for all randomness")
    sub.add_argument("--out", default=".", help="directory for output files")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trep",
        description="Reputation scores over endorsement graphs: decoding, "
        "equilibrium verification, noise sweeps, and bootstrapping.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("decode", help="decode server scores from a scenario")
    _add_common(p)
    p.set_defaults(func=cmd_decode)

    p = commands.add_parser("nash", help="verify the proportional equilibrium")
    _add_common(p)
    p.add_argument("--n", type=int, default=None, help="player count override")
    p.add_argument("--k", type=int, default=None, help="established player count (hierarchy mode)")
    p.add_argument("--trials", type=int, default=100, help="probe count or hierarchy draws")
    p.set_defaults(func=cmd_nash)

    p = commands.add_parser("noisy", help="sweep belief noise and measure the defect")
    _add_common(p)
    p.add_argument("--n", type=int, default=None, help="player count override")
    p.add_argument(
        "--epsilon", type=float, action="append", default=None,
        help="noise level (repeatable; default sweep "
        + ", ".join(str(e) for e in DEFAULT_EPSILONS) + ")",
    )
    p.add_argument("--trials", type=int, default=20, help="trials per noise level")
    p.add_argument("--p", type=float, default=0.0, help="per-entry failure probability of the noise model")
    p.add_argument("--delta", type=float, default=None, help="belief-mass drift for the decodability check")
    p.add_argument("--parallel", type=int, default=0, help="worker threads (results are order-stable)")
    p.set_defaults(func=cmd_noisy)

    p = commands.add_parser("bootstrap", help="simulate committee bootstrapping")
    _add_common(p)
    p.add_argument("--lambda", dest="lam", type=int, default=8, help="rounds per schedule pass")
    p.add_argument("--committee", type=int, default=None, help="probing committee size")
    p.add_argument("--ell", type=int, default=None, help="final committee pool size")
    p.add_argument("--fraction", type=float, default=0.9, help="fraction of the pool selected")
    p.add_argument("--trials", type=int, default=10, help="independent runs")
    p.add_argument("--parallel", type=int, default=0, help="worker threads (results are order-stable)")
    p.set_defaults(func=cmd_bootstrap)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (NonConvergence, AllServersUntrusted, DegenerateBelief) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

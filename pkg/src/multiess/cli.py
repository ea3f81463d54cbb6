"""Command-line front end.

    multiess solve games/game8 --check-degenerate
    multiess experiment --K 3 --count 100 --seed 1 --out k3.json
    multiess report k3.json k4.json --format csv

Exit codes: 0 on a completed run, 2 on bad input, 3 if any support could not
be resolved within the solver budget.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .ess import compute_all_ess, degeneracy_check
from .experiment import game_record, load_results, render_game, render_report, run_sweep
from .game import GameError, SolverConfig, load_game
from .solver import BudgetExceeded

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_UNRESOLVED = 3


def _add_tolerances(p: argparse.ArgumentParser) -> None:
    d = SolverConfig()
    g = p.add_argument_group("tolerances")
    g.add_argument("--eps-s", type=float, default=d.eps_s, help="minimum mass on support actions")
    g.add_argument("--eps-p", type=float, default=d.eps_p, help="payoff comparison tolerance")
    g.add_argument("--delta", type=float, default=d.delta, help="radius of the excluded mutant ball")
    g.add_argument("--eps-dist", type=float, default=d.eps_dist, help="degeneracy distance threshold")
    g.add_argument("--feas-tol", type=float, default=d.feas_tol, help="constraint violation tolerance")
    g.add_argument("--opt-gap", type=float, default=d.opt_gap, help="certified optimality gap")
    g.add_argument("--max-nodes", type=int, default=d.max_nodes, help="branch-and-bound node budget per solve")


def _config(args) -> SolverConfig:
    return SolverConfig(
        eps_s=args.eps_s,
        eps_p=args.eps_p,
        delta=args.delta,
        eps_dist=args.eps_dist,
        feas_tol=args.feas_tol,
        opt_gap=args.opt_gap,
        max_nodes=args.max_nodes,
    )


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_solve(args) -> int:
    config = _config(args)
    game = load_game(args.game)
    run = compute_all_ess(game, config, first_only=args.first, threads=args.threads)
    report = None
    if args.check_degenerate:
        try:
            report = degeneracy_check(game, config, sne=run.sne)
        except BudgetExceeded:
            print("degeneracy check ran out of budget", file=sys.stderr)
            return EXIT_UNRESOLVED
    record = game_record(run, report)
    _emit(render_game(record, game, args.format), args.out)
    return EXIT_OK if run.complete else EXIT_UNRESOLVED


def cmd_experiment(args) -> int:
    config = _config(args)

    def progress(i, rec):
        if args.verbose:
            print(f"game {i}: {len(rec['ess'])} ESS, {rec['total_time']:.3f}s", file=sys.stderr)

    doc = run_sweep(
        args.K,
        args.count,
        args.seed,
        config,
        n=args.n,
        threads=args.threads,
        save_games=args.save_games,
        progress=progress,
    )
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=1) + "\n")
    if args.format == "json" and not args.out:
        sys.stdout.write(json.dumps(doc, indent=1) + "\n")
    else:
        sys.stdout.write(render_report([doc], "csv" if args.format == "csv" else "table"))
    return EXIT_OK if doc["aggregates"]["unresolved_games"] == 0 else EXIT_UNRESOLVED


def cmd_report(args) -> int:
    docs = [load_results(p) for p in args.results]
    _emit(render_report(docs, args.format), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multiess", description="Evolutionarily stable strategies of symmetric n-player games")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="find all SNE and ESS of one game")
    p.add_argument("game", help="game file (JSON with n, k, tensor)")
    p.add_argument("--first", action="store_true", help="stop at the first ESS")
    p.add_argument("--check-degenerate", action="store_true", help="also test every support for a second equilibrium")
    p.add_argument("--format", choices=["table", "json", "csv"], default="table")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", help="write the report here instead of stdout")
    _add_tolerances(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("experiment", help="solve a batch of random games")
    p.add_argument("--K", type=int, required=True, help="pure strategies per player")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=1, help="master seed; game i uses a seed derived from (seed, i)")
    p.add_argument("--n", type=int, default=3, help="number of players")
    p.add_argument("--out", help="write the full results JSON here")
    p.add_argument("--save-games", help="directory to store the generated game files")
    p.add_argument("--format", choices=["table", "json", "csv"], default="table")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("-v", "--verbose", action="store_true")
    _add_tolerances(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("report", help="render summary tables from experiment results")
    p.add_argument("results", nargs="+")
    p.add_argument("--format", choices=["table", "csv", "json"], default="table")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (GameError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        # invalid tolerance combinations and similar
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

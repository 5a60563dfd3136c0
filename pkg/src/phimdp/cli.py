"""Command-line harness: ``phimdp {run-agent,eval-cost,search-phi,tiny-table}``."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .agent import Agent, AgentConfig, run_experiment
from .environments import ideal_tiny_history, make_env
from .experiments import search_phi, table_config, tiny_table
from .features import SuffixSet
from .histories import HistoryFormatError, read_history, write_history
from .mdpcore import CostConfig, cost, format_fields, icost
from .planner import ExplorationConfig


def _cost_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--reward-model", choices=("full", "state-only"), default="state-only")
    p.add_argument("--code-mode", choices=("exact", "sparse", "combinatorial", "incremental"), default="exact")
    p.add_argument("--alpha", type=float, default=0.5, help="Dirichlet parameter of the incremental code")
    p.add_argument("--phi-penalty", action=argparse.BooleanOptionalAction, default=False,
                   help="add one bit per suffix-tree node to the cost")


def _cost_config(args) -> CostConfig:
    return CostConfig(mode=args.code_mode, alpha=args.alpha, reward_model=args.reward_model.replace("-", "_"),
                      phi_penalty=args.phi_penalty)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phimdp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run-agent", help="run the learning agent in a simulated environment")
    p.add_argument("--env", default="tiny", help="'tiny' or 'chain:L'")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=1000, help="number of cycles")
    p.add_argument("--budget", type=int, default=10, help="split/merge proposals per cycle")
    p.add_argument("--gamma-cap", type=float, default=0.99)
    p.add_argument("--criterion", choices=("cost", "icost"), default="cost")
    p.add_argument("--explore", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--bonus", type=float, default=None, help="fixed exploration reward (default: scaled)")
    p.add_argument("--initial-depth", type=int, default=0, help="start from the balanced tree of this depth")
    p.add_argument("--replicas", type=int, default=1, help="independent runs with seeds seed, seed+1, ...")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--history-out", type=Path, default=None)
    _cost_flags(p)

    p = sub.add_parser("eval-cost", help="cost of a suffix set on a recorded history")
    p.add_argument("history", type=Path)
    p.add_argument("suffix_set", type=Path)
    p.add_argument("--out", type=Path, default=None)
    _cost_flags(p)

    p = sub.add_parser("search-phi", help="search suffix sets offline on a recorded history")
    p.add_argument("history", type=Path)
    p.add_argument("--iterations", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t0", type=float, default=100.0, help="initial temperature (1 disables cooling)")
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--phi-out", type=Path, default=None)
    _cost_flags(p)

    p = sub.add_parser("tiny-table", help="window-map costs on the two-bit reward source")
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ideal", action="store_true",
                   help="use the balanced periodic stream instead of coin flips (n a multiple of 8)")
    p.add_argument("--out", type=Path, default=None)
    return parser


def _agent_config(args, seed: int) -> AgentConfig:
    return AgentConfig(budget=args.budget, gamma_cap=args.gamma_cap, cost=_cost_config(args),
                       criterion=args.criterion, exploration=ExplorationConfig(args.explore, args.bonus),
                       seed=seed, initial_phi_depth=args.initial_depth)


def _one_run(args, seed: int) -> str:
    cfg = _agent_config(args, seed)
    env = make_env(args.env, seed)
    agent = Agent(env.alphabets, cfg)
    log = run_experiment(cfg, env, args.n, env_name=args.env, agent=agent)
    if args.history_out is not None:
        path = args.history_out
        if args.replicas > 1:
            path = path.with_name(f"{path.stem}.{seed}{path.suffix}")
        write_history(agent.st.history, path)
    return log.dumps()


def cmd_run_agent(args) -> str:
    if args.replicas < 1:
        raise ValueError("--replicas must be >= 1")
    seeds = [args.seed + i for i in range(args.replicas)]
    if args.replicas == 1:
        return _one_run(args, seeds[0])
    with ProcessPoolExecutor(max_workers=args.workers) as pool:
        logs = list(pool.map(_one_run, [args] * len(seeds), seeds))
    parts = []
    for i, (seed, text) in enumerate(zip(seeds, logs)):
        parts.append(json.dumps({"replica": i, "seed": seed}) + "\n" + text)
    return "".join(parts)


def _load_inputs(args):
    h = read_history(args.history)
    try:
        S = SuffixSet.loads(Path(args.suffix_set).read_text(), h.alphabets.observations)
    except ValueError as e:
        raise ValueError(f"{args.suffix_set}: {e}") from None
    return h, S


def cmd_eval_cost(args) -> str:
    h, S = _load_inputs(args)
    cfg = _cost_config(args)
    report = cost(S, h, cfg)
    return report.dumps({"icost_bits": icost(S, h, cfg)})


def cmd_search_phi(args) -> str:
    h = read_history(args.history)
    cfg = _cost_config(args)
    res = search_phi(h, args.iterations, args.seed, cfg, t0=args.t0)
    if args.phi_out is not None:
        args.phi_out.write_text(res.best.dumps())
    lines = format_fields(cfg.describe())
    lines += [f"iterations = {args.iterations}", f"seed = {args.seed}", f"t0 = {args.t0:.6f}",
              f"accepted = {res.accepted}", f"best_cost_bits = {res.best_cost:.6f}",
              f"best_states = {len(res.best)}", "best_phi:"]
    lines += ["  " + ln for ln in res.best.dumps().splitlines()]
    lines.append("iteration\tbest_bits\tcurrent_bits")
    lines += [f"{i + 1}\t{b:.6f}\t{c:.6f}" for i, (b, c) in enumerate(zip(res.trace, res.current_trace))]
    return "\n".join(lines) + "\n"


def cmd_tiny_table(args) -> str:
    if args.ideal:
        if args.n % 8:
            raise ValueError("--ideal needs n to be a multiple of 8")
        h = ideal_tiny_history(args.n + table_config().burn_in + 1)
        return tiny_table(args.n, None, history=h).dumps()
    return tiny_table(args.n, args.seed).dumps()


COMMANDS = {"run-agent": cmd_run_agent, "eval-cost": cmd_eval_cost, "search-phi": cmd_search_phi,
            "tiny-table": cmd_tiny_table}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = COMMANDS[args.command](args)
    except (HistoryFormatError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    if args.out is not None:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""The feature-MDP agent loop and an experiment runner around it."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .features import SuffixSet, phi_improve
from .histories import Alphabets, History, append_cycle
from .mdpcore import (CostConfig, CountTensor, build_counts, cost_from_counts, estimate_mdp,
                      icost_from_counts)
from .planner import ExplorationConfig, ValueFunction, best_action, extend_exploration, value_iteration

CRITERIA = ("cost", "icost")


@dataclass(frozen=True)
class AgentConfig:
    budget: int = 10
    gamma_cap: float = 0.99
    cost: CostConfig = CostConfig()
    criterion: str = "cost"
    exploration: ExplorationConfig = ExplorationConfig()
    seed: int = 0
    planner_tol: float = 1e-8
    max_sweeps: int = 10**6
    initial_phi_depth: int = 0  # 0 starts from the single-state map

    def __post_init__(self):
        if self.initial_phi_depth < 0:
            raise ValueError("initial_phi_depth must be >= 0")
        if self.budget < 0:
            raise ValueError("search budget must be >= 0")
        if not 0.0 <= self.gamma_cap < 1.0:
            raise ValueError("gamma cap must lie in [0, 1)")
        if self.criterion not in CRITERIA:
            raise ValueError(f"unknown criterion {self.criterion!r}")
        if self.cost.burn_in:
            raise ValueError("the agent scores maps on the whole history; burn_in must be 0")

    def gamma(self, n: int) -> float:
        return min(1.0 - 1.0 / n, self.gamma_cap)

    def describe(self) -> dict:
        d = asdict(self)
        d["exploration"] = {"enabled": self.exploration.enabled, "bonus": self.exploration.bonus}
        return d


def score(S: SuffixSet, h: History, config: AgentConfig) -> float:
    ct = build_counts(S, h)
    if config.criterion == "icost":
        return icost_from_counts(ct, S, config.cost)
    return cost_from_counts(ct, S, config.cost).total_bits


@dataclass
class AgentState:
    phi: SuffixSet
    candidate: SuffixSet
    history: History
    rng: np.random.Generator
    n: int = 0
    last_action: object = None
    counts: CountTensor | None = None
    value: ValueFunction | None = None
    state: tuple | None = None
    adoptions: list = field(default_factory=list)


class Agent:
    """Searches feature maps between observations and plans on the induced MDP."""

    def __init__(self, alphabets: Alphabets, config: AgentConfig = AgentConfig()):
        self.alphabets = alphabets
        self.config = config
        root = SuffixSet.balanced(alphabets.observations, config.initial_phi_depth)
        self.st = AgentState(root, root, History(alphabets), np.random.default_rng(config.seed))

    def _search(self, h: History) -> None:
        """Improve the candidate map on ``h``; adopt it whenever strictly cheaper."""
        st, cfg = self.st, self.config
        memo: dict = {}

        def fn(S, hist):
            if S not in memo:
                memo[S] = score(S, hist, cfg)
            return memo[S]

        for _ in range(cfg.budget):
            st.candidate = phi_improve(st.candidate, h, st.rng, fn)
            if st.candidate != st.phi and fn(st.candidate, h) < fn(st.phi, h):
                st.phi = st.candidate
                st.adoptions.append((st.n + 1, fn(st.phi, h)))

    def cycle(self, o, r):
        """Take in ``o_n, r_n`` and return the action ``a_n``."""
        st, cfg = self.st, self.config
        n = st.n + 1
        gamma = cfg.gamma(n)
        if st.history.n and cfg.budget:
            self._search(st.history)
        st.history = append_cycle(st.history, st.last_action, o, r)
        st.n = n

        ct = build_counts(st.phi, st.history)
        s_n = ct.labels[int(ct.state_seq[-1])]
        if cfg.exploration.enabled:
            est = extend_exploration(ct, cfg.exploration, gamma)
        else:
            est = estimate_mdp(ct)
        vf = value_iteration(est, gamma, cfg.planner_tol, cfg.max_sweeps)
        a = self.alphabets.actions[best_action(vf, s_n)]
        st.counts, st.value, st.state, st.last_action = ct, vf, s_n, a
        return a


def agent_cycle(agent: Agent, o, r):
    return agent.cycle(o, r)


@dataclass
class CycleRecord:
    cycle: int
    o: object
    r: object
    a: object
    states: int
    cost_bits: float
    icost_bits: float
    value: float


@dataclass
class RunLog:
    env: str
    config: dict
    records: list = field(default_factory=list)
    phi: SuffixSet | None = None
    counts: CountTensor | None = None

    def dumps(self) -> str:
        lines = [json.dumps(asdict(rec), sort_keys=False) for rec in self.records]
        summary = {"summary": {"env": self.env, "cycles": len(self.records), "config": self.config,
                               "phi": self.phi.dumps() if self.phi is not None else None}}
        lines.append(json.dumps(summary, default=str))
        return "\n".join(lines) + "\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())


def run_experiment(config: AgentConfig, env, n_cycles: int, env_name: str = "",
                   out: str | Path | None = None, agent: Agent | None = None) -> RunLog:
    """Run the agent for ``n_cycles`` and log one record per cycle."""
    agent = agent or Agent(env.alphabets, config)
    log = RunLog(env_name, config.describe())
    if n_cycles > 0:
        o, r = env.reset()
        for _ in range(n_cycles):
            a = agent.cycle(o, r)
            st = agent.st
            cost_bits = cost_from_counts(st.counts, st.phi, config.cost).total_bits
            icost_bits = icost_from_counts(st.counts, st.phi, config.cost)
            value = float(st.value.V[st.value.index(st.state)])
            log.records.append(CycleRecord(st.n, o, r, a, st.counts.m, cost_bits,
                                           icost_bits if math.isfinite(icost_bits) else float("inf"), value))
            o, r = env.step(a)
    log.phi = agent.st.phi
    log.counts = agent.st.counts
    if out is not None:
        log.write(out)
    return log

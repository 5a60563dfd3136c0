"""Offline experiments: the fixed-window cost table and feature-map search."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .environments import tiny_history
from .features import SuffixSet, improve_step
from .histories import History
from .mdpcore import CostConfig, cost, format_fields

TABLE_DEPTHS = (0, 1, 2, 3, 4)
TABLE_BURN_IN = 3  # deepest compared window minus one


def table_config() -> CostConfig:
    """Exact code, per-state rewards, no map penalty, a common sample for all depths."""
    return CostConfig(mode="exact", reward_model="state_only", phi_penalty=False, burn_in=TABLE_BURN_IN)


def window_cost_formula(k: int, n: int) -> float:
    """Leading-order cost of the depth-``k`` window map on ideal tiny-source counts."""
    if k == 0:
        return 2 * n + 1.5 * math.log2(n)
    if k == 1:
        return 2 * n + 4 * math.log2(n / 2)
    states = 2 ** k
    # state code: per state one free symbol and (states - 1)/2 log of its visits;
    # reward code: (|R| - 1)/2 = 3/2 log per state
    return n + states * ((states - 1) / 2 + 1.5) * math.log2(n / states)


@dataclass
class TableRow:
    k: int
    cost_bits: float
    formula_bits: float

    @property
    def rel_error(self) -> float:
        return abs(self.cost_bits - self.formula_bits) / self.formula_bits


@dataclass
class TinyTable:
    n: int
    seed: int | None
    config: CostConfig
    rows: list = field(default_factory=list)

    @property
    def argmin(self) -> int:
        return min(self.rows, key=lambda r: r.cost_bits).k

    def row(self, k: int) -> TableRow:
        return next(r for r in self.rows if r.k == k)

    def dumps(self) -> str:
        lines = [f"n = {self.n}", f"seed = {self.seed}"]
        lines += format_fields(self.config.describe())
        lines.append("k\tcost_bits\tformula_bits\trel_error")
        for r in self.rows:
            lines.append(f"{r.k}\t{r.cost_bits:.6f}\t{r.formula_bits:.6f}\t{r.rel_error:.6e}")
        lines.append(f"argmin = {self.argmin}")
        return "\n".join(lines) + "\n"


def tiny_table(n: int, seed: int | None = 0, history: History | None = None) -> TinyTable:
    """Cost of the window maps of depth 0..4 over ``n`` transitions of the tiny source.

    The source is run for ``n + burn_in + 1`` cycles so that every depth is
    scored on the same ``n`` transitions.  ``history`` overrides the
    simulation (it must have that many cycles).
    """
    if n < 16:
        raise ValueError(f"n must be at least 16, got {n}")
    cfg = table_config()
    h = history if history is not None else tiny_history(n + cfg.burn_in + 1, seed)
    if h.n != n + cfg.burn_in + 1:
        raise ValueError(f"history needs {n + cfg.burn_in + 1} cycles for n={n}, got {h.n}")
    table = TinyTable(n, seed, cfg)
    for k in TABLE_DEPTHS:
        S = SuffixSet.balanced(h.alphabets.observations, k)
        table.rows.append(TableRow(k, cost(S, h, cfg).total_bits, window_cost_formula(k, n)))
    return table


@dataclass
class SearchResult:
    best: SuffixSet
    best_cost: float
    trace: list  # best-so-far cost after each iteration
    current_trace: list
    accepted: int


def annealing_temperature(i: int, iterations: int, t0: float) -> float:
    """Geometric cooling from ``t0`` at the first iteration to 1 at the last."""
    if iterations <= 1 or t0 <= 1.0:
        return 1.0
    return t0 ** (1.0 - i / (iterations - 1))


def search_phi(h: History, iterations: int, seed: int | None = 0, config: CostConfig = CostConfig(),
               t0: float = 100.0, start: SuffixSet | None = None) -> SearchResult:
    """Repeated split/merge proposals from the single-state map, keeping the best map seen.

    ``t0`` sets the initial temperature of the acceptance rule; ``t0=1``
    runs the plain rule throughout.
    """
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    rng = np.random.default_rng(seed)
    memo: dict = {}

    def fn(S, hist):
        if S not in memo:
            memo[S] = cost(S, hist, config).total_bits
        return memo[S]

    S = start if start is not None else SuffixSet.root(h.alphabets.observations)
    best, best_cost = S, fn(S, h)
    trace, current, accepted = [], [], 0
    for i in range(iterations):
        step = improve_step(S, h, rng, fn, annealing_temperature(i, iterations, t0))
        S = step.suffix_set
        accepted += step.accepted
        c = fn(S, h)
        if c < best_cost:
            best, best_cost = S, c
        trace.append(best_cost)
        current.append(c)
    return SearchResult(best, best_cost, trace, current, accepted)

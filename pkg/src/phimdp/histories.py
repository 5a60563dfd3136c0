"""Observation-reward-action histories and the environment contract.

A history ``o1 r1 a1 o2 r2 a2 ... on rn`` always ends on an
observation-reward pair, so it holds ``n`` observations, ``n`` rewards and
``n - 1`` actions.  Rewards are numbers; their value is the payoff used by
the planner.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Hashable, Iterable, Protocol, Sequence

import numpy as np

Symbol = Hashable


@dataclass(frozen=True)
class Alphabets:
    observations: tuple
    actions: tuple
    rewards: tuple

    def __post_init__(self):
        for name in ("observations", "actions", "rewards"):
            symbols = tuple(getattr(self, name))
            if not symbols:
                raise ValueError(f"{name} alphabet is empty")
            if len(set(symbols)) != len(symbols):
                raise ValueError(f"{name} alphabet has duplicates: {symbols}")
            object.__setattr__(self, name, symbols)

    @cached_property
    def obs_index(self) -> dict:
        return {o: i for i, o in enumerate(self.observations)}

    @cached_property
    def action_index(self) -> dict:
        return {a: i for i, a in enumerate(self.actions)}

    @cached_property
    def reward_index(self) -> dict:
        return {r: i for i, r in enumerate(self.rewards)}

    @property
    def reward_values(self) -> np.ndarray:
        return np.asarray(self.rewards, dtype=float)


class AlphabetError(ValueError):
    """A symbol is not in its declared alphabet."""


class HistoryFormatError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


@dataclass(frozen=True)
class StepRecord:
    observation: Symbol
    reward: Symbol
    action: Symbol | None = None


@dataclass(frozen=True)
class History:
    alphabets: Alphabets
    observations: tuple = ()
    rewards: tuple = ()
    actions: tuple = ()
    _checked: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.observations)
        if len(self.rewards) != n:
            raise ValueError("observations and rewards differ in length")
        if len(self.actions) != max(n - 1, 0):
            raise ValueError(f"history of {n} cycles needs {max(n - 1, 0)} actions, got {len(self.actions)}")
        if not self._checked:
            _check_symbols(self.observations, self.alphabets.obs_index, "observation")
            _check_symbols(self.rewards, self.alphabets.reward_index, "reward")
            _check_symbols(self.actions, self.alphabets.action_index, "action")

    @classmethod
    def from_sequences(cls, alphabets: Alphabets, observations: Iterable, rewards: Iterable,
                       actions: Iterable) -> "History":
        return cls(alphabets, tuple(observations), tuple(rewards), tuple(actions))

    def __len__(self) -> int:
        return len(self.observations)

    @property
    def n(self) -> int:
        return len(self.observations)

    def steps(self) -> list[StepRecord]:
        acts = self.actions + (None,)
        return [StepRecord(o, r, a) for o, r, a in zip(self.observations, self.rewards, acts)]

    def prefix(self, n: int) -> "History":
        """The history ``h_n`` made of the first ``n`` cycles."""
        if not 0 <= n <= self.n:
            raise ValueError(f"prefix length {n} out of range 0..{self.n}")
        return History(self.alphabets, self.observations[:n], self.rewards[:n],
                       self.actions[:max(n - 1, 0)], _checked=True)

    @cached_property
    def obs_codes(self) -> np.ndarray:
        idx = self.alphabets.obs_index
        return np.fromiter((idx[o] for o in self.observations), dtype=np.int64, count=self.n)

    @cached_property
    def action_codes(self) -> np.ndarray:
        idx = self.alphabets.action_index
        return np.fromiter((idx[a] for a in self.actions), dtype=np.int64, count=len(self.actions))

    @cached_property
    def reward_codes(self) -> np.ndarray:
        idx = self.alphabets.reward_index
        return np.fromiter((idx[r] for r in self.rewards), dtype=np.int64, count=self.n)


def _check_symbols(symbols: Sequence, index: dict, what: str) -> None:
    for s in symbols:
        if s not in index:
            raise AlphabetError(f"{what} {s!r} not in alphabet {tuple(index)}")


def append_cycle(h: History, a: Symbol | None, o: Symbol, r: Symbol) -> History:
    """Return ``h a o r``; the first cycle of an empty history takes no action."""
    ab = h.alphabets
    if o not in ab.obs_index:
        raise AlphabetError(f"observation {o!r} not in alphabet {ab.observations}")
    if r not in ab.reward_index:
        raise AlphabetError(f"reward {r!r} not in alphabet {ab.rewards}")
    if h.n == 0:
        if a is not None:
            raise ValueError("the first cycle has no preceding action")
        actions = ()
    else:
        if a not in ab.action_index:
            raise AlphabetError(f"action {a!r} not in alphabet {ab.actions}")
        actions = h.actions + (a,)
    new = History(ab, h.observations + (o,), h.rewards + (r,), actions, _checked=True)
    # carry already-computed code arrays forward instead of re-encoding
    cache = h.__dict__
    if "obs_codes" in cache:
        new.__dict__["obs_codes"] = np.append(cache["obs_codes"], ab.obs_index[o])
    if "reward_codes" in cache:
        new.__dict__["reward_codes"] = np.append(cache["reward_codes"], ab.reward_index[r])
    if "action_codes" in cache and h.n:
        new.__dict__["action_codes"] = np.append(cache["action_codes"], ab.action_index[a])
    return new


def observation_suffix(h: History, k: int) -> tuple:
    """The last ``min(k, n)`` observations, oldest first."""
    if k < 0:
        raise ValueError("suffix length must be >= 0")
    return h.observations[max(h.n - k, 0):] if k else ()


class Environment(Protocol):
    alphabets: Alphabets

    def reset(self) -> tuple: ...

    def step(self, action) -> tuple: ...


# -- text format ------------------------------------------------------------

_HEADER = "t\to\tr\ta"


def dumps_history(h: History) -> str:
    ab = h.alphabets
    out = io.StringIO()
    out.write("# observations\t" + "\t".join(map(str, ab.observations)) + "\n")
    out.write("# rewards\t" + "\t".join(map(str, ab.rewards)) + "\n")
    out.write("# actions\t" + "\t".join(map(str, ab.actions)) + "\n")
    out.write(_HEADER + "\n")
    for t, step in enumerate(h.steps(), start=1):
        a = "" if step.action is None else str(step.action)
        out.write(f"{t}\t{step.observation}\t{step.reward}\t{a}\n")
    return out.getvalue()


def _parse_symbol(text: str):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def loads_history(text: str) -> History:
    """Parse the tab-separated history format written by :func:`dumps_history`."""
    declared = {}
    rows = []
    seen_header = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            parts = line[1:].strip().split("\t")
            if parts[0] in ("observations", "rewards", "actions"):
                declared[parts[0]] = [p for p in parts[1:]]
            continue
        if not seen_header:
            if line.strip() != _HEADER:
                raise HistoryFormatError(lineno, f"expected header {_HEADER!r}")
            seen_header = True
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise HistoryFormatError(lineno, f"expected 4 tab-separated fields, got {len(fields)}")
        rows.append((lineno, fields))
    for name in ("observations", "rewards", "actions"):
        if name not in declared:
            raise HistoryFormatError(1, f"missing '# {name}' alphabet declaration")

    # map the textual form back to the declared symbols
    lookup = {k: {v: _parse_symbol(v) for v in vs} for k, vs in declared.items()}
    ab = Alphabets(tuple(lookup["observations"].values()), tuple(lookup["actions"].values()),
                   tuple(lookup["rewards"].values()))
    obs, rew, act = [], [], []
    for i, (lineno, (t, o, r, a)) in enumerate(rows):
        if t.strip() != str(i + 1):
            raise HistoryFormatError(lineno, f"expected cycle {i + 1}, got {t!r}")
        try:
            obs.append(lookup["observations"][o])
            rew.append(lookup["rewards"][r])
        except KeyError as e:
            raise HistoryFormatError(lineno, f"symbol {e.args[0]!r} not in declared alphabet") from None
        last = i == len(rows) - 1
        if last:
            if a != "":
                raise HistoryFormatError(lineno, "final cycle must not carry an action")
        else:
            if a not in lookup["actions"]:
                raise HistoryFormatError(lineno, f"action {a!r} not in declared alphabet")
            act.append(lookup["actions"][a])
    return History(ab, tuple(obs), tuple(rew), tuple(act))


def write_history(h: History, path: str | Path) -> None:
    Path(path).write_text(dumps_history(h))


def read_history(path: str | Path) -> History:
    return loads_history(Path(path).read_text())

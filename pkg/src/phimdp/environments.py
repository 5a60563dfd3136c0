"""Simulated environments.

``tiny``
    Fair coin-flip observations with reward ``2 o_{t-1} + o_t`` and a
    single action.  ``o_0`` is taken to be 0.
``chain:L``
    ``L`` cells in a row, actions left (0) and right (1), the observation is
    the cell index and reward 1 is paid while at the right end.
"""

from __future__ import annotations

import numpy as np

from .histories import Alphabets, History


class TinyExampleEnv:
    alphabets = Alphabets(observations=(0, 1), actions=(0,), rewards=(0, 1, 2, 3))

    def __init__(self, seed: int | None = None):
        self.rng = np.random.default_rng(seed)
        self.prev = 0

    def _emit(self, o: int) -> tuple[int, int]:
        r = 2 * self.prev + o
        self.prev = o
        return o, r

    def reset(self) -> tuple[int, int]:
        self.prev = 0
        return self._emit(int(self.rng.integers(2)))

    def step(self, action) -> tuple[int, int]:
        if action != 0:
            raise ValueError(f"tiny environment has the single action 0, got {action!r}")
        return self._emit(int(self.rng.integers(2)))


def tiny_history(n: int, seed: int | None = None) -> History:
    """``n`` cycles of the tiny source, drawn in one batch."""
    rng = np.random.default_rng(seed)
    obs = rng.integers(2, size=n)
    return tiny_history_from_observations(obs.tolist())


def tiny_history_from_observations(obs) -> History:
    obs = [int(o) for o in obs]
    prev = [0] + obs[:-1]
    rewards = [2 * p + o for p, o in zip(prev, obs)]
    return History(TinyExampleEnv.alphabets, tuple(obs), tuple(rewards), (0,) * max(len(obs) - 1, 0))


DE_BRUIJN_3 = "00010111"  # every 3-bit window once per period


def ideal_tiny_history(n: int) -> History:
    """``n`` cycles of the periodic stream whose 3-bit windows are exactly balanced.

    Any 8 consecutive transitions see each (previous two bits, next bit)
    combination once, so window maps of depth up to 2 get ideal counts.
    """
    reps = n // len(DE_BRUIJN_3) + 1
    return tiny_history_from_observations([int(c) for c in (DE_BRUIJN_3 * reps)[:n]])


class ChainEnv:
    LEFT, RIGHT = 0, 1

    def __init__(self, length: int = 5, seed: int | None = None):
        if length < 2:
            raise ValueError("chain needs at least 2 cells")
        self.length = length
        self.alphabets = Alphabets(observations=tuple(range(length)), actions=(self.LEFT, self.RIGHT),
                                   rewards=(0, 1))
        self.pos = 0

    def _emit(self) -> tuple[int, int]:
        return self.pos, int(self.pos == self.length - 1)

    def reset(self) -> tuple[int, int]:
        self.pos = 0
        return self._emit()

    def step(self, action) -> tuple[int, int]:
        if action == self.RIGHT:
            self.pos = min(self.pos + 1, self.length - 1)
        elif action == self.LEFT:
            self.pos = max(self.pos - 1, 0)
        else:
            raise ValueError(f"unknown chain action {action!r}")
        return self._emit()


def make_env(name: str, seed: int | None = None):
    """Build an environment from its registry name (``tiny`` or ``chain:L``)."""
    kind, _, arg = name.partition(":")
    if kind == "tiny" and not arg:
        return TinyExampleEnv(seed)
    if kind == "chain":
        try:
            length = int(arg) if arg else 5
        except ValueError:
            raise ValueError(f"bad chain length in {name!r}") from None
        return ChainEnv(length, seed)
    raise ValueError(f"unknown environment {name!r}; expected 'tiny' or 'chain:L'")

"""Feature maps from histories to states.

Context-tree maps are given by a complete suffix-free set ``S`` of
observation strings.  A string is stored as a tuple of symbols, oldest
first, so ``(0, 1)`` means ``o_{n-1} = 0, o_n = 1``.  In the tree of
reversed strings the parent of ``s`` is ``s[1:]`` and its children are
``(o,) + s``.

While a history is still shorter than the branch it would follow, the
internal node reached when the observations run out is used as a
provisional state (same label as the node).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, NamedTuple, Protocol

import numpy as np

from ._kernels import tree_walk
from .histories import History

Context = tuple
EPSILON: Context = ()


class InvalidMove(ValueError):
    """A split or merge whose precondition does not hold."""


def format_context(s: Context) -> str:
    if not s:
        return "ε"
    parts = [str(x) for x in s]
    sep = "" if all(len(p) == 1 for p in parts) else " "
    return sep.join(parts)


class FeatureMap(Protocol):
    def state(self, h: History) -> Context: ...

    def states_along(self, h: History) -> tuple[np.ndarray, list]: ...

    def state_space(self) -> frozenset: ...

    def description_length(self) -> float: ...


@dataclass(frozen=True)
class SuffixSet:
    """A complete suffix-free set over ``alphabet``."""

    alphabet: tuple
    members: frozenset

    def __post_init__(self):
        alphabet = tuple(self.alphabet)
        members = frozenset(tuple(s) for s in self.members)
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "members", members)
        if not members:
            raise ValueError("suffix set must not be empty")
        syms = set(alphabet)
        for s in members:
            bad = [x for x in s if x not in syms]
            if bad:
                raise ValueError(f"member {format_context(s)} uses symbols outside the alphabet: {bad}")
        internal = self.internal_nodes
        clash = internal & members
        if clash:
            raise ValueError(f"not suffix-free: {sorted(map(format_context, clash))} are suffixes of other members")
        for u in internal:
            for o in alphabet:
                child = (o,) + u
                if child not in members and child not in internal:
                    raise ValueError(f"not complete: node {format_context(u)} lacks child {format_context(child)}")

    # -- construction -------------------------------------------------------

    @classmethod
    def root(cls, alphabet: Iterable) -> "SuffixSet":
        return cls(tuple(alphabet), frozenset([EPSILON]))

    @classmethod
    def balanced(cls, alphabet: Iterable, depth: int) -> "SuffixSet":
        """All strings of length ``depth``: the fixed-window map."""
        alphabet = tuple(alphabet)
        level = [EPSILON]
        for _ in range(depth):
            level = [(o,) + s for s in level for o in alphabet]
        return cls(alphabet, frozenset(level))

    # -- structure ----------------------------------------------------------

    @cached_property
    def internal_nodes(self) -> frozenset:
        return frozenset(s[i:] for s in self.members for i in range(1, len(s) + 1))

    @cached_property
    def _sym_index(self) -> dict:
        return {o: i for i, o in enumerate(self.alphabet)}

    def sort_key(self, s: Context) -> tuple:
        return tuple(self._sym_index[x] for x in s)

    @cached_property
    def _sorted(self) -> tuple:
        return tuple(sorted(self.members, key=self.sort_key))

    def sorted_members(self) -> list:
        return list(self._sorted)

    @property
    def depth(self) -> int:
        return max(len(s) for s in self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, s) -> bool:
        return tuple(s) in self.members

    def state_space(self) -> frozenset:
        return self.members

    def description_length(self) -> float:
        """One bit per node of the reversed-string tree."""
        return float(len(self.members) + len(self.internal_nodes))

    # -- mapping ------------------------------------------------------------

    def state_of(self, observations) -> Context:
        """State of an observation string (oldest first)."""
        node = EPSILON
        L = len(observations)
        while node not in self.members:
            d = len(node)
            if d == L:
                return node  # provisional
            node = (observations[L - 1 - d],) + node
        return node

    def state(self, h: History) -> Context:
        return self.state_of(h.observations)

    @cached_property
    def _tree(self):
        nodes = sorted(self.internal_nodes | self.members, key=lambda s: (len(s), self.sort_key(s)))
        index = {s: i for i, s in enumerate(nodes)}
        child = np.full((len(nodes), len(self.alphabet)), -1, dtype=np.int64)
        for s in nodes:
            if s in self.members:
                continue
            for j, o in enumerate(self.alphabet):
                child[index[s], j] = index[(o,) + s]
        return nodes, child

    def states_along(self, h: History) -> tuple[np.ndarray, list]:
        """States of every prefix ``h_1..h_n`` as codes into a label list."""
        return self.states_of_codes(h.obs_codes)

    def states_of_codes(self, obs: np.ndarray) -> tuple[np.ndarray, list]:
        nodes, child = self._tree
        return tree_walk(child, np.ascontiguousarray(obs, dtype=np.int64)), nodes

    # -- neighbourhood ------------------------------------------------------

    def split(self, s: Context) -> "SuffixSet":
        s = tuple(s)
        if s not in self.members:
            raise InvalidMove(f"cannot split {format_context(s)}: not a member")
        new = (self.members - {s}) | {(o,) + s for o in self.alphabet}
        return SuffixSet(self.alphabet, frozenset(new))

    def can_merge(self, s: Context) -> bool:
        s = tuple(s)
        return all((o,) + s in self.members for o in self.alphabet)

    def merge(self, s: Context) -> "SuffixSet":
        """Replace the leaves ``{o s}`` by their parent ``s``."""
        s = tuple(s)
        if not self.can_merge(s):
            raise InvalidMove(f"cannot merge at {format_context(s)}: children are not all leaves")
        new = (self.members - {(o,) + s for o in self.alphabet}) | {s}
        return SuffixSet(self.alphabet, frozenset(new))

    # -- serialization ------------------------------------------------------

    def dumps(self) -> str:
        lines = ["# alphabet " + " ".join(map(str, self.alphabet))]
        lines += [format_context(s) for s in self.sorted_members()]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str, alphabet: Iterable | None = None) -> "SuffixSet":
        declared = None
        raw = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("# alphabet"):
                declared = stripped[len("# alphabet"):].split()
                continue
            if stripped.startswith("#"):
                continue
            raw.append((lineno, stripped))
        if alphabet is None:
            if declared is None:
                raise ValueError("suffix set file has no '# alphabet' line and no alphabet was given")
            alphabet = declared
        alphabet = tuple(alphabet)
        lookup = {str(o): o for o in alphabet}
        members = []
        for lineno, tok in raw:
            if tok == "ε":
                members.append(EPSILON)
                continue
            parts = tok.split() if " " in tok else list(tok)
            try:
                members.append(tuple(lookup[p] for p in parts))
            except KeyError as e:
                raise ValueError(f"line {lineno}: symbol {e.args[0]!r} not in alphabet {alphabet}") from None
        try:
            return cls(alphabet, frozenset(members))
        except ValueError as e:
            raise ValueError(f"invalid suffix set: {e}") from None


@dataclass(frozen=True)
class WindowMap:
    """Fixed-window map: the last ``k`` observations (fewer on short histories)."""

    alphabet: tuple
    k: int

    def state(self, h: History) -> Context:
        return h.observations[max(h.n - self.k, 0):] if self.k else EPSILON

    def states_along(self, h: History) -> tuple[np.ndarray, list]:
        labels: dict = {}
        codes = np.empty(h.n, dtype=np.int64)
        obs = h.observations
        for i in range(h.n):
            s = obs[max(i + 1 - self.k, 0):i + 1] if self.k else EPSILON
            codes[i] = labels.setdefault(s, len(labels))
        return codes, list(labels)

    def state_space(self) -> frozenset:
        return SuffixSet.balanced(self.alphabet, self.k).members

    def description_length(self) -> float:
        b = len(self.alphabet)
        return float(self.k + 1 if b == 1 else (b ** (self.k + 1) - 1) // (b - 1))


def phi_state(S: SuffixSet, h: History) -> Context:
    return S.state(h)


def split(S: SuffixSet, s: Context) -> SuffixSet:
    return S.split(s)


def merge(S: SuffixSet, s: Context) -> SuffixSet:
    return S.merge(s)


def description_length(S: SuffixSet) -> float:
    return S.description_length()


# -- stochastic search --------------------------------------------------------

class ImproveStep(NamedTuple):
    suffix_set: SuffixSet
    chosen: Context
    kind: str  # "split", "merge" or "noop"
    p: float
    q: float
    cost_old: float
    cost_new: float
    accepted: bool


def accept(cost_old: float, cost_new: float, q: float, temperature: float = 1.0) -> bool:
    """Metropolis-style rule: keep the proposal iff ``(old - new) / T > log2 q``."""
    log_q = -math.inf if q <= 0 else math.log2(q)
    return (cost_old - cost_new) / temperature > log_q


def improve_step(S: SuffixSet, h: History, rng: np.random.Generator,
                 cost_fn: Callable[[SuffixSet, History], float],
                 temperature: float = 1.0) -> ImproveStep:
    members = S.sorted_members()
    s = members[int(rng.integers(len(members)))]
    p = float(rng.random())
    q = float(rng.random())
    if p > 0.5:
        proposal, kind = S.split(s), "split"
    elif s and S.can_merge(s[1:]):
        proposal, kind = S.merge(s[1:]), "merge"
    else:
        return ImproveStep(S, s, "noop", p, q, math.nan, math.nan, False)
    c_old = cost_fn(S, h)
    c_new = cost_fn(proposal, h)
    ok = accept(c_old, c_new, q, temperature)
    return ImproveStep(proposal if ok else S, s, kind, p, q, c_old, c_new, ok)


def phi_improve(S: SuffixSet, h: History, rng: np.random.Generator,
                cost_fn: Callable[[SuffixSet, History], float],
                temperature: float = 1.0) -> SuffixSet:
    """One random split/merge proposal, accepted by :func:`accept`."""
    return improve_step(S, h, rng, cost_fn, temperature).suffix_set

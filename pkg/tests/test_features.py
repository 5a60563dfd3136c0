import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phimdp.environments import tiny_history
from phimdp.features import (EPSILON, InvalidMove, SuffixSet, WindowMap, accept, description_length,
                             format_context, improve_step, merge, phi_improve, phi_state, split)
from phimdp.histories import Alphabets, History
from phimdp.mdpcore import CostConfig, cost

BIN = (0, 1)
AB = Alphabets(BIN, (0,), (0,))


def hist(obs, ab=AB):
    obs = tuple(obs)
    return History(ab, obs, (ab.rewards[0],) * len(obs), (ab.actions[0],) * max(len(obs) - 1, 0))


def S_(*members, alphabet=BIN):
    return SuffixSet(alphabet, frozenset(tuple(int(c) for c in m) for m in members))


@st.composite
def suffix_sets(draw, alphabet=BIN, max_splits=6):
    S = SuffixSet.root(alphabet)
    for _ in range(draw(st.integers(0, max_splits))):
        s = draw(st.sampled_from(S.sorted_members()))
        if len(s) < 5:
            S = S.split(s)
    return S


def unique_cover(S, length):
    """Every string of ``length`` symbols has exactly one member as a suffix."""
    for w in itertools.product(S.alphabet, repeat=length):
        hits = [m for m in S.members if len(m) <= length and w[length - len(m):] == m]
        if len(hits) != 1:
            return False
    return True


class TestValidation:
    def test_rejects_non_suffix_free(self):
        with pytest.raises(ValueError):
            S_("1", "01", "11", "0")

    def test_rejects_incomplete(self):
        with pytest.raises(ValueError):
            S_("0", "01")

    def test_rejects_foreign_symbols(self):
        with pytest.raises(ValueError):
            SuffixSet(BIN, frozenset([(2,)]))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            SuffixSet(BIN, frozenset())


class TestPhiState:
    S = S_("0", "01", "11")

    def test_unique_match(self):
        assert phi_state(self.S, hist([1, 1, 0, 1])) == (0, 1)

    def test_root_map(self):
        assert phi_state(SuffixSet.root(BIN), hist([0, 1, 1])) == EPSILON

    def test_provisional_on_short_history(self):
        assert phi_state(self.S, hist([1])) == (1,)

    def test_empty_history(self):
        assert phi_state(self.S, hist([])) == EPSILON

    @given(suffix_sets(), st.lists(st.sampled_from(BIN), max_size=7))
    def test_fallback_oracle(self, S, obs):
        obs = tuple(obs)
        matches = [m for m in S.members if len(m) <= len(obs) and obs[len(obs) - len(m):] == m]
        want = matches[0] if matches else obs
        assert len(matches) <= 1
        assert phi_state(S, hist(obs)) == want

    @given(suffix_sets(), st.lists(st.sampled_from(BIN), min_size=1, max_size=12))
    def test_states_along_matches_prefixes(self, S, obs):
        h = hist(obs)
        codes, nodes = S.states_along(h)
        assert [nodes[c] for c in codes] == [S.state(h.prefix(t)) for t in range(1, h.n + 1)]

    @given(suffix_sets(), st.data())
    def test_partition_property(self, S, data):
        d = S.depth
        tail = data.draw(st.lists(st.sampled_from(BIN), min_size=d, max_size=d))
        a = data.draw(st.lists(st.sampled_from(BIN), max_size=4))
        b = data.draw(st.lists(st.sampled_from(BIN), max_size=4))
        sa, sb = S.state(hist(a + tail)), S.state(hist(b + tail))
        assert sa == sb and sa in S.members


class TestSplitMerge:
    def test_split_leaf(self):
        assert split(S_("0", "1"), (1,)) == S_("0", "01", "11")

    def test_split_root(self):
        assert split(SuffixSet.root(BIN), EPSILON) == S_("0", "1")

    def test_split_non_member(self):
        with pytest.raises(InvalidMove):
            split(S_("0", "1"), (0, 1))

    def test_merge(self):
        assert merge(S_("0", "01", "11"), (1,)) == S_("0", "1")

    def test_merge_requires_leaf_children(self):
        with pytest.raises(InvalidMove):
            merge(S_("0", "01", "011", "111"), (1,))

    @given(suffix_sets(), st.data())
    def test_split_then_merge_is_identity(self, S, data):
        s = data.draw(st.sampled_from(S.sorted_members()))
        assert merge(split(S, s), s) == S

    @given(suffix_sets(), st.data())
    @settings(max_examples=60)
    def test_moves_keep_cover(self, S, data):
        s = data.draw(st.sampled_from(S.sorted_members()))
        T = split(S, s)
        assert len(T) == len(S) + len(BIN) - 1
        assert unique_cover(T, T.depth)
        if s:
            parent = s[1:]
            if S.can_merge(parent):
                U = merge(S, parent)
                assert len(U) == len(S) - len(BIN) + 1
                assert unique_cover(U, max(U.depth, 1))

    def test_ternary_alphabet(self):
        S = SuffixSet.root(("a", "b", "c")).split(EPSILON).split(("b",))
        assert len(S) == 5 and unique_cover(S, 2)
        assert S.merge(("b",)) == SuffixSet.root(("a", "b", "c")).split(EPSILON)


class TestDescriptionLength:
    @pytest.mark.parametrize("S,bits", [(S_(""), 1.0), (S_("0", "1"), 3.0), (S_("0", "01", "11"), 5.0)])
    def test_examples(self, S, bits):
        assert description_length(S) == bits

    def test_window_map_agrees(self):
        for k in range(4):
            assert WindowMap(BIN, k).description_length() == SuffixSet.balanced(BIN, k).description_length()


class TestWindowMap:
    @given(st.integers(0, 4), st.lists(st.sampled_from(BIN), min_size=4, max_size=12))
    def test_equals_balanced_tree(self, k, obs):
        h = hist(obs)
        W, S = WindowMap(BIN, k), SuffixSet.balanced(BIN, k)
        for t in range(k, h.n + 1):
            if t == 0:
                continue
            assert W.state(h.prefix(t)) == S.state(h.prefix(t))

    def test_short_history_truncates(self):
        assert WindowMap(BIN, 3).state(hist([1])) == (1,)


class TestSerialization:
    @given(suffix_sets())
    def test_round_trip(self, S):
        assert SuffixSet.loads(S.dumps()) == SuffixSet(tuple(map(str, BIN)), frozenset(
            tuple(str(x) for x in m) for m in S.members))
        assert SuffixSet.loads(S.dumps(), BIN) == S

    def test_sorted_lines(self):
        assert S_("0", "01", "11").dumps().splitlines()[1:] == ["0", "01", "11"]
        assert SuffixSet.root(BIN).dumps().splitlines()[1:] == ["ε"]

    def test_bad_symbol_has_line_number(self):
        with pytest.raises(ValueError, match="line 3"):
            SuffixSet.loads("# alphabet 0 1\n0\n21\n", BIN)

    def test_format_context(self):
        assert format_context(()) == "ε"
        assert format_context(("ab", "c")) == "ab c"


class TestAcceptanceRule:
    @pytest.mark.parametrize("q", [0.01, 0.5, 1.0])
    @pytest.mark.parametrize("gain", [1e-9, 1e-3, 0.5, 1.0, 7.0, 1e6])
    def test_strict_improvement_always_accepted(self, q, gain):
        assert accept(100.0, 100.0 - gain, q)

    def test_equal_cost_rejected_at_q_one(self):
        assert not accept(10.0, 10.0, 1.0)

    def test_worse_proposal_uses_log_q(self):
        # accept iff old - new > log2 q
        assert accept(10.0, 10.5, 0.5)  # -0.5 > -1
        assert not accept(10.0, 11.5, 0.5)  # -1.5 > -1 fails

    def test_temperature_scales_difference(self):
        assert accept(10.0, 12.0, 0.5, temperature=4.0)
        assert not accept(10.0, 12.0, 0.5)


class FixedRng:
    """Draws a scripted member index, then p, then q."""

    def __init__(self, script):
        self.script = list(script)

    def integers(self, k):
        return self.script.pop(0) % k

    def random(self):
        return self.script.pop(0)


class TestImproveStep:
    def test_merge_with_deep_siblings_is_noop(self):
        S = S_("0", "01", "011", "111")
        h = hist([0, 1, 1])
        step = improve_step(S, h, FixedRng([1, 0.2, 0.5]), lambda *_: pytest.fail("no cost needed"))
        assert step.kind == "noop" and step.suffix_set == S

    def test_root_merge_is_noop(self):
        S = SuffixSet.root(BIN)
        step = improve_step(S, hist([0]), FixedRng([0, 0.1, 0.9]), lambda *_: 0.0)
        assert step.kind == "noop"

    @given(st.lists(st.tuples(st.integers(0, 20), st.floats(0, 1)), min_size=1, max_size=40))
    @settings(max_examples=40)
    def test_descent_when_q_is_one(self, draws):
        h = tiny_history(120, 3)
        fn = lambda S, hh: cost(S, hh).total_bits  # noqa: E731
        S = SuffixSet.root(BIN)
        c = fn(S, h)
        for idx, p in draws:
            S = phi_improve(S, h, FixedRng([idx, p, 1.0]), fn)
            c_new = fn(S, h)
            assert c_new <= c
            c = c_new

    def test_golden_trajectory(self):
        h = tiny_history(300, 7)
        cfg = CostConfig(reward_model="full")
        rng = np.random.default_rng(11)
        S = SuffixSet.root(BIN)
        got = []
        for _ in range(25):
            step = improve_step(S, h, rng, lambda T, hh: cost(T, hh, cfg).total_bits)
            S = step.suffix_set
            got.append((step.kind, format_context(step.chosen), int(step.accepted)))
        assert got == GOLDEN
        assert S == S_("0", "1")
        assert cost(S, h, cfg).total_bits == pytest.approx(345.2326366838748, abs=1e-9)


GOLDEN = [
    ("noop", "ε", 0), ("split", "ε", 1), ("split", "0", 0), ("merge", "0", 0), ("merge", "1", 0),
    ("split", "1", 0), ("split", "1", 0), ("split", "0", 0), ("split", "1", 0), ("split", "1", 0),
    ("split", "1", 0), ("split", "0", 0), ("merge", "1", 0), ("merge", "0", 0), ("merge", "0", 0),
    ("merge", "0", 0), ("merge", "1", 0), ("merge", "0", 0), ("split", "0", 0), ("merge", "1", 0),
    ("merge", "0", 0), ("merge", "1", 0), ("split", "0", 0), ("merge", "1", 0), ("merge", "1", 0),
]

"""Transition statistics and the code-length criteria for feature maps.

``build_counts`` turns a history and a feature map into sparse counts
``n[s, a, s', r']`` of transitions ``s --a--> s'`` with reward ``r'``.
Transitions run over cycles ``t = burn_in + 2 .. n``; the reward of the very
first cycle has no preceding state-action pair and is never counted.

``cost`` scores a map by the code length of the state sequence, plus the
code length of the rewards given the states, plus an optional complexity
penalty for the map.  ``icost`` instead codes the rewards alone, summing
over all state paths of the estimated model.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import coding
from ._kernels import forward_log2
from .features import FeatureMap, SuffixSet, format_context
from .histories import Alphabets, History

REWARD_MODELS = ("full", "state_only")
PARAM_COUNTS = ("sparse", "literal")


@dataclass(frozen=True)
class CostConfig:
    mode: str = "exact"
    alpha: float = 0.5
    reward_model: str = "state_only"
    phi_penalty: bool = True
    burn_in: int = 0
    icost_params: str = "sparse"

    def __post_init__(self):
        if self.mode not in coding.MODES:
            raise ValueError(f"unknown code mode {self.mode!r}")
        if self.reward_model not in REWARD_MODELS:
            raise ValueError(f"unknown reward model {self.reward_model!r}")
        if self.icost_params not in PARAM_COUNTS:
            raise ValueError(f"unknown parameter count {self.icost_params!r}")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.mode == "incremental" and not self.alpha > 0:
            raise ValueError("alpha must be > 0")

    def describe(self) -> dict:
        return {"mode": self.mode, "alpha": self.alpha, "reward_model": self.reward_model,
                "phi_penalty": self.phi_penalty, "burn_in": self.burn_in,
                "icost_params": self.icost_params}


@dataclass(frozen=True, eq=False)
class CountTensor:
    """Sparse transition-reward counts plus the state sequence they came from.

    ``src, act, dst, rew, count`` list the non-zero cells.  ``state_seq``
    holds state codes for the cycles in the sample; transition ``k`` goes from
    ``state_seq[k]`` to ``state_seq[k + 1]`` under ``actions[k]`` with reward
    ``rewards[k]``.
    """

    labels: tuple
    alphabets: Alphabets
    src: np.ndarray
    act: np.ndarray
    dst: np.ndarray
    rew: np.ndarray
    count: np.ndarray
    state_seq: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    offset: int = 0

    @property
    def m(self) -> int:
        return len(self.labels)

    @property
    def n_actions(self) -> int:
        return len(self.alphabets.actions)

    @property
    def n_rewards(self) -> int:
        return len(self.alphabets.rewards)

    @property
    def total(self) -> int:
        return int(self.count.sum())

    @cached_property
    def label_index(self) -> dict:
        return {s: i for i, s in enumerate(self.labels)}

    def dense(self) -> np.ndarray:
        """Counts as an ``(m, A, m, |R|)`` array."""
        out = np.zeros((self.m, self.n_actions, self.m, self.n_rewards), dtype=np.int64)
        np.add.at(out, (self.src, self.act, self.dst, self.rew), self.count)
        return out

    @cached_property
    def sa_totals(self) -> np.ndarray:
        """``n_{s+}^{a+}`` as an ``(m, A)`` array."""
        out = np.zeros((self.m, self.n_actions), dtype=np.int64)
        np.add.at(out, (self.src, self.act), self.count)
        return out

    @cached_property
    def sas_totals(self) -> np.ndarray:
        """``n_{ss'}^{a+}`` as an ``(m, A, m)`` array."""
        out = np.zeros((self.m, self.n_actions, self.m), dtype=np.int64)
        np.add.at(out, (self.src, self.act, self.dst), self.count)
        return out

    @cached_property
    def dst_reward_totals(self) -> np.ndarray:
        """``n_{+s'}^{+r'}`` as an ``(m, |R|)`` array."""
        out = np.zeros((self.m, self.n_rewards), dtype=np.int64)
        np.add.at(out, (self.dst, self.rew), self.count)
        return out

    @cached_property
    def occupancy(self) -> np.ndarray:
        return np.bincount(self.state_seq, minlength=self.m)

    def check(self) -> None:
        """Verify counts against the stored sequence and marginals against cells."""
        d = self.dense()
        if (d < 0).any():
            raise AssertionError("negative count")
        if d.sum() != len(self.actions):
            raise AssertionError("total does not match the number of transitions")
        if not np.array_equal(d.sum(axis=3), self.sas_totals):
            raise AssertionError("n_{ss'}^{a+} marginal mismatch")
        if not np.array_equal(d.sum(axis=(2, 3)), self.sa_totals):
            raise AssertionError("n_{s+}^{a+} marginal mismatch")
        if not np.array_equal(d.sum(axis=(0, 1)), self.dst_reward_totals):
            raise AssertionError("n_{+s'}^{+r'} marginal mismatch")
        again = np.zeros_like(d)
        s = self.state_seq
        np.add.at(again, (s[:-1], self.actions, s[1:], self.rewards), 1)
        if not np.array_equal(again, d):
            raise AssertionError("cells do not match the state sequence")

    # dict views used by the incremental cost updates
    @cached_property
    def state_rows(self) -> dict:
        rows: dict = defaultdict(Counter)
        for s, a, s2, c in zip(self.src.tolist(), self.act.tolist(), self.dst.tolist(), self.count.tolist()):
            rows[(s, a)][s2] += c
        return dict(rows)

    @cached_property
    def reward_rows_full(self) -> dict:
        rows: dict = defaultdict(Counter)
        for s, a, s2, r, c in zip(self.src.tolist(), self.act.tolist(), self.dst.tolist(),
                                  self.rew.tolist(), self.count.tolist()):
            rows[(s, a, s2)][r] += c
        return dict(rows)

    @cached_property
    def reward_rows_state(self) -> dict:
        rows: dict = defaultdict(Counter)
        for s2, r, c in zip(self.dst.tolist(), self.rew.tolist(), self.count.tolist()):
            rows[s2][r] += c
        return dict(rows)


def _compact(codes: np.ndarray, nodes: list) -> tuple[np.ndarray, tuple]:
    """Renumber codes by order of first appearance."""
    if codes.size == 0:
        return codes.astype(np.int64), ()
    # first occurrence of each node code
    first = np.full(len(nodes), codes.size, dtype=np.int64)
    np.minimum.at(first, codes, np.arange(codes.size))
    present = np.flatnonzero(first < codes.size)
    present = present[np.argsort(first[present], kind="stable")]
    rank = np.full(len(nodes), -1, dtype=np.int64)
    rank[present] = np.arange(present.size)
    return rank[codes], tuple(nodes[i] for i in present)


def counts_from_sequence(state_seq: np.ndarray, labels: tuple, actions: np.ndarray,
                         rewards: np.ndarray, alphabets: Alphabets, offset: int = 0) -> CountTensor:
    m, A, R = len(labels), len(alphabets.actions), len(alphabets.rewards)
    if state_seq.size >= 2:
        key = ((state_seq[:-1] * A + actions) * m + state_seq[1:]) * R + rewards
        if m * A * m * R <= 1 << 20:
            dense = np.bincount(key, minlength=m * A * m * R)
            cells = np.flatnonzero(dense)
            cnt = dense[cells]
        else:
            cells, cnt = np.unique(key, return_counts=True)
    else:
        cells = cnt = np.zeros(0, dtype=np.int64)
    rew = cells % R
    rest = cells // R
    dst = rest % m if m else rest
    rest = rest // m if m else rest
    act = rest % A
    src = rest // A
    return CountTensor(tuple(labels), alphabets, src, act, dst, rew, cnt.astype(np.int64),
                       state_seq, actions, rewards, offset)


def build_counts(phi: FeatureMap, h: History, burn_in: int = 0) -> CountTensor:
    """Count transitions of the state sequence ``Phi(h_1), ..., Phi(h_n)``.

    The first ``burn_in`` cycles are dropped, so transitions into cycles
    ``burn_in + 2 .. n`` are counted.  The state space is the set of states
    realized in the remaining cycles.
    """
    codes, nodes = phi.states_along(h)
    window = codes[burn_in:]
    seq, labels = _compact(window, nodes)
    lo = min(burn_in, h.n)
    actions = h.action_codes[lo:]
    rewards = h.reward_codes[lo + 1:]
    return counts_from_sequence(seq, labels, actions, rewards, h.alphabets, offset=lo)


# -- code lengths --------------------------------------------------------------

def _row_ids(keys: np.ndarray, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Distinct keys in ``[0, size)`` (sorted) and each entry's position among them."""
    if size <= 1 << 20:
        seen = np.zeros(size, dtype=np.int64)
        seen[keys] = 1
        uniq = np.flatnonzero(seen)
        pos = np.cumsum(seen) - 1
        return uniq, pos[keys]
    uniq, inv = np.unique(keys, return_inverse=True)
    return uniq, inv.reshape(-1)


def _sum_by(keys: np.ndarray, weights: np.ndarray, size: int) -> tuple[np.ndarray, np.ndarray]:
    uniq, inv = _row_ids(keys, size)
    return uniq, np.bincount(inv, weights=weights, minlength=uniq.size)


def _state_blocks(ct: CountTensor, mode: str, alpha: float):
    A, m = ct.n_actions, ct.m
    if ct.count.size == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    cell = (ct.src * A + ct.act) * m + ct.dst
    cells, cnt = _sum_by(cell, ct.count, m * A * m)
    rows, rid = _row_ids(cells // m, m * A)
    bits = coding.grouped_code_lengths(rid, cnt, rows.size, m, mode, alpha)
    return rows, bits


def _reward_blocks(ct: CountTensor, model: str, mode: str, alpha: float):
    A, m, R = ct.n_actions, ct.m, ct.n_rewards
    if ct.count.size == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    if model == "full":
        keys = (ct.src * A + ct.act) * m + ct.dst
        rows, rid = _row_ids(keys, m * A * m)
        cnt = ct.count
    else:
        cell = ct.dst * R + ct.rew
        cells, cnt = _sum_by(cell, ct.count, m * R)
        rows, rid = _row_ids(cells // R, m)
    bits = coding.grouped_code_lengths(rid, cnt, rows.size, R, mode, alpha)
    return rows, bits


def state_code_length(ct: CountTensor, mode: str = "exact", alpha: float = 0.5) -> float:
    """Sum over (s, a) of the code length of the successor counts."""
    return float(_state_blocks(ct, mode, alpha)[1].sum())


def reward_code_length(ct: CountTensor, model: str = "state_only", mode: str = "exact",
                       alpha: float = 0.5) -> float:
    """Rewards coded per (s, a, s') (``full``) or per successor state (``state_only``)."""
    if model not in REWARD_MODELS:
        raise ValueError(f"unknown reward model {model!r}")
    return float(_reward_blocks(ct, model, mode, alpha)[1].sum())


@dataclass
class CostReport:
    state_bits: float
    reward_bits: float
    phi_bits: float
    total_bits: float
    config: CostConfig
    n_states: int = 0
    n_transitions: int = 0
    state_blocks: dict = field(default_factory=dict)
    reward_blocks: dict = field(default_factory=dict)

    def dumps(self, extra: dict | None = None) -> str:
        lines = format_fields(self.config.describe())
        lines += [
            f"n_states = {self.n_states}",
            f"n_transitions = {self.n_transitions}",
            f"state_bits = {self.state_bits:.6f}",
            f"reward_bits = {self.reward_bits:.6f}",
            f"phi_bits = {self.phi_bits:.6f}",
            f"total_bits = {self.total_bits:.6f}",
        ]
        for k, v in (extra or {}).items():
            lines.append(f"{k} = {_fmt_value(v)}")
        return "\n".join(lines) + "\n"


def format_fields(fields: dict) -> list[str]:
    """``key = value`` lines with booleans lower-cased and floats at 6 decimals."""
    return [f"{k} = {_fmt_value(v)}" for k, v in fields.items()]


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def phi_bits(phi: FeatureMap, config: CostConfig) -> float:
    return float(phi.description_length()) if config.phi_penalty else 0.0


def cost_from_counts(ct: CountTensor, phi: FeatureMap, config: CostConfig,
                     breakdown: bool = False) -> CostReport:
    srows, sbits = _state_blocks(ct, config.mode, config.alpha)
    rrows, rbits = _reward_blocks(ct, config.reward_model, config.mode, config.alpha)
    state_bits = float(sbits.sum())
    reward_bits = float(rbits.sum())
    pb = phi_bits(phi, config)
    report = CostReport(state_bits, reward_bits, pb, state_bits + reward_bits + pb, config,
                        n_states=ct.m, n_transitions=ct.total)
    if breakdown:
        A, m, acts = ct.n_actions, ct.m, ct.alphabets.actions
        report.state_blocks = {(ct.labels[r // A], acts[r % A]): float(b) for r, b in zip(srows, sbits)}
        if config.reward_model == "full":
            report.reward_blocks = {(ct.labels[r // m // A], acts[(r // m) % A], ct.labels[r % m]): float(b)
                                    for r, b in zip(rrows, rbits)}
        else:
            report.reward_blocks = {(ct.labels[r],): float(b) for r, b in zip(rrows, rbits)}
    return report


def cost(phi: FeatureMap, h: History, config: CostConfig = CostConfig(),
         breakdown: bool = False) -> CostReport:
    """``Cost(Phi | h)``: state code + reward code + map complexity."""
    return cost_from_counts(build_counts(phi, h, config.burn_in), phi, config, breakdown)


# -- estimates -----------------------------------------------------------------

@dataclass
class MdpEstimate:
    """Frequency estimates over a (possibly extended) state space.

    ``T[s, a, s']`` transition probabilities (all-zero rows where ``(s, a)``
    was never tried), ``R_dist[s, a, s', r]`` reward distribution and
    ``R[s, a, s']`` expected reward value.  ``exploration_state`` is the index
    of the virtual absorbing state, if any.
    """

    labels: tuple
    T: np.ndarray
    R_dist: np.ndarray
    R: np.ndarray
    reward_values: np.ndarray
    exploration_state: int | None = None

    @property
    def m(self) -> int:
        return len(self.labels)

    @property
    def n_actions(self) -> int:
        return self.T.shape[1]


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros(np.broadcast(num, den).shape)
    np.divide(num, den, out=out, where=den > 0)
    return out


def estimate_mdp(ct: CountTensor) -> MdpEstimate:
    """Relative-frequency transition and reward estimates."""
    d = ct.dense().astype(float)
    sas = d.sum(axis=3)
    sa = sas.sum(axis=2)
    T = _safe_div(sas, sa[:, :, None])
    R_dist = _safe_div(d, sas[..., None])
    values = ct.alphabets.reward_values
    R = R_dist @ values
    return MdpEstimate(ct.labels, T, R_dist, R, values)


# -- improved cost ---------------------------------------------------------------

@dataclass
class UMatrices:
    """``U[a, r, s, s'] = T[s, a, s'] * R[s, a, s', r]`` and its parameter count."""

    U: np.ndarray
    n_params: int


def u_matrices(ct: CountTensor, reward_model: str = "full", params: str = "sparse") -> UMatrices:
    m, A, R = ct.m, ct.n_actions, ct.n_rewards
    d = ct.dense().astype(float)
    sa = d.sum(axis=(2, 3))
    if reward_model == "full":
        # n_{ss'}^{ar'} / n_{s+}^{a+}
        U = _safe_div(d, sa[:, :, None, None])
        sparse_M = sum(int(np.count_nonzero(d[s, a])) - 1 for s in range(m) for a in range(A) if sa[s, a] > 0)
    else:
        T = _safe_div(d.sum(axis=3), sa[:, :, None])
        nr = ct.dst_reward_totals.astype(float)
        Rs = _safe_div(nr, nr.sum(axis=1, keepdims=True))
        U = T[:, :, :, None] * Rs[None, None, :, :]
        nz_t = sum(int(np.count_nonzero(T[s, a])) - 1 for s in range(m) for a in range(A) if sa[s, a] > 0)
        nz_r = sum(int(np.count_nonzero(nr[s])) - 1 for s in range(m) if nr[s].sum() > 0)
        sparse_M = nz_t + nz_r
    M = sparse_M if params == "sparse" else m * (m - 1) * A * (R - 1)
    return UMatrices(np.ascontiguousarray(U.transpose(1, 3, 0, 2)), M)


def reward_log2_likelihood(U: np.ndarray, start: int, actions: np.ndarray, rewards: np.ndarray) -> float:
    """``log2 sum_{s_path} prod_t U[a_t, r_t, s_t, s_{t+1}]`` via a scaled forward pass."""
    if actions.size == 0:
        return 0.0
    return float(forward_log2(np.ascontiguousarray(U, dtype=float), int(start),
                              np.ascontiguousarray(actions, dtype=np.int64),
                              np.ascontiguousarray(rewards, dtype=np.int64)))


def icost_from_counts(ct: CountTensor, phi: FeatureMap, config: CostConfig) -> float:
    n = len(ct.actions)
    pb = phi_bits(phi, config)
    if n == 0:
        return pb
    um = u_matrices(ct, config.reward_model, config.icost_params)
    ll = reward_log2_likelihood(um.U, int(ct.state_seq[0]), ct.actions, ct.rewards)
    if ll == -math.inf:
        return math.inf
    return -ll + 0.5 * um.n_params * math.log2(n) + pb


def icost(phi: FeatureMap, h: History, config: CostConfig = CostConfig()) -> float:
    """Code length of the rewards given the actions, states summed out."""
    return icost_from_counts(build_counts(phi, h, config.burn_in), phi, config)


# -- incremental updates ---------------------------------------------------------

def cost_delta_split(ct: CountTensor, phi: SuffixSet, s, h: History,
                     config: CostConfig = CostConfig()) -> float:
    """``Cost(split(Phi, s) | h) - Cost(Phi | h)`` from the counts of ``Phi``."""
    s = tuple(s)
    new_phi = phi.split(s)
    code = ct.label_index.get(s)
    idx = np.zeros(0, dtype=np.int64) if code is None else np.flatnonzero(ct.state_seq == code)
    obs = h.observations
    new_labels = []
    for j in idx.tolist():
        i = ct.offset + j
        new_labels.append((obs[i - len(s)],) + s if i >= len(s) else s)
    return _relabel_delta(ct, idx, new_labels, config) + phi_bits(new_phi, config) - phi_bits(phi, config)


def cost_delta_merge(ct: CountTensor, phi: SuffixSet, s, h: History,
                     config: CostConfig = CostConfig()) -> float:
    """``Cost(merge(Phi, s) | h) - Cost(Phi | h)`` from the counts of ``Phi``."""
    s = tuple(s)
    new_phi = phi.merge(s)
    codes = [ct.label_index[c] for c in ((o,) + s for o in phi.alphabet) if c in ct.label_index]
    idx = np.flatnonzero(np.isin(ct.state_seq, codes)) if codes else np.zeros(0, dtype=np.int64)
    return _relabel_delta(ct, idx, [s] * idx.size, config) + phi_bits(new_phi, config) - phi_bits(phi, config)


def _row_bits(row: dict, m: int, config: CostConfig) -> float:
    return coding.sparse_code_length(list(row.values()), m, config.mode, config.alpha)


def _relabel_delta(ct: CountTensor, idx: np.ndarray, new_labels: list, config: CostConfig) -> float:
    """Code-length change when the cycles ``idx`` get ``new_labels``.

    Only blocks that contain a relabelled cycle are recoded; the remaining
    state blocks change only through the number of states.
    """
    if idx.size == 0:
        return 0.0
    codes = dict(ct.label_index)
    new_code = {}
    for j, lab in zip(idx.tolist(), new_labels):
        new_code[j] = codes.setdefault(lab, len(codes))

    seq = ct.state_seq
    occ = Counter({c: int(v) for c, v in enumerate(ct.occupancy) if v})
    for j, c in new_code.items():
        occ[int(seq[j])] -= 1
        occ[c] += 1
    m_old = ct.m
    m_new = sum(1 for v in occ.values() if v > 0)

    n_trans = len(ct.actions)
    touched = sorted({k for j in new_code for k in (j - 1, j) if 0 <= k < n_trans})
    acts, rews = ct.actions, ct.rewards
    d_state: dict = defaultdict(Counter)
    d_reward: dict = defaultdict(Counter)
    full = config.reward_model == "full"
    for k in touched:
        a, r = int(acts[k]), int(rews[k])
        s0, s1 = int(seq[k]), int(seq[k + 1])
        n0, n1 = new_code.get(k, s0), new_code.get(k + 1, s1)
        d_state[(s0, a)][s1] -= 1
        d_state[(n0, a)][n1] += 1
        if full:
            d_reward[(s0, a, s1)][r] -= 1
            d_reward[(n0, a, n1)][r] += 1
        else:
            d_reward[s1][r] -= 1
            d_reward[n1][r] += 1

    delta = 0.0
    old_rows = ct.state_rows
    shift_skip = 0.0
    for key, diff in d_state.items():
        old = old_rows.get(key, {})
        new = Counter(old)
        new.update(diff)
        new = {k: v for k, v in new.items() if v}
        delta += _row_bits(new, m_new, config) - _row_bits(old, m_old, config)
        if old:
            shift_skip += coding.dimension_shift(sum(old.values()), m_old, m_new, config.mode, config.alpha)
    if m_new != m_old:
        # every other visited (s, a) block only sees its category count change
        shift = sum(coding.dimension_shift(sum(row.values()), m_old, m_new, config.mode, config.alpha)
                    for row in old_rows.values())
        delta += shift - shift_skip

    R = ct.n_rewards
    rrows = ct.reward_rows_full if full else ct.reward_rows_state
    for key, diff in d_reward.items():
        old = rrows.get(key, {})
        new = Counter(old)
        new.update(diff)
        new = {k: v for k, v in new.items() if v}
        delta += _row_bits(new, R, config) - _row_bits(old, R, config)
    return delta


def describe_counts(ct: CountTensor) -> str:
    """Human-readable listing of the non-zero cells."""
    acts, rews = ct.alphabets.actions, ct.alphabets.rewards
    lines = []
    for s, a, s2, r, c in zip(ct.src, ct.act, ct.dst, ct.rew, ct.count):
        lines.append(f"{format_context(ct.labels[s])} -{acts[a]}-> {format_context(ct.labels[s2])} "
                     f"r={rews[r]}: {c}")
    return "\n".join(lines)

"""Value iteration, greedy actions and the absorbing exploration state."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import value_sweeps
from .mdpcore import CountTensor, MdpEstimate

EXPLORE = "<explore>"


@dataclass
class ValueFunction:
    labels: tuple
    Q: np.ndarray
    V: np.ndarray
    gamma: float
    residual: float
    sweeps: int
    converged: bool

    def index(self, s) -> int:
        try:
            return self.labels.index(s)
        except ValueError:
            raise KeyError(f"unknown state {s!r}") from None


def value_iteration(est: MdpEstimate, gamma: float, tol: float = 1e-8, max_sweeps: int = 10**6,
                    initial: np.ndarray | None = None) -> ValueFunction:
    """Iterate ``Q = sum_s' T (R + gamma V)``, ``V = max_a Q`` from ``V = 0``.

    Stops when successive ``V`` differ by at most ``tol`` in sup-norm; the
    returned ``converged`` flag is False if ``max_sweeps`` ran out first.
    """
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"gamma must lie in [0, 1), got {gamma}")
    if not tol > 0:
        raise ValueError("tol must be > 0")
    T = np.ascontiguousarray(est.T, dtype=float)
    ER = np.einsum("sat,sat->sa", T, est.R)
    V0 = np.zeros(est.m) if initial is None else np.asarray(initial, dtype=float).copy()
    Q, V, residual, sweeps = value_sweeps(T, ER, float(gamma), float(tol), int(max_sweeps), V0)
    return ValueFunction(tuple(est.labels), Q, V, gamma, float(residual), int(sweeps), bool(residual <= tol))


def best_action(vf: ValueFunction, s) -> int:
    """Index of an action maximising ``Q[s]``; ties go to the lowest index."""
    return int(np.argmax(vf.Q[vf.index(s)]))


def bellman_residual(est: MdpEstimate, vf: ValueFunction) -> float:
    """Sup-norm of ``B(V) - V`` for the Bellman optimality operator ``B``."""
    Q = np.einsum("sat,sat->sa", est.T, est.R + vf.gamma * vf.V[None, None, :])
    return float(np.abs(Q.max(axis=1) - vf.V).max()) if est.m else 0.0


@dataclass(frozen=True)
class ExplorationConfig:
    enabled: bool = True
    bonus: float | None = None  # None: use default_bonus()

    def resolve(self, gamma: float, n_state_actions: int, reward_values) -> float:
        top = float(np.max(reward_values))
        if self.bonus is not None:
            if self.bonus <= top:
                raise ValueError(f"exploration bonus {self.bonus} must exceed the largest reward {top}")
            return float(self.bonus)
        return default_bonus(gamma, n_state_actions, reward_values)


def default_bonus(gamma: float, n_state_actions: int, reward_values) -> float:
    """``(1 - gamma)^-1 * |S x A| * max |r|`` (at least 1 per unit)."""
    scale = max(float(np.max(np.abs(reward_values))), 1.0)
    return scale * max(n_state_actions, 1) / (1.0 - gamma)


def extend_exploration(ct: CountTensor, cfg: ExplorationConfig | float = ExplorationConfig(),
                       gamma: float = 0.0) -> MdpEstimate:
    """Add an absorbing state reached from every ``(s, a)`` with one virtual count.

    The virtual count enters the denominator, so a pair tried ``k`` times
    moves to the exploration state with probability ``1 / (k + 1)``.  Entering
    and staying in the exploration state both pay the bonus, given directly
    or resolved from ``cfg`` and ``gamma``.
    """
    m, A, R = ct.m, ct.n_actions, ct.n_rewards
    if isinstance(cfg, ExplorationConfig):
        bonus = cfg.resolve(gamma, m * A, ct.alphabets.reward_values)
    else:
        bonus = float(cfg)
    d = np.zeros((m + 1, A, m + 1, R))
    d[:m, :, :m, :] = ct.dense()
    sas = d.sum(axis=3)
    sas[:m, :, m] = 1.0
    sas[m, :, m] = 1.0
    sa = sas.sum(axis=2)
    T = sas / sa[:, :, None]
    R_dist = np.zeros_like(d)
    np.divide(d, sas[..., None], out=R_dist, where=sas[..., None] > 0)
    values = ct.alphabets.reward_values
    Rexp = R_dist @ values
    Rexp[:, :, m] = bonus
    return MdpEstimate(ct.labels + (EXPLORE,), T, R_dist, Rexp, values, exploration_state=m)

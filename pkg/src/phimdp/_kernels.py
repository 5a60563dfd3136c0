"""Compiled inner loops (value-iteration sweeps and the scaled forward pass)."""

import numba
import numpy as np


@numba.njit(cache=True)
def forward_log2(U, start, actions, rewards):
    """log2 of sum over state paths of prod_t U[a_t, r_t, s_t, s_{t+1}] from ``start``.

    Rescales the forward vector every step; returns -inf when the path mass
    vanishes.
    """
    m = U.shape[2]
    v = np.zeros(m)
    v[start] = 1.0
    w = np.empty(m)
    total = 0.0
    for t in range(actions.shape[0]):
        M = U[actions[t], rewards[t]]
        for j in range(m):
            acc = 0.0
            for i in range(m):
                acc += v[i] * M[i, j]
            w[j] = acc
        c = 0.0
        for j in range(m):
            c += w[j]
        if c <= 0.0:
            return -np.inf
        for j in range(m):
            v[j] = w[j] / c
        total += np.log2(c)
    return total


@numba.njit(cache=True)
def value_sweeps(T, ER, gamma, tol, max_sweeps, V0):
    """Synchronous Bellman sweeps ``Q <- ER + gamma T V``, ``V <- max_a Q``.

    ``ER[s, a]`` is the expected immediate reward.  Stops once the sup-norm
    change of ``V`` is at most ``tol``.
    """
    m, A = ER.shape
    V = V0.copy()
    Vn = np.empty(m)
    Q = np.zeros((m, A))
    residual = np.inf
    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        for s in range(m):
            best = -np.inf
            for a in range(A):
                acc = 0.0
                for s2 in range(m):
                    p = T[s, a, s2]
                    if p != 0.0:
                        acc += p * V[s2]
                q = ER[s, a] + gamma * acc
                Q[s, a] = q
                if q > best:
                    best = q
            Vn[s] = best
        residual = 0.0
        for s in range(m):
            d = abs(Vn[s] - V[s])
            if d > residual:
                residual = d
            V[s] = Vn[s]
        if residual <= tol:
            break
    return Q, V, residual, sweeps


@numba.njit(cache=True)
def tree_walk(child, obs):
    """Node reached from the root by reading ``obs`` backwards from each ``t``.

    Stops at a leaf or when the observations run out.
    """
    n = obs.shape[0]
    out = np.empty(n, dtype=np.int64)
    for t in range(n):
        node = 0
        d = 0
        while child[node, 0] >= 0 and d <= t:
            node = child[node, obs[t - d]]
            d += 1
        out[t] = node
    return out

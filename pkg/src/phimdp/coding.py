"""Code lengths for i.i.d. categorical sequences, in bits.

Every code length here is a function of the count vector only.  Four
variants are supported:

``exact``
    n H(n/n) + (m-1)/2 log n
``sparse``
    n H(n/n) + (m'-1)/2 log n + m, with m' the number of non-empty categories
``combinatorial``
    log(n! / prod n_i!) + (m-1) log n
``incremental``
    -log of the sequential Dirichlet(alpha) estimate (KT for alpha = 1/2)

An empty count vector (n = 0) codes to 0 bits in every mode.  Lengths are
real-valued and only meaningful for comparisons up to O(1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln

MODES = ("exact", "sparse", "combinatorial", "incremental")
LN2 = math.log(2.0)


@dataclass(frozen=True)
class CountVector:
    """Non-negative integer counts over ``m`` categories."""

    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if len(counts) == 0:
            raise ValueError("count vector needs at least one category")
        if any(c < 0 for c in counts):
            raise ValueError(f"negative count in {counts}")
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_sequence(cls, xs: Sequence[int], m: int) -> "CountVector":
        counts = [0] * m
        for x in xs:
            counts[x] += 1
        return cls(tuple(counts))

    @property
    def m(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def nonzero(self) -> int:
        return sum(1 for c in self.counts if c > 0)


def entropy(p: Sequence[float]) -> float:
    """Binary entropy ``-sum p_i log2 p_i`` with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("expected a non-empty probability vector")
    if np.any(p < 0):
        raise ValueError("probabilities must be non-negative")
    if abs(p.sum() - 1.0) > 1e-12:
        raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
    nz = p[p > 0]
    return float(max(0.0, -(nz * np.log2(nz)).sum()))


def _check_mode(mode: str, alpha: float) -> None:
    if mode not in MODES:
        raise ValueError(f"unknown code mode {mode!r}; expected one of {MODES}")
    if mode == "incremental" and not alpha > 0:
        raise ValueError(f"regularizer alpha must be > 0, got {alpha}")


def _xlog2x(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log2(x[pos])
    return out


def grouped_code_lengths(rows: np.ndarray, counts: np.ndarray, n_rows: int,
                         m: int, mode: str = "exact", alpha: float = 0.5) -> np.ndarray:
    """Code length of many count vectors given in sparse form.

    Parameters
    ----------
    rows : (k,) int array
        Block id of each non-zero entry.
    counts : (k,) int array
        The non-zero counts themselves.
    n_rows : int
        Number of blocks; blocks without entries code to 0.
    m : int
        Category dimension shared by all blocks.

    Returns
    -------
    (n_rows,) float array of bits per block.
    """
    _check_mode(mode, alpha)
    rows = np.asarray(rows, dtype=np.int64)
    counts = np.asarray(counts, dtype=float)
    if counts.size and counts.min() <= 0:
        raise ValueError("sparse entries must be strictly positive")
    totals = np.bincount(rows, weights=counts, minlength=n_rows)
    used = totals > 0
    bits = np.zeros(n_rows)
    logn = np.zeros(n_rows)
    logn[used] = np.log2(totals[used])

    if mode in ("exact", "sparse"):
        # n H(n/n) = n log n - sum n_i log n_i
        bits += _xlog2x(totals) - np.bincount(rows, weights=_xlog2x(counts), minlength=n_rows)
        if mode == "exact":
            bits += 0.5 * (m - 1) * logn
        else:
            nnz = np.bincount(rows, minlength=n_rows)
            bits += np.where(used, 0.5 * (nnz - 1) * logn + m, 0.0)
    elif mode == "combinatorial":
        lf = gammaln(totals + 1) - np.bincount(rows, weights=gammaln(counts + 1), minlength=n_rows)
        bits += lf / LN2 + (m - 1) * logn
    else:
        per = gammaln(counts + alpha) - gammaln(alpha)
        lp = gammaln(m * alpha) - gammaln(totals + m * alpha) + np.bincount(rows, weights=per, minlength=n_rows)
        bits += np.where(used, -lp / LN2, 0.0)
    return np.maximum(bits, 0.0)


def code_length(nv: CountVector | Sequence[int], mode: str = "exact", alpha: float = 0.5) -> float:
    """Code length in bits of a sequence summarised by its counts."""
    if not isinstance(nv, CountVector):
        nv = CountVector(tuple(nv))
    _check_mode(mode, alpha)
    c = np.asarray(nv.counts)
    nz = c[c > 0]
    return float(grouped_code_lengths(np.zeros(nz.size, dtype=np.int64), nz, 1, nv.m, mode, alpha)[0])


def sparse_code_length(nonzero: Sequence[int], m: int, mode: str = "exact", alpha: float = 0.5) -> float:
    """Like :func:`code_length` but takes only the non-zero counts plus ``m``."""
    nz = np.asarray([c for c in nonzero if c > 0], dtype=float)
    return float(grouped_code_lengths(np.zeros(nz.size, dtype=np.int64), nz, 1, m, mode, alpha)[0])


def dimension_shift(n: float, m_old: int, m_new: int, mode: str = "exact", alpha: float = 0.5) -> float:
    """Change in a block's code length when only its category count changes.

    For every mode the dependence on ``m`` is through the block total ``n``
    alone, so this needs no access to the individual counts.
    """
    if n <= 0 or m_old == m_new:
        return 0.0
    if mode == "exact":
        return 0.5 * (m_new - m_old) * math.log2(n)
    if mode == "sparse":
        return float(m_new - m_old)
    if mode == "combinatorial":
        return (m_new - m_old) * math.log2(n)
    _check_mode(mode, alpha)
    return (math.lgamma(n + m_new * alpha) - math.lgamma(m_new * alpha)
            - math.lgamma(n + m_old * alpha) + math.lgamma(m_old * alpha)) / LN2

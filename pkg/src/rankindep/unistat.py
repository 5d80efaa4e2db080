"""Univariate rank correlations and their exact null moments.

The ``*_from_ranks`` kernels work along the last axis, so the same code
evaluates one sample or a whole Monte-Carlo batch of concomitant ranks.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .ranks import PairedSample, RankProfile, concomitant_profile

__all__ = [
    "NullMoments",
    "xi",
    "spearman",
    "kendall",
    "quadrant",
    "count_inversions",
    "xi_from_ranks",
    "spearman_from_ranks",
    "kendall_from_ranks",
    "quadrant_from_ranks",
    "inversions_batch",
    "xi_null_variance",
    "tau_null_variance",
    "quadrant_null_variance",
    "spearman_null_variance",
]

ProfileLike = Union[RankProfile, PairedSample]


def _profile(obj: ProfileLike, tie_seed=None) -> RankProfile:
    if isinstance(obj, RankProfile):
        return obj
    if isinstance(obj, PairedSample):
        return concomitant_profile(obj, tie_seed)
    raise TypeError(f"expected RankProfile or PairedSample, got {type(obj).__name__}")


# -- vectorised kernels ------------------------------------------------------

def xi_from_ranks(R: np.ndarray) -> np.ndarray:
    R = np.asarray(R)
    n = R.shape[-1]
    total = np.abs(np.diff(R, axis=-1)).sum(axis=-1)
    return 1.0 - 3.0 * total / (n * n - 1.0)


def spearman_from_ranks(R: np.ndarray) -> np.ndarray:
    R = np.asarray(R)
    n = R.shape[-1]
    d = np.arange(1, n + 1) - R
    return 1.0 - 6.0 * (d * d).sum(axis=-1) / (n * (n * n - 1.0))


def inversions_batch(R: np.ndarray) -> np.ndarray:
    """Inversion counts of rank rows (values 1..n) with a vectorised Fenwick tree."""
    R = np.atleast_2d(np.asarray(R, dtype=np.int64))
    m, n = R.shape
    tree = np.zeros((m, n + 1), dtype=np.int64)
    rows = np.arange(m)
    inv = np.zeros(m, dtype=np.int64)
    for j in range(n):
        v = R[:, j]
        seen_le = np.zeros(m, dtype=np.int64)
        idx = v.copy()
        while True:
            live = idx > 0
            if not live.any():
                break
            seen_le[live] += tree[rows[live], idx[live]]
            idx[live] -= idx[live] & -idx[live]
        inv += j - seen_le
        idx = v.copy()
        while True:
            live = idx <= n
            if not live.any():
                break
            tree[rows[live], idx[live]] += 1
            idx[live] += idx[live] & -idx[live]
    return inv


def kendall_from_ranks(R: np.ndarray) -> np.ndarray:
    R = np.asarray(R)
    n = R.shape[-1]
    inv = inversions_batch(R.reshape(-1, n)).reshape(R.shape[:-1])
    return 1.0 - 4.0 * inv / (n * (n - 1.0))


def quadrant_from_ranks(x_ranks: np.ndarray, y_ranks: np.ndarray) -> np.ndarray:
    x_ranks = np.asarray(x_ranks)
    y_ranks = np.asarray(y_ranks)
    n = x_ranks.shape[-1]
    # rank r lies above the sample median iff 2r - (n+1) > 0
    s = np.sign(2 * x_ranks - (n + 1)) * np.sign(2 * y_ranks - (n + 1))
    return s.sum(axis=-1) / n


# -- merge-sort inversion count ---------------------------------------------

def count_inversions(seq: Sequence) -> int:
    """Number of pairs i < j with seq[i] > seq[j], by bottom-up merge sort."""
    a = list(seq)
    n = len(a)
    buf = [None] * n
    inv = 0
    width = 1
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if a[j] < a[i]:
                    buf[k] = a[j]
                    inv += mid - i
                    j += 1
                else:
                    buf[k] = a[i]
                    i += 1
                k += 1
            buf[k:hi] = a[i:mid] + a[j:hi]
        a, buf = buf, a
        width *= 2
    return inv


# -- statistics on a single sample -------------------------------------------

def xi(profile: ProfileLike) -> float:
    """Chatterjee's correlation of y on x (asymmetric)."""
    p = _profile(profile)
    return float(xi_from_ranks(p.concomitant_ranks))


def spearman(profile: ProfileLike) -> float:
    p = _profile(profile)
    return float(spearman_from_ranks(p.concomitant_ranks))


def kendall(sample: ProfileLike) -> float:
    """Kendall's tau in O(n log n) via inversions of the concomitant ranks."""
    p = _profile(sample)
    n = p.n
    inv = count_inversions(p.concomitant_ranks.tolist())
    return 1.0 - 4.0 * inv / (n * (n - 1.0))


def quadrant(sample: ProfileLike) -> float:
    """Quadrant correlation: mean sign of median-centred coordinate products.

    Computed on ranks, which equals the value definition (even-n median is the
    mid-point of the two central order statistics) for tie-free data.
    """
    p = _profile(sample)
    return float(quadrant_from_ranks(p.x_ranks, p.y_ranks))


# -- exact null moments --------------------------------------------------------

@dataclass(frozen=True)
class NullMoments:
    """Null mean and variance of sqrt(n) * statistic, exact rationals."""

    n: int
    mean: Fraction
    variance_of_sqrt_n_stat: Fraction
    asymptotic_variance: Fraction

    @property
    def sd(self) -> float:
        return float(self.variance_of_sqrt_n_stat) ** 0.5


def _check_n(n: int) -> int:
    if int(n) != n or n < 2:
        raise ValueError(f"n must be an integer >= 2, got {n!r}")
    return int(n)


def xi_null_variance(n: int) -> NullMoments:
    n = _check_n(n)
    v = Fraction(n * (n - 2) * (4 * n - 7), 10 * (n + 1) * (n - 1) ** 2)
    return NullMoments(n, Fraction(0), v, Fraction(2, 5))


def tau_null_variance(n: int) -> NullMoments:
    n = _check_n(n)
    return NullMoments(n, Fraction(0), Fraction(2 * (2 * n + 5), 9 * (n - 1)), Fraction(4, 9))


def quadrant_null_variance(n: int) -> NullMoments:
    n = _check_n(n)
    v = Fraction(n - 1, n) if n % 2 else Fraction(n, n - 1)
    return NullMoments(n, Fraction(0), v, Fraction(1))


def spearman_null_variance(n: int) -> NullMoments:
    """Classical V[S] = 1/(n-1), i.e. V[sqrt(n) S] = n/(n-1)."""
    n = _check_n(n)
    return NullMoments(n, Fraction(0), Fraction(n, n - 1), Fraction(1))

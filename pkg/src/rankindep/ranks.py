"""Ranks for scalars and vectors.

Everything downstream consumes integer ranks produced here. Ties are broken
uniformly at random from an explicit seed, so a rank profile is a pure
function of ``(data, tie_seed)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "PairedSample",
    "RankProfile",
    "MultiSample",
    "MultiRankProfile",
    "rank_vector",
    "concomitant_profile",
    "multivariate_ranks",
    "ranks_along_last_axis",
    "inverse_permutation",
]


def _as_finite_1d(values, name: str = "values") -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < 2:
        raise ValueError(f"{name} needs at least 2 observations, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def _as_finite_2d(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a matrix of shape (n, d), got {arr.shape}")
    if arr.shape[1] < 1:
        raise ValueError(f"{name} needs at least one column")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class PairedSample:
    """n observations of two real scalars."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = _as_finite_1d(self.x, "x")
        y = _as_finite_1d(self.y, "y")
        if x.size != y.size:
            raise ValueError(f"x and y differ in length: {x.size} vs {y.size}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return int(self.x.size)

    def swapped(self) -> "PairedSample":
        return PairedSample(self.y, self.x)


@dataclass(frozen=True)
class RankProfile:
    """Integer ranks derived from a paired sample.

    ``concomitant_ranks[i]`` is the rank of the y-value paired with the
    (i+1)-th smallest x. All three arrays are permutations of ``1..n``.
    """

    concomitant_ranks: np.ndarray
    x_ranks: np.ndarray
    y_ranks: np.ndarray
    tie_seed: Optional[int] = None

    @property
    def n(self) -> int:
        return int(self.concomitant_ranks.size)

    def swapped(self) -> "RankProfile":
        """Profile of (y, x): concomitant ranks of x after sorting by y."""
        order_y = inverse_permutation(self.y_ranks - 1)
        return RankProfile(
            concomitant_ranks=self.x_ranks[order_y],
            x_ranks=self.y_ranks,
            y_ranks=self.x_ranks,
            tie_seed=self.tie_seed,
        )

    @classmethod
    def from_concomitant(cls, ranks) -> "RankProfile":
        """Profile whose x-values are already sorted (x_ranks = 1..n)."""
        r = np.asarray(ranks, dtype=np.int64)
        n = r.size
        if n < 2 or not np.array_equal(np.sort(r), np.arange(1, n + 1)):
            raise ValueError("concomitant ranks must be a permutation of 1..n with n >= 2")
        return cls(concomitant_ranks=r, x_ranks=np.arange(1, n + 1), y_ranks=r.copy())


def inverse_permutation(perm: np.ndarray) -> np.ndarray:
    """Inverse of a 0-based permutation, along the last axis."""
    perm = np.asarray(perm)
    inv = np.empty_like(perm)
    idx = np.broadcast_to(np.arange(perm.shape[-1]), perm.shape)
    np.put_along_axis(inv, perm, idx, axis=-1)
    return inv


def _rank_with_rng(arr: np.ndarray, rng: Optional[np.random.Generator]) -> np.ndarray:
    order = np.argsort(arr, kind="stable")
    sorted_vals = arr[order]
    if np.any(sorted_vals[1:] == sorted_vals[:-1]):
        if rng is None:
            rng = np.random.default_rng()
        jitter = rng.permutation(arr.size)
        order = np.lexsort((jitter, arr))
    ranks = np.empty(arr.size, dtype=np.int64)
    ranks[order] = np.arange(1, arr.size + 1)
    return ranks


def rank_vector(values, tie_seed: Optional[int] = None) -> np.ndarray:
    """Ranks 1..n of ``values``; ties are broken uniformly at random.

    >>> rank_vector([0.3, 0.1, 0.9]).tolist()
    [2, 1, 3]
    """
    arr = _as_finite_1d(values)
    rng = None if tie_seed is None else np.random.default_rng(tie_seed)
    return _rank_with_rng(arr, rng)


def concomitant_profile(sample: PairedSample, tie_seed: Optional[int] = None) -> RankProfile:
    if not isinstance(sample, PairedSample):
        sample = PairedSample(*sample)
    rng = None if tie_seed is None else np.random.default_rng(tie_seed)
    # x first, then y: the draw order is part of the determinism contract
    rx = _rank_with_rng(sample.x, rng)
    ry = _rank_with_rng(sample.y, rng)
    order_x = inverse_permutation(rx - 1)
    return RankProfile(concomitant_ranks=ry[order_x], x_ranks=rx, y_ranks=ry, tie_seed=tie_seed)


def ranks_along_last_axis(a: np.ndarray) -> np.ndarray:
    """Ranks 1..n along the last axis for tie-free (continuous) batches."""
    order = np.argsort(a, axis=-1, kind="stable")
    return inverse_permutation(order) + 1


@dataclass(frozen=True)
class MultiSample:
    """n observations of a p-vector paired with a q-vector."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = _as_finite_2d(self.X, "X")
        Y = _as_finite_2d(self.Y, "Y")
        if X.shape[0] != Y.shape[0]:
            raise ValueError(f"X and Y differ in row count: {X.shape[0]} vs {Y.shape[0]}")
        if X.shape[0] < 2:
            raise ValueError("need at least 2 rows")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return int(self.X.shape[0])

    @property
    def p(self) -> int:
        return int(self.X.shape[1])

    @property
    def q(self) -> int:
        return int(self.Y.shape[1])

    def swapped(self) -> "MultiSample":
        return MultiSample(self.Y, self.X)


@dataclass(frozen=True)
class MultiRankProfile:
    """Componentwise dominance counts and their sums."""

    rX: np.ndarray
    rY: np.ndarray
    rXY: np.ndarray
    self_inclusion: bool = False
    RX: int = field(init=False)
    RY: int = field(init=False)
    RXY: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "RX", int(self.rX.sum()))
        object.__setattr__(self, "RY", int(self.rY.sum()))
        object.__setattr__(self, "RXY", int(self.rXY.sum()))

    @property
    def n(self) -> int:
        return int(self.rX.size)


def dominance_matrix(M: np.ndarray, self_inclusion: bool = False) -> np.ndarray:
    """Boolean ``D[i, j] = all(M[j] <= M[i])``."""
    D = np.all(M[None, :, :] <= M[:, None, :], axis=-1)
    if not self_inclusion:
        np.fill_diagonal(D, False)
    return D


def multivariate_ranks(sample: MultiSample, self_inclusion: bool = False) -> MultiRankProfile:
    """Dominance counts ``rX_i = #{j : X_j <= X_i componentwise}``.

    The pair ``j = i`` is excluded unless ``self_inclusion`` is set.
    """
    if not isinstance(sample, MultiSample):
        sample = MultiSample(*sample)
    DX = dominance_matrix(sample.X, self_inclusion)
    DY = dominance_matrix(sample.Y, self_inclusion)
    return MultiRankProfile(
        rX=DX.sum(axis=1).astype(np.int64),
        rY=DY.sum(axis=1).astype(np.int64),
        rXY=(DX & DY).sum(axis=1).astype(np.int64),
        self_inclusion=self_inclusion,
    )

"""Multivariate extensions.

Two routes to a scalar statistic for vectors:

* dominance-count (Grothe-style) multivariate Kendall tau and Spearman rho,
  whose null spread depends on the dimensions and is estimated by permutation;
* a binary-expansion merge of each row into one number, after which the
  univariate statistics and their analytic nulls apply unchanged.

Chatterjee's xi for vectors always goes through the merge.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional

import numpy as np

from .combined import (
    DegenerateStatisticError,
    TestOutcome,
    evaluate_method,
    statistics_from_rank_rows,
)
from .permutation import DEGENERATE_FRACTION, DegeneratePermutationError, PermutationPlan, permutation_p
from .ranks import MultiRankProfile, MultiSample, dominance_matrix, inverse_permutation, multivariate_ranks

__all__ = [
    "BorelConfig",
    "MvStatValue",
    "MV_METHODS",
    "MV_MODES",
    "grothe_tau",
    "grothe_spearman",
    "borel_merge",
    "borel_ranks",
    "borel_stat",
    "mv_test",
    "mv_combined",
    "mv_permutation_panel",
    "mv_analytic_panel",
]

MV_METHODS = ("xisym", "spearman", "kendall", "cs", "ck")
MV_MODES = ("grothe_permutation", "borel_analytic", "borel_permutation")
_MONOTONE = {"spearman": "spearman", "cs": "spearman", "kendall": "kendall", "ck": "kendall"}
ROOT_5_2 = math.sqrt(5.0 / 2.0)
_WORD = 63


# -- Grothe-style statistics ---------------------------------------------------

def _grothe_tau_arrays(n, RX, RY, RXY):
    N = n * (n - 1.0)
    RX = np.asarray(RX, dtype=float)
    RY = np.asarray(RY, dtype=float)
    den2 = RX * RY * (N - RX) * (N - RY)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den2 > 0, (N * np.asarray(RXY, dtype=float) - RX * RY) / np.sqrt(np.where(den2 > 0, den2, 1.0)), np.nan)


def _grothe_spearman_arrays(n, sum_rxry, RX, RY, RXY, SX, SY):
    c1 = 1.0 / (n * (n - 1.0) * (n - 2.0))
    c2 = 1.0 / (n * n * (n - 1.0) ** 2)
    sxy = c1 * np.asarray(sum_rxry, dtype=float) - c2 * RX * RY - c1 * np.asarray(RXY, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        ok = (SX > 0) & (SY > 0)
        return np.where(ok, sxy / np.sqrt(np.where(ok, SX * SY, 1.0)), np.nan)


def _grothe_marginal_var(n, r):
    """c1 * sum r_i (r_i - 1) - c2 * (sum r_i)^2, a U-statistic for Var F(X)."""
    r = np.asarray(r, dtype=float)
    c1 = 1.0 / (n * (n - 1.0) * (n - 2.0))
    c2 = 1.0 / (n * n * (n - 1.0) ** 2)
    return c1 * np.sum(r * (r - 1.0), axis=-1) - c2 * np.sum(r, axis=-1) ** 2


def grothe_tau(profile: MultiRankProfile) -> float:
    n = profile.n
    if n < 3:
        raise ValueError("grothe_tau needs n >= 3")
    value = float(_grothe_tau_arrays(n, profile.RX, profile.RY, profile.RXY))
    if not math.isfinite(value):
        raise DegenerateStatisticError("multivariate tau undefined: degenerate dominance counts")
    return value


def grothe_spearman(profile: MultiRankProfile) -> float:
    n = profile.n
    if n < 3:
        raise ValueError("grothe_spearman needs n >= 3")
    SX = _grothe_marginal_var(n, profile.rX)
    SY = _grothe_marginal_var(n, profile.rY)
    value = float(_grothe_spearman_arrays(
        n, np.dot(profile.rX, profile.rY), profile.RX, profile.RY, profile.RXY, SX, SY))
    if not math.isfinite(value):
        raise DegenerateStatisticError("multivariate Spearman undefined: nonpositive variance term")
    return value


# -- binary-expansion merge ----------------------------------------------------

@dataclass(frozen=True)
class BorelConfig:
    """Bit budget of the binary-expansion merge.

    ``negative="complement"`` stores the bitwise complement of |x| for
    negative entries, which keeps the map order-preserving for d = 1;
    ``"literal"`` stores |x| after the sign bit.
    """

    integer_bits: int = 8
    fractional_bits: int = 32
    dimension: int = 1
    negative: str = "complement"

    def __post_init__(self):
        if self.integer_bits < 1 or self.fractional_bits < 1 or self.dimension < 1:
            raise ValueError("integer_bits, fractional_bits and dimension must be >= 1")
        if self.negative not in ("complement", "literal"):
            raise ValueError("negative must be 'complement' or 'literal'")

    @property
    def digits(self) -> int:
        return self.integer_bits + self.fractional_bits

    @classmethod
    def for_data(cls, M: np.ndarray, fractional_bits: int = 32, negative: str = "complement") -> "BorelConfig":
        M = np.asarray(M, dtype=float)
        if M.ndim == 1:
            M = M[:, None]
        top = int(np.floor(np.max(np.abs(M)))) if M.size else 0
        return cls(max(1, top.bit_length()), fractional_bits, M.shape[-1], negative)


def _grid(M: np.ndarray, config: BorelConfig):
    """Sign flags and per-coordinate digit integers on the dyadic grid."""
    M = np.asarray(M, dtype=float)
    if M.shape[-1] != config.dimension:
        raise ValueError(f"row dimension {M.shape[-1]} does not match config dimension {config.dimension}")
    if not np.all(np.isfinite(M)):
        raise ValueError("non-finite entry")
    L = config.digits
    if L > _WORD:
        raise ValueError(f"integer_bits + fractional_bits must be <= {_WORD}, got {L}")
    mag = np.floor(np.ldexp(np.abs(M), config.fractional_bits))
    if np.any(mag >= 2.0 ** L):
        raise OverflowError(f"entry magnitude needs more than {config.integer_bits} integer bits")
    q = mag.astype(np.uint64)
    nonneg = M >= 0
    if config.negative == "complement":
        q = np.where(nonneg, q, np.uint64(2**L - 1) - q)
    return nonneg, q


def borel_merge(row, config: Optional[BorelConfig] = None) -> Fraction:
    """Merge one d-vector into an exact dyadic rational.

    Digits are ``1 c_1..c_d`` (sign bits), then the integer digits of all
    coordinates interleaved, then the fractional digits interleaved,
    truncated after ``fractional_bits`` per coordinate.
    """
    row = np.atleast_1d(np.asarray(row, dtype=float))
    if config is None:
        config = BorelConfig.for_data(row[None, :])
    nonneg, q = _grid(row, config)
    d, L = config.dimension, config.digits
    key = 1
    for c in nonneg:
        key = (key << 1) | int(c)
    for t in range(L - 1, -1, -1):
        for i in range(d):
            key = (key << 1) | ((int(q[i]) >> t) & 1)
    return Fraction(key, 1 << (d * config.fractional_bits))


def _borel_sort_keys(M: np.ndarray, config: BorelConfig):
    """Integer key columns whose lexicographic order is the numeric order of the merge."""
    nonneg, q = _grid(M, config)
    d, L = config.dimension, config.digits
    sign_word = (1 << d) + (nonneg.astype(np.int64) << np.arange(d - 1, -1, -1)).sum(axis=-1)
    shifts = np.arange(L - 1, -1, -1, dtype=np.uint64)
    bits = (q[..., None] >> shifts) & np.uint64(1)           # (..., n, d, L)
    bits = np.swapaxes(bits, -1, -2).reshape(*bits.shape[:-2], L * d)  # interleave
    total = bits.shape[-1]
    pad = (-total) % _WORD
    if pad:
        bits = np.concatenate([bits, np.zeros(bits.shape[:-1] + (pad,), dtype=np.uint64)], axis=-1)
    words = bits.reshape(*bits.shape[:-1], -1, _WORD)
    place = np.uint64(1) << np.arange(_WORD - 1, -1, -1, dtype=np.uint64)
    packed = (words * place).sum(axis=-1, dtype=np.uint64)  # (..., n, W)
    return sign_word, packed


def borel_ranks(M: np.ndarray, config: Optional[BorelConfig] = None,
                rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Ranks 1..n of the merged rows; M has shape (..., n, d).

    Grid collisions are broken at random when ``rng`` is given, else by row order.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    if config is None:
        config = BorelConfig.for_data(M.reshape(-1, M.shape[-1]))
    sign_word, packed = _borel_sort_keys(M, config)
    n = M.shape[-2]
    tiebreak = np.broadcast_to(rng.permutation(n) if rng is not None else np.arange(n), sign_word.shape)
    keys = [tiebreak] + [packed[..., w] for w in range(packed.shape[-1] - 1, -1, -1)] + [sign_word]
    order = np.lexsort(keys, axis=-1)
    return inverse_permutation(order) + 1


@dataclass(frozen=True)
class MvStatValue:
    kind: str
    value: float
    self_inclusion: bool = False


def borel_stat(sample: MultiSample, stat: str = "xi", config: Optional[BorelConfig] = None,
               tie_seed: Optional[int] = None) -> MvStatValue:
    """Univariate statistic of the merged pair ``(eta(X), eta(Y))``."""
    if not isinstance(sample, MultiSample):
        sample = MultiSample(*sample)
    rng = None if tie_seed is None else np.random.default_rng(tie_seed)
    cx = config if config is not None else BorelConfig.for_data(sample.X)
    cy = config if config is not None else BorelConfig.for_data(sample.Y)
    rx = borel_ranks(sample.X, cx, rng)
    ry = borel_ranks(sample.Y, cy, rng)
    key = {"xi": "xi_xy", "spearman": "spearman", "kendall": "kendall"}
    if stat not in key:
        raise ValueError(f"unknown stat {stat!r}; choose xi, spearman or kendall")
    value = statistics_from_rank_rows(rx, ry, [key[stat]])[key[stat]]
    return MvStatValue(kind=f"borel_{stat if stat != 'kendall' else 'tau'}", value=float(value))


# -- panels: all five multivariate tests at once -------------------------------

def _merged_ranks(sample: MultiSample, fractional_bits: int = 32):
    rx = borel_ranks(sample.X, BorelConfig.for_data(sample.X, fractional_bits))
    ry = borel_ranks(sample.Y, BorelConfig.for_data(sample.Y, fractional_bits))
    return rx, ry


def mv_analytic_panel(sample: MultiSample, methods=MV_METHODS, fractional_bits: int = 32) -> Dict[str, TestOutcome]:
    """Borel-merged statistics with the univariate analytic p-values."""
    rx, ry = _merged_ranks(sample, fractional_bits)
    stats = {k: float(v) for k, v in statistics_from_rank_rows(rx, ry).items()}
    n = sample.n
    out = {}
    for m in methods:
        stat, comps, p = evaluate_method(m, stats, n)
        out[m] = TestOutcome(
            method=f"mv_{m}", statistic=float(stat), standardized=float(math.sqrt(n) * stat),
            p_value=float(p), p_source="analytic", n=n,
            components={k: float(v) for k, v in comps.items()},
            estimates=stats, details={"mode": "borel_analytic", "fractional_bits": fractional_bits},
        )
    return out


def _panel_stats(n, mode, rxm, rym, rX=None, rY=None, DX=None, DY=None, perms=None):
    """Raw statistics for identity (perms=None) or a stack of permutations of Y."""
    if perms is None:
        perms = np.arange(n)[None, :]
    ry_p = rym[perms]
    out = statistics_from_rank_rows(np.broadcast_to(rxm, ry_p.shape), ry_p,
                                    ["xi_xy", "xi_yx"] + (["spearman", "kendall"] if mode != "grothe_permutation" else []))
    if mode == "grothe_permutation":
        rY_p = rY[perms]
        DY_p = DY[perms[:, :, None], perms[:, None, :]]
        rXY_p = (DX[None] & DY_p).sum(axis=-1)
        RX, RY = float(rX.sum()), float(rY.sum())
        out["kendall"] = _grothe_tau_arrays(n, RX, RY, rXY_p.sum(axis=-1))
        SX = _grothe_marginal_var(n, rX)
        SY = _grothe_marginal_var(n, rY)
        out["spearman"] = _grothe_spearman_arrays(
            n, (rX[None, :] * rY_p).sum(axis=-1), RX, RY, rXY_p.sum(axis=-1), SX, SY)
    return out


def mv_permutation_panel(sample: MultiSample, plan: PermutationPlan, methods=MV_METHODS,
                         mode: str = "grothe_permutation", self_inclusion: bool = False,
                         fractional_bits: int = 32) -> Dict[str, TestOutcome]:
    """Permutation p-values for the multivariate tests, sharing one set of relabelings.

    In Grothe mode the null standard deviations of sqrt(n) tau and sqrt(n) S
    are estimated from the permutation replicates; in Borel mode the
    univariate asymptotic constants standardise the components.
    """
    if mode not in ("grothe_permutation", "borel_permutation"):
        raise ValueError(f"mode {mode!r} is not a permutation mode")
    if not isinstance(sample, MultiSample):
        sample = MultiSample(*sample)
    n = sample.n
    if n < 3:
        raise ValueError("multivariate tests need n >= 3")
    bad = [m for m in methods if m not in MV_METHODS]
    if bad:
        raise ValueError(f"unknown multivariate methods {bad}; choose from {MV_METHODS}")
    rxm, rym = _merged_ranks(sample, fractional_bits)
    extra = {}
    if mode == "grothe_permutation":
        DX = dominance_matrix(sample.X, self_inclusion)
        DY = dominance_matrix(sample.Y, self_inclusion)
        extra = dict(rX=DX.sum(axis=1), rY=DY.sum(axis=1), DX=DX, DY=DY)
    obs = {k: float(v[0]) for k, v in _panel_stats(n, mode, rxm, rym, **extra).items()}
    for m in methods:
        k = _MONOTONE.get(m)
        if k is not None and not math.isfinite(obs[k]):
            raise DegenerateStatisticError(f"multivariate {k} undefined: degenerate dominance counts")
    parts = [_panel_stats(n, mode, rxm, rym, perms=P, **extra) for P in plan.blocks(n)]
    reps = {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}

    root_n = math.sqrt(n)
    sd = {"spearman": 1.0, "kendall": 2.0 / 3.0, "xi": math.sqrt(2.0 / 5.0)}
    if mode == "grothe_permutation":
        for k in ("spearman", "kendall"):
            ok = np.isfinite(reps[k])
            sd[k] = float(np.std(root_n * reps[k][ok], ddof=1)) if ok.sum() > 1 else math.nan

    def components(m, s):
        comps = {}
        if m in _MONOTONE:
            k = _MONOTONE[m]
            comps[k] = root_n * np.abs(s[k]) / sd[k]
        if m not in ("spearman", "kendall"):
            comps["xi_xy"] = root_n * np.asarray(s["xi_xy"]) / sd["xi"]
            comps["xi_yx"] = root_n * np.asarray(s["xi_yx"]) / sd["xi"]
        return comps

    out = {}
    for m in methods:
        c_obs = components(m, obs)
        t_obs = float(max(c_obs.values()))
        t_rep = np.max(np.stack(list(components(m, reps).values())), axis=0)
        undefined = ~np.isfinite(t_rep)
        if undefined.mean() >= DEGENERATE_FRACTION:
            raise DegeneratePermutationError(
                f"{m}: statistic undefined on {int(undefined.sum())} of {t_rep.size} permutations")
        p = float(permutation_p(t_obs, t_rep[~undefined]))
        out[m] = TestOutcome(
            method=f"mv_{m}", statistic=t_obs / root_n, standardized=t_obs, p_value=p,
            p_source="permutation", n=n, components={k: float(v) / root_n for k, v in c_obs.items()},
            estimates={k: (v if math.isfinite(v) else None) for k, v in obs.items()},
            seed=plan.master_seed,
            details={"mode": mode, "B": plan.B, "self_inclusion": self_inclusion,
                     **{f"sigma_{k}": (sd[k] if math.isfinite(sd[k]) else None)
                        for k in ("spearman", "kendall")}},
        )
    return out


def mv_test(sample: MultiSample, method: str = "ck", mode: str = "grothe_permutation",
            plan: Optional[PermutationPlan] = None, **kwargs) -> TestOutcome:
    if not isinstance(sample, MultiSample):
        sample = MultiSample(*sample)
    if method not in MV_METHODS:
        raise ValueError(f"unknown multivariate method {method!r}; choose from {MV_METHODS}")
    if mode == "borel_analytic":
        return mv_analytic_panel(sample, [method], kwargs.get("fractional_bits", 32))[method]
    if mode not in MV_MODES:
        raise ValueError(f"unknown mode {mode!r}; choose from {MV_MODES}")
    plan = plan if plan is not None else PermutationPlan()
    return mv_permutation_panel(sample, plan, [method], mode, **kwargs)[method]


def mv_combined(sample: MultiSample, flavor: str = "kendall", mode: str = "grothe_permutation",
                plan: Optional[PermutationPlan] = None, **kwargs) -> TestOutcome:
    """Multivariate Chatterjee-Spearman (flavor='spearman') or Chatterjee-Kendall test."""
    codes = {"spearman": "cs", "kendall": "ck"}
    if flavor not in codes:
        raise ValueError("flavor must be 'spearman' or 'kendall'")
    return mv_test(sample, codes[flavor], mode, plan, **kwargs)

"""Deterministic permutation-test engine.

Permutations are drawn in fixed-size blocks. Block ``b`` uses the stream
``SeedSequence(master_seed, spawn_key=(b,))``, so the set of permutations
depends only on ``(master_seed, B, n)`` and never on scheduling.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Tuple

import numpy as np

__all__ = [
    "MIN_PERMUTATIONS",
    "PERMUTATION_BLOCK",
    "PermutationPlan",
    "UnderpoweredConfigurationError",
    "DegeneratePermutationError",
    "permutation_p",
    "permutation_pvalue",
]

MIN_PERMUTATIONS = 100
PERMUTATION_BLOCK = 256
DEGENERATE_FRACTION = 0.10


class UnderpoweredConfigurationError(ValueError):
    pass


class DegeneratePermutationError(ValueError):
    pass


def fresh_seed() -> int:
    return int(np.random.SeedSequence().entropy % (2**63))


@dataclass(frozen=True)
class PermutationPlan:
    """B random relabelings of the Y-part, upper-tail p-values."""

    B: int = 1000
    master_seed: Optional[int] = None
    alternative: str = "greater"

    def __post_init__(self):
        if int(self.B) != self.B or self.B < MIN_PERMUTATIONS:
            raise UnderpoweredConfigurationError(
                f"B={self.B} permutations is underpowered; need at least {MIN_PERMUTATIONS}"
            )
        if self.alternative != "greater":
            raise ValueError("only the upper-tail alternative is supported")
        if self.master_seed is None:
            object.__setattr__(self, "master_seed", fresh_seed())

    def blocks(self, n: int) -> Iterator[np.ndarray]:
        """Yield arrays of shape (block, n) holding 0-based permutations."""
        for b in range(math.ceil(self.B / PERMUTATION_BLOCK)):
            size = min(PERMUTATION_BLOCK, self.B - b * PERMUTATION_BLOCK)
            rng = np.random.default_rng(np.random.SeedSequence(self.master_seed, spawn_key=(b,)))
            yield rng.permuted(np.tile(np.arange(n), (size, 1)), axis=1)

    def permutations(self, n: int) -> np.ndarray:
        return np.concatenate(list(self.blocks(n)), axis=0)


def permutation_p(observed, replicates: np.ndarray) -> np.ndarray:
    """Add-one upper-tail p-value ``(1 + #{T_b >= T_obs}) / (B + 1)``.

    ``replicates`` has the permutation axis first; a relative tolerance of
    100 ulp absorbs round-off between algebraically equal statistics.
    """
    replicates = np.asarray(replicates, dtype=float)
    observed = np.asarray(observed, dtype=float)
    gamma = np.abs(observed) * np.finfo(float).eps * 100
    count = np.sum(replicates >= observed - gamma, axis=0)
    return (1.0 + count) / (replicates.shape[0] + 1.0)


def _evaluate(statistic, x, y, perm: np.ndarray) -> float:
    try:
        value = float(statistic(x, y[perm]))
    except (ValueError, ZeroDivisionError, FloatingPointError):
        return math.nan
    return value


def permutation_pvalue(
    statistic: Callable,
    x,
    y,
    plan: PermutationPlan,
    vectorized: bool = False,
    workers: int = 1,
) -> Tuple[float, float]:
    """Permutation p-value and null standard deviation of ``statistic(x, y)``.

    With ``vectorized=True`` the callable receives ``y`` stacked along a new
    leading axis (one slice per permutation) and must return one value per
    slice. Returns ``(p_value, sd_of_replicates)``.
    """
    y = np.asarray(y)
    n = len(y)
    observed = float(statistic(x, y[None])[0]) if vectorized else float(statistic(x, y))
    if not math.isfinite(observed):
        raise DegeneratePermutationError("statistic is undefined on the observed data")

    def run_block(perms):
        if vectorized:
            with np.errstate(invalid="ignore", divide="ignore"):
                return np.asarray(statistic(x, y[perms]), dtype=float)
        return np.array([_evaluate(statistic, x, y, p) for p in perms])

    blocks = list(plan.blocks(n))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_block, blocks))
    else:
        parts = [run_block(b) for b in blocks]
    reps = np.concatenate(parts)
    bad = ~np.isfinite(reps)
    if bad.mean() >= DEGENERATE_FRACTION:
        raise DegeneratePermutationError(
            f"statistic undefined on {int(bad.sum())} of {reps.size} permutations"
        )
    reps = reps[~bad]
    return float(permutation_p(observed, reps)), float(np.std(reps, ddof=1))

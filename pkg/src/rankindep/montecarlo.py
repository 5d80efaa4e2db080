"""Scenario generators and size / power / null-scatter experiment runners.

Replicates are processed in blocks of :data:`REP_BLOCK`. Block ``b`` draws
its data from ``SeedSequence(seed, spawn_key=(b,))`` and replicate ``i`` of
that block seeds its permutations from ``spawn_key=(b, i)``. Results are
therefore identical for any number of workers.
"""
from __future__ import annotations

import json
import math
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy

from . import __version__
from .combined import (
    UNIVARIATE_METHODS,
    DegenerateStatisticError,
    batch_statistics,
    evaluate_method,
    required_statistics,
)
from .mvstat import MV_METHODS, MV_MODES, mv_analytic_panel, mv_permutation_panel
from .permutation import DegeneratePermutationError, PermutationPlan, fresh_seed
from .ranks import MultiSample, PairedSample, dominance_matrix

_DEGENERATE = (DegenerateStatisticError, DegeneratePermutationError)

__all__ = [
    "REP_BLOCK",
    "MIN_REPS",
    "SCENARIOS",
    "ScenarioSpec",
    "ExperimentReport",
    "generate",
    "generate_batch",
    "run_size",
    "run_power",
    "null_scatter",
    "SCATTER_PAIRS",
]

REP_BLOCK = 500
MIN_REPS = 1000
MIN_SCATTER_REPS = 100
TWO_PI = 2.0 * math.pi

SCENARIOS = {
    "U1": "linear: Y = X + Z",
    "U2": "quadratic: Y = X^2 + 0.3 Z",
    "U3": "stepwise: Y = level(X) + 2 Z, level 1..4 by quarter of [-1, 1]",
    "U4": "sinusoid: Y = cos(2 pi X) + 0.75 Z",
    "M1": "linear mix, X ~ U[0,1]^3, noise sd 2",
    "M2": "coordinatewise linear, X ~ U[-1,1]^3",
    "M3": "cross-coordinate linear, X ~ U[0,2]^3, noise sd 4",
    "M4": "squares, absolute values and cosines, X ~ U[-2,2]^3",
    "M5": "coordinatewise squares, X ~ U[-2,2]^3, noise sd 5",
    "M6": "cosines of increasing frequency, X ~ U[-1,1]^3",
    "null_uni": "X ~ U[-1,1] independent of Y ~ N(0,1)",
    "null_mv": "X ~ U[-1,1]^3 independent of Y ~ N(0,1)^3",
}
UNIVARIATE_SCENARIOS = ("U1", "U2", "U3", "U4", "null_uni")


@dataclass(frozen=True)
class ScenarioSpec:
    id: str
    n: int

    def __post_init__(self):
        if self.id not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.id!r}; choose from {sorted(SCENARIOS)}")
        if int(self.n) != self.n or self.n < 3:
            raise ValueError(f"n must be an integer >= 3, got {self.n!r}")

    @property
    def multivariate(self) -> bool:
        return self.id not in UNIVARIATE_SCENARIOS


def _stepwise(x):
    return np.select([x <= -0.5, x <= 0.0, x <= 0.5], [1.0, 2.0, 3.0], 4.0)


def generate_batch(spec: ScenarioSpec, reps: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Draw ``reps`` samples; shapes (reps, n) or (reps, n, 3)."""
    n = spec.n
    sid = spec.id
    if not spec.multivariate:
        x = rng.uniform(-1.0, 1.0, (reps, n))
        z = rng.standard_normal((reps, n))
        if sid == "U1":
            y = x + z
        elif sid == "U2":
            y = x * x + 0.3 * z
        elif sid == "U3":
            y = _stepwise(x) + 2.0 * z
        elif sid == "U4":
            y = np.cos(TWO_PI * x) + 0.75 * z
        else:
            y = z
        return x, y

    lo, hi = {"M1": (0, 1), "M2": (-1, 1), "M3": (0, 2), "M4": (-2, 2),
              "M5": (-2, 2), "M6": (-1, 1), "null_mv": (-1, 1)}[sid]
    X = rng.uniform(lo, hi, (reps, n, 3))
    Z = rng.standard_normal((reps, n, 3))
    x1, x2, x3 = X[..., 0], X[..., 1], X[..., 2]
    z1, z2, z3 = Z[..., 0], Z[..., 1], Z[..., 2]
    if sid == "M1":
        cols = (x1 - x2 + 2 * x3 + 2 * z1, -x1 + 3 * x2 - 0.5 * x3 + 2 * z2, 1.5 * x1 + x2 + 2 * x3 + 2 * z3)
    elif sid == "M2":
        cols = (3 * x1 + 4 * z1, x2 + 2 * z2, 2 * x3 + 3 * z3)
    elif sid == "M3":
        cols = (x2 + 2 * x3 + 4 * z1, 2 * x1 + 0.5 * x3 + 4 * z2, x1 + 3 * x2 + 4 * z3)
    elif sid == "M4":
        cols = (2 * x1**2 + 4 * np.abs(x2) + np.cos(TWO_PI * x3) + 2 * z1,
                2 * np.cos(TWO_PI * x1) + 3 * x2**2 + np.abs(x3) + 2 * z2,
                3 * np.abs(x1) + 2 * np.cos(TWO_PI * x2) + 2 * x3**2 + 2 * z3)
    elif sid == "M5":
        cols = (2 * x1**2 + 5 * z1, 4 * x2**2 + 5 * z2, 6 * x3**2 + 5 * z3)
    elif sid == "M6":
        cols = (np.cos(TWO_PI * x1) + z1 / 2, np.cos(2 * TWO_PI * x2) + z2 / 2, np.cos(3 * TWO_PI * x3) + z3 / 2)
    else:
        cols = (z1, z2, z3)
    return X, np.stack(cols, axis=-1)


def generate(spec: ScenarioSpec, seed: int):
    """One sample of the scenario: PairedSample or MultiSample."""
    X, Y = generate_batch(spec, 1, np.random.default_rng(seed))
    return MultiSample(X[0], Y[0]) if spec.multivariate else PairedSample(X[0], Y[0])


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


def _replicate_seed(seed: int, block: int, i: int) -> int:
    state = np.random.SeedSequence(seed, spawn_key=(block, i)).generate_state(2, np.uint32)
    return (int(state[0]) << 31) ^ int(state[1])


def _block_sizes(reps: int) -> List[int]:
    full, rest = divmod(reps, REP_BLOCK)
    return [REP_BLOCK] * full + ([rest] if rest else [])


def _map_blocks(fn, reps: int, workers: int):
    jobs = list(enumerate(_block_sizes(reps)))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda job: fn(*job), jobs))
    return [fn(*job) for job in jobs]


@dataclass
class ExperimentReport:
    """Rejection rates of several tests over Monte-Carlo replications.

    ``degenerate`` counts replicates on which a test statistic was undefined;
    those replicates count as non-rejections.
    """

    scenario: str
    n: int
    reps: int
    alpha: float
    seed: int
    tests: List[str]
    rates: Dict[str, float]
    standard_errors: Dict[str, float]
    rejections: Dict[str, int]
    degenerate: Dict[str, int] = field(default_factory=dict)
    mode: str = "analytic"
    permutations: Optional[int] = None
    provenance: Dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> dict:
        from .combined import SCHEMA_VERSION

        d = asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        lines = ["scenario,n,reps,alpha,seed,mode,permutations,test,rate,se,rejections,degenerate"]
        for t in self.tests:
            lines.append(
                f"{self.scenario},{self.n},{self.reps},{self.alpha!r},{self.seed},{self.mode},"
                f"{'' if self.permutations is None else self.permutations},{t},"
                f"{self.rates[t]!r},{self.standard_errors[t]!r},{self.rejections[t]},"
                f"{self.degenerate.get(t, 0)}"
            )
        return "\n".join(lines) + "\n"


def _provenance() -> Dict[str, object]:
    return {
        "package": "rankindep",
        "version": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
        "rep_block": REP_BLOCK,
    }


def _check_reps(reps: int, minimum: int = MIN_REPS):
    if int(reps) != reps or reps < minimum:
        raise ValueError(f"reps must be an integer >= {minimum}, got {reps!r}")


def _univariate_block(spec, tests, alpha, seed):
    need = required_statistics(tests)

    def run(block, size):
        x, y = generate_batch(spec, size, _block_rng(seed, block))
        stats = batch_statistics(x, y, need)
        counts = {t: int(np.sum(evaluate_method(t, stats, spec.n)[2] <= alpha)) for t in tests}
        return {"counts": counts, "degenerate": {t: 0 for t in tests}}

    return run


def _multivariate_block(spec, tests, alpha, seed, mode, B):
    def panel_for(sample, methods, block, i):
        if mode == "borel_analytic":
            return mv_analytic_panel(sample, methods)
        plan = PermutationPlan(B, _replicate_seed(seed, block, i))
        return mv_permutation_panel(sample, plan, methods, mode)

    def run(block, size):
        X, Y = generate_batch(spec, size, _block_rng(seed, block))
        counts = {t: 0 for t in tests}
        degenerate = {t: 0 for t in tests}
        for i in range(size):
            sample = MultiSample(X[i], Y[i])
            try:
                p = {t: o.p_value for t, o in panel_for(sample, tests, block, i).items()}
            except _DEGENERATE:
                # retry test by test; an undefined statistic counts as no rejection
                p = {}
                for t in tests:
                    try:
                        p[t] = panel_for(sample, [t], block, i)[t].p_value
                    except _DEGENERATE:
                        degenerate[t] += 1
            for t, v in p.items():
                counts[t] += v <= alpha
        return {"counts": counts, "degenerate": degenerate}

    return run


def _report(spec, tests, reps, alpha, seed, counts, mode, B) -> ExperimentReport:
    totals = {t: int(sum(c["counts"][t] for c in counts)) for t in tests}
    degenerate = {t: int(sum(c["degenerate"][t] for c in counts)) for t in tests}
    rates = {t: totals[t] / reps for t in tests}
    ses = {t: math.sqrt(rates[t] * (1 - rates[t]) / reps) for t in tests}
    return ExperimentReport(
        scenario=spec.id, n=spec.n, reps=reps, alpha=alpha, seed=seed, tests=list(tests),
        rates=rates, standard_errors=ses, rejections=totals, degenerate=degenerate, mode=mode,
        permutations=B if mode != "analytic" and mode != "borel_analytic" else None,
        provenance=_provenance(),
    )


def run_power(tests: Sequence[str], spec: ScenarioSpec, reps: int, seed: Optional[int] = None,
              alpha: float = 0.05, mode: str = "grothe_permutation", B: int = 500,
              workers: int = 1) -> ExperimentReport:
    """Rejection rates at level ``alpha`` for data drawn from ``spec``.

    Univariate scenarios use the analytic p-values; multivariate ones use
    ``mode`` (one of ``grothe_permutation``, ``borel_analytic``,
    ``borel_permutation``) with ``B`` permutations per replicate.
    """
    _check_reps(reps)
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    seed = fresh_seed() if seed is None else int(seed)
    tests = list(tests)
    if spec.multivariate:
        bad = [t for t in tests if t not in MV_METHODS]
        if bad:
            raise ValueError(f"unknown multivariate tests {bad}; choose from {MV_METHODS}")
        if mode not in MV_MODES:
            raise ValueError(f"unknown mode {mode!r}; choose from {MV_MODES}")
        if mode != "borel_analytic":
            PermutationPlan(B, 0)  # validates B
        run = _multivariate_block(spec, tests, alpha, seed, mode, B)
    else:
        bad = [t for t in tests if t not in UNIVARIATE_METHODS]
        if bad:
            raise ValueError(f"unknown univariate tests {bad}; choose from {sorted(UNIVARIATE_METHODS)}")
        mode = "analytic"
        run = _univariate_block(spec, tests, alpha, seed)
    counts = _map_blocks(run, reps, workers)
    return _report(spec, tests, reps, alpha, seed, counts, mode, B)


def run_size(tests: Sequence[str], n: int, reps: int, seed: Optional[int] = None,
             alpha: float = 0.05, workers: int = 1) -> ExperimentReport:
    """Empirical size under X ~ U[-1, 1] independent of Y ~ N(0, 1)."""
    return run_power(tests, ScenarioSpec("null_uni", n), reps, seed, alpha, workers=workers)


# -- null scatter ------------------------------------------------------------------

SCATTER_PAIRS = {
    ("kendall", "xi"): "univariate",
    ("quadrant", "xi"): "univariate",
    ("spearman", "xi"): "univariate",
    ("mv_spearman", "mv_xi"): "multivariate",
    ("mv_kendall", "mv_xi"): "multivariate",
}


def null_scatter(pair: Tuple[str, str], n: int, reps: int, seed: Optional[int] = None,
                 workers: int = 1) -> np.ndarray:
    """Paired null draws of two statistics, shape (reps, 2), for external plotting.

    Multivariate pairs use the Grothe statistic against xi of the merged rows.
    """
    pair = tuple(pair)
    if pair not in SCATTER_PAIRS:
        raise ValueError(f"unsupported pair {pair}; choose from {sorted(SCATTER_PAIRS)}")
    _check_reps(reps, MIN_SCATTER_REPS)
    seed = fresh_seed() if seed is None else int(seed)
    multivariate = SCATTER_PAIRS[pair] == "multivariate"
    spec = ScenarioSpec("null_mv" if multivariate else "null_uni", n)
    first = pair[0].removeprefix("mv_")

    def run(block, size):
        x, y = generate_batch(spec, size, _block_rng(seed, block))
        if not multivariate:
            stats = batch_statistics(x, y, [first, "xi_xy"])
            return np.column_stack([stats[first], stats["xi_xy"]])
        from .mvstat import _merged_ranks, _panel_stats

        rows = []
        for i in range(size):
            sample = MultiSample(x[i], y[i])
            rxm, rym = _merged_ranks(sample)
            DX = dominance_matrix(sample.X)
            DY = dominance_matrix(sample.Y)
            s = _panel_stats(n, "grothe_permutation", rxm, rym, DX.sum(1), DY.sum(1), DX, DY)
            rows.append((s[first][0], s["xi_xy"][0]))
        return np.asarray(rows, dtype=float)

    return np.concatenate(_map_blocks(run, reps, workers), axis=0)

"""Max-type combined independence tests with analytic asymptotic p-values.

Every component is divided by the null standard deviation of
``sqrt(n) * component`` before taking the maximum, so ``sqrt(n)`` times the
combined statistic is compared against the maximum of standard normals.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, Mapping, Optional

import numpy as np
from scipy.special import ndtr

from .ranks import (
    PairedSample,
    concomitant_profile,
    inverse_permutation,
    ranks_along_last_axis,
)
from .unistat import (
    kendall_from_ranks,
    quadrant_from_ranks,
    quadrant_null_variance,
    spearman_from_ranks,
    spearman_null_variance,
    tau_null_variance,
    xi_from_ranks,
    xi_null_variance,
)

__all__ = [
    "SCHEMA_VERSION",
    "TestOutcome",
    "UNIVARIATE_METHODS",
    "normal_cdf",
    "normal_sf",
    "pvalue_max3",
    "pvalue_max2",
    "pvalue_asymmetric",
    "combined_asymmetric",
    "combined_symmetric",
    "symmetric_xi",
    "univariate_test",
    "component_statistics",
    "batch_statistics",
    "evaluate_method",
]

SCHEMA_VERSION = "1.0"

# null sd of sqrt(n) * statistic, n -> infinity
ASYMPTOTIC_SD = {
    "spearman": 1.0,
    "kendall": 2.0 / 3.0,
    "quadrant": 1.0,
    "xi": math.sqrt(2.0 / 5.0),
}

FLAVORS = ("spearman", "kendall", "quadrant")
FLAVOR_CODES = {"spearman": "cs", "kendall": "ck", "quadrant": "cq"}

UNIVARIATE_METHODS = {
    "xi": "Chatterjee xi(x, y), one-sided",
    "spearman": "Spearman rho, two-sided",
    "kendall": "Kendall tau, two-sided",
    "quadrant": "quadrant correlation, two-sided",
    "cs": "symmetric Chatterjee-Spearman",
    "ck": "symmetric Chatterjee-Kendall",
    "cq": "symmetric Chatterjee-quadrant",
    "xisym": "symmetrised Chatterjee xi",
    "cs_asym": "asymmetric Chatterjee-Spearman",
}


class DegenerateStatisticError(ValueError):
    """A statistic is undefined for the supplied data."""


@dataclass
class TestOutcome:
    """Result of one independence test."""

    __test__ = False  # not a pytest class

    method: str
    statistic: float
    standardized: float
    p_value: float
    p_source: str
    n: int
    components: Dict[str, float] = field(default_factory=dict)
    estimates: Dict[str, float] = field(default_factory=dict)
    seed: Optional[int] = None
    details: Dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "TestOutcome":
        d = dict(d)
        version = d.pop("schema_version", SCHEMA_VERSION)
        if version.split(".")[0] != SCHEMA_VERSION.split(".")[0]:
            raise ValueError(f"unsupported schema_version {version}")
        return cls(**d)


# -- normal tails and p-value formulas ---------------------------------------

def normal_cdf(z):
    return ndtr(z)


def normal_sf(z):
    return ndtr(np.negative(z))


def _clip(p):
    p = np.clip(p, 0.0, 1.0)
    return float(p) if np.ndim(p) == 0 else p


def pvalue_max3(z):
    """P(max(|N0|, N1, N2) > z) = 1 + Phi^2 - 2 Phi^3 for independent N(0,1).

    Evaluated as 4q - 5q^2 + 2q^3 with q = Phi(-z), which avoids the
    cancellation of the printed form for large z.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("pvalue_max3 requires z >= 0")
    q = normal_sf(z)
    return _clip(q * (4.0 - q * (5.0 - 2.0 * q)))


def pvalue_max2(z):
    """P(max(N1, N2) > z) = 1 - Phi(z)^2 for independent N(0,1)."""
    q = normal_sf(np.asarray(z, dtype=float))
    return _clip(q * (2.0 - q))


def pvalue_asymmetric(z):
    """P(max(|N0|, N1) > z) = 1 - (2 Phi(z) - 1) Phi(z)."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("pvalue_asymmetric requires z >= 0")
    q = normal_sf(z)
    return _clip(q * (3.0 - 2.0 * q))


def _pvalue_two_sided(z):
    return _clip(2.0 * normal_sf(np.abs(z)))


def _pvalue_one_sided(z):
    return _clip(normal_sf(z))


# -- null standard deviations --------------------------------------------------

def null_sd(kind: str, n: int, scaling: str = "asymptotic") -> float:
    if scaling == "asymptotic":
        return ASYMPTOTIC_SD[kind]
    if scaling != "finite":
        raise ValueError(f"unknown scaling {scaling!r}; use 'asymptotic' or 'finite'")
    moments = {
        "spearman": spearman_null_variance,
        "kendall": tau_null_variance,
        "quadrant": quadrant_null_variance,
        "xi": xi_null_variance,
    }[kind](n)
    if moments.variance_of_sqrt_n_stat == 0:
        raise DegenerateStatisticError(f"finite-sample null variance of {kind} is 0 at n={n}")
    return moments.sd


# -- raw statistics ------------------------------------------------------------

def component_statistics(sample: PairedSample, tie_seed: Optional[int] = None) -> Dict[str, float]:
    """xi in both directions plus the three monotone correlations."""
    prof = concomitant_profile(sample, tie_seed)
    rev = prof.swapped()
    R = prof.concomitant_ranks
    return {
        "xi_xy": float(xi_from_ranks(R)),
        "xi_yx": float(xi_from_ranks(rev.concomitant_ranks)),
        "spearman": float(spearman_from_ranks(R)),
        "kendall": float(kendall_from_ranks(R)),
        "quadrant": float(quadrant_from_ranks(prof.x_ranks, prof.y_ranks)),
    }


def batch_statistics(X: np.ndarray, Y: np.ndarray, which: Iterable[str] = None) -> Dict[str, np.ndarray]:
    """Raw statistics for a batch of tie-free samples, rows are replicates."""
    X = np.atleast_2d(X)
    Y = np.atleast_2d(Y)
    rx = ranks_along_last_axis(X)
    ry = ranks_along_last_axis(Y)
    return statistics_from_rank_rows(rx, ry, which)


def statistics_from_rank_rows(rx: np.ndarray, ry: np.ndarray, which: Iterable[str] = None) -> Dict[str, np.ndarray]:
    which = set(which or ("xi_xy", "xi_yx", "spearman", "kendall", "quadrant"))
    out = {}
    order_x = inverse_permutation(rx - 1)
    R = np.take_along_axis(ry, order_x, axis=-1)
    if "xi_xy" in which:
        out["xi_xy"] = xi_from_ranks(R)
    if "xi_yx" in which:
        order_y = inverse_permutation(ry - 1)
        out["xi_yx"] = xi_from_ranks(np.take_along_axis(rx, order_y, axis=-1))
    if "spearman" in which:
        out["spearman"] = spearman_from_ranks(R)
    if "kendall" in which:
        out["kendall"] = kendall_from_ranks(R)
    if "quadrant" in which:
        out["quadrant"] = quadrant_from_ranks(rx, ry)
    return out


_NEEDS = {
    "xi": ("xi_xy",),
    "spearman": ("spearman",),
    "kendall": ("kendall",),
    "quadrant": ("quadrant",),
    "cs": ("spearman", "xi_xy", "xi_yx"),
    "ck": ("kendall", "xi_xy", "xi_yx"),
    "cq": ("quadrant", "xi_xy", "xi_yx"),
    "xisym": ("xi_xy", "xi_yx"),
    "cs_asym": ("spearman", "xi_xy"),
}


def required_statistics(methods: Iterable[str]) -> set:
    need = set()
    for m in methods:
        if m not in _NEEDS:
            raise ValueError(f"unknown method {m!r}; choose from {sorted(_NEEDS)}")
        need.update(_NEEDS[m])
    return need


def evaluate_method(method: str, stats: Mapping[str, np.ndarray], n: int,
                    scaling: str = "asymptotic", literal: bool = False):
    """Combine raw statistics into (statistic, components, p_value).

    Works elementwise on arrays, so it serves both single samples and
    Monte-Carlo batches.
    """
    if method not in _NEEDS:
        raise ValueError(f"unknown method {method!r}; choose from {sorted(_NEEDS)}")
    sd = lambda kind: null_sd(kind, n, scaling)  # noqa: E731
    root_n = math.sqrt(n)

    def xi_comp(key):
        return np.asarray(stats[key]) / sd("xi")

    if method == "xi":
        comps = {"xi_xy": xi_comp("xi_xy")}
        stat = comps["xi_xy"]
        return stat, comps, _pvalue_one_sided(root_n * stat)
    if method in FLAVORS:
        comps = {method: np.abs(stats[method]) / sd(method)}
        stat = comps[method]
        return stat, comps, _pvalue_two_sided(root_n * stat)
    if method == "xisym":
        comps = {"xi_xy": xi_comp("xi_xy"), "xi_yx": xi_comp("xi_yx")}
        stat = np.maximum(comps["xi_xy"], comps["xi_yx"])
        return stat, comps, pvalue_max2(root_n * stat)
    if method == "cs_asym":
        comps = {"spearman": np.abs(stats["spearman"]) / sd("spearman"), "xi_xy": xi_comp("xi_xy")}
        stat = np.maximum(comps["spearman"], comps["xi_xy"])
        return stat, comps, pvalue_asymmetric(root_n * stat)
    flavor = {"cs": "spearman", "ck": "kendall", "cq": "quadrant"}[method]
    if literal:
        if scaling != "asymptotic":
            raise ValueError("literal definitions only exist with asymptotic scaling")
        # printed definitions: raw |tau|, and 3/2 |Q|
        factor = {"spearman": 1.0, "kendall": 1.0, "quadrant": 1.5}[flavor]
        mono = factor * np.abs(stats[flavor])
    else:
        mono = np.abs(stats[flavor]) / sd(flavor)
    comps = {flavor: mono, "xi_xy": xi_comp("xi_xy"), "xi_yx": xi_comp("xi_yx")}
    stat = np.maximum(mono, np.maximum(comps["xi_xy"], comps["xi_yx"]))
    return stat, comps, pvalue_max3(root_n * stat)


def univariate_test(x, y=None, method: str = "ck", scaling: str = "asymptotic",
                    literal: bool = False, tie_seed: Optional[int] = None) -> TestOutcome:
    """Run one of :data:`UNIVARIATE_METHODS` on a paired sample."""
    sample = x if isinstance(x, PairedSample) else PairedSample(x, y)
    n = sample.n
    if scaling == "finite" and n < 3:
        raise DegenerateStatisticError("finite-sample scaling needs n >= 3")
    stats = component_statistics(sample, tie_seed)
    stat, comps, p = evaluate_method(method, stats, n, scaling, literal)
    need = _NEEDS[method]
    return TestOutcome(
        method=method,
        statistic=float(stat),
        standardized=float(math.sqrt(n) * stat),
        p_value=float(p),
        p_source="analytic",
        n=n,
        components={k: float(v) for k, v in comps.items()},
        estimates={k: stats[k] for k in need},
        seed=tie_seed,
        details={"scaling": scaling, "literal": literal},
    )


def combined_asymmetric(sample: PairedSample, tie_seed: Optional[int] = None) -> TestOutcome:
    """max(|S|, sqrt(5/2) xi(x, y)) with p = 1 - (2 Phi(z) - 1) Phi(z)."""
    return univariate_test(sample, method="cs_asym", tie_seed=tie_seed)


def combined_symmetric(sample: PairedSample, flavor: str = "kendall", scaling: str = "asymptotic",
                       literal: bool = False, tie_seed: Optional[int] = None) -> TestOutcome:
    """Symmetric Chatterjee-Spearman/Kendall/quadrant test."""
    if flavor not in FLAVOR_CODES:
        raise ValueError(f"unknown flavor {flavor!r}; choose from {FLAVORS}")
    return univariate_test(sample, method=FLAVOR_CODES[flavor], scaling=scaling,
                           literal=literal, tie_seed=tie_seed)


def symmetric_xi(sample: PairedSample, tie_seed: Optional[int] = None) -> TestOutcome:
    return univariate_test(sample, method="xisym", tie_seed=tie_seed)

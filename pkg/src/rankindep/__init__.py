"""Rank-based independence tests built around Chatterjee's xi correlation."""

__version__ = "0.1.0"

from .ranks import (  # noqa: E402
    MultiRankProfile,
    MultiSample,
    PairedSample,
    RankProfile,
    concomitant_profile,
    multivariate_ranks,
    rank_vector,
)
from .unistat import (  # noqa: E402
    NullMoments,
    count_inversions,
    kendall,
    quadrant,
    quadrant_null_variance,
    spearman,
    tau_null_variance,
    xi,
    xi_null_variance,
)
from .combined import (  # noqa: E402
    DegenerateStatisticError,
    TestOutcome,
    combined_asymmetric,
    combined_symmetric,
    pvalue_max2,
    pvalue_max3,
    symmetric_xi,
    univariate_test,
)
from .permutation import PermutationPlan, permutation_pvalue  # noqa: E402
from .mvstat import (  # noqa: E402
    BorelConfig,
    borel_merge,
    borel_stat,
    grothe_spearman,
    grothe_tau,
    mv_combined,
    mv_test,
)
from .montecarlo import (  # noqa: E402
    ExperimentReport,
    ScenarioSpec,
    generate,
    null_scatter,
    run_power,
    run_size,
)

__all__ = [name for name in dir() if not name.startswith("_")]

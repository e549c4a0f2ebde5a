"""Return levels of multivariate heavy-tailed time series via stable block sums.

The estimator sums powers of the componentwise supremum norm over disjoint
blocks, fits a totally skewed alpha-stable law to the sums, gates the fit
with a likelihood-ratio test of stability index 1, and reads T-observation
return levels off the fitted quantile function.  The package also ships the
alpha-stable toolbox behind it (pdf/cdf/quantile/sampling/MLE), tail-index
and clustering estimators, heavy-tailed simulators with exact oracles,
classical POT and block-maxima baselines, and a Monte Carlo harness.

Set the environment variable STABLESUMS_NO_NUMBA=1 before import to run the
pure-numpy kernel path instead of the numba-compiled one.
"""

from ._kernels import NUMBA_ENV_FLAG, USE_NUMBA
from .blocksums import (BlockSelection, BlockSumSeries, ReturnLevelEstimate,
                        block_sums, bootstrap_ci, estimate_return_levels,
                        qq_stable_diagnostics, select_block_length)
from .classical import (ExtremalIndexEstimate, GevFit, GpdFit, ReturnLevelCI,
                        block_maxima_pipeline, block_maxima_return_level,
                        decluster_intervals, ferro_segers_theta, fit_gev,
                        fit_gpd, pot_pipeline, pot_return_level)
from .data import (PipelineConfig, StationTable, load_csv,
                   run_case_study_pipeline, write_csv)
from .dist import (LrtResult, StableFit, StableParams, cdf, char_fn, fit_mle,
                   lrt_a_equals_1, pdf, quantile, sample)
from .errors import (ConvergenceError, DegenerateDataError,
                     NoExceedancesError, PreconditionError, StableSumsError,
                     TooFewPointsError)
from .mc import (McCell, McConfig, McSummary, relative_change,
                 run_coverage_study, true_return_level)
from .models import ModelSpec, OracleFacts, oracle, simulate
from .series import MultiSeries, as_multiseries
from .tailindex import (Extremogram, SpatialIndexes, TailFit, extremogram,
                        hill, rho_second_order, spatial_indexes,
                        unbiased_hill)

__version__ = "0.1.0"

__all__ = [
    "__version__", "NUMBA_ENV_FLAG", "USE_NUMBA",
    # stable distribution
    "StableParams", "StableFit", "LrtResult", "pdf", "cdf", "char_fn",
    "quantile", "sample", "fit_mle", "lrt_a_equals_1",
    # series and tails
    "MultiSeries", "as_multiseries", "TailFit", "SpatialIndexes",
    "Extremogram", "hill", "unbiased_hill", "rho_second_order",
    "spatial_indexes", "extremogram",
    # block sums
    "BlockSumSeries", "ReturnLevelEstimate", "BlockSelection", "block_sums",
    "estimate_return_levels", "bootstrap_ci", "select_block_length",
    "qq_stable_diagnostics",
    # simulators
    "ModelSpec", "OracleFacts", "simulate", "oracle",
    # classical baselines
    "ExtremalIndexEstimate", "GpdFit", "GevFit", "ReturnLevelCI",
    "ferro_segers_theta", "decluster_intervals", "fit_gpd", "fit_gev",
    "pot_return_level", "block_maxima_return_level", "pot_pipeline",
    "block_maxima_pipeline",
    # data and experiments
    "StationTable", "PipelineConfig", "load_csv", "write_csv",
    "run_case_study_pipeline", "McConfig", "McCell", "McSummary",
    "run_coverage_study", "true_return_level", "relative_change",
    # errors
    "StableSumsError", "PreconditionError", "DegenerateDataError",
    "TooFewPointsError", "NoExceedancesError", "ConvergenceError",
]

"""Local MAP / local conditional mean estimators for multimodal Bayesian inverse problems."""

from .estimators import (
    DensityEstimate,
    EstimatorReport,
    LocalEstimate,
    Region,
    cm_estimate,
    estimate_density,
    find_lmaps,
    full_report,
    lcm_estimate,
    map_estimate,
    partition_1d,
)
from .models import (
    Observation,
    PointSourceModel,
    SourceSpec,
    StekloffModel,
    WaveMediumModel,
    point_source_field,
    stekloff_closest,
    stekloff_eigenvalues,
    synthesize_data,
    wave_field,
)
from .sampler import BoxPrior, Chain, LikelihoodSpec, chain_diagnostics, log_posterior, mh_run

__version__ = "0.1.0"

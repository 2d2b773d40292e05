"""Monte Carlo laboratory for self-repellent fractional Brownian motion."""

from .energy import ball_overlap, energy_fast, occupation_time, unit_ball_volume
from .estimators import (
    EstimateWithError,
    PowerLawFit,
    check_claim,
    estimate_tail,
    estimate_ZT_importance,
    estimate_ZT_naive,
    fit_power_law,
)
from .fbm import (
    GenerationError,
    HurstModel,
    Path,
    TimeGrid,
    fbm_covariance,
    fgn_autocovariance,
    noise_to_path,
    sample_fbm,
    sample_fbm_batch,
)
from .girsanov import (
    GirsanovConstants,
    TiltSpec,
    add_drift,
    dh_regime,
    girsanov_constants,
    lambda_star,
    martingale_M,
    rn_weight,
    unit_vector,
)
from .harness import RunRecord, SweepConfig, parse_config, run_sweep
from .observables import Observables, compute_observables, radius_of_gyration
from .params import ModelParams
from .sampler import ChainConfig, ChainSample, run_chain
from .scaling import (
    ScalingPrediction,
    TableExponents,
    beta_power,
    lemma_constants,
    scaling_prediction,
    table_exponents,
)
from .verify import run_verify

__version__ = "0.1.0"

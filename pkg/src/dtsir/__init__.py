"""Sliced inverse regression with diagonal-thresholding screening."""

from .covariance import CovarianceConfig, band, invert_spd, sample_cov, select_bandwidth
from .errors import (
    DtSirError,
    InvalidArgumentError,
    NumericalError,
    ScreeningTooAggressiveError,
    SingularCovarianceError,
)
from .metrics import Subspace, projection, subspace_distance, vector_angle
from .screening import (
    AuxiliaryThreshold,
    FixedThreshold,
    TheoreticalThreshold,
    auxiliary_threshold,
    dtsir_fit,
    screen,
    sure_baseline,
    theoretical_threshold,
)
from .simgen import SettingSpec, build_covariance, gaussian_sampler, generate, make_rng
from .sir import ModelConfig, eigengap_suggest_d, lambda_hat, sir_fit, top_d_eigvecs
from .slicing import Dataset, center, slice_by_response, slice_means, var_h

__version__ = "0.1.0"

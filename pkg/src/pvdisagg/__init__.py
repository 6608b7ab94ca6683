"""Estimate behind-the-meter PV generation and masked load from substation measurements."""

from .capbank import CapBankConfig, CapBankReport, compensate_and_downsample, detect_and_compensate, suggest_threshold
from .csge import (
    CsgeResult,
    CsgeWeights,
    VarianceClampWarning,
    VarianceEstimate,
    closed_form_sources,
    disaggregate_csge,
    estimate_weights,
    residual_shares,
    sampling_rate_sweep,
    solve_separation_kkt,
    verify_theta_weight_independence,
    weight_sensitivity_sweep,
)
from .linear_estimator import LeResult, disaggregate_le
from .metrics import ScoreReport, score
from .pfbe import (
    PfbeAssumptions,
    PfbeResult,
    PowerFactorEstimate,
    SingularPowerFactorError,
    calibrate_load_pf,
    decompose_pfbe_error,
    disaggregate_pfbe,
    estimate_night_power_factor,
)
from .regression import (
    DesignMatrix,
    LinearModelFit,
    SingularDesignError,
    fit_day_aggregate_model,
    fit_night_load_model,
    ols_fit,
)
from .simulator import FeederScenario, GroundTruth, calibrate_to_paper, generate
from .timeseries import (
    DaytimeMask,
    IrradianceProxy,
    PowerSeries,
    align,
    daytime_mask,
    interval_average_downsample,
    moving_average,
    pad_hold_upsample,
)

__version__ = "0.1.0"

"""Cooperative distributed sequential spectrum sensing: simulator and analysis."""

from .model import (Algorithm, ConfigError, DriftBias, DriftConvention, FadingConfig,
                    FusionChannelParams, GlrConfig, Hypothesis, NodeParams,
                    QuantizerConfig, ScenarioConfig, fusion_llr_increment, gaussian_llr,
                    load_scenario, sample_observation, scenario_from_dict)
from .simulator import (MonteCarloSummary, TrialBatch, TrialRandomness, TrialResult,
                        draw_fading, estimate_metrics, run_trial, run_trials,
                        wilson_interval)
from .calibration import (CalibrationBudget, CalibrationError, CalibrationResult,
                          calibrate_thresholds)
from .analysis import (EpochSchedule, EpochSegment, IncrementLaw, LocalPassageLaw,
                       RenewalGrid, build_epoch_schedule, edd_analytic,
                       first_passage_survival, local_passage_cdf, local_passage_law,
                       order_stat_epoch_means, pfa_analytic, renewal_first_passage_mean)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"

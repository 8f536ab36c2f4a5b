"""Simulator and optimizers for tri-timescale tri-hybrid beamforming.

A multi-user mmWave downlink with pattern-reconfigurable antennas is driven
on three timescales: per super-frame selection of each antenna's radiation
pattern from statistical channel knowledge, per-frame quantized analog
combining updated by stochastic successive convex approximation, and
per-slot digital MMSE precoding on the reduced effective channel.
"""

from .beamform_bb import DigitalBeamformer, fully_digital_baseline, mmse_digital
from .beamform_em import (EmProblemInstance, EmResult, FpState, coupling_term,
                          fp_objective, optimize_radiation, solve_em_subproblem,
                          update_ratio_aux, update_sinr_aux)
from .beamform_rf import (RfSelection, SscaState, audit_selection,
                          fixed_subarray_mask, phase_set, random_selection,
                          round_rf, selection_basis, ssca_step, sum_rate_grad,
                          sum_rate_rf)
from .channel import (AngularGrid, ChannelRealization, ClusterParams,
                      assemble_full_channel, draw_realization,
                      realizations_to_csv, steering_vector)
from .config import (ConfigError, ExperimentConfig, PRESETS, apply_overrides,
                     apply_preset, dbm_to_watts, load_config, normalized_text)
from .estimation import (ApsEstimate, CovarianceAccumulator, SparseEstimate,
                         accumulate_and_aps, capon_spectrum, effective_channel,
                         find_spectrum_peaks, omp_recover, pattern_free_sample,
                         pilot_observe, refined_dictionary, steering_dictionary)
from .experiments import EXPERIMENTS, run_experiment
from .metrics import (BeamformerSet, MetricsRecord, PilotLedger, RateReport,
                      nmse, pilot_ledger, records_to_csv, sum_rate)
from .patterns import (EmSelection, PatternDictionary, boresight_selection,
                       build_dictionary, conventional_pattern, em_gain,
                       selected_patterns)
from .sim import (ArchitectureVariant, SweepCell, TimescaleSchedule, VARIANTS,
                  draw_scenario, mean_rate_last_super_frame, run_sweep,
                  run_trial, variant_pilot_total)
from .simplex import project_rows, project_to_simplex

__version__ = "0.1.0"

__all__ = [
    "AngularGrid", "ApsEstimate", "ArchitectureVariant", "BeamformerSet",
    "ChannelRealization", "ClusterParams", "ConfigError",
    "CovarianceAccumulator", "DigitalBeamformer", "EXPERIMENTS",
    "EmProblemInstance", "EmResult", "EmSelection", "ExperimentConfig",
    "FpState", "MetricsRecord", "PRESETS", "PatternDictionary", "PilotLedger",
    "RateReport", "RfSelection", "SparseEstimate", "SscaState", "SweepCell",
    "TimescaleSchedule", "VARIANTS", "accumulate_and_aps", "apply_overrides",
    "apply_preset", "assemble_full_channel", "audit_selection",
    "boresight_selection", "build_dictionary", "capon_spectrum",
    "conventional_pattern", "coupling_term", "dbm_to_watts", "draw_realization",
    "draw_scenario", "effective_channel", "em_gain", "find_spectrum_peaks",
    "fixed_subarray_mask", "fp_objective", "fully_digital_baseline",
    "load_config", "mean_rate_last_super_frame", "mmse_digital", "nmse",
    "normalized_text", "omp_recover", "optimize_radiation",
    "pattern_free_sample", "phase_set", "pilot_ledger", "pilot_observe",
    "project_rows", "project_to_simplex", "random_selection", "records_to_csv",
    "refined_dictionary", "realizations_to_csv", "round_rf", "run_experiment",
    "run_sweep", "run_trial", "selected_patterns", "selection_basis",
    "solve_em_subproblem", "ssca_step", "steering_dictionary",
    "steering_vector", "sum_rate", "sum_rate_grad", "sum_rate_rf",
    "update_ratio_aux", "update_sinr_aux", "variant_pilot_total",
]

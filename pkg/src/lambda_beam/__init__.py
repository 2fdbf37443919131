"""Quantum-state transfer from paired light pulses to a matter-wave beam.

A four-level double-Lambda medium supports an uncoupled superposition of two
probe fields that rides a shared dark state with the beam; ramping the
control couplings converts that light into a propagating matter-wave
component.  The package provides the coupled transport solver, the adiabatic
closed forms it is checked against, absorption/loss corrections, and the
counting interferometry used to read the transferred phase back out.
"""

from .model import (
    EnsembleConfig,
    MixingAngles,
    ModelError,
    ProfileConfig,
    StokesProfile,
    SystemParams,
    VelocityEnsemble,
    build_ensemble,
    build_profiles,
    group_velocity,
    mixing_angles,
    propagation_delay,
)
from .adiabatic import (
    LossCorrection,
    PolaritonSolution,
    ValidityReport,
    alpha_integrals,
    combined_field,
    detuning_correction,
    doppler_validity,
    entrance_combination,
    output_intensity,
    output_matter_wave,
    propagate_polariton,
)
from .pde import (
    BoundaryInput,
    EngineError,
    FieldState,
    RunRecord,
    TransientReport,
    TransportSolver,
    entrance_transient_diagnostics,
    gaussian_pulse,
    matched_boundary,
    run,
    step,
)
from .interferometry import (
    MeasurementError,
    MeasurementRecord,
    ScalingReport,
    SplitterSetup,
    StudyReport,
    channel_intensities,
    channel_intensities_from_model,
    ensemble_measurements,
    estimate_phase,
    estimator_scaling,
    estimator_study,
    fold_phase,
    intensity_scale,
    sample_counts,
    sample_counts_poisson,
)
from .config import ConfigError, RunConfig, from_mapping, load_config
from .runner import run_scenario

__version__ = "0.1.0"

__all__ = [
    "BoundaryInput",
    "ConfigError",
    "EngineError",
    "EnsembleConfig",
    "FieldState",
    "LossCorrection",
    "MeasurementError",
    "MeasurementRecord",
    "MixingAngles",
    "ModelError",
    "PolaritonSolution",
    "ProfileConfig",
    "RunConfig",
    "RunRecord",
    "ScalingReport",
    "SplitterSetup",
    "StokesProfile",
    "StudyReport",
    "SystemParams",
    "TransientReport",
    "TransportSolver",
    "ValidityReport",
    "VelocityEnsemble",
    "alpha_integrals",
    "build_ensemble",
    "build_profiles",
    "channel_intensities",
    "channel_intensities_from_model",
    "combined_field",
    "detuning_correction",
    "doppler_validity",
    "ensemble_measurements",
    "entrance_combination",
    "entrance_transient_diagnostics",
    "estimate_phase",
    "estimator_scaling",
    "estimator_study",
    "fold_phase",
    "from_mapping",
    "gaussian_pulse",
    "group_velocity",
    "intensity_scale",
    "load_config",
    "matched_boundary",
    "mixing_angles",
    "output_intensity",
    "output_matter_wave",
    "propagate_polariton",
    "propagation_delay",
    "run",
    "run_scenario",
    "sample_counts",
    "sample_counts_poisson",
    "step",
    "__version__",
]

"""
Fock Filter - simulation and analysis of a heralded linear-optical Fock-state filter.

A beamsplitter, one ancilla photon and a detector remove the single-photon
component of a light field while passing photon pairs. This package models
that device exactly and analyses its measured data.

Key Features:
- Exact Fock-space propagation through beamsplitters, wave plates and phases
- Closed-form filter amplitudes, visibilities and blocking ratios
- Dip-scan synthesis and Poisson-weighted dip fits
- End-to-end simulation of the heralded circuit and its tomography counts
- Maximum-likelihood two-qubit tomography with bootstrap error bars
- Fidelity, tangle, linear entropy and purity

Example:
    ```python
    import math
    from fock_filter import CircuitConfig, output_state, tangle, load_fixture, mle_reconstruct

    state = output_state(CircuitConfig(theta=math.pi / 4))
    tangle(state.density)  # 1.0: the filtered pair is a Bell state

    rho = mle_reconstruct(load_fixture("filter_on"))
    tangle(rho)  # about 0.2
    ```
"""

# Fock-space core
from .fock import (
    ModeSet,
    FockState,
    LinearNetwork,
    make_fock_state,
    beamsplitter,
    half_waveplate,
    phase_shift,
    compose,
    apply_network,
    condition,
    outcomes,
    polarizer,
    fidelity as state_fidelity,
)

# Filter algebra
from .filter_model import (
    FilterParams,
    FilteredState,
    amplitude,
    prob_distinguishable,
    ideal_visibility,
    zero_reflectivity,
    conditional_coefficient,
    filtered_state,
    blocking_ratio,
    blocking_ratio_error,
    filter_curves,
    filter_network,
)

# Interference dips
from .interference import (
    DipModel,
    ScanPoint,
    ScanData,
    DipFit,
    DipScanConfig,
    dip_rate,
    overlap_at,
    coincidence_curve,
    dip_model_for,
    simulate_scan,
    fit_dip,
    corrected_visibility,
    background_sum,
)

# Two-qubit types
from .qubits import (
    AnalyzerSetting,
    TomographyCounts,
    TwoQubitState,
    DensityMatrix,
    CANONICAL_SETTINGS,
    DD,
    PHI_MINUS,
)

# Circuit simulation
from .experiment import (
    CircuitConfig,
    HeraldedOutput,
    OutputState,
    build_and_run,
    pairs_to_qubits,
    output_state,
    overlap_for_visibility,
    setting_probability,
    generate_counts,
)

# Tomography
from .tomography import (
    LinearEstimate,
    MLEResult,
    BootstrapSummary,
    load_fixture,
    linear_estimate,
    mle_fit,
    mle_reconstruct,
    bootstrap_metrics,
    trace_distance,
)

# Metrics
from .metrics import (
    StateMetrics,
    fidelity,
    tangle,
    concurrence,
    linear_entropy,
    purity,
    population_ratio,
    state_metrics,
)

# Errors
from .errors import (
    FockFilterError,
    ModeError,
    NetworkError,
    ZeroHeraldError,
    UnboundedRatioError,
    DipFitError,
    ReconstructionError,
)

# Types
from .types import (
    Mode,
    Polarization,
    Basis,
    CircularConvention,
)

__version__ = "0.1.0a1"

__all__ = [
    # Fock-space core
    "ModeSet",
    "FockState",
    "LinearNetwork",
    "make_fock_state",
    "beamsplitter",
    "half_waveplate",
    "phase_shift",
    "compose",
    "apply_network",
    "condition",
    "outcomes",
    "polarizer",
    "state_fidelity",
    # Filter algebra
    "FilterParams",
    "FilteredState",
    "amplitude",
    "prob_distinguishable",
    "ideal_visibility",
    "zero_reflectivity",
    "conditional_coefficient",
    "filtered_state",
    "blocking_ratio",
    "blocking_ratio_error",
    "filter_curves",
    "filter_network",
    # Interference dips
    "DipModel",
    "ScanPoint",
    "ScanData",
    "DipFit",
    "DipScanConfig",
    "dip_rate",
    "overlap_at",
    "coincidence_curve",
    "dip_model_for",
    "simulate_scan",
    "fit_dip",
    "corrected_visibility",
    "background_sum",
    # Two-qubit types
    "AnalyzerSetting",
    "TomographyCounts",
    "TwoQubitState",
    "DensityMatrix",
    "CANONICAL_SETTINGS",
    "DD",
    "PHI_MINUS",
    # Circuit simulation
    "CircuitConfig",
    "HeraldedOutput",
    "OutputState",
    "build_and_run",
    "pairs_to_qubits",
    "output_state",
    "overlap_for_visibility",
    "setting_probability",
    "generate_counts",
    # Tomography
    "LinearEstimate",
    "MLEResult",
    "BootstrapSummary",
    "load_fixture",
    "linear_estimate",
    "mle_fit",
    "mle_reconstruct",
    "bootstrap_metrics",
    "trace_distance",
    # Metrics
    "StateMetrics",
    "fidelity",
    "tangle",
    "concurrence",
    "linear_entropy",
    "purity",
    "population_ratio",
    "state_metrics",
    # Errors
    "FockFilterError",
    "ModeError",
    "NetworkError",
    "ZeroHeraldError",
    "UnboundedRatioError",
    "DipFitError",
    "ReconstructionError",
    # Types
    "Mode",
    "Polarization",
    "Basis",
    "CircularConvention",
]

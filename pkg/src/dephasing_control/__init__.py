"""Qubit dephasing in a non-Markovian Ohmic bath, with instantaneous control pulses.

Closed-form kernels, Bloch-ball geometry, two propagators for controlled
evolution (a fixed dissipator and the exact microscopic map), a discretized
bath used as an oracle, and the single-pulse coherence-preserving protocol.
"""

from .bloch import (
    BlochVector,
    DensityMatrix2,
    FluxSample,
    GridSpec,
    Trajectory,
    admissibility_residual,
    coherence,
    dissipator_bloch_form,
    flux_field,
    purity,
    purity_flux,
    reconstruct_control_field,
    rotate,
    rotation_matrix,
)
from .control import (
    GridSearchResult,
    OptimizationResult,
    average_coherence,
    controlled_average_coherence,
    controlled_protocol,
    grid_search_verify,
    horizon_sensitivity,
    solve_initial_angle,
    sweep,
    uncontrolled_optimum,
)
from .errors import (
    ConfigError,
    DegenerateEllipsoidError,
    DephasingError,
    DomainError,
    HorizonTooShortError,
    InfeasibleProtocolError,
    InputError,
    NoCrossingError,
    SingularStateError,
    UnsupportedProtocolError,
)
from .maps import (
    ControlProtocol,
    CpAuditReport,
    Pulse,
    QubitMap,
    choi_matrix,
    cp_audit,
    in_accessible_set,
    intermediate_map_cp,
    is_covariant,
    is_cp,
    map_at,
    propagate,
    propagate_fixed_dissipator,
    propagate_microscopic,
    propagate_uncontrolled,
    trajectory,
)
from .oracle import (
    BranchLabel,
    DiscretizedEnv,
    branch_overlap,
    branch_state_amplitudes,
    build_env,
    oracle_bloch,
    oracle_decoherence,
    oracle_density_matrix,
)
from .spectral import (
    SpectralParams,
    control_phase_y,
    decay_rate,
    decoherence_fn,
    horizon,
    kernel_table,
    phase_fn,
    rate_zero_crossings,
    spectral_density,
)

__version__ = "0.1.0"

"""Simulator for a four-pulse controlled-rotation gate on a hot trapped-ion string.

The gate couples two qubit ions through the shared center-of-mass phonon
mode without requiring that mode to start in its ground state: a conditional
phase pulse on the target, an adiabatic passage moving the control qubit onto
an auxiliary shelf while adding one phonon, a second conditional phase, and
the reverse passage. Both an ideal-operator model and a time-resolved
adiabatic-passage model are provided, for pure and mixed phonon inputs.
"""

from .errors import (
    AmbiguousExtraction,
    DomainError,
    NonPositiveChi,
    NormDrift,
    ShapeError,
    SimulationError,
    TruncationLeakage,
    UndefinedPhase,
)
from .hilbert import (
    DEFAULT_N_MAX,
    LEAK_TOL,
    CompositeSpace,
    CompositeState,
    DensityOperator,
    FockSpace,
    IonLevelSpace,
    basis_state,
    compose_density,
    compose_state,
    decode_index,
    encode_index,
    fidelity,
    parity_decompose,
    partial_trace_ions,
    partial_trace_phonon,
    shift_down,
    shift_up,
)
from .states import (
    ThermalSpec,
    coherent_state,
    fock_state,
    mean_occupation,
    parse_state_spec,
    random_pure_state,
    thermal_state,
)
from .operators import (
    PhysicalParams,
    adiabatic_down,
    adiabatic_up,
    carrier_rotation,
    chi,
    conditional_phase,
    conditional_phase_hamiltonian,
    tau,
)
from .stirap import (
    PulseEnvelope,
    StirapSchedule,
    adiabaticity_margin,
    block_propagators,
    calibrate_transfer,
    hamiltonian_block,
    propagate,
    residual_phase,
    reversed_schedule,
    standard_schedule,
    transfer_efficiency,
)
from .gate import (
    GateConfig,
    GateReport,
    cnot,
    crot,
    gate_fidelity,
    gate_report,
    mixed_state_equivalence,
    truth_table,
)

__all__ = [name for name in dir() if not name.startswith("_")]

"""Exception types shared across the simulator."""


class SimulationError(Exception):
    """Base class for all simulator-specific errors."""


class ShapeError(SimulationError):
    """Operands live on incompatible spaces or have wrong dimensions."""


class DomainError(SimulationError):
    """State has support outside the domain an operator is defined on."""


class TruncationLeakage(SimulationError):
    """Amplitude at the Fock-space boundary exceeds the allowed tolerance."""


class NormDrift(SimulationError):
    """State norm drifted beyond the unitarity budget during propagation."""


class NonPositiveChi(SimulationError):
    """Conditional-phase coupling rate is not positive, so no pulse duration exists."""


class UndefinedPhase(SimulationError):
    """Transfer amplitude too small for its phase to be meaningful."""


class AmbiguousExtraction(SimulationError):
    """Residual ion-phonon entanglement prevents a clean truth-table readout."""

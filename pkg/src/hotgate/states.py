"""Initial phonon-state families: Fock, coherent, thermal, seeded random.

Coherent and thermal constructors renormalize after truncation; the discarded
weight is available in closed form (coherent_discarded_weight,
thermal_discarded_weight) and construction aborts when it exceeds
``max_discard`` (default 1e-2), keeping the family honest about how hot a
state the chosen n_max can hold.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TruncationLeakage
from .hilbert import DensityOperator, FockSpace

MAX_STATE_DISCARD = 1e-2


@dataclass(frozen=True)
class ThermalSpec:
    """Mean occupation of a thermal phonon distribution."""

    n_bar: float

    def __post_init__(self):
        if not np.isfinite(self.n_bar) or self.n_bar < 0:
            raise ValueError(f"n_bar must be finite and >= 0, got {self.n_bar}")


def fock_state(n: int, n_max: int) -> np.ndarray:
    """Unit vector with all weight at occupation n."""
    if not 0 <= n <= n_max:
        raise IndexError(f"occupation {n} outside 0..{n_max}")
    v = np.zeros(n_max + 1, dtype=complex)
    v[n] = 1.0
    return v


def _coherent_unnormalized(alpha: complex, n_max: int) -> np.ndarray:
    if alpha == 0:
        v = np.zeros(n_max + 1, dtype=complex)
        v[0] = 1.0
        return v
    # a_n = alpha^n / sqrt(n!) computed in log space to dodge overflow
    n = np.arange(n_max + 1)
    log_mag = n * np.log(np.abs(alpha)) - 0.5 * _log_factorial(n)
    phase = np.exp(1j * n * np.angle(alpha))
    return np.exp(log_mag) * phase


def _log_factorial(n: np.ndarray) -> np.ndarray:
    from scipy.special import gammaln

    return gammaln(n + 1.0)


def coherent_discarded_weight(alpha: complex, n_max: int) -> float:
    """Probability weight of the coherent state above the truncation n_max."""
    v = _coherent_unnormalized(alpha, n_max)
    kept = float(np.sum(np.abs(v) ** 2))
    return max(0.0, 1.0 - kept * np.exp(-np.abs(alpha) ** 2))


def coherent_state(alpha: complex, n_max: int, *,
                   max_discard: float = MAX_STATE_DISCARD) -> np.ndarray:
    """Truncated, renormalized coherent state with amplitude alpha."""
    discard = coherent_discarded_weight(alpha, n_max)
    if discard > max_discard:
        raise TruncationLeakage(
            f"|alpha|^2 = {abs(alpha)**2:.3g} too large for n_max = {n_max}: "
            f"discarded weight {discard:.3e} exceeds {max_discard}"
        )
    v = _coherent_unnormalized(alpha, n_max)
    return v / np.linalg.norm(v)


def thermal_discarded_weight(n_bar: float, n_max: int) -> float:
    """Geometric tail weight of the thermal distribution above n_max."""
    if n_bar == 0:
        return 0.0
    return float((n_bar / (1.0 + n_bar)) ** (n_max + 1))


def thermal_probabilities(spec: ThermalSpec, n_max: int) -> np.ndarray:
    """Renormalized occupation probabilities p_n of the truncated thermal state."""
    if spec.n_bar == 0:
        p = np.zeros(n_max + 1)
        p[0] = 1.0
        return p
    n = np.arange(n_max + 1)
    # p_n = n_bar^n / (1 + n_bar)^(n+1), evaluated in log space
    logp = n * np.log(spec.n_bar) - (n + 1) * np.log1p(spec.n_bar)
    p = np.exp(logp)
    return p / p.sum()


def thermal_state(spec: ThermalSpec, n_max: int, *,
                  max_discard: float = MAX_STATE_DISCARD) -> DensityOperator:
    """Truncated, renormalized thermal phonon density operator (Fock-diagonal)."""
    discard = thermal_discarded_weight(spec.n_bar, n_max)
    if discard > max_discard:
        raise TruncationLeakage(
            f"n_bar = {spec.n_bar} too hot for n_max = {n_max}: "
            f"discarded weight {discard:.3e} exceeds {max_discard}"
        )
    p = thermal_probabilities(spec, n_max)
    return DensityOperator(np.diag(p.astype(complex)), FockSpace(n_max), validate=False)


def random_pure_state(seed: int, n_max: int) -> np.ndarray:
    """Seeded Haar-like random unit vector over occupations 0..n_max."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n_max + 1) + 1j * rng.standard_normal(n_max + 1)
    return v / np.linalg.norm(v)


def mean_occupation(state) -> float:
    """Expectation of the number operator for a phonon vector or density operator."""
    if isinstance(state, DensityOperator):
        probs = np.real(np.diag(state.matrix))
    else:
        probs = np.abs(np.asarray(state, dtype=complex)) ** 2
    return float(np.sum(np.arange(len(probs)) * probs))


def parse_state_spec(spec: str, n_max: int, default_seed: int | None = None):
    """Parse a state-family string into a phonon vector or density operator.

    Families: ``fock:N``, ``coherent:RE,IM``, ``thermal:NBAR``, ``random:SEED``
    (``random`` alone uses default_seed). Raises ValueError on malformed input.
    """
    name, _, arg = spec.partition(":")
    name = name.strip().lower()
    arg = arg.strip()
    try:
        if name == "fock":
            return fock_state(int(arg), n_max)
        if name == "coherent":
            re_s, _, im_s = arg.partition(",")
            if not im_s:
                raise ValueError
            return coherent_state(complex(float(re_s), float(im_s)), n_max)
        if name == "thermal":
            return thermal_state(ThermalSpec(float(arg)), n_max)
        if name == "random":
            if arg:
                seed = int(arg)
            elif default_seed is not None:
                seed = default_seed
            else:
                raise ValueError
            return random_pure_state(seed, n_max)
    except (ValueError, IndexError) as exc:
        raise ValueError(f"malformed state spec {spec!r}") from exc
    raise ValueError(f"unknown state family {name!r} in spec {spec!r}")

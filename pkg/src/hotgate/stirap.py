"""Time-resolved adiabatic passage on the control ion.

For each phonon occupation n the dynamics closes on the three levels
{|1,n>, |3,n>, |2,n+1>}: the pump field drives the carrier |1,n> <-> |3,n>
with bare Rabi rate Omega_p(t), the Stokes field drives the red sideband
|2,n+1> <-> |3,n> with effective rate eta*sqrt(n+1)*Omega_S(t), and both
share the detuning Delta of the intermediate level. In this rotating frame
the block Hamiltonian is

        [ 0            Omega_p/2      0           ]
        [ Omega_p/2    Delta          Omega_Sn/2  ]
        [ 0            Omega_Sn/2     0           ]

Blocks are independent (the full passage Hamiltonian is block-diagonal in n),
so propagation batches over n. Steps use exact 3x3 unitary exponentials; the
default 'magnus4' stepper adds a commutator correction for 4th-order dt
convergence, 'midpoint' freezes H mid-step (2nd order).
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, NormDrift, TruncationLeakage, UndefinedPhase
from .hilbert import DOMAIN_ATOL, LEAK_TOL, CompositeState
from .operators import PhysicalParams

PULSE_SHAPES = ("sin2", "gaussian")

# Standard counter-intuitive sin^2 pair, as fractions of the total duration.
# Calibrated so that one family parameter (the margin) controls adiabaticity.
STOKES_CENTER_FRAC = 0.30
PUMP_CENTER_FRAC = 0.70
WIDTH_FRAC = 0.50
DEFAULT_MARGIN = 100.0
DEFAULT_N_STEPS = 2000


@dataclass(frozen=True)
class PulseEnvelope:
    """One laser pulse envelope; sin2 has compact support [center-width, center+width]."""

    shape: str
    peak_rabi: float
    center: float
    width: float

    def __post_init__(self):
        if self.shape not in PULSE_SHAPES:
            raise ValueError(f"unknown pulse shape {self.shape!r}")
        if self.peak_rabi < 0:
            raise ValueError("peak_rabi must be >= 0")
        if self.width <= 0:
            raise ValueError("width must be > 0")

    def value(self, t):
        """Envelope value at time(s) t; stays within [0, peak_rabi]."""
        t = np.asarray(t, dtype=float)
        x = (t - self.center) / self.width
        if self.shape == "sin2":
            return np.where(np.abs(x) < 1.0, self.peak_rabi * np.cos(0.5 * np.pi * x) ** 2, 0.0)
        return self.peak_rabi * np.exp(-0.5 * x**2)


@dataclass(frozen=True)
class StirapSchedule:
    """Pump/Stokes pulse pair, total duration, shared detuning, step size, direction.

    'up' transfers |1>|n> -> |2>|n+1> and needs the Stokes pulse first
    (stokes.center < pump.center); 'down' interchanges the pulse roles.
    """

    pump: PulseEnvelope
    stokes: PulseEnvelope
    total_duration: float
    detuning: float
    dt: float
    direction: str = "up"

    def __post_init__(self):
        if self.direction not in ("up", "down"):
            raise ValueError(f"direction must be 'up' or 'down', got {self.direction!r}")
        if self.total_duration <= 0:
            raise ValueError("total_duration must be > 0")
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        ratio = self.total_duration / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ValueError("total_duration must be an integer number of dt steps")
        if self.direction == "up" and not self.stokes.center < self.pump.center:
            raise ValueError("'up' needs the counter-intuitive order: Stokes before pump")
        if self.direction == "down" and not self.pump.center < self.stokes.center:
            raise ValueError("'down' interchanges the roles: pump before Stokes")

    @property
    def n_steps(self) -> int:
        return int(round(self.total_duration / self.dt))


def standard_schedule(total_duration: float, params: PhysicalParams, *,
                      margin: float | None = None,
                      pump_peak: float | None = None,
                      stokes_peak: float | None = None,
                      direction: str = "up",
                      n_steps: int = DEFAULT_N_STEPS,
                      detuning: float | None = None,
                      shape: str = "sin2") -> StirapSchedule:
    """Build the standard counter-intuitive pulse pair for a given duration.

    Peak rates follow from the adiabaticity margin (default 100): the pump
    peak is margin/T and the bare Stokes peak margin/(eta*T), which balances
    the two effective couplings on the lowest rung. Explicit pump_peak /
    stokes_peak override the margin parametrization.
    """
    if margin is not None and (pump_peak is not None or stokes_peak is not None):
        raise ValueError("give either margin or explicit peak rates, not both")
    if pump_peak is None and stokes_peak is not None:
        raise ValueError("stokes_peak needs an explicit pump_peak")
    if pump_peak is None:
        m = DEFAULT_MARGIN if margin is None else margin
        pump_peak = m / total_duration
        stokes_peak = m / (params.eta * total_duration)
    elif stokes_peak is None:
        stokes_peak = pump_peak / params.eta
    t = total_duration
    width = WIDTH_FRAC * t
    centers = (PUMP_CENTER_FRAC * t, STOKES_CENTER_FRAC * t)
    if direction == "down":
        centers = (centers[1], centers[0])
    return StirapSchedule(
        pump=PulseEnvelope(shape, pump_peak, centers[0], width),
        stokes=PulseEnvelope(shape, stokes_peak, centers[1], width),
        total_duration=t,
        detuning=params.delta_stirap if detuning is None else detuning,
        dt=t / n_steps,
        direction=direction,
    )


def reversed_schedule(schedule: StirapSchedule) -> StirapSchedule:
    """Interchange the pulse roles: each field takes the other's time course.

    Peak rates stay with their fields; the direction flips. Reversing a
    standard 'up' schedule yields the matching 'down' passage.
    """
    new_pump = replace(schedule.pump, center=schedule.stokes.center,
                       width=schedule.stokes.width, shape=schedule.stokes.shape)
    new_stokes = replace(schedule.stokes, center=schedule.pump.center,
                         width=schedule.pump.width, shape=schedule.pump.shape)
    return replace(schedule, pump=new_pump, stokes=new_stokes,
                   direction="down" if schedule.direction == "up" else "up")


def sideband_rate(n: int, t, schedule: StirapSchedule, params: PhysicalParams):
    """Effective Stokes rate on rung n: eta * sqrt(n+1) * Omega_S(t)."""
    return params.eta * np.sqrt(n + 1.0) * schedule.stokes.value(t)


def adiabaticity_margin(schedule: StirapSchedule, params: PhysicalParams, n: int) -> float:
    """min(T * pump peak, T * effective Stokes peak on rung n); larger is slower."""
    t = schedule.total_duration
    return float(min(t * schedule.pump.peak_rabi,
                     t * params.eta * np.sqrt(n + 1.0) * schedule.stokes.peak_rabi))


def hamiltonian_block(n: int, t: float, schedule: StirapSchedule,
                      params: PhysicalParams, n_max: int | None = None) -> np.ndarray:
    """3x3 Hermitian block over {|1,n>, |3,n>, |2,n+1>} at time t."""
    if n < 0:
        raise IndexError(f"occupation {n} must be >= 0")
    if n_max is not None and n >= n_max:
        raise IndexError(f"no rung above n = {n} in a space truncated at {n_max}")
    om_p = float(schedule.pump.value(t))
    om_s = float(sideband_rate(n, t, schedule, params))
    return np.array(
        [[0.0, om_p / 2, 0.0],
         [om_p / 2, schedule.detuning, om_s / 2],
         [0.0, om_s / 2, 0.0]],
        dtype=complex,
    )


def _block_hams(ts: np.ndarray, ns: np.ndarray, schedule: StirapSchedule,
                params: PhysicalParams) -> np.ndarray:
    """Batched blocks, shape (len(ts), len(ns), 3, 3)."""
    om_p = schedule.pump.value(ts)
    om_s = params.eta * np.sqrt(np.asarray(ns) + 1.0)[None, :] * schedule.stokes.value(ts)[:, None]
    h = np.zeros((len(ts), len(ns), 3, 3), dtype=complex)
    h[:, :, 0, 1] = om_p[:, None] / 2
    h[:, :, 1, 0] = om_p[:, None] / 2
    h[:, :, 1, 1] = schedule.detuning
    h[:, :, 1, 2] = om_s / 2
    h[:, :, 2, 1] = om_s / 2
    return h


def _expm_step(k: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i k dt) for stacked Hermitian k, exact via eigendecomposition."""
    w, v = np.linalg.eigh(k)
    phase = np.exp(-1j * w * dt)
    return np.einsum("...ij,...j,...kj->...ik", v, phase, v.conj())


def block_propagators(schedule: StirapSchedule, params: PhysicalParams, ns,
                      method: str = "magnus4", trajectory: bool = False) -> np.ndarray:
    """Time-ordered propagator of each n-block over the full schedule.

    Returns (len(ns), 3, 3), or the cumulative products at every step
    boundary, shape (n_steps+1, len(ns), 3, 3), when trajectory is True.
    """
    ns = np.atleast_1d(np.asarray(ns, dtype=int))
    n_steps = schedule.n_steps
    dt = schedule.dt
    starts = np.arange(n_steps) * dt
    p = np.broadcast_to(np.eye(3, dtype=complex), (len(ns), 3, 3)).copy()
    traj = np.empty((n_steps + 1, len(ns), 3, 3), dtype=complex) if trajectory else None
    if trajectory:
        traj[0] = p
    if method == "midpoint":
        hams = _block_hams(starts + dt / 2, ns, schedule, params)
        for k in range(n_steps):
            p = _expm_step(hams[k], dt) @ p
            if trajectory:
                traj[k + 1] = p
    elif method == "magnus4":
        c1 = 0.5 - np.sqrt(3.0) / 6.0
        c2 = 0.5 + np.sqrt(3.0) / 6.0
        h1 = _block_hams(starts + c1 * dt, ns, schedule, params)
        h2 = _block_hams(starts + c2 * dt, ns, schedule, params)
        coeff = np.sqrt(3.0) / 12.0
        for k in range(n_steps):
            comm = h2[k] @ h1[k] - h1[k] @ h2[k]
            gen = 0.5 * (h1[k] + h2[k]) - 1j * coeff * dt * comm
            p = _expm_step(gen, dt) @ p
            if trajectory:
                traj[k + 1] = p
    else:
        raise ValueError(f"unknown integration method {method!r}")
    return traj if trajectory else p


def _transfer_amplitude(p_block: np.ndarray, direction: str) -> complex:
    # up: <2,n+1|U|1,n>; down: <1,n|U|2,n+1>
    return complex(p_block[2, 0] if direction == "up" else p_block[0, 2])


def transfer_efficiency(n: int, schedule: StirapSchedule, params: PhysicalParams,
                        method: str = "magnus4") -> float:
    """Population transferred along the passage direction on rung n."""
    p = block_propagators(schedule, params, [n], method=method)[0]
    return float(abs(_transfer_amplitude(p, schedule.direction)) ** 2)


def residual_phase(n: int, schedule: StirapSchedule, params: PhysicalParams,
                   method: str = "magnus4") -> float:
    """Phase of the transfer amplitude on rung n, in (-pi, pi].

    The ideal maps are phase-free, so this measures the passage's deviation
    from them (an adiabatic passage sits near pi). Undefined when less than
    half the population makes the transfer.
    """
    p = block_propagators(schedule, params, [n], method=method)[0]
    amp = _transfer_amplitude(p, schedule.direction)
    if abs(amp) ** 2 < 0.5:
        raise UndefinedPhase(
            f"transfer efficiency {abs(amp) ** 2:.3f} < 0.5 on rung {n}"
        )
    return float(np.angle(amp))


def block_trajectory(schedule: StirapSchedule, params: PhysicalParams, n: int,
                     method: str = "magnus4"):
    """Times and 3-level amplitudes over the passage, starting on the source level.

    Returns (times, amps) with amps[k] = (c_{1,n}, c_{3,n}, c_{2,n+1}) at step
    boundary k. The final transferred population equals transfer_efficiency
    exactly (same accumulated product).
    """
    traj = block_propagators(schedule, params, [n], method=method, trajectory=True)
    col = 0 if schedule.direction == "up" else 2
    amps = traj[:, 0, :, col]
    times = np.arange(schedule.n_steps + 1) * schedule.dt
    return times, amps


def propagate(state: CompositeState, schedule: StirapSchedule, params: PhysicalParams, *,
              control_ion: int = 0, method: str = "magnus4",
              domain_tol: float = DOMAIN_ATOL, leak_tol: float = LEAK_TOL) -> CompositeState:
    """Propagate a composite state through the passage, block-by-block in n.

    Components with the control ion in |0> are untouched. The control ion may
    only populate {0,1} ('up') or {0,2} ('down') beyond domain_tol, and the
    top of the ladder must be clear within leak_tol.
    """
    space = state.space
    xc = np.moveaxis(state.tensor(), control_ion, 0)
    w = np.abs(xc) ** 2
    total = max(float(w.sum()), 1e-300)
    if schedule.direction == "up":
        bad = float(w[2].sum() + w[3].sum())
        if bad > domain_tol * total:
            raise DomainError(
                f"'up' passage needs control support on {{0,1}} only; found {bad:.3e} "
                "on levels 2/3"
            )
        top = float(w[(1, Ellipsis, -1)].sum() + w[(3, Ellipsis, -1)].sum())
        if top > leak_tol * total:
            raise TruncationLeakage(
                f"population {top:.3e} at the top of the passage ladder exceeds "
                f"leak_tol = {leak_tol}"
            )
    else:
        bad = float(w[1].sum() + w[3].sum())
        if bad > domain_tol * total:
            raise DomainError(
                f"'down' passage needs control support on {{0,2}} only; found {bad:.3e} "
                "on levels 1/3"
            )
        vac = float(w[(2, Ellipsis, 0)].sum())
        if vac > domain_tol * total:
            raise DomainError(
                f"'down' passage undefined on |2>|0>: population {vac:.3e} with no "
                "phonon to remove"
            )
    d = space.fock.dim
    p = block_propagators(schedule, params, np.arange(d - 1), method=method)
    y = xc.copy()
    blocks = np.stack(
        [xc[(1, Ellipsis, slice(0, -1))],
         xc[(3, Ellipsis, slice(0, -1))],
         xc[(2, Ellipsis, slice(1, None))]],
        axis=-1,
    )
    evolved = np.einsum("nij,...nj->...ni", p, blocks)
    y[(1, Ellipsis, slice(0, -1))] = evolved[..., 0]
    y[(3, Ellipsis, slice(0, -1))] = evolved[..., 1]
    y[(2, Ellipsis, slice(1, None))] = evolved[..., 2]
    amps = np.moveaxis(y, 0, control_ion).reshape(space.dim)
    out = CompositeState(space, amps, copy=False)
    if abs(out.norm - state.norm) > 1e-9:
        raise NormDrift(f"norm drifted by {abs(out.norm - state.norm):.3e}")
    return out


def passage_matrix(schedule: StirapSchedule, params: PhysicalParams,
                   n_phonon_levels: int, method: str = "magnus4") -> np.ndarray:
    """Dense passage unitary on the control-ion (x) phonon subspace.

    Index layout: level * n_phonon_levels + n. Cells outside the passage
    blocks (level 0, the ladder top, and |2>|0>) carry the identity.
    """
    d = n_phonon_levels
    p = block_propagators(schedule, params, np.arange(d - 1), method=method)
    mat = np.eye(4 * d, dtype=complex)
    for n in range(d - 1):
        idx = [1 * d + n, 3 * d + n, 2 * d + (n + 1)]
        mat[np.ix_(idx, idx)] = p[n]
    return mat


@dataclass(frozen=True)
class TransferCalibration:
    """Outcome of the automated duration sweep."""

    margin: float
    total_duration: float
    threshold: float
    n_values: tuple
    efficiencies: np.ndarray
    history: tuple  # (duration, margin, min efficiency) per tried duration
    schedule: StirapSchedule


def calibrate_transfer(params: PhysicalParams, durations, *,
                       pump_peak: float = 1.0, stokes_peak: float | None = None,
                       n_values=tuple(range(11)), threshold: float = 0.999,
                       n_steps: int = DEFAULT_N_STEPS, detuning: float | None = None,
                       method: str = "magnus4") -> TransferCalibration:
    """Sweep the passage duration upward until every rung transfers >= threshold.

    Peak Rabi rates are held fixed, so longer durations mean larger
    adiabaticity margins. Returns the first (minimal) duration on the grid
    that clears the threshold for every n in n_values, with its margin.
    """
    history = []
    for t in sorted(durations):
        sched = standard_schedule(t, params, pump_peak=pump_peak, stokes_peak=stokes_peak,
                                  n_steps=n_steps, detuning=detuning)
        p = block_propagators(sched, params, np.asarray(n_values), method=method)
        eff = np.abs(p[:, 2, 0]) ** 2
        margin = min(adiabaticity_margin(sched, params, n) for n in n_values)
        history.append((t, margin, float(eff.min())))
        if eff.min() >= threshold:
            return TransferCalibration(
                margin=margin, total_duration=t, threshold=threshold,
                n_values=tuple(n_values), efficiencies=eff, history=tuple(history),
                schedule=sched,
            )
    raise ValueError(
        f"no duration in the grid reached transfer >= {threshold}; "
        f"best was {max(h[2] for h in history):.6f}"
    )

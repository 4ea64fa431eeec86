"""Open-system two-amplitude dynamics with the intermediate state eliminated.

The engine evolves the rotating-frame amplitudes (c_g, c_e) of the two
clock states under far-detuned Raman coupling, with the intermediate
state adiabatically eliminated but its spontaneous decay retained.  The
right-hand sides follow from solving the driven, decaying intermediate
amplitude and substituting back:

    dc_g/dt = [A_gg e^{-i D t} c_g + A_ge e^{+i dkx} e^{-i D t} c_e] e^{-gamma_l t/2}
              - [A_gg c_g + A_ge e^{+i(dkx + delta t)} c_e]
    dc_e/dt = [A_ee e^{-i D' t} c_e + A_eg e^{-i dkx} e^{-i D' t} c_g] e^{-gamma_l t/2}
              - [A_ee c_e + A_eg e^{-i(dkx + delta t)} c_g]

with D = Delta, D' = Delta + delta, dkx = k2.x_e - k1.x_g, and

    A_gg = |Omega1|^2 / (i Delta + gamma_l/2),
    A_ge = Omega1 Omega2* / (i (Delta+delta) + gamma_l/2),
    A_ee = |Omega2|^2 / (i (Delta+delta) + gamma_l/2),
    A_eg = Omega2 Omega1* / (i Delta + gamma_l/2).

The prefactor denominators carry +gamma_l/2, which makes the retained
population decay at exactly the analytic loss rate; the first (AC)
brackets are the decaying transient of the intermediate state and vanish
for pulse times well beyond 2/gamma_l.  Pulse propagation integrates the
stationary (DC) part only and oscillates no faster than the two-photon
Rabi rate, so the fast e^{i Delta t} scale never has to be resolved; the
transient's net effect is a one-time kick of relative size ~(Omega/Delta)
/ Delta and is dropped.

Pulse-local conventions: every optical pulse restarts its local clock
(t_pulse = 0 at the pulse edge) and samples dkx once at the pulse edge.
Between-pulse physics enters only through the positions at the next
pulse.  This models per-pulse resonance steering of the lasers; the
configured two-photon detuning is the residual after that steering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from . import integrators
from .model import (
    HBAR,
    AtomSpecies,
    LaserConfig,
    PulseKind,
    QMode,
    SimulationConfig,
    alpha_scale,
)
from .stats import analytical_q

__all__ = [
    "DegeneratePopulationError",
    "QuantumState",
    "RunOutcome",
    "pulse_coefficients",
    "amplitude_derivatives",
    "intermediate_amplitude",
    "three_level_derivatives",
    "apply_pulse",
    "free_evolve",
    "run_interferometer",
    "run_batch",
    "fold_phase",
    "unfold_phase",
]


class DegeneratePopulationError(RuntimeError):
    """Loss bookkeeping exceeded the ground population: 1 - |c_e|^2 - Q_tot <= 0."""

    def __init__(self, message: str, sample_index: Optional[int] = None):
        super().__init__(message)
        self.sample_index = sample_index


@dataclass(frozen=True)
class QuantumState:
    """Rotating-frame amplitudes, accumulated loss, and arm kinematics.

    ``x_g``/``v_g`` track the arm currently in the ground state and
    ``x_e``/``v_e`` the arm currently in the excited state; pi pulses
    exchange the arms and apply the photon recoil.
    """

    c_g: complex
    c_e: complex
    q_tot: float
    x_g: float
    x_e: float
    v_g: float
    v_e: float
    t: float

    @classmethod
    def initial(cls, x0: float = 0.0, v0: float = 0.0) -> "QuantumState":
        return cls(c_g=1.0 + 0.0j, c_e=0.0j, q_tot=0.0,
                   x_g=x0, x_e=x0, v_g=v0, v_e=v0, t=0.0)


def dkx_of(state: QuantumState, laser: LaserConfig) -> float:
    """Coupling phase difference k2 . x_e - k1 . x_g at the current positions."""
    return laser.k2 * state.x_e - laser.k1 * state.x_g


@dataclass(frozen=True)
class RunOutcome:
    """Final populations, accumulated loss, folded phase, and dev(a) of one run."""

    pop_e: float
    pop_g: float
    q_tot: float
    phase: float
    dev_a: float


def pulse_coefficients(laser: LaserConfig, species: AtomSpecies,
                       gamma_l: Optional[float] = None):
    """The four complex prefactors (A_gg, A_ge, A_ee, A_eg) of the dynamics."""
    gl = species.gamma_l if gamma_l is None else gamma_l
    half = 0.5 * gl
    d1 = 1j * laser.delta_single + half
    d2 = 1j * (laser.delta_single + laser.delta_two) + half
    o1, o2 = complex(laser.rabi1), complex(laser.rabi2)
    return (
        abs(o1) ** 2 / d1,
        o1 * np.conj(o2) / d2,
        abs(o2) ** 2 / d2,
        o2 * np.conj(o1) / d1,
    )


def amplitude_derivatives(state: QuantumState, laser: LaserConfig,
                          species: AtomSpecies, t_pulse: float) -> Tuple[complex, complex]:
    """Full right-hand sides for (c_g, c_e), AC transient included.

    ``t_pulse`` is the time since the pulse edge.  Total function: finite
    inputs give finite outputs for any parameter values.
    """
    a_gg, a_ge, a_ee, a_eg = pulse_coefficients(laser, species)
    gl = species.gamma_l
    delta = laser.delta_single
    delta2 = laser.delta_two
    dkx = dkx_of(state, laser)
    env = math.exp(-0.5 * gl * t_pulse)
    ph_g = np.exp(-1j * delta * t_pulse)
    ph_e = np.exp(-1j * (delta + delta2) * t_pulse)
    cross = np.exp(1j * (dkx + delta2 * t_pulse))
    dc_g = (a_gg * ph_g * state.c_g + a_ge * np.exp(1j * dkx) * ph_g * state.c_e) * env \
        - (a_gg * state.c_g + a_ge * cross * state.c_e)
    dc_e = (a_ee * ph_e * state.c_e + a_eg * np.exp(-1j * dkx) * ph_e * state.c_g) * env \
        - (a_ee * state.c_e + a_eg * np.conj(cross) * state.c_g)
    return complex(dc_g), complex(dc_e)


def intermediate_amplitude(state: QuantumState, laser: LaserConfig,
                           species: AtomSpecies, t_pulse: float) -> complex:
    """Eliminated intermediate-state amplitude c_i(t_pulse), zero at the pulse edge.

    Decaying transient minus instantaneous steady response; for
    gamma_l * t >> 1 only the quasi-steady part survives.
    """
    gl = species.gamma_l
    delta = laser.delta_single
    delta2 = laser.delta_two
    b1 = -1j * np.conj(complex(laser.rabi1)) / (1j * delta + 0.5 * gl)
    b2 = -1j * np.conj(complex(laser.rabi2)) / (1j * (delta + delta2) + 0.5 * gl)
    def particular(t):
        return (b1 * np.exp(1j * (laser.k1 * state.x_g + delta * t)) * state.c_g
                + b2 * np.exp(1j * (laser.k2 * state.x_e + (delta + delta2) * t)) * state.c_e)
    return complex(particular(t_pulse) - particular(0.0) * math.exp(-0.5 * gl * t_pulse))


def three_level_derivatives(y: np.ndarray, t: float, laser: LaserConfig,
                            species: AtomSpecies, x_g: float = 0.0,
                            x_e: float = 0.0) -> np.ndarray:
    """Pre-elimination rotating-frame three-level system, as a validation oracle.

    ``y = (c_g, c_e, c_i)``.  Resolving this requires steps small against
    1/Delta; it exists for cross-checking the eliminated dynamics, not
    for production runs.
    """
    delta = laser.delta_single
    delta2 = laser.delta_two
    o1, o2 = complex(laser.rabi1), complex(laser.rabi2)
    e1 = np.exp(1j * (laser.k1 * x_g + delta * t))
    e2 = np.exp(1j * (laser.k2 * x_e + (delta + delta2) * t))
    dcg = -1j * o1 * np.conj(e1) * y[2]
    dce = -1j * o2 * np.conj(e2) * y[2]
    dci = (-0.5 * species.gamma_l * y[2]
           - 1j * (np.conj(o1) * e1 * y[0] + np.conj(o2) * e2 * y[1]))
    return np.array([dcg, dce, dci], dtype=complex)


# ---------------------------------------------------------------------------
# pulse propagation (stationary part, vectorized over samples)
# ---------------------------------------------------------------------------

def _integrate_pulse(c_g, c_e, dkx, duration, laser, species, gamma_l, steps):
    """Propagate amplitudes through one rectangular pulse with frozen dkx.

    ``c_g``, ``c_e``, ``dkx`` may be scalars or (n,) arrays; returns the
    final amplitude arrays.
    """
    a_gg, a_ge, a_ee, a_eg = pulse_coefficients(laser, species, gamma_l=gamma_l)
    delta2 = laser.delta_two
    p_ge = a_ge * np.exp(1j * np.asarray(dkx))
    p_eg = a_eg * np.exp(-1j * np.asarray(dkx))
    y0 = np.stack([np.broadcast_to(np.asarray(c_g, dtype=complex), np.shape(dkx)),
                   np.broadcast_to(np.asarray(c_e, dtype=complex), np.shape(dkx))]) \
        if np.ndim(dkx) else np.array([c_g, c_e], dtype=complex)

    if delta2 == 0.0:
        def field(y, t):
            out = np.empty_like(y)
            out[0] = -(a_gg * y[0] + p_ge * y[1])
            out[1] = -(a_ee * y[1] + p_eg * y[0])
            return out
    else:
        def field(y, t):
            u = np.exp(1j * delta2 * t)
            out = np.empty_like(y)
            out[0] = -(a_gg * y[0] + (p_ge * u) * y[1])
            out[1] = -(a_ee * y[1] + (p_eg * np.conj(u)) * y[0])
            return out

    dt = duration / steps
    y = y0
    t = 0.0
    for _ in range(steps):
        y = integrators.rk4_step(y, t, dt, field)
        t += dt
    return y[0], y[1]


def _steps_for(kind: PulseKind, duration: float, t_pi: float, steps_per_pi: int) -> int:
    return max(8, int(round(steps_per_pi * duration / t_pi)))


def apply_pulse(state: QuantumState, kind: PulseKind, duration: float,
                laser: LaserConfig, species: AtomSpecies, accel: float = 0.0,
                recoil_sign: int = +1, dkx: Optional[float] = None,
                steps: Optional[int] = None) -> QuantumState:
    """Propagate one optical pulse: amplitudes, loss bookkeeping, kinematics.

    The loss increment is the analytic per-pulse Q evaluated on the entry
    amplitudes; the recoil kick (one +-hbar*k_eff/m velocity change) is
    applied when the pulse transfers population: a pi pulse exchanges the
    two arms, the first pi/2 splits the excited arm off the ground one.

    Parameters
    ----------
    dkx : float, optional
        Coupling phase to use for the whole pulse; defaults to the value
        at the entry positions.
    """
    if kind == PulseKind.FREE:
        raise ValueError("apply_pulse needs an optical segment; use free_evolve")
    if duration <= 0.0:
        raise ValueError("duration must be positive")
    if steps is None:
        steps = 2000 if kind == PulseKind.PI else 1000
    dkx_val = dkx_of(state, laser) if dkx is None else dkx

    c_g, c_e = _integrate_pulse(state.c_g, state.c_e, dkx_val, duration,
                                laser, species, species.gamma_l, steps)
    q_inc = float(analytical_q(state.c_g, state.c_e, laser, species, duration,
                               dkx=dkx_val))

    # Ballistic drift of both arms across the pulse window.
    x_g = state.x_g + state.v_g * duration + 0.5 * accel * duration**2
    x_e = state.x_e + state.v_e * duration + 0.5 * accel * duration**2
    v_g = state.v_g + accel * duration
    v_e = state.v_e + accel * duration

    v_r = HBAR * abs(laser.k_eff) / species.mass
    if kind == PulseKind.PI:
        x_g, x_e = x_e, x_g
        v_g, v_e = v_e - recoil_sign * v_r, v_g + recoil_sign * v_r
    elif state.x_g == state.x_e and state.v_g == state.v_e:
        # First beamsplitter: the excited arm separates with one recoil.
        v_e = v_e + recoil_sign * v_r

    return QuantumState(
        c_g=complex(c_g), c_e=complex(c_e), q_tot=state.q_tot + q_inc,
        x_g=x_g, x_e=x_e, v_g=v_g, v_e=v_e, t=state.t + duration,
    )


def free_evolve(state: QuantumState, duration: float, accel: float = 0.0) -> QuantumState:
    """Ballistic evolution with no optical coupling.

    Amplitudes are untouched (the rotating frame absorbs the bare
    splitting); positions and velocities advance under the true
    acceleration, each arm with its own velocity.
    """
    if duration < 0.0:
        raise ValueError("duration must be non-negative")
    if duration == 0.0:
        return state
    return replace(
        state,
        x_g=state.x_g + state.v_g * duration + 0.5 * accel * duration**2,
        x_e=state.x_e + state.v_e * duration + 0.5 * accel * duration**2,
        v_g=state.v_g + accel * duration,
        v_e=state.v_e + accel * duration,
        t=state.t + duration,
    )


def fold_phase(pop_e, q_tot):
    """Folded interferometer phase arctan(sqrt(X / (1 - X - Q_tot))) in [0, pi/2]."""
    pop_e = np.asarray(pop_e, dtype=float)
    denom = 1.0 - pop_e - np.asarray(q_tot, dtype=float)
    if np.any(denom <= 0.0):
        bad = int(np.argmax(denom <= 0.0)) if np.ndim(denom) else None
        raise DegeneratePopulationError(
            "1 - |c_e|^2 - Q_tot is not positive; loss bookkeeping exceeded "
            "the ground population", sample_index=bad,
        )
    out = np.arctan(np.sqrt(pop_e / denom))
    return out[()] if np.ndim(out) == 0 else out


def unfold_phase(phi_folded, phi_reference):
    """Resolve the arctangent branch nearest a co-sensor phase reference.

    The folded phase determines |tan(phi)|; the true phase lies in
    {j*pi + phi, j*pi - phi}.  Returns the member closest to
    ``phi_reference``.
    """
    phi = np.asarray(phi_folded, dtype=float)
    ref = np.asarray(phi_reference, dtype=float)
    j_plus = np.round((ref - phi) / np.pi)
    j_minus = np.round((ref + phi) / np.pi)
    cand_plus = j_plus * np.pi + phi
    cand_minus = j_minus * np.pi - phi
    out = np.where(np.abs(cand_plus - ref) <= np.abs(cand_minus - ref),
                   cand_plus, cand_minus)
    return out[()] if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# full interferometer runs
# ---------------------------------------------------------------------------

def _reference_dkx(cfg: SimulationConfig, accel: float) -> np.ndarray:
    """Pulse-edge coupling phases of the ideal mean trajectory.

    Walks the sequence kinematics for a single atom starting at the origin
    at rest, with the same recoil schedule, and records dkx at each
    optical pulse edge.  Subtracting these models the laser phase/chirp
    program steered by the co-sensor.
    """
    laser, species = cfg.laser, cfg.species
    v_r = HBAR * abs(laser.k_eff) / species.mass
    x_g = x_e = 0.0
    v_g = v_e = 0.0
    split = False
    phases = []
    for idx, seg, sign in _walk_segments(cfg):
        if seg.kind == PulseKind.FREE:
            x_g += v_g * seg.duration + 0.5 * accel * seg.duration**2
            x_e += v_e * seg.duration + 0.5 * accel * seg.duration**2
            v_g += accel * seg.duration
            v_e += accel * seg.duration
            continue
        phases.append(laser.k2 * x_e - laser.k1 * x_g)
        x_g += v_g * seg.duration + 0.5 * accel * seg.duration**2
        x_e += v_e * seg.duration + 0.5 * accel * seg.duration**2
        v_g += accel * seg.duration
        v_e += accel * seg.duration
        if seg.kind == PulseKind.PI:
            x_g, x_e = x_e, x_g
            v_g, v_e = v_e - sign * v_r, v_g + sign * v_r
        elif not split:
            v_e = v_e + sign * v_r
            split = True
    return np.array(phases)


def _walk_segments(cfg: SimulationConfig):
    """Yield (index, segment, recoil_sign) with signs alternating over optical pulses."""
    sign = cfg.recoil_sign_first
    for idx, seg in enumerate(cfg.sequence.segments):
        if seg.kind == PulseKind.FREE:
            yield idx, seg, 0
        else:
            yield idx, seg, sign
            sign = -sign


def run_batch(x0: np.ndarray, v0: np.ndarray, cfg: SimulationConfig,
              accel: float) -> list[RunOutcome]:
    """Run the full interferometer for a batch of atoms, elementwise.

    Every per-sample operation is elementwise, so results are independent
    of how the batch is chunked; aggregations downstream keep sample
    order.  Returns one :class:`RunOutcome` per atom.
    """
    laser, species = cfg.laser, cfg.species
    gamma_l = 0.0 if cfg.q_mode == QMode.ZERO else species.gamma_l
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    n = x0.shape[0]
    c_g = np.ones(n, dtype=complex)
    c_e = np.zeros(n, dtype=complex)
    q_tot = np.zeros(n)
    x_g = x0.copy()
    x_e = x0.copy()
    v_g = v0.copy()
    v_e = v0.copy()
    split = False
    v_r = HBAR * abs(laser.k_eff) / species.mass

    ref = _reference_dkx(cfg, accel) if cfg.compensate_reference else None
    last_optical_idx = max(idx for idx, seg, _ in _walk_segments(cfg)
                           if seg.kind != PulseKind.FREE)

    pulse_no = 0
    for idx, seg, sign in _walk_segments(cfg):
        tau = seg.duration
        if seg.kind == PulseKind.FREE:
            x_g += v_g * tau + 0.5 * accel * tau**2
            x_e += v_e * tau + 0.5 * accel * tau**2
            v_g += accel * tau
            v_e += accel * tau
            continue

        dkx = laser.k2 * x_e - laser.k1 * x_g
        if ref is not None:
            dkx = dkx - ref[pulse_no]
        if idx == last_optical_idx:
            dkx = dkx + cfg.phase_bias

        steps = _steps_for(seg.kind, tau, cfg.sequence.t_pi, cfg.steps_per_pi)
        if gamma_l > 0.0:
            q_tot = q_tot + analytical_q(c_g, c_e, laser, species, tau, dkx=dkx)
        c_g, c_e = _integrate_pulse(c_g, c_e, dkx, tau, laser, species,
                                    gamma_l, steps)

        x_g += v_g * tau + 0.5 * accel * tau**2
        x_e += v_e * tau + 0.5 * accel * tau**2
        v_g += accel * tau
        v_e += accel * tau
        if seg.kind == PulseKind.PI:
            x_g, x_e = x_e.copy(), x_g.copy()
            v_g, v_e = v_e - sign * v_r, v_g + sign * v_r
        elif not split:
            v_e = v_e + sign * v_r
            split = True
        pulse_no += 1

    pop_e = np.abs(c_e) ** 2
    pop_g = np.abs(c_g) ** 2
    phi = fold_phase(pop_e, q_tot)
    alpha = alpha_scale(cfg.sequence, laser.k_eff, laser.theta)
    if cfg.unfold_phase:
        phi = unfold_phase(phi, accel / alpha)
    dev = alpha * phi
    return [RunOutcome(pop_e=float(pop_e[i]), pop_g=float(pop_g[i]),
                       q_tot=float(q_tot[i]), phase=float(phi[i]),
                       dev_a=float(dev[i]))
            for i in range(n)]


def run_interferometer(sample, cfg: SimulationConfig, accel: float) -> RunOutcome:
    """Run one atom through the full sequence.

    ``sample`` is anything with ``x0``/``v0`` attributes or a ``(x0, v0)``
    pair.  Deterministic: identical inputs give bit-identical outcomes.
    """
    if hasattr(sample, "x0"):
        x0, v0 = sample.x0, sample.v0
    else:
        x0, v0 = sample
    return run_batch(np.array([x0]), np.array([v0]), cfg, accel)[0]

"""Domain types for atoms, lasers, and LMT pulse sequences.

Unit conventions
----------------
Everything internal is SI with *angular* frequencies (rad/s).  Published
parameter tables for this kind of sensor mix conventions, so constructors
and the config layer are explicit:

* Rabi frequencies and decay rates given as "MHz" table entries are
  angular rates (value x 1e6 rad/s).  With Omega1 = Omega2 = 2.12e8 rad/s
  and a single-photon detuning of 2*pi*9e9 rad/s, the two-photon pi time
  pi*Delta/(2*|Omega1*Omega2|) comes out at 1.98 us, matching the quoted
  2.00 us pulse length; no other reading reproduces it.
* Detunings given in GHz/kHz are cyclic and are multiplied by 2*pi.

Config files keep these conversions visible through unit-suffixed keys
(``delta_single_ghz``, ``rabi_mega_rad_s``, ...).
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Tuple

__all__ = [
    "HBAR",
    "K_BOLTZMANN",
    "AtomSpecies",
    "LaserConfig",
    "PulseKind",
    "Segment",
    "PulseSequence",
    "PulseCalibration",
    "QMode",
    "SimulationConfig",
    "build_sequence",
    "alpha_scale",
    "effective_two_photon_detuning",
    "calibrated_pi_time",
    "default_config",
]

HBAR = 1.054571817e-34  # J s
K_BOLTZMANN = 1.380649e-23  # J/K

TWO_PI = 2.0 * math.pi


class DegenerateGeometryError(ValueError):
    """The phase-to-acceleration scale factor is singular."""


@dataclass(frozen=True)
class AtomSpecies:
    """Physical constants of the atom.

    Parameters
    ----------
    mass : float
        Atomic mass in kg.
    wavelength : float
        Raman laser wavelength in m.
    gamma_total : float
        Total decay rate of the intermediate state, rad/s.
    gamma_l, gamma_g, gamma_e : float
        Branching rates into the loss, ground, and excited states, rad/s.
        They must sum to ``gamma_total``.
    hyperfine_splitting : float
        Ground-state hyperfine splitting, rad/s.
    """

    mass: float
    wavelength: float
    gamma_total: float
    gamma_l: float
    gamma_g: float
    gamma_e: float
    hyperfine_splitting: float

    def __post_init__(self):
        if self.mass <= 0.0:
            raise ValueError("mass must be positive")
        if self.wavelength <= 0.0:
            raise ValueError("wavelength must be positive")
        # gamma_total == 0 is the degenerate fully-closed species used as the
        # lossless reference limit in cross-method checks.
        if self.gamma_total < 0.0:
            raise ValueError("gamma_total must be non-negative")
        for name in ("gamma_l", "gamma_g", "gamma_e"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be non-negative")
        branch_sum = self.gamma_l + self.gamma_g + self.gamma_e
        if abs(branch_sum - self.gamma_total) > 1e-9 * max(self.gamma_total, 1.0):
            raise ValueError(
                f"branching rates sum to {branch_sum}, expected {self.gamma_total}"
            )

    @property
    def recoil_velocity(self) -> float:
        """Single two-photon recoil velocity hbar*k_eff/m, m/s (counter-propagating)."""
        k_eff = 2.0 * TWO_PI / self.wavelength
        return HBAR * k_eff / self.mass

    @classmethod
    def rubidium85(cls) -> "AtomSpecies":
        """Rb-85 on the D2 line, with all intermediate-state decay into the loss state."""
        gamma = 3.8117e7  # rad/s
        return cls(
            mass=1.419e-25,
            wavelength=780e-9,
            gamma_total=gamma,
            gamma_l=gamma,
            gamma_g=0.0,
            gamma_e=0.0,
            hyperfine_splitting=TWO_PI * 3.035732439e9,
        )


class Geometry(str, enum.Enum):
    COUNTER = "counter"
    CO = "co"


@dataclass(frozen=True)
class LaserConfig:
    """Raman beam pair: frequencies, Rabi rates, detunings, wave vectors.

    Wave vectors are stored as signed scalars along the sensitive axis;
    counter-propagating geometry means ``k2`` has the opposite sign of
    ``k1`` and ``k_eff = |k1| + |k2|``.
    """

    omega1: float
    omega2: float
    rabi1: complex
    rabi2: complex
    delta_single: float
    delta_two: float
    k1: float
    k2: float
    k_eff: float
    theta: float = 0.0
    geometry: Geometry = Geometry.COUNTER
    ac_stark: float = 0.0  # configured delta_AC contribution, rad/s

    def __post_init__(self):
        if self.geometry == Geometry.COUNTER:
            expected = abs(self.k1) + abs(self.k2)
            if abs(abs(self.k_eff) - expected) > 1e-9 * expected:
                raise ValueError(
                    f"counter-propagating geometry requires |k_eff| = |k1|+|k2|; "
                    f"got {self.k_eff} vs {expected}"
                )
        if self.weak_detuning:
            warnings.warn(
                "single-photon detuning is below 10x the Rabi frequency; "
                "adiabatic elimination degrades in this regime",
                stacklevel=2,
            )

    @property
    def weak_detuning(self) -> bool:
        """True when Delta < 10*max(|Omega1|, |Omega2|): elimination accuracy degrades."""
        return self.delta_single < 10.0 * max(abs(self.rabi1), abs(self.rabi2))

    @property
    def effective_rabi(self) -> float:
        """Two-photon Rabi rate 2|Omega1 Omega2|/Delta, rad/s."""
        return 2.0 * abs(self.rabi1 * self.rabi2) / self.delta_single

    @classmethod
    def for_species(
        cls,
        species: AtomSpecies,
        rabi: float = 2.12e8,
        delta_single: float = TWO_PI * 9e9,
        delta_two: float = 0.0,
        theta: float = 0.0,
        ac_stark: float = 0.0,
    ) -> "LaserConfig":
        """Counter-propagating pair at the species wavelength.

        ``omega1`` is the optical carrier; ``omega2`` sits one hyperfine
        splitting plus ``delta_two`` below so that the configured
        two-photon detuning is an input, not a derived quantity.
        """
        k = TWO_PI / species.wavelength
        c_light = 2.99792458e8
        omega1 = TWO_PI * c_light / species.wavelength
        omega2 = omega1 - species.hyperfine_splitting - delta_two
        return cls(
            omega1=omega1,
            omega2=omega2,
            rabi1=rabi,
            rabi2=rabi,
            delta_single=delta_single,
            delta_two=delta_two,
            k1=+k,
            k2=-k,
            k_eff=2.0 * k,
            theta=theta,
            geometry=Geometry.COUNTER,
            ac_stark=ac_stark,
        )


class PulseKind(str, enum.Enum):
    HALF_PI = "half_pi"
    PI = "pi"
    FREE = "free"


@dataclass(frozen=True)
class Segment:
    kind: PulseKind
    duration: float

    def __post_init__(self):
        if self.duration <= 0.0:
            raise ValueError("segment durations must be positive")


@dataclass(frozen=True)
class PulseSequence:
    """Ordered optical and free-evolution segments of one LMT run."""

    segments: Tuple[Segment, ...]
    n_r: int
    big_t: float
    tau_d: float
    t_pi: float
    t_half_pi: float

    @property
    def m_weight(self) -> int:
        """Loss bookkeeping weight m = 2*N_R (pi pulses count 1, pi/2 pulses 1/2)."""
        return 2 * self.n_r

    @property
    def pi_count(self) -> int:
        return sum(1 for s in self.segments if s.kind == PulseKind.PI)

    @property
    def wall_time(self) -> float:
        return sum(s.duration for s in self.segments)

    @property
    def optical_time(self) -> float:
        return sum(s.duration for s in self.segments if s.kind != PulseKind.FREE)

    def kinds(self) -> Tuple[PulseKind, ...]:
        return tuple(s.kind for s in self.segments)


def build_sequence(
    n_r: int, big_t: float, tau_d: float, t_pi: float, t_half_pi: float
) -> PulseSequence:
    """Lay out the palindromic LMT sequence for ``n_r`` central pi pulses.

    Layout (b = (n_r-1)/2 boost pulses on each side)::

        pi/2, gap, [pi, gap]*b, T, pi, [gap, pi]*(n_r-1), T, [gap, pi]*b, gap, pi/2

    There are exactly two long free-evolution segments of duration ``big_t``
    and ``2*n_r`` inter-pulse gaps of duration ``tau_d`` (omitted entirely
    for ``tau_d = 0``); the kind sequence reads the same in both directions.

    Raises
    ------
    ValueError
        If ``n_r`` is even or < 1, or any duration is non-positive
        (``tau_d`` may be zero).
    """
    if n_r < 1 or n_r % 2 == 0:
        raise ValueError(f"n_r must be a positive odd integer, got {n_r}")
    if tau_d < 0.0:
        raise ValueError(f"tau_d must be non-negative, got {tau_d}")
    for name, value in (("big_t", big_t), ("t_pi", t_pi), ("t_half_pi", t_half_pi)):
        if value <= 0.0:
            raise ValueError(f"{name} must be positive, got {value}")
    b = (n_r - 1) // 2
    half = Segment(PulseKind.HALF_PI, t_half_pi)
    pi = Segment(PulseKind.PI, t_pi)
    gap = [Segment(PulseKind.FREE, tau_d)] if tau_d > 0.0 else []
    free = Segment(PulseKind.FREE, big_t)

    segs = [half] + gap
    for _ in range(b):
        segs += [pi] + gap
    segs.append(free)
    segs.append(pi)
    for _ in range(n_r - 1):
        segs += gap + [pi]
    segs.append(free)
    for _ in range(b):
        segs += gap + [pi]
    segs += gap + [half]
    return PulseSequence(
        segments=tuple(segs), n_r=n_r, big_t=big_t, tau_d=tau_d,
        t_pi=t_pi, t_half_pi=t_half_pi,
    )


def alpha_scale(seq: PulseSequence, k_eff: float, theta: float = 0.0) -> float:
    """Phase-to-acceleration scale factor for the multi-pulse sequence.

    alpha = 1 / ((2 N_R T^2 |k_eff| - 2 (N_R+1) |k_eff| T tau_d) cos(theta)),
    in (m/s^2) per radian.  For N_R = 1 and tau_d -> 0 this reduces to the
    usual 1/(2 T^2 |k_eff|).
    """
    k = abs(k_eff)
    n_r = seq.n_r
    cos_theta = math.cos(theta)
    base = 2.0 * n_r * seq.big_t**2 * k - 2.0 * (n_r + 1) * k * seq.big_t * seq.tau_d
    denom = base * cos_theta
    if abs(cos_theta) < 1e-12 or denom == 0.0 or not math.isfinite(1.0 / denom):
        raise DegenerateGeometryError(
            f"alpha denominator vanished (cos(theta)={cos_theta}, N_R={n_r})"
        )
    return 1.0 / denom


def effective_two_photon_detuning(
    laser: LaserConfig, species: AtomSpecies, velocity: float = 0.0
) -> float:
    """Residual two-photon detuning for an atom moving along k_eff.

    delta = (omega1 - omega2) - (omega_HFS - k_eff*v + hbar*k_eff^2/(2m)) + delta_AC,
    returned in rad/s.
    """
    recoil = HBAR * laser.k_eff**2 / (2.0 * species.mass)
    return (
        (laser.omega1 - laser.omega2)
        - (species.hyperfine_splitting - laser.k_eff * velocity + recoil)
        + laser.ac_stark
    )


def calibrated_pi_time(laser: LaserConfig) -> float:
    """Pi-pulse duration for unit pulse area: pi*Delta/(2*|Omega1*Omega2|)."""
    return math.pi * laser.delta_single / (2.0 * abs(laser.rabi1 * laser.rabi2))


class PulseCalibration(str, enum.Enum):
    TABLE = "table"          # fixed published pulse lengths regardless of detuning
    CALIBRATED = "calibrated"  # t_pi rescaled so the pulse area stays pi


class QMode(str, enum.Enum):
    ZERO = "zero"          # lossless reference: spontaneous decay switched off
    CONSTANT = "constant"  # loss present, treated as a deterministic shift
    RANDOM = "random"      # loss present and treated as a random variable


@dataclass(frozen=True)
class SimulationConfig:
    """Everything one ensemble run needs.

    Beyond the physical parameters this also pins the measurement-protocol
    conventions that published analyses leave implicit:

    * ``compensate_reference``: the pulse phases subtract the phase history
      of the ideal mean trajectory (laser chirp / phase steering tracking
      the co-sensor), so the ideal lossless run sits at the dark fringe.
    * ``phase_bias``: deliberate extra phase on the final recombining
      pulse, giving a fixed operating point on the fringe.
    * ``unfold_phase``: optionally resolve the arctangent branch with the
      co-sensor reading instead of reporting the folded [0, pi/2] value.
    """

    species: AtomSpecies
    laser: LaserConfig
    sequence: PulseSequence
    a_true: float
    mot_temperature: float
    n_samples: int
    epsilon_m: float
    rng_seed: int
    pulse_calibration: PulseCalibration = PulseCalibration.CALIBRATED
    q_mode: QMode = QMode.RANDOM
    cloud_sigma_x: float = 1e-3
    compensate_reference: bool = True
    phase_bias: float = 0.0
    unfold_phase: bool = False
    epsilon_deterministic: bool = False
    cov_mode: str = "appendix"         # "appendix" | "main_text"
    loss_time_basis: str = "sequence"  # "sequence" | "pulse"
    atom_number: float = 1.0        # per-atom normalization of var(Q); 1 = printed form
    steps_per_pi: int = 2000
    recoil_sign_first: int = +1

    def __post_init__(self):
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2 (variance needs two samples)")
        if not (0.0 <= self.epsilon_m < 1.0):
            raise ValueError("epsilon_m must lie in [0, 1)")
        if self.mot_temperature < 0.0:
            raise ValueError("mot_temperature must be non-negative")
        if self.a_true < 0.0:
            raise ValueError("a_true must be non-negative")
        if self.steps_per_pi < 8:
            raise ValueError("steps_per_pi too small to resolve a pulse")

    @property
    def alpha(self) -> float:
        return alpha_scale(self.sequence, self.laser.k_eff, self.laser.theta)

    def with_pulse_count(self, n_r: int) -> "SimulationConfig":
        seq = build_sequence(
            n_r, self.sequence.big_t, self.sequence.tau_d,
            self.sequence.t_pi, self.sequence.t_half_pi,
        )
        return replace(self, sequence=seq)

    def with_detunings(self, delta_single=None, delta_two=None) -> "SimulationConfig":
        """New config at different detunings, recalibrating t_pi when configured."""
        ds = self.laser.delta_single if delta_single is None else delta_single
        dt = self.laser.delta_two if delta_two is None else delta_two
        laser = replace(self.laser, delta_single=ds, delta_two=dt,
                        omega2=self.laser.omega1 - self.species.hyperfine_splitting - dt)
        cfg = replace(self, laser=laser)
        if self.pulse_calibration == PulseCalibration.CALIBRATED:
            t_pi = calibrated_pi_time(laser)
            seq = build_sequence(self.sequence.n_r, self.sequence.big_t,
                                 self.sequence.tau_d, t_pi, 0.5 * t_pi)
            cfg = replace(cfg, sequence=seq)
        return cfg


def default_config(
    n_r: int = 1,
    delta_single: float = TWO_PI * 9e9,
    delta_two: float = 0.0,
    epsilon_m: float = 0.02,
    n_samples: int = 200,
    rng_seed: int = 20240901,
    pulse_calibration: PulseCalibration = PulseCalibration.CALIBRATED,
    **overrides,
) -> SimulationConfig:
    """Rb-85 configuration with the published system parameters.

    Free evolution 100 ms, pulse gap 150 us, pi time 2.00 us (or the
    calibrated equivalent), Rabi rate 2.12e8 rad/s, MOT at 2 uK, and a
    true acceleration deviation of 1.85e-5 m/s^2.
    """
    species = AtomSpecies.rubidium85()
    laser = LaserConfig.for_species(
        species, delta_single=delta_single, delta_two=delta_two,
        theta=overrides.pop("theta", 0.0),
    )
    if pulse_calibration == PulseCalibration.CALIBRATED:
        t_pi = calibrated_pi_time(laser)
    else:
        t_pi = 2.00e-6
    sequence = build_sequence(n_r, 100e-3, 150e-6, t_pi, 0.5 * t_pi)
    kwargs = dict(
        a_true=1.85e-5,
        mot_temperature=2e-6,
        n_samples=n_samples,
        epsilon_m=epsilon_m,
        rng_seed=rng_seed,
        pulse_calibration=pulse_calibration,
    )
    kwargs.update(overrides)
    return SimulationConfig(species=species, laser=laser, sequence=sequence, **kwargs)

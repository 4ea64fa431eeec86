"""Full 3x3 density-matrix evolution: the correctness oracle.

Three forms of the master-equation dynamics over the basis (g, e, i):

* a dimensionless closed system (total decay split equally between the
  two clock states, time in units of 1/Gamma),
* the dimensionful open system with separate branching rates and pure
  loss out of the intermediate state (the production oracle), and
* the adiabatically reduced 2x2 dynamics obtained by substituting the
  steady-state optical coherences.

The open form resolves the bare detuning, so integrating it costs steps
of order Delta * t; it exists to validate the eliminated amplitude
engine, not to replace it.
"""

from __future__ import annotations

import math
from typing import Optional, Tuple

import numpy as np

from . import integrators
from .dynamics import _integrate_pulse
from .model import AtomSpecies, LaserConfig, PulseKind, SimulationConfig
from .stats import analytical_q

__all__ = [
    "hermiticity_defect",
    "pure_state_density",
    "rho_derivatives_closed",
    "rho_derivatives_open",
    "steady_state_coherences",
    "rho_adiabatic_derivatives",
    "integrate_open",
    "open_superoperator",
    "propagate_open_exact",
    "oracle_compare",
]

G, E, I = 0, 1, 2  # basis indices


def pure_state_density(c_g: complex, c_e: complex, c_i: complex = 0.0j) -> np.ndarray:
    """rho = |psi><psi| for amplitudes (c_g, c_e, c_i)."""
    psi = np.array([c_g, c_e, c_i], dtype=complex)
    return np.outer(psi, psi.conj())


def hermiticity_defect(rho: np.ndarray) -> float:
    """max |rho - rho^dagger| over entries (0 for exactly Hermitian input)."""
    rho = np.asarray(rho)
    return float(np.max(np.abs(rho - np.swapaxes(rho, -1, -2).conj())))


def _assemble(d_gg, d_ge, d_gi, d_ee, d_ei, d_eg, d_ii, like):
    out = np.empty_like(like)
    out[..., G, G] = d_gg
    out[..., G, E] = d_ge
    out[..., G, I] = d_gi
    out[..., E, G] = d_eg
    out[..., E, E] = d_ee
    out[..., E, I] = d_ei
    out[..., I, G] = np.conj(d_gi)
    out[..., I, E] = np.conj(d_ei)
    out[..., I, I] = d_ii
    return out


def rho_derivatives_closed(rho: np.ndarray, omega1_t: complex, omega2_t: complex,
                           delta_t: float, delta_r_t: float,
                           gamma_l_t: float = 0.0) -> np.ndarray:
    """Dimensionless closed-system right-hand side, d(rho)/d(tau) with tau = Gamma t.

    ``omega1_t``/``omega2_t`` are Rabi rates over Gamma, ``delta_t`` the
    single-photon detuning over Gamma, and ``delta_r_t`` the Raman
    detuning omega_eg - (omega1 - omega2) over Gamma.  The intermediate
    state refills the two clock states in equal halves, so the trace
    derivative vanishes identically; a nonzero ``gamma_l_t`` adds the
    open-system leak -gamma_l_t * rho_ii to the intermediate population.
    """
    rho = np.asarray(rho, dtype=complex)
    w1, w2 = complex(omega1_t), complex(omega2_t)
    r_gg = rho[..., G, G]
    r_ge = rho[..., G, E]
    r_gi = rho[..., G, I]
    r_eg = rho[..., E, G]
    r_ee = rho[..., E, E]
    r_ei = rho[..., E, I]
    r_ig = rho[..., I, G]
    r_ie = rho[..., I, E]
    r_ii = rho[..., I, I]

    d_gg = w1 * r_gi + np.conj(w1) * r_ig + 0.5 * r_ii
    d_gi = (1j * delta_t * r_gi + np.conj(w1) * (r_ii - r_gg)
            - np.conj(w2) * r_ge - 0.5 * r_gi)
    d_ee = np.conj(w2) * r_ie + w2 * r_ei + 0.5 * r_ii
    d_ei = (1j * (delta_t - delta_r_t) * r_ei - np.conj(w1) * r_eg
            - np.conj(w2) * (r_ii - r_ee) - 0.5 * r_ei)
    d_eg = 1j * delta_r_t * r_eg + np.conj(w1) * np.conj(r_ie) + w2 * r_ig
    d_ii = -d_gg - d_ee - gamma_l_t * r_ii
    return _assemble(d_gg, np.conj(d_eg), d_gi, d_ee, d_ei, d_eg, d_ii, rho)


def open_hamiltonian(laser: LaserConfig, species: AtomSpecies,
                     x_g: float = 0.0, x_e: float = 0.0) -> np.ndarray:
    """Rotating-frame Hamiltonian over (g, e, i), in angular-rate units.

    H = [[0, 0, Omega1 e^{-i k1 x_g}], [0, -delta, Omega2 e^{-i k2 x_e}],
         [h.c., h.c., Delta]].
    """
    o1 = complex(laser.rabi1) * np.exp(-1j * laser.k1 * x_g)
    o2 = complex(laser.rabi2) * np.exp(-1j * laser.k2 * x_e)
    return np.array([
        [0.0, 0.0, o1],
        [0.0, -laser.delta_two, o2],
        [np.conj(o1), np.conj(o2), laser.delta_single],
    ], dtype=complex)


def rho_derivatives_open(rho: np.ndarray, laser: LaserConfig, species: AtomSpecies,
                         x_g: float = 0.0, x_e: float = 0.0) -> np.ndarray:
    """Open-system right-hand side with spontaneous branching and pure loss.

    Componentwise this reads (E1 = e^{i k1 x_g}, E2 = e^{i k2 x_e}):

        d rho_gg = i O1* E1 rho_gi - i O1 E1* rho_ig + gamma_g rho_ii
        d rho_ee = i O2* E2 rho_ei - i O2 E2* rho_ie + gamma_e rho_ii
        d rho_ge = -i delta rho_ge - i O1 E1* rho_ie + i O2* E2 rho_gi
        d rho_gi = i Delta rho_gi - i O1 E1* (rho_ii - rho_gg)
                   + i O2 E2* rho_ge - (Gamma/2) rho_gi
        d rho_ei = i (Delta+delta) rho_ei - i O2 E2* (rho_ii - rho_ee)
                   + i O1 E1* rho_eg - (Gamma/2) rho_ei
        d rho_ii = -(optical parts) - Gamma rho_ii

    so d(trace)/dt = -gamma_l rho_ii <= 0.  Implemented as the equivalent
    commutator-plus-dissipator matrix form, which is complex-linear in
    rho and accepts batched matrices with shape (..., 3, 3).
    """
    rho = np.asarray(rho, dtype=complex)
    h = open_hamiltonian(laser, species, x_g, x_e)
    return _rho_rhs_open(rho, h, species.gamma_g, species.gamma_e,
                         species.gamma_total)


def _rho_rhs_open(rho, h, gamma_g, gamma_e, gamma) -> np.ndarray:
    """Liouvillian: -i[H, rho] + branching refeed - (Gamma/2){|i><i|, rho}."""
    out = -1j * (h @ rho - rho @ h)
    half = 0.5 * np.asarray(gamma)
    half_col = half[..., None] if half.ndim else half
    out[..., :, I] -= half_col * rho[..., :, I]
    out[..., I, :] -= half_col * rho[..., I, :]
    out[..., G, G] += gamma_g * rho[..., I, I]
    out[..., E, E] += gamma_e * rho[..., I, I]
    return out


def steady_state_coherences(rho: np.ndarray, laser: LaserConfig,
                            species: AtomSpecies, x_g: float = 0.0,
                            x_e: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """Steady-state optical coherences with the intermediate population pumped out.

    rho_gi^SS = i (Omega1 e^{-i k1 x_g} rho_gg + Omega2 e^{-i k2 x_e} rho_ge)
                / (Gamma/2 - i Delta)
    rho_ei^SS = i (Omega2 e^{-i k2 x_e} rho_ee + Omega1 e^{-i k1 x_g} rho_eg)
                / (Gamma/2 - i (Delta + delta))
    """
    rho = np.asarray(rho, dtype=complex)
    o1, o2 = complex(laser.rabi1), complex(laser.rabi2)
    e1c = np.exp(-1j * laser.k1 * x_g)
    e2c = np.exp(-1j * laser.k2 * x_e)
    gamma = species.gamma_total
    den_g = 0.5 * gamma - 1j * laser.delta_single
    den_e = 0.5 * gamma - 1j * (laser.delta_single + laser.delta_two)
    rho_gi = 1j * (o1 * e1c * rho[..., G, G] + o2 * e2c * rho[..., G, E]) / den_g
    rho_ei = 1j * (o2 * e2c * rho[..., E, E] + o1 * e1c * rho[..., E, G]) / den_e
    return rho_gi, rho_ei


def rho_adiabatic_derivatives(reduced: Tuple[complex, complex, complex],
                              laser: LaserConfig, species: AtomSpecies,
                              x_g: float = 0.0, x_e: float = 0.0):
    """Reduced (rho_gg, rho_ge, rho_ee) dynamics using steady-state coherences.

    Substitutes the steady-state rho_gi and rho_ei (with rho_ii -> 0)
    into the exact population and clock-coherence equations; returns
    (d rho_gg, d rho_ge, d rho_ee).
    """
    r_gg, r_ge, r_ee = (complex(reduced[0]), complex(reduced[1]), complex(reduced[2]))
    if (1.0 - r_gg.real - r_ee.real) < -1e-6:
        raise ValueError("reduced populations exceed unity beyond tolerance")
    rho = np.zeros((3, 3), dtype=complex)
    rho[G, G] = r_gg
    rho[G, E] = r_ge
    rho[E, G] = np.conj(r_ge)
    rho[E, E] = r_ee
    rho_gi, rho_ei = steady_state_coherences(rho, laser, species, x_g, x_e)
    rho[G, I] = rho_gi
    rho[I, G] = np.conj(rho_gi)
    rho[E, I] = rho_ei
    rho[I, E] = np.conj(rho_ei)
    d = rho_derivatives_open(rho, laser, species, x_g, x_e)
    return d[G, G], d[G, E], d[E, E]


def integrate_open(rho0: np.ndarray, duration, laser: LaserConfig,
                   species: AtomSpecies, x_g: float = 0.0, x_e: float = 0.0,
                   rad_per_step: float = 0.2, n_steps: Optional[int] = None):
    """Propagate the open-system density matrix for one pulse window.

    The step resolves the single-photon detuning: by default
    dt = rad_per_step / (|Delta| + |delta| + Gamma).  Batched inputs are
    supported with per-element durations (equal step counts, scaled dt).
    """
    rho = np.asarray(rho0, dtype=complex)
    duration = np.asarray(duration, dtype=float)
    rate = abs(laser.delta_single) + abs(laser.delta_two) + species.gamma_total
    if n_steps is None:
        n_steps = int(np.ceil(float(np.max(duration)) * rate / rad_per_step))
        n_steps = max(n_steps, 16)
    dt = duration / n_steps
    if dt.ndim:
        dt = dt.reshape(dt.shape + (1, 1))

    def field(y, t):
        return rho_derivatives_open(y, laser, species, x_g, x_e)

    t = 0.0
    for _ in range(n_steps):
        rho = integrators.rk4_step(rho, t, dt, field)
        t += float(np.min(dt))
    return rho


def open_superoperator(laser: LaserConfig, species: AtomSpecies,
                       x_g: float = 0.0, x_e: float = 0.0) -> np.ndarray:
    """9x9 generator L with vec(d rho/dt) = L vec(rho).

    The open-system right-hand side is linear in rho, so the generator is
    assembled by applying :func:`rho_derivatives_open` to the nine basis
    matrices.  ``expm(L t)`` then propagates a pulse window exactly,
    which makes the oracle free of step error.
    """
    basis = np.zeros((9, 3, 3), dtype=complex)
    for k in range(9):
        basis[k, k // 3, k % 3] = 1.0
    cols = rho_derivatives_open(basis, laser, species, x_g, x_e)
    return cols.reshape(9, 9).T


def propagate_open_exact(rho0: np.ndarray, duration: float, laser: LaserConfig,
                         species: AtomSpecies, x_g: float = 0.0,
                         x_e: float = 0.0) -> np.ndarray:
    """Exact one-pulse propagation of the open system via the matrix exponential."""
    from scipy.linalg import expm

    lmat = open_superoperator(laser, species, x_g, x_e)
    vec = np.asarray(rho0, dtype=complex).reshape(9)
    return (expm(lmat * duration) @ vec).reshape(3, 3)


def oracle_compare(cfg: SimulationConfig, kind: PulseKind = PulseKind.PI,
                   c_g0: complex = 1.0 + 0.0j, c_e0: complex = 0.0j) -> float:
    """Maximum population discrepancy between the two methods over one pulse.

    Runs the eliminated amplitude engine and the full open-system density
    matrix from the same pure state through one pulse, and returns

        max(|rho_gg - |c_g|^2|, |rho_ee - |c_e|^2|, |(1 - tr rho) - Q|).
    """
    if kind == PulseKind.FREE:
        raise ValueError("oracle_compare needs an optical pulse")
    laser, species = cfg.laser, cfg.species
    duration = cfg.sequence.t_pi if kind == PulseKind.PI else cfg.sequence.t_half_pi
    steps = cfg.steps_per_pi if kind == PulseKind.PI else max(8, cfg.steps_per_pi // 2)

    c_g, c_e = _integrate_pulse(c_g0, c_e0, 0.0, duration, laser, species,
                                species.gamma_l, steps)
    q = float(analytical_q(c_g0, c_e0, laser, species, duration, dkx=0.0))

    rho = propagate_open_exact(pure_state_density(c_g0, c_e0), duration,
                               laser, species)
    loss = 1.0 - float(np.trace(rho).real)
    return float(max(
        abs(rho[G, G].real - abs(c_g) ** 2),
        abs(rho[E, E].real - abs(c_e) ** 2),
        abs(loss - q),
    ))

"""Seeded Monte-Carlo sampling of the atom cloud and ensemble aggregation.

An ensemble run draws initial positions and velocities for the cloud,
runs every atom through the interferometer (elementwise, so any parallel
chunking reproduces the same bits), perturbs the excited-state
populations with the detection-error model, and reduces everything into
population statistics and an error budget.

Randomness policy: the atom draw and the measurement draw come from
separate child streams of the configured seed, and the measurement draw
uses fixed standard-normal variates scaled by ``epsilon_m * pop_e``.
Sweeps over the measurement error therefore share their dynamics *and*
their noise realizations (common random numbers), which keeps
minimum-location comparisons across detection uncertainties free of
uncorrelated sampling jitter.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .dynamics import RunOutcome, fold_phase, run_batch, unfold_phase
from .model import (
    K_BOLTZMANN,
    AtomSpecies,
    QMode,
    SimulationConfig,
)
from .stats import (
    ErrorBudget,
    PopulationStats,
    accel_error_budget,
    covariance_ce_q,
    variance_q,
)

__all__ = [
    "AtomSample",
    "EnsembleResult",
    "sample_atoms",
    "apply_measurement_error",
    "simulate_outcomes",
    "reduce_outcomes",
    "run_ensemble",
    "config_fingerprint",
]


@dataclass(frozen=True)
class AtomSample:
    """Initial kinematics of one atom along the sensitive axis."""

    x0: float
    v0: float


@dataclass(frozen=True)
class EnsembleResult:
    """Everything one parameter point produced."""

    outcomes: Tuple[RunOutcome, ...]
    measured_pop_e: Tuple[float, ...]
    measured_dev_a: Tuple[float, ...]
    stats: PopulationStats
    budget: ErrorBudget
    fingerprint: str
    rng_seed: int


def _atom_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0,)))


def _measurement_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(1,)))


def sample_atoms(n: int, seed: int, mot_temperature: float,
                 species: AtomSpecies, cloud_sigma_x: float = 1e-3) -> List[AtomSample]:
    """Draw the thermal cloud: zero-mean normal positions and velocities.

    The velocity spread along the beam axis is sqrt(k_B T / m); positions
    spread with ``cloud_sigma_x``.  Deterministic per seed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = _atom_rng(seed)
    sigma_v = np.sqrt(K_BOLTZMANN * mot_temperature / species.mass)
    x = rng.normal(0.0, cloud_sigma_x, size=n)
    v = rng.normal(0.0, 1.0, size=n) * sigma_v
    return [AtomSample(float(xi), float(vi)) for xi, vi in zip(x, v)]


def apply_measurement_error(pop_e, epsilon_m: float, rng,
                            deterministic: bool = False):
    """Perturb a measured excited-state population.

    Default model: zero-mean multiplicative noise with standard deviation
    ``epsilon_m * pop_e``, clamped to [0, 1].  The alternative
    deterministic mode models the error as a fixed detection loss,
    ``pop_e * (1 - epsilon_m)``.

    ``rng`` may be a Generator or a pre-drawn array of standard-normal
    variates matching ``pop_e`` (used by ensemble reductions so different
    epsilon values share noise realizations).
    """
    pop = np.asarray(pop_e, dtype=float)
    if np.any((pop < 0.0) | (pop > 1.0)):
        raise ValueError("pop_e must lie in [0, 1]")
    if not (0.0 <= epsilon_m < 1.0):
        raise ValueError("epsilon_m must lie in [0, 1)")
    if deterministic:
        out = pop * (1.0 - epsilon_m)
    else:
        g = rng if isinstance(rng, np.ndarray) else rng.standard_normal(pop.shape)
        out = np.clip(pop * (1.0 + epsilon_m * g), 0.0, 1.0)
    return out[()] if np.ndim(out) == 0 else out


def config_fingerprint(cfg: SimulationConfig, accel: float) -> str:
    """Stable hash of the physical configuration for result provenance."""
    payload = {
        "mass": cfg.species.mass,
        "wavelength": cfg.species.wavelength,
        "gamma": [cfg.species.gamma_total, cfg.species.gamma_l,
                  cfg.species.gamma_g, cfg.species.gamma_e],
        "hfs": cfg.species.hyperfine_splitting,
        "rabi": [abs(complex(cfg.laser.rabi1)), abs(complex(cfg.laser.rabi2))],
        "delta_single": cfg.laser.delta_single,
        "delta_two": cfg.laser.delta_two,
        "k_eff": cfg.laser.k_eff,
        "theta": cfg.laser.theta,
        "n_r": cfg.sequence.n_r,
        "big_t": cfg.sequence.big_t,
        "tau_d": cfg.sequence.tau_d,
        "t_pi": cfg.sequence.t_pi,
        "a_true": cfg.a_true,
        "mot_temperature": cfg.mot_temperature,
        "n_samples": cfg.n_samples,
        "epsilon_m": cfg.epsilon_m,
        "q_mode": cfg.q_mode.value,
        "pulse_calibration": cfg.pulse_calibration.value,
        "phase_bias": cfg.phase_bias,
        "compensate": cfg.compensate_reference,
        "unfold": cfg.unfold_phase,
        "cov_mode": cfg.cov_mode,
        "loss_time_basis": cfg.loss_time_basis,
        "atom_number": cfg.atom_number,
        "accel": accel,
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def simulate_outcomes(cfg: SimulationConfig, accel: float) -> List[RunOutcome]:
    """Dynamics-only part of an ensemble: sample the cloud and run every atom.

    Exposed separately so sweeps over the detection error can reuse one
    set of interferometer runs.
    """
    samples = sample_atoms(cfg.n_samples, cfg.rng_seed, cfg.mot_temperature,
                           cfg.species, cfg.cloud_sigma_x)
    x0 = np.array([s.x0 for s in samples])
    v0 = np.array([s.v0 for s in samples])
    return run_batch(x0, v0, cfg, accel)


def _loss_basis_time(cfg: SimulationConfig) -> float:
    if cfg.loss_time_basis == "pulse":
        return cfg.sequence.t_pi
    if cfg.loss_time_basis == "sequence":
        return cfg.sequence.wall_time
    raise ValueError(f"unknown loss_time_basis {cfg.loss_time_basis!r}")


def reduce_outcomes(outcomes: Sequence[RunOutcome], cfg: SimulationConfig,
                    accel: float, epsilon_m: Optional[float] = None) -> EnsembleResult:
    """Apply the detection-error model and aggregate one parameter point.

    The measured populations re-enter the phase extraction so the dev(a)
    draws carry detection noise; the loss fluctuation moments come from
    the closed-form variance and covariance at the ensemble-mean per-pulse
    loss, scaled by the configured time basis and atom-number
    normalization.
    """
    eps = cfg.epsilon_m if epsilon_m is None else epsilon_m
    pop = np.array([o.pop_e for o in outcomes])
    q_tot = np.array([o.q_tot for o in outcomes])
    n = len(outcomes)
    g = _measurement_rng(cfg.rng_seed).standard_normal(n)
    measured = apply_measurement_error(pop, eps, g,
                                       deterministic=cfg.epsilon_deterministic)

    alpha = cfg.alpha
    phi = fold_phase(measured, q_tot)
    if cfg.unfold_phase:
        phi = unfold_phase(phi, accel / alpha)
    devs = alpha * phi

    mean_x = float(measured.mean())
    var_x = float(measured.var(ddof=1))
    mean_q = float(q_tot.mean())

    if cfg.q_mode == QMode.RANDOM and cfg.species.gamma_l > 0.0 and mean_q > 0.0:
        m = cfg.sequence.m_weight
        t_basis = _loss_basis_time(cfg)
        q_bar = mean_q / m
        var_q = m**2 * float(variance_q(q_bar, cfg.species.gamma_l, t_basis))
        var_q /= cfg.atom_number
        cov = float(covariance_ce_q(q_bar, m, cfg.species.gamma_l, t_basis,
                                    mode=cfg.cov_mode)) / cfg.atom_number
        bound = np.sqrt(var_x * var_q)
        cov = float(np.clip(cov, -bound, bound))
    else:
        var_q = 0.0
        cov = 0.0

    stats = PopulationStats(mean_pop_e=mean_x, var_pop_e=var_x, mean_q=mean_q,
                            var_q=var_q, cov_eq=cov, n=n, q_mode=cfg.q_mode)
    budget = accel_error_budget(stats, alpha, cfg.a_true, devs)
    return EnsembleResult(
        outcomes=tuple(outcomes),
        measured_pop_e=tuple(float(x) for x in measured),
        measured_dev_a=tuple(float(d) for d in devs),
        stats=stats,
        budget=budget,
        fingerprint=config_fingerprint(cfg, accel),
        rng_seed=cfg.rng_seed,
    )


def run_ensemble(cfg: SimulationConfig, accel: float) -> EnsembleResult:
    """Sample, run, measure, and aggregate one parameter point.

    Fully reproducible from (cfg, seed): per-sample randomness derives
    from child streams of the seed and all reductions keep sample order,
    so results are bit-identical under any execution schedule.

    Raises
    ------
    DegeneratePopulationError, DegenerateDenominatorError
        Propagated from the phase extraction and the ratio moments, with
        the offending sample index attached where applicable.
    """
    outcomes = simulate_outcomes(cfg, accel)
    return reduce_outcomes(outcomes, cfg, accel)

"""Closed-form loss statistics and the acceleration error figure of merit.

The measurement chain is: per-pulse quantum-information loss Q, its
variance and covariance with the excited-state population, the first two
moments of the population ratio R1 = X/Y with X = |c_e|^2 and
Y = 1 - |c_e|^2 - Q_tot, the linearized arctangent, and finally

    FOM = (a_true - <dev(a)>)^2 + var(dev(a)),

a DC offset plus an AC fluctuation term.  The ratio and phase formulas are
first-order series expansions and are implemented exactly as printed,
including the constant intercept term in the phase variance.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .model import AtomSpecies, LaserConfig, QMode

__all__ = [
    "LossOverflowError",
    "ModelViolationError",
    "DegenerateDenominatorError",
    "PopulationStats",
    "ErrorBudget",
    "analytical_q",
    "variance_q",
    "covariance_ce_q",
    "ratio_moments",
    "phase_variance",
    "accel_error_budget",
    "accel_variance_poisson",
]


class LossOverflowError(ValueError):
    """Analytic Q reached 1: pulse too long or detuning too small for this model."""


class ModelViolationError(ValueError):
    """Inputs outside the operator-picture validity range (Q > gamma_l * t)."""


class DegenerateDenominatorError(ValueError):
    """Mean ratio denominator <Y> is not positive."""


class LinearizationSingularityError(ValueError):
    """tan terms of the Poisson variance are evaluated at a singular point."""


def analytical_q(c_g, c_e, laser: LaserConfig, species: AtomSpecies,
                 t_tot: float, dkx: float = 0.0):
    """Quantum-information loss of one pulse, from its entry amplitudes.

    Q = gamma_l |Omega1|^2 t_tot [ |c_g|^2/(Delta^2 + (gamma_l/2)^2)
        + |c_e|^2/((Delta+delta)^2 + (gamma_l/2)^2)
        + ( c_g c_e* e^{i dkx} / ((-i Delta + gamma_l/2)(i (Delta+delta) + gamma_l/2)) + c.c. ) ]

    Parameters accept scalars or broadcastable arrays.  Small negative
    excursions of the cross term (< 1e-12) are clipped to zero.

    Raises
    ------
    LossOverflowError
        If Q >= 1 anywhere.
    """
    gl = species.gamma_l
    if gl == 0.0:
        shape = np.broadcast(np.asarray(c_g), np.asarray(c_e), np.asarray(dkx)).shape
        return np.zeros(shape)[()] if shape == () else np.zeros(shape)
    delta = laser.delta_single
    delta2 = laser.delta_two
    if delta < 10.0 * gl:
        warnings.warn("analytic Q assumes Delta >> gamma_l; accuracy degrades here",
                      stacklevel=2)
    c_g = np.asarray(c_g, dtype=complex)
    c_e = np.asarray(c_e, dtype=complex)
    half = 0.5 * gl
    d1 = delta**2 + half**2
    d2 = (delta + delta2) ** 2 + half**2
    cross_den = (-1j * delta + half) * (1j * (delta + delta2) + half)
    cross = c_g * np.conj(c_e) * np.exp(1j * np.asarray(dkx)) / cross_den
    bracket = (np.abs(c_g) ** 2 / d1 + np.abs(c_e) ** 2 / d2 + 2.0 * cross.real)
    q = gl * abs(laser.rabi1) ** 2 * t_tot * bracket
    q = np.where((q < 0.0) & (q > -1e-12), 0.0, q)
    if np.any(q < 0.0):
        raise ValueError("analytic Q went negative beyond numerical tolerance")
    if np.any(q >= 1.0):
        raise LossOverflowError(
            "analytic Q reached 1; the pulse is too long or the detuning too small"
        )
    return q[()] if np.ndim(q) == 0 else q


def variance_q(q, gamma_l: float, t_tot: float):
    """Variance of the per-pulse loss: var(Q) = gamma_l t Q (1 - Q/(gamma_l t))."""
    gt = gamma_l * t_tot
    if gt <= 0.0:
        raise ValueError("gamma_l * t_tot must be positive")
    q = np.asarray(q, dtype=float)
    if np.any(q < 0.0):
        raise ValueError("Q must be non-negative")
    if np.any(q > gt):
        raise ModelViolationError("Q exceeds gamma_l * t_tot; loss-state population > 1")
    out = gt * q * (1.0 - q / gt)
    return out[()] if np.ndim(out) == 0 else out


def covariance_ce_q(q, m: int, gamma_l: float, t_tot: float, mode: str = "appendix"):
    """Covariance between |c_e(t_f)|^2 and the total loss Q_tot.

    ``mode="appendix"`` gives -(m/2) Q (1 - Q/(gamma_l t)); ``mode="main_text"``
    gives -var(Q_tot)/(2 gamma_l t) with Q_tot = m Q and var(Q_tot) = m^2 var(Q),
    which is m times larger.  Both forms appear in the derivation; the
    appendix form is the default.
    """
    gt = gamma_l * t_tot
    if gt <= 0.0:
        raise ValueError("gamma_l * t_tot must be positive")
    q = np.asarray(q, dtype=float)
    if np.any(q > gt):
        raise ModelViolationError("Q exceeds gamma_l * t_tot")
    base = q * (1.0 - q / gt)
    if mode == "appendix":
        out = -(m / 2.0) * base
    elif mode == "main_text":
        out = -(m**2 / 2.0) * base
    else:
        raise ValueError(f"unknown covariance mode {mode!r}")
    return out[()] if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class PopulationStats:
    """First two moments of the measured populations and the loss."""

    mean_pop_e: float
    var_pop_e: float
    mean_q: float
    var_q: float
    cov_eq: float
    n: int
    q_mode: QMode = QMode.RANDOM

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.var_pop_e < 0.0 or self.var_q < 0.0:
            raise ValueError("variances must be non-negative")
        bound = np.sqrt(self.var_pop_e * self.var_q) + 1e-12
        if abs(self.cov_eq) > bound:
            raise ValueError("covariance violates the Cauchy-Schwarz bound")


def ratio_moments(stats: PopulationStats) -> Tuple[float, float]:
    """Mean and variance of R1 = X / (1 - X - Q_tot) by series expansion.

    mean = <X>/<Y> + var(Y) <X>/<Y>^3 - cov(X, Y)/<Y>^2
    var  = (1/n) [ var(X)/<Y>^2 + <X>^2 var(Y)/<Y>^4 - 2 <X> cov(X, Y)/<Y>^3 ]

    with Y = 1 - X - Q_tot, var(Y) by correlated-variance addition
    (var(X) + var(Q) + 2 cov(X, Q)) and cov(X, Y) = -var(X) - cov(X, Q).
    Under ``q_mode`` ZERO and CONSTANT the loss contributes no fluctuation
    (var(Q) = 0, cov(X, Q) = 0) and the expressions collapse to the
    reduced lossless/constant forms.
    """
    x = stats.mean_pop_e
    if stats.q_mode == QMode.ZERO:
        q_mean, var_q, cov_xq = 0.0, 0.0, 0.0
    elif stats.q_mode == QMode.CONSTANT:
        q_mean, var_q, cov_xq = stats.mean_q, 0.0, 0.0
    else:
        q_mean, var_q, cov_xq = stats.mean_q, stats.var_q, stats.cov_eq
    y = 1.0 - x - q_mean
    if y <= 0.0:
        raise DegenerateDenominatorError(f"<Y> = {y} is not positive")
    var_x = stats.var_pop_e
    var_y = var_x + var_q + 2.0 * cov_xq
    cov_xy = -var_x - cov_xq
    r1_mean = x / y + var_y * x / y**3 - cov_xy / y**2
    r1_var = (var_x / y**2 + x**2 * var_y / y**4 - 2.0 * x * cov_xy / y**3) / stats.n
    return r1_mean, max(r1_var, 0.0)


def phase_variance(r1_mean: float, r1_var: float) -> Tuple[float, float, float]:
    """Linearized-arctangent phase variance.

    Returns ``(var_phi, d, b)`` with slope d = 1/(1 + R1^2), intercept
    b = arctan(R1), and var(phi) = var(R1) d^2 + 2 d b sqrt(var(R1)) + b^2,
    exactly as printed (the constant b^2 term included).
    """
    if r1_var < 0.0:
        raise ValueError("r1_var must be non-negative")
    d = 1.0 / (1.0 + r1_mean**2)
    b = float(np.arctan(r1_mean))
    var_phi = r1_var * d**2 + 2.0 * d * b * np.sqrt(r1_var) + b**2
    return float(var_phi), d, b


@dataclass(frozen=True)
class ErrorBudget:
    """DC offset, AC fluctuation, and their sum, for one parameter point."""

    mean_dev_a: float
    var_dev_a: float            # analytic chain (authoritative for the FOM)
    var_dev_a_empirical: float  # sample variance of the dev(a) draws, for cross-checking
    dc_offset: float
    fom: float
    slope_d: float
    intercept_b: float
    r1_mean: float
    r1_var: float

    def __post_init__(self):
        if self.fom < 0.0:
            raise ValueError("fom must be non-negative")
        if abs(self.fom - (self.dc_offset + self.var_dev_a)) > 1e-18 + 1e-12 * self.fom:
            raise ValueError("fom must equal dc_offset + var_dev_a exactly")


def accel_error_budget(stats: PopulationStats, alpha: float, a_true: float,
                       dev_samples: Sequence[float]) -> ErrorBudget:
    """Assemble the error budget from population statistics and dev(a) draws.

    The variance entering the figure of merit comes from the analytic
    chain var(dev a) = alpha^2 (var(R1) d^2 + 2 d b sqrt(var(R1)) + b^2);
    the empirical sample variance of the draws is reported alongside.
    """
    devs = np.asarray(dev_samples, dtype=float)
    if devs.size == 0:
        raise ValueError("dev_samples must be non-empty")
    if not np.isfinite(alpha):
        raise ValueError("alpha must be finite")
    r1_mean, r1_var = ratio_moments(stats)
    var_phi, d, b = phase_variance(r1_mean, r1_var)
    var_dev = alpha**2 * var_phi
    mean_dev = float(devs.mean())
    emp = float(devs.var(ddof=1)) if devs.size > 1 else 0.0
    dc = (a_true - mean_dev) ** 2
    return ErrorBudget(
        mean_dev_a=mean_dev,
        var_dev_a=var_dev,
        var_dev_a_empirical=emp,
        dc_offset=dc,
        fom=dc + var_dev,
        slope_d=d,
        intercept_b=b,
        r1_mean=r1_mean,
        r1_var=r1_var,
    )


def accel_variance_poisson(rho_ee: float, rho_gg: float, n: int,
                           alpha: float, a_mean: float) -> float:
    """Poisson-counting estimate of the acceleration variance.

    var(a) ~ (1/n) (<rho_ee>/<rho_gg>^3) (<rho_gg> + <rho_ee>)
             / (2 alpha [tan(alpha <a>) + tan^3(alpha <a>)])^2.

    This is a consistency estimate built on population counting statistics;
    it does not enter the figure-of-merit chain.
    """
    if rho_gg <= 0.0:
        raise ValueError("rho_gg must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")
    phase = alpha * a_mean
    half_pi = np.pi / 2.0
    dist = abs(phase) % half_pi
    dist = min(dist, half_pi - dist)
    t = np.tan(phase)
    denom = 2.0 * alpha * (t + t**3)
    if dist < 1e-12 or abs(denom) < 1e-300 or not np.isfinite(denom):
        raise LinearizationSingularityError(
            f"alpha*<a> = {phase} sits at a singular point of the linearization"
        )
    return (rho_ee / rho_gg**3) * (rho_gg + rho_ee) / (n * denom**2)

"""Fixed-step fourth-order Runge-Kutta integration for small complex systems.

The propagators in this package evolve tiny complex state vectors (two
rotating-frame amplitudes, or the nine entries of a 3x3 density matrix).
Everything here is deliberately plain: fixed steps, no adaptivity, no
error control.  Determinism matters more than efficiency per step; the
same inputs must reproduce the same bits on every run and under any
parallel schedule.

States can be scalars, 1-d vectors, or batched arrays: the stepper only
requires that the derivative field maps arrays to arrays of identical
shape, elementwise per sample.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

__all__ = ["IntegrationFailure", "rk4_step", "integrate"]


class IntegrationFailure(RuntimeError):
    """A derivative evaluation produced a non-finite state update."""

    def __init__(self, t: float):
        super().__init__(f"non-finite state update during RK4 step at t = {t!r} s")
        self.t = t


def rk4_step(state: np.ndarray, t: float, dt: float, f: Callable) -> np.ndarray:
    """Advance ``state`` from ``t`` to ``t + dt`` with one classic RK4 stage.

    Parameters
    ----------
    state : array_like of complex
        Current state.  May be any shape; batched states evolve elementwise.
    t : float
        Current time in seconds.
    dt : float
        Step size in seconds, > 0 (a shortened final step may pass any
        positive value).
    f : callable
        Pure derivative field ``f(state, t) -> dstate/dt`` with the same
        shape as ``state``.

    Returns
    -------
    numpy.ndarray
        The state at ``t + dt``.

    Raises
    ------
    IntegrationFailure
        If the update stops being finite (NaN/Inf anywhere).
    """
    k1 = f(state, t)
    k2 = f(state + (0.5 * dt) * k1, t + 0.5 * dt)
    k3 = f(state + (0.5 * dt) * k2, t + 0.5 * dt)
    k4 = f(state + dt * k3, t + dt)
    out = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise IntegrationFailure(t)
    return np.asarray(out)


def integrate(state: np.ndarray, t0: float, t1: float, dt: float, f: Callable) -> np.ndarray:
    """Propagate ``state`` from ``t0`` to exactly ``t1`` by repeated RK4 steps.

    The interval is covered with full steps of size ``dt``; a final
    shortened step lands exactly on ``t1``.  Time is accumulated by
    repeated addition so that splitting an integration at any full-step
    boundary reproduces the unsplit result bit for bit.

    Parameters
    ----------
    state : array_like of complex
    t0, t1 : float
        Integration bounds in seconds, ``t1 >= t0``.
    dt : float
        Full step size in seconds, > 0.
    f : callable
        Derivative field as in :func:`rk4_step`.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if t1 < t0:
        raise ValueError(f"t1 must be >= t0, got t0={t0}, t1={t1}")
    t = t0
    y = np.asarray(state)
    # Full steps while at least one whole dt remains; guard against a
    # stray extra step from accumulated roundoff.
    n_full = int(np.floor((t1 - t0) / dt + 1e-12))
    for _ in range(n_full):
        y = rk4_step(y, t, dt, f)
        t = t + dt
    rem = t1 - t
    if rem > abs(t1) * 1e-15 + 1e-30:
        y = rk4_step(y, t, rem, f)
    return y

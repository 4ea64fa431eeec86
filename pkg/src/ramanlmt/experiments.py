"""Parameter sweeps: error figure of merit against pulse count and detunings.

A sweep evaluates one axis (pulse count, single-photon detuning,
two-photon detuning, or detection uncertainty) over an ordered value
grid, replicated over a list of seeds.  Per point, the replicate
ensembles are batched into a single vectorized run; per-seed reductions
and the cross-seed spread are reported per row.

Detection-uncertainty sweeps reuse one set of interferometer runs per
seed: the dynamics do not depend on the detection error, so only the
measurement model and the statistics chain are re-evaluated per value.
"""

from __future__ import annotations

import enum
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .dynamics import run_batch
from .ensemble import reduce_outcomes, sample_atoms
from .model import PulseCalibration, QMode, SimulationConfig

__all__ = [
    "SweepAxis",
    "SweepSpec",
    "SweepRow",
    "NoDataError",
    "sweep",
    "find_min_fom",
    "worker_count",
]

THREADS_ENV = "RAMANLMT_THREADS"


class NoDataError(RuntimeError):
    """Every row of a sweep failed; there is no minimum to report."""


class SweepAxis(str, enum.Enum):
    PULSE_COUNT = "pulse_count"
    SINGLE_DETUNING = "single_detuning"
    TWO_PHOTON_DETUNING = "two_photon_detuning"
    MEASUREMENT_ERROR = "measurement_error"


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: a base configuration, an axis, its values, and seeds.

    Axis values are in internal units: pulse counts are odd integers,
    detunings are angular rates in rad/s, measurement errors fractions.
    """

    base: SimulationConfig
    axis: SweepAxis
    values: Tuple[float, ...]
    q_mode: QMode = QMode.RANDOM
    replicate_seeds: Tuple[int, ...] = (11, 12, 13, 14, 15)
    accel: Optional[float] = None  # defaults to base.a_true

    def __post_init__(self):
        if len(self.values) == 0:
            raise ValueError("values must be non-empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("values must be strictly increasing")
        if self.axis == SweepAxis.PULSE_COUNT:
            for v in self.values:
                if int(v) != v or int(v) % 2 == 0 or v < 1:
                    raise ValueError("pulse-count values must be positive odd integers")
        if len(self.replicate_seeds) == 0:
            raise ValueError("replicate_seeds must be non-empty")


@dataclass(frozen=True)
class SweepRow:
    """Cross-seed reduction of one axis value."""

    axis_value: float
    fom: float
    fom_spread: float
    var_dev_a: float
    dc_offset: float
    mean_q_per_pulse: float
    per_seed_fom: Tuple[float, ...]
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None


def worker_count(n_jobs: int) -> int:
    """Worker cap from the environment; defaults to serial execution."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        cap = max(1, int(raw))
    except ValueError:
        cap = 1
    return max(1, min(cap, n_jobs))


def _config_for(spec: SweepSpec, value) -> SimulationConfig:
    base = replace(spec.base, q_mode=spec.q_mode)
    if spec.axis == SweepAxis.PULSE_COUNT:
        return base.with_pulse_count(int(value))
    if spec.axis == SweepAxis.SINGLE_DETUNING:
        return base.with_detunings(delta_single=float(value))
    if spec.axis == SweepAxis.TWO_PHOTON_DETUNING:
        return base.with_detunings(delta_two=float(value))
    if spec.axis == SweepAxis.MEASUREMENT_ERROR:
        return replace(base, epsilon_m=float(value))
    raise ValueError(f"unknown axis {spec.axis}")


def _outcomes_for(cfg: SimulationConfig, seeds: Sequence[int], accel: float):
    """One batched dynamics run covering every replicate seed."""
    clouds = [sample_atoms(cfg.n_samples, s, cfg.mot_temperature, cfg.species,
                           cfg.cloud_sigma_x) for s in seeds]
    x0 = np.concatenate([[a.x0 for a in cloud] for cloud in clouds])
    v0 = np.concatenate([[a.v0 for a in cloud] for cloud in clouds])
    outs = run_batch(x0, v0, cfg, accel)
    n = cfg.n_samples
    return [outs[i * n:(i + 1) * n] for i in range(len(seeds))]


def _failed_row(value, exc) -> SweepRow:
    return SweepRow(axis_value=value, fom=float("nan"), fom_spread=float("nan"),
                    var_dev_a=float("nan"), dc_offset=float("nan"),
                    mean_q_per_pulse=float("nan"), per_seed_fom=(),
                    error=f"{type(exc).__name__}: {exc}")


def _reduce_point(cfg: SimulationConfig, seeds, per_seed_outcomes, accel, value):
    foms, var_devs, dcs, qpps = [], [], [], []
    try:
        for seed, outcomes in zip(seeds, per_seed_outcomes):
            res = reduce_outcomes(outcomes, replace(cfg, rng_seed=seed), accel)
            foms.append(res.budget.fom)
            var_devs.append(res.budget.var_dev_a)
            dcs.append(res.budget.dc_offset)
            qpps.append(res.stats.mean_q / cfg.sequence.m_weight)
    except Exception as exc:  # per-point failures recorded, sweep continues
        return _failed_row(value, exc)
    return SweepRow(
        axis_value=value,
        fom=float(np.mean(foms)),
        fom_spread=float(np.max(foms) - np.min(foms)),
        var_dev_a=float(np.mean(var_devs)),
        dc_offset=float(np.mean(dcs)),
        mean_q_per_pulse=float(np.mean(qpps)),
        per_seed_fom=tuple(float(f) for f in foms),
    )


def sweep(spec: SweepSpec) -> List[SweepRow]:
    """Evaluate every (value, seed) ensemble and reduce to per-value rows.

    Rows come back in axis order.  Per-point failures are recorded in the
    row's ``error`` field and do not abort the sweep.  Execution may fan
    out over threads (capped by ``RAMANLMT_THREADS``); results are
    assembled in axis order and are byte-identical for any worker count.
    """
    accel = spec.base.a_true if spec.accel is None else spec.accel
    seeds = spec.replicate_seeds

    if spec.axis == SweepAxis.MEASUREMENT_ERROR:
        # One dynamics run serves every epsilon value.
        cfg0 = _config_for(spec, spec.base.epsilon_m)
        try:
            per_seed = _outcomes_for(cfg0, seeds, accel)
        except Exception as exc:
            return [_failed_row(v, exc) for v in spec.values]
        rows = []
        for value in spec.values:
            cfg = replace(cfg0, epsilon_m=float(value))
            rows.append(_reduce_point(cfg, seeds, per_seed, accel, value))
        return rows

    def job(value):
        cfg = _config_for(spec, value)
        try:
            per_seed = _outcomes_for(cfg, seeds, accel)
        except Exception as exc:  # dynamics-level failure: record, continue
            return _failed_row(value, exc)
        return _reduce_point(cfg, seeds, per_seed, accel, value)

    workers = worker_count(len(spec.values))
    if workers == 1:
        return [job(v) for v in spec.values]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, spec.values))


def find_min_fom(rows: Sequence[SweepRow]) -> Tuple[float, float]:
    """Axis value with the smallest mean figure of merit.

    Ties break toward the smaller axis value (fewer pulses are cheaper).

    Raises
    ------
    NoDataError
        If every row failed.
    """
    best = None
    for row in rows:
        if row.failed or not np.isfinite(row.fom):
            continue
        if best is None or row.fom < best.fom:
            best = row
    if best is None:
        raise NoDataError("all sweep rows failed")
    return best.axis_value, best.fom

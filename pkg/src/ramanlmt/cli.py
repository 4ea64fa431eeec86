"""Config-driven command front end with bit-stable tabular output.

Configs are plain ``key = value`` text with unit-suffixed keys
(``delta_single_ghz``, ``t_pi_us``, ...) so the angular/cyclic
frequency conventions never leak into user files.  Unknown keys are
rejected; missing keys fall back to the published system parameters and
every fallback is logged.

Results are comma-separated tables: one header line, data rows with
17-significant-digit numbers (round-trip exact for doubles), and a
commented footer carrying the configuration fingerprint and seed list.
Identical command, config, and seed produce byte-identical files for
any worker count.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .density import oracle_compare
from .ensemble import config_fingerprint, run_ensemble
from .experiments import SweepAxis, SweepSpec, SweepRow, sweep
from .model import (
    AtomSpecies,
    LaserConfig,
    PulseCalibration,
    PulseKind,
    QMode,
    SimulationConfig,
    build_sequence,
    calibrated_pi_time,
)

__all__ = ["ConfigError", "parse_config", "write_config", "dispatch", "main"]

log = logging.getLogger("ramanlmt")

TWO_PI = 2.0 * math.pi

COMMANDS = (
    "simulate",
    "sweep-pulses",
    "sweep-detuning",
    "sweep-two-photon",
    "sweep-measurement",
    "oracle-check",
)

# key -> (default in config units, parser)
_FLOAT = float
_INT = int


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("true", "1", "yes", "on"):
        return True
    if t in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _float_list(text: str) -> Tuple[float, ...]:
    return tuple(float(tok) for tok in str(text).split(",") if tok.strip())


def _int_list(text: str) -> Tuple[int, ...]:
    return tuple(int(tok) for tok in str(text).split(",") if tok.strip())


CONFIG_KEYS: Dict[str, tuple] = {
    # sequence and timing
    "n_r": (1, _INT),
    "free_evolution_ms": (100.0, _FLOAT),
    "pulse_gap_us": (150.0, _FLOAT),
    "t_pi_us": (2.00, _FLOAT),
    # lasers (detunings cyclic, Rabi/decay angular)
    "delta_single_ghz": (9.0, _FLOAT),
    "delta_two_khz": (0.0, _FLOAT),
    "rabi_mega_rad_s": (212.0, _FLOAT),
    "gamma_mega_rad_s": (38.117, _FLOAT),
    "wavelength_nm": (780.0, _FLOAT),
    "mass_kg": (1.419e-25, _FLOAT),
    "hyperfine_ghz": (3.035732439, _FLOAT),
    "theta_rad": (0.0, _FLOAT),
    # ensemble and measurement
    "mot_temperature_uk": (2.0, _FLOAT),
    "a_true": (1.85e-5, _FLOAT),
    "accel": (None, _FLOAT),
    "n_samples": (200, _INT),
    "epsilon_m": (0.02, _FLOAT),
    "rng_seed": (20240901, _INT),
    "cloud_sigma_x_mm": (1.0, _FLOAT),
    # conventions
    "pulse_mode": ("calibrated", str),
    "q_mode": ("random", str),
    "phase_bias_rad": (0.0, _FLOAT),
    "compensate_reference": (True, _bool),
    "unfold_phase": (False, _bool),
    "epsilon_deterministic": (False, _bool),
    "cov_mode": ("appendix", str),
    "loss_time_basis": ("sequence", str),
    "atom_number": (1.0, _FLOAT),
    "steps_per_pi": (2000, _INT),
    "recoil_sign_first": (1, _INT),
    # sweep control
    "sweep_values": (None, _float_list),
    "replicate_seeds": ((11, 12, 13, 14, 15), _int_list),
}


class ConfigError(ValueError):
    """Malformed config: bad syntax, unknown key, or invariant violation."""


def _read_pairs(path) -> Dict[str, str]:
    pairs: Dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in pairs:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


def parse_config(path) -> Tuple[SimulationConfig, Dict[str, object]]:
    """Read and validate a config file.

    Returns the simulation configuration plus an extras dict with the
    sweep values, replicate seeds, and acceleration override.  Missing
    keys take the published defaults (one log line each).
    """
    pairs = _read_pairs(path)
    values: Dict[str, object] = {}
    for key, (default, conv) in CONFIG_KEYS.items():
        if key in pairs:
            try:
                values[key] = conv(pairs[key])
            except ValueError as exc:
                raise ConfigError(f"{path}: key {key!r}: {exc}") from exc
        else:
            values[key] = default
            if default is not None:
                log.info("config %s: using default %s = %r", path, key, default)

    species = AtomSpecies(
        mass=values["mass_kg"],
        wavelength=values["wavelength_nm"] * 1e-9,
        gamma_total=values["gamma_mega_rad_s"] * 1e6,
        gamma_l=values["gamma_mega_rad_s"] * 1e6,
        gamma_g=0.0,
        gamma_e=0.0,
        hyperfine_splitting=TWO_PI * values["hyperfine_ghz"] * 1e9,
    )
    laser = LaserConfig.for_species(
        species,
        rabi=values["rabi_mega_rad_s"] * 1e6,
        delta_single=TWO_PI * values["delta_single_ghz"] * 1e9,
        delta_two=TWO_PI * values["delta_two_khz"] * 1e3,
        theta=values["theta_rad"],
    )
    try:
        pulse_mode = PulseCalibration(values["pulse_mode"])
        q_mode = QMode(values["q_mode"])
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if pulse_mode == PulseCalibration.CALIBRATED:
        t_pi = calibrated_pi_time(laser)
    else:
        t_pi = values["t_pi_us"] * 1e-6
    try:
        sequence = build_sequence(
            values["n_r"],
            values["free_evolution_ms"] * 1e-3,
            values["pulse_gap_us"] * 1e-6,
            t_pi,
            0.5 * t_pi,
        )
        cfg = SimulationConfig(
            species=species,
            laser=laser,
            sequence=sequence,
            a_true=values["a_true"],
            mot_temperature=values["mot_temperature_uk"] * 1e-6,
            n_samples=values["n_samples"],
            epsilon_m=values["epsilon_m"],
            rng_seed=values["rng_seed"],
            pulse_calibration=pulse_mode,
            q_mode=q_mode,
            cloud_sigma_x=values["cloud_sigma_x_mm"] * 1e-3,
            compensate_reference=values["compensate_reference"],
            phase_bias=values["phase_bias_rad"],
            unfold_phase=values["unfold_phase"],
            epsilon_deterministic=values["epsilon_deterministic"],
            cov_mode=values["cov_mode"],
            loss_time_basis=values["loss_time_basis"],
            atom_number=values["atom_number"],
            steps_per_pi=values["steps_per_pi"],
            recoil_sign_first=values["recoil_sign_first"],
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    extras = {
        "sweep_values": values["sweep_values"],
        "replicate_seeds": tuple(values["replicate_seeds"]),
        "accel": values["accel"],
    }
    return cfg, extras


def write_config(cfg: SimulationConfig, path,
                 extras: Optional[Dict[str, object]] = None) -> None:
    """Serialize a configuration back to config-file form (round-trip exact)."""
    lines = [
        f"n_r = {cfg.sequence.n_r}",
        f"free_evolution_ms = {cfg.sequence.big_t * 1e3:.17g}",
        f"pulse_gap_us = {cfg.sequence.tau_d * 1e6:.17g}",
        f"t_pi_us = {cfg.sequence.t_pi * 1e6:.17g}",
        f"delta_single_ghz = {cfg.laser.delta_single / (TWO_PI * 1e9):.17g}",
        f"delta_two_khz = {cfg.laser.delta_two / (TWO_PI * 1e3):.17g}",
        f"rabi_mega_rad_s = {abs(complex(cfg.laser.rabi1)) / 1e6:.17g}",
        f"gamma_mega_rad_s = {cfg.species.gamma_total / 1e6:.17g}",
        f"wavelength_nm = {cfg.species.wavelength * 1e9:.17g}",
        f"mass_kg = {cfg.species.mass:.17g}",
        f"hyperfine_ghz = {cfg.species.hyperfine_splitting / (TWO_PI * 1e9):.17g}",
        f"theta_rad = {cfg.laser.theta:.17g}",
        f"mot_temperature_uk = {cfg.mot_temperature * 1e6:.17g}",
        f"a_true = {cfg.a_true:.17g}",
        f"n_samples = {cfg.n_samples}",
        f"epsilon_m = {cfg.epsilon_m:.17g}",
        f"rng_seed = {cfg.rng_seed}",
        f"cloud_sigma_x_mm = {cfg.cloud_sigma_x * 1e3:.17g}",
        f"pulse_mode = {cfg.pulse_calibration.value}",
        f"q_mode = {cfg.q_mode.value}",
        f"phase_bias_rad = {cfg.phase_bias:.17g}",
        f"compensate_reference = {str(cfg.compensate_reference).lower()}",
        f"unfold_phase = {str(cfg.unfold_phase).lower()}",
        f"epsilon_deterministic = {str(cfg.epsilon_deterministic).lower()}",
        f"cov_mode = {cfg.cov_mode}",
        f"loss_time_basis = {cfg.loss_time_basis}",
        f"atom_number = {cfg.atom_number:.17g}",
        f"steps_per_pi = {cfg.steps_per_pi}",
        f"recoil_sign_first = {cfg.recoil_sign_first}",
    ]
    if extras:
        if extras.get("sweep_values") is not None:
            lines.append("sweep_values = " + ",".join(
                f"{v:.17g}" for v in extras["sweep_values"]))
        if extras.get("replicate_seeds") is not None:
            lines.append("replicate_seeds = " + ",".join(
                str(s) for s in extras["replicate_seeds"]))
        if extras.get("accel") is not None:
            lines.append(f"accel = {extras['accel']:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _write_table(path, header: Sequence[str], rows: Sequence[Sequence],
                 footer: Sequence[str]) -> None:
    lines = [",".join(header)]
    lines += [",".join(_fmt(cell) for cell in row) for row in rows]
    lines += [f"# {note}" for note in footer]
    Path(path).write_text("\n".join(lines) + "\n")


def _sweep_rows_table(rows: List[SweepRow], axis_label: str):
    header = [axis_label, "fom", "fom_spread", "var_dev_a", "dc_offset",
              "mean_q_per_pulse", "error"]
    data = [[r.axis_value, r.fom, r.fom_spread, r.var_dev_a, r.dc_offset,
             r.mean_q_per_pulse, r.error or ""] for r in rows]
    return header, data


DEFAULT_SWEEPS = {
    "sweep-pulses": (SweepAxis.PULSE_COUNT, tuple(float(n) for n in range(1, 42, 2)),
                     "n_r", lambda v: v),
    "sweep-detuning": (SweepAxis.SINGLE_DETUNING,
                       (1.0, 3.0, 5.0, 7.0, 9.0, 12.0, 20.0), "delta_single_ghz",
                       lambda v: TWO_PI * v * 1e9),
    "sweep-two-photon": (SweepAxis.TWO_PHOTON_DETUNING,
                         (0.0, 13.0, 26.0, 39.0, 52.0, 63.0), "delta_two_khz",
                         lambda v: TWO_PI * v * 1e3),
    "sweep-measurement": (SweepAxis.MEASUREMENT_ERROR,
                          (0.02, 0.04, 0.10, 0.20, 0.50), "epsilon_m",
                          lambda v: v),
}


def dispatch(command: str, config_path, out_path, seed: Optional[int] = None,
             samples: Optional[int] = None, q_mode: Optional[str] = None,
             pulse_mode: Optional[str] = None) -> int:
    """Run one command and write its result table; returns the exit status."""
    try:
        cfg, extras = parse_config(config_path)
        if seed is not None:
            cfg = replace(cfg, rng_seed=seed)
        if samples is not None:
            cfg = replace(cfg, n_samples=samples)
        if q_mode is not None:
            cfg = replace(cfg, q_mode=QMode(q_mode))
        if pulse_mode is not None:
            mode = PulseCalibration(pulse_mode)
            cfg = replace(cfg, pulse_calibration=mode)
            if mode == PulseCalibration.CALIBRATED:
                t_pi = calibrated_pi_time(cfg.laser)
                cfg = replace(cfg, sequence=build_sequence(
                    cfg.sequence.n_r, cfg.sequence.big_t, cfg.sequence.tau_d,
                    t_pi, 0.5 * t_pi))
        accel = extras["accel"] if extras["accel"] is not None else cfg.a_true
        seeds = extras["replicate_seeds"]

        if command == "simulate":
            res = run_ensemble(cfg, accel)
            header = ["n_r", "fom", "dc_offset", "var_dev_a", "var_dev_a_empirical",
                      "mean_dev_a", "mean_pop_e", "var_pop_e", "mean_q_per_pulse",
                      "r1_mean", "r1_var"]
            row = [cfg.sequence.n_r, res.budget.fom, res.budget.dc_offset,
                   res.budget.var_dev_a, res.budget.var_dev_a_empirical,
                   res.budget.mean_dev_a, res.stats.mean_pop_e, res.stats.var_pop_e,
                   res.stats.mean_q / cfg.sequence.m_weight,
                   res.budget.r1_mean, res.budget.r1_var]
            _write_table(out_path, header, [row],
                         [f"fingerprint={res.fingerprint}", f"seeds={cfg.rng_seed}"])
            return 0

        if command in DEFAULT_SWEEPS:
            axis, default_vals, label, to_internal = DEFAULT_SWEEPS[command]
            user_vals = extras["sweep_values"]
            vals = tuple(user_vals) if user_vals is not None else default_vals
            spec = SweepSpec(base=cfg, axis=axis,
                             values=tuple(to_internal(v) for v in vals),
                             q_mode=cfg.q_mode, replicate_seeds=seeds, accel=accel)
            rows = sweep(spec)
            display = [replace(r, axis_value=v) for r, v in zip(rows, vals)]
            header, data = _sweep_rows_table(display, label)
            _write_table(out_path, header, data,
                         [f"fingerprint={config_fingerprint(cfg, accel)}",
                          "seeds=" + ";".join(str(s) for s in seeds)])
            return 0

        if command == "oracle-check":
            rng = np.random.default_rng(cfg.rng_seed)
            rows = []
            worst = 0.0
            for i in range(20):
                d_ghz = rng.uniform(3.0, 20.0)
                d_khz = rng.uniform(0.0, 63.0)
                lossy = bool(rng.integers(0, 2))
                species = cfg.species if lossy else AtomSpecies(
                    mass=cfg.species.mass, wavelength=cfg.species.wavelength,
                    gamma_total=0.0, gamma_l=0.0, gamma_g=0.0, gamma_e=0.0,
                    hyperfine_splitting=cfg.species.hyperfine_splitting)
                laser = LaserConfig.for_species(
                    species, rabi=abs(complex(cfg.laser.rabi1)),
                    delta_single=TWO_PI * d_ghz * 1e9,
                    delta_two=TWO_PI * d_khz * 1e3)
                t_pi = calibrated_pi_time(laser)
                probe = replace(cfg, species=species, laser=laser,
                                sequence=build_sequence(1, cfg.sequence.big_t,
                                                        cfg.sequence.tau_d,
                                                        t_pi, 0.5 * t_pi))
                kind = PulseKind.PI if rng.integers(0, 2) else PulseKind.HALF_PI
                disc = oracle_compare(probe, kind)
                worst = max(worst, disc)
                rows.append([i, d_ghz, d_khz, float(species.gamma_l), kind.value, disc])
            _write_table(out_path,
                         ["index", "delta_single_ghz", "delta_two_khz", "gamma_l",
                          "pulse", "discrepancy"],
                         rows, [f"worst={worst:.17g}", f"seeds={cfg.rng_seed}"])
            if worst > 1e-3:
                print(f"error: oracle discrepancy {worst:.3e} exceeds 1e-3",
                      file=sys.stderr)
                return 2
            return 0

        print(f"error: unknown command {command!r}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # surfaced with context, machine-readable
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="ramanlmt",
        description="LMT Raman interferometer spontaneous-decay error analysis",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="key = value config file")
    parser.add_argument("--out", required=True, help="output CSV path")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--samples", type=int, default=None)
    parser.add_argument("--q-mode", choices=[m.value for m in QMode], default=None)
    parser.add_argument("--pulse-mode", choices=[m.value for m in PulseCalibration],
                        default=None)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")
    return dispatch(args.command, args.config, args.out, seed=args.seed,
                    samples=args.samples, q_mode=args.q_mode,
                    pulse_mode=args.pulse_mode)


if __name__ == "__main__":
    sys.exit(main())

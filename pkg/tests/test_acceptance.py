"""Acceptance suite: one test and one printed PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -s``.  The sweep-based
criteria (2-5, 9) share session fixtures; the full suite performs every
sweep at its stated grid (pulse counts 1..41 odd, 200 atoms, 5 seeds)
and takes roughly 40 minutes of compute.
"""

import math
import os
import time
from dataclasses import replace

import numpy as np
import pytest

from ramanlmt.cli import dispatch
from ramanlmt.density import oracle_compare
from ramanlmt.dynamics import run_interferometer
from ramanlmt.ensemble import run_ensemble
from ramanlmt.experiments import (
    SweepAxis,
    SweepSpec,
    _config_for,
    _outcomes_for,
    _reduce_point,
    find_min_fom,
    sweep,
)
from ramanlmt.model import (
    AtomSpecies,
    LaserConfig,
    PulseCalibration,
    PulseKind,
    QMode,
    SimulationConfig,
    build_sequence,
    calibrated_pi_time,
    default_config,
)
from ramanlmt.stats import PopulationStats, covariance_ce_q, ratio_moments, variance_q

TWO_PI = 2.0 * math.pi
N_GRID = tuple(float(n) for n in range(1, 42, 2))
SEEDS = (11, 12, 13, 14, 15)
EPSILONS = (0.02, 0.04, 0.10, 0.20, 0.50)

_summary = []


def report(num, name, ok, detail):
    line = f"ACCEPTANCE {num:>2} {name}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(f"\n{line}")
    _summary.append(line)
    assert ok, line


@pytest.fixture(scope="session", autouse=True)
def final_summary():
    t0 = time.time()
    yield
    print(f"\n===== acceptance summary ({time.time()-t0:.0f} s) =====")
    for line in _summary:
        print(line)


def _pulse_sweep(base):
    spec = SweepSpec(base=base, axis=SweepAxis.PULSE_COUNT, values=N_GRID,
                     replicate_seeds=SEEDS)
    return sweep(spec)


def _min_loc(rows):
    return int(find_min_fom(rows)[0])


def _interior_unique_min(rows):
    """Global minimum strictly inside the grid with higher ends."""
    good = [r for r in rows if not r.failed]
    if len(good) < 3:
        return False
    foms = [r.fom for r in good]
    i = int(np.argmin(foms))
    return 0 < i < len(good) - 1 and foms[0] > foms[i] and foms[-1] > foms[i]


@pytest.fixture(scope="session")
def default_eps_sweeps():
    """Pulse-count sweep at Delta=9 GHz, delta=0, reduced at all epsilons.

    The dynamics are detection-error independent, so one batched run per
    pulse count serves every epsilon (with shared noise realizations).
    """
    base = default_config(n_r=1, n_samples=200)
    rows = {eps: [] for eps in EPSILONS}
    for nv in N_GRID:
        cfg = base.with_pulse_count(int(nv))
        per_seed = _outcomes_for(cfg, SEEDS, cfg.a_true)
        for eps in EPSILONS:
            rows[eps].append(_reduce_point(replace(cfg, epsilon_m=eps),
                                           SEEDS, per_seed, cfg.a_true, nv))
    return rows


@pytest.fixture(scope="session")
def delta_sweep_minima(default_eps_sweeps):
    """Minimum-FOM pulse counts for Delta in {1,7,9,12,20} GHz (calibrated)."""
    base = default_config(n_r=1, n_samples=200)
    minima = {}
    for ghz in (1.0, 7.0, 12.0, 20.0):
        b = base.with_detunings(delta_single=TWO_PI * ghz * 1e9)
        minima[ghz] = _min_loc(_pulse_sweep(b))
    minima[9.0] = _min_loc(default_eps_sweeps[0.02])
    return minima


@pytest.fixture(scope="session")
def two_photon_sweeps():
    base = default_config(n_r=1, n_samples=200)
    out = {}
    for ghz, khz in ((9.0, 63.0), (2.0, 63.0)):
        b = base.with_detunings(delta_single=TWO_PI * ghz * 1e9,
                                delta_two=TWO_PI * khz * 1e3)
        out[(ghz, khz)] = _pulse_sweep(b)
    return out


def test_criterion_1_pulse_calibration():
    laser = LaserConfig.for_species(AtomSpecies.rubidium85(),
                                    delta_single=TWO_PI * 9e9)
    t_pi = calibrated_pi_time(laser)
    ok = abs(t_pi - 2.00e-6) / 2.00e-6 < 0.02
    report(1, "table self-consistency", ok,
           f"calibrated t_pi(9 GHz) = {t_pi*1e6:.4f} us vs 2.00 us "
           f"({abs(t_pi-2e-6)/2e-6*100:.2f}% off, tolerance 2%)")


def test_criterion_2_noise_scaling():
    base = default_config(n_r=1, n_samples=200, q_mode=QMode.ZERO)
    spec = SweepSpec(base=base, axis=SweepAxis.PULSE_COUNT,
                     values=(1.0, 3.0, 5.0, 7.0, 9.0),
                     q_mode=QMode.ZERO, replicate_seeds=SEEDS)
    rows = sweep(spec)
    n_vals = np.array([r.axis_value for r in rows])
    var_vals = np.array([r.var_dev_a for r in rows])
    slope = np.polyfit(np.log(n_vals), np.log(var_vals), 1)[0]
    ok = abs(slope - (-2.0)) <= 0.2
    report(2, "N_R^-2 noise scaling", ok,
           f"log-log slope of var(dev a) vs N_R = {slope:.3f} (target -2.0 +- 0.2)")


def test_criterion_3_table2_minima(default_eps_sweeps):
    targets = {0.02: 17, 0.04: 17, 0.10: 17, 0.20: 15, 0.50: 11}
    minima = {eps: _min_loc(default_eps_sweeps[eps]) for eps in EPSILONS}
    locs = [minima[eps] for eps in EPSILONS]
    ordered = all(b <= a for a, b in zip(locs, locs[1:]))
    exact = ordered and all(abs(minima[e] - targets[e]) <= 2 for e in EPSILONS)
    fallback = ordered and all(_interior_unique_min(default_eps_sweeps[e])
                               for e in EPSILONS)
    ok = exact or fallback
    mode = "exact" if exact else ("fallback: unique interior minimum, "
                                  "non-increasing in eps_M" if fallback else "none")
    report(3, "detection-error minima", ok,
           f"min-FOM N_R vs eps {dict(zip(EPSILONS, locs))} "
           f"(targets {list(targets.values())} +-2) -> satisfied via {mode}")


def test_criterion_4_detuning_minima(delta_sweep_minima):
    order = (1.0, 7.0, 9.0, 12.0, 20.0)
    targets = dict(zip(order, (9, 17, 17, 19, 21)))
    locs = [delta_sweep_minima[g] for g in order]
    values_ok = all(abs(delta_sweep_minima[g] - targets[g]) <= 2 for g in order)
    trend_ok = all(b >= a for a, b in zip(locs, locs[1:]))
    ok = values_ok and trend_ok
    report(4, "single-photon detuning minima", ok,
           f"min-FOM N_R vs Delta(GHz) {dict(zip(order, locs))} "
           f"(targets {list(targets.values())} +-2, non-decreasing required); "
           f"values_ok={values_ok}, trend_ok={trend_ok}")


def test_criterion_5_two_photon_minima(two_photon_sweeps, default_eps_sweeps):
    m9 = _min_loc(two_photon_sweeps[(9.0, 63.0)])
    m2 = _min_loc(two_photon_sweeps[(2.0, 63.0)])
    m9_zero = _min_loc(default_eps_sweeps[0.02])
    ok9 = abs(m9 - 13) <= 2
    ok2 = abs(m2 - 11) <= 2
    below = m9 < m9_zero
    ok = ok9 and ok2 and below
    report(5, "two-photon detuning minima", ok,
           f"min N_R: (9 GHz, 63 kHz) = {m9} (target 13+-2), "
           f"(2 GHz, 63 kHz) = {m2} (target 11+-2), "
           f"delta=0 minimum at {m9_zero} (strictly-below required: {below})")


def test_criterion_6_per_pulse_loss():
    results = []
    for ghz, khz, target, tol, label in (
            (3.5, 52.0, 0.0026, 0.0005, "Butts-like"),
            (2.0, 63.0, 0.0050, 0.0015, "McGuirk-like")):
        per_pulse = []
        for n_r in (3, 5):  # 6 and 10 hbar*k_eff transfers
            cfg = default_config(n_r=n_r).with_detunings(
                delta_single=TWO_PI * ghz * 1e9, delta_two=TWO_PI * khz * 1e3)
            out = run_interferometer((0.0, 0.0), cfg, cfg.a_true)
            per_pulse.append(out.q_tot / cfg.sequence.m_weight)
        mean_q = float(np.mean(per_pulse))
        results.append((label, mean_q, abs(mean_q - target) <= tol, target, tol))
    ok = all(r[2] for r in results)
    detail = "; ".join(f"{lab}: Q/pulse = {q*100:.3f}% (target {t*100:.2f}+-{tt*100:.2f}%)"
                       for lab, q, _, t, tt in results)
    report(6, "per-pulse loss", ok, detail)


def test_criterion_7_oracle_equivalence():
    rng = np.random.default_rng(12345)
    rb = AtomSpecies.rubidium85()
    closed = AtomSpecies(mass=rb.mass, wavelength=rb.wavelength, gamma_total=0.0,
                         gamma_l=0.0, gamma_g=0.0, gamma_e=0.0,
                         hyperfine_splitting=rb.hyperfine_splitting)
    worst = 0.0
    for _ in range(20):
        ghz = rng.uniform(3.0, 20.0)
        khz = rng.uniform(0.0, 63.0)
        species = rb if rng.integers(0, 2) else closed
        laser = LaserConfig.for_species(species, delta_single=TWO_PI * ghz * 1e9,
                                        delta_two=TWO_PI * khz * 1e3)
        t_pi = calibrated_pi_time(laser)
        cfg = SimulationConfig(
            species=species, laser=laser,
            sequence=build_sequence(1, 0.1, 150e-6, t_pi, t_pi / 2),
            a_true=1.85e-5, mot_temperature=2e-6, n_samples=2,
            epsilon_m=0.0, rng_seed=1)
        kind = PulseKind.PI if rng.integers(0, 2) else PulseKind.HALF_PI
        worst = max(worst, oracle_compare(cfg, kind))
    ok = worst < 1e-3
    report(7, "amplitude vs density oracle", ok,
           f"worst population discrepancy over 20 random configs = {worst:.2e} "
           f"(bound 1e-3)")


def test_criterion_8_statistics_oracles():
    rng = np.random.default_rng(2024)
    worst_var = worst_mean = 0.0
    for _ in range(200):
        mx = rng.uniform(0.05, 0.5)
        mq = rng.uniform(0.002, 0.15)
        if 1.0 - mx - mq < 0.35:
            mq = 0.05
        sx = mx * rng.uniform(0.005, 0.04)
        sq = mq * rng.uniform(0.005, 0.04)
        rho = rng.uniform(-0.9, 0.9)
        g = rng.standard_normal((2, 1_000_000))
        x = mx + sx * g[0]
        q = mq + sq * (rho * g[0] + math.sqrt(1 - rho**2) * g[1])
        r = x / (1.0 - x - q)
        st = PopulationStats(mx, sx**2, mq, sq**2, rho * sx * sq, n=2,
                             q_mode=QMode.RANDOM)
        mean, var = ratio_moments(st)
        worst_var = max(worst_var, abs(2 * var - r.var(ddof=1)) / r.var(ddof=1))
        worst_mean = max(worst_mean, abs(mean - r.mean()) / abs(r.mean()))
    mc_ok = worst_var < 0.05 and worst_mean < 0.05

    # closed forms match direct evaluation at machine precision
    gl, m = 3.8117e7, 34
    exact_ok = True
    for _ in range(100):
        q = rng.uniform(0.0, 0.02)
        t = rng.uniform(5e-7, 5e-6)
        gt = gl * t
        exact_ok &= variance_q(q, gl, t) == gt * q * (1.0 - q / gt)
        exact_ok &= covariance_ce_q(q, m, gl, t) == -(m / 2.0) * q * (1.0 - q / gt)

    # FOM decomposition identity is exact for live budgets
    cfg = default_config(n_r=3, n_samples=30)
    budget = run_ensemble(cfg, cfg.a_true).budget
    fom_ok = budget.fom == budget.dc_offset + budget.var_dev_a

    ok = mc_ok and exact_ok and fom_ok
    report(8, "statistics oracles", ok,
           f"ratio moments vs 1e6-sample MC: worst var {worst_var*100:.2f}%, "
           f"mean {worst_mean*100:.2f}% (bound 5%); closed forms exact: {exact_ok}; "
           f"FOM identity exact: {fom_ok}")


def test_criterion_9_error_magnitude(default_eps_sweeps):
    rows = default_eps_sweeps[0.02]
    fom17 = next(r.fom for r in rows if r.axis_value == 17.0)
    err = math.sqrt(fom17)
    ok = 1e-6 <= err <= 1e-4
    report(9, "error magnitude at the optimum", ok,
           f"FOM(N_R=17, 9 GHz, 2%) = {fom17:.3e} (m/s^2)^2 -> overall error "
           f"{err:.3e} m/s^2 (one decade around 1e-5)")


def test_criterion_10_determinism(tmp_path, monkeypatch):
    cfgp = tmp_path / "c.cfg"
    cfgp.write_text("n_r = 3\nn_samples = 40\nsweep_values = 1,3,5\n"
                    "replicate_seeds = 11,12\n")
    blobs = {"simulate": set(), "sweep-pulses": set()}
    for workers in ("1", "4", "16"):
        monkeypatch.setenv("RAMANLMT_THREADS", workers)
        for command in blobs:
            out = tmp_path / f"{command}-{workers}.csv"
            status = dispatch(command, cfgp, out, seed=77)
            assert status == 0
            blobs[command].add(out.read_bytes())
    ok = all(len(v) == 1 for v in blobs.values())
    report(10, "byte-identical determinism", ok,
           f"simulate and sweep outputs identical across 1/4/16 workers: {ok}")

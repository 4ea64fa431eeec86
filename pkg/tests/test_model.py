"""Domain types: sequence layout, scale factor, detunings, unit conventions."""

import math

import numpy as np
import pytest

from ramanlmt.model import (
    AtomSpecies,
    LaserConfig,
    PulseKind,
    SimulationConfig,
    alpha_scale,
    build_sequence,
    calibrated_pi_time,
    default_config,
    effective_two_photon_detuning,
)

TWO_PI = 2.0 * math.pi


@pytest.fixture
def rb85():
    return AtomSpecies.rubidium85()


def test_species_validation(rb85):
    with pytest.raises(ValueError):
        AtomSpecies(mass=-1.0, wavelength=780e-9, gamma_total=1.0,
                    gamma_l=1.0, gamma_g=0.0, gamma_e=0.0, hyperfine_splitting=1.0)
    with pytest.raises(ValueError):
        AtomSpecies(mass=1e-25, wavelength=780e-9, gamma_total=1.0,
                    gamma_l=0.4, gamma_g=0.0, gamma_e=0.0, hyperfine_splitting=1.0)


def test_counter_propagating_k_eff(rb85):
    laser = LaserConfig.for_species(rb85)
    assert abs(laser.k_eff) == pytest.approx(abs(laser.k1) + abs(laser.k2), rel=1e-12)
    assert laser.k_eff == pytest.approx(1.611e7, rel=1e-3)


def test_weak_detuning_warning(rb85):
    with pytest.warns(UserWarning):
        LaserConfig.for_species(rb85, delta_single=5.0 * 2.12e8)


def test_sequence_n1_layout():
    seq = build_sequence(1, 0.1, 0.0, 2e-6, 1e-6)
    assert seq.kinds() == (PulseKind.HALF_PI, PulseKind.FREE, PulseKind.PI,
                           PulseKind.FREE, PulseKind.HALF_PI)
    assert seq.m_weight == 2


def test_sequence_n3_counts():
    seq = build_sequence(3, 0.1, 150e-6, 2e-6, 1e-6)
    assert seq.pi_count == 5
    assert seq.m_weight == 6
    # exactly two long free segments
    longs = [s for s in seq.segments if s.kind == PulseKind.FREE and s.duration == 0.1]
    assert len(longs) == 2
    gaps = [s for s in seq.segments if s.kind == PulseKind.FREE and s.duration == 150e-6]
    assert len(gaps) == 2 * 3


def test_sequence_n17_weight():
    seq = build_sequence(17, 0.1, 150e-6, 2e-6, 1e-6)
    assert seq.m_weight == 34
    assert seq.pi_count == 33


def test_sequence_wall_time_exact():
    n_r, big_t, tau_d, t_pi, t_half = 5, 0.1, 150e-6, 2e-6, 1e-6
    seq = build_sequence(n_r, big_t, tau_d, t_pi, t_half)
    expected = 2 * big_t + (2 * n_r - 1) * t_pi + 2 * t_half + 2 * n_r * tau_d
    assert seq.wall_time == pytest.approx(expected, rel=1e-15)


def test_sequence_palindrome():
    for n_r in (1, 3, 7, 17):
        kinds = build_sequence(n_r, 0.1, 150e-6, 2e-6, 1e-6).kinds()
        assert kinds == tuple(reversed(kinds))


def test_sequence_rejects_even_or_nonpositive():
    with pytest.raises(ValueError):
        build_sequence(4, 0.1, 150e-6, 2e-6, 1e-6)
    with pytest.raises(ValueError):
        build_sequence(0, 0.1, 150e-6, 2e-6, 1e-6)
    with pytest.raises(ValueError):
        build_sequence(-3, 0.1, 150e-6, 2e-6, 1e-6)


def test_alpha_scale_direct_value():
    seq = build_sequence(1, 0.1, 0.0, 2e-6, 1e-6)
    alpha = alpha_scale(seq, 1.611e7, 0.0)
    assert alpha == pytest.approx(1.0 / (2 * 0.01 * 1.611e7), rel=1e-12)
    assert alpha == pytest.approx(3.103e-6, rel=1e-3)


def test_alpha_theta_zero_matches_unit_cosine():
    seq = build_sequence(1, 0.1, 0.0, 2e-6, 1e-6)
    assert alpha_scale(seq, 1.611e7, 0.0) == alpha_scale(seq, 1.611e7, 1e-12)


def test_alpha_halves_when_pulse_count_doubles():
    # at tau_d = 0 alpha is inversely linear in N_R
    s1 = build_sequence(1, 0.1, 0.0, 2e-6, 1e-6)
    s3 = build_sequence(3, 0.1, 0.0, 2e-6, 1e-6)
    assert alpha_scale(s1, 1.611e7, 0.0) == pytest.approx(
        3.0 * alpha_scale(s3, 1.611e7, 0.0), rel=1e-12)


def test_alpha_strictly_decreasing_in_pulse_count():
    alphas = [alpha_scale(build_sequence(n, 0.1, 150e-6, 2e-6, 1e-6), 1.611e7, 0.0)
              for n in range(1, 42, 2)]
    assert all(b < a for a, b in zip(alphas, alphas[1:]))


def test_alpha_degenerate_geometry():
    seq = build_sequence(1, 0.1, 0.0, 2e-6, 1e-6)
    with pytest.raises(ValueError):
        alpha_scale(seq, 1.611e7, math.pi / 2.0)


def test_two_photon_detuning_zero_case(rb85):
    heavy = AtomSpecies(mass=1e10, wavelength=rb85.wavelength,
                        gamma_total=rb85.gamma_total, gamma_l=rb85.gamma_l,
                        gamma_g=0.0, gamma_e=0.0,
                        hyperfine_splitting=rb85.hyperfine_splitting)
    laser = LaserConfig.for_species(heavy, delta_two=0.0)
    # optical carriers are ~2e15 rad/s, so the cancellation leaves O(1) roundoff
    assert effective_two_photon_detuning(laser, heavy, 0.0) == pytest.approx(0.0, abs=1.0)


def test_two_photon_detuning_recoil_term(rb85):
    laser = LaserConfig.for_species(rb85, delta_two=0.0)
    delta = effective_two_photon_detuning(laser, rb85, 0.0)
    # pure recoil shift, magnitude ~ 2*pi*15.4 kHz
    assert abs(delta) / TWO_PI == pytest.approx(15.35e3, rel=0.01)


def test_two_photon_detuning_doppler_term(rb85):
    laser = LaserConfig.for_species(rb85, delta_two=0.0)
    v = 1e-2
    d0 = effective_two_photon_detuning(laser, rb85, 0.0)
    dv = effective_two_photon_detuning(laser, rb85, v)
    assert dv - d0 == pytest.approx(laser.k_eff * v, rel=1e-9)


def test_calibrated_pi_time_matches_table(rb85):
    laser = LaserConfig.for_species(rb85, delta_single=TWO_PI * 9e9)
    assert calibrated_pi_time(laser) == pytest.approx(2.00e-6, rel=0.02)


def test_config_validation(rb85):
    with pytest.raises(ValueError):
        default_config(n_samples=1)
    with pytest.raises(ValueError):
        default_config(epsilon_m=1.0)


def test_with_detunings_recalibrates():
    cfg = default_config(n_r=3)
    cfg2 = cfg.with_detunings(delta_single=TWO_PI * 3.5e9)
    assert cfg2.sequence.t_pi == pytest.approx(calibrated_pi_time(cfg2.laser), rel=1e-12)
    assert cfg2.sequence.n_r == 3

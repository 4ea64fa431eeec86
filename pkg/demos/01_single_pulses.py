"""Single Raman pulses: transfer fidelity, spontaneous loss, bookkeeping.

Walks one atom through individual pi and pi/2 pulses at the published
Rb-85 parameters and shows how the accumulated loss Q tracks the decay
of the retained population.
"""

import numpy as np

from ramanlmt import (
    AtomSpecies,
    LaserConfig,
    PulseKind,
    QuantumState,
    analytical_q,
    apply_pulse,
    calibrated_pi_time,
)

species = AtomSpecies.rubidium85()
lossless = AtomSpecies(mass=species.mass, wavelength=species.wavelength,
                       gamma_total=0.0, gamma_l=0.0, gamma_g=0.0, gamma_e=0.0,
                       hyperfine_splitting=species.hyperfine_splitting)

print("== pulse calibration ==")
for ghz in (2, 3.5, 9, 20):
    laser = LaserConfig.for_species(species, delta_single=2 * np.pi * ghz * 1e9)
    print(f"  Delta = {ghz:>4} GHz: calibrated t_pi = {calibrated_pi_time(laser)*1e6:.3f} us")

laser = LaserConfig.for_species(species, delta_single=2 * np.pi * 9e9)
t_pi = calibrated_pi_time(laser)

print("\n== ideal (lossless) transfers at Delta = 9 GHz ==")
st = QuantumState.initial()
full = apply_pulse(st, PulseKind.PI, t_pi, laser, lossless)
half = apply_pulse(st, PulseKind.HALF_PI, t_pi / 2, laser, lossless)
print(f"  pi pulse:   |c_e|^2 = {abs(full.c_e)**2:.6f}")
print(f"  pi/2 pulse: |c_e|^2 = {abs(half.c_e)**2:.6f}")

print("\n== open-system pulse: population decays at the analytic loss rate ==")
out = apply_pulse(st, PulseKind.PI, t_pi, laser, species)
retained = abs(out.c_g) ** 2 + abs(out.c_e) ** 2
print(f"  retained population: {retained:.8f}")
print(f"  accumulated Q:       {out.q_tot:.3e}")
print(f"  closure |c_g|^2 + |c_e|^2 + Q = {retained + out.q_tot:.8f}")

print("\n== per-pulse loss at the experiment-like operating points ==")
for ghz, khz, label in ((3.5, 52.0, "Delta=3.5 GHz, delta=52 kHz"),
                        (2.0, 63.0, "Delta=2.0 GHz, delta=63 kHz"),
                        (9.0, 0.0, "Delta=9.0 GHz, delta=0")):
    las = LaserConfig.for_species(species, delta_single=2 * np.pi * ghz * 1e9,
                                  delta_two=2 * np.pi * khz * 1e3)
    tp = calibrated_pi_time(las)
    q = analytical_q(np.sqrt(0.5), -1j * np.sqrt(0.5), las, species, tp)
    print(f"  {label}: Q per pi pulse = {q*100:.3f} %")

"""Error analysis for LMT multi-Raman-pulse atom interferometer accelerometry.

An open-system simulator for the spontaneous decay of the intermediate
state during large-momentum-transfer Raman pulse sequences, with the
statistics chain that turns population outcomes into an acceleration
error figure of merit.
"""

from .model import (
    AtomSpecies,
    LaserConfig,
    PulseCalibration,
    PulseKind,
    PulseSequence,
    QMode,
    Segment,
    SimulationConfig,
    alpha_scale,
    build_sequence,
    calibrated_pi_time,
    default_config,
    effective_two_photon_detuning,
)
from .dynamics import (
    QuantumState,
    RunOutcome,
    amplitude_derivatives,
    apply_pulse,
    free_evolve,
    intermediate_amplitude,
    run_interferometer,
)
from .stats import (
    ErrorBudget,
    PopulationStats,
    accel_error_budget,
    accel_variance_poisson,
    analytical_q,
    covariance_ce_q,
    phase_variance,
    ratio_moments,
    variance_q,
)

__version__ = "0.1.0"

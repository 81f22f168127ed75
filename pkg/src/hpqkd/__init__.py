"""Sideband-interference QKD with keystream-driven mesoscopic polarization.

Physics core (``optics``, ``polarization``), adversary models (``attacks``),
the shared-key pipeline (``keystream``), the four-mode session engine
(``protocol``), and the scenario-driven CLI (``cli``).
"""

__version__ = "0.1.0"

from .optics import (
    FiberLink,
    ModulationPlan,
    SidebandSpectrum,
    TimeDomainField,
    alice_field_exact,
    alice_intensity_small_signal,
    propagate,
    sideband_intensities_closed_form,
    sideband_intensities_oracle,
    tuned_fiber,
)
from .polarization import (
    DetectionEvent,
    StokesSummary,
    TwoModeCoherentState,
    overlap_exact,
    overlap_small_angle,
    pbs_measure,
    rotate,
    stokes_monte_carlo,
    stokes_summary,
)
from .attacks import (
    AttackOutcome,
    BruteForceConfig,
    PnsModel,
    amplifier_attack,
    attack_success_curve,
    bob_anomaly_monitor,
    brute_force_identify,
    pns_exploitable_fraction,
)
from .keystream import (
    BasisSchedule,
    ExpandedKey,
    SeedKey,
    bob_decode,
    build_basis_schedule,
    expand_key,
    generate_r,
)
from .protocol import (
    ChannelModel,
    SessionConfig,
    SessionReport,
    compute_qber,
    detection_split,
    run_baseline_bb84,
    run_hybrid,
    run_hybrid_parallel,
    run_parallel,
    run_session,
)

__all__ = [
    "__version__",
    "FiberLink",
    "ModulationPlan",
    "SidebandSpectrum",
    "TimeDomainField",
    "alice_field_exact",
    "alice_intensity_small_signal",
    "propagate",
    "sideband_intensities_closed_form",
    "sideband_intensities_oracle",
    "tuned_fiber",
    "DetectionEvent",
    "StokesSummary",
    "TwoModeCoherentState",
    "overlap_exact",
    "overlap_small_angle",
    "pbs_measure",
    "rotate",
    "stokes_monte_carlo",
    "stokes_summary",
    "AttackOutcome",
    "BruteForceConfig",
    "PnsModel",
    "amplifier_attack",
    "attack_success_curve",
    "bob_anomaly_monitor",
    "brute_force_identify",
    "pns_exploitable_fraction",
    "BasisSchedule",
    "ExpandedKey",
    "SeedKey",
    "bob_decode",
    "build_basis_schedule",
    "expand_key",
    "generate_r",
    "ChannelModel",
    "SessionConfig",
    "SessionReport",
    "compute_qber",
    "detection_split",
    "run_baseline_bb84",
    "run_hybrid",
    "run_hybrid_parallel",
    "run_parallel",
    "run_session",
]

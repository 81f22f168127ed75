"""End-to-end key distribution sessions over a lossy photonic channel.

Four modes share one detection model: a plain sifted single-channel session
(``baseline_bb84``), the keystream-assisted single channel with no sifting
(``hybrid``), two sideband channels running side by side (``parallel``), and
the keystream-assisted two-channel composition (``hybrid_parallel``) whose
useful-bit rate reaches four times the baseline.
"""
from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import keystream as ks
from .optics import (
    FiberLink,
    ModulationPlan,
    require_tuned,
    split_upper_probability,
)

MODES = ("baseline_bb84", "hybrid", "parallel", "hybrid_parallel")

#: XORed into the session seed to derive the internal reference-baseline run
#: used for the rate-ratio field.
_COMPANION_SALT = 0x9E3779B97F4A7C15

_HALF_PI = np.pi / 2

#: Fixed spawn order of the per-role random streams; slot randomness is
#: consumed as arrays indexed by slot, so results do not depend on how slot
#: processing is batched.
_ROLES = (
    "alice_bits_ch1",
    "alice_bits_ch2",
    "alice_bases_ch1",
    "alice_bases_ch2",
    "bob_bases_ch1",
    "bob_bases_ch2",
    "photons_ch1",
    "photons_ch2",
    "routing_ch1",
    "routing_ch2",
    "dark_upper_ch1",
    "dark_lower_ch1",
    "dark_upper_ch2",
    "dark_lower_ch2",
    "r_entropy",
    "meso_channel",
)


class SecurityConditionWarning(UserWarning):
    """Mesoscopic intensity is not small against the basis count."""


@dataclass(frozen=True)
class ChannelModel:
    """Loss, detectors, and pulse intensities of the optical link."""

    length_km: float = 0.0
    loss_db_per_km: float = 0.2
    detector_efficiency: float = 1.0
    dark_count_prob: float = 0.0
    mu_weak: float = 0.5
    alpha_sq_meso: float = 25.0
    m_bases: int = 256

    def __post_init__(self):
        if self.length_km < 0 or self.loss_db_per_km < 0:
            raise ValueError("link length and loss must be >= 0")
        for name in ("detector_efficiency", "dark_count_prob"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must be a probability")
        if self.mu_weak < 0 or self.alpha_sq_meso < 0:
            raise ValueError("pulse intensities must be >= 0")
        ks.bits_per_slot(self.m_bases)  # power-of-two check
        if self.alpha_sq_meso >= self.m_bases:
            warnings.warn(
                f"alpha_sq_meso={self.alpha_sq_meso:g} >= M={self.m_bases}: "
                "the polarization channel is exposed to brute-force "
                "identification (needs |alpha|^2 << M)",
                SecurityConditionWarning,
                stacklevel=2,
            )

    @property
    def survival_probability(self) -> float:
        """Per-photon probability of reaching and firing a detector."""
        return self.detector_efficiency * 10 ** (-self.loss_db_per_km * self.length_km / 10)


@dataclass(frozen=True)
class SessionConfig:
    """Everything needed to reproduce one session bit for bit."""

    mode: str
    num_slots: int
    channel: ChannelModel
    plan: ModulationPlan
    fiber: FiberLink
    seed: int
    basis_flip_fault_fraction: float = 0.0
    seed_key_hex: str | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.num_slots < 1:
            raise ValueError("num_slots must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if not 0 <= self.basis_flip_fault_fraction <= 1:
            raise ValueError("basis_flip_fault_fraction must be in [0, 1]")

    def resolved_seed_key(self) -> ks.SeedKey:
        if self.seed_key_hex is not None:
            return ks.SeedKey.from_hex(self.seed_key_hex)
        raw = hashlib.blake2b(self.seed.to_bytes(8, "big"), digest_size=16).digest()
        return ks.SeedKey.from_bytes(raw)


@dataclass(frozen=True)
class ChannelReport:
    channel: int
    raw_detections: int
    sifted_bits: int
    qber: float
    useful_rate_bits_per_slot: float
    basis_agreement: float | None = None

    def to_dict(self) -> dict:
        out = {
            "channel": self.channel,
            "raw_detections": self.raw_detections,
            "sifted_bits": self.sifted_bits,
            "qber": self.qber,
            "useful_rate_bits_per_slot": self.useful_rate_bits_per_slot,
        }
        if self.basis_agreement is not None:
            out["basis_agreement"] = self.basis_agreement
        return out


@dataclass(frozen=True)
class SessionReport:
    """Aggregated session accounting; field names are frozen (see README)."""

    mode: str
    seed: int
    slots: int
    usable_slots: int
    raw_detections: int
    sifted_bits: int
    double_click_erasures: int
    meso_erasures: int
    qber: float
    useful_rate_bits_per_slot: float
    rate_ratio_vs_baseline: float | None
    per_channel: tuple[ChannelReport, ...]
    public_transcript: dict

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "slots": self.slots,
            "usable_slots": self.usable_slots,
            "raw_detections": self.raw_detections,
            "sifted_bits": self.sifted_bits,
            "double_click_erasures": self.double_click_erasures,
            "meso_erasures": self.meso_erasures,
            "qber": self.qber,
            "useful_rate_bits_per_slot": self.useful_rate_bits_per_slot,
            "rate_ratio_vs_baseline": self.rate_ratio_vs_baseline,
            "per_channel": [c.to_dict() for c in self.per_channel],
            "public_transcript": self.public_transcript,
        }


def compute_qber(alice_bits, bob_bits, matched_slots) -> float:
    """Fraction of matched slots whose bits disagree."""
    alice_bits = np.asarray(alice_bits)
    bob_bits = np.asarray(bob_bits)
    matched = np.asarray(matched_slots, dtype=bool)
    if len(alice_bits) == 0:
        raise ValueError("empty bit sequences")
    if not (len(alice_bits) == len(bob_bits) == len(matched)):
        raise ValueError("aligned sequences must share one length")
    if not matched.any():
        raise ValueError("no matched slots to compare")
    return float(np.mean(alice_bits[matched] != bob_bits[matched]))


def detection_split(
    delta_phi: float,
    channel: int,
    plan: ModulationPlan,
    fiber: FiberLink,
    channel_model: ChannelModel,
    rng: np.random.Generator,
) -> str:
    """Single-slot detector outcome: 'upper', 'lower', 'none', or 'both'.

    A surviving weak pulse routes to one sideband detector with the
    normalized closed-form split for the channel; dark counts click each
    detector independently.  Scalar reference for the vectorized session
    internals, which follow the same law.
    """
    p_upper = split_upper_probability(plan, fiber, channel, delta_phi)
    mu = channel_model.mu_weak * channel_model.survival_probability if p_upper is not None else 0.0
    signal = rng.poisson(mu) > 0
    to_upper = rng.random() < (float(p_upper) if p_upper is not None else 0.5)
    upper = (signal and to_upper) or (rng.random() < channel_model.dark_count_prob)
    lower = (signal and not to_upper) or (rng.random() < channel_model.dark_count_prob)
    if upper and lower:
        return "both"
    if upper:
        return "upper"
    if lower:
        return "lower"
    return "none"


def _streams(seed: int) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(len(_ROLES))
    return {role: np.random.default_rng(c) for role, c in zip(_ROLES, children)}


def _flip_mask(config: SessionConfig) -> np.ndarray:
    flipped = round(config.basis_flip_fault_fraction * config.num_slots)
    return np.arange(config.num_slots) < flipped


@dataclass
class _ChannelRun:
    alice_bits: np.ndarray
    click_upper: np.ndarray
    click_lower: np.ndarray
    conclusive: np.ndarray
    bob_bits: np.ndarray


def _run_channel(
    config: SessionConfig,
    streams: dict,
    channel: int,
    alice_basis: np.ndarray,
    bob_basis_actual: np.ndarray,
) -> _ChannelRun:
    """Detection pass of one sideband channel for the given basis choices."""
    n = config.num_slots
    ch = config.channel
    bits = streams[f"alice_bits_ch{channel}"].integers(0, 2, n, dtype=np.uint8)
    delta_phi = (alice_basis * _HALF_PI + bits * np.pi) - bob_basis_actual * _HALF_PI

    p_upper = split_upper_probability(config.plan, config.fiber, channel, delta_phi)
    if p_upper is None:
        mu = 0.0
        p_upper = np.full(n, 0.5)
        upper_bit = 0
    else:
        mu = ch.mu_weak * ch.survival_probability
        at_zero = split_upper_probability(config.plan, config.fiber, channel, 0.0)
        upper_bit = 0 if at_zero >= 0.5 else 1

    signal = streams[f"photons_ch{channel}"].poisson(mu, n) > 0
    to_upper = streams[f"routing_ch{channel}"].random(n) < p_upper
    dark_u = streams[f"dark_upper_ch{channel}"].random(n) < ch.dark_count_prob
    dark_l = streams[f"dark_lower_ch{channel}"].random(n) < ch.dark_count_prob
    click_upper = (signal & to_upper) | dark_u
    click_lower = (signal & ~to_upper) | dark_l
    conclusive = click_upper ^ click_lower
    bob_bits = np.where(click_upper, upper_bit, 1 - upper_bit).astype(np.uint8)
    return _ChannelRun(bits, click_upper, click_lower, conclusive, bob_bits)


def _channel_report(channel, run, kept, usable_count) -> ChannelReport:
    sifted = int(kept.sum())
    qber = (
        compute_qber(run.alice_bits, run.bob_bits, kept) if sifted else 0.0
    )
    return ChannelReport(
        channel=channel,
        raw_detections=int(run.conclusive.sum()),
        sifted_bits=sifted,
        qber=qber,
        useful_rate_bits_per_slot=sifted / usable_count if usable_count else 0.0,
    )


def _hex_bits(bits: np.ndarray) -> str:
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes().hex()


def _assemble(config, channel_reports, usable_slots, meso_erasures, transcript, ratio) -> SessionReport:
    raw = sum(c.raw_detections for c in channel_reports)
    sifted = sum(c.sifted_bits for c in channel_reports)
    errors = sum(c.qber * c.sifted_bits for c in channel_reports)
    rate = sum(c.useful_rate_bits_per_slot for c in channel_reports)
    double_clicks = transcript.pop("_double_clicks")
    return SessionReport(
        mode=config.mode,
        seed=config.seed,
        slots=config.num_slots,
        usable_slots=usable_slots,
        raw_detections=raw,
        sifted_bits=sifted,
        double_click_erasures=double_clicks,
        meso_erasures=meso_erasures,
        qber=errors / sifted if sifted else 0.0,
        useful_rate_bits_per_slot=rate,
        rate_ratio_vs_baseline=ratio,
        per_channel=tuple(channel_reports),
        public_transcript=transcript,
    )


def _ratio(config: SessionConfig, rate: float) -> float | None:
    """Rate against an internal reference baseline run (salted seed).

    None when the reference rate is zero (a dead channel has no meaningful
    multiplier); reports stay strict-JSON serializable either way.
    """
    companion = replace(
        config,
        mode="baseline_bb84",
        seed=config.seed ^ _COMPANION_SALT,
        basis_flip_fault_fraction=0.0,
    )
    reference = run_baseline_bb84(companion).useful_rate_bits_per_slot
    return rate / reference if reference > 0 else None


def run_baseline_bb84(config: SessionConfig) -> SessionReport:
    """Single sideband channel with random independent bases and sifting.

    Matched bases give a fringe phase of 0 or pi (deterministic detector),
    mismatched bases give +-pi/2 (an even split); sifting keeps only the
    matched conclusive slots, which costs half the detections on an ideal
    channel.
    """
    if config.mode != "baseline_bb84":
        raise ValueError(f"config mode is {config.mode!r}, not 'baseline_bb84'")
    streams = _streams(config.seed)
    n = config.num_slots
    alice_basis = streams["alice_bases_ch1"].integers(0, 2, n, dtype=np.uint8)
    bob_basis = streams["bob_bases_ch1"].integers(0, 2, n, dtype=np.uint8)
    bob_actual = bob_basis ^ _flip_mask(config)
    run = _run_channel(config, streams, 1, alice_basis, bob_actual)

    matched = alice_basis == bob_basis
    kept = matched & run.conclusive
    report = _channel_report(1, run, kept, n)
    transcript = {
        "_double_clicks": int((run.click_upper & run.click_lower).sum()),
        "erasure_slots": [],
        "announced_bases": {
            "alice_ch1": _hex_bits(alice_basis),
            "bob_ch1": _hex_bits(bob_basis),
        },
    }
    return _assemble(config, [report], n, 0, transcript, 1.0)


def _meso_leg(config: SessionConfig, streams, r_bits: np.ndarray):
    """Distribute the basis stream over the mesoscopic polarization channel."""
    ch = config.channel
    kprime = ks.expand_key(
        config.resolved_seed_key(), len(r_bits) * ks.bits_per_slot(ch.m_bases)
    )
    schedule = ks.build_basis_schedule(kprime, r_bits, ch.m_bases)
    events = ks.simulate_meso_transmission(
        schedule,
        ch.alpha_sq_meso,
        streams["meso_channel"],
        survival=ch.survival_probability,
        dark_count_prob=ch.dark_count_prob,
    )
    return ks.bob_decode(kprime, events, ch.m_bases)


def run_hybrid(config: SessionConfig) -> SessionReport:
    """Keystream-assisted single channel: bases always agree, no sifting.

    The data stream R reaches the receiver over the mesoscopic polarization
    channel; both parties then use R as the basis sequence of the weak-pulse
    channel, so every conclusive slot yields a key bit.  Slots whose
    mesoscopic decode was an erasure are reconciled publicly by index and
    excluded from rate accounting on both sides.
    """
    if config.mode != "hybrid":
        raise ValueError(f"config mode is {config.mode!r}, not 'hybrid'")
    streams = _streams(config.seed)
    n = config.num_slots
    r_bits = ks.generate_r(n, streams["r_entropy"])
    decoded = _meso_leg(config, streams, r_bits)
    usable = ~decoded.erasure

    bob_actual = decoded.bits ^ _flip_mask(config)
    run = _run_channel(config, streams, 1, r_bits, bob_actual)
    kept = usable & run.conclusive
    usable_count = int(usable.sum())
    report = replace(
        _channel_report(1, run, kept, usable_count),
        basis_agreement=float(np.mean(decoded.bits[usable] == r_bits[usable])) if usable_count else 0.0,
    )
    transcript = {
        "_double_clicks": int((run.click_upper & run.click_lower).sum()),
        "erasure_slots": np.flatnonzero(decoded.erasure).tolist(),
    }
    ratio = _ratio(config, report.useful_rate_bits_per_slot)
    return _assemble(config, [report], usable_count, int(decoded.erasure.sum()), transcript, ratio)


def run_parallel(config: SessionConfig) -> SessionReport:
    """Two independent sifted sessions sharing slots on the two RF channels.

    Requires the link phases tuned so each channel realizes its
    deterministic matched-basis split (with the upper/lower orientation
    swapped between channels).
    """
    if config.mode != "parallel":
        raise ValueError(f"config mode is {config.mode!r}, not 'parallel'")
    require_tuned(config.plan, config.fiber)
    streams = _streams(config.seed)
    n = config.num_slots
    flip = _flip_mask(config)

    reports = []
    double_clicks = 0
    announced = {}
    for channel in (1, 2):
        alice_basis = streams[f"alice_bases_ch{channel}"].integers(0, 2, n, dtype=np.uint8)
        bob_basis = streams[f"bob_bases_ch{channel}"].integers(0, 2, n, dtype=np.uint8)
        run = _run_channel(config, streams, channel, alice_basis, bob_basis ^ flip)
        kept = (alice_basis == bob_basis) & run.conclusive
        reports.append(_channel_report(channel, run, kept, n))
        double_clicks += int((run.click_upper & run.click_lower).sum())
        announced[f"alice_ch{channel}"] = _hex_bits(alice_basis)
        announced[f"bob_ch{channel}"] = _hex_bits(bob_basis)

    transcript = {
        "_double_clicks": double_clicks,
        "erasure_slots": [],
        "announced_bases": announced,
    }
    rate = sum(r.useful_rate_bits_per_slot for r in reports)
    ratio = _ratio(config, rate)
    return _assemble(config, reports, n, 0, transcript, ratio)


def run_hybrid_parallel(config: SessionConfig) -> SessionReport:
    """Keystream-assisted bases on both channels at once: the 4x composition.

    One R stream drives both channels, consumed in fixed interleaved order
    (channel 1 then channel 2 within each slot); the final key is the
    channel-1 key followed by the channel-2 key.
    """
    if config.mode != "hybrid_parallel":
        raise ValueError(f"config mode is {config.mode!r}, not 'hybrid_parallel'")
    require_tuned(config.plan, config.fiber)
    streams = _streams(config.seed)
    n = config.num_slots
    flip = _flip_mask(config)

    r_bits = ks.generate_r(2 * n, streams["r_entropy"])
    decoded = _meso_leg(config, streams, r_bits)

    reports = []
    double_clicks = 0
    usable_counts = []
    for channel in (1, 2):
        sel = slice(channel - 1, None, 2)
        r_ch = r_bits[sel]
        bob_ch = decoded.bits[sel]
        usable = ~decoded.erasure[sel]
        run = _run_channel(config, streams, channel, r_ch, bob_ch ^ flip)
        kept = usable & run.conclusive
        usable_count = int(usable.sum())
        usable_counts.append(usable_count)
        reports.append(
            replace(
                _channel_report(channel, run, kept, usable_count),
                basis_agreement=float(np.mean(bob_ch[usable] == r_ch[usable])) if usable_count else 0.0,
            )
        )
        double_clicks += int((run.click_upper & run.click_lower).sum())

    # Erasure indices refer to the interleaved key-stream sequence, so the
    # reconciliation list stays unambiguous across the two channels.
    transcript = {
        "_double_clicks": double_clicks,
        "erasure_slots": np.flatnonzero(decoded.erasure).tolist(),
    }
    rate = sum(r.useful_rate_bits_per_slot for r in reports)
    ratio = _ratio(config, rate)
    return _assemble(
        config, reports, min(usable_counts), int(decoded.erasure.sum()), transcript, ratio
    )


_RUNNERS = {
    "baseline_bb84": run_baseline_bb84,
    "hybrid": run_hybrid,
    "parallel": run_parallel,
    "hybrid_parallel": run_hybrid_parallel,
}


def run_session(config: SessionConfig) -> SessionReport:
    """Dispatch to the mode-specific runner."""
    return _RUNNERS[config.mode](config)

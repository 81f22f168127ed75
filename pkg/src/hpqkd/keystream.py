"""Shared-key expansion and the quadrant codification of basis angles.

A pre-shared secret key seeds a deterministic keystream; consecutive
log2(M)-bit words of the expanded key select one of M first-quadrant basis
angles per slot, and a fresh random bit stream picks the quadrant through
the parity rule, encoding one bit in each transmitted polarization.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .polarization import DetectionEvent

#: Identifier of the key-expansion keystream: 32-byte blocks of
#: blake2b(key=seed, data=block_index as 8-byte big-endian).
KEYSTREAM_GENERATOR_ID = "blake2b256-ctr-v1"

_MIN_SEED_BITS = 64
_BLOCK_BYTES = 32


@dataclass(frozen=True)
class SeedKey:
    """Pre-shared secret key of at least 64 bits."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8)
        if bits.ndim != 1 or not np.all((bits == 0) | (bits == 1)):
            raise ValueError("bits must be a flat 0/1 sequence")
        if len(bits) < _MIN_SEED_BITS:
            raise ValueError(f"seed key must hold at least {_MIN_SEED_BITS} bits")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_bytes(cls, raw: bytes) -> "SeedKey":
        return cls(bits=np.unpackbits(np.frombuffer(raw, dtype=np.uint8)))

    @classmethod
    def from_hex(cls, hexstr: str) -> "SeedKey":
        return cls.from_bytes(bytes.fromhex(hexstr))

    def to_bytes(self) -> bytes:
        return np.packbits(self.bits).tobytes()

    def fingerprint(self) -> str:
        return hashlib.blake2b(self.to_bytes(), digest_size=8).hexdigest()


@dataclass(frozen=True)
class ExpandedKey:
    """Deterministic keystream expansion of a SeedKey."""

    bits: np.ndarray
    generator_id: str
    seed_fingerprint: str

    def __len__(self) -> int:
        return len(self.bits)


def expand_key(seed: SeedKey, target_bits: int) -> ExpandedKey:
    """Expand the seed into ``target_bits`` keystream bits.

    Counter-mode construction over the blake2b keyed permutation: block i is
    blake2b(key=seed_bytes, data=big_endian_64(i)).  Identical inputs always
    yield identical bits, so transmitter and receiver derive the same stream.
    """
    if target_bits < 1:
        raise ValueError("target_bits must be >= 1")
    key = seed.to_bytes()
    blocks = (target_bits + 8 * _BLOCK_BYTES - 1) // (8 * _BLOCK_BYTES)
    stream = b"".join(
        hashlib.blake2b(i.to_bytes(8, "big"), key=key, digest_size=_BLOCK_BYTES).digest()
        for i in range(blocks)
    )
    bits = np.unpackbits(np.frombuffer(stream, dtype=np.uint8))[:target_bits]
    return ExpandedKey(
        bits=bits,
        generator_id=KEYSTREAM_GENERATOR_ID,
        seed_fingerprint=seed.fingerprint(),
    )


def generate_r(length: int, entropy_source: np.random.Generator) -> np.ndarray:
    """Data bits carried by the polarization channel.

    Stands in for a true-random source; inject a dedicated generator,
    distinct from the keystream, so simulations stay reproducible.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    return entropy_source.integers(0, 2, length, dtype=np.uint8)


def slot_count(expanded_bits: int, m_bases: int) -> int:
    """Slots obtainable from an expanded key: floor(bits / log2(M))."""
    return expanded_bits // bits_per_slot(m_bases)


def bits_per_slot(m_bases: int) -> int:
    if m_bases < 2 or m_bases & (m_bases - 1):
        raise ValueError("m_bases must be a power of two, >= 2")
    return m_bases.bit_length() - 1


@dataclass(frozen=True)
class BasisSchedule:
    """Per-slot basis index, transmit angle, and encoded bit.

    ``basis_index`` is the log2(M)-bit word D read big-endian from the
    expanded key; the first-quadrant angle of basis D is D*pi/(2*M) and its
    orthogonal partner sits a quarter turn away.  The transmitted angle is
    in the first quadrant exactly when parity(D) XOR bit == 0.
    """

    m_bases: int
    basis_index: np.ndarray
    angle: np.ndarray
    bit: np.ndarray

    def __len__(self) -> int:
        return len(self.basis_index)

    def analyzer_angles(self) -> np.ndarray:
        """First-quadrant analyzer setting for each slot (receiver side)."""
        return first_quadrant_angle(self.basis_index, self.m_bases)


def first_quadrant_angle(basis_index, m_bases: int) -> np.ndarray:
    return np.asarray(basis_index) * np.pi / (2 * m_bases)


def _basis_words(kprime: ExpandedKey, m_bases: int) -> np.ndarray:
    bits_per = bits_per_slot(m_bases)
    slots = len(kprime.bits) // bits_per
    words = kprime.bits[: slots * bits_per].reshape(slots, bits_per)
    weights = 1 << np.arange(bits_per - 1, -1, -1)
    return words @ weights


def build_basis_schedule(kprime: ExpandedKey, r: np.ndarray, m_bases: int) -> BasisSchedule:
    """Map key words and data bits to transmit angles via the parity rule.

    Even basis word and bit 0 (or odd word and bit 1) put the polarization in
    the first quadrant; the other two combinations select the orthogonal
    partner in the second quadrant.
    """
    r = np.asarray(r, dtype=np.uint8)
    words = _basis_words(kprime, m_bases)
    if len(r) != len(words):
        raise ValueError(
            f"data length {len(r)} != floor(|K'| / log2(M)) = {len(words)}"
        )
    second_quadrant = (words % 2).astype(np.uint8) ^ r
    angle = first_quadrant_angle(words, m_bases) + second_quadrant * (np.pi / 2)
    return BasisSchedule(m_bases=m_bases, basis_index=words, angle=angle, bit=r)


@dataclass(frozen=True)
class DecodedBits:
    """Receiver-side recovery of the data bits, with erasure flags.

    ``erasure`` marks slots whose detection was inconclusive (no click or
    clicks in both arms); ``bits`` is only meaningful where ``erasure`` is
    False.
    """

    bits: np.ndarray
    erasure: np.ndarray


def bob_decode(kprime: ExpandedKey, events, m_bases: int) -> DecodedBits:
    """Decode detection events using the shared basis words.

    The receiver rebuilds each slot's basis word from the expanded key and
    analyzes at the first-quadrant angle, so a transmit-arm click decodes to
    the bit that maps to the first quadrant for that word's parity and a
    reflect-arm click to the other bit.
    """
    events = list(events)
    words = _basis_words(kprime, m_bases)
    if len(events) != len(words):
        raise ValueError(f"got {len(events)} events for {len(words)} slots")
    counts_t = np.array([e.counts_transmit for e in events])
    counts_r = np.array([e.counts_reflect for e in events])
    return _decode_counts(words, counts_t, counts_r)


def _decode_counts(words: np.ndarray, counts_t: np.ndarray, counts_r: np.ndarray) -> DecodedBits:
    clicked_t = counts_t > 0
    clicked_r = counts_r > 0
    erasure = ~(clicked_t ^ clicked_r)
    parity = (words % 2).astype(np.uint8)
    bits = np.where(clicked_r, parity ^ 1, parity).astype(np.uint8)
    return DecodedBits(bits=bits, erasure=erasure)


def simulate_meso_transmission(
    schedule: BasisSchedule,
    alpha_sq: float,
    rng: np.random.Generator,
    survival: float = 1.0,
    dark_count_prob: float = 0.0,
) -> list[DetectionEvent]:
    """Send the schedule as mesoscopic pulses and detect at the shared basis.

    Each slot carries a coherent pulse of mean photon number ``alpha_sq`` at
    the scheduled angle; ``survival`` thins the Poisson mean (loss and
    detector efficiency) and ``dark_count_prob`` adds a spurious count per
    arm.  The analyzer always sits at the slot's first-quadrant angle, so
    signal photons land entirely in one arm.
    """
    if alpha_sq < 0 or not 0 <= survival <= 1:
        raise ValueError("alpha_sq must be >= 0 and survival a probability")
    n = len(schedule)
    mean = alpha_sq * survival
    aligned = schedule.angle < np.pi / 2  # transmit arm iff first quadrant
    signal = rng.poisson(mean, n)
    dark_t = rng.random(n) < dark_count_prob
    dark_l = rng.random(n) < dark_count_prob
    counts_t = np.where(aligned, signal, 0) + dark_t
    counts_r = np.where(aligned, 0, signal) + dark_l
    return [DetectionEvent(int(t), int(r)) for t, r in zip(counts_t, counts_r)]


def schedule_records(schedule: BasisSchedule) -> str:
    """Columnar text export (slot, basis word, angle, bit) for cross-checks."""
    lines = ["slot\tbasis_index\tangle_rad\tbit"]
    for i in range(len(schedule)):
        lines.append(
            f"{i}\t{int(schedule.basis_index[i])}\t{float(schedule.angle[i])!r}\t{int(schedule.bit[i])}"
        )
    return "\n".join(lines) + "\n"

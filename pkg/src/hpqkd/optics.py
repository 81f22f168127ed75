"""Two-tone sideband interferometry.

Alice drives a Mach-Zehnder amplitude modulator with two RF tones, the light
propagates over a dispersionless fiber link, and Bob phase-modulates with the
same two tones before sideband-selective detection.  The module provides both
the first-order closed-form sideband intensities and an exact time-domain
spectral oracle that synthesizes the full field and extracts tone powers by
discrete Fourier projection.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s

#: Modulation depths above this are outside the small-signal regime; the
#: closed forms degrade as O(m^2).  A warning, never an error.
SMALL_SIGNAL_LIMIT = 0.2

#: Link phases must match pi/2 (channel 1) and 3*pi/2 (channel 2) mod 2*pi
#: within this tolerance for the cos^2/sin^2 detection law to apply.
TUNING_TOLERANCE = 1e-6  # rad

DEFAULT_ORACLE_SAMPLES = 2**14


class OpticsNotTunedError(ValueError):
    """Link phases violate the pi/2 / 3*pi/2 tuning condition."""


class SmallSignalWarning(UserWarning):
    """A modulation depth exceeds the small-signal validity range."""


@dataclass(frozen=True)
class ModulationPlan:
    """All modulator and carrier parameters for one two-tone configuration.

    ``m1``/``m2`` are Alice's amplitude-modulation depths for tones
    ``omega1``/``omega2``; ``m3``/``m4`` are Bob's phase-modulation depths.
    ``psi1`` is the DC bias phase of Alice's Mach-Zehnder.  The RF phases
    ``phi*_a``/``phi*_b`` carry the protocol information.  All angles in rad,
    angular frequencies in rad/s, ``e0`` in arbitrary field units.
    """

    e0: float = 1.0
    omega0: float = 2 * np.pi * 193.4e12  # 1550 nm carrier, metadata only
    psi1: float = 3 * np.pi / 2
    m1: float = 0.1
    m2: float = 0.1
    m3: float = 0.05
    m4: float = 0.05
    omega1: float = 2 * np.pi * 1.0e9
    omega2: float = 2 * np.pi * 3.0e9
    phi1_a: float = 0.0
    phi2_a: float = 0.0
    phi1_b: float = 0.0
    phi2_b: float = 0.0

    def __post_init__(self):
        depths = (self.m1, self.m2, self.m3, self.m4)
        if any(m < 0 for m in depths):
            raise ValueError("modulation depths must be >= 0")
        if self.e0 < 0:
            raise ValueError("e0 must be >= 0")
        if self.omega1 <= 0 or self.omega2 <= 0:
            raise ValueError("RF frequencies must be positive")
        if self.omega1 == self.omega2:
            raise ValueError("omega1 and omega2 must differ (distinct sidebands)")
        if max(self.omega1, self.omega2) >= self.omega0 / 10:
            raise ValueError("RF tones must sit far below the optical carrier")
        if any(m > SMALL_SIGNAL_LIMIT for m in depths):
            warnings.warn(
                f"modulation depth > {SMALL_SIGNAL_LIMIT}: outside the "
                "small-signal regime, closed forms lose accuracy",
                SmallSignalWarning,
                stacklevel=2,
            )

    def with_phases(self, phi1_a=None, phi2_a=None, phi1_b=None, phi2_b=None) -> "ModulationPlan":
        """Copy of the plan with some RF phases replaced (sweep helper)."""
        kwargs = {}
        if phi1_a is not None:
            kwargs["phi1_a"] = phi1_a
        if phi2_a is not None:
            kwargs["phi2_a"] = phi2_a
        if phi1_b is not None:
            kwargs["phi1_b"] = phi1_b
        if phi2_b is not None:
            kwargs["phi2_b"] = phi2_b
        return replace(self, **kwargs)

    def delta_phi(self, channel: int) -> float:
        """RF phase difference Alice minus Bob for the given channel (1 or 2)."""
        if channel == 1:
            return self.phi1_a - self.phi1_b
        if channel == 2:
            return self.phi2_a - self.phi2_b
        raise ValueError("channel must be 1 or 2")


@dataclass(frozen=True)
class FiberLink:
    """Dispersionless fiber of length ``length_m`` and index ``refractive_index``.

    Propagation constants are derived, never stored: each spectral component
    at offset +-Omega from the carrier accumulates the relative phase
    +-(n/c)*Omega*L once the common carrier phase is removed.
    """

    length_m: float
    refractive_index: float = 1.5

    def __post_init__(self):
        if self.length_m < 0:
            raise ValueError("length_m must be >= 0")
        if self.refractive_index < 1:
            raise ValueError("refractive_index must be >= 1")

    def link_phase(self, omega: float) -> float:
        """Relative phase (n/c)*omega*L accumulated by a sideband at offset omega."""
        return self.refractive_index / SPEED_OF_LIGHT * omega * self.length_m


def tuned_fiber(plan: ModulationPlan, refractive_index: float = 1.5) -> FiberLink:
    """Shortest link satisfying (n/c)*Omega1*L = pi/2 and (n/c)*Omega2*L = 3*pi/2.

    Both conditions hold simultaneously only when Omega2 = 3*Omega1 (up to
    2*pi multiples of the link phases); raises OpticsNotTunedError otherwise.
    """
    length = (np.pi / 2) * SPEED_OF_LIGHT / (refractive_index * plan.omega1)
    fiber = FiberLink(length_m=length, refractive_index=refractive_index)
    if not is_tuned(plan, fiber):
        raise OpticsNotTunedError(
            "no single length tunes both channels; need omega2 = 3*omega1 "
            f"(got omega2/omega1 = {plan.omega2 / plan.omega1:g})"
        )
    return fiber


def _phase_distance(value: float, target: float) -> float:
    return abs((value - target + np.pi) % (2 * np.pi) - np.pi)


def tuning_offsets(plan: ModulationPlan, fiber: FiberLink) -> tuple[float, float]:
    """Distances (rad) of the two link phases from pi/2 and 3*pi/2, mod 2*pi."""
    return (
        _phase_distance(fiber.link_phase(plan.omega1), np.pi / 2),
        _phase_distance(fiber.link_phase(plan.omega2), 3 * np.pi / 2),
    )


def is_tuned(plan: ModulationPlan, fiber: FiberLink, tol: float = TUNING_TOLERANCE) -> bool:
    off1, off2 = tuning_offsets(plan, fiber)
    return off1 <= tol and off2 <= tol


def require_tuned(plan: ModulationPlan, fiber: FiberLink) -> None:
    if not is_tuned(plan, fiber):
        off1, off2 = tuning_offsets(plan, fiber)
        raise OpticsNotTunedError(
            f"link phases off tuning by {off1:.3e} rad (ch1) / {off2:.3e} rad (ch2)"
        )


@dataclass(frozen=True)
class SidebandSpectrum:
    """Optical power at the carrier and the four first-order sidebands.

    ``upper1``/``lower1`` sit at carrier +- omega1, ``upper2``/``lower2`` at
    carrier +- omega2.  Units of e0^2.
    """

    carrier: float
    upper1: float
    lower1: float
    upper2: float
    lower2: float

    def __post_init__(self):
        for name in ("carrier", "upper1", "lower1", "upper2", "lower2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} intensity must be >= 0")

    def channel_sum(self, channel: int) -> float:
        if channel == 1:
            return self.upper1 + self.lower1
        if channel == 2:
            return self.upper2 + self.lower2
        raise ValueError("channel must be 1 or 2")


@dataclass(frozen=True)
class TimeDomainField:
    """Baseband field samples on a uniform grid (carrier factor removed)."""

    sample_rate: float
    samples: np.ndarray

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.samples)) / self.sample_rate


def alice_field_exact(plan: ModulationPlan, t) -> np.ndarray:
    """Exact baseband field at the Mach-Zehnder output, no small-depth expansion.

    Returns (e0/2) * (1 + exp(j*psi1) * exp(j*[m1*cos(omega1*t + phi1_a)
    + m2*cos(omega2*t + phi2_a)])); the optical-carrier factor is omitted
    throughout (baseband convention).
    """
    t = np.asarray(t, dtype=float)
    drive = plan.m1 * np.cos(plan.omega1 * t + plan.phi1_a) + plan.m2 * np.cos(
        plan.omega2 * t + plan.phi2_a
    )
    return (plan.e0 / 2) * (1 + np.exp(1j * plan.psi1) * np.exp(1j * drive))


def alice_intensity_small_signal(plan: ModulationPlan, t) -> np.ndarray:
    """First-order modulator intensity: the small-signal expansion of |field|^2."""
    t = np.asarray(t, dtype=float)
    return (plan.e0**2 / 2) * (
        1
        + np.cos(plan.psi1)
        - plan.m1 * np.sin(plan.psi1) * np.cos(plan.omega1 * t + plan.phi1_a)
        - plan.m2 * np.sin(plan.psi1) * np.cos(plan.omega2 * t + plan.phi2_a)
    )


def propagate(plan: ModulationPlan, fiber: FiberLink) -> dict[str, float]:
    """Per-sideband phases accumulated over the link, relative to the carrier.

    The common carrier phase is removed; upper sidebands advance by
    +(n/c)*Omega*L, lower sidebands by the opposite sign.  Chromatic
    dispersion is not modeled.
    """
    chi1 = fiber.link_phase(plan.omega1)
    chi2 = fiber.link_phase(plan.omega2)
    return {"upper1": chi1, "lower1": -chi1, "upper2": chi2, "lower2": -chi2}


def _channel_terms(plan: ModulationPlan, fiber: FiberLink, channel: int):
    """(sum term, interference amplitude, link phase) of the fringe law."""
    if channel == 1:
        m_alice, m_bob, omega = plan.m1, plan.m3, plan.omega1
    elif channel == 2:
        m_alice, m_bob, omega = plan.m2, plan.m4, plan.omega2
    else:
        raise ValueError("channel must be 1 or 2")
    return m_alice**2 / 4 + m_bob**2, m_alice * m_bob, fiber.link_phase(omega)


def sideband_intensities_closed_form(plan: ModulationPlan, fiber: FiberLink) -> SidebandSpectrum:
    """First-order sideband powers after Bob's phase modulator.

    Per channel the upper/lower sidebands carry
    (e0^2/8) * [mA^2/4 + mB^2 +- mA*mB*sin((n/c)*Omega*L + dphi)], so their
    sum is fringe-phase independent and the visibility reaches 1 exactly at
    mA = 2*mB.  Derived at quadrature bias (psi1 = 3*pi/2); accuracy degrades
    at other bias points and at depths beyond the small-signal range.
    """
    scale = plan.e0**2 / 8
    out = {}
    for channel, names in ((1, ("upper1", "lower1")), (2, ("upper2", "lower2"))):
        s, v, chi = _channel_terms(plan, fiber, channel)
        fringe = v * np.sin(chi + plan.delta_phi(channel))
        # s >= v structurally (s - v = (mA/2 - mB)^2), so both intensities are
        # nonnegative; clamp the one-ulp dip rounding can produce at the null.
        out[names[0]] = max(scale * (s + fringe), 0.0)
        out[names[1]] = max(scale * (s - fringe), 0.0)
    carrier = (plan.e0**2 / 2) * (1 + np.cos(plan.psi1))
    return SidebandSpectrum(carrier=max(carrier, 0.0), **out)


def split_upper_probability(plan: ModulationPlan, fiber: FiberLink, channel: int, delta_phi):
    """Probability that a detected sideband photon lands on the upper detector.

    Normalized closed-form split I+/(I+ + I-) for the channel; ``delta_phi``
    may be an array.  Returns None for a dark channel (both depths zero).
    """
    s, v, chi = _channel_terms(plan, fiber, channel)
    if s == 0:
        return None
    return 0.5 + (v / (2 * s)) * np.sin(chi + np.asarray(delta_phi, dtype=float))


def _common_period(omega1: float, omega2: float, max_denominator: int = 4096):
    """Shortest duration holding an integer number of cycles of both tones."""
    ratio = omega1 / omega2
    frac = Fraction(ratio).limit_denominator(max_denominator)
    if frac.numerator == 0 or abs(float(frac) - ratio) > 1e-9 * ratio:
        raise ValueError(
            "omega1/omega2 must be rational (within 1e-9) for leak-free "
            f"spectral extraction; got ratio {ratio!r}"
        )
    cycles1, cycles2 = frac.numerator, frac.denominator
    return 2 * np.pi * cycles1 / omega1, cycles1, cycles2


def synthesize_bob_field(
    plan: ModulationPlan,
    fiber: FiberLink,
    num_samples: int = DEFAULT_ORACLE_SAMPLES,
    include_chirp: bool = False,
) -> TimeDomainField:
    """Exact field at Bob's output, sampled over one common tone period.

    Alice's modulator is taken in balanced push-pull drive: the output
    envelope e0*cos((psi1 + drive(t))/2) carries the exact interferometric
    intensity law (e0^2/2)*(1 + cos(psi1 + drive)) with no residual phase
    modulation, and contains every harmonic order of the drive.  With
    ``include_chirp=True`` the single-arm transfer (e0/2)*(1 + e^{j psi1}
    e^{j drive}) is used instead; its quadrature chirp rotates the
    demodulated fringe by pi/4 and raises its floor, which is exactly the
    deviation the flag exists to expose.

    Propagation applies the per-component relative phase (n/c)*delta*L in
    the discrete Fourier domain; Bob's exact phase-modulator exponential is
    applied in the time domain.

    Raises ValueError when the grid violates the Nyquist bound for the
    highest tone or the tones share no common period.
    """
    period, cycles1, cycles2 = _common_period(plan.omega1, plan.omega2)
    if num_samples < 2:
        raise ValueError("num_samples must be >= 2")
    sample_rate = num_samples / period
    if sample_rate <= 2 * max(plan.omega1, plan.omega2) / np.pi:
        raise ValueError(
            f"sample rate {sample_rate:g} violates the Nyquist bound "
            f"{2 * max(plan.omega1, plan.omega2) / np.pi:g} for the highest tone"
        )
    t = np.arange(num_samples) * (period / num_samples)
    drive = plan.m1 * np.cos(plan.omega1 * t + plan.phi1_a) + plan.m2 * np.cos(
        plan.omega2 * t + plan.phi2_a
    )
    if include_chirp:
        field = (plan.e0 / 2) * (1 + np.exp(1j * plan.psi1) * np.exp(1j * drive))
    else:
        field = plan.e0 * np.cos((plan.psi1 + drive) / 2)

    spectrum = np.fft.fft(field)
    offsets = 2 * np.pi * np.fft.fftfreq(num_samples, d=period / num_samples)
    spectrum *= np.exp(1j * (fiber.refractive_index / SPEED_OF_LIGHT) * offsets * fiber.length_m)
    field = np.fft.ifft(spectrum)

    bob_drive = plan.m3 * np.cos(plan.omega1 * t + plan.phi1_b) + plan.m4 * np.cos(
        plan.omega2 * t + plan.phi2_b
    )
    field = field * np.exp(1j * bob_drive)
    return TimeDomainField(sample_rate=sample_rate, samples=field)


def tone_power(field: TimeDomainField, omega: float) -> float:
    """Power of the spectral component at baseband offset ``omega``.

    The offset must fall on an exact DFT bin of the sampled duration
    (integer number of cycles), otherwise the projection would leak.
    """
    n = len(field.samples)
    bins = omega * field.duration / (2 * np.pi)
    k = round(bins)
    if abs(bins - k) > 1e-6:
        raise ValueError(f"omega {omega:g} does not sit on a DFT bin (cycles {bins:g})")
    projection = np.mean(field.samples * np.exp(-2j * np.pi * k * np.arange(n) / n))
    return float(abs(projection) ** 2)


def sideband_intensities_oracle(
    plan: ModulationPlan,
    fiber: FiberLink,
    num_samples: int = DEFAULT_ORACLE_SAMPLES,
    include_chirp: bool = False,
) -> SidebandSpectrum:
    """Ground-truth sideband powers from the exact synthesized field.

    No small-depth expansion anywhere: the modulator envelope and Bob's
    phase exponential are evaluated exactly and tone powers extracted by
    discrete Fourier projection on a leak-free grid.
    """
    field = synthesize_bob_field(plan, fiber, num_samples, include_chirp)
    return SidebandSpectrum(
        carrier=tone_power(field, 0.0),
        upper1=tone_power(field, plan.omega1),
        lower1=tone_power(field, -plan.omega1),
        upper2=tone_power(field, plan.omega2),
        lower2=tone_power(field, -plan.omega2),
    )


def fit_half_angle_fringe(delta_phis, powers, kind: str = "cos2") -> tuple[float, float]:
    """Least-squares amplitude A of P = A*cos^2(dphi/2) (or sin^2).

    Returns (A, max relative residual |P - A*basis| / A).
    """
    delta_phis = np.asarray(delta_phis, dtype=float)
    powers = np.asarray(powers, dtype=float)
    if kind == "cos2":
        basis = np.cos(delta_phis / 2) ** 2
    elif kind == "sin2":
        basis = np.sin(delta_phis / 2) ** 2
    else:
        raise ValueError("kind must be 'cos2' or 'sin2'")
    amplitude = float(np.dot(powers, basis) / np.dot(basis, basis))
    if amplitude == 0.0:
        # Dark channel: an all-zero sweep is a perfect zero-amplitude fit.
        residual = float(np.max(np.abs(powers)))
        return amplitude, residual
    residual = float(np.max(np.abs(powers - amplitude * basis)) / amplitude)
    return amplitude, residual

"""Two-mode coherent states with linear polarization.

Rotations, Stokes statistics, state distinguishability, and photon counting
through a rotated polarizing beam splitter.  Photon counting is Poissonian
per mode with independent arms, which is exact for coherent states.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class TwoModeCoherentState:
    """Linearly polarized coherent state |alpha*cos(theta), alpha*sin(theta)>.

    ``theta`` is stored in [0, pi) because linear polarizations at theta and
    theta + pi are the same physical state.
    """

    alpha: complex
    theta: float

    def __post_init__(self):
        if not np.isfinite(self.alpha):
            raise ValueError("alpha must be finite")
        object.__setattr__(self, "theta", float(self.theta) % np.pi)

    @property
    def mean_photons(self) -> float:
        return float(abs(self.alpha) ** 2)

    def mode_means(self) -> tuple[float, float]:
        """Mean photon numbers of the (horizontal, vertical) modes."""
        n = self.mean_photons
        return n * np.cos(self.theta) ** 2, n * np.sin(self.theta) ** 2

    def attenuated(self, transmittance: float) -> "TwoModeCoherentState":
        """State after a beam splitter of the given power transmittance."""
        if not 0 <= transmittance <= 1:
            raise ValueError("transmittance must be in [0, 1]")
        return replace(self, alpha=self.alpha * np.sqrt(transmittance))


@dataclass(frozen=True)
class StokesSummary:
    """Means (photons) and variances (photons^2) of the three Stokes parameters."""

    s1_mean: float
    s2_mean: float
    s3_mean: float
    s1_var: float
    s2_var: float
    s3_var: float


@dataclass(frozen=True)
class DetectionEvent:
    """Photon counts at the two outputs of a polarizing beam splitter."""

    counts_transmit: int
    counts_reflect: int

    def __post_init__(self):
        if self.counts_transmit < 0 or self.counts_reflect < 0:
            raise ValueError("photon counts must be >= 0")


def rotate(state: TwoModeCoherentState, delta: float) -> TwoModeCoherentState:
    """Polarization rotation by ``delta``; energy and amplitude are invariant."""
    return replace(state, theta=(state.theta + delta) % np.pi)


def stokes_summary(state: TwoModeCoherentState) -> StokesSummary:
    """Stokes means and variances of the linearly polarized coherent state.

    <S1> = n*cos(2*theta), <S2> = n*sin(2*theta), <S3> = 0 with n = |alpha|^2;
    every variance equals n, so polarization uncertainty scales with intensity.
    """
    n = state.mean_photons
    return StokesSummary(
        s1_mean=n * np.cos(2 * state.theta),
        s2_mean=n * np.sin(2 * state.theta),
        s3_mean=0.0,
        s1_var=n,
        s2_var=n,
        s3_var=n,
    )


def stokes_monte_carlo(
    state: TwoModeCoherentState,
    parameter_index: int,
    trials: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Sampled mean and variance of one Stokes parameter.

    Simulates the photon-number-difference measurement: S1 uses the H/V
    basis, S2 the +-45 degree basis, and S3 the circular basis, where a
    linear input feeds both arms with independent Poisson counts of mean
    |alpha|^2 / 2.  Returns (sample mean, sample variance).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n = state.mean_photons
    if parameter_index == 1:
        mean_a = n * np.cos(state.theta) ** 2
        mean_b = n * np.sin(state.theta) ** 2
    elif parameter_index == 2:
        mean_a = n * np.cos(state.theta - np.pi / 4) ** 2
        mean_b = n * np.sin(state.theta - np.pi / 4) ** 2
    elif parameter_index == 3:
        mean_a = mean_b = n / 2
    else:
        raise ValueError("parameter_index must be 1, 2 or 3")
    diff = rng.poisson(mean_a, trials).astype(float) - rng.poisson(mean_b, trials)
    variance = float(np.var(diff, ddof=1)) if trials > 1 else 0.0
    return float(np.mean(diff)), variance


def overlap_small_angle(alpha_sq: float, theta: float) -> float:
    """Squared inner product exp(-2*|alpha|^2*sin^2(theta)).

    Small-angle form of the distinguishability between a horizontal state
    and one rotated by theta; see ``overlap_exact`` for the exact law (the
    two differ by a factor 2 in the exponent even to leading order).
    """
    if alpha_sq < 0:
        raise ValueError("alpha_sq must be >= 0")
    return float(np.exp(-2 * alpha_sq * np.sin(theta) ** 2))


def overlap_exact(alpha: complex, theta: float) -> float:
    """Exact |<alpha,0|alpha*cos(theta), alpha*sin(theta)>|^2.

    Evaluates the two-mode coherent-state inner product, which reduces to
    exp(-2*|alpha|^2*(1 - cos(theta))).
    """
    return float(np.exp(-2 * abs(alpha) ** 2 * (1 - np.cos(theta))))


def pbs_measure(
    state: TwoModeCoherentState,
    analyzer_angle: float,
    rng: np.random.Generator,
) -> DetectionEvent:
    """Photon counts behind a PBS rotated to ``analyzer_angle``.

    Transmit arm ~ Poisson(n*cos^2(theta - analyzer)), reflect arm
    ~ Poisson(n*sin^2(theta - analyzer)), drawn independently.
    """
    n = state.mean_photons
    delta = state.theta - analyzer_angle
    return DetectionEvent(
        counts_transmit=int(rng.poisson(n * np.cos(delta) ** 2)),
        counts_reflect=int(rng.poisson(n * np.sin(delta) ** 2)),
    )

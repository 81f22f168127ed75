"""Sideband optics: exact modulator identities, fringe laws, and the oracle."""
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hpqkd.optics import (
    DEFAULT_ORACLE_SAMPLES,
    SPEED_OF_LIGHT,
    FiberLink,
    ModulationPlan,
    OpticsNotTunedError,
    SidebandSpectrum,
    SmallSignalWarning,
    alice_field_exact,
    alice_intensity_small_signal,
    fit_half_angle_fringe,
    is_tuned,
    propagate,
    require_tuned,
    sideband_intensities_closed_form,
    sideband_intensities_oracle,
    split_upper_probability,
    synthesize_bob_field,
    tone_power,
    tuned_fiber,
    tuning_offsets,
)

PLAN = ModulationPlan()
FIBER = tuned_fiber(PLAN)

depth = st.floats(0.0, 0.2)
angle = st.floats(0.0, 2 * np.pi)


def plan_with(**kwargs) -> ModulationPlan:
    base = dict(
        e0=1.0, psi1=3 * np.pi / 2, m1=0.1, m2=0.1, m3=0.05, m4=0.05,
        phi1_a=0.0, phi2_a=0.0, phi1_b=0.0, phi2_b=0.0,
    )
    base.update(kwargs)
    return ModulationPlan(**base)


class TestPlanValidation:
    def test_negative_depth_rejected(self):
        with pytest.raises(ValueError):
            plan_with(m1=-0.1)

    def test_equal_tones_rejected(self):
        with pytest.raises(ValueError):
            ModulationPlan(omega1=1e9, omega2=1e9)

    def test_rf_near_carrier_rejected(self):
        with pytest.raises(ValueError):
            ModulationPlan(omega0=1e10, omega1=2e9, omega2=6e9)

    def test_large_depth_warns_but_constructs(self):
        with pytest.warns(SmallSignalWarning):
            plan = plan_with(m1=0.5)
        assert plan.m1 == 0.5

    def test_delta_phi(self):
        plan = plan_with(phi1_a=1.0, phi1_b=0.25, phi2_a=0.5, phi2_b=2.0)
        assert plan.delta_phi(1) == pytest.approx(0.75)
        assert plan.delta_phi(2) == pytest.approx(-1.5)
        with pytest.raises(ValueError):
            plan.delta_phi(3)


class TestAliceField:
    def test_modulation_off_constructive_bias(self):
        plan = plan_with(m1=0.0, m2=0.0, psi1=0.0)
        assert alice_field_exact(plan, 0.37e-9) == pytest.approx(plan.e0)

    def test_modulation_off_destructive_bias(self):
        plan = plan_with(m1=0.0, m2=0.0, psi1=np.pi)
        assert abs(alice_field_exact(plan, 1.1e-9)) == pytest.approx(0.0, abs=1e-15)

    def test_quadrature_bias_period_average(self):
        # |field|^2 averaged over one tone period stays at e0^2/2.
        plan = plan_with(m1=0.1, m2=0.0)
        t = np.linspace(0, 2 * np.pi / plan.omega1, 4096, endpoint=False)
        mean = np.mean(np.abs(alice_field_exact(plan, t)) ** 2)
        assert mean == pytest.approx(plan.e0**2 / 2, rel=1e-6)

    @given(psi1=angle, m1=depth, m2=depth, phi=angle, frac=st.floats(0.0, 1.0))
    def test_intensity_identity_exact(self, psi1, m1, m2, phi, frac):
        plan = plan_with(psi1=psi1, m1=m1, m2=m2, phi1_a=phi)
        t = frac * 2e-9
        drive = m1 * np.cos(plan.omega1 * t + phi) + m2 * np.cos(plan.omega2 * t)
        expected = (plan.e0**2 / 2) * (1 + np.cos(psi1 + drive))
        assert abs(alice_field_exact(plan, t)) ** 2 == pytest.approx(expected, abs=1e-12)

    def test_small_signal_quadrature_form(self):
        # At quadrature bias the bias term drops and the tone terms flip sign.
        plan = plan_with(m1=0.08, m2=0.03, phi1_a=0.4, phi2_a=1.3)
        t = np.linspace(0, 1e-9, 64)
        expected = (plan.e0**2 / 2) * (
            1
            + plan.m1 * np.cos(plan.omega1 * t + plan.phi1_a)
            + plan.m2 * np.cos(plan.omega2 * t + plan.phi2_a)
        )
        np.testing.assert_allclose(alice_intensity_small_signal(plan, t), expected, rtol=1e-12)

    def test_small_signal_constant_without_modulation(self):
        plan = plan_with(m1=0.0, m2=0.0, psi1=np.pi / 2)
        assert alice_intensity_small_signal(plan, 0.7e-9) == pytest.approx(plan.e0**2 / 2)

    def test_small_signal_error_below_one_percent(self):
        plan = plan_with(m1=0.05, m2=0.05)
        t = np.linspace(0, 1e-9, 2048, endpoint=False)  # full beat period
        exact = np.abs(alice_field_exact(plan, t)) ** 2
        approx = alice_intensity_small_signal(plan, t)
        assert np.max(np.abs(approx - exact) / exact) <= 0.01


class TestFiberAndPropagation:
    def test_zero_length_means_zero_phases(self):
        phases = propagate(PLAN, FiberLink(length_m=0.0))
        assert all(v == 0.0 for v in phases.values())

    def test_direct_formula(self):
        fiber = FiberLink(length_m=0.025, refractive_index=1.5)
        omega = 2 * np.pi * 1e9
        expected = 1.5 / SPEED_OF_LIGHT * omega * 0.025
        assert fiber.link_phase(omega) == pytest.approx(expected, rel=1e-15)

    def test_tuned_fiber_hits_both_conditions(self):
        phases = propagate(PLAN, FIBER)
        assert phases["upper1"] == pytest.approx(np.pi / 2, abs=1e-9)
        assert phases["upper2"] == pytest.approx(3 * np.pi / 2, abs=1e-9)
        assert phases["lower1"] == -phases["upper1"]
        assert is_tuned(PLAN, FIBER)

    def test_tuned_fiber_needs_3x_tone_ratio(self):
        plan = ModulationPlan(omega2=2 * np.pi * 1.5e9)
        with pytest.raises(OpticsNotTunedError):
            tuned_fiber(plan)

    def test_require_tuned_raises_on_detuned(self):
        with pytest.raises(OpticsNotTunedError):
            require_tuned(PLAN, FiberLink(length_m=FIBER.length_m * 1.01))

    def test_tuning_offsets_zero_when_tuned(self):
        off1, off2 = tuning_offsets(PLAN, FIBER)
        assert off1 < 1e-9 and off2 < 1e-9

    def test_fiber_validation(self):
        with pytest.raises(ValueError):
            FiberLink(length_m=-1.0)
        with pytest.raises(ValueError):
            FiberLink(length_m=1.0, refractive_index=0.5)


class TestClosedForm:
    def test_destructive_lower_sideband_at_zero_phase(self):
        spectrum = sideband_intensities_closed_form(PLAN, FIBER)
        assert spectrum.lower1 == pytest.approx(0.0, abs=1e-15)
        assert spectrum.upper1 == pytest.approx(PLAN.e0**2 * PLAN.m1**2 / 8, rel=1e-12)

    def test_complement_at_pi(self):
        plan = plan_with(phi1_a=np.pi)
        spectrum = sideband_intensities_closed_form(plan, FIBER)
        assert spectrum.upper1 == pytest.approx(0.0, abs=1e-15)
        assert spectrum.lower1 == pytest.approx(plan.e0**2 * plan.m1**2 / 8, rel=1e-12)

    def test_channel2_orientation_swapped(self):
        spectrum = sideband_intensities_closed_form(PLAN, FIBER)
        assert spectrum.upper2 == pytest.approx(0.0, abs=1e-15)
        assert spectrum.lower2 == pytest.approx(PLAN.e0**2 * PLAN.m2**2 / 8, rel=1e-12)

    @given(dphi=angle, m1=depth, m3=depth)
    def test_complementarity_sum_is_phase_free(self, dphi, m1, m3):
        plan = plan_with(m1=m1, m3=m3, phi1_a=dphi)
        spectrum = sideband_intensities_closed_form(plan, FIBER)
        expected = (plan.e0**2 / 4) * (m1**2 / 4 + m3**2)
        assert spectrum.upper1 + spectrum.lower1 == pytest.approx(expected, abs=1e-15)

    def test_unit_visibility_at_matched_depths(self):
        # m1 = 2*m3 zeroes the fringe minimum exactly.
        phases = np.linspace(0, 2 * np.pi, 64, endpoint=False)  # grid hits pi exactly
        powers = [
            sideband_intensities_closed_form(plan_with(phi1_a=p), FIBER).upper1 for p in phases
        ]
        vis = (max(powers) - min(powers)) / (max(powers) + min(powers))
        assert vis == pytest.approx(1.0, abs=1e-12)

    @given(dphi2=angle)
    def test_channel1_blind_to_channel2_phases(self, dphi2):
        reference = sideband_intensities_closed_form(PLAN, FIBER)
        swept = sideband_intensities_closed_form(plan_with(phi2_a=dphi2), FIBER)
        assert swept.upper1 == reference.upper1
        assert swept.lower1 == reference.lower1

    @given(m1=depth, m3=depth, dphi=angle)
    def test_intensities_structurally_nonnegative(self, m1, m3, dphi):
        plan = plan_with(m1=m1, m3=m3, phi1_a=dphi)
        spectrum = sideband_intensities_closed_form(plan, FIBER)
        assert spectrum.upper1 >= 0 and spectrum.lower1 >= 0

    def test_spectrum_rejects_negative_intensity(self):
        with pytest.raises(ValueError):
            SidebandSpectrum(carrier=1.0, upper1=-1e-3, lower1=0, upper2=0, lower2=0)

    def test_split_probability_matches_tuned_fringe(self):
        dphi = np.linspace(0, 2 * np.pi, 32)
        p = split_upper_probability(PLAN, FIBER, 1, dphi)
        np.testing.assert_allclose(p, np.cos(dphi / 2) ** 2, atol=1e-9)
        assert split_upper_probability(plan_with(m1=0.0, m3=0.0), FIBER, 1, 0.0) is None


def oracle_sweep(plan, fiber, channel, points=16, num_samples=4096):
    phases = np.linspace(0, 2 * np.pi, points, endpoint=False)
    upper, lower = [], []
    for p in phases:
        swept = plan.with_phases(phi1_a=p) if channel == 1 else plan.with_phases(phi2_a=p)
        spectrum = sideband_intensities_oracle(swept, fiber, num_samples=num_samples)
        upper.append(spectrum.upper1 if channel == 1 else spectrum.upper2)
        lower.append(spectrum.lower1 if channel == 1 else spectrum.lower2)
    return phases, np.array(upper), np.array(lower)


class TestOracle:
    def test_no_modulation_leaves_only_carrier(self):
        plan = plan_with(m1=0, m2=0, m3=0, m4=0, psi1=2.1)
        spectrum = sideband_intensities_oracle(plan, FIBER)
        expected_carrier = plan.e0**2 * abs(1 + np.exp(1j * plan.psi1)) ** 2 / 4
        assert spectrum.carrier == pytest.approx(expected_carrier, rel=1e-12)
        for name in ("upper1", "lower1", "upper2", "lower2"):
            assert getattr(spectrum, name) == pytest.approx(0.0, abs=1e-20)

    def test_fringe_fit_and_prefactor(self):
        # The oracle arbitrates the fringe prefactor: e0^2*m1^2/8, not /16.
        phases, upper, lower = oracle_sweep(PLAN, FIBER, 1, points=32)
        a_up, res_up = fit_half_angle_fringe(phases, upper, "cos2")
        a_lo, res_lo = fit_half_angle_fringe(phases, lower, "sin2")
        assert res_up <= 0.01 and res_lo <= 0.01
        ref = PLAN.e0**2 * PLAN.m1**2
        assert abs(a_up - ref / 8) < abs(a_up - ref / 16)
        assert a_up == pytest.approx(ref / 8, rel=0.01)

    def test_channel2_swap(self):
        phases, upper, lower = oracle_sweep(PLAN, FIBER, 2, points=16)
        a_up, res_up = fit_half_angle_fringe(phases, upper, "sin2")
        a_lo, res_lo = fit_half_angle_fringe(phases, lower, "cos2")
        assert res_up <= 0.01 and res_lo <= 0.01
        assert a_up == pytest.approx(PLAN.e0**2 * PLAN.m2**2 / 8, rel=0.01)

    def test_small_signal_convergence_quadratic(self):
        # Halving all depths must shrink the relative closed-form error >= 3x.
        errors = []
        for scale in (1.0, 0.5):
            plan = plan_with(m1=0.1 * scale, m2=0.0, m3=0.05 * scale, m4=0.0, phi1_a=1.1)
            closed = sideband_intensities_closed_form(plan, FIBER)
            oracle = sideband_intensities_oracle(plan, FIBER, num_samples=4096)
            errors.append(abs(oracle.upper1 - closed.upper1) / oracle.upper1)
        assert errors[1] <= errors[0] / 3

    def test_oracle_complementarity_within_one_percent(self):
        phases, upper, lower = oracle_sweep(PLAN, FIBER, 1, points=16)
        sums = upper + lower
        assert (sums.max() - sums.min()) / sums.mean() <= 0.01

    def test_channel_independence_under_phi2_sweep(self):
        # Probe at the half-fringe point so both arms are well away from zero.
        upper, lower = [], []
        for p in np.linspace(0, 2 * np.pi, 8, endpoint=False):
            spectrum = sideband_intensities_oracle(
                PLAN.with_phases(phi1_a=np.pi / 2, phi2_a=p), FIBER, num_samples=4096
            )
            upper.append(spectrum.upper1)
            lower.append(spectrum.lower1)
        for values in (np.array(upper), np.array(lower)):
            assert (values.max() - values.min()) / values.mean() <= 0.01

    def test_single_drive_chirp_breaks_the_fringe_law(self):
        # The chirped single-arm transfer is exposed deliberately: its fringe
        # is shifted and lifted, so the half-angle fit degrades badly.
        phases = np.linspace(0, 2 * np.pi, 16, endpoint=False)
        upper = [
            sideband_intensities_oracle(
                PLAN.with_phases(phi1_a=p), FIBER, num_samples=4096, include_chirp=True
            ).upper1
            for p in phases
        ]
        _, residual = fit_half_angle_fringe(phases, upper, "cos2")
        assert residual > 0.10

    def test_nyquist_rejected(self):
        with pytest.raises(ValueError, match="Nyquist"):
            synthesize_bob_field(PLAN, FIBER, num_samples=8)

    def test_incommensurate_tones_rejected(self):
        plan = ModulationPlan(omega2=PLAN.omega1 * np.sqrt(2))
        with pytest.raises(ValueError, match="rational"):
            sideband_intensities_oracle(plan, FIBER)

    def test_tone_power_requires_exact_bin(self):
        field = synthesize_bob_field(PLAN, FIBER, num_samples=1024)
        with pytest.raises(ValueError, match="bin"):
            tone_power(field, PLAN.omega1 * 1.1)

    def test_field_grid_covers_common_period(self):
        field = synthesize_bob_field(PLAN, FIBER, num_samples=1024)
        cycles1 = PLAN.omega1 * field.duration / (2 * np.pi)
        cycles2 = PLAN.omega2 * field.duration / (2 * np.pi)
        assert cycles1 == pytest.approx(round(cycles1), abs=1e-9)
        assert cycles2 == pytest.approx(round(cycles2), abs=1e-9)
        assert field.sample_rate > 2 * max(PLAN.omega1, PLAN.omega2) / np.pi
        assert len(field.samples) == 1024

    def test_default_grid_size(self):
        field = synthesize_bob_field(PLAN, FIBER)
        assert len(field.samples) == DEFAULT_ORACLE_SAMPLES


class TestFringeFit:
    def test_recovers_amplitude_on_synthetic_data(self):
        phases = np.linspace(0, 2 * np.pi, 24, endpoint=False)
        a, res = fit_half_angle_fringe(phases, 3.5 * np.cos(phases / 2) ** 2, "cos2")
        assert a == pytest.approx(3.5, rel=1e-12)
        assert res == pytest.approx(0.0, abs=1e-12)

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            fit_half_angle_fringe([0.0], [1.0], "tan2")

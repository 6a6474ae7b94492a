import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from photonmix.analytic_model import (
    LocalOscillator,
    SourceParams,
    auto_g2_zero,
    cross_coincidence,
    effective_overlap,
    g2_from_probs,
    hom_visibility,
    loss_degraded_probs,
    overlap_from_visibility,
    peak_analysis,
)
from photonmix.errors import InvalidParameterError, UndefinedCorrelationError


class TestG2FromProbs:
    def test_pure_single_photon(self):
        assert g2_from_probs(1.0, 0.0) == 0.0

    def test_two_photon_fock(self):
        assert g2_from_probs(0.0, 1.0) == 0.5

    def test_reference_point(self):
        # p1 + 2 p2 = 1 exactly, so g2 = 2 p2
        assert g2_from_probs(0.96, 0.02) == pytest.approx(0.04, abs=1e-15)

    def test_undefined_for_vacuum(self):
        with pytest.raises(UndefinedCorrelationError):
            g2_from_probs(0.0, 0.0)

    def test_rejects_bad_probabilities(self):
        with pytest.raises(InvalidParameterError):
            g2_from_probs(-0.1, 0.5)
        with pytest.raises(InvalidParameterError):
            g2_from_probs(0.7, 0.5)


class TestLossDegradedProbs:
    def test_lossless_single_photon(self):
        assert loss_degraded_probs(1.0, 0.0, 1.0) == (0.0, 1.0, 0.0)

    def test_half_loss_single_photon(self):
        assert loss_degraded_probs(1.0, 0.0, 0.5) == (0.5, 0.5, 0.0)

    def test_identity_at_unit_transmission(self):
        q0, q1, q2 = loss_degraded_probs(0.96, 0.02, 1.0)
        assert (q0, q1, q2) == pytest.approx((0.0, 0.96, 0.02), abs=1e-15)

    @given(
        p1=st.floats(1e-3, 1.0),
        frac=st.floats(0.0, 1.0),
        eta=st.floats(1e-3, 1.0),
    )
    def test_g2_is_loss_independent(self, p1, frac, eta):
        p2 = (1.0 - p1) * frac
        q0, q1, q2 = loss_degraded_probs(p1, p2, eta)
        assert g2_from_probs(p1, p2) == pytest.approx(
            2 * q2 / (q1 + 2 * q2) ** 2, rel=1e-9
        )


class TestCrossCoincidence:
    def test_full_overlap_unit_fields(self):
        assert cross_coincidence(1.0, 1.0, 0.0, 1.0) == pytest.approx(1.0)

    def test_orthogonal_unit_fields(self):
        assert cross_coincidence(1.0, 1.0, 0.0, 0.0) == pytest.approx(3.0)

    def test_coherent_only(self):
        for mu in (0.2, 1.0, 5.0):
            assert cross_coincidence(mu, 0.0, 0.3, 0.7) == pytest.approx(mu**2)

    def test_independent_fields_value(self):
        mu_a, mu_p, g2 = 0.7, 0.4, 0.05
        expected = mu_a**2 + mu_p**2 * g2 + 2 * mu_a * mu_p
        assert cross_coincidence(mu_a, mu_p, g2, 0.0) == pytest.approx(expected, abs=1e-15)


class TestHomVisibility:
    def test_unit_fields_full_overlap(self):
        assert hom_visibility(1.0, 1.0, 0.0, 1.0) == pytest.approx(2.0 / 3.0, abs=1e-15)

    def test_peak_ratio_equals_closed_form_maximum(self):
        g2, m = 0.0412, 0.76
        r = 0.203 * 1.0
        v = hom_visibility(r, 1.0, g2, m)
        assert v == pytest.approx(m / (math.sqrt(g2) + 1.0), abs=1e-4)
        assert v == pytest.approx(0.6318, abs=1e-3)

    def test_zero_overlap(self):
        assert hom_visibility(0.5, 2.0, 0.1, 0.0) == 0.0

    def test_undefined_without_coincidences(self):
        with pytest.raises(UndefinedCorrelationError):
            hom_visibility(0.0, 0.0, 0.0, 0.5)


class TestOverlapFromVisibility:
    def test_reference_inversion(self):
        m = overlap_from_visibility(0.6318, 0.203, 1.0, 0.0412)
        assert m == pytest.approx(0.760, abs=1e-3)

    def test_round_trip_unit_fields(self):
        v = hom_visibility(1.0, 1.0, 0.0, 1.0)
        assert overlap_from_visibility(v, 1.0, 1.0, 0.0) == pytest.approx(1.0, abs=1e-15)

    def test_zero_visibility(self):
        assert overlap_from_visibility(0.0, 0.5, 0.5, 0.2) == 0.0

    def test_divergent_correction_rejected(self):
        with pytest.raises(InvalidParameterError):
            overlap_from_visibility(0.5, 0.0, 1.0, 0.0)
        with pytest.raises(InvalidParameterError):
            overlap_from_visibility(0.5, 1.0, 0.0, 0.0)

    @given(
        mu_a=st.floats(1e-3, 1e3),
        mu_p=st.floats(1e-3, 1e3),
        g2=st.floats(0.0, 1.0),
        m=st.floats(0.0, 1.0),
    )
    @settings(max_examples=200)
    def test_exact_inverse_of_visibility(self, mu_a, mu_p, g2, m):
        v = hom_visibility(mu_a, mu_p, g2, m)
        assert overlap_from_visibility(v, mu_a, mu_p, g2) == pytest.approx(m, abs=1e-12)


class TestAutoG2Zero:
    def test_coherent_limit(self):
        assert auto_g2_zero(0.8, 0.0, 0.0, 0.0) == pytest.approx(1.0, abs=1e-15)

    def test_source_limit(self):
        assert auto_g2_zero(0.0, 0.5, 0.0412, 0.3) == pytest.approx(0.0412, abs=1e-15)

    def test_reference_point(self):
        assert auto_g2_zero(2.0, 1.0, 0.0412, 0.76) == pytest.approx(1.2312, abs=1e-4)

    def test_undefined_for_two_vacua(self):
        with pytest.raises(UndefinedCorrelationError):
            auto_g2_zero(0.0, 0.0, 0.0, 0.0)

    def test_strictly_increasing_in_overlap(self):
        ms = np.linspace(0.0, 1.0, 41)
        for r in (0.1, 0.5, 2.0, 10.0):
            values = [auto_g2_zero(r, 1.0, 0.0412, m) for m in ms]
            assert np.all(np.diff(values) > 0)

    def test_range_over_parameter_grid(self):
        # exact envelope: the curve stays above min(1, g2) and below its peak
        # value 1 + m^2 / (1 + 2m - g2); the 4/3 ceiling is the g2 = 0 case
        # (two-photon noise at high overlap pushes the peak slightly above it)
        for g2 in np.linspace(0.0, 1.0, 6):
            for m in np.linspace(0.0, 1.0, 6):
                ceiling = 1.0 + m**2 / (1.0 + 2.0 * m - g2) if m > 0 else 1.0
                for r in np.geomspace(1e-3, 1e3, 25):
                    value = auto_g2_zero(r, 1.0, g2, m)
                    assert min(1.0, g2) - 1e-12 <= value <= ceiling + 1e-12
                    if g2 == 0.0:
                        assert value <= 4.0 / 3.0 + 1e-12

    def test_pure_source_peak_never_exceeds_four_thirds(self):
        for m in np.linspace(0.0, 1.0, 21):
            for r in np.geomspace(1e-3, 1e3, 61):
                assert auto_g2_zero(r, 1.0, 0.0, m) <= 4.0 / 3.0 + 1e-12


class TestPeakAnalysis:
    def test_reference_visibility_peak(self):
        report = peak_analysis(0.0412, 0.76)
        assert report.r_vhom_star == pytest.approx(0.2030, abs=1e-4)
        assert report.v_max == pytest.approx(0.6318, abs=1e-4)

    def test_ideal_bunching_peak(self):
        report = peak_analysis(0.0, 1.0)
        assert report.r_auto_star == pytest.approx(2.0, abs=1e-12)
        assert report.g2_auto_max == pytest.approx(4.0 / 3.0, abs=1e-12)

    def test_reference_bunching_peak(self):
        report = peak_analysis(0.0412, 0.76)
        assert report.r_auto_star == pytest.approx(2.2616, abs=1e-4)
        assert report.g2_auto_max == pytest.approx(1.2330, abs=1e-4)

    def test_monotone_curve_has_no_auto_peak(self):
        report = peak_analysis(0.05, 0.0)
        assert report.r_auto_star is None
        assert report.g2_auto_max is None

    @given(g2=st.floats(1e-4, 1.0), m=st.floats(0.05, 1.0))
    @settings(max_examples=60)
    def test_closed_forms_match_numeric_argmax(self, g2, m):
        report = peak_analysis(g2, m)
        neg_v = lambda r: -hom_visibility(r, 1.0, g2, m)
        found = minimize_scalar(neg_v, bounds=(1e-6, 50.0), method="bounded",
                                options={"xatol": 1e-10})
        assert found.x == pytest.approx(report.r_vhom_star, abs=1e-6)
        assert -found.fun == pytest.approx(report.v_max, abs=1e-9)
        neg_g = lambda r: -auto_g2_zero(r, 1.0, g2, m)
        found = minimize_scalar(neg_g, bounds=(1e-6, 200.0), method="bounded",
                                options={"xatol": 1e-10})
        assert found.x == pytest.approx(report.r_auto_star, rel=1e-5)
        assert -found.fun == pytest.approx(report.g2_auto_max, abs=1e-9)


class TestEffectiveOverlap:
    def test_reference_values(self):
        assert effective_overlap(1.0, 0.905) == 0.905
        assert effective_overlap(0.37, 1.0) == 0.37
        assert effective_overlap(0.84, 0.905) == pytest.approx(0.7602, abs=1e-12)

    def test_rejects_out_of_range(self):
        with pytest.raises(InvalidParameterError):
            effective_overlap(1.2, 0.5)


class TestSourceParams:
    def test_derived_moments(self):
        src = SourceParams(p1=0.96, p2=0.02, eta=0.5)
        assert src.mu_psi == pytest.approx(0.5)
        assert src.g2_zero == pytest.approx(0.04)

    def test_from_moments_round_trip(self):
        src = SourceParams.from_moments(0.3, 0.0412)
        assert src.mu_psi == pytest.approx(0.3, abs=1e-12)
        assert src.g2_zero == pytest.approx(0.0412, abs=1e-12)

    def test_from_moments_with_explicit_eta(self):
        src = SourceParams.from_moments(0.9, 0.04, eta=0.9)
        assert src.mu_psi == pytest.approx(0.9, abs=1e-12)
        assert src.g2_zero == pytest.approx(0.04, abs=1e-12)

    def test_rejects_inconsistent_probabilities(self):
        with pytest.raises(InvalidParameterError):
            SourceParams(p1=0.8, p2=0.3)

    def test_local_oscillator_polarization_overlap(self):
        lo = LocalOscillator(mu_alpha=0.5, theta=math.pi / 3)
        assert lo.m_p == pytest.approx(0.25, abs=1e-15)
        assert lo.g2_zero == 1.0

"""Response kernels: trivial identities, frozen oracle values, properties.

Frozen complex literals below were produced by the dense-trapezoid oracle
(1e6 points over +-8 Doppler widths) at the canonical 15 mW operating
point; the tests both pin those numbers and re-derive the analytic/oracle
agreement live.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biphoton import kernels as K
from biphoton.errors import ConvergenceError, ParameterError
from biphoton.units import ghz_to_gamma

from conftest import rel_err

# dense-trapezoid oracle values, frozen (see module docstring)
RHO_M_AT_0 = 1.5663630045418437e-18 + 0.7613221526785102j
RHO_C_AT_0P1 = 0.12185135808885929 + 0.01652121258171523j
KAPPA_AT_0_1GHZ = 0.02187170016392948 + 0.0013802798469250337j
DOPPLER_TWO_LEVEL_AVG = -1.6707872048446333e-20 - 0.008120769628570775j


class TestEtalon:
    def test_identity_at_line_center(self):
        assert K.etalon_response(0.0, 8.9) == 1.0

    def test_half_width_point(self):
        # 4 delta^2/Gamma_e^2 = 1 forces (1/2)^2
        assert K.etalon_response(8.9 / 2.0, 8.9) == pytest.approx(0.25)

    def test_far_tail(self):
        assert K.etalon_response(89.0, 8.9) == pytest.approx((1 / 401.0) ** 2,
                                                             rel=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(delta=st.floats(-1e3, 1e3), ge=st.floats(0.1, 50))
    def test_even_and_bounded(self, delta, ge):
        val = K.etalon_response(delta, ge)
        assert K.etalon_response(-delta, ge) == val
        assert 0.0 < val <= 1.0

    def test_monotone_in_magnitude(self):
        d = np.linspace(0.0, 60.0, 501)
        vals = K.etalon_response(d, 8.9)
        assert np.all(np.diff(vals) < 0)

    def test_invalid_width(self):
        with pytest.raises(ParameterError):
            K.etalon_response(1.0, 0.0)


class TestComplexSinc:
    def test_removable_singularity(self):
        assert K.complex_sinc(0.0) == 1.0

    def test_zero_at_pi(self):
        assert abs(K.complex_sinc(np.pi)) < 1e-12

    def test_imaginary_argument(self):
        assert K.complex_sinc(1j) == pytest.approx(np.sinh(1.0), rel=1e-12)

    def test_series_direct_agreement_across_cutoff(self):
        for mag in (0.9e-4, 1.1e-4):
            for phase in (0.0, 0.7, 2.1):
                z = mag * np.exp(1j * phase)
                direct = np.sin(z) / z
                assert K.complex_sinc(z) == pytest.approx(direct, rel=1e-12)

    @settings(max_examples=80, deadline=None)
    @given(x=st.floats(-20, 20), y=st.floats(-20, 20))
    def test_conjugation(self, x, y):
        z = complex(x, y)
        assert K.complex_sinc(np.conj(z)) == pytest.approx(
            np.conj(K.complex_sinc(z)), rel=1e-12)


class TestDopplerAverage:
    def test_normalization(self, params_15mw, trapezoid_oracle):
        avg = K.doppler_average(lambda w: np.ones_like(w), params_15mw,
                                trapezoid_oracle)
        assert avg == pytest.approx(1.0, rel=1e-10)

    def test_odd_integrand_vanishes(self, params_15mw, trapezoid_oracle):
        avg = K.doppler_average(lambda w: w, params_15mw, trapezoid_oracle)
        assert abs(avg) < 1e-10

    def test_two_level_average_and_method_agreement(
            self, params_15mw, trapezoid_oracle, adaptive_oracle):
        f = lambda w: 1.0 / (4.0 * (w + 0.5j))
        trap = K.doppler_average(f, params_15mw, trapezoid_oracle)
        adaptive = K.doppler_average(f, params_15mw, adaptive_oracle)
        assert trap == pytest.approx(DOPPLER_TWO_LEVEL_AVG, rel=1e-9)
        assert rel_err(adaptive, trap) < 1e-8
        # the impurity kernel is that average with the absorbing sign and
        # prefactor b*alpha/2
        p = params_15mw.replace(b=2.0 / params_15mw.alpha)
        assert K.rho_m_bar(0.0, p, trapezoid_oracle) == pytest.approx(
            -trap, rel=1e-12)

    def test_analytic_method_rejected(self, params_15mw):
        with pytest.raises(ParameterError):
            K.doppler_average(lambda w: w, params_15mw, K.ANALYTIC)

    def test_panel_budget_exhaustion_carries_tolerance(self, params_15mw):
        tight = K.QuadratureSpec(method=K.METHOD_ADAPTIVE,
                                 panel_tolerance=1e-13, max_panels=16)
        sharp = lambda w: 1.0 / (w**2 + 1e-4)
        with pytest.raises(ConvergenceError) as excinfo:
            K.doppler_average(sharp, params_15mw, tight)
        assert excinfo.value.achieved_tolerance is not None
        assert excinfo.value.achieved_tolerance > 0

    def test_deterministic(self, params_15mw, trapezoid_oracle):
        f = lambda w: 1.0 / (4.0 * (w + 0.5j))
        a = K.doppler_average(f, params_15mw, trapezoid_oracle)
        b = K.doppler_average(f, params_15mw, trapezoid_oracle)
        assert a == b


class TestRhoM:
    def test_no_impurities_no_response(self, params_15mw):
        assert K.rho_m_bar(0.37, params_15mw.replace(b=0.0)) == 0.0

    def test_oracle_value_and_analytic_match(self, params_15mw,
                                             trapezoid_oracle):
        oracle = K.rho_m_bar(0.0, params_15mw, trapezoid_oracle)
        assert oracle == pytest.approx(RHO_M_AT_0, rel=1e-9)
        assert rel_err(K.rho_m_bar(0.0, params_15mw), oracle) < 1e-8

    def test_far_detuned_suppression(self, params_15mw, trapezoid_oracle):
        near = K.rho_m_bar(0.0, params_15mw, trapezoid_oracle)
        far = K.rho_m_bar(
            0.0, params_15mw.replace(delta_c=ghz_to_gamma(3.0)),
            trapezoid_oracle)
        assert abs(far) < abs(near)

    def test_linear_in_impurity_weight(self, params_15mw):
        base = K.rho_m_bar(1.2, params_15mw)
        doubled_b = K.rho_m_bar(1.2, params_15mw.replace(b=2 * params_15mw.b))
        assert doubled_b == pytest.approx(2.0 * base, rel=1e-14)
        scaled_alpha = K.rho_m_bar(
            1.2, params_15mw.replace(alpha=3.0 * params_15mw.alpha))
        assert scaled_alpha == pytest.approx(3.0 * base, rel=1e-14)

    def test_strictly_absorbing(self, params_15mw):
        deltas = np.concatenate([np.linspace(-300, 300, 401), [-1e5, 1e5]])
        vals = K.rho_m_bar(deltas, params_15mw)
        assert np.all(vals.imag > 0)


class TestRhoC:
    def test_two_photon_resonance_without_decoherence(self, params_15mw):
        assert K.rho_c_bar(0.0, params_15mw.replace(gamma_dec=0.0)) == 0.0

    def test_all_impurities_no_coherent_response(self, params_15mw):
        assert K.rho_c_bar(0.3, params_15mw.replace(b=1.0)) == 0.0

    def test_oracle_value_and_analytic_match(self, params_15mw,
                                             trapezoid_oracle):
        oracle = K.rho_c_bar(0.1, params_15mw, trapezoid_oracle)
        assert oracle == pytest.approx(RHO_C_AT_0P1, rel=1e-9)
        assert rel_err(K.rho_c_bar(0.1, params_15mw), oracle) < 1e-8

    def test_pole_sign_spanning_grid(self, params_15mw, trapezoid_oracle):
        # the reduction must hold on both sides of the two-photon resonance
        # and for detunings that move the pole across quadrants
        for delta in (-5.0, -0.1, 0.1, 5.0):
            for dcg in (0.0, 0.7, 3.0):
                p = params_15mw.replace(delta_c=ghz_to_gamma(dcg))
                oracle = K.rho_c_bar(delta, p, trapezoid_oracle)
                assert rel_err(K.rho_c_bar(delta, p), oracle) < 1e-8

    def test_coupling_off_reduces_to_two_level(self, params_15mw,
                                               trapezoid_oracle):
        p = params_15mw.replace(omega_c=0.0)
        analytic = K.rho_c_bar(0.2, p)
        oracle = K.rho_c_bar(0.2, p, trapezoid_oracle)
        assert rel_err(analytic, oracle) < 1e-8
        # and equals the impurity line reweighted by (1-b)/b
        two_level = K.rho_m_bar(0.2, params_15mw)
        weight = (1 - params_15mw.b) / params_15mw.b
        assert analytic == pytest.approx(weight * two_level, rel=1e-12)

    def test_coupling_off_on_exact_resonance_is_finite(self, params_15mw):
        p = params_15mw.replace(omega_c=0.0, gamma_dec=0.0)
        val = K.rho_c_bar(0.0, p)
        assert np.isfinite(val.real) and np.isfinite(val.imag)
        assert val.imag > 0


class TestKappa:
    def test_pump_off(self, params_15mw):
        assert K.kappa_bar(0.4, params_15mw.replace(omega_p=0.0)) == 0.0

    def test_all_impurities(self, params_15mw):
        assert K.kappa_bar(0.4, params_15mw.replace(b=1.0)) == 0.0

    def test_oracle_value_and_analytic_match(self, params_15mw,
                                             trapezoid_oracle):
        p = params_15mw.replace(delta_c=ghz_to_gamma(1.0))
        oracle = K.kappa_bar(0.0, p, trapezoid_oracle)
        assert oracle == pytest.approx(KAPPA_AT_0_1GHZ, rel=1e-9)
        assert rel_err(K.kappa_bar(0.0, p), oracle) < 1e-8

    def test_linear_in_pump_and_coherent_weight(self, params_15mw):
        base = K.kappa_bar(0.7, params_15mw)
        assert K.kappa_bar(
            0.7, params_15mw.replace(omega_p=2.0)) == pytest.approx(
                2.0 * base, rel=1e-14)
        assert K.kappa_bar(
            0.7, params_15mw.replace(alpha=2.0 * params_15mw.alpha)
        ) == pytest.approx(2.0 * base, rel=1e-14)
        ratio = (1.0 - 0.25) / (1.0 - params_15mw.b)
        assert K.kappa_bar(
            0.7, params_15mw.replace(b=0.25)) == pytest.approx(
                ratio * base, rel=1e-13)

    def test_exact_resonance_limit_matches_oracle(self, params_15mw,
                                                  trapezoid_oracle):
        p = params_15mw.replace(gamma_dec=0.0)
        analytic = K.kappa_bar(0.0, p)
        oracle = K.kappa_bar(0.0, p, trapezoid_oracle)
        assert rel_err(analytic, oracle) < 1e-8

    def test_vectorized_matches_scalar(self, params_15mw):
        deltas = np.array([-2.0, 0.0, 0.3, 40.0])
        vec = K.kappa_bar(deltas, params_15mw)
        for i, d in enumerate(deltas):
            assert vec[i] == K.kappa_bar(float(d), params_15mw)


def test_quadrature_spec_validation():
    with pytest.raises(ParameterError):
        K.QuadratureSpec(method="simpson")
    with pytest.raises(ParameterError):
        K.QuadratureSpec(trapezoid_points=10)
    with pytest.raises(ParameterError):
        K.QuadratureSpec(support_halfwidth=2.0)
    with pytest.raises(ParameterError):
        K.QuadratureSpec(panel_tolerance=0.0)

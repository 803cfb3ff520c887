"""
급수 커널 테스트
γ/χ 커널, 부분적분 급수, 테일러 적분, 0차 마그누스 파라미터
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from core.exceptions import ConvergenceException, DomainException
from schemas import IntegrationWindow
from services.envelopes import cosine_envelope
from services.series_kernels import (
    _check_divergence,
    algebraic_params,
    chi,
    gamma,
    magnus0_drive_scale,
    magnus0_lambda,
    magnus0_params,
    oscillatory_integral,
    rwa_drive_strength,
    taylor_integral,
)


class TestKernels:
    """χ, γ 커널 테스트"""

    @pytest.mark.unit
    def test_chi_values(self):
        assert chi(0, "plus") == 1
        assert chi(1, "plus") == 0
        assert chi(3, "minus") == 1
        assert chi(4, "minus") == 0

    @pytest.mark.unit
    def test_chi_rejects_negative(self):
        with pytest.raises(DomainException):
            chi(-1, "plus")

    @pytest.mark.unit
    def test_gamma_at_zero(self):
        assert gamma(1, 0, 0.0) == 0.0
        assert gamma(2, 0, 0.0) == 1.0

    @pytest.mark.unit
    def test_gamma_recurrences(self):
        """γ₁(k+1,β) = γ₂(k,β), γ₁(k+2,β) = −γ₁(k,β)"""
        for beta in np.linspace(0, 2 * math.pi, 24, endpoint=False):
            for k in range(21):
                assert gamma(1, k + 1, beta) == pytest.approx(gamma(2, k, beta), abs=1e-14)
                assert gamma(1, k + 2, beta) == pytest.approx(-gamma(1, k, beta), abs=1e-14)

    @pytest.mark.unit
    def test_gamma_invalid_index(self):
        with pytest.raises(DomainException):
            gamma(3, 0, 0.0)


class TestBoundarySeries:
    """부분적분 급수 테스트"""

    @pytest.mark.unit
    def test_oscillatory_integral_matches_quadrature(self, envelope):
        nu, psi = 1.0, 0.3
        for kind, trig in (("cos", math.cos), ("sin", math.sin)):
            expected, _ = quad(
                lambda t: float(envelope.value(t)) * trig(nu * t + psi),
                0.0,
                envelope.duration,
                limit=200,
                epsabs=1e-13,
            )
            value = oscillatory_integral(kind, envelope, nu, psi, 0.0, envelope.duration)
            assert value == pytest.approx(expected, abs=1e-10)

    @pytest.mark.unit
    def test_oscillatory_integral_partial_window(self, envelope):
        """구간 양 끝의 위상이 달라도 성립"""
        nu, psi, a, b = 1.3, -0.4, 3.7, 22.1
        expected, _ = quad(
            lambda t: float(envelope.value(t)) * math.sin(nu * t + psi), a, b, limit=200, epsabs=1e-13
        )
        assert oscillatory_integral("sin", envelope, nu, psi, a, b) == pytest.approx(expected, abs=1e-10)

    @pytest.mark.unit
    def test_slow_carrier_rejected(self, envelope):
        with pytest.raises(ConvergenceException):
            oscillatory_integral("cos", envelope, 0.1, 0.0, 0.0, envelope.duration)

    @pytest.mark.unit
    def test_divergence_detection(self):
        with pytest.raises(ConvergenceException):
            _check_divergence([1.0, 1.0, 2.0, 2.0, 4.0, 4.0, 8.0, 8.0])
        _check_divergence([1.0, 0.5, 0.25, 0.125, 0.0625])


class TestTaylorIntegral:
    """테일러 적분 테스트"""

    @pytest.mark.unit
    def test_one_magnus_period_cosine(self, envelope, qubit_frequency):
        t_c = math.pi / qubit_frequency
        window = IntegrationWindow(b_minus=t_c, b_plus=2 * t_c, beta=0.0, t_0=t_c)
        value = taylor_integral("cos", envelope, qubit_frequency, 0.0, window, 0)
        expected, _ = quad(lambda t: math.cos(2 * qubit_frequency * t), t_c, 2 * t_c, epsabs=1e-14)
        assert value == pytest.approx(expected, abs=1e-12)

    @pytest.mark.unit
    def test_third_order_matches_quadrature(self, envelope, qubit_frequency):
        phase, t = 0.3, 4.0
        window = IntegrationWindow(b_minus=2.0, b_plus=9.0, t_0=t)
        value = taylor_integral("sin", envelope, qubit_frequency, phase, window, 3)
        expected, _ = quad(
            lambda x: (x - t) ** 3 / 6.0 * math.sin(2 * qubit_frequency * x + 2 * phase),
            2.0,
            9.0,
            epsabs=1e-14,
            epsrel=1e-13,
        )
        assert value == pytest.approx(expected, rel=1e-10)

    @pytest.mark.unit
    def test_zero_width_window_rejected(self):
        with pytest.raises(ValueError):
            IntegrationWindow(b_minus=3.0, b_plus=3.0)

    @pytest.mark.unit
    def test_window_outside_gate_rejected(self, envelope, qubit_frequency):
        window = IntegrationWindow(b_minus=0.0, b_plus=envelope.duration + 1.0)
        with pytest.raises(DomainException):
            taylor_integral("cos", envelope, qubit_frequency, 0.0, window, 0)


class TestMagnus0Params:
    """0차 마그누스 파라미터 테스트"""

    @pytest.mark.unit
    def test_algebraic_ppp_80mhz(self, qubit_frequency):
        params = algebraic_params(qubit_frequency)
        assert params.ppp == pytest.approx(0.9947, abs=1e-4)
        assert params.drive_scale == 1.0
        assert params.method == "algebraic"

    @pytest.mark.unit
    def test_full_gate_gives_algebraic_solution(self, envelope, qubit_frequency):
        window = IntegrationWindow.full_gate(envelope.duration)
        ppp = magnus0_lambda(envelope, qubit_frequency, window)
        assert ppp == pytest.approx(1.0 / (2 * qubit_frequency), rel=1e-9)
        assert magnus0_drive_scale(envelope, qubit_frequency, ppp, window) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.unit
    def test_symmetric_window_any_beta(self, envelope, qubit_frequency):
        mid = envelope.duration / 2
        window = IntegrationWindow(b_minus=mid - 6.0, b_plus=mid + 6.0, beta=0.7)
        ppp = magnus0_lambda(envelope, qubit_frequency, window)
        assert ppp == pytest.approx(1.0 / (2 * qubit_frequency), rel=1e-8)

    @pytest.mark.unit
    def test_truncation_convergence(self, envelope, qubit_frequency):
        """K=14 → 15 에서 상대 변화 < 1e-8"""
        window = IntegrationWindow(b_minus=3.0, b_plus=20.0, beta=0.4)
        low = magnus0_params(envelope, qubit_frequency, window, order=14)
        high = magnus0_params(envelope, qubit_frequency, window, order=15)
        assert high.ppp == pytest.approx(low.ppp, rel=1e-8)
        assert high.drive_scale == pytest.approx(low.drive_scale, rel=1e-8)
        assert low.method == "truncated-series"

    @pytest.mark.unit
    def test_short_gate_rejected(self, envelope):
        window = IntegrationWindow.full_gate(envelope.duration)
        with pytest.raises(ConvergenceException):
            magnus0_lambda(envelope, 0.05, window)


class TestRwaDriveStrength:
    """RWA 구동 세기 테스트"""

    @pytest.mark.unit
    @pytest.mark.parametrize(
        "angle,duration,expected",
        [
            (math.pi, 20.0, math.pi / 10),
            (math.pi / 2, 20.0, math.pi / 20),
            (math.pi, 40.0, math.pi / 20),
        ],
    )
    def test_cosine_values(self, angle, duration, expected):
        assert rwa_drive_strength(angle, cosine_envelope(duration), duration) == pytest.approx(expected)

    @pytest.mark.unit
    def test_nonpositive_angle_rejected(self):
        with pytest.raises(DomainException):
            rwa_drive_strength(0.0, cosine_envelope(20.0), 20.0)

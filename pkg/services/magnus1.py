"""
1차 마그누스 서비스
이중 적분 급수, ζ₁ 검사, 마그누스 벡터, 위상 평균 1차 보정 파라미터 고정점 해법
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from core.config import settings
from core.exceptions import (
    ConvergenceException,
    DomainException,
    IntegrationException,
    IterationException,
    PulseLabException,
)
from schemas import FirstOrderParams, IntegrationWindow, PhaseResolvedParams, PulseParams
from services.envelopes import (
    AntiderivativeEnvelope,
    CosineEnvelope,
    DerivativeEnvelope,
    DerivativeSeriesEnvelope,
    Envelope,
    LinearEnvelope,
    ProductEnvelope,
    SumEnvelope,
    cosine_envelope,
    gauss_legendre,
    magnus_periods,
    modulated_envelope,
    pulse_signals,
    quarter_turn,
    rotating_frame_drive,
    split_carrier,
)
from services.series_kernels import (
    _check_divergence,
    algebraic_params,
    magnus0_params,
    oscillatory_integral,
    rwa_drive_strength,
)

logger = logging.getLogger(__name__)

TRIG_KINDS = ("one", "cos", "sin")

# 이중 적분 종류: (바깥 포락선, 바깥 삼각함수, 안쪽 포락선, 안쪽 삼각함수)
DOUBLE_INTEGRAL_KINDS: Dict[str, Tuple[str, str, str, str]] = {
    "a": ("f", "one", "g", "sin"),
    "b": ("f", "one", "g", "cos"),
    "c": ("g", "sin", "f", "one"),
    "d": ("g", "cos", "f", "one"),
    "e": ("f", "sin", "g", "sin"),
    "f": ("f", "sin", "g", "cos"),
    "g": ("f", "cos", "g", "sin"),
    "h": ("f", "cos", "g", "cos"),
}

# (바깥 삼각함수, 안쪽 삼각함수) → 종류. ('one', 'one') 은 반송파 없는 적분
KIND_BY_TRIGS: Dict[Tuple[str, str], str] = {
    (outer_trig, inner_trig): kind
    for kind, (_, outer_trig, _, inner_trig) in DOUBLE_INTEGRAL_KINDS.items()
}


class Carrier(NamedTuple):
    """반송파 X(t) = νt + ψ"""

    nu: float
    psi: float


class SignalTerm(NamedTuple):
    """coefficient·envelope(t)·trig(X(t)) 항"""

    coefficient: float
    envelope: Envelope
    trig: str


def drive_terms(
    in_phase: Optional[Envelope],
    quadrature: Optional[Envelope],
    drive_frequency: float,
    phase: float,
    duration: float,
    split: bool = False,
) -> Tuple[List[SignalTerm], List[SignalTerm], Carrier]:
    """
    A_I, A_Q 를 반송파 항들의 합으로 분해

    split=True 이면 비정합 반송파 성분을 포락선에 흡수하고 정합 반송파를 사용한다.

    Args:
        in_phase: 동위상 신호 포락선 (None이면 0)
        quadrature: 직교 신호 포락선 (None이면 0)
        drive_frequency: ω_d (rad/ns)
        phase: φ (rad)
        duration: t_g (ns)
        split: 반송파 분해 여부

    Returns:
        (A_I 항 목록, A_Q 항 목록, 반송파)
    """
    terms_i: List[SignalTerm] = []
    terms_q: List[SignalTerm] = []

    if not split:
        carrier = Carrier(2.0 * drive_frequency, 2.0 * phase)
        if in_phase is not None:
            terms_i += [SignalTerm(0.5, in_phase, "one"), SignalTerm(0.5, in_phase, "cos")]
            terms_q += [SignalTerm(0.5, in_phase, "sin")]
        if quadrature is not None:
            terms_i += [SignalTerm(0.5, quadrature, "sin")]
            terms_q += [
                SignalTerm(0.5, quadrature, "one"),
                SignalTerm(-0.5, quadrature, "cos"),
            ]
        return terms_i, terms_q, carrier

    cs = split_carrier(drive_frequency, duration, phase)
    carrier = Carrier(2.0 * cs.omega_hat, 2.0 * cs.phi_hat)
    # e·cosX = e_c·cosX̂ − e_s·sinX̂, e·sinX = e_s·cosX̂ + e_c·sinX̂
    if in_phase is not None:
        ic, is_ = modulated_envelope(in_phase, cs)
        terms_i += [
            SignalTerm(0.5, in_phase, "one"),
            SignalTerm(0.5, ic, "cos"),
            SignalTerm(-0.5, is_, "sin"),
        ]
        terms_q += [SignalTerm(0.5, is_, "cos"), SignalTerm(0.5, ic, "sin")]
    if quadrature is not None:
        qc, qs = modulated_envelope(quadrature, cs)
        terms_i += [SignalTerm(0.5, qs, "cos"), SignalTerm(0.5, qc, "sin")]
        terms_q += [
            SignalTerm(0.5, quadrature, "one"),
            SignalTerm(-0.5, qc, "cos"),
            SignalTerm(0.5, qs, "sin"),
        ]
    return terms_i, terms_q, carrier


def term_integral(
    term: SignalTerm,
    carrier: Carrier,
    a: float,
    b: float,
    order: int,
    weight: Optional[Envelope] = None,
) -> float:
    """∫_a^b c·e(t)·w(t)·trig(X) dt"""
    env = term.envelope if weight is None else ProductEnvelope(term.envelope, weight)
    if term.trig == "one":
        value = env.integral(a, b)
    else:
        value = oscillatory_integral(term.trig, env, carrier.nu, carrier.psi, a, b, order)
    return term.coefficient * value


def _inner_series(
    env: Envelope, trig: str, carrier: Carrier, a: float, order: int
) -> Tuple[Envelope, Envelope, float]:
    """
    ∫_a^t g·trig(X) = H_s(t)·sinX(t) + H_c(t)·cosX(t) − S(a)

    Returns:
        (H_s, H_c, S(a))
    """
    nu, psi = carrier
    if env.bandwidth >= abs(nu):
        raise ConvergenceException(
            f"안쪽 적분 포락선 대역폭 {env.bandwidth:.4g}가 반송파 {abs(nu):.4g} 이상입니다."
        )
    coeff_s = np.zeros(order + 1)
    coeff_c = np.zeros(order + 1)
    for m in range(order + 1):
        inv = nu ** -(m + 1)
        qc, qs = quarter_turn(m)
        if trig == "cos":
            coeff_s[m], coeff_c[m] = inv * qc, inv * qs
        else:
            coeff_s[m], coeff_c[m] = inv * qs, -inv * qc

    x_a = nu * a + psi
    jet_a = env.jet(a, order)
    start_terms = jet_a * (coeff_s * math.sin(x_a) + coeff_c * math.cos(x_a))
    _check_divergence(start_terms)
    return (
        DerivativeSeriesEnvelope(env, coeff_s),
        DerivativeSeriesEnvelope(env, coeff_c),
        float(np.sum(start_terms)),
    )


def _slow_integral(env: Envelope, a: float, b: float) -> float:
    return gauss_legendre(env.value, a, b, env.bandwidth)


def _pair(
    outer: Envelope,
    outer_trig: str,
    inner: Envelope,
    inner_trig: str,
    carrier: Carrier,
    a: float,
    b: float,
    order: int,
) -> float:
    """∫_a^b dt₁ f(t₁)T₁(X₁) ∫_a^{t₁} dt₂ g(t₂)T₂(X₂)"""
    nu, psi = carrier

    if inner_trig == "one":
        product = ProductEnvelope(outer, AntiderivativeEnvelope(inner, a))
        if outer_trig == "one":
            return _slow_integral(product, a, b)
        return oscillatory_integral(outer_trig, product, nu, psi, a, b, order)

    h_s, h_c, start = _inner_series(inner, inner_trig, carrier, a, order)
    f_hs = ProductEnvelope(outer, h_s)
    f_hc = ProductEnvelope(outer, h_c)

    if outer_trig == "one":
        return (
            oscillatory_integral("sin", f_hs, nu, psi, a, b, order)
            + oscillatory_integral("cos", f_hc, nu, psi, a, b, order)
            - start * outer.integral(a, b)
        )

    nu2, psi2 = 2.0 * nu, 2.0 * psi
    if outer_trig == "sin":
        # sin·sin = ½(1 − cos2X), sin·cos = ½sin2X
        return (
            0.5 * _slow_integral(f_hs, a, b)
            - 0.5 * oscillatory_integral("cos", f_hs, nu2, psi2, a, b, order)
            + 0.5 * oscillatory_integral("sin", f_hc, nu2, psi2, a, b, order)
            - start * oscillatory_integral("sin", outer, nu, psi, a, b, order)
        )
    # cos·sin = ½sin2X, cos·cos = ½(1 + cos2X)
    return (
        0.5 * oscillatory_integral("sin", f_hs, nu2, psi2, a, b, order)
        + 0.5 * _slow_integral(f_hc, a, b)
        + 0.5 * oscillatory_integral("cos", f_hc, nu2, psi2, a, b, order)
        - start * oscillatory_integral("cos", outer, nu, psi, a, b, order)
    )


def pair_integral(
    outer: SignalTerm, inner: SignalTerm, carrier: Carrier, a: float, b: float, order: int
) -> float:
    """
    두 신호 항의 시간 순서 이중 적분

    삼각함수 쌍으로 종류 (a)..(h)를 정하고 바깥/안쪽 항을 그 종류의 f, g 자리에 놓는다.
    """
    if outer.coefficient == 0.0 or inner.coefficient == 0.0:
        return 0.0
    kind = KIND_BY_TRIGS.get((outer.trig, inner.trig))
    if kind is None:
        value = _slow_integral(
            ProductEnvelope(outer.envelope, AntiderivativeEnvelope(inner.envelope, a)), a, b
        )
    else:
        outer_name = DOUBLE_INTEGRAL_KINDS[kind][0]
        f, g = (
            (outer.envelope, inner.envelope)
            if outer_name == "f"
            else (inner.envelope, outer.envelope)
        )
        value = _kind_integral(kind, f, g, carrier, a, b, order)
    return outer.coefficient * inner.coefficient * value


def _kind_integral(
    kind: str, f: Envelope, g: Envelope, carrier: Carrier, a: float, b: float, order: int
) -> float:
    outer_name, outer_trig, inner_name, inner_trig = DOUBLE_INTEGRAL_KINDS[kind]
    envelopes = {"f": f, "g": g}
    return _pair(
        envelopes[outer_name],
        outer_trig,
        envelopes[inner_name],
        inner_trig,
        carrier,
        a,
        b,
        order,
    )


def double_integral(
    kind: str,
    f: Envelope,
    g: Envelope,
    drive_frequency: float,
    phase: float,
    window: IntegrationWindow,
    order: Optional[int] = None,
) -> float:
    """
    여덟 종류의 시간 순서 이중 적분 급수

    (a) ∫f∫g·sin, (b) ∫f∫g·cos, (c) ∫g·sin∫f, (d) ∫g·cos∫f,
    (e) ∫f·sin∫g·sin, (f) ∫f·sin∫g·cos, (g) ∫f·cos∫g·sin, (h) ∫f·cos∫g·cos
    안쪽 적분은 b₋ 부터 t₁ 까지, 반송파는 2ω_d t + 2φ.

    Args:
        kind: 'a'..'h'
        f: 첫 번째 포락선
        g: 두 번째 포락선
        drive_frequency: ω_d (rad/ns)
        phase: φ (rad)
        window: 적분 구간
        order: 절단 차수 K

    Returns:
        float: 이중 적분값
    """
    if kind not in DOUBLE_INTEGRAL_KINDS:
        raise DomainException(f"알 수 없는 이중 적분 종류: {kind}")
    order = settings.truncation_order if order is None else order
    carrier = Carrier(2.0 * drive_frequency, 2.0 * phase)
    return _kind_integral(kind, f, g, carrier, window.b_minus, window.b_plus, order)


def zeta1(
    env: Envelope, detuning: float, window: IntegrationWindow, amplitude: float = 1.0
) -> float:
    """
    ζ₁ = (Δ/2)∫∫_{t₂<t₁}(𝓔_I(t₁) − 𝓔_I(t₂)) = (Δ/2)∫𝓔_I(t)(2t − b₋ − b₊)dt

    전체 게이트 구간에서는 정확히 0이 된다.
    """
    if detuning == 0.0:
        return 0.0
    a, b = window.b_minus, window.b_plus
    if isinstance(env, CosineEnvelope):
        # ∫t·s = [t·F − G]
        moment = (b * env.antiderivative(b) - env.second_antiderivative(b)) - (
            a * env.antiderivative(a) - env.second_antiderivative(a)
        )
        weighted = 2.0 * moment - (a + b) * env.integral(a, b)
    else:
        weight = LinearEnvelope(2.0, -(a + b), env.duration)
        weighted = _slow_integral(ProductEnvelope(env, weight), a, b)
    return 0.5 * detuning * amplitude * float(weighted)


def _signal_envelopes(p: PulseParams) -> Tuple[Optional[Envelope], Optional[Envelope]]:
    """θ 회전된 동위상/직교 신호를 포락선으로 구성"""
    s = cosine_envelope(p.duration)
    ds = DerivativeEnvelope(s, 1)
    e_i = p.amplitude
    e_q = p.ppp * p.amplitude
    c, sn = math.cos(p.axis), math.sin(p.axis)

    def combine(weights: Sequence[Tuple[float, Envelope]]) -> Optional[Envelope]:
        kept = [(w, env) for w, env in weights if w != 0.0]
        return SumEnvelope(kept) if kept else None

    in_phase = combine([(c * e_i, s), (-sn * e_q, ds)])
    quadrature = combine([(sn * e_i, s), (c * e_q, ds)])
    return in_phase, quadrature


def _series_vector(
    p: PulseParams,
    qubit_frequency: float,
    order: int,
    window: IntegrationWindow,
    truncation_order: int,
    split: bool,
) -> np.ndarray:
    drive_frequency = qubit_frequency - p.detuning
    in_phase, quadrature = _signal_envelopes(p)
    terms_i, terms_q, carrier = drive_terms(
        in_phase, quadrature, drive_frequency, p.phase, p.duration, split
    )
    a, b = window.b_minus, window.b_plus
    half_delta = 0.5 * p.detuning

    h0 = np.array(
        [
            sum(term_integral(t, carrier, a, b, truncation_order) for t in terms_i),
            sum(term_integral(t, carrier, a, b, truncation_order) for t in terms_q),
            -half_delta * (b - a),
        ]
    )
    if order == 0:
        return h0

    h1 = np.zeros(3)
    if half_delta != 0.0:
        weight = LinearEnvelope(2.0, -(a + b), p.duration)
        h1[0] = -half_delta * sum(
            term_integral(t, carrier, a, b, truncation_order, weight) for t in terms_q
        )
        h1[1] = half_delta * sum(
            term_integral(t, carrier, a, b, truncation_order, weight) for t in terms_i
        )
    h1[2] = sum(
        pair_integral(ti, tq, carrier, a, b, truncation_order)
        - pair_integral(tq, ti, carrier, a, b, truncation_order)
        for ti in terms_i
        for tq in terms_q
    )
    return h0 + h1


def _quadrature_vector(
    p: PulseParams,
    qubit_frequency: float,
    order: int,
    window: IntegrationWindow,
    rtol: float,
    atol: float,
) -> np.ndarray:
    """Y′ = a(t), M′ = a(t) × Y(t) 를 적응형 적분"""
    drive_frequency = qubit_frequency - p.detuning
    half_delta = 0.5 * p.detuning

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        e_i, e_q = pulse_signals(p, t)
        a_i, a_q = rotating_frame_drive(e_i, e_q, 2.0 * drive_frequency * t + 2.0 * p.phase)
        vec = np.array([a_i, a_q, -half_delta])
        return np.concatenate([vec, np.cross(vec, y[:3])])

    sol = solve_ivp(
        rhs,
        (window.b_minus, window.b_plus),
        np.zeros(6),
        method=settings.integrator_method,
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        logger.error(f"마그누스 벡터 적분 실패: {sol.message}")
        raise IntegrationException(f"마그누스 벡터 적분에 실패했습니다: {sol.message}")
    final = sol.y[:, -1]
    return final[:3] if order == 0 else final[:3] + final[3:]


def magnus_vector(
    p: PulseParams,
    qubit_frequency: float,
    order: int = 1,
    window: Optional[IntegrationWindow] = None,
    method: str = "auto",
    truncation_order: Optional[int] = None,
    split: bool = False,
    rtol: Optional[float] = None,
    atol: Optional[float] = None,
) -> np.ndarray:
    """
    H̄⁽⁰⁾ [+ H̄⁽¹⁾] 의 파울리 벡터 (h_x, h_y, h_z)

    Args:
        p: 펄스 파라미터
        qubit_frequency: ω_01 (rad/ns)
        order: 0 또는 1
        window: 적분 구간 (기본값: 전체 게이트)
        method: 'series', 'quadrature', 'auto'
        truncation_order: 급수 절단 차수 K
        split: 급수 계산 시 반송파 분해 여부
        rtol: 적분기 상대 허용 오차
        atol: 적분기 절대 허용 오차

    Returns:
        np.ndarray: 길이 3 벡터, U = exp(−i h·σ)
    """
    if order not in (0, 1):
        raise DomainException(f"마그누스 차수는 0 또는 1이어야 합니다: {order}")
    if method not in ("series", "quadrature", "auto"):
        raise DomainException(f"알 수 없는 계산 방법: {method}")
    window = window or IntegrationWindow.full_gate(p.duration, p.phase)
    truncation_order = (
        settings.truncation_order if truncation_order is None else truncation_order
    )
    rtol = settings.integrator_rtol if rtol is None else rtol
    atol = settings.integrator_atol if atol is None else atol
    drive_frequency = qubit_frequency - p.detuning
    if drive_frequency <= 0:
        raise DomainException("구동 주파수 ω_01 − Δ는 양수여야 합니다.")

    if method == "auto":
        # 급수 항 크기 비율 추정: 1차 항은 포락선 곱이므로 대역폭이 두 배
        bandwidth = 2.0 * math.pi / p.duration * (2 if order == 1 else 1)
        ratio = bandwidth / (2.0 * drive_frequency)
        if ratio < 1.0 and ratio ** (truncation_order + 1) <= settings.series_accuracy:
            try:
                return _series_vector(
                    p, qubit_frequency, order, window, truncation_order, split
                )
            except ConvergenceException:
                logger.debug("급수 계산이 수렴하지 않아 적분으로 대체")
        return _quadrature_vector(p, qubit_frequency, order, window, rtol, atol)

    if method == "series":
        return _series_vector(p, qubit_frequency, order, window, truncation_order, split)
    return _quadrature_vector(p, qubit_frequency, order, window, rtol, atol)


class _Coefficients(NamedTuple):
    """λ에 대해 선형/이차인 정규화 적분 계수 (a = A/(Ω/2))"""

    alpha: Tuple[float, float]  # ∫a_Q
    iota: Tuple[float, float]  # ∫a_I
    weighted_i: Tuple[float, float]  # ∫a_I(2t − t_g)
    weighted_q: Tuple[float, float]  # ∫a_Q(2t − t_g)
    z: Tuple[float, float, float]  # ∫∫(a_I₁a_Q₂ − a_Q₁a_I₂), λ⁰, λ¹, λ²


def _first_order_coefficients(
    drive_frequency: float, phase: float, duration: float, order: int
) -> _Coefficients:
    """
    분해된 반송파로 전체 게이트 구간의 계수 계산

    a_I⁰ = u + u_c·cosX̂ − u_s·sinX̂,  a_I¹ = d_c·sinX̂ + d_s·cosX̂
    a_Q⁰ = u_c·sinX̂ + u_s·cosX̂,      a_Q¹ = u′ − d_c·cosX̂ + d_s·sinX̂
    """
    s = cosine_envelope(duration)
    ds = DerivativeEnvelope(s, 1)
    i0, q0, carrier = drive_terms(s, None, drive_frequency, phase, duration, split=True)
    i1, q1, _ = drive_terms(None, ds, drive_frequency, phase, duration, split=True)
    a, b = 0.0, duration
    weight = LinearEnvelope(2.0, -duration, duration)

    def single(terms: List[SignalTerm], w: Optional[Envelope] = None) -> float:
        return 2.0 * sum(term_integral(t, carrier, a, b, order, w) for t in terms)

    # 교환자 항 a_I(t₁)a_Q(t₂) − a_Q(t₁)a_I(t₂) 의 (I, Q) 삼각함수 쌍별 종류
    #   1·cos: (b) − (d)   1·sin: (a) − (c)   cos·1: (d) − (b)   sin·1: (c) − (a)
    #   cos·cos: (h) − (h) cos·sin: (g) − (f) sin·cos: (f) − (g) sin·sin: (e) − (e)
    #   1·1: 반송파 없음, λ¹ 의 u ⊗ u′ 항에만 나타남
    # λ⁰: i0 × q0, λ¹: i0 × q1 + i1 × q0, λ²: i1 × q1
    def commutator(ti: List[SignalTerm], tq: List[SignalTerm]) -> float:
        return 4.0 * sum(
            pair_integral(x, y, carrier, a, b, order)
            - pair_integral(y, x, carrier, a, b, order)
            for x in ti
            for y in tq
        )

    return _Coefficients(
        alpha=(single(q0), single(q1)),
        iota=(single(i0), single(i1)),
        weighted_i=(single(i0, weight), single(i1, weight)),
        weighted_q=(single(q0, weight), single(q1, weight)),
        z=(
            commutator(i0, q0),
            commutator(i0, q1) + commutator(i1, q0),
            commutator(i1, q1),
        ),
    )


def _solve_phase(
    qubit_frequency: float,
    angle: float,
    duration: float,
    phase: float,
    order: int,
    tolerance: float,
    max_iterations: int,
    damping: float,
) -> PhaseResolvedParams:
    """단일 반송파 위상에 대한 (Ω_I, λ, Δ) 고정점 반복"""
    omega_rwa = 2.0 * angle / duration
    amplitude, ppp, detuning = omega_rwa, 1.0 / (2.0 * qubit_frequency), 0.0
    scales = (omega_rwa, 1.0 / (2.0 * qubit_frequency), omega_rwa)

    for iteration in range(1, max_iterations + 1):
        drive_frequency = qubit_frequency - detuning
        if drive_frequency <= 0:
            raise IterationException(
                "반복 중 구동 주파수가 음수가 되었습니다.",
                last_iterate=PhaseResolvedParams(
                    phase=phase,
                    amplitude=amplitude,
                    ppp=ppp,
                    detuning=detuning,
                    iterations=iteration,
                ),
            )
        coeff = _first_order_coefficients(drive_frequency, phase, duration, order)
        half_delta = 0.5 * detuning

        # y 성분: ∫a_Q + (Δ/2)∫a_I(2t − t_g) = 0
        ppp_new = -(coeff.alpha[0] + half_delta * coeff.weighted_i[0]) / (
            coeff.alpha[1] + half_delta * coeff.weighted_i[1]
        )
        # x 성분: (Ω/2)(∫a_I − (Δ/2)∫a_Q(2t − t_g)) = angle/2
        x_integral = (coeff.iota[0] + ppp_new * coeff.iota[1]) - half_delta * (
            coeff.weighted_q[0] + ppp_new * coeff.weighted_q[1]
        )
        amplitude_new = angle / x_integral
        # z 성분: (Δ/2)t_g = (Ω/2)²Z
        z = coeff.z[0] + ppp_new * coeff.z[1] + ppp_new**2 * coeff.z[2]
        detuning_new = amplitude_new**2 * z / (2.0 * duration)

        current = np.array([amplitude, ppp, detuning])
        proposed = np.array([amplitude_new, ppp_new, detuning_new])
        step = proposed - current
        amplitude, ppp, detuning = current + damping * step

        limits = tolerance * np.maximum(np.abs(proposed), scales)
        if np.all(np.abs(step) <= limits):
            logger.debug(f"φ={phase:.4f}: {iteration}회 반복 후 수렴")
            return PhaseResolvedParams(
                phase=phase,
                amplitude=float(amplitude),
                ppp=float(ppp),
                detuning=float(detuning),
                iterations=iteration,
            )

    last = PhaseResolvedParams(
        phase=phase,
        amplitude=float(amplitude),
        ppp=float(ppp),
        detuning=float(detuning),
        iterations=max_iterations,
    )
    logger.error(f"φ={phase:.4f}: 고정점 반복이 {max_iterations}회 내에 수렴하지 않음")
    raise IterationException(
        f"고정점 반복이 {max_iterations}회 내에 수렴하지 않았습니다 (φ={phase:.4f}).",
        last_iterate=last,
    )


def phase_grid(size: int) -> List[float]:
    """[0, π) 위의 등간격 위상 격자"""
    return [math.pi * k / size for k in range(size)]


def first_order_params(
    qubit_frequency: float,
    angle: float,
    duration: float,
    phases: Optional[Sequence[float]] = None,
    order: Optional[int] = None,
    tolerance: Optional[float] = None,
    max_iterations: Optional[int] = None,
    damping: Optional[float] = None,
    max_workers: int = 1,
) -> FirstOrderParams:
    """
    1차 마그누스 근사의 위상 평균 펄스 파라미터

    각 위상마다 반송파를 분해하고 (Ω_I, λ, Δ) 연립식을 고정점 반복으로 푼 뒤
    위상 격자 평균을 반환한다.

    Args:
        qubit_frequency: ω_01 (rad/ns)
        angle: 회전각 (rad)
        duration: t_g (ns)
        phases: 반송파 위상 격자 (기본값: [0, π) 12점)
        order: 급수 절단 차수 K
        tolerance: 고정점 상대 허용 오차
        max_iterations: 최대 반복 횟수
        damping: 감쇠 계수 (0, 1]
        max_workers: 위상별 병렬 작업 수

    Returns:
        FirstOrderParams: 평균 파라미터와 위상별 결과
    """
    order = settings.truncation_order if order is None else order
    tolerance = settings.fixed_point_tolerance if tolerance is None else tolerance
    max_iterations = (
        settings.fixed_point_max_iterations if max_iterations is None else max_iterations
    )
    damping = settings.fixed_point_damping if damping is None else damping
    phases = list(phases) if phases is not None else phase_grid(settings.phase_grid_size)

    if angle <= 0:
        raise DomainException(f"회전각은 양수여야 합니다: {angle}")
    if not phases:
        raise DomainException("위상 격자가 비어 있습니다.")
    n_c = magnus_periods(qubit_frequency, duration)
    if n_c <= 3.0 or round(n_c) <= 3:
        raise DomainException(
            f"N_c = {n_c:.3f} 이므로 1차 보정 급수가 수렴하지 않습니다 (N_c > 3 필요)."
        )

    logger.info(
        f"1차 보정 파라미터 계산 시작: t_g={duration} ns, N_c={n_c:.3f}, 위상 {len(phases)}개"
    )

    def solve(phase: float) -> PhaseResolvedParams:
        return _solve_phase(
            qubit_frequency, angle, duration, phase, order, tolerance, max_iterations, damping
        )

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(solve, phases))
    else:
        results = [solve(phase) for phase in phases]

    return FirstOrderParams(
        amplitude=float(np.mean([r.amplitude for r in results])),
        ppp=float(np.mean([r.ppp for r in results])),
        detuning=float(np.mean([r.detuning for r in results])),
        truncation_order=order,
        phase_grid_size=len(phases),
        iterations_used=max(r.iterations for r in results),
        per_phase=results,
    )


class ParameterSet(NamedTuple):
    """파라미터 표 항목 (계산 불가 시 값 대신 사유)"""

    method: str
    amplitude: Optional[float] = None
    ppp: Optional[float] = None
    detuning: Optional[float] = None
    reason: Optional[str] = None

    @property
    def available(self) -> bool:
        return self.reason is None


def parameter_sets(
    qubit_frequency: float,
    angle: float,
    duration: float,
    phases: Optional[Sequence[float]] = None,
    order: Optional[int] = None,
    tolerance: Optional[float] = None,
    max_iterations: Optional[int] = None,
    max_workers: int = 1,
) -> List[ParameterSet]:
    """
    대수해, 절단 급수, 1차 보정 파라미터를 한 번에 계산

    각 항목의 실패는 예외 대신 사유로 기록한다.
    """
    env = cosine_envelope(duration)
    omega_rwa = rwa_drive_strength(angle, env, duration)
    algebraic = algebraic_params(qubit_frequency)
    entries = [
        ParameterSet(
            "algebraic", omega_rwa * algebraic.drive_scale, algebraic.ppp, 0.0
        )
    ]

    try:
        window = IntegrationWindow(b_minus=0.0, b_plus=duration, beta=0.0)
        series = magnus0_params(env, qubit_frequency, window, order)
        entries.append(
            ParameterSet("truncated-series", omega_rwa * series.drive_scale, series.ppp, 0.0)
        )
    except PulseLabException as e:
        logger.warning(f"절단 급수 파라미터 계산 불가: {e.detail}")
        entries.append(ParameterSet("truncated-series", reason=e.detail))

    try:
        first = first_order_params(
            qubit_frequency,
            angle,
            duration,
            phases=phases,
            order=order,
            tolerance=tolerance,
            max_iterations=max_iterations,
            max_workers=max_workers,
        )
        entries.append(ParameterSet("first-order", first.amplitude, first.ppp, first.detuning))
    except PulseLabException as e:
        logger.warning(f"1차 보정 파라미터 계산 불가: {e.detail}")
        entries.append(ParameterSet("first-order", reason=e.detail))
    return entries

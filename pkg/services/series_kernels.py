"""
급수 커널 서비스
γ/χ 커널, 부분적분 급수, 테일러 적분, 0차 마그누스 보정 파라미터
"""

import logging
import math
from typing import Optional, Sequence

import numpy as np

from core.config import settings
from core.exceptions import ConvergenceException, DomainException, SingularityException
from schemas import IntegrationWindow, Magnus0Params
from services.envelopes import Envelope, TIME_SLACK

logger = logging.getLogger(__name__)

# 연속 증가 판정 횟수
DIVERGENCE_STREAK = 3
# 항 크기 비교 하한 (최대 항 대비)
TERM_FLOOR = 1e-15
# 0/0 판정 상대 허용 오차
DEGENERATE_TOLERANCE = 1e-12


def chi(k: int, sign: str) -> int:
    """χ_±(k) = (1 ± (−1)^k)/2"""
    if k < 0:
        raise DomainException(f"k는 0 이상이어야 합니다: {k}")
    if sign == "plus":
        return 1 if k % 2 == 0 else 0
    if sign == "minus":
        return 1 if k % 2 == 1 else 0
    raise DomainException(f"sign은 'plus' 또는 'minus'여야 합니다: {sign}")


def gamma(index: int, k: int, beta: float) -> float:
    """
    γ 커널

    γ₁(k,β) = (−1)^⌊k/2⌋(χ₊(k)sinβ + χ₋(k)cosβ), γ₂(k,β) = γ₁(k+1,β)

    Args:
        index: 1 또는 2
        k: 차수 (k ≥ 0)
        beta: 위상 (rad)
    """
    if index == 2:
        k = k + 1
    elif index != 1:
        raise DomainException(f"γ 인덱스는 1 또는 2여야 합니다: {index}")
    sign = -1.0 if (k // 2) % 2 else 1.0
    return sign * (chi(k, "plus") * math.sin(beta) + chi(k, "minus") * math.cos(beta))


def _check_divergence(terms: Sequence[float]) -> None:
    """|term(k)| > |term(k−2)| 가 연속 DIVERGENCE_STREAK 번이면 발산"""
    magnitudes = np.abs(np.asarray(terms, dtype=float))
    if magnitudes.size == 0:
        return
    floor = TERM_FLOOR * float(np.max(magnitudes))
    streak = 0
    for k in range(2, magnitudes.size):
        if magnitudes[k] > floor and magnitudes[k] > magnitudes[k - 2]:
            streak += 1
            if streak >= DIVERGENCE_STREAK:
                raise ConvergenceException(
                    f"부분적분 급수가 {k}차에서 발산합니다. 게이트 시간을 늘려주세요."
                )
        else:
            streak = 0


def boundary_terms(
    kind: str,
    jet_lo: np.ndarray,
    jet_hi: np.ndarray,
    nu: float,
    x_lo: float,
    x_hi: float,
    order: int,
) -> np.ndarray:
    """
    부분적분 급수의 항별 값

    ∫h·cos(x) = Σ_m ν^−(m+1)[γ₁(m,x)h^(m)], ∫h·sin(x) = −Σ_m ν^−(m+1)[γ₂(m,x)h^(m)]
    γ는 각 끝점의 반송파 위상에서 평가한다.

    Returns:
        np.ndarray: m = 0..order 의 항
    """
    if kind not in ("cos", "sin"):
        raise DomainException(f"kind는 'cos' 또는 'sin'이어야 합니다: {kind}")
    index, sign = (1, 1.0) if kind == "cos" else (2, -1.0)
    terms = np.zeros(order + 1)
    for m in range(order + 1):
        hi = jet_hi[m] if m < len(jet_hi) else 0.0
        lo = jet_lo[m] if m < len(jet_lo) else 0.0
        bracket = gamma(index, m, x_hi) * hi - gamma(index, m, x_lo) * lo
        terms[m] = sign * bracket / nu ** (m + 1)
    return terms


def boundary_series(
    kind: str,
    jet_lo: np.ndarray,
    jet_hi: np.ndarray,
    nu: float,
    x_lo: float,
    x_hi: float,
    order: int,
) -> float:
    """부분적분 급수 ∫_a^b h(t)·cos/sin(νt+ψ)dt 의 order차 절단값"""
    terms = boundary_terms(kind, jet_lo, jet_hi, nu, x_lo, x_hi, order)
    _check_divergence(terms)
    return float(np.sum(terms))


def oscillatory_integral(
    kind: str,
    env: Envelope,
    nu: float,
    psi: float,
    a: float,
    b: float,
    order: Optional[int] = None,
) -> float:
    """
    ∫_a^b h(t)·cos/sin(νt+ψ)dt 를 부분적분 급수로 계산

    포락선 대역폭이 반송파 주파수 이상이면 급수가 수렴하지 않으므로 먼저 거부한다.
    """
    order = settings.truncation_order if order is None else order
    if env.bandwidth >= abs(nu):
        raise ConvergenceException(
            f"포락선 대역폭 {env.bandwidth:.4g} rad/ns가 반송파 {abs(nu):.4g} rad/ns 이상입니다."
        )
    terms = boundary_terms(
        kind, env.jet(a, order), env.jet(b, order), nu, nu * a + psi, nu * b + psi, order
    )
    _check_divergence(terms)
    return float(np.sum(terms))


def _check_window(env: Envelope, window: IntegrationWindow) -> None:
    if window.b_minus < -TIME_SLACK or window.b_plus > env.duration + TIME_SLACK:
        raise DomainException(
            f"적분 구간 [{window.b_minus}, {window.b_plus}]이 게이트 구간을 벗어났습니다."
        )


def taylor_integral(
    kind: str,
    env: Envelope,
    drive_frequency: float,
    phase: float,
    window: IntegrationWindow,
    k: int,
    expansion_point: Optional[float] = None,
) -> float:
    """
    테일러 적분 𝓘_C(k), 𝓘_S(k)

    ∫_{b₋}^{b₊} (t₁ − t)^k/k! · cos/sin(2ω_d t₁ + 2φ) dt₁ 를 유한 부분적분 합으로 계산

    Args:
        kind: 'cos' (𝓘_C) 또는 'sin' (𝓘_S)
        env: 구간 검증용 포락선
        drive_frequency: ω_d (rad/ns)
        phase: φ (rad)
        window: 적분 구간
        k: 테일러 차수
        expansion_point: 전개 지점 t (기본값: window.t_0)

    Returns:
        float: 적분값
    """
    _check_window(env, window)
    if not 0 <= k <= env.max_derivative_order:
        raise DomainException(f"테일러 차수 {k}가 허용 범위를 벗어났습니다.")

    t = window.t_0 if expansion_point is None else expansion_point
    nu = 2.0 * drive_frequency
    psi = 2.0 * phase

    # (t₁ − t)^k/k! 의 m차 도함수는 (t₁ − t)^(k−m)/(k−m)!
    def poly_jet(x: float) -> np.ndarray:
        return np.array(
            [(x - t) ** (k - m) / math.factorial(k - m) for m in range(k + 1)]
        )

    terms = boundary_terms(
        kind,
        poly_jet(window.b_minus),
        poly_jet(window.b_plus),
        nu,
        nu * window.b_minus + psi,
        nu * window.b_plus + psi,
        k,
    )
    return float(np.sum(terms))


def _bracket_jet(env: Envelope, window: IntegrationWindow, order: int) -> np.ndarray:
    """[∂ᵏs]_{b₋}^{b₊}, k = 0..order"""
    return env.jet(window.b_plus, order) - env.jet(window.b_minus, order)


def _check_convergence_condition(env: Envelope, drive_frequency: float) -> None:
    if env.bandwidth >= 2.0 * drive_frequency:
        raise ConvergenceException(
            f"N_c = {2.0 * drive_frequency / env.bandwidth:.3f} ≤ 1 이므로 급수가 수렴하지 않습니다."
        )


def magnus0_lambda(
    env: Envelope,
    drive_frequency: float,
    window: IntegrationWindow,
    order: Optional[int] = None,
) -> float:
    """
    0차 마그누스 근사의 PPP λ (절단 급수)

    분자와 분모가 함께 소멸하면 모든 λ가 조건을 만족하므로 대수해 1/(2ω_d)를 반환한다.

    Args:
        env: 포락선 모양 s_I
        drive_frequency: ω_d (rad/ns)
        window: 적분 구간
        order: 절단 차수 K

    Returns:
        float: λ (ns)
    """
    order = settings.truncation_order if order is None else order
    _check_window(env, window)
    _check_convergence_condition(env, drive_frequency)

    inv_nu = 1.0 / (2.0 * drive_frequency)
    beta = window.beta
    bracket = _bracket_jet(env, window, order + 1)

    numerator_terms = np.array(
        [inv_nu ** (k + 1) * gamma(2, k, beta) * bracket[k] for k in range(order + 1)]
    )
    correction_terms = np.array(
        [
            inv_nu ** (k + 1) * gamma(1, k, beta) * bracket[k + 1]
            for k in range(order + 1)
        ]
    )
    _check_divergence(numerator_terms)
    _check_divergence(correction_terms)

    numerator = float(np.sum(numerator_terms))
    denominator = float(bracket[0] - np.sum(correction_terms))
    # 경계값 자체의 크기를 기준으로 0/0 판정
    weights = inv_nu ** np.arange(order + 2)
    reference = float(
        np.sum(
            weights
            * (
                np.abs(env.jet(window.b_plus, order + 1))
                + np.abs(env.jet(window.b_minus, order + 1))
            )
        )
    )
    reference = max(reference, 1e-300)

    if abs(denominator) <= DEGENERATE_TOLERANCE * reference:
        if abs(numerator) <= DEGENERATE_TOLERANCE * inv_nu * reference:
            logger.debug("λ 분자/분모가 함께 소멸: 대수해 1/(2ω_d) 사용")
            return inv_nu
        raise SingularityException("λ 급수의 분모가 0입니다.")
    return numerator / denominator


def magnus0_drive_scale(
    env: Envelope,
    drive_frequency: float,
    ppp: float,
    window: IntegrationWindow,
    order: Optional[int] = None,
) -> float:
    """
    0차 마그누스 근사의 구동 세기 배율 Ω_I/Ω_I,RWA (절단 급수)

    Returns:
        float: 무차원 배율
    """
    order = settings.truncation_order if order is None else order
    _check_window(env, window)
    _check_convergence_condition(env, drive_frequency)

    inv_nu = 1.0 / (2.0 * drive_frequency)
    beta = window.beta
    bracket = _bracket_jet(env, window, order + 1)

    terms = np.array(
        [
            inv_nu ** (k + 1)
            * (gamma(1, k, beta) * bracket[k] - ppp * gamma(2, k, beta) * bracket[k + 1])
            for k in range(order + 1)
        ]
    )
    _check_divergence(terms)

    area = env.integral(window.b_minus, window.b_plus)
    denominator = area + float(np.sum(terms))
    if abs(denominator) <= DEGENERATE_TOLERANCE * max(abs(area), 1e-300):
        raise SingularityException("구동 세기 배율의 분모가 0입니다.")
    return area / denominator


def rwa_drive_strength(angle: float, env: Envelope, duration: float) -> float:
    """
    RWA 구동 세기 Ω_I,RWA, Ω·∫₀^{t_g}s_I = angle

    Args:
        angle: 회전각 (rad)
        env: 포락선 모양
        duration: 게이트 시간 t_g (ns)
    """
    if angle <= 0:
        raise DomainException(f"회전각은 양수여야 합니다: {angle}")
    area = env.integral(0.0, duration)
    if area <= 0:
        raise SingularityException("포락선 면적이 0입니다.")
    return angle / area


def algebraic_params(drive_frequency: float) -> Magnus0Params:
    """대수해: λ = 1/(2ω_d), Ω_I = Ω_I,RWA"""
    if drive_frequency <= 0:
        raise DomainException("구동 주파수는 양수여야 합니다.")
    return Magnus0Params(
        ppp=1.0 / (2.0 * drive_frequency),
        drive_scale=1.0,
        truncation_order=0,
        method="algebraic",
    )


def magnus0_params(
    env: Envelope,
    drive_frequency: float,
    window: IntegrationWindow,
    order: Optional[int] = None,
) -> Magnus0Params:
    """절단 급수 λ와 구동 세기 배율을 함께 계산"""
    order = settings.truncation_order if order is None else order
    ppp = magnus0_lambda(env, drive_frequency, window, order)
    scale = magnus0_drive_scale(env, drive_frequency, ppp, window, order)
    logger.debug(f"0차 급수 파라미터: λ={ppp:.6g} ns, 배율={scale:.10f}")
    return Magnus0Params(
        ppp=ppp, drive_scale=scale, truncation_order=order, method="truncated-series"
    )

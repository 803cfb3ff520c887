"""
펄스 포락선 서비스
코사인 포락선과 그 도함수/역도함수, 직교 포락선, 반송파 분해를 제공
"""

import logging
import math
from abc import ABC, abstractmethod
from functools import lru_cache
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss

from core.config import settings
from core.exceptions import DomainException, SingularityException
from schemas import CarrierSplit, PulseParams

logger = logging.getLogger(__name__)

TimeLike = Union[float, np.ndarray]

# 패널당 가우스-르장드르 노드 수
GAUSS_NODES = 32
# 끝점 판정 허용 오차 (ns)
TIME_SLACK = 1e-12

# cos(mπ/2), sin(mπ/2)
_QUARTER_COS = (1.0, 0.0, -1.0, 0.0)
_QUARTER_SIN = (0.0, 1.0, 0.0, -1.0)


def quarter_turn(m: int) -> Tuple[float, float]:
    """(cos(mπ/2), sin(mπ/2)) 정확값"""
    return _QUARTER_COS[m % 4], _QUARTER_SIN[m % 4]


@lru_cache(maxsize=8)
def _legendre_rule(n: int) -> Tuple[np.ndarray, np.ndarray]:
    return leggauss(n)


def gauss_legendre(
    func: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    bandwidth: float = 0.0,
) -> float:
    """
    대역 제한 함수의 복합 가우스-르장드르 적분

    Args:
        func: 벡터화된 피적분 함수
        a: 하한
        b: 상한
        bandwidth: 피적분 함수의 최대 각주파수 (rad/ns)

    Returns:
        float: ∫_a^b func
    """
    if a == b:
        return 0.0
    # 패널 하나가 위상 4π 이상을 덮지 않도록 분할
    panels = max(1, int(math.ceil(abs(bandwidth) * abs(b - a) / (4.0 * math.pi))))
    nodes, weights = _legendre_rule(GAUSS_NODES)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    points = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    values = np.asarray(func(points), dtype=float).reshape(panels, GAUSS_NODES)
    return float(np.sum(half * (values @ weights)))


def leibniz(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """두 제트의 곱 규칙: (fg)^(k) = Σ_j C(k,j) f^(j) g^(k−j)"""
    n = min(len(left), len(right))
    out = np.zeros(n)
    for k in range(n):
        out[k] = sum(math.comb(k, j) * left[j] * right[k - j] for j in range(k + 1))
    return out


def trig_jet(kind: str, nu: float, psi: float, t: float, n: int) -> np.ndarray:
    """[d^m/dt^m cos/sin(νt+ψ)]_{m=0..n}"""
    x = nu * t + psi + np.arange(n + 1) * (math.pi / 2.0)
    scale = nu ** np.arange(n + 1)
    return scale * (np.cos(x) if kind == "cos" else np.sin(x))


class Envelope(ABC):
    """해석적 도함수를 가진 포락선 공통 인터페이스"""

    duration: float
    max_derivative_order: int

    @abstractmethod
    def derivative(self, t: TimeLike, k: int) -> TimeLike:
        """k차 도함수 (k=0은 값)"""

    @property
    @abstractmethod
    def bandwidth(self) -> float:
        """포함된 각주파수 성분의 상한 (rad/ns)"""

    def value(self, t: TimeLike) -> TimeLike:
        return self.derivative(t, 0)

    def jet(self, t: float, n: int) -> np.ndarray:
        """[f(t), f'(t), ..., f^(n)(t)]"""
        return np.array([float(self.derivative(t, k)) for k in range(n + 1)])

    def integral(self, a: float, b: float) -> float:
        return gauss_legendre(self.value, a, b, self.bandwidth)

    def antiderivative(self, t: float) -> float:
        """∫_0^t f"""
        return self.integral(0.0, t)


class CosineEnvelope(Envelope):
    """코사인 포락선 s_I(t) = (1 − cos(2πt/t_g))/2

    k ≥ 1 도함수는 −½wᵏcos(wt + kπ/2) 순환식으로 계산한다.
    """

    def __init__(self, duration: float, max_derivative_order: Optional[int] = None):
        if duration <= 0:
            raise DomainException(f"게이트 시간은 양수여야 합니다: {duration}")
        self.duration = float(duration)
        self.max_derivative_order = (
            settings.max_derivative_order
            if max_derivative_order is None
            else max_derivative_order
        )
        self.omega = 2.0 * math.pi / self.duration

    def __repr__(self) -> str:
        return f"CosineEnvelope(duration={self.duration})"

    @property
    def bandwidth(self) -> float:
        return self.omega

    def derivative(self, t: TimeLike, k: int) -> TimeLike:
        w = self.omega
        if k == 0:
            return 0.5 * (1.0 - np.cos(w * t))
        return -0.5 * w**k * np.cos(w * t + k * math.pi / 2.0)

    def jet(self, t: float, n: int) -> np.ndarray:
        w = self.omega
        k = np.arange(n + 1)
        out = -0.5 * w**k * np.cos(w * t + k * (math.pi / 2.0))
        out[0] += 0.5
        return out

    def antiderivative(self, t: TimeLike) -> TimeLike:
        w = self.omega
        return t / 2.0 - np.sin(w * t) / (2.0 * w)

    def integral(self, a: float, b: float) -> float:
        return float(self.antiderivative(b) - self.antiderivative(a))

    def second_antiderivative(self, t: TimeLike) -> TimeLike:
        """∫_0^t ∫_0^τ s_I"""
        w = self.omega
        return t**2 / 4.0 + (np.cos(w * t) - 1.0) / (2.0 * w**2)

    def square_integral(self, t: TimeLike) -> TimeLike:
        """∫_0^t s_I²"""
        w = self.omega
        return 0.25 * (
            1.5 * t - 2.0 * np.sin(w * t) / w + np.sin(2.0 * w * t) / (4.0 * w)
        )

    def derivative_square_integral(self, t: TimeLike) -> TimeLike:
        """∫_0^t (∂s_I/∂t)²"""
        w = self.omega
        return (w**2 / 8.0) * (t - np.sin(2.0 * w * t) / (2.0 * w))


@lru_cache(maxsize=256)
def cosine_envelope(duration: float) -> CosineEnvelope:
    return CosineEnvelope(duration)


class DerivativeEnvelope(Envelope):
    """n차 도함수를 포락선으로 취급"""

    def __init__(self, base: Envelope, order: int):
        if order < 0:
            raise DomainException(f"도함수 차수는 0 이상이어야 합니다: {order}")
        self.base = base
        self.order = order
        self.duration = base.duration
        self.max_derivative_order = base.max_derivative_order - order

    @property
    def bandwidth(self) -> float:
        return self.base.bandwidth

    def derivative(self, t: TimeLike, k: int) -> TimeLike:
        return self.base.derivative(t, k + self.order)

    def jet(self, t: float, n: int) -> np.ndarray:
        return self.base.jet(t, n + self.order)[self.order :]

    def integral(self, a: float, b: float) -> float:
        if self.order == 0:
            return self.base.integral(a, b)
        return float(
            self.base.derivative(b, self.order - 1)
            - self.base.derivative(a, self.order - 1)
        )


class DerivativeSeriesEnvelope(Envelope):
    """Σ_m c_m f^(m) 형태의 도함수 급수 포락선"""

    def __init__(self, base: Envelope, coefficients: Sequence[float]):
        self.base = base
        self.coefficients = np.asarray(coefficients, dtype=float)
        self.duration = base.duration
        self.max_derivative_order = base.max_derivative_order

    @property
    def bandwidth(self) -> float:
        return self.base.bandwidth

    def derivative(self, t: TimeLike, k: int) -> TimeLike:
        total: TimeLike = 0.0
        for m, c in enumerate(self.coefficients):
            if c != 0.0:
                total = total + c * self.base.derivative(t, k + m)
        return total

    def jet(self, t: float, n: int) -> np.ndarray:
        order = len(self.coefficients) - 1
        base_jet = self.base.jet(t, n + order)
        return np.array(
            [float(np.dot(self.coefficients, base_jet[k : k + order + 1])) for k in range(n + 1)]
        )


class SumEnvelope(Envelope):
    """포락선의 선형 결합 Σ c_i f_i"""

    def __init__(self, terms: Sequence[Tuple[float, Envelope]]):
        if not terms:
            raise DomainException("선형 결합 항이 비어 있습니다.")
        self.terms = [(float(c), env) for c, env in terms]
        self.duration = terms[0][1].duration
        self.max_derivative_order = min(env.max_derivative_order for _, env in terms)

    @property
    def bandwidth(self) -> float:
        return max(env.bandwidth for _, env in self.terms)

    def derivative(self, t: TimeLike, k: int) -> TimeLike:
        return sum(c * env.derivative(t, k) for c, env in self.terms)

    def jet(self, t: float, n: int) -> np.ndarray:
        return sum(c * env.jet(t, n) for c, env in self.terms)

    def integral(self, a: float, b: float) -> float:
        return sum(c * env.integral(a, b) for c, env in self.terms)


class ModulatedEnvelope(Envelope):
    """f(t)·cos(νt+ψ) 또는 f(t)·sin(νt+ψ) 곱 포락선 (라이프니츠 규칙)"""

    def __init__(self, base: Envelope, nu: float, psi: float, kind: str = "cos"):
        if kind not in ("cos", "sin"):
            raise DomainException(f"알 수 없는 변조 종류: {kind}")
        self.base = base
        self.nu = float(nu)
        self.psi = float(psi)
        self.kind = kind
        self.duration = base.duration
        self.max_derivative_order = base.max_derivative_order

    @property
    def bandwidth(self) -> float:
        return self.base.bandwidth + abs(self.nu)

    def derivative(self, t: TimeLike, k: int) -> TimeLike:
        total: TimeLike = 0.0
        for j in range(k + 1):
            x = self.nu * t + self.psi + (k - j) * math.pi / 2.0
            trig = np.cos(x) if self.kind == "cos" else np.sin(x)
            total = total + math.comb(k, j) * self.base.derivative(t, j) * (
                self.nu ** (k - j) * trig
            )
        return total

    def jet(self, t: float, n: int) -> np.ndarray:
        return leibniz(
            self.base.jet(t, n), trig_jet(self.kind, self.nu, self.psi, t, n)
        )


class ProductEnvelope(Envelope):
    """두 포락선의 곱 f·g"""

    def __init__(self, left: Envelope, right: Envelope):
        self.left = left
        self.right = right
        self.duration = left.duration
        self.max_derivative_order = min(
            left.max_derivative_order, right.max_derivative_order
        )

    @property
    def bandwidth(self) -> float:
        return self.left.bandwidth + self.right.bandwidth

    def derivative(self, t: TimeLike, k: int) -> TimeLike:
        total: TimeLike = 0.0
        for j in range(k + 1):
            total = total + math.comb(k, j) * self.left.derivative(
                t, j
            ) * self.right.derivative(t, k - j)
        return total

    def jet(self, t: float, n: int) -> np.ndarray:
        return leibniz(self.left.jet(t, n), self.right.jet(t, n))


class LinearEnvelope(Envelope):
    """일차 함수 slope·t + intercept"""

    def __init__(self, slope: float, intercept: float, duration: float):
        self.slope = float(slope)
        self.intercept = float(intercept)
        self.duration = float(duration)
        self.max_derivative_order = settings.max_derivative_order

    @property
    def bandwidth(self) -> float:
        return 0.0

    def derivative(self, t: TimeLike, k: int) -> TimeLike:
        if k == 0:
            return self.slope * t + self.intercept
        if k == 1:
            return self.slope + 0.0 * t
        return 0.0 * t

    def integral(self, a: float, b: float) -> float:
        return 0.5 * self.slope * (b**2 - a**2) + self.intercept * (b - a)


class AntiderivativeEnvelope(Envelope):
    """F(t) = ∫_a^t f 를 포락선으로 취급"""

    def __init__(self, base: Envelope, anchor: float):
        self.base = base
        self.anchor = float(anchor)
        self.duration = base.duration
        self.max_derivative_order = base.max_derivative_order + 1
        self._offset = float(base.antiderivative(self.anchor))

    @property
    def bandwidth(self) -> float:
        return self.base.bandwidth

    def _primitive(self, t: TimeLike) -> TimeLike:
        if isinstance(self.base, CosineEnvelope) or np.ndim(t) == 0:
            return self.base.antiderivative(t) - self._offset
        flat = [self.base.antiderivative(float(x)) for x in np.ravel(t)]
        return np.asarray(flat).reshape(np.shape(t)) - self._offset

    def derivative(self, t: TimeLike, k: int) -> TimeLike:
        if k > 0:
            return self.base.derivative(t, k - 1)
        return self._primitive(t)

    def jet(self, t: float, n: int) -> np.ndarray:
        out = np.empty(n + 1)
        out[0] = float(self._primitive(t))
        if n > 0:
            out[1:] = self.base.jet(t, n - 1)
        return out


def _check_time(env: Envelope, t: float) -> None:
    if not -TIME_SLACK <= t <= env.duration + TIME_SLACK:
        raise DomainException(
            f"시간 {t} ns가 게이트 구간 [0, {env.duration}]을 벗어났습니다."
        )


def eval_derivative(env: Envelope, t: float, k: int) -> float:
    """
    포락선의 k차 도함수를 해석적으로 평가

    Args:
        env: 포락선
        t: 시간 (ns), 0 ≤ t ≤ t_g
        k: 도함수 차수, 0 ≤ k ≤ max_derivative_order

    Returns:
        float: ∂ᵏs/∂tᵏ(t)
    """
    _check_time(env, t)
    if not 0 <= k <= env.max_derivative_order:
        raise DomainException(
            f"도함수 차수 {k}가 허용 범위 [0, {env.max_derivative_order}]를 벗어났습니다."
        )
    return float(env.derivative(t, k))


def antiderivative(env: Envelope, t: float) -> float:
    """∫_0^t s_I(τ)dτ"""
    _check_time(env, t)
    return float(env.antiderivative(t))


def quadrature_envelope(
    env: Envelope,
    ppp: float,
    t: float,
    amplitude: float = 1.0,
    detuning_rescale: Optional[Tuple[float, float]] = None,
) -> float:
    """
    직교 포락선 𝓔_Q = λ·∂𝓔_I/∂t

    Args:
        env: 동위상 포락선 모양 s_I
        ppp: 펄스 비례 파라미터 λ (ns)
        t: 시간 (ns)
        amplitude: 구동 세기 Ω_I (rad/ns)
        detuning_rescale: (ω_01 − Δ, Δ(t)) 쌍. 주어지면
            (ω_01 − Δ)/(ω_01 − Δ − Δ(t)) 배율을 곱한다.

    Returns:
        float: 𝓔_Q(t)
    """
    _check_time(env, t)
    value = ppp * amplitude * float(env.derivative(t, 1))
    if detuning_rescale is None:
        return value
    static_frequency, lab_detuning = detuning_rescale
    return value * frequency_ratio(static_frequency, static_frequency - lab_detuning)


def frequency_ratio(static_frequency: float, drive_frequency: TimeLike) -> TimeLike:
    """(ω_01 − Δ)/ω_d(t), 분모가 0에 가까우면 특이점 예외"""
    if np.any(np.abs(drive_frequency) <= 1e-12 * max(abs(static_frequency), 1.0)):
        raise SingularityException(
            "구동 주파수가 0에 가까워 직교 포락선 배율을 계산할 수 없습니다."
        )
    return static_frequency / drive_frequency


def pulse_signals(
    p: PulseParams,
    t: TimeLike,
    amplitude_scale: float = 1.0,
    quadrature_factor: TimeLike = 1.0,
) -> Tuple[TimeLike, TimeLike]:
    """
    회전축 θ가 적용된 동위상/직교 신호

    𝓔_I ↦ cosθ·𝓔_I − sinθ·𝓔_Q, 𝓔_Q ↦ cosθ·𝓔_Q + sinθ·𝓔_I
    """
    env = cosine_envelope(p.duration)
    amplitude = amplitude_scale * p.amplitude
    e_i = amplitude * env.derivative(t, 0)
    e_q = p.ppp * amplitude * env.derivative(t, 1) * quadrature_factor
    if p.axis == 0.0:
        return e_i, e_q
    c, s = math.cos(p.axis), math.sin(p.axis)
    return c * e_i - s * e_q, c * e_q + s * e_i


def rotating_frame_drive(
    e_i: TimeLike, e_q: TimeLike, carrier: TimeLike
) -> Tuple[TimeLike, TimeLike]:
    """
    회전 좌표계 구동 성분

    A_I = ½(𝓔_I(1+cosX) + 𝓔_Q sinX), A_Q = ½(𝓔_Q(1−cosX) + 𝓔_I sinX)
    """
    c = np.cos(carrier)
    s = np.sin(carrier)
    return 0.5 * (e_i * (1.0 + c) + e_q * s), 0.5 * (e_q * (1.0 - c) + e_i * s)


def magnus_periods(drive_frequency: float, duration: float) -> float:
    """N_c = ω_d·t_g/π"""
    return drive_frequency * duration / math.pi


def split_carrier(drive_frequency: float, duration: float, phase: float) -> CarrierSplit:
    """
    반송파를 게이트 시간에 정합하는 성분과 잔여 성분으로 분해

    Args:
        drive_frequency: ω_d (rad/ns)
        duration: t_g (ns)
        phase: φ (rad)

    Returns:
        CarrierSplit: N̂_c, ω̂_d, ω̃_d, φ̂, φ̃
    """
    if drive_frequency <= 0 or duration <= 0:
        raise DomainException("구동 주파수와 게이트 시간은 양수여야 합니다.")

    n_hat = int(math.floor(duration * drive_frequency / math.pi + 0.5))
    omega_hat = math.pi * n_hat / duration
    omega_tilde = drive_frequency - omega_hat
    split = CarrierSplit(
        n_hat=n_hat,
        omega_hat=omega_hat,
        omega_tilde=omega_tilde,
        phi_hat=phase + omega_tilde * duration / 2.0,
        phi_tilde=-omega_tilde * duration / 2.0,
    )
    logger.debug(f"반송파 분해: N̂_c={n_hat}, ω̃_d={omega_tilde:.3e} rad/ns")
    return split


def modulated_envelope(
    env: Envelope, split: CarrierSplit
) -> Tuple[ModulatedEnvelope, ModulatedEnvelope]:
    """
    비정합 반송파 성분을 포락선에 흡수

    Returns:
        (𝓔·cos(2ω̃_d t+2φ̃), 𝓔·sin(2ω̃_d t+2φ̃))
    """
    nu = 2.0 * split.omega_tilde
    psi = 2.0 * split.phi_tilde
    return (
        ModulatedEnvelope(env, nu, psi, "cos"),
        ModulatedEnvelope(env, nu, psi, "sin"),
    )

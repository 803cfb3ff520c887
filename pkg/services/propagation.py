"""
시간 발전 서비스
2준위/RWA/4준위 회전 좌표계 해밀토니안, 정확 적분 및 마그누스 전파, 충실도와 누설
"""

import logging
import math
from functools import partial
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import solve_ivp

from core.config import settings
from core.exceptions import DomainException, IntegrationException
from schemas import IntegrationWindow, LevelSystem, Propagator, PulseParams
from services.envelopes import (
    cosine_envelope,
    frequency_ratio,
    pulse_signals,
    rotating_frame_drive,
)
from services.magnus1 import magnus_vector
from services.series_kernels import rwa_drive_strength

logger = logging.getLogger(__name__)

Hamiltonian = Callable[[float], np.ndarray]
DriveFrequency = Callable[[float], Tuple[float, float]]
MatrixLike = Union[np.ndarray, Propagator]

ENGINES = ("exact", "magnus0", "magnus1", "rwa")
# 충실도/누설 입력 유니터리 허용 오차
UNITARITY_TOLERANCE = 1e-8

IDENTITY2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def transition_operators(dimension: int, j: int, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """σ_x^{jk} = |j⟩⟨k| + |k⟩⟨j|, σ_y^{jk} = −i|j⟩⟨k| + i|k⟩⟨j|"""
    sx = np.zeros((dimension, dimension), dtype=complex)
    sy = np.zeros((dimension, dimension), dtype=complex)
    sx[j, k] = sx[k, j] = 1.0
    sy[j, k] = -1j
    sy[k, j] = 1j
    return sx, sy


_TRANSITIONS_4 = {
    name: transition_operators(4, int(name[0]), int(name[1]))
    for name in ("01", "12", "23", "03")
}


def _matrix(u: MatrixLike) -> np.ndarray:
    return u.matrix if isinstance(u, Propagator) else np.asarray(u, dtype=complex)


def two_level_hamiltonian(p: PulseParams, qubit_frequency: float, t: float) -> np.ndarray:
    """
    비-RWA 2준위 회전 좌표계 해밀토니안

    H = −(Δ/2)σ_z + A_I σ_x + A_Q σ_y, ω_d = ω_01 − Δ

    Args:
        p: 펄스 파라미터
        qubit_frequency: ω_01 (rad/ns)
        t: 시간 (ns)

    Returns:
        np.ndarray: 2×2 에르미트 행렬
    """
    drive = qubit_frequency - p.detuning
    e_i, e_q = pulse_signals(p, t)
    a_i, a_q = rotating_frame_drive(e_i, e_q, 2.0 * drive * t + 2.0 * p.phase)
    return -0.5 * p.detuning * SIGMA_Z + a_i * SIGMA_X + a_q * SIGMA_Y


def rwa_hamiltonian(p: PulseParams, qubit_frequency: float, t: float) -> np.ndarray:
    """RWA 해밀토니안 −(Δ/2)σ_z + ½(𝓔_I σ_x + 𝓔_Q σ_y)"""
    e_i, e_q = pulse_signals(p, t)
    return -0.5 * p.detuning * SIGMA_Z + 0.5 * (e_i * SIGMA_X + e_q * SIGMA_Y)


def constant_drive_frequency(qubit_frequency: float, detuning: float) -> DriveFrequency:
    """Ω_Δ = 0 인 경우의 상수 구동 주파수"""
    value = qubit_frequency - detuning
    return lambda t: (value, value)


def four_level_hamiltonian(
    p: PulseParams,
    levels: LevelSystem,
    drive_frequency: Optional[DriveFrequency],
    t: float,
) -> np.ndarray:
    """
    4준위 회전 좌표계 해밀토니안

    대각 성분은 ω_0j − j·ω_d′(t), 구동 블록 {01, 12, 23}은 η_jk(A_x, A_y),
    03 블록은 이중 회전 직교 성분을 사용한다. 구동 세기는 ε 배.

    Args:
        p: 펄스 파라미터 (amplitude_scale = ε)
        levels: 4준위 시스템
        drive_frequency: t ↦ (ω_d(t), ω_d′(t)), None이면 상수 ω_01 − Δ
        t: 시간 (ns)

    Returns:
        np.ndarray: 4×4 에르미트 행렬
    """
    if levels.dimension != 4:
        raise DomainException("4준위 해밀토니안에는 4준위 시스템이 필요합니다.")
    drive = four_level_drive(p, levels, drive_frequency, t)

    h = np.diag(
        [levels.energies[j] - j * drive.drive_frequency_prime for j in range(4)]
    ).astype(complex)
    for name in ("01", "12", "23"):
        eta = levels.eta.get(name, 0.0)
        if eta != 0.0:
            sx, sy = _TRANSITIONS_4[name]
            h += eta * (drive.a_x * sx + drive.a_y * sy)

    eta03 = levels.eta.get("03", 0.0)
    if eta03 != 0.0:
        sx, sy = _TRANSITIONS_4["03"]
        h += eta03 * (drive.a03_x * sx + drive.a03_y * sy)
    return h


class FourLevelDrive(NamedTuple):
    """4준위 구동 성분과 순간 구동 주파수"""

    a_x: float
    a_y: float
    a03_x: float
    a03_y: float
    drive_frequency: float
    drive_frequency_prime: float


def four_level_drive(
    p: PulseParams,
    levels: LevelSystem,
    drive_frequency: Optional[DriveFrequency],
    t: float,
) -> FourLevelDrive:
    """
    4준위 구동의 회전 좌표계 성분 (A_x, A_y)와 03 전이의 이중 회전 성분

    ε는 𝓔_I, 𝓔_Q 모두에, (ω_01 − Δ)/ω_d(t) 배율은 𝓔_Q에만 적용한다.
    """
    static = levels.qubit_frequency - p.detuning
    if drive_frequency is None:
        omega_d, omega_d_prime = static, static
    else:
        omega_d, omega_d_prime = drive_frequency(t)

    e_i, e_q = pulse_signals(
        p,
        t,
        amplitude_scale=p.amplitude_scale,
        quadrature_factor=frequency_ratio(static, omega_d),
    )
    x = 2.0 * (omega_d * t + p.phase)
    a_x, a_y = rotating_frame_drive(e_i, e_q, x)
    c, s = math.cos(x), math.sin(x)
    return FourLevelDrive(
        a_x=float(a_x),
        a_y=float(a_y),
        a03_x=float(c * a_x - s * a_y),
        a03_y=float(c * a_y + s * a_x),
        drive_frequency=float(omega_d),
        drive_frequency_prime=float(omega_d_prime),
    )


def evolve(
    hamiltonian: Hamiltonian,
    t0: float,
    times: Sequence[float],
    rtol: Optional[float] = None,
    atol: Optional[float] = None,
) -> List[Propagator]:
    """
    i·dU/dt = H(t)U, U(t0) = I 를 적응형 적분하여 주어진 시각들의 U(t0, t) 반환

    Args:
        hamiltonian: t ↦ H(t)
        t0: 시작 시각 (ns)
        times: 오름차순 관측 시각 (모두 > t0)
        rtol: 상대 허용 오차
        atol: 절대 허용 오차

    Returns:
        List[Propagator]: 각 시각의 전파 연산자
    """
    rtol = settings.integrator_rtol if rtol is None else rtol
    atol = settings.integrator_atol if atol is None else atol
    times = [float(t) for t in times]
    if not times or times[0] <= t0 or any(b <= a for a, b in zip(times, times[1:])):
        raise DomainException("관측 시각은 t0보다 크고 오름차순이어야 합니다.")

    dim = hamiltonian(t0).shape[0]

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        return (-1j * (hamiltonian(t) @ y.reshape(dim, dim))).ravel()

    sol = solve_ivp(
        rhs,
        (t0, times[-1]),
        np.eye(dim, dtype=complex).ravel(),
        method=settings.integrator_method,
        t_eval=times,
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        logger.error(f"시간 발전 적분 실패: {sol.message}")
        raise IntegrationException(f"시간 발전 적분에 실패했습니다: {sol.message}")
    return [
        Propagator.from_matrix(sol.y[:, i].reshape(dim, dim)) for i in range(len(times))
    ]


def propagate_exact(
    hamiltonian: Hamiltonian,
    t0: float,
    t1: float,
    rtol: Optional[float] = None,
    atol: Optional[float] = None,
) -> Propagator:
    """U(t0, t1) 정확 적분"""
    if not t0 < t1:
        raise DomainException(f"적분 구간은 t0 < t1 이어야 합니다: [{t0}, {t1}]")
    return evolve(hamiltonian, t0, [t1], rtol, atol)[0]


def pauli_exponential(vector: Sequence[float]) -> np.ndarray:
    """exp(−i v·σ) = cos|v|·I − i·sin|v|·v̂·σ"""
    v = np.asarray(vector, dtype=float)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return IDENTITY2.copy()
    n = v / norm
    generator = n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z
    return math.cos(norm) * IDENTITY2 - 1j * math.sin(norm) * generator


def propagate_magnus(
    p: PulseParams,
    qubit_frequency: float,
    order: int,
    window: Optional[IntegrationWindow] = None,
    method: str = "auto",
    truncation_order: Optional[int] = None,
    rtol: Optional[float] = None,
    atol: Optional[float] = None,
) -> Propagator:
    """
    마그누스 전개 전파 연산자 exp(−i(H̄⁽⁰⁾ [+ H̄⁽¹⁾]))

    Args:
        p: 펄스 파라미터
        qubit_frequency: ω_01 (rad/ns)
        order: 0 또는 1
        window: 적분 구간 (기본값: 전체 게이트)
        method: 'series', 'quadrature', 'auto'
        truncation_order: 급수 절단 차수
    """
    vector = magnus_vector(
        p,
        qubit_frequency,
        order=order,
        window=window,
        method=method,
        truncation_order=truncation_order,
        rtol=rtol,
        atol=atol,
    )
    return Propagator.from_matrix(pauli_exponential(vector))


def target_unitary(angle: float, axis: float = 0.0) -> np.ndarray:
    """exp(−i(angle/2)(cosθ·σ_x + sinθ·σ_y))"""
    half = 0.5 * angle
    return pauli_exponential((half * math.cos(axis), half * math.sin(axis), 0.0))


def _check_unitary(u: np.ndarray, name: str) -> None:
    defect = float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0])))
    if defect > UNITARITY_TOLERANCE:
        raise DomainException(f"{name}이(가) 유니터리가 아닙니다 (결함 {defect:.2e}).")


def gate_fidelity(u: MatrixLike, v: MatrixLike, check_unitarity: bool = True) -> float:
    """
    게이트 충실도 F(U,V) = (d + |Tr(UV†)|²)/(d(d+1)), d = 2 이면 (2 + |Tr(UV†)|²)/6

    전역 위상에 대해 불변이다. 누설이 있는 투영 블록은 check_unitarity=False로 평가한다.
    """
    mu, mv = _matrix(u), _matrix(v)
    if mu.shape != mv.shape:
        raise DomainException(f"행렬 크기가 다릅니다: {mu.shape} vs {mv.shape}")
    if check_unitarity:
        _check_unitary(mu, "U")
        _check_unitary(mv, "V")
    d = mu.shape[0]
    overlap = abs(np.trace(mu @ mv.conj().T)) ** 2
    return float((d + overlap) / (d * (d + 1)))


def cardinal_states(dimension: int = 2) -> List[np.ndarray]:
    """{0,1} 부분공간에 묻힌 블로흐 구의 여섯 기본 상태 (±x, ±y, ±z)"""
    r = 1.0 / math.sqrt(2.0)
    amplitudes = [
        (r, r),
        (r, -r),
        (r, 1j * r),
        (r, -1j * r),
        (1.0, 0.0),
        (0.0, 1.0),
    ]
    states = []
    for c0, c1 in amplitudes:
        psi = np.zeros(dimension, dtype=complex)
        psi[0], psi[1] = c0, c1
        states.append(psi)
    return states


def leakage(u: MatrixLike, check_unitarity: bool = True) -> float:
    """
    누설 γ_L = (1/6)Σ_{f∈{2,3}}Σ_ψ |⟨f|U|ψ⟩|²

    Args:
        u: 4×4 유니터리
        check_unitarity: 입력 유니터리 검증 여부

    Returns:
        float: γ_L ∈ [0, 1]
    """
    m = _matrix(u)
    if m.shape[0] < 3:
        raise DomainException("누설 계산에는 3준위 이상의 전파 연산자가 필요합니다.")
    if check_unitarity:
        _check_unitary(m, "U")
    total = 0.0
    for psi in cardinal_states(m.shape[0]):
        out = m @ psi
        total += float(np.sum(np.abs(out[2:]) ** 2))
    return total / 6.0


def computational_block(u: MatrixLike) -> Propagator:
    """계산 부분공간 2×2 블록과 그 유니터리 결함"""
    return Propagator.from_matrix(_matrix(u)[:2, :2].copy())


def two_level_propagator(
    p: PulseParams,
    qubit_frequency: float,
    engine: str = "exact",
    window: Optional[IntegrationWindow] = None,
    rtol: Optional[float] = None,
    atol: Optional[float] = None,
    truncation_order: Optional[int] = None,
) -> Propagator:
    """
    선택한 엔진으로 2준위 게이트 전파 연산자 계산

    Args:
        p: 펄스 파라미터
        qubit_frequency: ω_01 (rad/ns)
        engine: 'exact', 'magnus0', 'magnus1', 'rwa'
        window: 마그누스 엔진의 적분 구간 (기본값: 전체 게이트)
    """
    if engine == "exact":
        return propagate_exact(
            partial(two_level_hamiltonian, p, qubit_frequency), 0.0, p.duration, rtol, atol
        )
    if engine == "rwa":
        return propagate_exact(
            partial(rwa_hamiltonian, p, qubit_frequency), 0.0, p.duration, rtol, atol
        )
    if engine in ("magnus0", "magnus1"):
        return propagate_magnus(
            p,
            qubit_frequency,
            order=int(engine[-1]),
            window=window,
            truncation_order=truncation_order,
            rtol=rtol,
            atol=atol,
        )
    raise DomainException(f"알 수 없는 전파 엔진: {engine}")


def four_level_propagator(
    p: PulseParams,
    levels: LevelSystem,
    drive_frequency: Optional[DriveFrequency] = None,
    rtol: Optional[float] = None,
    atol: Optional[float] = None,
) -> Propagator:
    """4준위 게이트 전파 연산자 (정확 적분)"""
    return propagate_exact(
        partial(four_level_hamiltonian, p, levels, drive_frequency),
        0.0,
        p.duration,
        rtol,
        atol,
    )


def coherent_error(u: MatrixLike, p: PulseParams, check_unitarity: bool = True) -> float:
    """1 − F(U, 목표 회전)"""
    target = target_unitary(p.angle, p.axis)
    return 1.0 - gate_fidelity(u, target, check_unitarity=check_unitarity)


def error_trace(
    p: PulseParams,
    qubit_frequency: float,
    times: Sequence[float],
    engine: str = "exact",
    rtol: Optional[float] = None,
    atol: Optional[float] = None,
) -> List[float]:
    """
    시간에 따른 오차 1 − F(U(0,t), U_RWA(0,t))

    기준 U_RWA(0,t)는 Ω_RWA·∫₀ᵗs_I 만큼의 이상적 회전이다.

    Args:
        p: 펄스 파라미터
        qubit_frequency: ω_01 (rad/ns)
        times: 관측 시각 (ns), 0 < t ≤ t_g, 오름차순
        engine: 전파 엔진

    Returns:
        List[float]: 각 시각의 오차
    """
    env = cosine_envelope(p.duration)
    omega_rwa = rwa_drive_strength(p.angle, env, p.duration)
    times = [float(t) for t in times]
    if any(t <= 0 or t > p.duration for t in times):
        raise DomainException("관측 시각은 (0, t_g] 범위여야 합니다.")

    if engine in ("exact", "rwa"):
        builder = two_level_hamiltonian if engine == "exact" else rwa_hamiltonian
        propagators = evolve(partial(builder, p, qubit_frequency), 0.0, times, rtol, atol)
    elif engine in ("magnus0", "magnus1"):
        propagators = [
            propagate_magnus(
                p,
                qubit_frequency,
                order=int(engine[-1]),
                window=IntegrationWindow(b_minus=0.0, b_plus=t, beta=2.0 * p.phase),
                rtol=rtol,
                atol=atol,
            )
            for t in times
        ]
    else:
        raise DomainException(f"알 수 없는 전파 엔진: {engine}")

    errors = []
    for t, u in zip(times, propagators):
        reference = target_unitary(omega_rwa * float(env.antiderivative(t)), p.axis)
        errors.append(1.0 - gate_fidelity(u, reference, check_unitarity=False))
    return errors

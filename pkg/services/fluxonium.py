"""
플럭소니움 서비스
회로 에너지로부터 스펙트럼과 전하 행렬 요소 계산, 고준위 디튜닝 보정, 단열 소거 생성자
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from functools import partial
from typing import List, Optional, Sequence

import numpy as np
from scipy.linalg import cosm, eigh

from core.config import settings
from core.exceptions import (
    DegenerateDriveException,
    DomainException,
    ResolutionException,
    SingularityException,
)
from schemas import (
    FluxoniumParams,
    LevelSystem,
    PulseParams,
    SpectrumResult,
    ghz_to_angular,
)
from services.envelopes import TIME_SLACK, cosine_envelope
from services.propagation import (
    DriveFrequency,
    four_level_drive,
    four_level_hamiltonian,
    transition_operators,
)

logger = logging.getLogger(__name__)

DEFAULT_LEVELS = 4
# η_01 소멸 판정 상대 허용 오차
DEGENERATE_ELEMENT = 1e-12


def _ladder(basis_size: int) -> np.ndarray:
    """소멸 연산자 a"""
    return np.diag(np.sqrt(np.arange(1, basis_size, dtype=float)), k=1)


def _hamiltonian_ghz(p: FluxoniumParams, basis_size: int) -> np.ndarray:
    """
    Ĥ = 4E_C n̂² + ½E_L φ̂² − E_J cos(φ̂ − 2πφ_ext), 선형 부분의 조화 진동자 기저 (GHz)
    """
    a = _ladder(basis_size)
    phi_zpf = (2.0 * p.charging_energy / p.inductive_energy) ** 0.25
    phi = phi_zpf * (a + a.T)
    plasma = math.sqrt(8.0 * p.charging_energy * p.inductive_energy)

    h = np.diag(plasma * (np.arange(basis_size) + 0.5))
    if p.josephson_energy > 0.0:
        shifted = phi - 2.0 * math.pi * p.external_flux * np.eye(basis_size)
        h = h - p.josephson_energy * np.real(cosm(shifted))
    return 0.5 * (h + h.T)


def _charge_operator(p: FluxoniumParams, basis_size: int) -> np.ndarray:
    """n̂ = i·n_zpf(a† − a)"""
    a = _ladder(basis_size)
    n_zpf = (p.inductive_energy / (32.0 * p.charging_energy)) ** 0.25
    return 1j * n_zpf * (a.T - a)


def _solve(p: FluxoniumParams, basis_size: int, n_levels: int):
    energies, vectors = eigh(_hamiltonian_ghz(p, basis_size))
    kept = vectors[:, :n_levels]
    charge = kept.conj().T @ _charge_operator(p, basis_size) @ kept
    return energies[:n_levels] - energies[0], np.abs(charge)


def diagonalize(
    p: FluxoniumParams,
    basis_size: Optional[int] = None,
    n_levels: int = DEFAULT_LEVELS,
    threshold: Optional[float] = None,
) -> SpectrumResult:
    """
    플럭소니움 해밀토니안 대각화

    기저 크기를 두 배로 늘린 결과와 비교하여 수렴 결함을 기록한다.

    Args:
        p: 회로 에너지 (GHz)
        basis_size: 조화 진동자 기저 크기 (기본값: 설정값 120)
        n_levels: 유지할 준위 수
        threshold: 수렴 결함 허용치

    Returns:
        SpectrumResult: 바닥 상태 기준 에너지 (rad/ns)와 |⟨j|n̂|k⟩| 표
    """
    basis_size = settings.fluxonium_basis_size if basis_size is None else basis_size
    threshold = settings.spectrum_convergence_threshold if threshold is None else threshold
    if n_levels < 2:
        raise DomainException(f"준위 수는 2 이상이어야 합니다: {n_levels}")
    if basis_size < 4 * n_levels:
        raise DomainException(
            f"기저 크기 {basis_size}가 너무 작습니다 (최소 {4 * n_levels})."
        )

    energies, charge = _solve(p, basis_size, n_levels)
    reference, _ = _solve(p, 2 * basis_size, n_levels)
    scale = np.maximum(np.abs(reference[1:]), 1e-300)
    defect = float(np.max(np.abs(energies[1:] - reference[1:]) / scale))

    if defect > threshold:
        logger.warning(
            f"스펙트럼 미수렴: 기저 {basis_size}, 결함 {defect:.2e} > {threshold:.1e}"
        )
        raise ResolutionException(
            f"기저 크기 {basis_size}에서 스펙트럼이 수렴하지 않았습니다 "
            f"(결함 {defect:.2e}). basis_size={2 * basis_size}를 사용해주세요.",
            suggested_basis_size=2 * basis_size,
        )

    logger.debug(
        f"대각화 완료: E_C={p.charging_energy}, E_L={p.inductive_energy}, "
        f"E_J={p.josephson_energy}, φ_ext={p.external_flux}, ω_01/2π={energies[1]:.6f} GHz"
    )
    return SpectrumResult(
        energies=ghz_to_angular(1.0) * energies,
        charge_elements=charge,
        basis_size=basis_size,
        convergence_defect=defect,
    )


def relative_drive_strength(spectrum: SpectrumResult, j: int, k: int) -> float:
    """η_jk = |⟨j|n̂|k⟩|/|⟨0|n̂|1⟩|"""
    qubit_element = float(spectrum.charge_elements[0, 1])
    largest = max(float(np.max(spectrum.charge_elements)), 1.0)
    if qubit_element <= DEGENERATE_ELEMENT * largest:
        raise DegenerateDriveException(
            "큐비트 전이의 전하 행렬 요소 |⟨0|n̂|1⟩|가 0입니다."
        )
    return float(spectrum.charge_elements[j, k]) / qubit_element


def level_system_from_spectrum(spectrum: SpectrumResult) -> LevelSystem:
    """스펙트럼에서 4준위 시스템 (에너지, η 표) 구성"""
    if len(spectrum.energies) < 4:
        raise DomainException("4준위 시스템에는 최소 4개의 준위가 필요합니다.")
    eta = {
        name: relative_drive_strength(spectrum, int(name[0]), int(name[1]))
        for name in ("12", "23", "03")
    }
    eta["01"] = 1.0
    return LevelSystem(
        dimension=4,
        energies=tuple(float(e) for e in spectrum.energies[:4]),
        eta=eta,
    )


def fluxonium_level_system(
    p: FluxoniumParams, basis_size: Optional[int] = None
) -> LevelSystem:
    return level_system_from_spectrum(diagonalize(p, basis_size))


def sweep_flux(
    p: FluxoniumParams,
    values: Sequence[float],
    basis_size: Optional[int] = None,
    n_levels: int = DEFAULT_LEVELS,
) -> List[SpectrumResult]:
    """외부 자속 스윕"""
    return [
        diagonalize(p.model_copy(update={"external_flux": float(v)}), basis_size, n_levels)
        for v in values
    ]


def sweep_charging_energy(
    values: Sequence[float],
    josephson_energy: float,
    inductive_energy: float,
    external_flux: float = 0.5,
    basis_size: Optional[int] = None,
    n_levels: int = DEFAULT_LEVELS,
    max_workers: int = 1,
) -> List[SpectrumResult]:
    """
    E_C 스윕 (결과는 입력 순서)

    Args:
        values: E_C 값 목록 (GHz)
        josephson_energy: E_J (GHz)
        inductive_energy: E_L (GHz)
        external_flux: φ_ext
        max_workers: 병렬 작업 수
    """
    params = [
        FluxoniumParams(
            charging_energy=float(e_c),
            inductive_energy=inductive_energy,
            josephson_energy=josephson_energy,
            external_flux=external_flux,
        )
        for e_c in values
    ]
    solve = partial(diagonalize, basis_size=basis_size, n_levels=n_levels)
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(solve, params))
    return [solve(q) for q in params]


def _anharmonicities(levels: LevelSystem):
    if levels.dimension != 4:
        raise DomainException("고준위 보정에는 4준위 시스템이 필요합니다.")
    alpha2, alpha3 = levels.anharmonicity(2), levels.anharmonicity(3)
    if alpha2 == 0.0 or alpha3 == 0.0:
        raise SingularityException("비조화성 α_2 또는 α_3가 0입니다.")
    return alpha2, alpha3


def _level_coupling(levels: LevelSystem) -> float:
    """η_12²/α_2 − η_03²/α_3"""
    alpha2, alpha3 = _anharmonicities(levels)
    return levels.eta["12"] ** 2 / alpha2 - levels.eta["03"] ** 2 / alpha3


def detuning_prime(levels: LevelSystem, p: PulseParams, t: float) -> float:
    """
    회전 좌표계 디튜닝 보정 Δ′(t) = Ω_Δ·((𝓔_I² + 𝓔_Q²)/2)·(η_12²/α_2 − η_03²/α_3)

    𝓔는 ε 배율 이전의 포락선이다.
    """
    coupling = _level_coupling(levels)
    env = cosine_envelope(p.duration)
    e_i = p.amplitude * float(env.derivative(t, 0))
    e_q = p.ppp * p.amplitude * float(env.derivative(t, 1))
    return p.detuning_scale * 0.5 * (e_i**2 + e_q**2) * coupling


def detuning_lab(levels: LevelSystem, p: PulseParams, t: float) -> float:
    """
    실험실 좌표계 디튜닝 Δ(t) = (1/t)∫₀ᵗ Δ′(τ)dτ

    t → 0 에서는 극한값 Δ′(0)을 사용한다.
    """
    if t <= TIME_SLACK:
        return detuning_prime(levels, p, 0.0)
    if t > p.duration + TIME_SLACK:
        raise DomainException(f"시간 {t} ns가 게이트 구간을 벗어났습니다.")
    coupling = _level_coupling(levels)
    env = cosine_envelope(p.duration)
    primitive = p.amplitude**2 * (
        float(env.square_integral(t)) + p.ppp**2 * float(env.derivative_square_integral(t))
    )
    return p.detuning_scale * 0.5 * coupling * primitive / t


def drive_frequency(levels: LevelSystem, p: PulseParams, t: float):
    """
    (ω_d(t), ω_d′(t)) = (ω_01 − Δ − Δ(t), ω_01 − Δ − Δ′(t))

    ω_d′ = ω_d + t·ω̇_d 는 해석적으로 성립하므로 수치 미분하지 않는다.
    """
    static = levels.qubit_frequency - p.detuning
    if p.detuning_scale == 0.0:
        return static, static
    return static - detuning_lab(levels, p, t), static - detuning_prime(levels, p, t)


def drive_frequency_schedule(levels: LevelSystem, p: PulseParams) -> DriveFrequency:
    """four_level_hamiltonian 에 넘길 t ↦ (ω_d, ω_d′)"""
    return partial(drive_frequency, levels, p)


def adiabatic_generator(
    levels: LevelSystem,
    p: PulseParams,
    t: float,
    schedule: Optional[DriveFrequency] = None,
) -> np.ndarray:
    """
    단열 소거 생성자 iS(t) (반에르미트)

    S = −(η_12A_y/α_2)σ_x^{12} + (η_12A_x/α_2)σ_y^{12}
        − (η_03A_y^{03}/α_3)σ_x^{03} + (η_03A_x^{03}/α_3)σ_y^{03}

    Returns:
        np.ndarray: 4×4 행렬 iS
    """
    alpha2, alpha3 = _anharmonicities(levels)
    drive = four_level_drive(p, levels, schedule, t)
    eta12, eta03 = levels.eta["12"], levels.eta["03"]
    sx12, sy12 = transition_operators(4, 1, 2)
    sx03, sy03 = transition_operators(4, 0, 3)
    s = (
        (eta12 / alpha2) * (-drive.a_y * sx12 + drive.a_x * sy12)
        + (eta03 / alpha3) * (-drive.a03_y * sx03 + drive.a03_x * sy03)
    )
    return 1j * s


def adiabaticity_parameter(levels: LevelSystem, amplitude: float) -> float:
    """max{η_12Ω_I/α_2, η_03Ω_I/α_3}"""
    alpha2, alpha3 = _anharmonicities(levels)
    return max(
        levels.eta["12"] * amplitude / abs(alpha2),
        levels.eta["03"] * amplitude / abs(alpha3),
    )


def off_block_residual(
    levels: LevelSystem,
    p: PulseParams,
    t: float,
    schedule: Optional[DriveFrequency] = None,
) -> float:
    """
    1차 단열 변환 후 남는 {0,1}↔{2,3} 결합 ‖(H − i[S,H])_{off}‖_F

    비교용으로 변환 전 결합의 크기는 같은 블록의 ‖H_{off}‖_F 이다.
    """
    h = four_level_hamiltonian(p, levels, schedule, t)
    s = -1j * adiabatic_generator(levels, p, t, schedule)
    transformed = h - 1j * (s @ h - h @ s)
    return float(np.linalg.norm(transformed[:2, 2:]))

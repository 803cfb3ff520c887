"""
Pydantic 모델 정의
도메인 타입, 시나리오 설정, API 요청/응답 스키마

내부 단위: 시간 ns, 각주파수 rad/ns, 위상 rad
"""

import math
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from core.config import settings

TWO_PI = 2.0 * math.pi


def mhz_to_angular(frequency_mhz: float) -> float:
    """MHz 단위 주파수를 rad/ns 각주파수로 변환"""
    return TWO_PI * frequency_mhz * 1e-3


def ghz_to_angular(frequency_ghz: float) -> float:
    """GHz 단위 주파수를 rad/ns 각주파수로 변환"""
    return TWO_PI * frequency_ghz


def angular_to_mhz(omega: float) -> float:
    return omega / TWO_PI * 1e3


# ---------------------------------------------------------------------------
# 도메인 타입
# ---------------------------------------------------------------------------


class PulseParams(BaseModel):
    """펄스 전체 기술 스키마"""

    model_config = ConfigDict(frozen=True)

    amplitude: float = Field(..., ge=0.0, description="구동 세기 Ω_I (rad/ns)")
    ppp: float = Field(default=0.0, description="펄스 비례 파라미터 λ (ns)")
    detuning: float = Field(default=0.0, description="정적 디튜닝 Δ (rad/ns)")
    detuning_scale: float = Field(default=0.0, description="시간 의존 디튜닝 배율 Ω_Δ")
    amplitude_scale: float = Field(default=1.0, gt=0.0, description="4준위 구동 배율 ε")
    axis: float = Field(default=0.0, description="회전축 θ (rad)")
    phase: float = Field(default=0.0, description="반송파 위상 φ (rad)")
    duration: float = Field(..., gt=0.0, description="게이트 시간 t_g (ns)")
    angle: float = Field(default=math.pi, description="목표 회전각 (rad)")

    def with_phase(self, phase: float) -> "PulseParams":
        return self.model_copy(update={"phase": phase})


class LevelSystem(BaseModel):
    """준위 에너지와 상대 구동 세기 스키마"""

    model_config = ConfigDict(frozen=True)

    dimension: Literal[2, 4] = Field(..., description="준위 수")
    energies: Tuple[float, ...] = Field(..., description="ω_0j (rad/ns), ω_00 = 0")
    eta: Dict[str, float] = Field(
        default_factory=lambda: {"01": 1.0},
        description="전이별 상대 구동 세기 η_jk",
    )

    @model_validator(mode="after")
    def validate_levels(self) -> "LevelSystem":
        """준위 정보 일관성 검증"""
        if len(self.energies) != self.dimension:
            raise ValueError("energies 길이가 dimension과 일치해야 합니다.")
        if self.energies[0] != 0.0:
            raise ValueError("바닥 상태 에너지 ω_00은 0이어야 합니다.")
        if self.eta.get("01") != 1.0:
            raise ValueError("η_01은 정확히 1이어야 합니다.")
        if self.dimension == 4:
            missing = {"12", "23", "03"} - set(self.eta)
            if missing:
                raise ValueError(f"4준위 시스템에 η 값이 누락되었습니다: {sorted(missing)}")
        return self

    @property
    def qubit_frequency(self) -> float:
        return self.energies[1]

    def anharmonicity(self, level: int) -> float:
        """α_j = ω_0j − j·ω_01"""
        return self.energies[level] - level * self.energies[1]

    @classmethod
    def two_level(cls, qubit_frequency: float) -> "LevelSystem":
        return cls(dimension=2, energies=(0.0, qubit_frequency))


class Propagator(BaseModel):
    """시간 발전 연산자 스키마"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    matrix: np.ndarray = Field(..., description="복소 정방 행렬")
    unitarity_defect: float = Field(..., ge=0.0, description="‖U†U − I‖_F")

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "Propagator":
        dim = matrix.shape[0]
        defect = float(np.linalg.norm(matrix.conj().T @ matrix - np.eye(dim)))
        return cls(matrix=matrix, unitarity_defect=defect)


class FluxoniumParams(BaseModel):
    """플럭소니움 회로 에너지 스키마 (GHz)"""

    model_config = ConfigDict(frozen=True)

    charging_energy: float = Field(..., gt=0.0, description="E_C (GHz)")
    inductive_energy: float = Field(..., gt=0.0, description="E_L (GHz)")
    josephson_energy: float = Field(..., ge=0.0, description="E_J (GHz)")
    external_flux: float = Field(default=0.5, ge=0.0, le=1.0, description="φ_ext")


class SpectrumResult(BaseModel):
    """대각화 결과 스키마"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    energies: np.ndarray = Field(..., description="바닥 상태 기준 에너지 (rad/ns)")
    charge_elements: np.ndarray = Field(..., description="|⟨j|n̂|k⟩| 표")
    basis_size: int = Field(..., ge=1)
    convergence_defect: float = Field(..., ge=0.0)

    @property
    def qubit_frequency(self) -> float:
        return float(self.energies[1])


class CarrierSplit(BaseModel):
    """반송파 정합/비정합 분해 스키마"""

    model_config = ConfigDict(frozen=True)

    n_hat: int = Field(..., description="정합 마그누스 주기 수 N̂_c")
    omega_hat: float = Field(..., description="정합 반송파 ω̂_d (rad/ns)")
    omega_tilde: float = Field(..., description="비정합 잔여 ω̃_d (rad/ns)")
    phi_hat: float = Field(..., description="정합 위상 φ̂ (rad)")
    phi_tilde: float = Field(..., description="비정합 위상 φ̃ (rad)")


class IntegrationWindow(BaseModel):
    """적분 구간 스키마"""

    model_config = ConfigDict(frozen=True)

    b_minus: float = Field(..., description="하한 b₋ (ns)")
    b_plus: float = Field(..., description="상한 b₊ (ns)")
    beta: float = Field(default=0.0, description="β = 2ω_d·t_0 + 2φ (rad)")
    t_0: float = Field(default=0.0, description="기준 시각 t_0 (ns)")

    @model_validator(mode="after")
    def validate_bounds(self) -> "IntegrationWindow":
        if not self.b_minus < self.b_plus:
            raise ValueError("적분 구간은 b₋ < b₊ 이어야 합니다.")
        return self

    @property
    def width(self) -> float:
        return self.b_plus - self.b_minus

    @classmethod
    def from_magnus_periods(
        cls, t_0: float, n: int, m: int, drive_frequency: float, phase: float
    ) -> "IntegrationWindow":
        """b₋ = t_0 + (n−m)t_c, b₊ = t_0 + n·t_c"""
        t_c = math.pi / drive_frequency
        return cls(
            b_minus=t_0 + (n - m) * t_c,
            b_plus=t_0 + n * t_c,
            beta=2.0 * drive_frequency * t_0 + 2.0 * phase,
            t_0=t_0,
        )

    @classmethod
    def full_gate(cls, duration: float, phase: float = 0.0) -> "IntegrationWindow":
        return cls(b_minus=0.0, b_plus=duration, beta=2.0 * phase, t_0=0.0)


class Magnus0Params(BaseModel):
    """0차 마그누스 보정 파라미터 스키마"""

    model_config = ConfigDict(frozen=True)

    ppp: float = Field(..., description="λ (ns)")
    drive_scale: float = Field(..., description="Ω_I / Ω_I,RWA")
    truncation_order: int = Field(..., ge=0)
    method: Literal["algebraic", "truncated-series"]


class PhaseResolvedParams(BaseModel):
    """단일 반송파 위상에 대한 1차 보정 결과"""

    model_config = ConfigDict(frozen=True)

    phase: float
    amplitude: float
    ppp: float
    detuning: float
    iterations: int


class FirstOrderParams(BaseModel):
    """1차 마그누스 보정 파라미터 스키마"""

    model_config = ConfigDict(frozen=True)

    amplitude: float = Field(..., description="Ω_I (rad/ns)")
    ppp: float = Field(..., description="λ (ns)")
    detuning: float = Field(..., description="Δ (rad/ns)")
    truncation_order: int
    phase_grid_size: int
    iterations_used: int
    per_phase: List[PhaseResolvedParams] = Field(default_factory=list)

    def to_pulse(self, duration: float, angle: float) -> PulseParams:
        return PulseParams(
            amplitude=self.amplitude,
            ppp=self.ppp,
            detuning=self.detuning,
            duration=duration,
            angle=angle,
        )


class GateSpec(BaseModel):
    """회로 게이트 스키마"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["physical", "virtual_z"] = "physical"
    angle: float = Field(..., description="회전각 (rad)")
    axis: float = Field(default=0.0, description="회전축 θ (rad)")
    label: str = Field(default="", description="게이트셋 키 (예: 'x180')")

    @property
    def duration_consuming(self) -> bool:
        return self.kind == "physical"


class ErrorBudget(BaseModel):
    """오차 예산 스키마"""

    model_config = ConfigDict(frozen=True)

    non_rwa_error: float
    higher_level_error: float
    leakage_error: float
    total: float

    @model_validator(mode="after")
    def validate_total(self) -> "ErrorBudget":
        expected = self.non_rwa_error + self.higher_level_error + self.leakage_error
        if self.total != expected:
            raise ValueError("total은 세 성분의 합이어야 합니다.")
        return self

    @classmethod
    def from_components(
        cls, non_rwa: float, higher_level: float, leakage: float
    ) -> "ErrorBudget":
        return cls(
            non_rwa_error=non_rwa,
            higher_level_error=higher_level,
            leakage_error=leakage,
            total=non_rwa + higher_level + leakage,
        )


class OptimizationResult(BaseModel):
    """무미분 최적화 결과"""

    model_config = ConfigDict(frozen=True)

    params: PulseParams
    cost: float
    converged: bool
    evaluations: int


class HeatmapResult(BaseModel):
    """λ–Δ 히트맵 결과"""

    model_config = ConfigDict(frozen=True)

    angle: float
    duration: float
    ppp_grid: List[float]
    detuning_grid: List[float]
    errors: List[List[float]] = Field(..., description="errors[i][j]: Δ_i, λ_j")
    amplitudes: List[List[float]] = Field(default_factory=list)


class PseudoIdentityResult(BaseModel):
    """의사 항등 회로 결과"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["amp-pi", "amp-pi/2", "phase-pi", "phase-pi/2"]
    repetitions: List[int]
    signal: List[float]
    metric: float


class RBResult(BaseModel):
    """무작위 벤치마킹 결과"""

    model_config = ConfigDict(frozen=True)

    lengths: List[int]
    survival: List[float]
    decay: float = Field(..., description="p")
    amplitude: float = Field(..., description="A")
    offset: float = Field(..., description="B")
    error_per_clifford: float = Field(..., description="r = (1 − p)/2")


class ProtocolResult(BaseModel):
    """보정 프로토콜 결과"""

    model_config = ConfigDict(frozen=True)

    protocol: Literal["P1", "P2", "P3", "P4"]
    duration: float
    gates: Dict[str, PulseParams] = Field(..., description="'x180', 'x90' 키")
    coherent_errors: Dict[str, float] = Field(default_factory=dict)
    leakage: Dict[str, float] = Field(default_factory=dict)


# ---------------------------------------------------------------------------
# 시나리오 설정 (CLI)
# ---------------------------------------------------------------------------


class _StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class TwoLevelSystemConfig(_StrictModel):
    kind: Literal["two-level"]
    qubit_frequency_mhz: float = Field(..., gt=0.0, description="ω_01/2π (MHz)")


class FluxoniumSystemConfig(_StrictModel):
    kind: Literal["fluxonium"]
    charging_energy_ghz: float = Field(..., gt=0.0)
    inductive_energy_ghz: float = Field(..., gt=0.0)
    josephson_energy_ghz: float = Field(..., ge=0.0)
    external_flux: float = Field(default=0.5, ge=0.0, le=1.0)
    basis_size: int = Field(default=120, ge=4)
    flux_sweep: List[float] = Field(default_factory=list)

    def to_params(self) -> FluxoniumParams:
        return FluxoniumParams(
            charging_energy=self.charging_energy_ghz,
            inductive_energy=self.inductive_energy_ghz,
            josephson_energy=self.josephson_energy_ghz,
            external_flux=self.external_flux,
        )


class GateConfig(_StrictModel):
    angle_deg: float = Field(..., gt=0.0, le=360.0)
    axis_deg: float = Field(default=0.0)
    duration_ns: float = Field(..., gt=0.0)

    @property
    def angle(self) -> float:
        return math.radians(self.angle_deg)

    @property
    def axis(self) -> float:
        return math.radians(self.axis_deg)


class GridConfig(_StrictModel):
    start: float
    stop: float
    num: int = Field(..., ge=1)

    def values(self) -> List[float]:
        return [float(v) for v in np.linspace(self.start, self.stop, self.num)]


class ScanConfig(_StrictModel):
    kind: Literal["duration_sweep", "time_trace", "heatmap", "level_correction"]
    durations_ns: List[float] = Field(default_factory=list)
    times_ns: List[float] = Field(default_factory=list)
    ppp_grid_ns: Optional[GridConfig] = None
    detuning_grid_mhz: Optional[GridConfig] = None
    charging_energies_ghz: List[float] = Field(default_factory=list)
    josephson_energy_ghz: float = Field(default=5.0, gt=0.0)
    inductive_energy_ghz: float = Field(default=1.0, gt=0.0)
    optimize_amplitude: bool = True


class CoherenceConfig(_StrictModel):
    t1_us: float = Field(..., gt=0.0)
    t2e_us: float = Field(..., gt=0.0)


class CalibrationConfig(_StrictModel):
    protocols: List[Literal["P1", "P2", "P3", "P4"]] = Field(
        default_factory=lambda: ["P1", "P2", "P3", "P4"]
    )
    pseudo_identity_repetitions: int = Field(default=20, ge=1)
    heatmap_size: int = Field(default=11, ge=2)
    rb_lengths: List[int] = Field(default_factory=lambda: [1, 10, 25, 50, 100])
    rb_seeds: int = Field(default=10, ge=1)
    coherence: Optional[CoherenceConfig] = None
    binomial_shots: int = Field(default=0, ge=0)


class ToleranceConfig(_StrictModel):
    truncation_order: int = Field(default=14, ge=0)
    integrator_rtol: float = Field(default=1e-12, gt=0.0)
    integrator_atol: float = Field(default=1e-12, gt=0.0)
    fixed_point_tolerance: float = Field(default=1e-10, gt=0.0)
    fixed_point_max_iterations: int = Field(default=200, ge=1)
    phase_grid_size: int = Field(default=12, ge=1)
    phase_interpolation_samples: int = Field(default=32, ge=4)

    @field_validator("truncation_order")
    @classmethod
    def _within_derivative_order(cls, v: int) -> int:
        # 경계 괄호 [∂ᵏs] 는 K+1 차 도함수까지 사용
        if v + 1 > settings.max_derivative_order:
            raise ValueError(
                f"truncation_order 는 {settings.max_derivative_order - 1} 이하여야 합니다: {v}"
            )
        return v


class ScenarioConfig(_StrictModel):
    """CLI 실행 시나리오 스키마 (JSON 문서 하나)"""

    system: Union[TwoLevelSystemConfig, FluxoniumSystemConfig] = Field(
        ..., discriminator="kind"
    )
    gates: List[GateConfig] = Field(default_factory=list)
    engine: Literal["exact", "magnus0", "magnus1", "rwa"] = "exact"
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)
    scan: Optional[ScanConfig] = None
    calibration: Optional[CalibrationConfig] = None
    seed: int = Field(default=0, ge=0)

    @field_validator("gates")
    @classmethod
    def validate_gates(cls, v: List[GateConfig]) -> List[GateConfig]:
        """게이트 목록 중복 검증"""
        keys = [(g.angle_deg, g.axis_deg, g.duration_ns) for g in v]
        if len(keys) != len(set(keys)):
            raise ValueError("중복된 게이트 항목이 있습니다.")
        return v


# ---------------------------------------------------------------------------
# API 요청/응답 스키마
# ---------------------------------------------------------------------------


class SpectrumRequest(BaseModel):
    """스펙트럼 계산 요청 스키마"""

    chargingEnergyGhz: float = Field(..., gt=0.0, le=20.0, description="E_C (GHz)")
    inductiveEnergyGhz: float = Field(..., gt=0.0, le=20.0, description="E_L (GHz)")
    josephsonEnergyGhz: float = Field(..., ge=0.0, le=50.0, description="E_J (GHz)")
    externalFlux: float = Field(default=0.5, ge=0.0, le=1.0, description="φ_ext")
    basisSize: int = Field(default=120, ge=16, le=400, description="조화 진동자 기저 크기")
    driveStrengthMhz: Optional[float] = Field(
        default=None, gt=0.0, description="단열성 파라미터 계산용 Ω_I/2π (MHz)"
    )


class SpectrumResponse(BaseModel):
    """스펙트럼 계산 응답 스키마"""

    success: bool = Field(..., description="성공 여부")
    energiesGhz: List[float] = Field(..., description="ω_0j/2π (GHz)")
    qubitFrequencyMhz: float = Field(..., description="ω_01/2π (MHz)")
    eta: Dict[str, float] = Field(..., description="상대 구동 세기")
    anharmonicitiesGhz: Dict[str, float] = Field(..., description="α_j/2π (GHz)")
    convergenceDefect: float = Field(..., description="기저 수렴 결함")
    adiabaticity: Optional[float] = Field(default=None, description="단열성 파라미터")


class PulseParametersRequest(BaseModel):
    """펄스 파라미터 계산 요청 스키마"""

    qubitFrequencyMhz: float = Field(..., gt=0.0, le=20000.0, description="ω_01/2π (MHz)")
    angleDeg: float = Field(default=180.0, gt=0.0, le=360.0, description="회전각 (도)")
    durationNs: float = Field(..., gt=0.0, le=10000.0, description="게이트 시간 (ns)")
    phaseGridSize: int = Field(default=12, ge=1, le=72, description="위상 격자 크기")


class PulseParameterEntry(BaseModel):
    """파라미터 항목 스키마"""

    method: str = Field(..., description="'algebraic', 'truncated-series', 'first-order'")
    available: bool = Field(..., description="계산 가능 여부")
    amplitudeMhz: Optional[float] = Field(default=None, description="Ω_I/2π (MHz)")
    pppNs: Optional[float] = Field(default=None, description="λ (ns)")
    detuningMhz: Optional[float] = Field(default=None, description="Δ/2π (MHz)")
    reason: Optional[str] = Field(default=None, description="계산 불가 사유")


class PulseParametersResponse(BaseModel):
    """펄스 파라미터 응답 스키마"""

    success: bool
    magnusPeriods: float = Field(..., description="N_c")
    entries: List[PulseParameterEntry]


class CoherenceLimitRequest(BaseModel):
    """결맞음 한계 요청 스키마"""

    durationNs: float = Field(..., ge=0.0)
    t1Us: float = Field(..., gt=0.0)
    t2eUs: float = Field(..., gt=0.0)


class CoherenceLimitResponse(BaseModel):
    """결맞음 한계 응답 스키마"""

    success: bool
    fidelity: float
    infidelity: float


class ErrorResponse(BaseModel):
    """에러 응답 스키마"""

    success: bool = Field(default=False, description="성공 여부")
    error: str = Field(..., description="에러 메시지")
    errorCode: Optional[str] = Field(default=None, description="에러 코드")
    processedDate: str = Field(..., description="처리 일시 (ISO 8601)")

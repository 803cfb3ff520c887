"""
보정 서비스
위상 평균 비용, 무미분 최적화, λ–Δ 히트맵, 위상 보간 게이트와 회로 시뮬레이션,
의사 항등 회로, 보정 프로토콜 P1–P4, 무작위 벤치마킹, 결맞음 한계, 오차 예산
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import (
    Callable,
    Dict,
    List,
    Mapping,
    NamedTuple,
    Optional,
    Protocol,
    Sequence,
    Tuple,
    TypeVar,
    Union,
)

import numpy as np
from scipy.optimize import curve_fit, minimize

from core.config import settings
from core.exceptions import CalibrationException, DomainException, PulseLabException
from schemas import (
    ErrorBudget,
    GateSpec,
    HeatmapResult,
    LevelSystem,
    OptimizationResult,
    ProtocolResult,
    PseudoIdentityResult,
    PulseParams,
    RBResult,
)
from services.cliffords import X90, X180, rb_sequence, virtual_z, z_gate
from services.envelopes import cosine_envelope
from services.fluxonium import drive_frequency_schedule
from services.magnus1 import first_order_params
from services.propagation import (
    ENGINES,
    four_level_propagator,
    gate_fidelity,
    leakage,
    target_unitary,
    two_level_propagator,
)
from services.series_kernels import algebraic_params, rwa_drive_strength

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

FREE_PARAMETERS = ("amplitude", "ppp", "detuning", "detuning_scale", "amplitude_scale")
# 정규화 좌표의 초기 심플렉스 폭 (파라미터 크기 대비)
SIMPLEX_STEP = 0.05
_STEP_FLOORS = {
    "amplitude": 1e-3,
    "ppp": 1e-2,
    "detuning": 1e-4,
    "detuning_scale": 0.1,
    "amplitude_scale": 0.1,
}
COST_FLOOR = 1e-15
# 유효하지 않은 파라미터에 부여하는 벌점
INVALID_COST = 1e3
PSEUDO_IDENTITY_KINDS = ("amp-pi", "amp-pi/2", "phase-pi", "phase-pi/2")
# P2 저오차 등고선 임계값 (격자 최솟값 배수)
CONTOUR_FACTOR = 3.0
CONTOUR_FLOOR = 1e-14
PROTOCOLS = ("P1", "P2", "P3", "P4")
GATE_ANGLES = {"x180": math.pi, "x90": math.pi / 2}


def _map(func: Callable[[T], R], items: Sequence[T], max_workers: int = 1) -> List[R]:
    """순서를 보존하는 병렬 map"""
    if max_workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            return list(executor.map(func, items))
    return [func(item) for item in items]


def phase_points(n: int) -> List[float]:
    """비용 함수 위상 격자 φ_k = πk/(N+1), k = 0..N"""
    if n < 0:
        raise DomainException(f"N은 0 이상이어야 합니다: {n}")
    return [math.pi * k / (n + 1) for k in range(n + 1)]


def embed(u: np.ndarray, dimension: int) -> np.ndarray:
    """2×2 유니터리를 d준위 공간에 삽입 (상위 준위는 항등)"""
    if dimension == 2:
        return np.asarray(u, dtype=complex)
    out = np.eye(dimension, dtype=complex)
    out[:2, :2] = u
    return out


@dataclass(frozen=True)
class QubitModel:
    """
    시뮬레이션 대상 시스템과 전파 엔진

    4준위 시스템은 정확 적분만 지원하며, Ω_Δ ≠ 0 이면 시간 의존 구동 주파수를 사용한다.
    """

    levels: LevelSystem
    engine: str = "exact"
    rtol: Optional[float] = None
    atol: Optional[float] = None
    truncation_order: Optional[int] = None

    def __post_init__(self) -> None:
        if self.engine not in ENGINES:
            raise DomainException(f"알 수 없는 전파 엔진: {self.engine}")
        if self.levels.dimension == 4 and self.engine != "exact":
            raise DomainException("4준위 시스템은 'exact' 엔진만 지원합니다.")

    @classmethod
    def two_level(cls, qubit_frequency: float, engine: str = "exact", **kwargs) -> "QubitModel":
        return cls(LevelSystem.two_level(qubit_frequency), engine, **kwargs)

    @property
    def qubit_frequency(self) -> float:
        return self.levels.qubit_frequency

    @property
    def dimension(self) -> int:
        return self.levels.dimension

    def propagator(self, p: PulseParams) -> np.ndarray:
        """게이트 전체 전파 연산자 (d×d)"""
        if self.dimension == 2:
            return two_level_propagator(
                p,
                self.qubit_frequency,
                self.engine,
                rtol=self.rtol,
                atol=self.atol,
                truncation_order=self.truncation_order,
            ).matrix
        schedule = drive_frequency_schedule(self.levels, p) if p.detuning_scale != 0.0 else None
        return four_level_propagator(p, self.levels, schedule, self.rtol, self.atol).matrix

    def gate_error(self, p: PulseParams, target: Optional[np.ndarray] = None) -> float:
        """계산 부분공간 블록의 1 − F"""
        target = target_unitary(p.angle, p.axis) if target is None else target
        block = self.propagator(p)[:2, :2]
        return 1.0 - gate_fidelity(block, target, check_unitarity=self.dimension == 2)


def phase_averaged_cost(
    p: PulseParams,
    model: QubitModel,
    n: int = 11,
    target: Optional[np.ndarray] = None,
    max_workers: int = 1,
) -> float:
    """
    위상 평균 비용 C = Σ_{k=0}^{N} (1 − F(U(φ=πk/(N+1)), 목표))

    Args:
        p: 펄스 파라미터 (phase 는 무시)
        model: 시스템과 엔진
        n: N (기본값 11)
        target: 목표 2×2 유니터리 (기본값: p.angle, p.axis 회전)
        max_workers: 위상 격자 병렬 작업자 수
    """
    points = phase_points(n)
    errors = _map(
        lambda phi: model.gate_error(p.model_copy(update={"phase": phi}), target),
        points,
        max_workers,
    )
    return float(sum(errors))


def phase_averaged_error(p: PulseParams, model: QubitModel, n: int = 11, max_workers: int = 1) -> float:
    return phase_averaged_cost(p, model, n, max_workers=max_workers) / (n + 1)


def _step(name: str, p0: PulseParams) -> float:
    return SIMPLEX_STEP * max(abs(getattr(p0, name)), _STEP_FLOORS[name])


def optimize(
    free: Sequence[str],
    p0: PulseParams,
    cost: Callable[[PulseParams], float],
    max_evaluations: Optional[int] = None,
    restarts: Optional[int] = None,
    seed: int = 0,
    steps: Optional[Mapping[str, float]] = None,
) -> OptimizationResult:
    """
    넬더–미드 무미분 최적화 (재시작 포함)

    자유 파라미터는 초기값 기준 단계 크기로 정규화한 좌표에서 탐색한다.
    첫 시도 이후의 재시작은 최적점 주변을 시드 고정 난수로 흔들어 출발한다.

    Args:
        free: 자유 파라미터 이름 (FREE_PARAMETERS 의 부분집합)
        p0: 초기 파라미터
        cost: 비용 함수
        max_evaluations: 총 평가 횟수 한도
        restarts: 시도 횟수
        seed: 재시작 난수 시드
        steps: 파라미터별 초기 단계 크기

    Returns:
        OptimizationResult: 최적 파라미터, 비용, 수렴 여부, 평가 횟수
    """
    free = list(free)
    unknown = set(free) - set(FREE_PARAMETERS)
    if not free or unknown:
        raise DomainException(f"잘못된 자유 파라미터: {sorted(unknown) or free}")
    max_evaluations = settings.optimizer_max_evaluations if max_evaluations is None else max_evaluations
    restarts = settings.optimizer_restarts if restarts is None else restarts

    origin = np.array([getattr(p0, name) for name in free], dtype=float)
    scale = np.array([(steps or {}).get(name) or _step(name, p0) for name in free])
    base = p0.model_dump()

    def params_at(x: np.ndarray) -> PulseParams:
        values = origin + scale * x
        return PulseParams(**{**base, **{n: float(v) for n, v in zip(free, values)}})

    initial_cost = cost(p0)
    if not math.isfinite(initial_cost):
        raise DomainException("초기 파라미터의 비용이 유한하지 않습니다.")
    if initial_cost <= COST_FLOOR:
        return OptimizationResult(params=p0, cost=initial_cost, converged=True, evaluations=1)

    best = {"x": np.zeros(len(free)), "cost": initial_cost}
    evaluations = 1

    def objective(x: np.ndarray) -> float:
        nonlocal evaluations
        evaluations += 1
        try:
            value = float(cost(params_at(x)))
        except (ValueError, PulseLabException) as e:
            logger.debug(f"유효하지 않은 파라미터에서 비용 평가 실패: {e}")
            return INVALID_COST
        if not math.isfinite(value):
            return INVALID_COST
        if value < best["cost"]:
            best["x"], best["cost"] = np.array(x, dtype=float), value
        return value

    rng = np.random.default_rng(seed)
    converged = False
    for attempt in range(max(restarts, 1)):
        remaining = max_evaluations - evaluations
        if remaining <= 0 or best["cost"] <= COST_FLOOR:
            break
        start = best["x"] if attempt == 0 else best["x"] + rng.normal(size=len(free))
        simplex = start + np.vstack([np.zeros(len(free)), np.eye(len(free))])
        result = minimize(
            objective,
            start,
            method="Nelder-Mead",
            options={
                "initial_simplex": simplex,
                "maxfev": remaining,
                "xatol": 1e-9,
                "fatol": COST_FLOOR,
            },
        )
        converged = converged or bool(result.success)
        logger.debug(f"최적화 시도 {attempt + 1}: 비용 {best['cost']:.3e}, 평가 {evaluations}회")

    if not converged:
        logger.warning(f"최적화 예산 소진: 최선 비용 {best['cost']:.3e}")
    return OptimizationResult(
        params=params_at(best["x"]),
        cost=best["cost"],
        converged=converged or best["cost"] <= COST_FLOOR,
        evaluations=evaluations,
    )


def base_params(angle: float, duration: float, **updates) -> PulseParams:
    """RWA 구동 세기를 갖는 기본 펄스 파라미터"""
    amplitude = rwa_drive_strength(angle, cosine_envelope(duration), duration)
    return PulseParams(amplitude=amplitude, duration=duration, angle=angle, **updates)


def heatmap_scan(
    ppp_grid: Sequence[float],
    detuning_grid: Sequence[float],
    angle: float,
    duration: float,
    model: QubitModel,
    optimize_amplitude: bool = True,
    n: int = 11,
    max_workers: int = 1,
    max_evaluations: int = 100,
) -> HeatmapResult:
    """
    λ–Δ 격자의 위상 평균 오차 (각 점마다 Ω_I 최적화 선택)

    Returns:
        HeatmapResult: errors[i][j] 는 Δ_i, λ_j 의 오차 C/(N+1)
    """
    if not len(ppp_grid) or not len(detuning_grid):
        raise DomainException("히트맵 격자가 비어 있습니다.")
    cells = [(i, j) for i in range(len(detuning_grid)) for j in range(len(ppp_grid))]

    def evaluate(cell: Tuple[int, int]) -> Tuple[float, float]:
        i, j = cell
        p = base_params(angle, duration, ppp=float(ppp_grid[j]), detuning=float(detuning_grid[i]))

        def cost(q: PulseParams) -> float:
            return phase_averaged_cost(q, model, n)

        # 실패한 칸은 NaN 으로 남기고 나머지 계산을 계속한다
        try:
            if optimize_amplitude:
                result = optimize(["amplitude"], p, cost, max_evaluations=max_evaluations, restarts=1)
                return result.cost / (n + 1), result.params.amplitude
            return cost(p) / (n + 1), p.amplitude
        except PulseLabException as e:
            logger.error(f"히트맵 칸 (Δ={p.detuning:.4g}, λ={p.ppp:.4g}) 계산 실패: {e.detail}")
            return math.nan, math.nan

    logger.info(f"히트맵 계산 시작: {len(detuning_grid)}×{len(ppp_grid)} 격자")
    values = _map(evaluate, cells, max_workers)
    width = len(ppp_grid)
    errors = [[values[i * width + j][0] for j in range(width)] for i in range(len(detuning_grid))]
    amplitudes = [[values[i * width + j][1] for j in range(width)] for i in range(len(detuning_grid))]
    return HeatmapResult(
        angle=angle,
        duration=duration,
        ppp_grid=[float(x) for x in ppp_grid],
        detuning_grid=[float(x) for x in detuning_grid],
        errors=errors,
        amplitudes=amplitudes,
    )


# ---------------------------------------------------------------------------
# 회로 시뮬레이션
# ---------------------------------------------------------------------------


class Gate(Protocol):
    """회로 시뮬레이터가 사용하는 게이트 인터페이스"""

    duration: float
    drive_frequency: float
    dimension: int

    def evaluate(self, phases: np.ndarray) -> np.ndarray:
        """반송파 위상 배열 (P,) 에 대한 전파 연산자 (P, d, d)"""
        ...


class PhaseInterpolatedGate:
    """
    반송파 위상 격자에서 표본화한 물리 게이트

    U(φ)는 φ에 대해 주기 π 이므로 φ_m = πm/M 표본의 FFT 계수로
    임의 위상의 전파 연산자를 삼각 보간한다.
    """

    def __init__(self, samples: np.ndarray, duration: float, drive_frequency: float):
        samples = np.asarray(samples, dtype=complex)
        if samples.ndim != 3 or samples.shape[1] != samples.shape[2]:
            raise DomainException("표본은 (M, d, d) 배열이어야 합니다.")
        self.sample_count, self.dimension = samples.shape[0], samples.shape[1]
        self.duration = duration
        self.drive_frequency = drive_frequency
        self._coefficients = np.fft.fft(samples, axis=0).reshape(self.sample_count, -1) / self.sample_count
        self._harmonics = np.fft.fftfreq(self.sample_count, d=1.0 / self.sample_count)

    @classmethod
    def from_model(
        cls,
        model: QubitModel,
        p: PulseParams,
        samples: Optional[int] = None,
        max_workers: int = 1,
    ) -> "PhaseInterpolatedGate":
        samples = settings.phase_interpolation_samples if samples is None else samples
        phases = [math.pi * m / samples for m in range(samples)]
        matrices = _map(lambda phi: model.propagator(p.model_copy(update={"phase": phi})), phases, max_workers)
        return cls(np.stack(matrices), p.duration, model.qubit_frequency - p.detuning)

    def evaluate(self, phases: np.ndarray) -> np.ndarray:
        phases = np.atleast_1d(np.asarray(phases, dtype=float))
        basis = np.exp(2j * np.outer(phases, self._harmonics))
        return (basis @ self._coefficients).reshape(len(phases), self.dimension, self.dimension)


class FixedGate:
    """위상과 무관한 고정 유니터리 게이트 (오라클/합성 오차 모델)"""

    def __init__(self, matrix: np.ndarray, duration: float = 0.0, drive_frequency: float = 0.0):
        self.matrix = np.asarray(matrix, dtype=complex)
        self.dimension = self.matrix.shape[0]
        self.duration = duration
        self.drive_frequency = drive_frequency

    @classmethod
    def ideal(cls, angle: float, axis: float = 0.0, duration: float = 0.0, dimension: int = 2) -> "FixedGate":
        return cls(embed(target_unitary(angle, axis), dimension), duration)

    def evaluate(self, phases: np.ndarray) -> np.ndarray:
        count = len(np.atleast_1d(phases))
        return np.broadcast_to(self.matrix, (count,) + self.matrix.shape)


def ideal_gateset(duration: float = 0.0, dimension: int = 2) -> Dict[str, Gate]:
    return {label: FixedGate.ideal(angle, 0.0, duration, dimension) for label, angle in GATE_ANGLES.items()}


@dataclass
class CircuitState:
    """회로 진행 상태 (초기 위상별 누적 전파 연산자)"""

    absolute_time: float
    frame_phase: float
    propagators: np.ndarray


class CircuitSimulator:
    """
    GateSpec 시퀀스 시뮬레이터

    물리 게이트의 반송파 위상은 φ₀ + ω_d·T (T: 누적 시간) 이며, 초기 위상 φ₀ 격자 전체에 대해
    벡터화하여 계산한다. 가상 Z는 diag(e^{−ijα}) 로 적용되며 시간을 소모하지 않는다.
    """

    def __init__(
        self,
        gateset: Mapping[str, Gate],
        initial_phases: Optional[Sequence[float]] = None,
        phase_step_deg: float = 1.0,
    ):
        if not gateset:
            raise DomainException("게이트셋이 비어 있습니다.")
        self.gateset = dict(gateset)
        dimensions = {g.dimension for g in self.gateset.values()}
        if len(dimensions) != 1:
            raise DomainException("게이트셋의 차원이 일치하지 않습니다.")
        self.dimension = dimensions.pop()
        if initial_phases is None:
            initial_phases = np.deg2rad(np.arange(0.0, 360.0, phase_step_deg))
        self.initial_phases = np.asarray(initial_phases, dtype=float)

    def initial_state(self) -> CircuitState:
        identity = np.broadcast_to(
            np.eye(self.dimension, dtype=complex),
            (len(self.initial_phases), self.dimension, self.dimension),
        ).copy()
        return CircuitState(absolute_time=0.0, frame_phase=0.0, propagators=identity)

    def apply(self, state: CircuitState, gate: GateSpec) -> CircuitState:
        if gate.kind == "virtual_z":
            z = virtual_z(gate.angle, self.dimension)
            return CircuitState(
                absolute_time=state.absolute_time,
                frame_phase=state.frame_phase + gate.angle,
                propagators=z @ state.propagators,
            )
        physical = self.gateset.get(gate.label)
        if physical is None:
            raise DomainException(f"게이트셋에 없는 게이트: '{gate.label}'")
        phases = self.initial_phases + physical.drive_frequency * state.absolute_time
        return CircuitState(
            absolute_time=state.absolute_time + physical.duration,
            frame_phase=state.frame_phase,
            propagators=physical.evaluate(phases) @ state.propagators,
        )

    def run(self, gates: Sequence[GateSpec], state: Optional[CircuitState] = None) -> CircuitState:
        state = self.initial_state() if state is None else state
        for gate in gates:
            state = self.apply(state, gate)
        return state

    @staticmethod
    def expectations(state: CircuitState) -> Dict[str, float]:
        """|0⟩ 에서 출발한 상태의 초기 위상 평균 기대값 (σ_x, σ_y, σ_z, P₀)"""
        psi = state.propagators[:, :, 0]
        c0, c1 = psi[:, 0], psi[:, 1]
        overlap = np.conj(c0) * c1
        return {
            "x": float(np.mean(2.0 * overlap.real)),
            "y": float(np.mean(2.0 * overlap.imag)),
            "z": float(np.mean(np.abs(c0) ** 2 - np.abs(c1) ** 2)),
            "p0": float(np.mean(np.abs(c0) ** 2)),
        }


@dataclass
class MeasurementModel:
    """이상적 기대값 (shots=0) 또는 시드 고정 이항 표본화"""

    shots: int = 0
    seed: int = 0
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.shots < 0:
            raise DomainException(f"샷 수는 0 이상이어야 합니다: {self.shots}")
        self._rng = np.random.default_rng(self.seed)

    def probability(self, p: float) -> float:
        p = min(max(p, 0.0), 1.0)
        if self.shots == 0:
            return p
        return float(self._rng.binomial(self.shots, p)) / self.shots

    def expectation(self, value: float) -> float:
        """±1 관측량 기대값"""
        return 2.0 * self.probability((1.0 + value) / 2.0) - 1.0


_PSEUDO_IDENTITY_BLOCKS: Dict[str, Tuple[Tuple[GateSpec, ...], str]] = {
    "amp-pi": ((X180, X180), "y"),
    "amp-pi/2": ((X90, X90, X90, X90), "y"),
    "phase-pi": ((X180, z_gate(math.pi), X180, z_gate(math.pi)), "x"),
    "phase-pi/2": ((X90, z_gate(math.pi), X90, z_gate(math.pi)), "x"),
}


def pseudo_identity(
    kind: str,
    repetitions: Union[int, Sequence[int]],
    simulator: CircuitSimulator,
    measurement: Optional[MeasurementModel] = None,
) -> PseudoIdentityResult:
    """
    의사 항등 회로 신호

    amp 계열은 과/부족 회전을 ⟨σ_y⟩ 로, phase 계열은 위상 오차를 ⟨σ_x⟩ 로 증폭한다.
    지표는 반복 횟수 범위에서 측정 신호의 최댓값 − 최솟값.

    Args:
        kind: 'amp-pi', 'amp-pi/2', 'phase-pi', 'phase-pi/2'
        repetitions: 최대 반복 수 M (1..M) 또는 반복 수 목록
        simulator: 게이트셋이 준비된 회로 시뮬레이터
        measurement: 측정 모델 (기본값: 이상적 기대값)
    """
    if kind not in _PSEUDO_IDENTITY_BLOCKS:
        raise DomainException(f"알 수 없는 의사 항등 회로: {kind}")
    counts = list(range(1, repetitions + 1)) if isinstance(repetitions, int) else sorted(set(repetitions))
    if not counts or counts[0] < 1:
        raise DomainException("반복 수는 1 이상이어야 합니다.")
    measurement = measurement or MeasurementModel()
    block, basis = _PSEUDO_IDENTITY_BLOCKS[kind]

    state = simulator.initial_state()
    signal: Dict[int, float] = {}
    wanted = set(counts)
    for m in range(1, counts[-1] + 1):
        state = simulator.run(block, state)
        if m in wanted:
            signal[m] = measurement.expectation(simulator.expectations(state)[basis])

    values = [signal[m] for m in counts]
    return PseudoIdentityResult(
        kind=kind,  # type: ignore[arg-type]
        repetitions=counts,
        signal=values,
        metric=max(values) - min(values),
    )


# ---------------------------------------------------------------------------
# 보정 프로토콜
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CalibrationContext:
    """보정 프로토콜 실행 설정"""

    model: QubitModel
    duration: float
    repetitions: int = 20
    heatmap_size: int = 11
    interpolation_samples: int = 32
    cost_points: int = 11
    phase_step_deg: float = 1.0
    detuning_span: float = 2.0 * math.pi * 1e-3
    max_evaluations: int = 400
    restarts: int = 3
    seed: int = 0
    max_workers: int = 1

    def gate(self, p: PulseParams) -> PhaseInterpolatedGate:
        return PhaseInterpolatedGate.from_model(self.model, p, self.interpolation_samples, self.max_workers)

    def simulator(self, gateset: Mapping[str, Gate]) -> CircuitSimulator:
        return CircuitSimulator(gateset, phase_step_deg=self.phase_step_deg)

    def signal_power(self, p: PulseParams, kind: str) -> float:
        """
        단일 게이트 의사 항등 신호의 제곱합

        보정 최적화 목적 함수. 최대−최소 폭 대신 매끄러운 제곱합을 쓴다.
        """
        simulator = self.simulator({gate_label(p.angle): self.gate(p)})
        result = pseudo_identity(kind, self.repetitions, simulator)
        return float(sum(s * s for s in result.signal))

    def phase_metric(self, p: PulseParams) -> float:
        simulator = self.simulator({gate_label(p.angle): self.gate(p)})
        kind = "phase-pi" if gate_label(p.angle) == "x180" else "phase-pi/2"
        return pseudo_identity(kind, self.repetitions, simulator).metric


def gate_label(angle: float) -> str:
    for label, value in GATE_ANGLES.items():
        if math.isclose(angle, value, rel_tol=1e-12):
            return label
    raise DomainException(f"보정 프로토콜은 π, π/2 게이트만 지원합니다: {angle}")


def _calibrate_amplitude(ctx: CalibrationContext, p: PulseParams) -> PulseParams:
    kind = "amp-pi" if gate_label(p.angle) == "x180" else "amp-pi/2"
    result = optimize(
        ["amplitude"],
        p,
        lambda q: ctx.signal_power(q, kind),
        max_evaluations=ctx.max_evaluations,
        restarts=1,
        seed=ctx.seed,
    )
    logger.debug(f"{gate_label(p.angle)} 진폭 보정: Ω={result.params.amplitude:.10g} rad/ns")
    return result.params


def _calibrate_detuning_scale(ctx: CalibrationContext, p: PulseParams) -> PulseParams:
    kind = "phase-pi" if gate_label(p.angle) == "x180" else "phase-pi/2"
    result = optimize(
        ["detuning_scale"],
        p,
        lambda q: ctx.signal_power(q, kind),
        max_evaluations=ctx.max_evaluations,
        restarts=1,
        seed=ctx.seed,
    )
    return result.params


def ppp_grid(ctx: CalibrationContext) -> np.ndarray:
    """P2 λ 격자 [0, 1/(2ω_01)]"""
    return np.linspace(0.0, 1.0 / (2.0 * ctx.model.qubit_frequency), ctx.heatmap_size)


def detuning_grid(ctx: CalibrationContext) -> np.ndarray:
    """P2 Δ 격자 (홀수 크기로 Δ=0 포함)"""
    size = ctx.heatmap_size if ctx.heatmap_size % 2 else ctx.heatmap_size + 1
    return np.linspace(-ctx.detuning_span, ctx.detuning_span, size)


def phase_error_heatmap(ctx: CalibrationContext, p: PulseParams) -> np.ndarray:
    """Ω 고정 상태에서 위상 의사 항등 지표의 (Δ, λ) 격자"""
    lambdas, deltas = ppp_grid(ctx), detuning_grid(ctx)
    cells = [(float(d), float(lam)) for d in deltas for lam in lambdas]
    values = [ctx.phase_metric(p.model_copy(update={"detuning": d, "ppp": lam})) for d, lam in cells]
    return np.array(values).reshape(len(deltas), len(lambdas))


def contour_ppp(grid: np.ndarray, lambdas: np.ndarray, deltas: np.ndarray) -> float:
    """
    저오차 등고선과 Δ=0 행의 교차점 λ

    격자 최솟값의 CONTOUR_FACTOR 배 이하인 Δ≈0 행 원소의 λ 평균을 반환한다.
    """
    row = grid[int(np.argmin(np.abs(deltas)))]
    threshold = CONTOUR_FACTOR * max(float(np.min(grid)), CONTOUR_FLOOR)
    selected = lambdas[row <= threshold]
    if selected.size == 0:
        raise CalibrationException(
            "Δ=0 에서 저오차 등고선 교차점을 찾지 못했습니다.",
            diagnostic={
                "ppp_grid": lambdas.tolist(),
                "detuning_grid": deltas.tolist(),
                "metric": grid.tolist(),
            },
        )
    return float(np.mean(selected))


def _protocol_p1(ctx: CalibrationContext) -> Dict[str, PulseParams]:
    return {
        label: _calibrate_amplitude(ctx, base_params(angle, ctx.duration))
        for label, angle in GATE_ANGLES.items()
    }


def _protocol_p2(ctx: CalibrationContext) -> Dict[str, PulseParams]:
    lambdas, deltas = ppp_grid(ctx), detuning_grid(ctx)
    calibrated = _protocol_p1(ctx)
    crossings = []
    for label, p in calibrated.items():
        grid = phase_error_heatmap(ctx, p)
        crossings.append(contour_ppp(grid, lambdas, deltas))
        logger.info(f"P2 {label}: 등고선 교차 λ={crossings[-1]:.6g} ns")
    ppp = float(np.mean(crossings))
    return {
        label: _calibrate_amplitude(ctx, p.model_copy(update={"ppp": ppp, "detuning": 0.0}))
        for label, p in calibrated.items()
    }


def _protocol_p3(ctx: CalibrationContext) -> Dict[str, PulseParams]:
    ppp = 1.0 / (4.0 * ctx.model.qubit_frequency)
    gates = {}
    for label, angle in GATE_ANGLES.items():
        p = _calibrate_amplitude(ctx, base_params(angle, ctx.duration, ppp=ppp))
        if ctx.model.dimension == 4:
            p = _calibrate_detuning_scale(ctx, p.model_copy(update={"detuning_scale": 1.0}))
            p = _calibrate_amplitude(ctx, p)
        gates[label] = p
    return gates


def _protocol_p4(ctx: CalibrationContext) -> Dict[str, PulseParams]:
    free = ["amplitude", "ppp", "detuning"]
    if ctx.model.dimension == 4:
        free += ["detuning_scale", "amplitude_scale"]
    gates = {}
    for label, p in _protocol_p3(ctx).items():
        result = optimize(
            free,
            p,
            lambda q: phase_averaged_cost(q, ctx.model, ctx.cost_points),
            max_evaluations=ctx.max_evaluations,
            restarts=ctx.restarts,
            seed=ctx.seed,
        )
        gates[label] = result.params
    return gates


_PROTOCOL_RUNNERS = {"P1": _protocol_p1, "P2": _protocol_p2, "P3": _protocol_p3, "P4": _protocol_p4}


def gate_report(model: QubitModel, p: PulseParams, n: int = 11) -> Tuple[float, float]:
    """위상 평균 결맞음 오차와 누설"""
    points = phase_points(n)
    errors, leaks = [], []
    for phi in points:
        u = model.propagator(p.model_copy(update={"phase": phi}))
        target = target_unitary(p.angle, p.axis)
        errors.append(1.0 - gate_fidelity(u[:2, :2], target, check_unitarity=model.dimension == 2))
        leaks.append(leakage(u, check_unitarity=False) if model.dimension == 4 else 0.0)
    return float(np.mean(errors)), float(np.mean(leaks))


def run_protocol(which: str, ctx: CalibrationContext) -> ProtocolResult:
    """
    보정 프로토콜 실행

    P1: Ω만 보정 (λ=Δ=Ω_Δ=0)
    P2: Ω 보정 → 위상 오차 (λ, Δ) 히트맵의 저오차 등고선 교차 → Ω 재보정
    P3: Δ=0, λ=1/(4ω_01) 고정, Ω → Ω_Δ (4준위) → Ω 보정
    P4: P3 결과에서 출발해 위상 평균 비용으로 전체 파라미터 최적화

    Returns:
        ProtocolResult: 'x180', 'x90' 게이트 파라미터와 결맞음 오차, 누설
    """
    if which not in _PROTOCOL_RUNNERS:
        raise DomainException(f"알 수 없는 보정 프로토콜: {which}")
    logger.info(f"보정 프로토콜 {which} 시작: t_g={ctx.duration} ns, {ctx.model.dimension}준위")
    gates = _PROTOCOL_RUNNERS[which](ctx)
    errors, leaks = {}, {}
    for label, p in gates.items():
        errors[label], leaks[label] = gate_report(ctx.model, p, ctx.cost_points)
        logger.info(f"{which} {label}: 결맞음 오차 {errors[label]:.3e}, 누설 {leaks[label]:.3e}")
    return ProtocolResult(
        protocol=which,  # type: ignore[arg-type]
        duration=ctx.duration,
        gates=gates,
        coherent_errors=errors,
        leakage=leaks,
    )


def protocol_gateset(result: ProtocolResult, ctx: CalibrationContext) -> Dict[str, Gate]:
    return {label: ctx.gate(p) for label, p in result.gates.items()}


# ---------------------------------------------------------------------------
# 무작위 벤치마킹, 결맞음 한계, 오차 예산
# ---------------------------------------------------------------------------


def _rb_model(m: np.ndarray, amplitude: float, decay: float, offset: float) -> np.ndarray:
    return amplitude * decay**m + offset


def fit_rb_decay(lengths: Sequence[int], survival: Sequence[float]) -> RBResult:
    """
    생존 확률을 A·p^M + B 로 적합

    Raises:
        CalibrationException: 적합 실패 (원자료를 diagnostic 에 포함)
    """
    m = np.asarray(lengths, dtype=float)
    s = np.asarray(survival, dtype=float)
    if m.shape != s.shape or m.size < 3:
        raise DomainException("적합에는 길이와 생존 확률이 같은 수로 3개 이상 필요합니다.")

    if np.ptp(s) < 1e-12:
        return RBResult(
            lengths=[int(x) for x in lengths],
            survival=s.tolist(),
            decay=1.0,
            amplitude=0.0,
            offset=float(np.mean(s)),
            error_per_clifford=0.0,
        )

    guess = (float(s[0] - s[-1]) or 0.5, 0.99, float(s[-1]))
    try:
        popt, _ = curve_fit(
            _rb_model,
            m,
            s,
            p0=guess,
            bounds=([-1.0, 0.0, -1.0], [2.0, 1.0, 2.0]),
            maxfev=10000,
        )
    except (RuntimeError, ValueError) as e:
        logger.error(f"RB 감쇠 적합 실패: {e}")
        raise CalibrationException(
            "RB 감쇠 적합에 실패했습니다.",
            diagnostic={"lengths": m.tolist(), "survival": s.tolist()},
        )
    amplitude, decay, offset = (float(x) for x in popt)
    return RBResult(
        lengths=[int(x) for x in lengths],
        survival=s.tolist(),
        decay=decay,
        amplitude=amplitude,
        offset=offset,
        error_per_clifford=(1.0 - decay) / 2.0,
    )


def simulate_rb(
    simulator: CircuitSimulator,
    lengths: Sequence[int],
    seeds: int = 10,
    seed: int = 0,
    measurement: Optional[MeasurementModel] = None,
) -> RBResult:
    """
    무작위 벤치마킹 시뮬레이션

    길이별로 seeds 개의 복구 포함 클리포드 시퀀스를 만들고, 초기 위상 평균 P(|0⟩)를
    시드 평균하여 감쇠를 적합한다.
    """
    if seeds < 1:
        raise DomainException(f"시드 수는 1 이상이어야 합니다: {seeds}")
    rng = np.random.default_rng(seed)
    measurement = measurement or MeasurementModel()
    survival = []
    for length in lengths:
        values = []
        for _ in range(seeds):
            state = simulator.run(rb_sequence(int(length), rng))
            values.append(measurement.probability(simulator.expectations(state)["p0"]))
        survival.append(float(np.mean(values)))
        logger.debug(f"RB 길이 {length}: 생존 확률 {survival[-1]:.8f}")
    return fit_rb_decay(lengths, survival)


def coherence_limit(duration: float, t1: float, t2e: float) -> float:
    """
    결어긋남 한계 충실도 F = 1/2 + exp(−t_g/T_1)/6 + exp(−t_g/T_2E)/3

    세 인자는 같은 시간 단위를 사용한다.
    """
    if t1 <= 0 or t2e <= 0:
        raise DomainException("T_1, T_2E 는 양수여야 합니다.")
    if duration < 0:
        raise DomainException(f"게이트 시간은 0 이상이어야 합니다: {duration}")
    return 0.5 + math.exp(-duration / t1) / 6.0 + math.exp(-duration / t2e) / 3.0


def budget_from_results(result2: ProtocolResult, result4: ProtocolResult) -> ErrorBudget:
    """2준위, 4준위 프로토콜 결과로 오차 예산 구성"""
    e2 = float(np.mean(list(result2.coherent_errors.values())))
    e4 = float(np.mean(list(result4.coherent_errors.values())))
    leak = float(np.mean(list(result4.leakage.values())))
    return ErrorBudget.from_components(max(e2, 0.0), max(e4 - e2, 0.0), max(leak, 0.0))


def error_budget(protocol: str, two_level: CalibrationContext, four_level: CalibrationContext) -> ErrorBudget:
    """
    프로토콜의 오차 예산

    2준위 오차를 비-RWA 오차로, 4준위와 2준위 오차의 차이를 상위 준위 오차로 본다.
    P3 의 비-RWA 성분은 P2 의 2준위 결과를 재사용한다.
    """
    if two_level.model.dimension != 2 or four_level.model.dimension != 4:
        raise DomainException("오차 예산에는 2준위와 4준위 설정이 각각 필요합니다.")
    reference = "P2" if protocol == "P3" else protocol
    return budget_from_results(run_protocol(reference, two_level), run_protocol(protocol, four_level))


# ---------------------------------------------------------------------------
# 스캔
# ---------------------------------------------------------------------------


def duration_sweep(
    durations: Sequence[float],
    model: QubitModel,
    angle: float = math.pi,
    n: int = 11,
    first_order: bool = True,
    first_order_phases: Optional[Sequence[float]] = None,
    max_workers: int = 1,
) -> List[Dict[str, float]]:
    """
    게이트 시간별 위상 평균 오차 (보정 없음, 대수해, 1차 마그누스 파라미터)

    계산할 수 없는 항목은 NaN 으로 기록한다.
    """
    omega = model.qubit_frequency

    def measure(p: PulseParams) -> float:
        try:
            return phase_averaged_error(p, model, n)
        except PulseLabException as e:
            logger.error(f"t_g={p.duration} ns 오차 계산 실패: {e.detail}")
            return math.nan

    def row(duration: float) -> Dict[str, float]:
        uncorrected = base_params(angle, duration)
        algebraic = uncorrected.model_copy(update={"ppp": algebraic_params(omega).ppp})
        out = {
            "duration": float(duration),
            "magnus_periods": duration * omega / math.pi,
            "uncorrected": measure(uncorrected),
            "algebraic": measure(algebraic),
            "first_order": math.nan,
        }
        if first_order:
            try:
                fo = first_order_params(omega, angle, duration, phases=first_order_phases)
                corrected = uncorrected.model_copy(
                    update={"amplitude": fo.amplitude, "ppp": fo.ppp, "detuning": fo.detuning}
                )
                out["first_order"] = measure(corrected)
            except PulseLabException as e:
                logger.warning(f"t_g={duration} ns 1차 파라미터 계산 불가: {e.detail}")
        return out

    return _map(row, [float(d) for d in durations], max_workers)


class LevelCorrection(NamedTuple):
    """(Ω_Δ, ε) 최적화 결과"""

    result: OptimizationResult
    uncorrected_error: float
    leakage: float


def optimize_level_corrections(
    levels: LevelSystem,
    p: PulseParams,
    max_evaluations: Optional[int] = None,
    restarts: int = 1,
    seed: int = 0,
    rtol: Optional[float] = None,
    atol: Optional[float] = None,
) -> LevelCorrection:
    """
    4준위 전파 연산자의 계산 블록이 2준위 정확 전파 연산자와 일치하도록 (Ω_Δ, ε) 최적화

    Args:
        levels: 4준위 시스템
        p: 2준위 보정 파라미터 (φ = 0 에서 평가)
    """
    if levels.dimension != 4:
        raise DomainException("준위 보정 최적화에는 4준위 시스템이 필요합니다.")
    p = p.model_copy(update={"phase": 0.0, "detuning_scale": 0.0, "amplitude_scale": 1.0})
    reference = two_level_propagator(p, levels.qubit_frequency, "exact", rtol=rtol, atol=atol).matrix

    def propagator(q: PulseParams) -> np.ndarray:
        schedule = drive_frequency_schedule(levels, q) if q.detuning_scale != 0.0 else None
        return four_level_propagator(q, levels, schedule, rtol, atol).matrix

    def cost(q: PulseParams) -> float:
        return 1.0 - gate_fidelity(propagator(q)[:2, :2], reference, check_unitarity=False)

    uncorrected = cost(p)
    result = optimize(
        ["detuning_scale", "amplitude_scale"],
        p.model_copy(update={"detuning_scale": 1.0}),
        cost,
        max_evaluations=max_evaluations,
        restarts=restarts,
        seed=seed,
    )
    leak = leakage(propagator(result.params), check_unitarity=False)
    logger.info(
        f"준위 보정: Ω_Δ={result.params.detuning_scale:.4f}, ε={result.params.amplitude_scale:.4f}, "
        f"오차 {uncorrected:.3e} → {result.cost:.3e}"
    )
    return LevelCorrection(result=result, uncorrected_error=uncorrected, leakage=leak)

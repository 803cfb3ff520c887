"""
명령줄 진입점
시나리오 JSON 하나를 읽어 spectrum / params / scan / calibrate 명령을 실행하고
CSV, JSON 결과와 manifest.json 을 출력 디렉터리에 기록
"""

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from core.exceptions import ConfigException, PulseLabException
from core.logging_config import setup_logging
from schemas import (
    FluxoniumParams,
    FluxoniumSystemConfig,
    LevelSystem,
    ScenarioConfig,
    angular_to_mhz,
    mhz_to_angular,
)
from services.calibration import (
    PSEUDO_IDENTITY_KINDS,
    CalibrationContext,
    MeasurementModel,
    QubitModel,
    base_params,
    budget_from_results,
    coherence_limit,
    duration_sweep,
    heatmap_scan,
    optimize_level_corrections,
    protocol_gateset,
    pseudo_identity,
    run_protocol,
    simulate_rb,
)
from services.fluxonium import (
    diagonalize,
    fluxonium_level_system,
    level_system_from_spectrum,
    sweep_flux,
)
from services.magnus1 import parameter_sets, phase_grid
from services.propagation import error_trace
from services.series_kernels import algebraic_params

logger = logging.getLogger(__name__)

EXIT_OK = 0
TWO_PI = 2.0 * math.pi


def load_config(path: Path) -> Tuple[ScenarioConfig, str]:
    """
    시나리오 JSON 로드와 스키마 검증

    Returns:
        Tuple[ScenarioConfig, str]: 검증된 설정과 원문 SHA-256
    """
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise ConfigException(f"설정 파일을 읽을 수 없습니다: {path} ({e.strerror})")
    digest = hashlib.sha256(raw).hexdigest()
    try:
        data = json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError:
        raise ConfigException("설정 파일은 UTF-8 이어야 합니다.")
    except json.JSONDecodeError as e:
        raise ConfigException(f"JSON 구문 오류 ({e.lineno}행 {e.colno}열): {e.msg}")
    try:
        return ScenarioConfig.model_validate(data), digest
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(part) for part in err['loc'])}: {err['msg']}" for err in e.errors()
        )
        raise ConfigException(f"설정 검증 실패: {problems}")


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    if value is None:
        return ""
    return str(value)


def _jsonable(value: Any) -> Any:
    """NaN/inf 를 null 로 바꾼 JSON 호환 값"""
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


@dataclass
class RunContext:
    """명령 실행 상태와 출력 기록기"""

    command: str
    config: ScenarioConfig
    config_hash: str
    out_dir: Path
    seed: int
    threads: int
    engine: str
    files: List[str] = field(default_factory=list)

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        with open(self.out_dir / name, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_cell(v) for v in row])
        self.files.append(name)
        logger.info(f"CSV 기록: {name}")

    def write_json(self, name: str, payload: Dict[str, Any]) -> None:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        document = _jsonable({**payload, "config_hash": self.config_hash})
        text = json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False)
        (self.out_dir / name).write_text(text + "\n", encoding="utf-8")
        self.files.append(name)
        logger.info(f"JSON 기록: {name}")

    def write_manifest(self) -> None:
        self.write_json(
            "manifest.json",
            {
                "command": self.command,
                "seed": self.seed,
                "engine": self.engine,
                "files": sorted(self.files),
            },
        )

    @property
    def tolerances(self):
        return self.config.tolerances

    @property
    def cost_points(self) -> int:
        return self.tolerances.phase_grid_size - 1

    def two_level_model(self, qubit_frequency: float, engine: Optional[str] = None) -> QubitModel:
        return QubitModel.two_level(
            qubit_frequency,
            engine or self.engine,
            rtol=self.tolerances.integrator_rtol,
            atol=self.tolerances.integrator_atol,
            truncation_order=self.tolerances.truncation_order,
        )

    def four_level_model(self, levels: LevelSystem) -> QubitModel:
        return QubitModel(
            levels,
            "exact",
            rtol=self.tolerances.integrator_rtol,
            atol=self.tolerances.integrator_atol,
        )


def _fluxonium_levels(ctx: RunContext) -> Optional[LevelSystem]:
    system = ctx.config.system
    if isinstance(system, FluxoniumSystemConfig):
        return fluxonium_level_system(system.to_params(), system.basis_size)
    return None


def _qubit_frequency(ctx: RunContext) -> float:
    system = ctx.config.system
    if isinstance(system, FluxoniumSystemConfig):
        levels = _fluxonium_levels(ctx)
        assert levels is not None
        return levels.qubit_frequency
    return mhz_to_angular(system.qubit_frequency_mhz)


def _require_gates(ctx: RunContext) -> None:
    if not ctx.config.gates:
        raise ConfigException(f"'{ctx.command}' 명령에는 gates 항목이 필요합니다.")


def cmd_spectrum(ctx: RunContext) -> None:
    """플럭소니움 에너지, η 표, 비조화성 (선택: 자속 스윕 CSV)"""
    system = ctx.config.system
    if not isinstance(system, FluxoniumSystemConfig):
        raise ConfigException("'spectrum' 명령에는 fluxonium 시스템이 필요합니다.")
    spectrum = diagonalize(system.to_params(), system.basis_size)
    levels = level_system_from_spectrum(spectrum)
    energies = [float(e) for e in spectrum.energies]
    ctx.write_json(
        "spectrum.json",
        {
            "energies_rad_per_ns": energies,
            "energies_ghz": [e / TWO_PI for e in energies],
            "qubit_frequency_mhz": angular_to_mhz(levels.qubit_frequency),
            "eta": dict(sorted(levels.eta.items())),
            "anharmonicities_ghz": {
                "alpha2": levels.anharmonicity(2) / TWO_PI,
                "alpha3": levels.anharmonicity(3) / TWO_PI,
            },
            "basis_size": spectrum.basis_size,
            "convergence_defect": spectrum.convergence_defect,
        },
    )

    if system.flux_sweep:
        rows = []
        for flux, result in zip(
            system.flux_sweep, sweep_flux(system.to_params(), system.flux_sweep, system.basis_size)
        ):
            swept = level_system_from_spectrum(result)
            rows.append(
                [float(flux)]
                + [float(e) / TWO_PI for e in result.energies[1:4]]
                + [swept.eta["12"], swept.eta["23"], swept.eta["03"]]
            )
        ctx.write_csv(
            "flux_sweep.csv",
            ["external_flux", "e01_ghz", "e02_ghz", "e03_ghz", "eta_12", "eta_23", "eta_03"],
            rows,
        )


def cmd_params(ctx: RunContext) -> None:
    """게이트별 대수해, 절단 급수, 1차 보정 파라미터"""
    _require_gates(ctx)
    omega = _qubit_frequency(ctx)
    tol = ctx.tolerances
    rows = []
    entries: List[Dict[str, Any]] = []
    for gate in ctx.config.gates:
        n_c = gate.duration_ns * omega / math.pi
        for entry in parameter_sets(
            omega,
            gate.angle,
            gate.duration_ns,
            phases=phase_grid(tol.phase_grid_size),
            order=tol.truncation_order,
            tolerance=tol.fixed_point_tolerance,
            max_iterations=tol.fixed_point_max_iterations,
            max_workers=ctx.threads,
        ):
            rows.append(
                [
                    gate.angle_deg,
                    gate.duration_ns,
                    n_c,
                    entry.method,
                    entry.available,
                    entry.amplitude,
                    entry.ppp,
                    entry.detuning,
                    entry.reason,
                ]
            )
            entries.append(
                {
                    "angle_deg": gate.angle_deg,
                    "duration_ns": gate.duration_ns,
                    "magnus_periods": n_c,
                    **entry._asdict(),
                    "available": entry.available,
                }
            )
    ctx.write_csv(
        "pulse_parameters.csv",
        [
            "angle_deg",
            "duration_ns",
            "magnus_periods",
            "method",
            "available",
            "amplitude_rad_per_ns",
            "ppp_ns",
            "detuning_rad_per_ns",
            "reason",
        ],
        rows,
    )
    ctx.write_json(
        "pulse_parameters.json",
        {"qubit_frequency_rad_per_ns": omega, "entries": entries},
    )


def _scan_duration_sweep(ctx: RunContext, omega: float) -> None:
    scan = ctx.config.scan
    assert scan is not None
    if not scan.durations_ns:
        raise ConfigException("duration_sweep 스캔에는 durations_ns 가 필요합니다.")
    angle = ctx.config.gates[0].angle if ctx.config.gates else math.pi
    rows = duration_sweep(
        scan.durations_ns,
        ctx.two_level_model(omega),
        angle=angle,
        n=ctx.cost_points,
        first_order_phases=phase_grid(ctx.tolerances.phase_grid_size),
        max_workers=ctx.threads,
    )
    ctx.write_csv(
        "duration_sweep.csv",
        ["duration_ns", "magnus_periods", "error_uncorrected", "error_algebraic", "error_first_order"],
        (
            [r["duration"], r["magnus_periods"], r["uncorrected"], r["algebraic"], r["first_order"]]
            for r in rows
        ),
    )


def _scan_time_trace(ctx: RunContext, omega: float) -> None:
    scan = ctx.config.scan
    assert scan is not None
    _require_gates(ctx)
    if not scan.times_ns:
        raise ConfigException("time_trace 스캔에는 times_ns 가 필요합니다.")
    rows = []
    for index, gate in enumerate(ctx.config.gates):
        times = sorted(t for t in scan.times_ns if 0 < t <= gate.duration_ns)
        if not times:
            logger.warning(f"게이트 {index}: t_g={gate.duration_ns} ns 범위의 관측 시각이 없습니다.")
            continue
        uncorrected = base_params(gate.angle, gate.duration_ns, axis=gate.axis)
        algebraic = uncorrected.model_copy(update={"ppp": algebraic_params(omega).ppp})
        traces = []
        for p in (uncorrected, algebraic):
            try:
                traces.append(
                    error_trace(
                        p,
                        omega,
                        times,
                        ctx.engine,
                        rtol=ctx.tolerances.integrator_rtol,
                        atol=ctx.tolerances.integrator_atol,
                    )
                )
            except PulseLabException as e:
                logger.error(f"게이트 {index} 시간 추적 실패: {e.detail}")
                traces.append([math.nan] * len(times))
        for t, e0, e1 in zip(times, *traces):
            rows.append([index, gate.angle_deg, gate.duration_ns, t, e0, e1])
    ctx.write_csv(
        "time_trace.csv",
        ["gate_index", "angle_deg", "duration_ns", "time_ns", "error_uncorrected", "error_algebraic"],
        rows,
    )


def _scan_heatmap(ctx: RunContext, omega: float) -> None:
    scan = ctx.config.scan
    assert scan is not None
    _require_gates(ctx)
    if scan.ppp_grid_ns is None or scan.detuning_grid_mhz is None:
        raise ConfigException("heatmap 스캔에는 ppp_grid_ns 와 detuning_grid_mhz 가 필요합니다.")
    ppp_values = scan.ppp_grid_ns.values()
    detuning_mhz = scan.detuning_grid_mhz.values()
    detunings = [mhz_to_angular(d) for d in detuning_mhz]
    rows = []
    for index, gate in enumerate(ctx.config.gates):
        result = heatmap_scan(
            ppp_values,
            detunings,
            gate.angle,
            gate.duration_ns,
            ctx.two_level_model(omega),
            optimize_amplitude=scan.optimize_amplitude,
            n=ctx.cost_points,
            max_workers=ctx.threads,
        )
        for i, d in enumerate(detuning_mhz):
            for j, lam in enumerate(ppp_values):
                rows.append(
                    [index, gate.angle_deg, gate.duration_ns, d, lam, result.errors[i][j], result.amplitudes[i][j]]
                )
    ctx.write_csv(
        "heatmap.csv",
        ["gate_index", "angle_deg", "duration_ns", "detuning_mhz", "ppp_ns", "error", "amplitude_rad_per_ns"],
        rows,
    )


def _scan_level_correction(ctx: RunContext, omega: float) -> None:
    scan = ctx.config.scan
    assert scan is not None
    if not scan.charging_energies_ghz or not scan.durations_ns:
        raise ConfigException("level_correction 스캔에는 charging_energies_ghz 와 durations_ns 가 필요합니다.")
    basis = getattr(ctx.config.system, "basis_size", None)
    rows = []
    for charging in scan.charging_energies_ghz:
        params = FluxoniumParams(
            charging_energy=charging,
            inductive_energy=scan.inductive_energy_ghz,
            josephson_energy=scan.josephson_energy_ghz,
        )
        try:
            levels = fluxonium_level_system(params, basis)
        except PulseLabException as e:
            logger.error(f"E_C={charging} GHz 스펙트럼 계산 실패: {e.detail}")
            rows.extend([charging, d] + [math.nan] * 6 for d in scan.durations_ns)
            continue
        for duration in scan.durations_ns:
            p = base_params(math.pi, duration, ppp=1.0 / (4.0 * levels.qubit_frequency))
            try:
                correction = optimize_level_corrections(
                    levels,
                    p,
                    seed=ctx.seed,
                    rtol=ctx.tolerances.integrator_rtol,
                    atol=ctx.tolerances.integrator_atol,
                )
                best = correction.result
                rows.append(
                    [
                        charging,
                        duration,
                        angular_to_mhz(levels.qubit_frequency),
                        correction.uncorrected_error,
                        best.cost,
                        best.params.detuning_scale,
                        best.params.amplitude_scale,
                        correction.leakage,
                    ]
                )
            except PulseLabException as e:
                logger.error(f"E_C={charging} GHz, t_g={duration} ns 준위 보정 실패: {e.detail}")
                rows.append([charging, duration, angular_to_mhz(levels.qubit_frequency)] + [math.nan] * 5)
    ctx.write_csv(
        "level_correction.csv",
        [
            "charging_energy_ghz",
            "duration_ns",
            "qubit_frequency_mhz",
            "error_uncorrected",
            "error_corrected",
            "detuning_scale",
            "amplitude_scale",
            "leakage",
        ],
        rows,
    )


_SCANS = {
    "duration_sweep": _scan_duration_sweep,
    "time_trace": _scan_time_trace,
    "heatmap": _scan_heatmap,
    "level_correction": _scan_level_correction,
}


def cmd_scan(ctx: RunContext) -> None:
    """설정의 scan 항목 실행"""
    scan = ctx.config.scan
    if scan is None:
        raise ConfigException("'scan' 명령에는 scan 항목이 필요합니다.")
    omega = _qubit_frequency(ctx) if scan.kind != "level_correction" else 0.0
    _SCANS[scan.kind](ctx, omega)


def cmd_calibrate(ctx: RunContext) -> None:
    """보정 프로토콜, 의사 항등 추적, RB 감쇠, 오차 예산"""
    calibration = ctx.config.calibration
    if calibration is None:
        raise ConfigException("'calibrate' 명령에는 calibration 항목이 필요합니다.")
    _require_gates(ctx)
    levels4 = _fluxonium_levels(ctx)
    omega = levels4.qubit_frequency if levels4 is not None else _qubit_frequency(ctx)
    tol = ctx.tolerances

    def context(model: QubitModel, duration: float) -> CalibrationContext:
        return CalibrationContext(
            model=model,
            duration=duration,
            repetitions=calibration.pseudo_identity_repetitions,
            heatmap_size=calibration.heatmap_size,
            interpolation_samples=tol.phase_interpolation_samples,
            cost_points=ctx.cost_points,
            seed=ctx.seed,
            max_workers=ctx.threads,
        )

    durations = sorted({gate.duration_ns for gate in ctx.config.gates})
    report: List[Dict[str, Any]] = []
    trace_rows, rb_rows = [], []
    for duration in durations:
        ctx2 = context(ctx.two_level_model(omega), duration)
        ctx4 = context(ctx.four_level_model(levels4), duration) if levels4 is not None else None
        main_ctx = ctx4 or ctx2
        two_level_results: Dict[str, Any] = {}
        for protocol in calibration.protocols:
            result = run_protocol(protocol, main_ctx)
            simulator = main_ctx.simulator(protocol_gateset(result, main_ctx))
            for kind in PSEUDO_IDENTITY_KINDS:
                trace = pseudo_identity(kind, calibration.pseudo_identity_repetitions, simulator)
                trace_rows.extend(
                    [duration, protocol, kind, m, s] for m, s in zip(trace.repetitions, trace.signal)
                )
            rb = simulate_rb(
                simulator,
                calibration.rb_lengths,
                calibration.rb_seeds,
                seed=ctx.seed,
                measurement=MeasurementModel(calibration.binomial_shots, ctx.seed),
            )
            rb_rows.extend([duration, protocol, m, s] for m, s in zip(rb.lengths, rb.survival))

            entry: Dict[str, Any] = {
                "duration_ns": duration,
                "protocol": protocol,
                "gates": {label: p.model_dump() for label, p in result.gates.items()},
                "coherent_errors": result.coherent_errors,
                "leakage": result.leakage,
                "rb": rb.model_dump(),
            }
            if ctx4 is not None:
                reference = "P2" if protocol == "P3" else protocol
                if reference not in two_level_results:
                    two_level_results[reference] = run_protocol(reference, ctx2)
                entry["error_budget"] = budget_from_results(
                    two_level_results[reference], result
                ).model_dump()
            if calibration.coherence is not None:
                # μs → ns
                entry["coherence_limit_fidelity"] = coherence_limit(
                    duration, calibration.coherence.t1_us * 1e3, calibration.coherence.t2e_us * 1e3
                )
            report.append(entry)

    ctx.write_csv(
        "pseudo_identity.csv", ["duration_ns", "protocol", "kind", "repetitions", "signal"], trace_rows
    )
    ctx.write_csv("rb_decay.csv", ["duration_ns", "protocol", "length", "survival"], rb_rows)
    ctx.write_json("calibration.json", {"qubit_frequency_rad_per_ns": omega, "results": report})


COMMANDS = {
    "spectrum": cmd_spectrum,
    "params": cmd_params,
    "scan": cmd_scan,
    "calibrate": cmd_calibrate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, required=True, help="시나리오 JSON 경로")
    common.add_argument("--out", type=Path, default=Path("out"), help="출력 디렉터리")
    common.add_argument("--seed", type=int, default=None, help="난수 시드 (설정값 덮어쓰기)")
    common.add_argument("--threads", type=int, default=1, help="스캔 작업자 수")
    common.add_argument(
        "--engine",
        choices=["exact", "magnus0", "magnus1", "rwa"],
        default=None,
        help="전파 엔진 (설정값 덮어쓰기)",
    )
    common.add_argument("--log-level", default="INFO")
    common.add_argument("--log-format", choices=["text", "json"], default="text")

    parser = argparse.ArgumentParser(
        prog="pulselab", description="RWA 너머 단일 큐비트 게이트 펄스 도구"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, func in COMMANDS.items():
        subparsers.add_parser(name, parents=[common], help=(func.__doc__ or "").strip())
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level, args.log_format)
    try:
        if args.threads < 1:
            raise ConfigException(f"--threads 는 1 이상이어야 합니다: {args.threads}")
        if args.seed is not None and args.seed < 0:
            raise ConfigException(f"--seed 는 0 이상이어야 합니다: {args.seed}")
        config, digest = load_config(args.config)
        ctx = RunContext(
            command=args.command,
            config=config,
            config_hash=digest,
            out_dir=args.out,
            seed=config.seed if args.seed is None else args.seed,
            threads=args.threads,
            engine=args.engine or config.engine,
        )
        logger.info(f"'{args.command}' 실행: 설정 해시 {digest[:12]}, 시드 {ctx.seed}")
        COMMANDS[args.command](ctx)
        ctx.write_manifest()
    except PulseLabException as e:
        logger.error(f"[{e.error_code}] {e.detail}")
        print(f"오류 [{e.error_code}]: {e.detail}", file=sys.stderr)
        return e.exit_code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""
RWA 너머 단일 큐비트 게이트 펄스 FastAPI 애플리케이션
플럭소니움 스펙트럼, 펄스 파라미터, 결맞음 한계 계산 API
"""

import logging
import math
from datetime import datetime, timezone

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from core.config import settings
from core.exceptions import PulseLabException
from core.logging_config import setup_logging
from middleware.request_guard import RequestLoggingMiddleware, RequestSizeGuardMiddleware
from schemas import (
    CoherenceLimitRequest,
    CoherenceLimitResponse,
    ErrorResponse,
    FluxoniumParams,
    PulseParameterEntry,
    PulseParametersRequest,
    PulseParametersResponse,
    SpectrumRequest,
    SpectrumResponse,
    angular_to_mhz,
    mhz_to_angular,
)
from services.calibration import coherence_limit
from services.fluxonium import adiabaticity_parameter, diagonalize, level_system_from_spectrum
from services.magnus1 import parameter_sets, phase_grid

setup_logging()
logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

app = FastAPI(
    title=settings.api_title,
    description="RWA가 성립하지 않는 영역의 단일 큐비트 게이트 펄스 계산 서비스",
    version=settings.api_version,
    docs_url="/docs" if not settings.is_production else None,
    redoc_url="/redoc" if not settings.is_production else None,
)

app.add_middleware(RequestSizeGuardMiddleware)
app.add_middleware(RequestLoggingMiddleware)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")


@app.exception_handler(PulseLabException)
async def pulselab_exception_handler(request: Request, exc: PulseLabException):
    """도메인 예외 처리기"""
    logger.warning(f"{request.url.path}: [{exc.error_code}] {exc.detail}")
    return JSONResponse(
        status_code=exc.status_code,
        content=ErrorResponse(
            error=exc.detail,
            errorCode=exc.error_code,
            processedDate=_now(),
        ).model_dump(),
    )


@app.exception_handler(Exception)
async def general_exception_handler(request: Request, exc: Exception):
    """일반 예외 처리기"""
    logger.error(f"Unexpected error: {str(exc)}")
    return JSONResponse(
        status_code=500,
        content=ErrorResponse(
            error="서버 내부 오류가 발생했습니다.",
            errorCode="INTERNAL_ERROR",
            processedDate=_now(),
        ).model_dump(),
    )


@app.get("/health")
async def health_check():
    """헬스 체크 엔드포인트"""
    return {"status": "healthy", "timestamp": _now()}


@app.post("/api/spectrum", response_model=SpectrumResponse)
def compute_spectrum(spectrum_request: SpectrumRequest):
    """
    플럭소니움 스펙트럼 API 엔드포인트

    Args:
        spectrum_request: 회로 에너지 (GHz)와 기저 크기

    Returns:
        SpectrumResponse: 4준위 에너지, η 표, 비조화성
    """
    params = FluxoniumParams(
        charging_energy=spectrum_request.chargingEnergyGhz,
        inductive_energy=spectrum_request.inductiveEnergyGhz,
        josephson_energy=spectrum_request.josephsonEnergyGhz,
        external_flux=spectrum_request.externalFlux,
    )
    logger.info(f"스펙트럼 요청: E_C={params.charging_energy}, E_L={params.inductive_energy}, E_J={params.josephson_energy} GHz")
    spectrum = diagonalize(params, spectrum_request.basisSize)
    levels = level_system_from_spectrum(spectrum)

    adiabaticity = None
    if spectrum_request.driveStrengthMhz is not None:
        adiabaticity = adiabaticity_parameter(levels, mhz_to_angular(spectrum_request.driveStrengthMhz))

    return SpectrumResponse(
        success=True,
        energiesGhz=[float(e) / TWO_PI for e in spectrum.energies],
        qubitFrequencyMhz=angular_to_mhz(levels.qubit_frequency),
        eta=dict(levels.eta),
        anharmonicitiesGhz={
            "alpha2": levels.anharmonicity(2) / TWO_PI,
            "alpha3": levels.anharmonicity(3) / TWO_PI,
        },
        convergenceDefect=spectrum.convergence_defect,
        adiabaticity=adiabaticity,
    )


@app.post("/api/pulse-parameters", response_model=PulseParametersResponse)
def compute_pulse_parameters(parameters_request: PulseParametersRequest):
    """대수해, 절단 급수, 1차 보정 파라미터 (계산 불가 항목은 사유와 함께 표시)"""
    omega = mhz_to_angular(parameters_request.qubitFrequencyMhz)
    duration = parameters_request.durationNs
    entries = parameter_sets(
        omega,
        math.radians(parameters_request.angleDeg),
        duration,
        phases=phase_grid(parameters_request.phaseGridSize),
    )
    return PulseParametersResponse(
        success=True,
        magnusPeriods=duration * omega / math.pi,
        entries=[
            PulseParameterEntry(
                method=entry.method,
                available=entry.available,
                amplitudeMhz=None if entry.amplitude is None else angular_to_mhz(entry.amplitude),
                pppNs=entry.ppp,
                detuningMhz=None if entry.detuning is None else angular_to_mhz(entry.detuning),
                reason=entry.reason,
            )
            for entry in entries
        ],
    )


@app.post("/api/coherence-limit", response_model=CoherenceLimitResponse)
async def compute_coherence_limit(coherence_request: CoherenceLimitRequest):
    """결어긋남 한계 충실도 (T_1, T_2E 는 μs)"""
    fidelity = coherence_limit(
        coherence_request.durationNs,
        coherence_request.t1Us * 1e3,
        coherence_request.t2eUs * 1e3,
    )
    return CoherenceLimitResponse(success=True, fidelity=fidelity, infidelity=1.0 - fidelity)


if __name__ == "__main__":
    import uvicorn

    uvicorn.run(app, host="0.0.0.0", port=8000)

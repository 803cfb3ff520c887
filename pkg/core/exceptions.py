"""
커스텀 예외 클래스 정의
수치 계산, 설정, 보정 과정에서 사용하는 도메인 예외들
"""

from typing import Any, Optional


class PulseLabException(Exception):
    """도메인 공통 예외 클래스

    HTTP 응답 코드와 CLI 종료 코드를 함께 가진다.
    """

    status_code: int = 500
    exit_code: int = 3
    default_error_code: str = "PULSELAB_ERROR"
    default_detail: str = "계산 중 오류가 발생했습니다."

    def __init__(
        self,
        detail: Optional[str] = None,
        error_code: Optional[str] = None,
    ):
        self.detail = detail or self.default_detail
        self.error_code = error_code or self.default_error_code
        super().__init__(self.detail)


class DomainException(PulseLabException):
    """입력 정의역 위반 예외"""

    status_code = 422
    exit_code = 2
    default_error_code = "DOMAIN_ERROR"
    default_detail = "입력값이 허용 범위를 벗어났습니다."


class ConfigException(PulseLabException):
    """시나리오 설정 예외"""

    status_code = 422
    exit_code = 2
    default_error_code = "CONFIG_ERROR"
    default_detail = "설정 파일이 올바르지 않습니다."


class SingularityException(PulseLabException):
    """분모가 0이 되는 특이점 예외"""

    default_error_code = "SINGULARITY_ERROR"
    default_detail = "특이점에 도달하여 값을 계산할 수 없습니다."


class ConvergenceException(PulseLabException):
    """급수 발산 예외"""

    default_error_code = "CONVERGENCE_ERROR"
    default_detail = "급수가 수렴하지 않습니다. 게이트 시간을 늘려주세요."


class IterationException(PulseLabException):
    """고정점 반복 미수렴 예외"""

    default_error_code = "ITERATION_ERROR"
    default_detail = "고정점 반복이 최대 반복 횟수 내에 수렴하지 않았습니다."

    def __init__(self, detail: Optional[str] = None, last_iterate: Any = None):
        super().__init__(detail)
        self.last_iterate = last_iterate


class IntegrationException(PulseLabException):
    """시간 발전 적분 실패 예외"""

    default_error_code = "INTEGRATION_ERROR"
    default_detail = "시간 발전 적분에 실패했습니다."


class ResolutionException(PulseLabException):
    """기저 크기 부족 예외"""

    default_error_code = "RESOLUTION_ERROR"
    default_detail = "기저 크기가 부족합니다. 더 큰 basis_size를 사용해주세요."

    def __init__(self, detail: Optional[str] = None, suggested_basis_size: int = 0):
        super().__init__(detail)
        self.suggested_basis_size = suggested_basis_size


class DegenerateDriveException(PulseLabException):
    """큐비트 전이 구동 행렬 요소 소멸 예외"""

    default_error_code = "DEGENERATE_DRIVE_ERROR"
    default_detail = "큐비트 전이의 전하 행렬 요소가 0입니다."


class CalibrationException(PulseLabException):
    """보정 프로토콜 실패 예외"""

    exit_code = 4
    default_error_code = "CALIBRATION_ERROR"
    default_detail = "보정 프로토콜이 실패했습니다."

    def __init__(self, detail: Optional[str] = None, diagnostic: Any = None):
        super().__init__(detail)
        self.diagnostic = diagnostic

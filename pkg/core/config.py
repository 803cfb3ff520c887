"""
애플리케이션 설정 관리
수치 계산 기본값과 로깅 설정을 중앙에서 관리
"""

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """라이브러리 기본값 설정 클래스

    CLI 실행 시에는 시나리오 설정 파일의 값이 우선하며,
    여기의 값은 라이브러리 함수의 기본 인자로만 사용된다.
    """

    model_config = SettingsConfigDict(
        env_prefix="PULSELAB_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",  # 알 수 없는 환경변수 무시
    )

    # 환경 설정
    environment: str = "development"

    # API 설정
    api_title: str = "RWA 너머 단일 큐비트 게이트 펄스 API"
    api_version: str = "1.0.0"
    max_request_size: int = 65536  # 64KB

    # 급수 전개 설정
    truncation_order: int = 14
    max_derivative_order: int = 16
    series_accuracy: float = 1e-10

    # 적분기 설정
    integrator_method: str = "DOP853"
    integrator_rtol: float = 1e-12
    integrator_atol: float = 1e-12

    # 고정점 반복 설정
    fixed_point_tolerance: float = 1e-10
    fixed_point_max_iterations: int = 200
    fixed_point_damping: float = 1.0

    # 반송파 위상 평균 설정
    phase_grid_size: int = 12
    phase_interpolation_samples: int = 32

    # 플럭소니움 대각화 설정
    fluxonium_basis_size: int = 120
    spectrum_convergence_threshold: float = 1e-6

    # 최적화 설정
    optimizer_restarts: int = 3
    optimizer_max_evaluations: int = 400

    # 로깅 설정
    log_level: str = "INFO"
    log_format: str = "text"

    def __init__(self, **kwargs):
        super().__init__(**kwargs)

        # 범위 검증
        if self.truncation_order < 0:
            raise ValueError("PULSELAB_TRUNCATION_ORDER는 0 이상이어야 합니다.")
        if self.max_derivative_order < self.truncation_order + 2:
            raise ValueError(
                "PULSELAB_MAX_DERIVATIVE_ORDER는 절단 차수보다 2 이상 커야 합니다."
            )
        if not 0.0 < self.fixed_point_damping <= 1.0:
            raise ValueError("PULSELAB_FIXED_POINT_DAMPING은 (0, 1] 범위여야 합니다.")
        if self.phase_grid_size < 1 or self.phase_interpolation_samples < 4:
            raise ValueError("위상 격자 크기 설정이 올바르지 않습니다.")
        if self.log_format not in ("text", "json"):
            raise ValueError("PULSELAB_LOG_FORMAT은 'text' 또는 'json'이어야 합니다.")

    @property
    def is_production(self) -> bool:
        return self.environment == "production"


# 전역 설정 인스턴스
settings = Settings()

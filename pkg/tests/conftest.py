"""
Pytest 설정 및 공통 픽스처
테스트 환경 설정과 재사용 가능한 물리 시스템 픽스처 정의
"""

import math
import os

import numpy as np
import pytest
from fastapi.testclient import TestClient

# 테스트 환경 변수 설정
os.environ["PULSELAB_ENVIRONMENT"] = "testing"
os.environ["PULSELAB_LOG_LEVEL"] = "WARNING"

from main import app
from schemas import FluxoniumParams, LevelSystem, PulseParams, mhz_to_angular
from services.envelopes import cosine_envelope
from services.series_kernels import rwa_drive_strength

# 80 MHz 2준위 큐비트
QUBIT_FREQUENCY = mhz_to_angular(80.0)


@pytest.fixture
def client():
    """FastAPI 테스트 클라이언트 픽스처"""
    with TestClient(app) as test_client:
        yield test_client


@pytest.fixture
def qubit_frequency():
    """ω_01 = 2π·80 MHz (rad/ns)"""
    return QUBIT_FREQUENCY


@pytest.fixture
def two_level_system():
    return LevelSystem.two_level(QUBIT_FREQUENCY)


@pytest.fixture
def envelope():
    """t_g = 31.25 ns 코사인 포락선 (80 MHz 에서 N_c = 5)"""
    return cosine_envelope(31.25)


@pytest.fixture
def make_pulse():
    """RWA 구동 세기를 갖는 펄스 파라미터 생성기"""

    def factory(duration=31.25, angle=math.pi, **updates):
        amplitude = rwa_drive_strength(angle, cosine_envelope(duration), duration)
        return PulseParams(amplitude=amplitude, duration=duration, angle=angle, **updates)

    return factory


@pytest.fixture
def device_fluxonium():
    """실험 소자 수준의 플럭소니움 (E_C, E_L, E_J) = (0.88, 0.50, 4.92) GHz"""
    return FluxoniumParams(
        charging_energy=0.88, inductive_energy=0.50, josephson_energy=4.92, external_flux=0.5
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def setup_test_environment():
    """테스트 환경 자동 설정"""
    original_env = os.environ.copy()

    os.environ.update({"PULSELAB_ENVIRONMENT": "testing", "PULSELAB_LOG_LEVEL": "WARNING"})

    yield

    os.environ.clear()
    os.environ.update(original_env)

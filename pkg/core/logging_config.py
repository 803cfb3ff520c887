"""
로깅 설정
텍스트 또는 JSON 형식의 루트 로거 구성
"""

import logging
import sys
from typing import Optional

from pythonjsonlogger.json import JsonFormatter

from core.config import settings

TEXT_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def setup_logging(level: Optional[str] = None, fmt: Optional[str] = None) -> None:
    """
    루트 로거를 한 번 구성

    Args:
        level: 로그 레벨 (기본값: settings.log_level)
        fmt: 'text' 또는 'json' (기본값: settings.log_format)
    """
    level = (level or settings.log_level).upper()
    fmt = fmt or settings.log_format

    # 출력 파일과 섞이지 않도록 stderr로만 기록
    handler = logging.StreamHandler(sys.stderr)
    if fmt == "json":
        handler.setFormatter(
            JsonFormatter("%(asctime)s %(levelname)s %(name)s %(message)s")
        )
    else:
        handler.setFormatter(logging.Formatter(TEXT_FORMAT))

    root = logging.getLogger()
    for existing in list(root.handlers):
        root.removeHandler(existing)
    root.addHandler(handler)
    root.setLevel(level)

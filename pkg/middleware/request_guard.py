"""
요청 가드 미들웨어
요청 크기 제한과 요청 로깅
"""

import logging
import time
from datetime import datetime, timezone
from typing import Callable, Optional

from fastapi import Request
from fastapi.responses import JSONResponse
from starlette.middleware.base import BaseHTTPMiddleware

from core.config import settings
from schemas import ErrorResponse

logger = logging.getLogger(__name__)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")


class RequestSizeGuardMiddleware(BaseHTTPMiddleware):
    """Content-Length 기준 요청 크기 제한"""

    def __init__(self, app, max_request_size: Optional[int] = None):
        super().__init__(app)
        self.max_request_size = max_request_size or settings.max_request_size

    async def dispatch(self, request: Request, call_next: Callable):
        content_length = request.headers.get("content-length")
        if content_length and content_length.isdigit() and int(content_length) > self.max_request_size:
            logger.warning(f"요청 크기 초과: {content_length} bytes ({request.url.path})")
            return JSONResponse(
                status_code=413,
                content=ErrorResponse(
                    error=f"요청 크기가 너무 큽니다. 최대 {self.max_request_size // 1024}KB까지 허용됩니다.",
                    errorCode="REQUEST_TOO_LARGE",
                    processedDate=_now(),
                ).model_dump(),
            )
        return await call_next(request)


class RequestLoggingMiddleware(BaseHTTPMiddleware):
    """요청/응답 로깅과 X-Process-Time 헤더"""

    async def dispatch(self, request: Request, call_next: Callable):
        start_time = time.perf_counter()
        response = await call_next(request)
        process_time = time.perf_counter() - start_time

        message = f"{request.method} {request.url.path} - Status: {response.status_code} - Time: {process_time:.3f}s"
        if response.status_code >= 400:
            logger.warning(message)
        else:
            logger.debug(message)

        response.headers["X-Process-Time"] = f"{process_time:.6f}"
        return response

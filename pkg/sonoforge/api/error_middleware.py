import logging
from typing import Callable

from fastapi import Request, Response
from starlette.middleware.base import BaseHTTPMiddleware

from sonoforge.api.error_handler import domain_error_response, internal_error_response
from sonoforge.config import settings
from sonoforge.domain.exceptions import SonoforgeException

logger = logging.getLogger(__name__)


class ErrorHandlingMiddleware(BaseHTTPMiddleware):
    """
    Last line of defence: anything the exception handlers let through becomes
    an RFC 7807 problem document instead of a bare 500.
    """

    async def dispatch(self, request: Request, call_next: Callable) -> Response:
        try:
            return await call_next(request)

        except SonoforgeException as exc:
            return domain_error_response(exc, request)

        except Exception as exc:
            logger.error(
                f"Unhandled exception: {type(exc).__name__}: {exc}",
                extra={
                    "request_id": getattr(request.state, "request_id", "N/A"),
                    "path": request.url.path,
                    "method": request.method,
                },
                exc_info=True,
            )
            production = settings.ENV == "production"
            return internal_error_response(
                "Internal server error" if production else str(exc),
                request,
                production_mode=production,
            )

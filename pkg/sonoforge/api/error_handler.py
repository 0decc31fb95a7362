import logging
from typing import Any, Dict, List, Optional, Tuple, Type
from uuid import uuid4

from fastapi import Request, status
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from sonoforge.domain.exceptions import (
    AudioFormatError,
    DuplicateError,
    InvalidImageError,
    NotFoundError,
    OutputWriteError,
    SonoforgeException,
    UploadTooLargeError,
    ValidationError,
)

logger = logging.getLogger(__name__)

ERROR_BASE = "https://api.sonoforge.dev/errors"

# first match wins, so subclasses come before their bases
DOMAIN_ERRORS: Tuple[Tuple[Type[SonoforgeException], int, str, str], ...] = (
    (NotFoundError, status.HTTP_404_NOT_FOUND, "Not Found", "not-found"),
    (DuplicateError, status.HTTP_409_CONFLICT, "Conflict", "conflict"),
    (
        UploadTooLargeError,
        status.HTTP_413_REQUEST_ENTITY_TOO_LARGE,
        "Payload Too Large",
        "payload-too-large",
    ),
    (AudioFormatError, status.HTTP_400_BAD_REQUEST, "Invalid Audio", "invalid-audio"),
    (InvalidImageError, status.HTTP_400_BAD_REQUEST, "Invalid Image", "invalid-image"),
    (
        ValidationError,
        status.HTTP_422_UNPROCESSABLE_ENTITY,
        "Unprocessable Input",
        "validation-error",
    ),
    (OutputWriteError, status.HTTP_500_INTERNAL_SERVER_ERROR, "Write Failed", "write-failed"),
)


class ProblemDetail(BaseModel):
    """RFC 7807 Problem Details model."""

    type: str = "about:blank"
    title: str
    status: int
    detail: str
    correlation_id: str
    instance: Optional[str] = None
    validation_errors: Optional[List[Dict[str, Any]]] = None


def _correlation_id(request: Optional[Request]) -> str:
    if request is not None:
        request_id = getattr(request.state, "request_id", None)
        if request_id:
            return request_id
    return str(uuid4())


def create_problem(
    status_code: int,
    title: str,
    detail: str,
    type_uri: str = "about:blank",
    instance: Optional[str] = None,
    request: Optional[Request] = None,
    validation_errors: Optional[List[Dict[str, Any]]] = None,
) -> ProblemDetail:
    """
    Create a standardized problem detail.

    Args:
        status_code: HTTP status code
        title: Human-readable title
        detail: Detailed error message
        type_uri: URI identifying the problem type
        instance: URI identifying the specific occurrence
        request: Request whose id becomes the correlation id

    Returns:
        ProblemDetail object
    """
    correlation_id = _correlation_id(request)

    log = logger.error if status_code >= 500 else logger.warning
    log(
        f"Error {status_code}: {title} - {detail}",
        extra={
            "request_id": correlation_id,
            "status_code": status_code,
            "type_uri": type_uri,
            "instance": instance,
        },
    )

    return ProblemDetail(
        type=type_uri,
        title=title,
        status=status_code,
        detail=detail,
        correlation_id=correlation_id,
        instance=instance,
        validation_errors=validation_errors,
    )


def problem_response(
    status_code: int,
    title: str,
    detail: str,
    type_uri: str = "about:blank",
    instance: Optional[str] = None,
    request: Optional[Request] = None,
    validation_errors: Optional[List[Dict[str, Any]]] = None,
) -> JSONResponse:
    problem = create_problem(
        status_code=status_code,
        title=title,
        detail=detail,
        type_uri=type_uri,
        instance=instance if instance is not None else (request.url.path if request else None),
        request=request,
        validation_errors=validation_errors,
    )

    return JSONResponse(
        content=problem.model_dump(exclude_none=True),
        status_code=status_code,
        media_type="application/problem+json",
    )


def validation_error_response(errors: list, request: Optional[Request] = None) -> JSONResponse:
    return problem_response(
        status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
        title="Validation Error",
        detail="Request validation failed",
        type_uri=f"{ERROR_BASE}/validation-error",
        request=request,
        validation_errors=errors,
    )


def not_found_error_response(
    resource: str = "Resource", request: Optional[Request] = None
) -> JSONResponse:
    return problem_response(
        status_code=status.HTTP_404_NOT_FOUND,
        title="Not Found",
        detail=f"{resource} not found",
        type_uri=f"{ERROR_BASE}/not-found",
        request=request,
    )


def internal_error_response(
    detail: str = "Internal server error",
    request: Optional[Request] = None,
    production_mode: bool = False,
) -> JSONResponse:
    """
    Create an internal server error response.

    Args:
        detail: Error detail message
        request: FastAPI request object
        production_mode: If True, mask sensitive details

    Returns:
        JSONResponse with internal error problem details
    """
    if production_mode:
        detail = "An internal error occurred. Please try again later."

    return problem_response(
        status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
        title="Internal Server Error",
        detail=detail,
        type_uri=f"{ERROR_BASE}/internal-error",
        request=request,
    )


def domain_error_response(
    exc: SonoforgeException, request: Optional[Request] = None
) -> JSONResponse:
    """Map a toolkit exception onto its HTTP status and problem type."""
    for error_type, status_code, title, slug in DOMAIN_ERRORS:
        if isinstance(exc, error_type):
            return problem_response(
                status_code=status_code,
                title=title,
                detail=str(exc),
                type_uri=f"{ERROR_BASE}/{slug}",
                request=request,
            )

    return problem_response(
        status_code=status.HTTP_400_BAD_REQUEST,
        title="Bad Request",
        detail=str(exc),
        type_uri=f"{ERROR_BASE}/bad-request",
        request=request,
    )


def http_error_response(
    status_code: int, detail: str, request: Optional[Request] = None, production: bool = False
) -> JSONResponse:
    """Problem document for a starlette/fastapi HTTPException."""
    if status_code == status.HTTP_404_NOT_FOUND:
        return not_found_error_response("Resource", request)
    if status_code >= 500:
        return internal_error_response(detail, request, production_mode=production)

    titles = {
        400: ("Bad Request", "bad-request"),
        405: ("Method Not Allowed", "method-not-allowed"),
        409: ("Conflict", "conflict"),
        413: ("Payload Too Large", "payload-too-large"),
    }
    title, slug = titles.get(status_code, ("Request Error", "request-error"))
    return problem_response(
        status_code=status_code,
        title=title,
        detail=detail,
        type_uri=f"{ERROR_BASE}/{slug}",
        request=request,
    )


def format_validation_errors(errors: list) -> List[Dict[str, Any]]:
    return [
        {
            "field": " -> ".join(str(loc) for loc in error["loc"]),
            "message": error["msg"],
            "type": error["type"],
        }
        for error in errors
    ]

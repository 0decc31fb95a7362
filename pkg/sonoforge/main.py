import logging

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from starlette.exceptions import HTTPException as StarletteHTTPException

from sonoforge import __version__
from sonoforge.api.error_handler import (
    domain_error_response,
    format_validation_errors,
    http_error_response,
    validation_error_response,
)
from sonoforge.api.error_middleware import ErrorHandlingMiddleware
from sonoforge.api.middleware import RequestLoggingMiddleware
from sonoforge.api.v1 import augment, fusion, representations
from sonoforge.config import settings
from sonoforge.domain.exceptions import SonoforgeException
from sonoforge.log_config import configure_logging

configure_logging(settings.LOG_LEVEL)

logger = logging.getLogger(__name__)

app = FastAPI(
    title=settings.APP_NAME,
    version=__version__,
    description="Time-frequency images, audio augmentation and score fusion",
)

# last added runs first: request logging wraps error handling
app.add_middleware(ErrorHandlingMiddleware)
app.add_middleware(RequestLoggingMiddleware)
app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.CORS_ORIGINS or ["http://localhost:3000", "http://localhost:8000"],
    allow_credentials=False,
    allow_methods=["GET", "POST"],
    allow_headers=["*"],
)

app.include_router(
    representations.router, prefix="/api/v1/representations", tags=["representations"]
)
app.include_router(augment.router, prefix="/api/v1/augment", tags=["augmentation"])
app.include_router(fusion.router, prefix="/api/v1/fusion", tags=["fusion"])


@app.exception_handler(SonoforgeException)
async def domain_exception_handler(request: Request, exc: SonoforgeException):
    return domain_error_response(exc, request)


@app.exception_handler(StarletteHTTPException)
async def http_exception_handler(request: Request, exc: StarletteHTTPException):
    return http_error_response(
        exc.status_code, str(exc.detail), request, production=settings.ENV == "production"
    )


@app.exception_handler(RequestValidationError)
async def validation_exception_handler(request: Request, exc: RequestValidationError):
    return validation_error_response(format_validation_errors(exc.errors()), request)


@app.get("/health")
async def health():
    return {"status": "ok", "service": "sonoforge"}


@app.get("/")
async def root():
    return {"message": settings.APP_NAME, "version": __version__, "docs": "/docs"}

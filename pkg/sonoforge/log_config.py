import logging

LOG_FORMAT = (
    '{"timestamp": "%(asctime)s", "level": "%(levelname)s", "logger": "%(name)s", '
    '"message": "%(message)s", "run_id": "%(run_id)s"}'
)


class RunIDFormatter(logging.Formatter):
    """JSON-line formatter that tolerates records without a run or request id."""

    def format(self, record):
        if not hasattr(record, "run_id"):
            record.run_id = getattr(record, "request_id", "N/A")
        return super().format(record)


def configure_logging(level: str = "INFO") -> None:
    handler = logging.StreamHandler()
    handler.setFormatter(RunIDFormatter(LOG_FORMAT, datefmt="%Y-%m-%d %H:%M:%S"))

    logging.basicConfig(level=level, handlers=[handler], force=True)

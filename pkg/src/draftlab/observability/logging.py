# src/draftlab/observability/logging.py
"""
Structured (JSON) logging for the lab.

Every record is emitted as a single JSON object carrying a timestamp, the
level, the logger name, the message, any structured fields passed through
`extra=`, and the trace context of the active OpenTelemetry span.
"""

import json
import logging
import sys
from typing import IO, Any

from opentelemetry import trace

ROOT_LOGGER = "draftlab"

# Attributes every LogRecord carries; anything else came in through `extra=`.
_RESERVED = frozenset(
    vars(logging.LogRecord("", logging.INFO, "", 0, "", None, None)).keys()
) | {"message", "asctime"}


class JsonLogFormatter(logging.Formatter):
    """Formats log records as one JSON object per line."""

    def __init__(self, datefmt: str = "%Y-%m-%dT%H:%M:%S"):
        super().__init__(datefmt=datefmt)

    def format(self, record: logging.LogRecord) -> str:
        log_json: dict[str, Any] = {
            "timestamp": self.formatTime(record, self.datefmt),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        for key, value in vars(record).items():
            if key not in _RESERVED and not key.startswith("_"):
                log_json[key] = value

        span_context = trace.get_current_span().get_span_context()
        if span_context.is_valid:
            log_json["trace_id"] = f"{span_context.trace_id:032x}"
            log_json["span_id"] = f"{span_context.span_id:016x}"

        if record.exc_info:
            log_json["exception"] = self.formatException(record.exc_info)

        return json.dumps(log_json, default=str)


def configure_logging(
    level: int | str = logging.INFO, stream: IO[str] | None = None
) -> logging.Handler:
    """
    Installs a JSON handler on the `draftlab` logger and returns it.
    Handlers installed by a previous call are replaced.
    """
    logger = logging.getLogger(ROOT_LOGGER)
    for handler in list(logger.handlers):
        if isinstance(handler.formatter, JsonLogFormatter):
            logger.removeHandler(handler)

    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setFormatter(JsonLogFormatter())
    logger.addHandler(handler)
    logger.setLevel(level)
    logger.propagate = False
    return handler

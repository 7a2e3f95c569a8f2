# src/draftlab/observability/tracing.py
from collections.abc import Iterator
from contextlib import contextmanager
from typing import Any

from opentelemetry import trace
from opentelemetry.trace import Span, Status, StatusCode

TRACER_NAME = "draftlab"


def get_tracer() -> trace.Tracer:
    return trace.get_tracer(TRACER_NAME)


@contextmanager
def traced_operation(name: str, **attributes: Any) -> Iterator[Span]:
    """
    Runs the enclosed block inside a child span of the active context.
    The span ends with status OK, or ERROR carrying the exception message
    when the block raises; the exception is re-raised unchanged.
    """
    tracer = get_tracer()
    with tracer.start_as_current_span(
        name, record_exception=True, set_status_on_exception=False
    ) as span:
        for key, value in attributes.items():
            span.set_attribute(key, value)
        try:
            yield span
        except Exception as e:
            span.set_status(Status(StatusCode.ERROR, description=str(e)))
            raise
        span.set_status(Status(StatusCode.OK))

"""Base class for long-running components (trainers, sweeps, pipelines)."""

import time
from abc import ABC, abstractmethod
from typing import Any

from akvsr.utils import logging_service


def _render(values: dict[str, Any]) -> str:
    return ", ".join(f"{k}={v}" for k, v in values.items())


class BaseComponent(ABC):
    """Component with a class-named logger and per-operation wall-clock timing."""

    def __init__(self) -> None:
        """Initialize the component with a class-named logger."""
        self.logger = logging_service.get_logger(self.__class__.__name__)
        self._started: dict[str, float] = {}

    @abstractmethod
    def run(self, **kwargs: Any) -> Any:
        """Execute the component's main functionality."""

    def _log_execution_start(self, operation: str, **params: Any) -> None:
        """Log the start of an operation and start its clock."""
        self._started[operation] = time.perf_counter()
        suffix = f" ({_render(params)})" if params else ""
        self.logger.info(f"{operation}: started{suffix}")

    def _log_execution_end(
        self, operation: str, success: bool = True, **results: Any
    ) -> None:
        """Log the end of an operation with its elapsed time.

        Failures are logged at ERROR.
        """
        start = self._started.pop(operation, None)
        elapsed = "" if start is None else f" in {time.perf_counter() - start:.2f}s"
        suffix = f" ({_render(results)})" if results else ""
        if success:
            self.logger.info(f"{operation}: completed{elapsed}{suffix}")
        else:
            self.logger.error(f"{operation}: failed{elapsed}{suffix}")

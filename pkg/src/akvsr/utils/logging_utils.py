"""Logging Service Implementation.

This module implements structured logging for akvsr components. It supports
RFC 5424 severity names, log level management, and event subscriptions used
by the training step-log sink.
"""

import json
import logging
from collections.abc import Callable
from pathlib import Path
from typing import Any, Optional

from akvsr.errors import ConfigError
from akvsr.models.base.types import LogLevel

EventCallback = Callable[[dict[str, Any]], None]

# stdlib has no NOTICE/ALERT/EMERGENCY; map them onto the nearest level
_STDLIB_LEVELS = {
    LogLevel.DEBUG: logging.DEBUG,
    LogLevel.INFO: logging.INFO,
    LogLevel.NOTICE: logging.INFO,
    LogLevel.WARNING: logging.WARNING,
    LogLevel.ERROR: logging.ERROR,
    LogLevel.CRITICAL: logging.CRITICAL,
    LogLevel.ALERT: logging.CRITICAL,
    LogLevel.EMERGENCY: logging.CRITICAL,
}


class LoggingService:
    """akvsr logging service.

    Implements structured logging with:
    - RFC 5424 severity levels
    - Log level management
    - Event subscriptions
    - Logger name tracking
    """

    def __init__(self) -> None:
        """Initialize logging service."""
        self._level = LogLevel.INFO
        self._subscribers: list[EventCallback] = []
        self._loggers: dict[str, logging.Logger] = {}

    def initialize(self, level: LogLevel) -> None:
        """Initialize logging service."""
        logging.basicConfig(
            level=_STDLIB_LEVELS[level],
            format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        )
        self._loggers[""] = logging.getLogger()
        self.set_level(level)
        logging.getLogger(__name__).debug("Logging service initialized")

    def shutdown(self) -> None:
        """Shutdown logging service."""
        self._subscribers.clear()

    def get_logger(self, name: str) -> logging.Logger:
        """Get or create logger instance.

        Args:
            name: Logger name

        Returns:
            Logger instance
        """
        if name not in self._loggers:
            logger = logging.getLogger(name)
            logger.setLevel(_STDLIB_LEVELS[self._level])
            self._loggers[name] = logger

        return self._loggers[name]

    @property
    def level(self) -> LogLevel:
        """Current minimum level."""
        return self._level

    def set_level(self, level: LogLevel) -> None:
        """Set minimum log level.

        This updates the level for all registered loggers.

        Args:
            level: New log level
        """
        self._level = level
        for logger in self._loggers.values():
            logger.setLevel(_STDLIB_LEVELS[level])

    def notify(
        self,
        event: dict[str, Any],
        level: LogLevel = LogLevel.INFO,
        logger_name: Optional[str] = None,
    ) -> None:
        """Log a structured event and forward it to subscribers.

        Args:
            event: Event payload (JSON-serializable)
            level: Log severity level
            logger_name: Optional logger name
        """
        logger = self.get_logger(logger_name or "akvsr")
        logger.log(_STDLIB_LEVELS[level], "%s", event)

        for callback in list(self._subscribers):
            try:
                callback(event)
            except Exception as e:
                logger.error(f"Failed to notify subscriber: {e}")

    def subscribe(self, callback: EventCallback) -> None:
        """Register a callback receiving every notified event."""
        self._subscribers.append(callback)

    def unsubscribe(self, callback: EventCallback) -> None:
        """Remove a previously registered callback."""
        if callback in self._subscribers:
            self._subscribers.remove(callback)


class JsonlEventSink:
    """Subscriber that appends events of one kind to a JSONL file."""

    def __init__(self, path: Path, kind: str = "train_step") -> None:
        """Open (truncate) the sink file."""
        self.path = Path(path)
        self.kind = kind
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text("")

    def __call__(self, event: dict[str, Any]) -> None:
        """Write the event if it is of this sink's kind."""
        if event.get("event") != self.kind:
            return
        record = {k: v for k, v in event.items() if k != "event"}
        with self.path.open("a") as handle:
            handle.write(json.dumps(record, sort_keys=False) + "\n")


# Module-level singleton for convenience
logging_service = LoggingService()


def get_logger(name: str) -> logging.Logger:
    """Get or create logger instance.

    Args:
        name: Logger name

    Returns:
        Logger instance
    """
    return logging_service.get_logger(name)


def setup_logging(level: LogLevel | str) -> None:
    """Set up the logging service with the specified level."""
    name = level.value if isinstance(level, LogLevel) else str(level).upper()
    try:
        resolved = LogLevel(name)
    except ValueError as e:
        raise ConfigError(f"Unknown log level '{level}'", ["log_level"]) from e
    logging_service.initialize(resolved)

"""Utility functions for akvsr components."""

# File utilities
from akvsr.utils.file_utils import atomic_write_text, ensure_dir

# Logging utilities
from akvsr.utils.logging_utils import (
    JsonlEventSink,
    get_logger,
    logging_service,
    setup_logging,
)

__all__ = [
    # File utils
    "atomic_write_text",
    "ensure_dir",
    # Logging utils
    "JsonlEventSink",
    "setup_logging",
    "get_logger",
    "logging_service",
]

"""Shared enums for akvsr models."""

from akvsr.models.base.types import AblationAxis, DistillationMode, LogLevel, Split

__all__ = ["AblationAxis", "DistillationMode", "LogLevel", "Split"]

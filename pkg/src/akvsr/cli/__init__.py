"""Command-line entry point."""

from akvsr.cli.main import build_parser, load_run_config, main

__all__ = ["build_parser", "load_run_config", "main"]

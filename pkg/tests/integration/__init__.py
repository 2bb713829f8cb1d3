"""Integration tests for akvsr."""

"""Unit tests for akvsr."""

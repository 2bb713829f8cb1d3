"""Test package for akvsr."""

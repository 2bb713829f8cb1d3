"""Shared test utilities for akvsr.

Deterministic factories for random tensors, CTC instances, label
sequences, tiny configurations, corpora and models.
"""

"""Shared test fixtures for akvsr.

Fixtures provide seeded randomness, per-test temporary directories and tiny
configurations/corpora small enough that every training stage runs in
seconds.
"""

import shutil
import tempfile
import uuid
from pathlib import Path

import numpy as np
import pytest

from akvsr.config import RunConfig
from akvsr.corpus import Corpus, generate_corpus
from akvsr.nn import Vocab
from akvsr.test_utils.factories import (
    BaseFactory,
    RunConfigFactory,
    tiny_corpus,
)
from akvsr.training.stages import vocab_for
from akvsr.utils import logging_service


@pytest.fixture(autouse=True)
def _reseed_factories():
    """Every test sees the same factory stream regardless of order."""
    BaseFactory.reseed(1234)


@pytest.fixture(autouse=True)
def _clean_subscribers():
    """Step-log sinks must not leak between tests."""
    yield
    logging_service.shutdown()


@pytest.fixture
def rng():
    """Seeded numpy generator."""
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def shared_temp_dir():
    """Temporary directory for test session."""
    temp_dir = Path(tempfile.mkdtemp(prefix="akvsr_tests_"))
    yield temp_dir
    shutil.rmtree(temp_dir, ignore_errors=True)


@pytest.fixture
def temp_dir(shared_temp_dir):
    """Individual temporary directory for each test."""
    test_dir = shared_temp_dir / f"test_{uuid.uuid4().hex[:8]}"
    test_dir.mkdir(parents=True, exist_ok=True)
    yield test_dir


@pytest.fixture
def tiny_config(temp_dir) -> RunConfig:
    """Tiny run configuration rooted in the test's temp dir."""
    return RunConfigFactory.tiny(run_dir=temp_dir)


@pytest.fixture(scope="session")
def session_corpus() -> Corpus:
    """One tiny in-memory corpus shared by read-only tests."""
    return tiny_corpus(RunConfigFactory.tiny())


@pytest.fixture
def corpus_on_disk(tiny_config) -> RunConfig:
    """Tiny config whose corpus directory has been generated."""
    generate_corpus(tiny_config.corpus, tiny_config.paths.corpus_dir)
    return tiny_config


@pytest.fixture(scope="session")
def session_vocab(session_corpus) -> Vocab:
    """Vocabulary of the shared corpus."""
    return vocab_for(session_corpus)


@pytest.fixture
def sample_config_file(temp_dir):
    """Factory writing a YAML config file and returning its path."""

    def _write(text: str, name: str = "config.yaml") -> Path:
        path = temp_dir / name
        path.write_text(text)
        return path

    return _write

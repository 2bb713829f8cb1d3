"""Logging service, event subscriptions and the JSONL step-log sink."""

import json
import logging

import pytest

from akvsr.errors import ConfigError
from akvsr.models.base.types import LogLevel
from akvsr.utils.logging_utils import JsonlEventSink, LoggingService, setup_logging


@pytest.fixture
def service():
    svc = LoggingService()
    yield svc
    svc.shutdown()


@pytest.mark.unit
@pytest.mark.utils
class TestLoggingService:
    def test_subscribers_receive_events(self, service):
        received = []
        service.subscribe(received.append)
        service.notify({"event": "x", "value": 1})
        assert received == [{"event": "x", "value": 1}]

        service.unsubscribe(received.append)
        service.notify({"event": "y"})
        assert len(received) == 1

    def test_unsubscribe_unknown_is_noop(self, service):
        service.unsubscribe(lambda event: None)

    def test_failing_subscriber_does_not_block_others(self, service, caplog):
        received = []

        def broken(event):
            raise RuntimeError("boom")

        service.subscribe(broken)
        service.subscribe(received.append)
        with caplog.at_level(logging.ERROR):
            service.notify({"event": "x"})
        assert received == [{"event": "x"}]
        assert "boom" in caplog.text

    def test_shutdown_clears_subscribers(self, service):
        received = []
        service.subscribe(received.append)
        service.shutdown()
        service.notify({"event": "x"})
        assert received == []

    @pytest.mark.parametrize(
        "level,expected",
        [
            (LogLevel.NOTICE, logging.INFO),
            (LogLevel.ALERT, logging.CRITICAL),
            (LogLevel.DEBUG, logging.DEBUG),
        ],
    )
    def test_level_applies_to_known_loggers(self, service, level, expected):
        logger = service.get_logger("akvsr.test.levels")
        service.set_level(level)
        assert service.level is level
        assert logger.level == expected

    def test_get_logger_is_cached(self, service):
        assert service.get_logger("akvsr.a") is service.get_logger("akvsr.a")


@pytest.mark.unit
@pytest.mark.utils
class TestJsonlEventSink:
    def test_writes_only_its_kind(self, service, temp_dir):
        sink = JsonlEventSink(temp_dir / "steps.jsonl")
        service.subscribe(sink)
        service.notify({"event": "train_step", "stage": "memory", "step": 1, "loss": 2.0})
        service.notify({"event": "checkpoint_saved", "path": "x"})
        lines = sink.path.read_text().splitlines()
        assert [json.loads(line) for line in lines] == [
            {"stage": "memory", "step": 1, "loss": 2.0}
        ]

    def test_truncates_on_open(self, temp_dir):
        path = temp_dir / "nested" / "steps.jsonl"
        JsonlEventSink(path)({"event": "train_step", "step": 1})
        JsonlEventSink(path)
        assert path.read_text() == ""

    def test_custom_kind(self, temp_dir):
        sink = JsonlEventSink(temp_dir / "evals.jsonl", kind="eval")
        sink({"event": "eval", "wer": 0.5})
        sink({"event": "train_step", "step": 1})
        assert json.loads(sink.path.read_text()) == {"wer": 0.5}


@pytest.mark.unit
@pytest.mark.utils
class TestSetupLogging:
    def test_accepts_names_case_insensitively(self):
        setup_logging("warning")
        setup_logging(LogLevel.INFO)

    def test_unknown_level(self):
        with pytest.raises(ConfigError) as info:
            setup_logging("chatty")
        assert info.value.fields == ["log_level"]

"""Tests for logging configuration module."""

import logging
import logging.handlers
import sys
from unittest.mock import MagicMock

import pytest

from src.core.error_handling import ToleranceError
from src.core.logging_config import (
    MAX_MESSAGE_LENGTH,
    StripeEnergyFormatter,
    configure_logging,
    get_logger,
    log_error_context,
)


def _record(name="stripes.search", pathname="/path/to/test.py", msg="Test message", **kwargs):
    record = logging.LogRecord(
        name=name,
        level=kwargs.pop("level", logging.INFO),
        pathname=pathname,
        lineno=42,
        msg=msg,
        args=(),
        exc_info=kwargs.pop("exc_info", None),
    )
    record.funcName = "test_function"
    return record


@pytest.fixture
def restore_root_logger():
    """Put the root logger back after configure_logging replaced its handlers."""
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield root
    for handler in root.handlers:
        if handler not in handlers:
            handler.close()
    root.handlers[:] = handlers
    root.setLevel(level)


class TestStripeEnergyFormatter:
    """Tests for the structured formatter."""

    @pytest.mark.unit
    def test_format_basic_message(self):
        """Test service, component, level and location fields."""
        result = StripeEnergyFormatter().format(_record())

        assert " - stripe-energy - search - INFO - " in result
        assert "test.py:test_function:42" in result
        assert result.endswith("Test message")

    @pytest.mark.unit
    def test_component_attribute_wins(self):
        """Test that an adapter-supplied component overrides the logger name."""
        record = _record()
        record.component = "kernels"

        assert " - kernels - " in StripeEnergyFormatter().format(record)

    @pytest.mark.unit
    def test_format_with_exception(self):
        """Test that the exception type is appended."""
        try:
            raise ValueError("Test error")
        except ValueError:
            exc_info = sys.exc_info()

        result = StripeEnergyFormatter().format(
            _record(msg="Error occurred", level=logging.ERROR, exc_info=exc_info)
        )

        assert "ERROR" in result
        assert "Error occurred [Error: ValueError]" in result

    @pytest.mark.unit
    def test_long_messages_are_truncated(self):
        """Test that array dumps are cut after the maximum length."""
        formatter = StripeEnergyFormatter()
        message = "0." * MAX_MESSAGE_LENGTH

        result = formatter._truncate(message)

        assert result == message[:MAX_MESSAGE_LENGTH] + "...[truncated]"
        assert formatter._truncate("short") == "short"

    @pytest.mark.unit
    @pytest.mark.parametrize(
        "name, pathname, component",
        [
            ("src.stripes.diagnostics", "/x/y.py", "diagnostics"),
            ("energy", "/path/to/energy.py", "energy"),
            ("test", "", "core"),
        ],
    )
    def test_extract_component(self, name, pathname, component):
        """Test the component fallbacks: logger name, file name, default."""
        record = _record(name=name, pathname=pathname)

        assert StripeEnergyFormatter()._extract_component(record) == component


class TestGetLogger:
    """Tests for get_logger function."""

    @pytest.mark.unit
    def test_get_logger_basic(self):
        """Test getting a plain logger."""
        logger = get_logger("src.stripes.kernels")

        assert isinstance(logger, logging.Logger)
        assert logger.name == "src.stripes.kernels"

    @pytest.mark.unit
    def test_get_logger_with_component(self):
        """Test getting a logger bound to a component."""
        logger = get_logger("src.stripes.kernels", component="kernels")

        assert isinstance(logger, logging.LoggerAdapter)
        assert logger.extra["component"] == "kernels"


class TestConfigureLogging:
    """Tests for configure_logging function."""

    @pytest.mark.unit
    def test_console_only(self, restore_root_logger, tmp_path):
        """Test the console handler and the level."""
        configure_logging(log_level="DEBUG", enable_file=False, log_dir=str(tmp_path / "logs"))

        root = restore_root_logger
        assert root.level == logging.DEBUG
        assert [type(h) for h in root.handlers] == [logging.StreamHandler]
        assert isinstance(root.handlers[0].formatter, StripeEnergyFormatter)
        assert not (tmp_path / "logs").exists()

    @pytest.mark.unit
    def test_file_handler(self, restore_root_logger, tmp_path):
        """Test that the log directory and rotating file are created."""
        log_dir = tmp_path / "logs"

        configure_logging(enable_console=False, log_dir=str(log_dir), log_file="run.log")
        logging.getLogger("src.stripes.search").warning("budget nearly reached")

        root = restore_root_logger
        assert isinstance(root.handlers[0], logging.handlers.RotatingFileHandler)
        root.handlers[0].flush()
        assert "budget nearly reached" in (log_dir / "run.log").read_text()

    @pytest.mark.unit
    def test_unstructured_format(self, restore_root_logger, tmp_path):
        """Test the plain formatter."""
        configure_logging(enable_structured=False, enable_file=False, log_dir=str(tmp_path))

        formatter = restore_root_logger.handlers[0].formatter
        assert not isinstance(formatter, StripeEnergyFormatter)

    @pytest.mark.unit
    def test_numerical_libraries_are_quieted(self, restore_root_logger, tmp_path):
        """Test that scipy and numpy loggers stay at WARNING."""
        configure_logging(log_level="DEBUG", enable_file=False, log_dir=str(tmp_path))

        assert logging.getLogger("scipy").level == logging.WARNING
        assert logging.getLogger("numpy").level == logging.WARNING


class TestLogErrorContext:
    """Tests for log_error_context function."""

    @pytest.mark.unit
    def test_operation_in_message(self):
        """Test the message and exception info."""
        logger = MagicMock()

        log_error_context(logger, ToleranceError("lattice sum diverged"), operation="jc_dsc")

        message = logger.error.call_args[0][0]
        assert "jc_dsc" in message
        assert "lattice sum diverged" in message
        assert logger.error.call_args[1]["exc_info"] is True

    @pytest.mark.unit
    def test_operation_from_context(self):
        """Test that the context supplies the operation name."""
        logger = MagicMock()

        log_error_context(logger, ValueError("bad"), context={"operation": "anneal"})

        error_context = logger.error.call_args[1]["extra"]["error_context"]
        assert error_context["operation"] == "anneal"
        assert error_context["error_type"] == "ValueError"

    @pytest.mark.unit
    def test_long_context_values_are_truncated(self):
        """Test that context values are cut at 200 characters."""
        logger = MagicMock()

        log_error_context(logger, ValueError("bad"), context={"cells": "1" * 300})

        error_context = logger.error.call_args[1]["extra"]["error_context"]
        assert len(error_context["context"]["cells"]) == 200
        assert error_context["operation"] == "unknown"
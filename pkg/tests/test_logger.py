"""Log level handling and progress bar gating."""

import logging

import pytest

from src.utils.logger import configure_logging, get_logger, progress_enabled


@pytest.fixture
def restore_level():
    yield
    configure_logging("WARNING")


class TestConfigureLogging:
    def test_level_applies_when_a_handler_exists(self, restore_level):
        root = logging.getLogger()
        handler = logging.NullHandler()
        root.addHandler(handler)
        try:
            configure_logging("DEBUG")
            assert root.level == logging.DEBUG
            assert progress_enabled()
            configure_logging("ERROR")
            assert root.level == logging.ERROR
            assert not progress_enabled()
        finally:
            root.removeHandler(handler)

    def test_unknown_level_falls_back_to_info(self, restore_level):
        configure_logging("chatty")
        assert logging.getLogger().level == logging.INFO
        assert progress_enabled()

    def test_named_logger(self):
        assert get_logger(__name__) is not None

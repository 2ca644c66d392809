"""Utility modules."""

from .logger import configure_logging, get_logger
from .config import Config, RunConfig
from .errors import ConfigurationError, LabError

__all__ = [
    "configure_logging",
    "get_logger",
    "Config",
    "RunConfig",
    "ConfigurationError",
    "LabError",
]

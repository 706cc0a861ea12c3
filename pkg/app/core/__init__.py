# Core module init
from .config import RunConfig, load_run_config, dump_run_config, parse_config_file
from .exception import (
    BaseAppException,
    ConfigError,
    InvalidConfig,
    InputError,
    NumericalError,
    ArtifactMismatch,
    EXIT_OK,
    EXIT_UNEXPECTED,
    EXIT_BAD_INPUT,
    EXIT_NUMERICAL,
    EXIT_ARTIFACT_MISMATCH,
)
from .exception_handlers import handle_exception, format_validation_errors
from .logging_config import setup_logging

__all__ = [
    "RunConfig",
    "load_run_config",
    "dump_run_config",
    "parse_config_file",
    "BaseAppException",
    "ConfigError",
    "InvalidConfig",
    "InputError",
    "NumericalError",
    "ArtifactMismatch",
    "EXIT_OK",
    "EXIT_UNEXPECTED",
    "EXIT_BAD_INPUT",
    "EXIT_NUMERICAL",
    "EXIT_ARTIFACT_MISMATCH",
    "handle_exception",
    "format_validation_errors",
    "setup_logging",
]

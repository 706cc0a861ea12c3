# ==================== 异常处理器 ====================

import logging

from pydantic import ValidationError

from .exception import BaseAppException, EXIT_BAD_INPUT, EXIT_UNEXPECTED


# 配置日志
logger = logging.getLogger(__name__)


def format_validation_errors(exc: ValidationError) -> str:
    """
    将 pydantic 校验错误压缩为单行描述
    """
    parts = []
    for error in exc.errors():
        location = ".".join(str(item) for item in error.get("loc", ())) or "<root>"
        parts.append(f"{location}: {error.get('msg')}")
    return "; ".join(parts)


def app_exception_handler(exc: BaseAppException) -> int:
    """
    处理自定义应用异常
    """
    logger.error(f"{exc.__class__.__name__}: {exc.message} - Exit: {exc.exit_code}")
    return exc.exit_code


def validation_exception_handler(exc: ValidationError) -> int:
    """
    处理参数校验异常
    """
    logger.error(f"Validation Error: {format_validation_errors(exc)}")
    return EXIT_BAD_INPUT


def general_exception_handler(exc: Exception) -> int:
    """
    处理未预期的异常
    """
    logger.error(f"Unexpected Error: {exc}", exc_info=exc)
    return EXIT_UNEXPECTED


def handle_exception(exc: Exception) -> int:
    """
    把异常映射为命令行退出码

    Args:
        exc: 捕获到的异常

    Returns:
        int: 退出码
    """
    if isinstance(exc, BaseAppException):
        return app_exception_handler(exc)
    if isinstance(exc, ValidationError):
        return validation_exception_handler(exc)
    if isinstance(exc, UnicodeDecodeError):
        logger.error(f"Encoding Error: {exc}")
        return EXIT_BAD_INPUT
    if isinstance(exc, OSError):
        logger.error(f"IO Error: {exc}")
        return EXIT_BAD_INPUT
    return general_exception_handler(exc)

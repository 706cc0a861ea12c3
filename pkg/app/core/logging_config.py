"""
日志配置
"""
import logging
import logging.config
import os
from typing import Optional


def setup_logging(level: str = "INFO", log_file: Optional[str] = None):
    """
    配置应用日志

    Args:
        level: 日志级别
        log_file: 可选的日志文件路径（滚动写入）
    """
    level = level.upper()
    if not isinstance(logging.getLevelName(level), int):
        level = "INFO"

    handlers = ["default"]

    # 日志配置文件
    LOGGING_CONFIG = {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "default": {
                "format": "%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s",
                "datefmt": "%Y-%m-%d %H:%M:%S",
            },
        },
        "handlers": {
            "default": {
                "formatter": "default",
                "class": "logging.StreamHandler",
                "stream": "ext://sys.stderr",
            },
        },
        "loggers": {
            "": {  # root logger
                "handlers": handlers,
                "level": level,
                "propagate": False,
            },
        },
    }

    if log_file:
        # 确保日志目录存在
        log_dir = os.path.dirname(log_file)
        if log_dir and not os.path.exists(log_dir):
            os.makedirs(log_dir)
        LOGGING_CONFIG["handlers"]["file"] = {
            "formatter": "default",
            "class": "logging.handlers.RotatingFileHandler",
            "filename": log_file,
            "maxBytes": 10485760,  # 10MB
            "backupCount": 5,
            "encoding": "utf8",
        }
        handlers.append("file")

    logging.config.dictConfig(LOGGING_CONFIG)

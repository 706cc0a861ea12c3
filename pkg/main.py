"""
导波异常检测流水线命令行入口

用法：
    python main.py synth --n-baseline 512 --n-damage 256 --seed 7 --out out/corpus.gws
    python main.py split --input out/corpus.gws --out out/split
    python main.py cwt --input out/split/train.gws --out out/train_cwt
    python main.py train --manifest out/train_cwt/manifest.csv --out out/model
    python main.py detect --manifest out/test_cwt/manifest.csv --checkpoint out/model/checkpoint.vae --out out/detect
    python main.py latent --manifest out/test_cwt/manifest.csv --checkpoint out/model/checkpoint.vae --out out/latent
"""

import argparse
import logging
import sys
from typing import List, Optional

from app.cli import register_commands
from app.cli.common import global_options
from app.core.config import load_run_config
from app.core.exception import EXIT_BAD_INPUT
from app.core.exception_handlers import handle_exception
from app.core.logging_config import setup_logging


logger = logging.getLogger(__name__)

# Namespace 中不属于 RunConfig 的键
_NON_CONFIG_KEYS = {"command", "handler", "config"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gwvae",
        description="导波信号的小波时频图 + 变分自编码器单类异常检测",
    )
    subparsers = parser.add_subparsers(dest="command", metavar="<command>")
    register_commands(subparsers, [global_options()])
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    解析参数并执行子命令

    Args:
        argv: 命令行参数（默认取 sys.argv[1:]）

    Returns:
        int: 退出码（0 成功，2 配置/输入错误，3 数值错误，4 产物不匹配）
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "command", None):
        parser.print_help()
        return EXIT_BAD_INPUT

    setup_logging()
    overrides = {key: value for key, value in vars(args).items() if key not in _NON_CONFIG_KEYS}
    try:
        config = load_run_config(args.config, overrides)
        setup_logging(config.log_level, config.log_file)
        logger.info(f"执行命令: {args.command}")
        return args.handler(config)
    except Exception as exc:
        return handle_exception(exc)


if __name__ == "__main__":
    sys.exit(main())

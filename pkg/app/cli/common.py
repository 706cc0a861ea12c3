"""
命令行公共工具：参数声明、输出目录、配置回写
"""

import argparse
import logging
from pathlib import Path
from typing import Optional

from app.core.config import RunConfig, dump_run_config
from app.core.exception import ConfigError


logger = logging.getLogger(__name__)


def add_option(parser: argparse.ArgumentParser, flag: str, **kwargs):
    """
    声明一个对应 RunConfig 字段的参数（dest 为去掉前缀、横线换下划线的名称）
    未在命令行给出时不写入 Namespace，从而保留配置文件 / 环境变量中的值
    """
    parser.add_argument(flag, default=argparse.SUPPRESS, **kwargs)


def global_options() -> argparse.ArgumentParser:
    """
    所有子命令共享的全局参数
    """
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group("全局参数")
    group.add_argument("--config", default=None, help="key=value 配置文件路径")
    add_option(group, "--seed", type=int, help="随机种子（u64）")
    add_option(group, "--out", help="输出目录（synth / import-csv 为输出文件）")
    add_option(group, "--threads", type=int, help="CWT 与批量推理的线程数")
    add_option(group, "--log-level", help="日志级别")
    add_option(group, "--log-file", help="滚动日志文件路径")
    return parent


def output_dir(config: RunConfig) -> Path:
    path = Path(config.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def output_file(config: RunConfig, default_name: str) -> Path:
    """
    --out 以 .gws 结尾时视为文件路径，否则视为目录并使用默认文件名
    """
    out = Path(config.out)
    if out.suffix.lower() == ".gws":
        return out
    return out / default_name


def echo_config(config: RunConfig, command: str, directory: Path) -> Path:
    """把完整配置写入 <command>_config.cfg"""
    return dump_run_config(config, directory / f"{command.replace('-', '_')}_config.cfg")


def require(value: Optional[str], flag: str, command: str) -> str:
    if not value:
        raise ConfigError(f"{command} 需要 {flag}")
    return value

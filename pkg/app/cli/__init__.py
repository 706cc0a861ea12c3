"""
命令行子命令
"""

from . import cwt, detect, import_csv, latent, split, synth, train

# 注册顺序即帮助信息中的显示顺序
COMMANDS = [synth, split, import_csv, cwt, train, detect, latent]


def register_commands(subparsers, parents):
    """把所有子命令注册到 argparse"""
    for module in COMMANDS:
        module.add_parser(subparsers, parents)


__all__ = ["register_commands", "COMMANDS"]

"""
split 子命令：划分训练集（仅基线）与测试集
"""

import logging

from app.cli.common import add_option, echo_config, output_dir, require
from app.core.config import RunConfig
from app.core.exception import EXIT_OK
from app.crud.dataset_crud import dataset_crud
from app.schemas.dataset_schema import SplitSpec
from app.service.synth_service import split


logger = logging.getLogger(__name__)


def add_parser(subparsers, parents):
    parser = subparsers.add_parser("split", parents=parents, help="划分训练/测试集")
    add_option(parser, "--input", help="GWS1 数据集路径")
    add_option(parser, "--n-train-baseline", type=int, help="训练基线数")
    add_option(parser, "--n-test-baseline", type=int, help="测试基线数")
    add_option(parser, "--n-test-damage", type=int, help="测试损伤数")
    parser.set_defaults(handler=cmd_split)
    return parser


def cmd_split(config: RunConfig) -> int:
    """写出 train.gws 与 test.gws"""
    dataset = dataset_crud.load_dataset(require(config.input, "--input", "split"))
    train, test = split(dataset, SplitSpec.from_run_config(config))

    directory = output_dir(config)
    dataset_crud.save_dataset(train, directory / "train.gws")
    dataset_crud.save_dataset(test, directory / "test.gws")
    echo_config(config, "split", directory)

    test_counts = test.count_by_label()
    print(f"训练集: {directory / 'train.gws'} ({len(train.signals)} baseline)")
    print(f"测试集: {directory / 'test.gws'} (baseline: {test_counts['baseline']}, damage: {test_counts['damage']})")
    return EXIT_OK

"""
synth 子命令：生成合成导波数据集（GWS1）
"""

import logging

from app.cli.common import add_option, echo_config, output_file
from app.core.config import RunConfig
from app.core.exception import EXIT_OK
from app.crud.dataset_crud import dataset_crud
from app.schemas.dataset_schema import SynthConfig
from app.service.synth_service import synthesize


logger = logging.getLogger(__name__)


def add_parser(subparsers, parents):
    parser = subparsers.add_parser("synth", parents=parents, help="生成合成导波数据集")
    add_option(parser, "--n-baseline", type=int, help="基线信号数")
    add_option(parser, "--n-damage", type=int, help="损伤信号数")
    add_option(parser, "--n-samples", type=int, help="每条信号的采样点数")
    add_option(parser, "--sample-rate", type=float, help="采样率（Hz）")
    add_option(parser, "--freq-min", type=float, help="最低激励频率（Hz）")
    add_option(parser, "--freq-max", type=float, help="最高激励频率（Hz）")
    add_option(parser, "--n-freqs", type=int, help="激励频率个数")
    add_option(parser, "--noise-sigma", type=float, help="高斯噪声标准差")
    add_option(parser, "--damage-echo-delay", type=float, help="损伤回波延迟（秒）")
    add_option(parser, "--damage-echo-amplitude", type=float, help="损伤回波幅值")
    add_option(parser, "--damage-attenuation", type=float, help="损伤信号直达波衰减比例")
    parser.set_defaults(handler=cmd_synth)
    return parser


def cmd_synth(config: RunConfig) -> int:
    """
    合成数据并保存为 GWS1

    Args:
        config: 运行配置

    Returns:
        int: 退出码
    """
    synth_config = SynthConfig.from_run_config(config)
    path = output_file(config, "corpus.gws")
    dataset = synthesize(synth_config)
    dataset_crud.save_dataset(dataset, path)
    echo_config(config, "synth", path.parent)

    counts = dataset.count_by_label()
    print(f"合成数据集: {path}")
    print(f"  信号数: {len(dataset.signals)} (baseline: {counts['baseline']}, damage: {counts['damage']})")
    print(f"  长度: {dataset.n_samples} 点, 采样率: {dataset.sample_rate:g} Hz")
    return EXIT_OK

"""
cwt 子命令：信号 → 归一化时频图（SCG1 + 可选 PGM）+ 清单
"""

import argparse
import logging
import re

from app.cli.common import add_option, echo_config, output_dir, require
from app.core.config import RunConfig
from app.core.exception import EXIT_OK
from app.crud.dataset_crud import dataset_crud
from app.crud.scalogram_crud import scalogram_crud
from app.schemas.dataset_schema import ManifestEntry
from app.schemas.signal_schema import WaveletBasis
from app.service.wavelet_service import log_scale_grid, scale_to_frequency, transform_signals


logger = logging.getLogger(__name__)

_UNSAFE_CHARS = re.compile(r"[^A-Za-z0-9._-]")


def add_parser(subparsers, parents):
    parser = subparsers.add_parser("cwt", parents=parents, help="连续小波变换生成时频图")
    add_option(parser, "--input", help="GWS1 数据集路径")
    add_option(parser, "--wavelet-omega0", type=float, help="Morlet ω₀")
    add_option(parser, "--scale-min", type=float, help="最小尺度（采样点）")
    add_option(parser, "--scale-max", type=float, help="最大尺度（采样点）")
    add_option(parser, "--n-scales", type=int, help="尺度个数")
    add_option(parser, "--image-size", type=int, help="输出边长")
    add_option(parser, "--write-pgm", action=argparse.BooleanOptionalAction, help="是否同时输出 PGM 图像")
    parser.set_defaults(handler=cmd_cwt)
    return parser


def _file_stem(index: int, signal_id: str) -> str:
    return f"{index:05d}_{_UNSAFE_CHARS.sub('_', signal_id)}"


def cmd_cwt(config: RunConfig) -> int:
    """
    逐条信号：cwt → 幅值 → 缩放 → 归一化，写出 SCG1 / PGM 与 manifest.csv

    Args:
        config: 运行配置

    Returns:
        int: 退出码
    """
    dataset = dataset_crud.load_dataset(require(config.input, "--input", "cwt"))
    basis = WaveletBasis(center_param=config.wavelet_omega0)
    grid = log_scale_grid(config.scale_min, config.scale_max, config.n_scales)
    logger.info(
        f"尺度范围 {grid.scales[0]:.3g}-{grid.scales[-1]:.3g} 采样点, 对应频率 "
        f"{scale_to_frequency(grid.scales[-1], basis.center_param, dataset.sample_rate):.4g}-"
        f"{scale_to_frequency(grid.scales[0], basis.center_param, dataset.sample_rate):.4g} Hz"
    )
    scalograms = transform_signals(dataset.signals, basis, grid, config.image_size, config.threads)

    directory = output_dir(config)
    entries = []
    for index, (signal, scalogram) in enumerate(zip(dataset.signals, scalograms)):
        stem = _file_stem(index, signal.id)
        relative = f"scalograms/{stem}.scg"
        scalogram_crud.save_scg(scalogram, directory / relative)
        if config.write_pgm:
            scalogram_crud.save_pgm(scalogram, directory / "pgm" / f"{stem}.pgm")
        entries.append(ManifestEntry(id=signal.id, label=signal.label, path=relative))

    scalogram_crud.write_manifest(entries, directory / "manifest.csv")
    echo_config(config, "cwt", directory)
    print(f"时频图: {len(entries)} 个 ({config.image_size}×{config.image_size}), 清单: {directory / 'manifest.csv'}")
    return EXIT_OK

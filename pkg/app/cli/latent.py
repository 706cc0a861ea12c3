"""
latent 子命令：导出隐空间均值（散点图数据）
"""

import logging

from app.cli.common import add_option, echo_config, output_dir, require
from app.cli.detect import load_model
from app.core.config import RunConfig
from app.core.exception import EXIT_OK
from app.crud.report_crud import report_crud
from app.crud.scalogram_crud import scalogram_crud
from app.schemas.signal_schema import SignalLabel
from app.service.anomaly_service import export_latent, latent_separation


logger = logging.getLogger(__name__)


def add_parser(subparsers, parents):
    parser = subparsers.add_parser("latent", parents=parents, help="导出隐空间均值")
    add_option(parser, "--manifest", help="时频图清单")
    add_option(parser, "--checkpoint", help="VAE1 检查点")
    add_option(parser, "--batch-size", type=int, help="推理批大小")
    parser.set_defaults(handler=cmd_latent)
    return parser


def cmd_latent(config: RunConfig) -> int:
    """写出 latent.csv；同时含两类样本时打印类中心分离度"""
    model = load_model(config, "latent")
    entries, images = scalogram_crud.load_manifest_images(
        require(config.manifest, "--manifest", "latent"), image_size=model.image_size
    )
    rows = export_latent(
        model, images, [e.id for e in entries], [e.label for e in entries], config.batch_size, config.threads
    )

    directory = output_dir(config)
    report_crud.write_latent(rows, directory / "latent.csv")
    echo_config(config, "latent", directory)

    print(f"隐空间导出: {len(rows)} 行 → {directory / 'latent.csv'}")
    labels = {row.label for row in rows}
    if {SignalLabel.BASELINE, SignalLabel.DAMAGE} <= labels and len(rows) > 2:
        distance, pooled_std = latent_separation(rows)
        print(f"  类中心距离: {distance:.6g}, 合并类内标准差: {pooled_std:.6g}")
    return EXIT_OK

"""
detect 子命令：对测试时频图逐一判定并统计混淆矩阵
"""

import logging
from pathlib import Path

from app.cli.common import add_option, echo_config, output_dir, require
from app.core.config import RunConfig
from app.core.exception import EXIT_OK
from app.crud.checkpoint_crud import checkpoint_crud
from app.crud.report_crud import report_crud
from app.crud.scalogram_crud import scalogram_crud
from app.service.anomaly_service import collect_errors, evaluate, score


logger = logging.getLogger(__name__)


def add_parser(subparsers, parents):
    parser = subparsers.add_parser("detect", parents=parents, help="异常检测与混淆矩阵")
    add_option(parser, "--manifest", help="测试时频图清单")
    add_option(parser, "--checkpoint", help="VAE1 检查点")
    add_option(parser, "--thresholds-file", help="阈值文件（默认取检查点同目录的 thresholds.csv）")
    add_option(parser, "--thresholds", help="需要应用的阈值，如 p99,max")
    add_option(parser, "--batch-size", type=int, help="推理批大小")
    add_option(parser, "--inference-mode", choices=["stochastic", "mean"], help="推理方式")
    parser.set_defaults(handler=cmd_detect)
    return parser


def load_model(config: RunConfig, command: str):
    """按配置读取检查点"""
    return checkpoint_crud.load_model(
        require(config.checkpoint, "--checkpoint", command), config.negative_slope, config.logvar_clamp
    )


def cmd_detect(config: RunConfig) -> int:
    """
    写出 verdicts.csv 与 metrics.csv

    Args:
        config: 运行配置

    Returns:
        int: 退出码
    """
    model = load_model(config, "detect")
    thresholds_path = config.thresholds_file or Path(config.checkpoint).parent / "thresholds.csv"
    thresholds = report_crud.read_thresholds(thresholds_path)
    entries, images = scalogram_crud.load_manifest_images(
        require(config.manifest, "--manifest", "detect"), image_size=model.image_size
    )

    errors = score(model, images, config.seed, config.batch_size, config.inference_mode, config.threads)
    samples = collect_errors([e.id for e in entries], [e.label for e in entries], errors.total)
    names = config.threshold_names
    report = evaluate(samples, thresholds, names)

    directory = output_dir(config)
    report_crud.write_verdicts(report, names, directory / "verdicts.csv")
    report_crud.write_metrics(report, directory / "metrics.csv")
    echo_config(config, "detect", directory)

    print(f"检测完成: {len(report.samples)} 个样本")
    for name, metrics in report.metrics.items():
        print(
            f"  [{name} = {metrics.value:.6g}] TP={metrics.tp} FP={metrics.fp} TN={metrics.tn} FN={metrics.fn} "
            f"accuracy={metrics.accuracy:.4f} FPR={metrics.fpr:.4f} FNR={metrics.fnr:.4f}"
        )
    return EXIT_OK

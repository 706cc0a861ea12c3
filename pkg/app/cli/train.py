"""
train 子命令：在基线时频图上训练 VAE，收集训练误差并计算阈值
"""

import logging
from pathlib import Path

from app.cli.common import add_option, echo_config, output_dir, require
from app.core.config import RunConfig
from app.core.exception import EXIT_OK, InputError
from app.crud.checkpoint_crud import checkpoint_crud
from app.crud.report_crud import report_crud
from app.crud.scalogram_crud import scalogram_crud
from app.models.vae import VaeModel
from app.schemas.model_schema import TrainConfig
from app.schemas.signal_schema import SignalLabel
from app.service.anomaly_service import compute_thresholds, score
from app.service.training_service import train


logger = logging.getLogger(__name__)


def add_parser(subparsers, parents):
    parser = subparsers.add_parser("train", parents=parents, help="训练 VAE 并计算阈值")
    add_option(parser, "--manifest", help="基线时频图清单")
    add_option(parser, "--checkpoint", help="从已有检查点继续训练（同目录下的 .opt 为优化器状态）")
    add_option(parser, "--epochs", type=int, help="训练轮数")
    add_option(parser, "--batch-size", type=int, help="批大小")
    add_option(parser, "--learning-rate", type=float, help="Adam 学习率")
    add_option(parser, "--latent-dim", type=int, help="隐空间维度")
    add_option(parser, "--inference-mode", choices=["stochastic", "mean"], help="训练误差的推理方式")
    parser.set_defaults(handler=cmd_train)
    return parser


def _build_model(config: RunConfig):
    """新建模型，或从 --checkpoint 恢复模型与优化器状态"""
    if not config.checkpoint:
        model = VaeModel.initialize(
            config.seed, config.latent_dim, config.image_size, config.negative_slope, config.logvar_clamp
        )
        return model, None

    model = checkpoint_crud.load_model(config.checkpoint, config.negative_slope, config.logvar_clamp)
    opt_path = Path(config.checkpoint).with_suffix(".opt")
    state = None
    if opt_path.exists():
        state = checkpoint_crud.load_adam_state(
            opt_path, model, config.learning_rate, config.beta1, config.beta2, config.epsilon
        )
    logger.info(f"从检查点继续训练: {config.checkpoint} (优化器状态: {'有' if state else '无'})")
    return model, state


def cmd_train(config: RunConfig) -> int:
    """
    训练并写出 checkpoint.vae / checkpoint.opt / loss_history.csv / training_errors.csv / thresholds.csv

    Args:
        config: 运行配置

    Returns:
        int: 退出码
    """
    train_config = TrainConfig.from_run_config(config)
    model, adam_state = _build_model(config)
    entries, images = scalogram_crud.load_manifest_images(
        require(config.manifest, "--manifest", "train"), image_size=model.image_size
    )
    foreign = [entry.id for entry in entries if entry.label != SignalLabel.BASELINE]
    if foreign:
        raise InputError(f"训练清单只能包含 baseline 样本，发现 {len(foreign)} 个其他样本（如 {foreign[0]}）")

    result = train(model, images, train_config, config.seed, adam_state)

    # 训练误差与检测阶段使用相同的种子、批大小和推理方式
    errors = score(model, images, config.seed, config.batch_size, config.inference_mode, config.threads)
    thresholds = compute_thresholds(errors.total)

    directory = output_dir(config)
    checkpoint_crud.save_model(model, directory / "checkpoint.vae")
    checkpoint_crud.save_adam_state(result.adam_state, directory / "checkpoint.opt")
    report_crud.write_loss_history(result.history, directory / "loss_history.csv")
    report_crud.write_training_errors(
        [entry.id for entry in entries], [entry.label for entry in entries],
        errors.reconstruction, errors.kl, directory / "training_errors.csv",
    )
    report_crud.write_thresholds(thresholds, directory / "thresholds.csv")
    echo_config(config, "train", directory)

    print(f"训练完成: {len(entries)} 个样本, {train_config.epochs} 个 epoch")
    if result.history:
        print(f"  损失: {result.history[0].total:.6f} → {result.history[-1].total:.6f}")
    print(f"  阈值: p99 = {thresholds.p99:.6g}, max = {thresholds.max:.6g}")
    return EXIT_OK

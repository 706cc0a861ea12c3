"""
VAE 训练服务
只使用基线样本训练；所有高斯噪声与打乱顺序来自同一个按种子创建的随机数生成器
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from app.core.exception import EmptyDataset, NonFiniteLoss, NumericalError, ShapeMismatch
from app.models.vae import VaeModel, loss
from app.nn.adam import Adam
from app.schemas.model_schema import AdamState, LossBreakdown, TrainConfig
from app.schemas.signal_schema import Scalogram


logger = logging.getLogger(__name__)


@dataclass
class TrainingResult:
    """训练结果：模型、逐 epoch 损失与优化器状态"""
    model: VaeModel
    history: List[LossBreakdown] = field(default_factory=list)
    adam_state: Optional[AdamState] = None


def as_image_batch(images: Union[np.ndarray, Sequence[Scalogram]], dtype=np.float32) -> np.ndarray:
    """
    把时频图列表堆叠为网络输入 [N,1,S,S]

    Args:
        images: Scalogram 列表，或已堆叠的 [N,S,S] / [N,1,S,S] 数组
        dtype: 输出精度

    Returns:
        np.ndarray: [N,1,S,S]
    """
    if isinstance(images, np.ndarray):
        batch = images
    else:
        batch = np.stack([image.values for image in images]) if len(images) else np.empty((0, 0, 0))
    if batch.ndim == 3:
        batch = batch[:, None, :, :]
    if batch.ndim != 4 or batch.shape[1] != 1:
        raise ShapeMismatch(f"输入应为 [N,1,S,S]，收到 {batch.shape}")
    return np.ascontiguousarray(batch, dtype=dtype)


def _check_finite(model: VaeModel, epoch: int, batch: int):
    for name, tensor in model.parameters().items():
        if not np.all(np.isfinite(tensor.data)):
            logger.error(f"参数 {name} 出现非有限值 - Epoch: {epoch}, Batch: {batch}")
            raise NonFiniteLoss(epoch, batch)


def train(
    model: VaeModel,
    images: Union[np.ndarray, Sequence[Scalogram]],
    config: TrainConfig,
    seed: int,
    adam_state: Optional[AdamState] = None
) -> TrainingResult:
    """
    小批量 Adam 训练

    Args:
        model: 待训练模型（参数原地更新）
        images: 基线时频图
        config: 训练参数
        seed: 打乱顺序与重参数化噪声的种子
        adam_state: 续训时的优化器状态

    Returns:
        TrainingResult: epochs=0 时模型不变、history 为空
    """
    batch = as_image_batch(images, dtype=model.dtype)
    n = batch.shape[0]
    if n == 0:
        raise EmptyDataset()

    adam = Adam(
        model.parameters(),
        lr=config.learning_rate,
        beta1=config.beta1,
        beta2=config.beta2,
        epsilon=config.epsilon,
        state=adam_state,
    )
    rng = np.random.default_rng(seed)
    history: List[LossBreakdown] = []
    n_batches = (n + config.batch_size - 1) // config.batch_size
    logger.info(
        f"开始训练 - 样本: {n}, epochs: {config.epochs}, batch: {config.batch_size}, "
        f"lr: {config.learning_rate}, 参数量: {model.parameter_count()}"
    )

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        recon_sum = 0.0
        kl_sum = 0.0
        for batch_index in range(n_batches):
            index = order[batch_index * config.batch_size:(batch_index + 1) * config.batch_size]
            noise = rng.standard_normal((index.shape[0], model.latent_dim)).astype(model.dtype)

            adam.zero_grad()
            try:
                breakdown, total = loss(model, batch[index], noise)
            except NumericalError as e:
                raise NonFiniteLoss(epoch, batch_index) from e
            total.backward()
            adam.step()
            _check_finite(model, epoch, batch_index)

            recon_sum += breakdown.reconstruction * index.shape[0]
            kl_sum += breakdown.kl * index.shape[0]

        reconstruction, kl = recon_sum / n, kl_sum / n
        history.append(LossBreakdown(reconstruction=reconstruction, kl=kl, total=reconstruction + kl))
        logger.info(f"Epoch {epoch}/{config.epochs} - 重构: {reconstruction:.6f}, KL: {kl:.6f}, 总损失: {reconstruction + kl:.6f}")

    if config.epochs:
        logger.info(f"✓ 训练完成 - 最终损失: {history[-1].total:.6f}")
    return TrainingResult(model=model, history=history, adam_state=adam.state)

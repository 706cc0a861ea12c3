"""
网络与训练相关模型
LayerSpec / AdamState / TrainConfig / LossBreakdown / LatentCode
"""

from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from app.core.exception import InvalidConfig
from app.core.exception_handlers import format_validation_errors


class LayerKind(str, Enum):
    """层类型"""
    CONV2D = "conv2d"
    CONV_TRANSPOSE2D = "conv_transpose2d"
    DENSE = "dense"
    LEAKY_RELU = "leaky_relu"
    SIGMOID = "sigmoid"
    FLATTEN = "flatten"
    RESHAPE = "reshape"


class LayerSpec(BaseModel):
    """
    单层的声明式描述
    """
    name: str
    kind: LayerKind
    in_channels: int = 0  # Dense 时为输入特征数
    out_channels: int = 0  # Dense 时为输出特征数
    kernel: Tuple[int, int] = (3, 3)
    stride: int = Field(1, ge=1)
    padding: int = Field(0, ge=0)
    output_padding: int = Field(0, ge=0)
    negative_slope: float = 0.2
    shape: Optional[Tuple[int, ...]] = None  # Reshape 的目标形状（不含 batch 维）

    @property
    def has_parameters(self) -> bool:
        return self.kind in (LayerKind.CONV2D, LayerKind.CONV_TRANSPOSE2D, LayerKind.DENSE)

    def weight_shape(self) -> Tuple[int, ...]:
        """
        权重形状：Conv2d 为 [out, in, kh, kw]，ConvTranspose2d 为 [in, out, kh, kw]，
        Dense 为 [in, out]
        """
        if self.kind == LayerKind.CONV2D:
            return (self.out_channels, self.in_channels, *self.kernel)
        if self.kind == LayerKind.CONV_TRANSPOSE2D:
            return (self.in_channels, self.out_channels, *self.kernel)
        if self.kind == LayerKind.DENSE:
            return (self.in_channels, self.out_channels)
        return ()

    def fan_in(self) -> int:
        kh, kw = self.kernel
        if self.kind in (LayerKind.CONV2D, LayerKind.CONV_TRANSPOSE2D):
            return self.in_channels * kh * kw
        return self.in_channels


class AdamState(BaseModel):
    """
    Adam 优化器状态，m / v 与参数同名同形
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    lr: float = Field(1e-3, gt=0)
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    epsilon: float = Field(1e-8, gt=0)
    step_count: int = Field(0, ge=0)
    m: Dict[str, np.ndarray] = Field(default_factory=dict)
    v: Dict[str, np.ndarray] = Field(default_factory=dict)


class TrainConfig(BaseModel):
    """
    训练参数（默认值：Adam lr=1e-3，batch 32）
    """
    epochs: int = Field(50, ge=0)
    batch_size: int = Field(32, ge=1)
    learning_rate: float = Field(1e-3, gt=0)
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    epsilon: float = Field(1e-8, gt=0)

    @classmethod
    def from_run_config(cls, config) -> "TrainConfig":
        try:
            return cls(
                epochs=config.epochs,
                batch_size=config.batch_size,
                learning_rate=config.learning_rate,
                beta1=config.beta1,
                beta2=config.beta2,
                epsilon=config.epsilon,
            )
        except ValidationError as e:
            raise InvalidConfig(f"训练配置无效: {format_validation_errors(e)}") from e


class LossBreakdown(BaseModel):
    """
    损失分解：total == reconstruction + kl
    """
    reconstruction: float = Field(..., ge=0)
    kl: float = Field(..., ge=0)
    total: float

    @model_validator(mode="after")
    def check_total(self) -> "LossBreakdown":
        if abs(self.total - (self.reconstruction + self.kl)) > 1e-6 * max(1.0, abs(self.total)):
            raise ValueError("total 必须等于 reconstruction + kl")
        return self


class LatentCode(BaseModel):
    """
    隐变量：均值、对数方差与采样值（每行对应一个样本）
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    mu: np.ndarray
    logvar: np.ndarray
    z: np.ndarray

    @model_validator(mode="after")
    def check_shapes(self) -> "LatentCode":
        if not (self.mu.shape == self.logvar.shape == self.z.shape) or self.mu.ndim != 2:
            raise ValueError(f"mu / logvar / z 形状应一致且为 [N,latent]，收到 {self.mu.shape} / {self.logvar.shape} / {self.z.shape}")
        return self

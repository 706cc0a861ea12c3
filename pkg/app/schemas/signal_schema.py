"""
信号与时频图模型
Signal / WaveletBasis / ScaleGrid / Scalogram
"""

from enum import Enum
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class SignalLabel(str, Enum):
    """
    信号类别，value 为 CSV 中的名称，code 为 GWS1 中的字节编码
    """
    BASELINE = "baseline"
    DAMAGE = "damage"
    UNKNOWN = "unknown"

    @property
    def code(self) -> int:
        return _LABEL_CODES[self]

    @classmethod
    def from_code(cls, code: int) -> "SignalLabel":
        for label, label_code in _LABEL_CODES.items():
            if label_code == code:
                return label
        raise ValueError(f"未知标签编码: {code}")


_LABEL_CODES = {
    SignalLabel.BASELINE: 0,
    SignalLabel.DAMAGE: 1,
    SignalLabel.UNKNOWN: 2,
}


class Signal(BaseModel):
    """
    一维导波信号，采样值以 float32 保存（与 GWS1 的存储精度一致）
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    id: str = Field(..., description="信号标识")
    samples: np.ndarray = Field(..., description="采样幅值（无量纲）")
    sample_rate: float = Field(..., gt=0, description="采样率（Hz）")
    label: SignalLabel = Field(SignalLabel.UNKNOWN, description="信号类别")

    @field_validator("samples", mode="before")
    @classmethod
    def check_samples(cls, value) -> np.ndarray:
        samples = np.ascontiguousarray(value, dtype=np.float32)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("samples 必须是非空一维序列")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples 含有 NaN/Inf")
        return samples

    @property
    def n_samples(self) -> int:
        return int(self.samples.shape[0])


class WaveletBasis(BaseModel):
    """
    母小波（目前仅支持 Morlet）
    """
    kind: Literal["morlet"] = "morlet"
    center_param: float = Field(6.0, ge=5.0, description="Morlet 中心频率 ω₀")


class ScaleGrid(BaseModel):
    """
    尺度网格（单位：采样点），严格递增且全部为正
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    scales: np.ndarray

    @field_validator("scales", mode="before")
    @classmethod
    def check_scales(cls, value) -> np.ndarray:
        scales = np.asarray(value, dtype=np.float64)
        if scales.ndim != 1 or scales.size == 0:
            raise ValueError("scales 必须是非空一维序列")
        if not np.all(np.isfinite(scales)) or np.any(scales <= 0):
            raise ValueError("scales 必须全部为有限正数")
        if np.any(np.diff(scales) <= 0):
            raise ValueError("scales 必须严格递增")
        return scales

    def __len__(self) -> int:
        return int(self.scales.shape[0])


class Scalogram(BaseModel):
    """
    时频幅值图 [n_scales × n_times]，第 0 行对应最小尺度
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    values: np.ndarray
    scale_axis: Optional[ScaleGrid] = None
    time_axis: Optional[np.ndarray] = None

    @field_validator("values", mode="before")
    @classmethod
    def check_values(cls, value) -> np.ndarray:
        values = np.asarray(value, dtype=np.float64)
        if values.ndim != 2 or values.size == 0:
            raise ValueError("values 必须是非空二维数组")
        if not np.all(np.isfinite(values)):
            raise ValueError("values 含有 NaN/Inf")
        if np.any(values < 0):
            raise ValueError("values 必须非负")
        return values

    @property
    def shape(self) -> tuple:
        return tuple(self.values.shape)

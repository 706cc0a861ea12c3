"""
数据集相关模型
Dataset / SynthConfig / SplitSpec / ManifestEntry
"""

from collections import Counter
from typing import Dict, List

import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator

from app.core.exception import InvalidConfig
from app.core.exception_handlers import format_validation_errors
from app.schemas.signal_schema import Signal, SignalLabel


def _default_excitation_freqs() -> List[float]:
    return np.linspace(40e3, 260e3, 12).tolist()


class Dataset(BaseModel):
    """
    信号集合，所有信号共享采样率与长度
    """
    signals: List[Signal] = Field(default_factory=list)
    sample_rate: float = Field(..., gt=0)
    metadata: Dict[str, str] = Field(default_factory=dict)

    @model_validator(mode="after")
    def check_uniform(self) -> "Dataset":
        lengths = {signal.n_samples for signal in self.signals}
        if len(lengths) > 1:
            raise ValueError(f"信号长度不一致: {sorted(lengths)}")
        for signal in self.signals:
            if signal.sample_rate != self.sample_rate:
                raise ValueError(f"信号 {signal.id} 的采样率与数据集不一致")
        return self

    @property
    def n_samples(self) -> int:
        """单条信号长度（空数据集为 0）"""
        return self.signals[0].n_samples if self.signals else 0

    def count_by_label(self) -> Dict[str, int]:
        """按类别统计信号数量"""
        counts = Counter(signal.label.value for signal in self.signals)
        return {label.value: counts.get(label.value, 0) for label in SignalLabel}

    def by_label(self, label: SignalLabel) -> List[Signal]:
        return [signal for signal in self.signals if signal.label == label]


class SynthConfig(BaseModel):
    """
    合成导波数据的生成参数
    """
    n_baseline: int = Field(512, ge=0)
    n_damage: int = Field(256, ge=0)
    n_samples: int = Field(2048, ge=1)
    sample_rate: float = Field(1e6, gt=0, description="Hz")
    excitation_freqs: List[float] = Field(default_factory=_default_excitation_freqs, min_length=1)
    burst_cycles: float = Field(5.0, gt=0, description="Hann 窗调制的周期数")
    burst_delay: float = Field(50e-6, ge=0, description="直达波起始时刻（秒）")
    noise_sigma: float = Field(0.02, ge=0)
    boundary_echo_delay: float = Field(600e-6, ge=0, description="边界回波相对直达波的延迟（秒）")
    boundary_echo_amplitude: float = 0.4
    damage_echo_delay: float = Field(300e-6, ge=0, description="损伤散射回波相对直达波的延迟（秒）")
    damage_echo_amplitude: float = 0.8
    damage_attenuation: float = Field(0.1, ge=0, le=1, description="损伤信号直达波的幅值衰减比例")
    seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def check_config(self) -> "SynthConfig":
        if self.n_baseline + self.n_damage == 0:
            raise ValueError("n_baseline 与 n_damage 不能同时为 0")
        nyquist = self.sample_rate / 2
        for freq in self.excitation_freqs:
            if not 0 < freq < nyquist:
                raise ValueError(f"激励频率 {freq} Hz 不在 (0, {nyquist}) 内")
        return self

    @classmethod
    def from_run_config(cls, config) -> "SynthConfig":
        """
        从 RunConfig 构造，校验失败转换为 InvalidConfig
        """
        try:
            return cls(
                n_baseline=config.n_baseline,
                n_damage=config.n_damage,
                n_samples=config.n_samples,
                sample_rate=config.sample_rate,
                excitation_freqs=np.linspace(config.freq_min, config.freq_max, config.n_freqs).tolist(),
                burst_cycles=config.burst_cycles,
                burst_delay=config.burst_delay,
                noise_sigma=config.noise_sigma,
                boundary_echo_delay=config.boundary_echo_delay,
                boundary_echo_amplitude=config.boundary_echo_amplitude,
                damage_echo_delay=config.damage_echo_delay,
                damage_echo_amplitude=config.damage_echo_amplitude,
                damage_attenuation=config.damage_attenuation,
                seed=config.seed,
            )
        except ValidationError as e:
            raise InvalidConfig(f"合成配置无效: {format_validation_errors(e)}") from e


class SplitSpec(BaseModel):
    """
    训练/测试划分规格
    """
    n_train_baseline: int = Field(..., ge=0)
    n_test_baseline: int = Field(..., ge=0)
    n_test_damage: int = Field(..., ge=0)
    seed: int = Field(0, ge=0)

    @classmethod
    def from_run_config(cls, config) -> "SplitSpec":
        return cls(
            n_train_baseline=config.n_train_baseline,
            n_test_baseline=config.n_test_baseline,
            n_test_damage=config.n_test_damage,
            seed=config.seed,
        )


class ManifestEntry(BaseModel):
    """
    时频图清单中的一行（id,label,path）
    """
    id: str
    label: SignalLabel
    path: str

"""
运行配置
所有模块的可调参数集中在 RunConfig 中，优先级（低 → 高）：
字段默认值 < 环境变量 / .env < --config 配置文件 < 命令行参数
"""

import logging
from pathlib import Path
from typing import Any, Dict, Literal, Optional

from pydantic import Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .exception import ConfigError
from .exception_handlers import format_validation_errors


logger = logging.getLogger(__name__)

THRESHOLD_NAMES = ("p99", "max")


class RunConfig(BaseSettings):
    """
    流水线运行配置（扁平 key=value）
    """
    # 全局配置
    seed: int = Field(0, ge=0, le=2**64 - 1)
    out: str = "out"
    threads: int = Field(1, ge=1)  # 仅用于 CWT 与批量推理
    log_level: str = "INFO"
    log_file: Optional[str] = None

    # 路径配置
    input: Optional[str] = None
    manifest: Optional[str] = None
    checkpoint: Optional[str] = None
    thresholds_file: Optional[str] = None
    label: Literal["baseline", "damage", "unknown"] = "unknown"  # import-csv 使用

    # 合成数据配置
    n_baseline: int = Field(512, ge=0)
    n_damage: int = Field(256, ge=0)
    n_samples: int = Field(2048, ge=1)
    sample_rate: float = Field(1e6, gt=0)
    freq_min: float = 40e3
    freq_max: float = 260e3
    n_freqs: int = Field(12, ge=1)
    burst_cycles: float = Field(5.0, gt=0)
    burst_delay: float = Field(50e-6, ge=0)
    noise_sigma: float = Field(0.02, ge=0)
    boundary_echo_delay: float = Field(600e-6, ge=0)
    boundary_echo_amplitude: float = 0.4
    damage_echo_delay: float = Field(300e-6, ge=0)
    damage_echo_amplitude: float = 0.8
    damage_attenuation: float = Field(0.1, ge=0, le=1)

    # 训练/测试划分配置
    n_train_baseline: int = Field(512, ge=0)
    n_test_baseline: int = Field(128, ge=0)
    n_test_damage: int = Field(128, ge=0)

    # 小波变换配置
    wavelet_omega0: float = 6.0
    scale_min: float = 2.0
    scale_max: float = 128.0
    n_scales: int = Field(64, ge=1)
    image_size: int = Field(64, ge=32)
    write_pgm: bool = True

    # 模型与训练配置
    latent_dim: int = Field(2, ge=1)
    negative_slope: float = 0.2
    logvar_clamp: float = Field(10.0, gt=0)
    epochs: int = Field(50, ge=0)
    batch_size: int = Field(32, ge=1)
    learning_rate: float = Field(1e-3, gt=0)
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = Field(1e-8, gt=0)

    # 检测配置
    thresholds: str = "p99,max"
    inference_mode: Literal["stochastic", "mean"] = "stochastic"

    model_config = SettingsConfigDict(
        env_prefix="GWVAE_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="forbid",
    )

    @field_validator(
        "input", "manifest", "checkpoint", "thresholds_file", "log_file", mode="before"
    )
    @classmethod
    def empty_path_is_none(cls, value: Any) -> Any:
        """配置文件中的空值视为未设置"""
        if isinstance(value, str) and value.strip() == "":
            return None
        return value

    @field_validator("thresholds")
    @classmethod
    def check_thresholds(cls, value: str) -> str:
        names = [item.strip() for item in value.split(",") if item.strip()]
        unknown = [name for name in names if name not in THRESHOLD_NAMES]
        if not names or unknown:
            raise ValueError(f"thresholds 只能取 {THRESHOLD_NAMES} 的非空子集，收到: {value!r}")
        return ",".join(names)

    @property
    def threshold_names(self) -> list:
        """需要应用的阈值名称列表"""
        return self.thresholds.split(",")


def parse_config_file(path: str) -> Dict[str, str]:
    """
    解析 key=value 配置文件

    Args:
        path: 配置文件路径，支持 # 注释和空行

    Returns:
        Dict[str, str]: 原始键值对（类型转换交给 RunConfig）
    """
    values: Dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"配置文件 {path} 第 {line_no} 行缺少 '=': {raw_line!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if key not in RunConfig.model_fields:
            raise ConfigError(f"配置文件 {path} 第 {line_no} 行包含未知配置项: {key}")
        values[key] = value.strip()
    return values


def load_run_config(
    config_path: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None
) -> RunConfig:
    """
    按优先级合并配置

    Args:
        config_path: key=value 配置文件路径
        overrides: 命令行参数覆盖项

    Returns:
        RunConfig: 解析后的完整配置
    """
    values: Dict[str, Any] = {}
    if config_path:
        values.update(parse_config_file(config_path))
    for key, value in (overrides or {}).items():
        if key not in RunConfig.model_fields:
            raise ConfigError(f"未知配置项: {key}")
        values[key] = value

    try:
        return RunConfig(**values)
    except ValidationError as e:
        raise ConfigError(f"配置校验失败: {format_validation_errors(e)}") from e


def format_config_value(value: Any) -> str:
    """把配置值格式化为可回读的字符串"""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_run_config(config: RunConfig, path: Path) -> Path:
    """
    回写完整配置，回读后可复现本次运行

    Args:
        config: 已解析的配置
        path: 输出文件路径

    Returns:
        Path: 输出文件路径
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# resolved configuration"]
    for key in RunConfig.model_fields:
        lines.append(f"{key}={format_config_value(getattr(config, key))}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"配置已写入: {path}")
    return path

"""
异常检测相关模型
ErrorSample / ThresholdSet / ConfusionMetrics / DetectionReport / LatentRow
"""

import math
from enum import Enum
from typing import Dict, List

from pydantic import BaseModel, Field, field_validator, model_validator

from app.schemas.signal_schema import SignalLabel


class Verdict(str, Enum):
    """判定结果"""
    HEALTHY = "healthy"
    ANOMALY = "anomaly"


class ErrorSample(BaseModel):
    """
    单个样本的误差（重构误差 + KL 散度）
    """
    id: str
    label: SignalLabel
    error: float = Field(..., ge=0)

    @field_validator("error")
    @classmethod
    def check_finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("error 必须为有限值")
        return value


class ThresholdSet(BaseModel):
    """
    两种阈值：99 百分位与最大值
    """
    p99: float
    max: float

    @model_validator(mode="after")
    def check_order(self) -> "ThresholdSet":
        if self.p99 > self.max:
            raise ValueError("p99 不能大于 max")
        return self

    def get(self, name: str) -> float:
        return float(getattr(self, name))

    def as_dict(self) -> Dict[str, float]:
        return {"p99": self.p99, "max": self.max}


class ConfusionMetrics(BaseModel):
    """
    单个阈值下的混淆矩阵与派生指标（正类 = Damage）
    """
    threshold: str
    value: float
    tp: int = Field(..., ge=0)
    fp: int = Field(..., ge=0)
    tn: int = Field(..., ge=0)
    fn: int = Field(..., ge=0)
    accuracy: float
    fpr: float
    fnr: float
    precision: float
    f1: float

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


class SampleVerdict(BaseModel):
    """
    单个测试样本在各阈值下的判定
    """
    id: str
    label: SignalLabel
    error: float
    verdicts: Dict[str, Verdict]


class DetectionReport(BaseModel):
    """
    检测报告：逐样本判定 + 各阈值混淆矩阵
    """
    samples: List[SampleVerdict]
    metrics: Dict[str, ConfusionMetrics]

    @model_validator(mode="after")
    def check_totals(self) -> "DetectionReport":
        for name, metrics in self.metrics.items():
            if metrics.total != len(self.samples):
                raise ValueError(f"阈值 {name} 的混淆矩阵总数与样本数不一致")
        return self


class LatentRow(BaseModel):
    """
    隐空间导出的一行（仅使用均值 mu）
    """
    id: str
    label: SignalLabel
    mu: List[float]

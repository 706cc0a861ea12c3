"""
单类异常检测服务
训练误差 → 阈值（99 百分位 / 最大值）→ 逐样本判定 → 混淆矩阵
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Literal, Sequence, Tuple

import numpy as np

from app.core.exception import (
    EmptyDataset,
    EmptyErrors,
    InsufficientSamples,
    NumericalError,
    ShapeMismatch,
    UnlabeledSample,
)
from app.models.vae import VaeModel, decode, kl_divergence, reconstruction_error, sample_latent
from app.nn.tensor import Tensor, no_grad
from app.schemas.detection_schema import (
    ConfusionMetrics,
    DetectionReport,
    ErrorSample,
    LatentRow,
    SampleVerdict,
    ThresholdSet,
    Verdict,
)
from app.schemas.signal_schema import SignalLabel


logger = logging.getLogger(__name__)

InferenceMode = Literal["stochastic", "mean"]


@dataclass
class ScoreResult:
    """逐样本误差（float64）"""
    reconstruction: np.ndarray
    kl: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.reconstruction + self.kl


def inference_noise(seed: int, start: int, count: int, latent_dim: int, dtype=np.float32) -> np.ndarray:
    """
    第 i 行噪声来自以 (seed, i) 为种子的生成器，与批大小和线程划分无关
    """
    return np.stack([
        np.random.default_rng([seed, start + row]).standard_normal(latent_dim)
        for row in range(count)
    ]).astype(dtype)


def _run_batches(fn, n: int, batch_size: int, threads: int) -> list:
    starts = list(range(0, n, batch_size))

    def worker(start: int):
        # no_grad 是线程局部的，每个工作线程各自进入
        with no_grad():
            return fn(start, min(start + batch_size, n))

    if threads <= 1 or len(starts) <= 1:
        return [worker(start) for start in starts]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(worker, starts))


def score(
    model: VaeModel,
    images: np.ndarray,
    seed: int,
    batch_size: int = 32,
    mode: InferenceMode = "stochastic",
    threads: int = 1
) -> ScoreResult:
    """
    计算每个样本的重构误差与 KL 散度

    Args:
        model: 已训练模型
        images: [N,1,S,S]
        seed: 推理噪声种子
        batch_size: 批大小
        mode: stochastic 使用带噪采样 z，mean 使用 z = mu
        threads: 批次并行线程数

    Returns:
        ScoreResult: 顺序与 images 一致
    """
    images = np.asarray(images, dtype=model.dtype)
    if images.ndim != 4:
        raise ShapeMismatch(f"输入应为 [N,1,S,S]，收到 {images.shape}")
    n = images.shape[0]

    def run(start: int, stop: int) -> Tuple[np.ndarray, np.ndarray]:
        x = images[start:stop]
        noise = None if mode == "mean" else inference_noise(seed, start, stop - start, model.latent_dim, model.dtype)
        code = sample_latent(model, x, noise)
        x_hat = decode(model, code.z)
        recon = reconstruction_error(x, x_hat).data.astype(np.float64)
        kl = kl_divergence(Tensor(code.mu), Tensor(code.logvar)).data.astype(np.float64)
        return recon, kl

    parts = _run_batches(run, n, batch_size, threads)
    if parts:
        reconstruction = np.concatenate([part[0] for part in parts])
        kl = np.concatenate([part[1] for part in parts])
    else:
        reconstruction = kl = np.zeros(0, dtype=np.float64)

    result = ScoreResult(reconstruction=reconstruction, kl=kl)
    if not np.all(np.isfinite(result.total)):
        raise NumericalError("推理误差出现非有限值")
    return result


def collect_errors(ids: Sequence[str], labels: Sequence[SignalLabel], errors: Sequence[float]) -> List[ErrorSample]:
    """把逐样本误差组装为 ErrorSample 列表"""
    if not (len(ids) == len(labels) == len(errors)):
        raise ShapeMismatch("ids / labels / errors 长度不一致")
    return [
        ErrorSample(id=sample_id, label=label, error=float(error))
        for sample_id, label, error in zip(ids, labels, errors)
    ]


def compute_thresholds(training_errors: Sequence[float]) -> ThresholdSet:
    """
    阈值：最近秩 99 百分位与最大值

    Args:
        training_errors: 训练集误差

    Returns:
        ThresholdSet: p99 为升序第 ceil(0.99·n) 个值（1 起计，不超过 n）
    """
    errors = np.sort(np.asarray(training_errors, dtype=np.float64))
    n = errors.shape[0]
    if n == 0:
        raise EmptyErrors()
    if not np.all(np.isfinite(errors)):
        raise NumericalError("训练误差含有 NaN/Inf")
    # 整数运算避免 0.99·n 的浮点误差
    rank = min(max((99 * n + 99) // 100, 1), n)
    return ThresholdSet(p99=float(errors[rank - 1]), max=float(errors[-1]))


def classify(error: float, threshold: float) -> Verdict:
    """误差严格大于阈值才判为异常"""
    return Verdict.ANOMALY if error > threshold else Verdict.HEALTHY


def _ratio(numerator: int, denominator: int) -> float:
    return numerator / denominator if denominator else 0.0


def confusion_metrics(name: str, threshold: float, samples: Sequence[ErrorSample]) -> ConfusionMetrics:
    """
    单个阈值下的混淆矩阵（正类 = Damage）
    """
    tp = fp = tn = fn = 0
    for sample in samples:
        flagged = classify(sample.error, threshold) == Verdict.ANOMALY
        if sample.label == SignalLabel.DAMAGE:
            tp, fn = (tp + 1, fn) if flagged else (tp, fn + 1)
        else:
            fp, tn = (fp + 1, tn) if flagged else (fp, tn + 1)

    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return ConfusionMetrics(
        threshold=name,
        value=threshold,
        tp=tp, fp=fp, tn=tn, fn=fn,
        accuracy=_ratio(tp + tn, tp + fp + tn + fn),
        fpr=_ratio(fp, fp + tn),
        fnr=_ratio(fn, fn + tp),
        precision=precision,
        f1=f1,
    )


def evaluate(
    test_errors: Sequence[ErrorSample],
    thresholds: ThresholdSet,
    names: Sequence[str] = ("p99", "max")
) -> DetectionReport:
    """
    对测试样本逐一判定并统计各阈值的混淆矩阵

    Args:
        test_errors: 已标注（baseline / damage）的测试误差
        thresholds: 阈值集合
        names: 需要应用的阈值名称

    Returns:
        DetectionReport
    """
    if not test_errors:
        raise EmptyDataset("测试集为空")
    for sample in test_errors:
        if sample.label not in (SignalLabel.BASELINE, SignalLabel.DAMAGE):
            raise UnlabeledSample(sample.id)

    samples = [
        SampleVerdict(
            id=sample.id,
            label=sample.label,
            error=sample.error,
            verdicts={name: classify(sample.error, thresholds.get(name)) for name in names},
        )
        for sample in test_errors
    ]
    metrics: Dict[str, ConfusionMetrics] = {
        name: confusion_metrics(name, thresholds.get(name), test_errors) for name in names
    }
    for name, item in metrics.items():
        logger.info(
            f"阈值 {name}={item.value:.6g} - TP: {item.tp}, FP: {item.fp}, TN: {item.tn}, FN: {item.fn}, "
            f"准确率: {item.accuracy:.4f}, FPR: {item.fpr:.4f}, FNR: {item.fnr:.4f}"
        )
    return DetectionReport(samples=samples, metrics=metrics)


def export_latent(
    model: VaeModel,
    images: np.ndarray,
    ids: Sequence[str],
    labels: Sequence[SignalLabel],
    batch_size: int = 32,
    threads: int = 1
) -> List[LatentRow]:
    """
    导出隐空间均值 mu（不采样）

    Returns:
        List[LatentRow]: 每个样本一行，按输入顺序；重复的 id 不合并
    """
    images = np.asarray(images, dtype=model.dtype)
    if not (images.shape[0] == len(ids) == len(labels)):
        raise ShapeMismatch("images / ids / labels 数量不一致")

    def run(start: int, stop: int) -> np.ndarray:
        return sample_latent(model, images[start:stop]).mu.astype(np.float64)

    parts = _run_batches(run, images.shape[0], batch_size, threads)
    mu = np.concatenate(parts) if parts else np.zeros((0, model.latent_dim))
    return [
        LatentRow(id=sample_id, label=label, mu=row.tolist())
        for sample_id, label, row in zip(ids, labels, mu)
    ]


def latent_separation(rows: Sequence[LatentRow]) -> Tuple[float, float]:
    """
    基线与损伤两类隐变量均值的分离度

    Returns:
        (类中心欧氏距离, 合并类内标准差 sqrt(Σ_c Σ_i ‖μᵢ − c_c‖² / (N − 2)))
    """
    groups = {
        label: np.array([row.mu for row in rows if row.label == label], dtype=np.float64)
        for label in (SignalLabel.BASELINE, SignalLabel.DAMAGE)
    }
    if any(group.shape[0] == 0 for group in groups.values()):
        raise InsufficientSamples("计算分离度需要同时包含 baseline 与 damage 样本")
    total = sum(group.shape[0] for group in groups.values())
    if total <= 2:
        raise InsufficientSamples("计算合并标准差至少需要 3 个样本")

    centroids = {label: group.mean(axis=0) for label, group in groups.items()}
    distance = float(np.linalg.norm(centroids[SignalLabel.BASELINE] - centroids[SignalLabel.DAMAGE]))
    scatter = sum(float(np.sum((group - centroids[label]) ** 2)) for label, group in groups.items())
    pooled_std = math.sqrt(scatter / (total - 2))
    return distance, pooled_std

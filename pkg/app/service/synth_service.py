"""
合成导波数据与训练/测试划分

基线信号：Hann 窗调制的 N 周期正弦猝发（直达波）+ 一个固定延迟的边界回波 + 高斯噪声
损伤信号：直达波幅值衰减 + 额外一个散射回波，其余与基线相同
"""

import logging
from typing import List, Tuple

import numpy as np
from scipy.signal import windows

from app.core.exception import InsufficientSamples
from app.schemas.dataset_schema import Dataset, SplitSpec, SynthConfig
from app.schemas.signal_schema import Signal, SignalLabel


logger = logging.getLogger(__name__)


def tone_burst(freq: float, cycles: float, sample_rate: float) -> np.ndarray:
    """
    Hann 窗调制的正弦猝发

    Args:
        freq: 激励频率（Hz）
        cycles: 周期数
        sample_rate: 采样率（Hz）

    Returns:
        np.ndarray: float64 猝发波形，峰值 ≤ 1
    """
    length = max(int(round(cycles * sample_rate / freq)), 1)
    t = np.arange(length) / sample_rate
    return windows.hann(length, sym=True) * np.sin(2 * np.pi * freq * t)


def _add_wave(trace: np.ndarray, wave: np.ndarray, start_time: float, amplitude: float, sample_rate: float):
    """把 wave 按起始时刻叠加到 trace 上，超出信号长度的部分丢弃"""
    start = int(round(start_time * sample_rate))
    if start >= trace.shape[0] or amplitude == 0:
        return
    stop = min(start + wave.shape[0], trace.shape[0])
    trace[start:stop] += amplitude * wave[:stop - start]


def _render(config: SynthConfig, freq: float, damaged: bool, noise: np.ndarray) -> np.ndarray:
    burst = tone_burst(freq, config.burst_cycles, config.sample_rate)
    trace = np.zeros(config.n_samples, dtype=np.float64)

    direct_amplitude = 1.0 - config.damage_attenuation if damaged else 1.0
    _add_wave(trace, burst, config.burst_delay, direct_amplitude, config.sample_rate)
    _add_wave(
        trace, burst, config.burst_delay + config.boundary_echo_delay,
        config.boundary_echo_amplitude, config.sample_rate,
    )
    if damaged:
        _add_wave(
            trace, burst, config.burst_delay + config.damage_echo_delay,
            config.damage_echo_amplitude, config.sample_rate,
        )
    return (trace + noise).astype(np.float32)


def synthesize(config: SynthConfig) -> Dataset:
    """
    生成合成数据集（同一 config 含种子时结果逐位一致）

    Args:
        config: 生成参数

    Returns:
        Dataset: 先 n_baseline 条基线，后 n_damage 条损伤信号
    """
    rng = np.random.default_rng(config.seed)
    freqs = np.asarray(config.excitation_freqs, dtype=np.float64)
    plan = [(SignalLabel.BASELINE, i) for i in range(config.n_baseline)]
    plan += [(SignalLabel.DAMAGE, i) for i in range(config.n_damage)]

    signals: List[Signal] = []
    for label, index in plan:
        freq = float(freqs[rng.integers(freqs.shape[0])])
        noise = rng.standard_normal(config.n_samples) * config.noise_sigma
        samples = _render(config, freq, label == SignalLabel.DAMAGE, noise)
        signals.append(Signal(
            id=f"{label.value}-{index:05d}",
            samples=samples,
            sample_rate=config.sample_rate,
            label=label,
        ))

    logger.info(
        f"✓ 合成数据完成 - 基线: {config.n_baseline}, 损伤: {config.n_damage}, "
        f"长度: {config.n_samples}, seed: {config.seed}"
    )
    return Dataset(
        signals=signals,
        sample_rate=config.sample_rate,
        metadata={
            "generator": "synthetic",
            "seed": str(config.seed),
            "excitation_freqs": ",".join(f"{f:g}" for f in freqs),
        },
    )


def split(dataset: Dataset, spec: SplitSpec) -> Tuple[Dataset, Dataset]:
    """
    按种子无放回抽样，划分训练集（仅基线）与测试集（基线 + 损伤）

    Args:
        dataset: 完整数据集
        spec: 划分规格

    Returns:
        (train, test)，测试集中的基线与训练集不相交
    """
    baseline = dataset.by_label(SignalLabel.BASELINE)
    damage = dataset.by_label(SignalLabel.DAMAGE)
    needed_baseline = spec.n_train_baseline + spec.n_test_baseline
    if needed_baseline > len(baseline):
        raise InsufficientSamples(f"需要 {needed_baseline} 条基线信号，仅有 {len(baseline)} 条")
    if spec.n_test_damage > len(damage):
        raise InsufficientSamples(f"需要 {spec.n_test_damage} 条损伤信号，仅有 {len(damage)} 条")

    rng = np.random.default_rng(spec.seed)
    baseline_order = rng.permutation(len(baseline))
    damage_order = rng.permutation(len(damage))

    train = [baseline[i] for i in baseline_order[:spec.n_train_baseline]]
    test = [baseline[i] for i in baseline_order[spec.n_train_baseline:needed_baseline]]
    test += [damage[i] for i in damage_order[:spec.n_test_damage]]

    logger.info(f"✓ 数据划分完成 - 训练: {len(train)}, 测试: {len(test)}, seed: {spec.seed}")
    metadata = dict(dataset.metadata, split_seed=str(spec.seed))
    return (
        Dataset(signals=train, sample_rate=dataset.sample_rate, metadata=dict(metadata, partition="train")),
        Dataset(signals=test, sample_rate=dataset.sample_rate, metadata=dict(metadata, partition="test")),
    )

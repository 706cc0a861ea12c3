"""
连续小波变换服务
原始信号 → Morlet CWT 幅值 → 双线性缩放 → min-max 归一化
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Sequence

import numpy as np
from scipy import ndimage, signal as sps

from app.core.exception import InvalidScale
from app.schemas.signal_schema import ScaleGrid, Scalogram, Signal, WaveletBasis


logger = logging.getLogger(__name__)

MORLET_NORM = math.pi ** -0.25


def morlet_eval(t, center_param: float = 6.0):
    """
    Morlet 母小波 Φ(t) = π^(−1/4)·exp(iω₀t)·exp(−t²/2)

    Args:
        t: 标量或数组（无量纲时间）
        center_param: ω₀

    Returns:
        与 t 同形的复数值
    """
    t = np.asarray(t, dtype=np.float64)
    result = MORLET_NORM * np.exp(1j * center_param * t) * np.exp(-0.5 * t * t)
    return complex(result) if result.ndim == 0 else result


def log_scale_grid(scale_min: float = 2.0, scale_max: float = 128.0, n_scales: int = 64) -> ScaleGrid:
    """对数等距尺度网格"""
    if n_scales == 1:
        return ScaleGrid(scales=[scale_min])
    return ScaleGrid(scales=np.geomspace(scale_min, scale_max, n_scales))


def scale_to_frequency(scale: float, center_param: float, sample_rate: float) -> float:
    """尺度（采样点）对应的中心频率 f = ω₀·fs / (2π·a)"""
    return center_param * sample_rate / (2 * math.pi * scale)


def _check_grid(grid: ScaleGrid):
    if np.any(grid.scales < 1):
        raise InvalidScale(f"最小尺度 {grid.scales.min():.4g} 小于 1 个采样点")


def cwt_complex(signal: Signal, basis: WaveletBasis, grid: ScaleGrid) -> np.ndarray:
    """
    复数 CWT 系数

    W(a, b) = Σ_t F(t)·(1/√a)·conj(Φ((t−b)/a))，信号支撑外补零。
    对每个尺度在完整支撑 m ∈ [−(n−1), n−1] 上构造核，用 FFT 卷积一次算完所有尺度。

    Args:
        signal: 输入信号
        basis: 母小波
        grid: 尺度网格

    Returns:
        np.ndarray: complex128 [n_scales × n_samples]
    """
    _check_grid(grid)
    samples = signal.samples.astype(np.float64)
    n = samples.shape[0]
    offsets = np.arange(-(n - 1), n, dtype=np.float64)
    scales = grid.scales[:, None]

    # 相关 = 与反转核卷积；offsets 对称，反转即取 Φ(−m/a)
    kernels = np.conj(morlet_eval(-offsets[None, :] / scales, basis.center_param)) / np.sqrt(scales)
    full = sps.fftconvolve(samples[None, :], kernels, mode="full", axes=1)
    return full[:, n - 1:2 * n - 1]


def cwt(signal: Signal, basis: WaveletBasis, grid: ScaleGrid) -> Scalogram:
    """
    CWT 幅值图

    Returns:
        Scalogram: [n_scales × n_samples]，第 0 行为最小尺度
    """
    values = np.abs(cwt_complex(signal, basis, grid))
    return Scalogram(values=values, scale_axis=grid, time_axis=np.arange(signal.n_samples, dtype=np.float64))


def resize_bilinear(scalogram: Scalogram, out_h: int, out_w: int) -> Scalogram:
    """
    角点对齐的双线性插值

    Args:
        scalogram: 输入幅值图
        out_h: 目标行数
        out_w: 目标列数

    Returns:
        Scalogram: [out_h × out_w]，值域不超出输入的 [min, max]
    """
    if out_h < 1 or out_w < 1:
        raise ValueError(f"目标尺寸必须 >= 1，收到 {out_h}×{out_w}")
    values = scalogram.values
    in_h, in_w = values.shape
    if (in_h, in_w) == (out_h, out_w):
        resized = values.copy()
    else:
        resized = ndimage.zoom(
            values, (out_h / in_h, out_w / in_w), order=1, mode="nearest", grid_mode=False
        )
    # 线性插值不会越界，这里只消除浮点舍入
    resized = np.clip(resized, values.min(), values.max())

    # 单尺度输入没有可插值的尺度轴，放大后不再携带
    scale_axis = None
    if scalogram.scale_axis is not None and in_h > 1 and out_h > 1:
        scales = scalogram.scale_axis.scales
        # 对数尺度在对数域插值，保持严格递增
        scale_axis = ScaleGrid(scales=np.exp(np.interp(
            np.linspace(0, in_h - 1, out_h), np.arange(in_h), np.log(scales)
        )))
    time_axis = None
    if scalogram.time_axis is not None:
        time_axis = np.interp(np.linspace(0, in_w - 1, out_w), np.arange(in_w), scalogram.time_axis)
    return Scalogram(values=resized, scale_axis=scale_axis, time_axis=time_axis)


def normalize_minmax(scalogram: Scalogram) -> Scalogram:
    """
    (v − min)/(max − min)，常数图输出全零
    """
    values = scalogram.values
    low, high = values.min(), values.max()
    if high == low:
        normalized = np.zeros_like(values)
    else:
        normalized = np.clip((values - low) / (high - low), 0.0, 1.0)
    return Scalogram(values=normalized, scale_axis=scalogram.scale_axis, time_axis=scalogram.time_axis)


def scalogram_pipeline(signal: Signal, basis: WaveletBasis, grid: ScaleGrid, image_size: int = 64) -> Scalogram:
    """
    单条信号的完整预处理：cwt → resize → normalize
    """
    return normalize_minmax(resize_bilinear(cwt(signal, basis, grid), image_size, image_size))


def transform_signals(
    signals: Sequence[Signal],
    basis: WaveletBasis,
    grid: ScaleGrid,
    image_size: int = 64,
    threads: int = 1
) -> List[Scalogram]:
    """
    批量预处理，结果顺序与输入一致（与线程数无关）

    Args:
        signals: 信号列表
        basis: 母小波
        grid: 尺度网格
        image_size: 输出边长
        threads: 工作线程数

    Returns:
        List[Scalogram]: 与 signals 一一对应
    """
    _check_grid(grid)
    logger.info(f"开始 CWT - 信号数: {len(signals)}, 尺度数: {len(grid)}, 输出: {image_size}×{image_size}, 线程: {threads}")
    if threads <= 1:
        return [scalogram_pipeline(signal, basis, grid, image_size) for signal in signals]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(lambda s: scalogram_pipeline(s, basis, grid, image_size), signals))

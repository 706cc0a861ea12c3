"""
有限差分梯度校验工具
"""

from typing import Callable, Iterable, Optional

import numpy as np


def numerical_gradient(
    f: Callable[[], float],
    array: np.ndarray,
    h: float = 1e-4,
    indices: Optional[Iterable[tuple]] = None
) -> np.ndarray:
    """
    中心差分 (f(x+h) − f(x−h)) / 2h，原地扰动 array 后复原

    Args:
        f: 无参标量函数（读取 array 的当前值）
        array: 被扰动的数组（建议 float64）
        h: 步长
        indices: 只计算这些坐标；None 表示全部

    Returns:
        np.ndarray: 与 array 同形的数值梯度（未计算的坐标为 0）
    """
    grad = np.zeros_like(array, dtype=np.float64)
    if indices is None:
        indices = np.ndindex(*array.shape)
    for index in indices:
        original = array[index]
        array[index] = original + h
        plus = f()
        array[index] = original - h
        minus = f()
        array[index] = original
        grad[index] = (plus - minus) / (2 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> np.ndarray:
    """逐坐标相对误差 |a−n| / max(|a|, |n|, floor)"""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / scale

"""
网络层的前向/反向数值实现（纯 numpy）
每个 *_forward 返回 (输出, 缓存)，对应的 *_backward 接收上游梯度与缓存。
卷积按 3×3 核的 9 个偏移逐一做 tensordot，累加顺序固定，结果与调度无关。
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import expit

from app.core.exception import InvalidConfig, MissingCache, ShapeMismatch


# ==================== 卷积基础运算 ====================


def _window(array: np.ndarray, u: int, v: int, stride: int, out_h: int, out_w: int) -> np.ndarray:
    """取出核偏移 (u, v) 处参与计算的步进切片 [N, C, out_h, out_w]"""
    return array[
        :, :,
        u:u + stride * (out_h - 1) + 1:stride,
        v:v + stride * (out_w - 1) + 1:stride,
    ]


def _correlate(x_pad: np.ndarray, weights: np.ndarray, stride: int, out_h: int, out_w: int) -> np.ndarray:
    """
    步进互相关：x_pad [N,C,Hp,Wp] 与 weights [F,C,kh,kw] 得到 [N,F,out_h,out_w]
    """
    n = x_pad.shape[0]
    f, _, kh, kw = weights.shape
    out = np.zeros((n, f, out_h, out_w), dtype=np.result_type(x_pad, weights))
    for u in range(kh):
        for v in range(kw):
            patch = _window(x_pad, u, v, stride, out_h, out_w)
            # [F,C] · [N,C,H,W] -> [F,N,H,W]
            out += np.tensordot(weights[:, :, u, v], patch, axes=([1], [1])).transpose(1, 0, 2, 3)
    return out


def _scatter(y: np.ndarray, weights: np.ndarray, stride: int, padded_h: int, padded_w: int) -> np.ndarray:
    """
    互相关的伴随：y [N,F,Ho,Wo] 经 weights [F,C,kh,kw] 散射回 [N,C,padded_h,padded_w]
    """
    n, _, out_h, out_w = y.shape
    _, c, kh, kw = weights.shape
    out = np.zeros((n, c, padded_h, padded_w), dtype=np.result_type(y, weights))
    for u in range(kh):
        for v in range(kw):
            # [N,F,H,W] · [F,C] -> [N,H,W,C]
            contrib = np.tensordot(y, weights[:, :, u, v], axes=([1], [0])).transpose(0, 3, 1, 2)
            _window(out, u, v, stride, out_h, out_w)[...] += contrib
    return out


def _weight_grad(x_pad: np.ndarray, y_grad: np.ndarray, stride: int, kh: int, kw: int) -> np.ndarray:
    """
    权重梯度：Σ_{n,i,j} y_grad[n,f,i,j]·x_pad[n,c,i·s+u,j·s+v]，形状 [F,C,kh,kw]
    """
    _, f, out_h, out_w = y_grad.shape
    c = x_pad.shape[1]
    grad = np.zeros((f, c, kh, kw), dtype=np.result_type(x_pad, y_grad))
    for u in range(kh):
        for v in range(kw):
            patch = _window(x_pad, u, v, stride, out_h, out_w)
            grad[:, :, u, v] = np.tensordot(y_grad, patch, axes=([0, 2, 3], [0, 2, 3]))
    return grad


def _pad(x: np.ndarray, padding: int) -> np.ndarray:
    if padding == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))


def _check_conv_args(x: np.ndarray, weights: np.ndarray, bias: np.ndarray, channel_axis: int, bias_size: int):
    if x.ndim != 4 or weights.ndim != 4:
        raise ShapeMismatch(f"卷积需要四维输入与权重，收到 {x.shape} 与 {weights.shape}")
    if x.shape[1] != weights.shape[channel_axis]:
        raise ShapeMismatch(f"通道数不一致: 输入 {x.shape[1]}，权重 {weights.shape}")
    if bias.shape != (bias_size,):
        raise ShapeMismatch(f"偏置形状应为 ({bias_size},)，收到 {bias.shape}")


# ==================== Conv2d ====================


@dataclass
class Conv2dCache:
    x_shape: Tuple[int, ...]
    x_pad: np.ndarray
    weights: np.ndarray
    stride: int
    padding: int


def conv2d_forward(
    x: np.ndarray,
    weights: np.ndarray,
    bias: np.ndarray,
    stride: int = 1,
    padding: int = 0
) -> Tuple[np.ndarray, Conv2dCache]:
    """
    二维步进卷积（互相关），越界处补零

    Args:
        x: 输入 [N,C,H,W]
        weights: 卷积核 [F,C,kh,kw]
        bias: 偏置 [F]
        stride: 步长
        padding: 四周补零宽度

    Returns:
        (输出 [N,F,H',W'], 反向缓存)
    """
    _check_conv_args(x, weights, bias, channel_axis=1, bias_size=weights.shape[0])
    _, _, h, w = x.shape
    kh, kw = weights.shape[2:]
    out_h = (h + 2 * padding - kh) // stride + 1
    out_w = (w + 2 * padding - kw) // stride + 1
    if out_h < 1 or out_w < 1:
        raise ShapeMismatch(f"输入 {x.shape} 经卷积后尺寸为空")

    x_pad = _pad(x, padding)
    out = _correlate(x_pad, weights, stride, out_h, out_w)
    out += bias[None, :, None, None]
    return out, Conv2dCache(x.shape, x_pad, weights, stride, padding)


def conv2d_backward(
    upstream: np.ndarray,
    cache: Optional[Conv2dCache]
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Conv2d 反向传播

    Returns:
        (grad_input, grad_weights, grad_bias)
    """
    if cache is None:
        raise MissingCache("conv2d_backward 缺少前向缓存")
    _, _, h, w = cache.x_shape
    kh, kw = cache.weights.shape[2:]
    p = cache.padding

    grad_bias = upstream.sum(axis=(0, 2, 3))
    grad_weights = _weight_grad(cache.x_pad, upstream, cache.stride, kh, kw)
    grad_pad = _scatter(upstream, cache.weights, cache.stride, *cache.x_pad.shape[2:])
    grad_input = grad_pad[:, :, p:p + h, p:p + w]
    return np.ascontiguousarray(grad_input), grad_weights, grad_bias


# ==================== ConvTranspose2d ====================


@dataclass
class ConvTranspose2dCache:
    x: np.ndarray
    weights: np.ndarray
    stride: int
    padding: int
    out_shape: Tuple[int, ...]


def conv_transpose2d_forward(
    x: np.ndarray,
    weights: np.ndarray,
    bias: np.ndarray,
    stride: int = 1,
    padding: int = 0,
    output_padding: int = 0
) -> Tuple[np.ndarray, ConvTranspose2dCache]:
    """
    转置卷积，即同一权重布局下 conv2d 的伴随算子

    Args:
        x: 输入 [N,F,H,W]
        weights: 卷积核 [F,C,kh,kw]（与对应 Conv2d 的布局相同）
        bias: 偏置 [C]
        stride: 步长
        padding: 裁剪宽度
        output_padding: 输出右下侧额外保留的行列数（需小于 stride）

    Returns:
        (输出 [N,C,(H−1)·s−2p+kh+op, ...], 反向缓存)
    """
    _check_conv_args(x, weights, bias, channel_axis=0, bias_size=weights.shape[1])
    if output_padding >= stride:
        raise ShapeMismatch(f"output_padding={output_padding} 必须小于 stride={stride}")
    n, _, h, w = x.shape
    c, kh, kw = weights.shape[1:]
    out_h = (h - 1) * stride - 2 * padding + kh + output_padding
    out_w = (w - 1) * stride - 2 * padding + kw + output_padding
    if out_h < 1 or out_w < 1:
        raise ShapeMismatch(f"输入 {x.shape} 经转置卷积后尺寸为空")

    z_pad = _scatter(x, weights, stride, out_h + 2 * padding, out_w + 2 * padding)
    out = z_pad[:, :, padding:padding + out_h, padding:padding + out_w] + bias[None, :, None, None]
    return np.ascontiguousarray(out), ConvTranspose2dCache(x, weights, stride, padding, (n, c, out_h, out_w))


def conv_transpose2d_backward(
    upstream: np.ndarray,
    cache: Optional[ConvTranspose2dCache]
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    ConvTranspose2d 反向传播

    Returns:
        (grad_input, grad_weights, grad_bias)
    """
    if cache is None:
        raise MissingCache("conv_transpose2d_backward 缺少前向缓存")
    if upstream.shape != cache.out_shape:
        raise ShapeMismatch(f"上游梯度形状 {upstream.shape} 与输出 {cache.out_shape} 不一致")
    _, _, h, w = cache.x.shape
    kh, kw = cache.weights.shape[2:]

    grad_bias = upstream.sum(axis=(0, 2, 3))
    grad_pad = _pad(upstream, cache.padding)
    grad_input = _correlate(grad_pad, cache.weights, cache.stride, h, w)
    grad_weights = _weight_grad(grad_pad, cache.x, cache.stride, kh, kw)
    return grad_input, grad_weights, grad_bias


# ==================== Dense ====================


@dataclass
class DenseCache:
    x: np.ndarray
    weights: np.ndarray


def dense_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> Tuple[np.ndarray, DenseCache]:
    """
    全连接层：x·W + b

    Args:
        x: 输入 [N,D]
        weights: 权重 [D,K]
        bias: 偏置 [K]
    """
    if x.ndim != 2 or weights.ndim != 2 or x.shape[1] != weights.shape[0]:
        raise ShapeMismatch(f"全连接层形状不匹配: 输入 {x.shape}，权重 {weights.shape}")
    if bias.shape != (weights.shape[1],):
        raise ShapeMismatch(f"偏置形状应为 ({weights.shape[1]},)，收到 {bias.shape}")
    return x @ weights + bias, DenseCache(x, weights)


def dense_backward(upstream: np.ndarray, cache: Optional[DenseCache]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    if cache is None:
        raise MissingCache("dense_backward 缺少前向缓存")
    return upstream @ cache.weights.T, cache.x.T @ upstream, upstream.sum(axis=0)


# ==================== 激活函数 ====================


@dataclass
class LeakyReluCache:
    positive: np.ndarray
    negative_slope: float


def leaky_relu_forward(x: np.ndarray, negative_slope: float = 0.2) -> Tuple[np.ndarray, LeakyReluCache]:
    """
    Leaky ReLU：x > 0 时取 x，否则取 slope·x；x == 0 处次梯度取 slope
    """
    if not 0 < negative_slope < 1:
        raise InvalidConfig(f"negative_slope 必须在 (0, 1) 内，收到 {negative_slope}")
    positive = x > 0
    return np.where(positive, x, x * negative_slope), LeakyReluCache(positive, negative_slope)


def leaky_relu_backward(upstream: np.ndarray, cache: Optional[LeakyReluCache]) -> np.ndarray:
    if cache is None:
        raise MissingCache("leaky_relu_backward 缺少前向缓存")
    return np.where(cache.positive, upstream, upstream * cache.negative_slope)


@dataclass
class SigmoidCache:
    output: np.ndarray


def sigmoid_forward(x: np.ndarray) -> Tuple[np.ndarray, SigmoidCache]:
    """
    Sigmoid：1/(1+e^(−x))，expit 对大幅值输入不会溢出
    """
    out = expit(x)
    return out, SigmoidCache(out)


def sigmoid_backward(upstream: np.ndarray, cache: Optional[SigmoidCache]) -> np.ndarray:
    if cache is None:
        raise MissingCache("sigmoid_backward 缺少前向缓存")
    s = cache.output
    return upstream * s * (1 - s)

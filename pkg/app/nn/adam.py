"""
Adam 优化器（带偏差修正）
"""

import logging
from typing import Dict

import numpy as np

from app.core.exception import ShapeMismatch
from app.nn.tensor import Tensor
from app.schemas.model_schema import AdamState


logger = logging.getLogger(__name__)


def adam_step(
    params: Dict[str, np.ndarray],
    grads: Dict[str, np.ndarray],
    state: AdamState
) -> AdamState:
    """
    执行一步 Adam 更新（原地修改 params 与 state）

    m ← β₁m + (1−β₁)g；v ← β₂v + (1−β₂)g²；
    θ ← θ − lr·m̂ / (√v̂ + ε)，其中 m̂ = m/(1−β₁^t)，v̂ = v/(1−β₂^t)

    Args:
        params: 参数名 → 参数数组
        grads: 参数名 → 梯度数组
        state: 优化器状态

    Returns:
        AdamState: 更新后的状态
    """
    if set(params) != set(grads):
        raise ShapeMismatch("参数与梯度的名称集合不一致")
    for name, param in params.items():
        if grads[name].shape != param.shape:
            raise ShapeMismatch(f"{name} 的梯度形状 {grads[name].shape} 与参数 {param.shape} 不一致")
        for moments in (state.m, state.v):
            if name in moments and moments[name].shape != param.shape:
                raise ShapeMismatch(f"{name} 的优化器状态形状与参数不一致")

    state.step_count += 1
    t = state.step_count
    # 每步只计算一次偏差修正
    bias_correction1 = 1.0 - state.beta1 ** t
    bias_correction2 = 1.0 - state.beta2 ** t

    for name, param in params.items():
        g = grads[name]
        if name not in state.m:
            state.m[name] = np.zeros_like(param)
            state.v[name] = np.zeros_like(param)
        m, v = state.m[name], state.v[name]

        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)

        m_hat = m / bias_correction1
        v_hat = v / bias_correction2
        param -= state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return state


class Adam:
    """
    面向 Tensor 参数的 Adam 封装
    """

    def __init__(
        self,
        params: Dict[str, Tensor],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
        state: AdamState = None
    ):
        self.params = params
        self.state = state or AdamState(lr=lr, beta1=beta1, beta2=beta2, epsilon=epsilon)

    def zero_grad(self):
        for tensor in self.params.values():
            tensor.zero_grad()

    def step(self):
        arrays = {name: tensor.data for name, tensor in self.params.items()}
        grads = {
            name: tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
            for name, tensor in self.params.items()
        }
        adam_step(arrays, grads, self.state)

"""
最小反向模式自动微分张量
Tensor 记录产生它的 Function，backward() 按拓扑逆序传播梯度，
梯度只累加到叶子张量（参数 / 输入）的 .grad 上。
"""

import threading
from contextlib import contextmanager
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.core.exception import ShapeMismatch
from app.nn import functional as F


_grad_state = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_grad_state, "enabled", True)


@contextmanager
def no_grad():
    """
    关闭当前线程的计算图记录（推理时使用）
    """
    previous = is_grad_enabled()
    _grad_state.enabled = False
    try:
        yield
    finally:
        _grad_state.enabled = previous


class Tensor:
    """
    n 维数组 + 梯度槽位
    """

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        array = np.asarray(data)
        if not np.issubdtype(array.dtype, np.floating):
            array = array.astype(np.float32)
        self.data: np.ndarray = array
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name
        self._ctx: Optional["Function"] = None

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"<Tensor{label} shape={self.shape} dtype={self.dtype}>"

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def zero_grad(self):
        self.grad = None

    def _lift(self, other) -> "Tensor":
        if isinstance(other, Tensor):
            return other
        return Tensor(np.asarray(other, dtype=self.dtype))

    # ---------- 运算符 ----------

    def __add__(self, other): return Add.apply(self, self._lift(other))
    def __radd__(self, other): return Add.apply(self._lift(other), self)
    def __sub__(self, other): return Sub.apply(self, self._lift(other))
    def __rsub__(self, other): return Sub.apply(self._lift(other), self)
    def __mul__(self, other): return Mul.apply(self, self._lift(other))
    def __rmul__(self, other): return Mul.apply(self._lift(other), self)
    def __neg__(self): return Neg.apply(self)

    def exp(self) -> "Tensor":
        return Exp.apply(self)

    def expm1(self) -> "Tensor":
        return Expm1.apply(self)

    def square(self) -> "Tensor":
        return Square.apply(self)

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        return Sum.apply(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        return Mean.apply(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return Reshape.apply(self, shape=shape)

    def clip(self, low: float, high: float) -> "Tensor":
        return Clip.apply(self, low=low, high=high)

    # ---------- 反向传播 ----------

    def backward(self, grad: Optional[np.ndarray] = None):
        """
        从当前张量反向传播

        Args:
            grad: 上游梯度，标量张量可省略（默认 1）
        """
        if grad is None:
            if self.size != 1:
                raise ShapeMismatch("非标量张量反向传播时必须提供上游梯度")
            grad = np.ones_like(self.data)
        grads: Dict[int, np.ndarray] = {id(self): np.asarray(grad, dtype=self.dtype)}

        for node in reversed(_toposort(self)):
            node_grad = grads.pop(id(node), None)
            if node_grad is None:
                continue
            if node._ctx is None:
                if node.requires_grad:
                    node.grad = node_grad if node.grad is None else node.grad + node_grad
                continue
            for parent, parent_grad in zip(node._ctx.parents, node._ctx.backward(node_grad)):
                if parent_grad is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = parent_grad if key not in grads else grads[key] + parent_grad


def _toposort(root: Tensor) -> List[Tensor]:
    """迭代式拓扑排序（避免深图递归）"""
    order: List[Tensor] = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        if node._ctx is not None:
            for parent in node._ctx.parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
    return order


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """把广播后的梯度求和回原始形状"""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Function:
    """
    计算图节点：forward 作用于 ndarray，backward 返回每个父张量的梯度
    """

    def __init__(self, *parents: Tensor):
        self.parents = parents

    @classmethod
    def apply(cls, *inputs: Tensor, **kwargs) -> Tensor:
        ctx = cls(*inputs)
        out = ctx.forward(*[t.data for t in inputs], **kwargs)
        requires_grad = is_grad_enabled() and any(t.requires_grad for t in inputs)
        result = Tensor(out, requires_grad=requires_grad)
        if requires_grad:
            result._ctx = ctx
        return result

    def forward(self, *args, **kwargs) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        raise NotImplementedError


# ==================== 逐元素与归约运算 ====================


class Add(Function):
    def forward(self, x, y):
        self.shapes = (x.shape, y.shape)
        return x + y

    def backward(self, grad):
        return _unbroadcast(grad, self.shapes[0]), _unbroadcast(grad, self.shapes[1])


class Sub(Function):
    def forward(self, x, y):
        self.shapes = (x.shape, y.shape)
        return x - y

    def backward(self, grad):
        return _unbroadcast(grad, self.shapes[0]), _unbroadcast(-grad, self.shapes[1])


class Mul(Function):
    def forward(self, x, y):
        self.x, self.y = x, y
        return x * y

    def backward(self, grad):
        return _unbroadcast(grad * self.y, self.x.shape), _unbroadcast(grad * self.x, self.y.shape)


class Neg(Function):
    def forward(self, x):
        return -x

    def backward(self, grad):
        return (-grad,)


class Exp(Function):
    def forward(self, x):
        self.out = np.exp(x)
        return self.out

    def backward(self, grad):
        return (grad * self.out,)


class Expm1(Function):
    def forward(self, x):
        self.out = np.expm1(x)
        return self.out

    def backward(self, grad):
        return (grad * (self.out + 1),)


class Square(Function):
    def forward(self, x):
        self.x = x
        return x * x

    def backward(self, grad):
        return (2 * grad * self.x,)


class Sum(Function):
    def forward(self, x, axis=None, keepdims=False):
        self.shape, self.axis, self.keepdims = x.shape, axis, keepdims
        return np.sum(x, axis=axis, keepdims=keepdims)

    def backward(self, grad):
        if self.axis is not None and not self.keepdims:
            grad = np.expand_dims(grad, self.axis)
        return (np.broadcast_to(grad, self.shape).copy(),)


class Mean(Function):
    def forward(self, x, axis=None, keepdims=False):
        self.shape, self.axis, self.keepdims = x.shape, axis, keepdims
        out = np.mean(x, axis=axis, keepdims=keepdims)
        self.count = x.size // max(out.size, 1)
        return out

    def backward(self, grad):
        if self.axis is not None and not self.keepdims:
            grad = np.expand_dims(grad, self.axis)
        return (np.broadcast_to(grad / self.count, self.shape).copy(),)


class Reshape(Function):
    def forward(self, x, shape=()):
        self.shape = x.shape
        return x.reshape(shape)

    def backward(self, grad):
        return (grad.reshape(self.shape),)


class Clip(Function):
    def forward(self, x, low=0.0, high=1.0):
        self.mask = (x >= low) & (x <= high)
        return np.clip(x, low, high)

    def backward(self, grad):
        return (np.where(self.mask, grad, 0),)


# ==================== 网络层运算 ====================


class Conv2dOp(Function):
    def forward(self, x, weights, bias, stride=1, padding=0):
        out, self.cache = F.conv2d_forward(x, weights, bias, stride, padding)
        return out

    def backward(self, grad):
        return F.conv2d_backward(grad, self.cache)


class ConvTranspose2dOp(Function):
    def forward(self, x, weights, bias, stride=1, padding=0, output_padding=0):
        out, self.cache = F.conv_transpose2d_forward(x, weights, bias, stride, padding, output_padding)
        return out

    def backward(self, grad):
        return F.conv_transpose2d_backward(grad, self.cache)


class DenseOp(Function):
    def forward(self, x, weights, bias):
        out, self.cache = F.dense_forward(x, weights, bias)
        return out

    def backward(self, grad):
        return F.dense_backward(grad, self.cache)


class LeakyReluOp(Function):
    def forward(self, x, negative_slope=0.2):
        out, self.cache = F.leaky_relu_forward(x, negative_slope)
        return out

    def backward(self, grad):
        return (F.leaky_relu_backward(grad, self.cache),)


class SigmoidOp(Function):
    def forward(self, x):
        out, self.cache = F.sigmoid_forward(x)
        return out

    def backward(self, grad):
        return (F.sigmoid_backward(grad, self.cache),)


def conv2d(x: Tensor, weights: Tensor, bias: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    return Conv2dOp.apply(x, weights, bias, stride=stride, padding=padding)


def conv_transpose2d(
    x: Tensor, weights: Tensor, bias: Tensor, stride: int = 1, padding: int = 0, output_padding: int = 0
) -> Tensor:
    return ConvTranspose2dOp.apply(x, weights, bias, stride=stride, padding=padding, output_padding=output_padding)


def dense(x: Tensor, weights: Tensor, bias: Tensor) -> Tensor:
    return DenseOp.apply(x, weights, bias)


def leaky_relu(x: Tensor, negative_slope: float = 0.2) -> Tensor:
    return LeakyReluOp.apply(x, negative_slope=negative_slope)


def sigmoid(x: Tensor) -> Tensor:
    return SigmoidOp.apply(x)

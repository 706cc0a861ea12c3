"""
由 LayerSpec 构建的网络层与顺序容器
层对象只持有参数，不保存前向状态，可在多个线程上并发推理。
"""

from collections import OrderedDict
from typing import Dict, List, Sequence

import numpy as np

from app.core.exception import ShapeMismatch
from app.nn.tensor import Tensor, conv2d, conv_transpose2d, dense, leaky_relu, sigmoid
from app.schemas.model_schema import LayerKind, LayerSpec


class Layer:
    """
    网络层基类
    """

    def __init__(self, spec: LayerSpec):
        self.spec = spec

    def __call__(self, x: Tensor) -> Tensor:
        return self.forward(x)

    def forward(self, x: Tensor) -> Tensor:
        raise NotImplementedError

    def parameters(self) -> Dict[str, Tensor]:
        return {}

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({self.spec.name})"


class ParametricLayer(Layer):
    """
    带 weight / bias 参数的层
    """

    def __init__(self, spec: LayerSpec, params: Dict[str, np.ndarray]):
        super().__init__(spec)
        weight_name, bias_name = f"{spec.name}.weight", f"{spec.name}.bias"
        weight, bias = params[weight_name], params[bias_name]
        if tuple(weight.shape) != spec.weight_shape():
            raise ShapeMismatch(f"{weight_name} 形状应为 {spec.weight_shape()}，收到 {weight.shape}")
        self.weight = Tensor(weight, requires_grad=True, name=weight_name)
        self.bias = Tensor(bias, requires_grad=True, name=bias_name)

    def parameters(self) -> Dict[str, Tensor]:
        return OrderedDict([(self.weight.name, self.weight), (self.bias.name, self.bias)])


class Conv2d(ParametricLayer):
    def forward(self, x: Tensor) -> Tensor:
        return conv2d(x, self.weight, self.bias, self.spec.stride, self.spec.padding)


class ConvTranspose2d(ParametricLayer):
    def forward(self, x: Tensor) -> Tensor:
        return conv_transpose2d(
            x, self.weight, self.bias, self.spec.stride, self.spec.padding, self.spec.output_padding
        )


class Dense(ParametricLayer):
    def forward(self, x: Tensor) -> Tensor:
        return dense(x, self.weight, self.bias)


class LeakyRelu(Layer):
    def forward(self, x: Tensor) -> Tensor:
        return leaky_relu(x, self.spec.negative_slope)


class Sigmoid(Layer):
    def forward(self, x: Tensor) -> Tensor:
        return sigmoid(x)


class Flatten(Layer):
    def forward(self, x: Tensor) -> Tensor:
        return x.reshape(x.shape[0], -1)


class Reshape(Layer):
    def forward(self, x: Tensor) -> Tensor:
        return x.reshape((x.shape[0], *self.spec.shape))


_LAYER_TYPES = {
    LayerKind.CONV2D: Conv2d,
    LayerKind.CONV_TRANSPOSE2D: ConvTranspose2d,
    LayerKind.DENSE: Dense,
    LayerKind.LEAKY_RELU: LeakyRelu,
    LayerKind.SIGMOID: Sigmoid,
    LayerKind.FLATTEN: Flatten,
    LayerKind.RESHAPE: Reshape,
}


def build_layer(spec: LayerSpec, params: Dict[str, np.ndarray]) -> Layer:
    """
    根据 LayerSpec 构建层

    Args:
        spec: 层描述
        params: 参数字典（名称 → 数组）

    Returns:
        Layer: 层实例
    """
    layer_type = _LAYER_TYPES[spec.kind]
    if spec.has_parameters:
        return layer_type(spec, params)
    return layer_type(spec)


class Sequential:
    """
    顺序容器，按声明顺序依次执行各层
    """

    def __init__(self, specs: Sequence[LayerSpec], params: Dict[str, np.ndarray]):
        self.specs: List[LayerSpec] = list(specs)
        self.layers: List[Layer] = [build_layer(spec, params) for spec in self.specs]

    def __call__(self, x: Tensor) -> Tensor:
        for layer in self.layers:
            x = layer(x)
        return x

    def parameters(self) -> Dict[str, Tensor]:
        params: Dict[str, Tensor] = OrderedDict()
        for layer in self.layers:
            params.update(layer.parameters())
        return params

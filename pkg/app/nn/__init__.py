# 张量与网络层
from .tensor import Tensor, no_grad, conv2d, conv_transpose2d, dense, leaky_relu, sigmoid
from .layers import Layer, Sequential, build_layer
from .init import init_parameters
from .adam import Adam, adam_step

__all__ = [
    "Tensor",
    "no_grad",
    "conv2d",
    "conv_transpose2d",
    "dense",
    "leaky_relu",
    "sigmoid",
    "Layer",
    "Sequential",
    "build_layer",
    "init_parameters",
    "Adam",
    "adam_step",
]

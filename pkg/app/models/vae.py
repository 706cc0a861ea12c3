"""
单类卷积变分自编码器
编码器：5 层 3×3 / stride 2 卷积（16, 32, 64, 128, 256）+ Leaky ReLU
隐空间：两个全连接头输出 mu 与 logvar（默认 2 维）
解码器：全连接 + 5 层转置卷积（128, 64, 32, 16, 1）+ Sigmoid
"""

import logging
import math
from collections import OrderedDict
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from app.core.exception import ArtifactMismatch, InvalidConfig, NumericalError, ShapeMismatch
from app.nn.init import init_parameters
from app.nn.layers import Sequential
from app.nn.tensor import Tensor
from app.schemas.model_schema import LatentCode, LayerKind, LayerSpec, LossBreakdown


logger = logging.getLogger(__name__)

ENCODER_FILTERS = (16, 32, 64, 128, 256)
DOWNSAMPLE_FACTOR = 2 ** len(ENCODER_FILTERS)

ArrayLike = Union[Tensor, np.ndarray]


def _as_tensor(value: ArrayLike, dtype) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=dtype))


def vae_layer_specs(
    latent_dim: int = 2,
    image_size: int = 64,
    negative_slope: float = 0.2
) -> Tuple[List[LayerSpec], List[LayerSpec], List[LayerSpec], List[LayerSpec]]:
    """
    生成网络结构描述

    Args:
        latent_dim: 隐空间维度
        image_size: 输入边长（必须是 32 的倍数）
        negative_slope: Leaky ReLU 负半轴斜率

    Returns:
        (encoder, mu_head, logvar_head, decoder) 四组 LayerSpec
    """
    if image_size % DOWNSAMPLE_FACTOR != 0:
        raise InvalidConfig(f"image_size={image_size} 必须是 {DOWNSAMPLE_FACTOR} 的倍数")
    feature_size = image_size // DOWNSAMPLE_FACTOR
    top_channels = ENCODER_FILTERS[-1]
    flat_features = top_channels * feature_size * feature_size

    encoder: List[LayerSpec] = []
    in_channels = 1
    for index, filters in enumerate(ENCODER_FILTERS, start=1):
        encoder.append(LayerSpec(
            name=f"encoder.conv{index}", kind=LayerKind.CONV2D,
            in_channels=in_channels, out_channels=filters, stride=2, padding=1,
        ))
        encoder.append(LayerSpec(
            name=f"encoder.act{index}", kind=LayerKind.LEAKY_RELU, negative_slope=negative_slope,
        ))
        in_channels = filters
    encoder.append(LayerSpec(name="encoder.flatten", kind=LayerKind.FLATTEN))

    mu_head = [LayerSpec(name="mu_head", kind=LayerKind.DENSE, in_channels=flat_features, out_channels=latent_dim)]
    logvar_head = [LayerSpec(name="logvar_head", kind=LayerKind.DENSE, in_channels=flat_features, out_channels=latent_dim)]

    decoder: List[LayerSpec] = [
        LayerSpec(name="decoder.dense", kind=LayerKind.DENSE, in_channels=latent_dim, out_channels=flat_features),
        LayerSpec(name="decoder.act0", kind=LayerKind.LEAKY_RELU, negative_slope=negative_slope),
        LayerSpec(name="decoder.reshape", kind=LayerKind.RESHAPE, shape=(top_channels, feature_size, feature_size)),
    ]
    decoder_filters = ENCODER_FILTERS[::-1][1:] + (1,)
    in_channels = top_channels
    for index, filters in enumerate(decoder_filters, start=1):
        decoder.append(LayerSpec(
            name=f"decoder.deconv{index}", kind=LayerKind.CONV_TRANSPOSE2D,
            in_channels=in_channels, out_channels=filters, stride=2, padding=1, output_padding=1,
        ))
        if index < len(decoder_filters):
            decoder.append(LayerSpec(
                name=f"decoder.act{index}", kind=LayerKind.LEAKY_RELU, negative_slope=negative_slope,
            ))
        in_channels = filters
    decoder.append(LayerSpec(name="decoder.sigmoid", kind=LayerKind.SIGMOID))
    return encoder, mu_head, logvar_head, decoder


class VaeModel:
    """
    VAE 模型：参数张量 + 结构元数据
    """

    def __init__(
        self,
        params: Dict[str, np.ndarray],
        latent_dim: int = 2,
        image_size: int = 64,
        negative_slope: float = 0.2,
        logvar_clamp: float = 10.0
    ):
        self.latent_dim = latent_dim
        self.image_size = image_size
        self.negative_slope = negative_slope
        self.logvar_clamp = logvar_clamp
        self.encoder_specs, self.mu_head_specs, self.logvar_head_specs, self.decoder_specs = vae_layer_specs(
            latent_dim, image_size, negative_slope
        )
        self._check_params(params)
        # 持有参数副本，不与调用方共享内存
        params = OrderedDict((name, np.array(array, copy=True)) for name, array in params.items())

        self.encoder = Sequential(self.encoder_specs, params)
        self.mu_head = Sequential(self.mu_head_specs, params)
        self.logvar_head = Sequential(self.logvar_head_specs, params)
        self.decoder = Sequential(self.decoder_specs, params)

    @classmethod
    def initialize(
        cls,
        seed: int,
        latent_dim: int = 2,
        image_size: int = 64,
        negative_slope: float = 0.2,
        logvar_clamp: float = 10.0,
        dtype=np.float32
    ) -> "VaeModel":
        """
        按种子初始化新模型（He-uniform 权重，零偏置）
        """
        specs = sum(vae_layer_specs(latent_dim, image_size, negative_slope), [])
        params = init_parameters(specs, seed, dtype=dtype)
        return cls(params, latent_dim, image_size, negative_slope, logvar_clamp)

    @property
    def layer_specs(self) -> List[LayerSpec]:
        return self.encoder_specs + self.mu_head_specs + self.logvar_head_specs + self.decoder_specs

    @property
    def input_shape(self) -> Tuple[int, int, int]:
        return (1, self.image_size, self.image_size)

    @property
    def dtype(self):
        return next(iter(self.parameters().values())).dtype

    def expected_shapes(self) -> Dict[str, Tuple[int, ...]]:
        """结构要求的参数名与形状"""
        shapes: Dict[str, Tuple[int, ...]] = OrderedDict()
        for spec in self.layer_specs:
            if spec.has_parameters:
                shapes[f"{spec.name}.weight"] = spec.weight_shape()
                shapes[f"{spec.name}.bias"] = (spec.out_channels,)
        return shapes

    def _check_params(self, params: Dict[str, np.ndarray]):
        expected = self.expected_shapes()
        missing = [name for name in expected if name not in params]
        extra = [name for name in params if name not in expected]
        if missing or extra:
            raise ArtifactMismatch(f"参数与网络结构不一致 - 缺少: {missing}，多余: {extra}")
        for name, shape in expected.items():
            if tuple(params[name].shape) != shape:
                raise ArtifactMismatch(f"参数 {name} 形状应为 {shape}，收到 {tuple(params[name].shape)}")

    def parameters(self) -> Dict[str, Tensor]:
        params: Dict[str, Tensor] = OrderedDict()
        for part in (self.encoder, self.mu_head, self.logvar_head, self.decoder):
            params.update(part.parameters())
        return params

    def state_dict(self) -> Dict[str, np.ndarray]:
        return OrderedDict((name, tensor.data) for name, tensor in self.parameters().items())

    def load_state_dict(self, params: Dict[str, np.ndarray]):
        """
        原地覆盖参数值，名称与形状必须与当前结构一致
        """
        self._check_params(params)
        for name, tensor in self.parameters().items():
            tensor.data[...] = params[name]

    def parameter_count(self) -> int:
        return sum(tensor.size for tensor in self.parameters().values())

    def zero_grad(self):
        for tensor in self.parameters().values():
            tensor.zero_grad()

    def astype(self, dtype) -> "VaeModel":
        """
        复制为指定精度的新模型（float64 仅用于梯度校验）
        """
        params = OrderedDict((name, array.astype(dtype)) for name, array in self.state_dict().items())
        return VaeModel(params, self.latent_dim, self.image_size, self.negative_slope, self.logvar_clamp)


# ==================== 模型运算 ====================


def encode(model: VaeModel, x: ArrayLike) -> Tuple[Tensor, Tensor]:
    """
    编码：输入图像 → (mu, logvar)，logvar 截断到 [−clamp, clamp]

    Args:
        model: VAE 模型
        x: 归一化到 [0,1] 的输入 [N,1,S,S]

    Returns:
        (mu [N,latent], logvar [N,latent])
    """
    x = _as_tensor(x, model.dtype)
    if x.data.ndim != 4 or tuple(x.shape[1:]) != model.input_shape:
        raise ShapeMismatch(f"编码器输入应为 [N,{','.join(map(str, model.input_shape))}]，收到 {x.shape}")
    features = model.encoder(x)
    mu = model.mu_head(features)
    logvar = model.logvar_head(features).clip(-model.logvar_clamp, model.logvar_clamp)
    return mu, logvar


def reparameterize(mu: Tensor, logvar: Tensor, noise: ArrayLike) -> Tensor:
    """
    重参数化：z = mu + exp(0.5·logvar) ⊙ noise，噪声由调用方注入
    """
    noise = _as_tensor(noise, mu.dtype)
    if noise.shape != mu.shape:
        raise ShapeMismatch(f"噪声形状 {noise.shape} 与 mu {mu.shape} 不一致")
    return mu + (logvar * 0.5).exp() * noise


def sample_latent(model: VaeModel, x: ArrayLike, noise: Optional[np.ndarray] = None) -> LatentCode:
    """
    编码并采样隐变量；noise 为 None 时取 z = mu

    Args:
        model: VAE 模型
        x: 输入 [N,1,S,S]
        noise: 标准正态噪声 [N,latent]

    Returns:
        LatentCode: mu / logvar / z 的数值副本
    """
    mu, logvar = encode(model, x)
    z = mu if noise is None else reparameterize(mu, logvar, noise)
    if not (np.all(np.isfinite(mu.data)) and np.all(np.isfinite(z.data))):
        raise NumericalError("隐变量出现非有限值")
    return LatentCode(mu=mu.data.copy(), logvar=logvar.data.copy(), z=z.data.copy())


def decode(model: VaeModel, z: ArrayLike) -> Tensor:
    """
    解码：隐变量 [N,latent] → 重构图像 [N,1,S,S]，输出位于 (0,1)
    """
    z = _as_tensor(z, model.dtype)
    if z.data.ndim != 2 or z.shape[1] != model.latent_dim:
        raise ShapeMismatch(f"解码器输入应为 [N,{model.latent_dim}]，收到 {z.shape}")
    return model.decoder(z)


def kl_divergence(mu: Tensor, logvar: Tensor) -> Tensor:
    """
    KL(N(mu, exp(logvar)) || N(0, I))，按样本返回 [N]
    0.5·Σ_d (exp(logvar) − 1 − logvar + mu²)，expm1 保证每一项非负
    """
    return ((logvar.expm1() - logvar) + mu.square()).sum(axis=1) * 0.5


def reconstruction_error(x: ArrayLike, x_hat: Tensor) -> Tensor:
    """
    按样本的像素均方误差 [N]
    """
    x = _as_tensor(x, x_hat.dtype)
    if x.shape != x_hat.shape:
        raise ShapeMismatch(f"输入 {x.shape} 与重构 {x_hat.shape} 形状不一致")
    axes = tuple(range(1, len(x.shape)))
    return (x - x_hat).square().mean(axis=axes)


def loss(model: VaeModel, x: ArrayLike, noise: ArrayLike) -> Tuple[LossBreakdown, Tensor]:
    """
    训练目标：batch 平均的 (重构误差 + KL)

    Args:
        model: VAE 模型
        x: 输入 [N,1,S,S]
        noise: 标准正态噪声 [N,latent]

    Returns:
        (损失分解, 可反向传播的标量总损失)
    """
    mu, logvar = encode(model, x)
    z = reparameterize(mu, logvar, noise)
    x_hat = decode(model, z)
    recon = reconstruction_error(x, x_hat)
    kl = kl_divergence(mu, logvar)
    total = (recon + kl).mean()

    recon_value = float(np.mean(recon.data, dtype=np.float64))
    kl_value = float(np.mean(kl.data, dtype=np.float64))
    if not (math.isfinite(recon_value) and math.isfinite(kl_value) and math.isfinite(total.item())):
        raise NumericalError("损失出现非有限值")
    breakdown = LossBreakdown(reconstruction=recon_value, kl=kl_value, total=recon_value + kl_value)
    return breakdown, total

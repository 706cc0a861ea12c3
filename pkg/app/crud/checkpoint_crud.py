import logging
import math
import struct
from collections import OrderedDict
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np

from app.core.exception import ArtifactMismatch, UnsupportedVersion
from app.models.vae import DOWNSAMPLE_FACTOR, ENCODER_FILTERS, VaeModel
from app.schemas.model_schema import AdamState
from app.utils.binary import BinaryReader, pack_tensors, read_tensors


logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

VAE1_MAGIC = b"VAE1"
OPT1_MAGIC = b"OPT1"
CHECKPOINT_VERSION = 1


class CheckpointCRUD:
    """
    模型检查点（VAE1）与优化器状态（OPT1）读写
    """

    def encode_model(self, params: Dict[str, np.ndarray]) -> bytes:
        header = VAE1_MAGIC + struct.pack("<II", CHECKPOINT_VERSION, len(params))
        return header + pack_tensors(params)

    def decode_model(self, data: bytes, source: str = "<bytes>") -> Dict[str, np.ndarray]:
        """
        解析 VAE1 字节串为参数字典（float32）
        """
        reader = BinaryReader(data, source)
        reader.expect_magic(VAE1_MAGIC)
        try:
            reader.expect_version(CHECKPOINT_VERSION)
        except UnsupportedVersion as e:
            raise ArtifactMismatch(e.message) from e
        count = reader.u32()
        params = read_tensors(reader, count)
        reader.expect_end()
        return params

    def save_model(self, model: VaeModel, path: PathLike) -> Path:
        """
        保存模型参数

        Args:
            model: VAE 模型
            path: 输出路径

        Returns:
            Path: 输出路径
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(self.encode_model(model.state_dict()))
        logger.info(f"✓ 检查点已保存: {path} ({model.parameter_count()} 个参数)")
        return path

    def load_model(
        self,
        path: PathLike,
        negative_slope: float = 0.2,
        logvar_clamp: float = 10.0,
        latent_dim: Optional[int] = None,
        image_size: Optional[int] = None
    ) -> VaeModel:
        """
        读取检查点并按张量形状推断网络结构

        Args:
            path: 检查点路径
            negative_slope: Leaky ReLU 斜率（不随检查点保存）
            logvar_clamp: logvar 截断范围
            latent_dim: 期望的隐空间维度，None 表示不检查
            image_size: 期望的输入边长，None 表示不检查

        Returns:
            VaeModel
        """
        path = Path(path)
        params = self.decode_model(path.read_bytes(), source=str(path))
        found_latent, found_size = self.infer_architecture(params)
        if latent_dim is not None and latent_dim != found_latent:
            raise ArtifactMismatch(f"检查点隐空间维度为 {found_latent}，配置为 {latent_dim}")
        if image_size is not None and image_size != found_size:
            raise ArtifactMismatch(f"检查点输入边长为 {found_size}，配置为 {image_size}")

        model = VaeModel(params, found_latent, found_size, negative_slope, logvar_clamp)
        logger.info(f"读取检查点: {path} - latent_dim: {found_latent}, image_size: {found_size}")
        return model

    def infer_architecture(self, params: Dict[str, np.ndarray]):
        """
        由张量形状推断 (latent_dim, image_size)
        """
        try:
            latent_dim = int(params["mu_head.weight"].shape[1])
            flat_features = int(params["decoder.dense.weight"].shape[1])
        except (KeyError, IndexError) as e:
            raise ArtifactMismatch(f"检查点缺少必要张量: {e}") from e
        feature_size = math.isqrt(flat_features // ENCODER_FILTERS[-1])
        if ENCODER_FILTERS[-1] * feature_size * feature_size != flat_features or feature_size == 0:
            raise ArtifactMismatch(f"decoder.dense 输出维度 {flat_features} 与网络结构不符")
        return latent_dim, feature_size * DOWNSAMPLE_FACTOR

    def save_adam_state(self, state: AdamState, path: PathLike) -> Path:
        """
        保存优化器状态（m.<参数名> / v.<参数名> + step_count）
        """
        tensors: Dict[str, np.ndarray] = OrderedDict()
        for name in state.m:
            tensors[f"m.{name}"] = state.m[name]
        for name in state.v:
            tensors[f"v.{name}"] = state.v[name]

        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        header = OPT1_MAGIC + struct.pack("<IIQ", CHECKPOINT_VERSION, len(tensors), state.step_count)
        path.write_bytes(header + pack_tensors(tensors))
        logger.info(f"✓ 优化器状态已保存: {path} (step: {state.step_count})")
        return path

    def load_adam_state(
        self,
        path: PathLike,
        model: Optional[VaeModel] = None,
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8
    ) -> AdamState:
        """
        读取优化器状态；给定 model 时校验参数名与形状

        Returns:
            AdamState
        """
        path = Path(path)
        reader = BinaryReader(path.read_bytes(), str(path))
        reader.expect_magic(OPT1_MAGIC)
        try:
            reader.expect_version(CHECKPOINT_VERSION)
        except UnsupportedVersion as e:
            raise ArtifactMismatch(e.message) from e
        count = reader.u32()
        step_count = reader.u64()
        tensors = read_tensors(reader, count)
        reader.expect_end()

        m: Dict[str, np.ndarray] = OrderedDict()
        v: Dict[str, np.ndarray] = OrderedDict()
        for key, array in tensors.items():
            prefix, _, name = key.partition(".")
            if prefix == "m":
                m[name] = array.copy()
            elif prefix == "v":
                v[name] = array.copy()
            else:
                raise ArtifactMismatch(f"{path} 中的张量名无效: {key}")
        if set(m) != set(v):
            raise ArtifactMismatch(f"{path} 中 m 与 v 的参数集合不一致")

        if model is not None:
            shapes = model.expected_shapes()
            if set(m) != set(shapes):
                raise ArtifactMismatch(f"{path} 的参数集合与模型不一致")
            for name, shape in shapes.items():
                if m[name].shape != shape or v[name].shape != shape:
                    raise ArtifactMismatch(f"{path} 中 {name} 的形状与模型不一致")
        return AdamState(lr=lr, beta1=beta1, beta2=beta2, epsilon=epsilon, step_count=step_count, m=m, v=v)


# 创建全局CRUD实例
checkpoint_crud = CheckpointCRUD()

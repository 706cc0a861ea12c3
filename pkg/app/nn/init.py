"""
参数初始化
"""

from collections import OrderedDict
from typing import Dict, Sequence

import numpy as np

from app.schemas.model_schema import LayerSpec


def he_uniform_bound(spec: LayerSpec) -> float:
    """He-uniform 的采样上界 √(6 / fan_in)"""
    return float(np.sqrt(6.0 / spec.fan_in()))


def init_parameters(
    specs: Sequence[LayerSpec],
    seed: int,
    dtype=np.float32
) -> Dict[str, np.ndarray]:
    """
    按声明顺序初始化参数：权重取 He-uniform（fan-in），偏置为 0

    Args:
        specs: 层描述序列
        seed: 随机种子（任意 64 位非负整数）
        dtype: 参数精度

    Returns:
        Dict[str, np.ndarray]: 参数名 → 数组（有序）
    """
    # 单一随机流，按层顺序消费，保证同一种子结果一致
    rng = np.random.default_rng(seed)
    params: Dict[str, np.ndarray] = OrderedDict()
    for spec in specs:
        if not spec.has_parameters:
            continue
        bound = he_uniform_bound(spec)
        params[f"{spec.name}.weight"] = rng.uniform(-bound, bound, size=spec.weight_shape()).astype(dtype)
        params[f"{spec.name}.bias"] = np.zeros(spec.out_channels, dtype=dtype)
    return params

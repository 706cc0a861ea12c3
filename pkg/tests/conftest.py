import os
import sys
from pathlib import Path

import numpy as np
import pytest

# 添加项目根目录到路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from app.models.vae import VaeModel
from app.schemas.dataset_schema import SynthConfig
from app.service.synth_service import synthesize


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="运行端到端验收测试")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="需要 --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def isolated_env(monkeypatch, tmp_path):
    """每个测试在独立目录中运行，避免读取仓库中的 .env 或 GWVAE_ 环境变量"""
    for key in list(os.environ):
        if key.startswith("GWVAE_"):
            monkeypatch.delenv(key)
    monkeypatch.chdir(tmp_path)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_synth_config():
    return SynthConfig(n_baseline=12, n_damage=6, n_samples=256, seed=3)


@pytest.fixture
def small_dataset(small_synth_config):
    return synthesize(small_synth_config)


@pytest.fixture
def small_model():
    """32×32 输入的小模型（最小合法尺寸）"""
    return VaeModel.initialize(seed=11, latent_dim=2, image_size=32)


@pytest.fixture
def small_images(rng):
    return rng.uniform(0, 1, size=(6, 1, 32, 32)).astype(np.float32)

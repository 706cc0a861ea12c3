import math

import numpy as np
import pytest

from app.core.exception import ArtifactMismatch, EmptyDataset, InvalidConfig, ShapeMismatch
from app.models.vae import (
    VaeModel,
    decode,
    encode,
    kl_divergence,
    loss,
    reconstruction_error,
    reparameterize,
    sample_latent,
    vae_layer_specs,
)
from app.nn.gradcheck import numerical_gradient, relative_error
from app.nn.tensor import Tensor, no_grad
from app.schemas.model_schema import LatentCode, TrainConfig
from app.schemas.signal_schema import WaveletBasis
from app.service.training_service import as_image_batch, train
from app.service.wavelet_service import log_scale_grid, scalogram_pipeline


def tensor(values):
    return Tensor(np.asarray(values, dtype=np.float64))


# ==================== 结构 ====================


def test_architecture_shapes_at_64():
    model = VaeModel.initialize(seed=0)
    x = np.random.default_rng(0).uniform(0, 1, (5, 1, 64, 64)).astype(np.float32)
    with no_grad():
        features = x_tensor = Tensor(x)
        for layer in model.encoder.layers[:-1]:
            features = layer(features)
        assert features.shape == (5, 256, 2, 2)
        mu, logvar = encode(model, x_tensor)
        assert mu.shape == logvar.shape == (5, 2)
        assert decode(model, mu).shape == (5, 1, 64, 64)


def test_parameter_names_follow_declaration_order():
    model = VaeModel.initialize(seed=0, image_size=32)
    names = list(model.parameters())
    assert names[:2] == ["encoder.conv1.weight", "encoder.conv1.bias"]
    assert names[-2:] == ["decoder.deconv5.weight", "decoder.deconv5.bias"]
    assert model.parameters()["decoder.deconv1.weight"].shape == (256, 128, 3, 3)
    assert model.parameters()["mu_head.weight"].shape == (256, 2)


def test_image_size_must_be_multiple_of_32():
    with pytest.raises(InvalidConfig):
        vae_layer_specs(2, 48)


def test_wrong_input_shape_rejected(small_model):
    with pytest.raises(ShapeMismatch):
        encode(small_model, np.zeros((2, 1, 64, 64)))
    with pytest.raises(ShapeMismatch):
        decode(small_model, np.zeros((2, 3)))


def test_mismatched_parameters_rejected(small_model):
    params = dict(small_model.state_dict())
    params.pop("mu_head.bias")
    with pytest.raises(ArtifactMismatch):
        VaeModel(params, 2, 32)


def test_state_dict_shares_memory_with_parameters(small_model):
    state = small_model.state_dict()
    state["mu_head.bias"][0] = 3.0
    assert small_model.parameters()["mu_head.bias"].data[0] == 3.0


def test_constructor_copies_parameters(small_images):
    params = {name: array.copy() for name, array in VaeModel.initialize(seed=5, image_size=32).state_dict().items()}
    snapshot = {name: array.copy() for name, array in params.items()}
    model = VaeModel(params, 2, 32)
    model.state_dict()["mu_head.bias"][:] = 7.0
    result = train(model, small_images, TrainConfig(epochs=1, batch_size=3), seed=0)

    for name, array in params.items():
        assert np.array_equal(array, snapshot[name])
    assert not np.array_equal(result.model.state_dict()["encoder.conv1.weight"], params["encoder.conv1.weight"])


def test_load_state_dict(small_model):
    other = VaeModel.initialize(seed=12, latent_dim=2, image_size=32)
    small_model.load_state_dict(other.state_dict())
    for name, array in other.state_dict().items():
        assert np.array_equal(small_model.state_dict()[name], array)
    with pytest.raises(ArtifactMismatch):
        small_model.load_state_dict(VaeModel.initialize(seed=0, latent_dim=3, image_size=32).state_dict())
    assert small_model.parameter_count() == sum(a.size for a in other.state_dict().values())


def test_astype_copies(small_model):
    wide = small_model.astype(np.float64)
    assert wide.dtype == np.float64
    assert small_model.dtype == np.float32
    np.testing.assert_array_equal(wide.state_dict()["encoder.conv1.weight"], small_model.state_dict()["encoder.conv1.weight"])


# ==================== 编码 / 解码 ====================


def test_encode_is_deterministic(small_model, small_images):
    first, _ = encode(small_model, small_images)
    second, _ = encode(small_model, small_images)
    assert np.array_equal(first.data, second.data)


def test_identical_images_give_identical_rows(small_model, small_images):
    batch = np.stack([small_images[0], small_images[0]])
    mu, logvar = encode(small_model, batch)
    np.testing.assert_allclose(mu.data[1], mu.data[0], rtol=1e-6, atol=1e-7)
    np.testing.assert_allclose(logvar.data[1], logvar.data[0], rtol=1e-6, atol=1e-7)


def test_zero_input_gives_zero_mu(small_model):
    mu, _ = encode(small_model, np.zeros((3, 1, 32, 32), dtype=np.float32))
    np.testing.assert_array_equal(mu.data, small_model.state_dict()["mu_head.bias"][None, :].repeat(3, axis=0))
    assert np.all(mu.data == 0)


def test_logvar_is_clamped(small_model):
    small_model.state_dict()["logvar_head.bias"][:] = 50.0
    _, logvar = encode(small_model, np.zeros((1, 1, 32, 32)))
    assert np.all(logvar.data == small_model.logvar_clamp)


def test_decoder_output_in_unit_interval(small_model, rng):
    out = decode(small_model, rng.standard_normal((4, 2)) * 5).data
    assert out.shape == (4, 1, 32, 32)
    assert np.all((out >= 0) & (out <= 1))


def test_reparameterize_examples():
    mu = tensor([[0.5, -1.0]])
    assert np.array_equal(reparameterize(mu, tensor([[2.0, -3.0]]), np.zeros((1, 2))).data, mu.data)
    z = reparameterize(mu, tensor([[0.0, 0.0]]), np.array([[1.0, 2.0]]))
    np.testing.assert_allclose(z.data, [[1.5, 1.0]])
    with pytest.raises(ShapeMismatch):
        reparameterize(mu, tensor([[0.0, 0.0]]), np.zeros((2, 2)))


@pytest.mark.parametrize("mu, logvar", [
    ([3.0, -4.0], [0.5, -1.0]),
    ([-2.5, 5.0], [1.5, 0.0]),
])
def test_reparameterize_moments(mu, logvar):
    n = 10 ** 6
    noise = np.random.default_rng(2024).standard_normal((n, 2))
    z = reparameterize(tensor(np.tile(mu, (n, 1))), tensor(np.tile(logvar, (n, 1))), noise).data
    np.testing.assert_allclose(z.mean(axis=0), mu, rtol=0.01)
    np.testing.assert_allclose(z.var(axis=0), np.exp(logvar), rtol=0.01)


def test_sample_latent(small_model, small_images):
    mean_code = sample_latent(small_model, small_images)
    np.testing.assert_array_equal(mean_code.z, mean_code.mu)
    assert np.all(np.abs(mean_code.logvar) <= small_model.logvar_clamp)

    noise = np.ones((6, 2), dtype=np.float32)
    code = sample_latent(small_model, small_images, noise)
    np.testing.assert_allclose(code.z, code.mu + np.exp(0.5 * code.logvar), rtol=1e-5, atol=1e-6)


def test_latent_code_shapes_must_agree():
    with pytest.raises(ValueError):
        LatentCode(mu=np.zeros((2, 2)), logvar=np.zeros((2, 2)), z=np.zeros((3, 2)))


# ==================== 损失 ====================


@pytest.mark.parametrize("mu, logvar, expected", [
    ([0.0, 0.0], [0.0, 0.0], 0.0),
    ([1.0, 0.0], [0.0, 0.0], 0.5),
    ([0.0, 0.0], [math.log(4), 0.0], 0.5 * (4 - 1 - math.log(4))),
])
def test_kl_examples(mu, logvar, expected):
    value = kl_divergence(tensor([mu]), tensor([logvar])).data[0]
    assert value == pytest.approx(expected, abs=1e-12)


def test_kl_matches_monte_carlo():
    rng = np.random.default_rng(42)
    for _ in range(10):
        mu = rng.uniform(-1, 1, 2)
        logvar = rng.uniform(-1, 1, 2)
        sigma = np.exp(0.5 * logvar)
        z = mu + sigma * rng.standard_normal((10 ** 6, 2))
        log_q = -0.5 * np.sum(logvar + ((z - mu) / sigma) ** 2, axis=1)
        log_p = -0.5 * np.sum(z ** 2, axis=1)
        estimate = float(np.mean(log_q - log_p))
        closed = kl_divergence(tensor([mu]), tensor([logvar])).data[0]
        assert abs(closed - estimate) < 1e-2


def test_kl_non_negative(rng):
    for _ in range(100):
        mu = Tensor(rng.standard_normal((8, 2)).astype(np.float32))
        logvar = Tensor(rng.uniform(-10, 10, (8, 2)).astype(np.float32))
        assert np.all(kl_divergence(mu, logvar).data >= 0)


def test_reconstruction_error_examples():
    x = np.zeros((1, 1, 64, 64))
    assert reconstruction_error(x, tensor(x)).data[0] == 0
    assert reconstruction_error(np.ones_like(x), tensor(x)).data[0] == 1
    single = x.copy()
    single[0, 0, 0, 0] = 1
    assert reconstruction_error(single, tensor(x)).data[0] == pytest.approx(1 / 4096)


def test_loss_total_is_sum_of_parts(small_model, small_images, rng):
    breakdown, total = loss(small_model, small_images, rng.standard_normal((6, 2)))
    assert breakdown.kl >= 0
    assert breakdown.total == pytest.approx(breakdown.reconstruction + breakdown.kl, abs=1e-6)
    assert total.item() == pytest.approx(breakdown.total, rel=1e-5)


def test_loss_gradients_match_finite_difference(small_model, small_images):
    model = small_model.astype(np.float64)
    x = small_images[:2].astype(np.float64)
    noise = np.random.default_rng(3).standard_normal((2, 2))

    model.zero_grad()
    _, total = loss(model, x, noise)
    total.backward()

    rng = np.random.default_rng(9)
    params = model.parameters()
    names = list(params)
    errors = []
    for _ in range(20):
        name = names[rng.integers(len(names))]
        param = params[name]
        index = tuple(int(rng.integers(dim)) for dim in param.shape)
        numeric = numerical_gradient(lambda: loss(model, x, noise)[1].item(), param.data, h=1e-6, indices=[index])
        errors.append(relative_error(param.grad[index], numeric[index], floor=1e-7))
    errors = np.array(errors)
    assert errors.max() < 1e-3


# ==================== 训练 ====================


def scalogram_batch(dataset, copies, image_size=32):
    image = scalogram_pipeline(dataset.signals[0], WaveletBasis(), log_scale_grid(2, 64, 32), image_size)
    return as_image_batch([image] * copies)


def test_training_memorizes_single_scalogram(small_dataset):
    model = VaeModel.initialize(seed=1, image_size=32)
    images = scalogram_batch(small_dataset, 64)
    result = train(model, images, TrainConfig(epochs=30, batch_size=8), seed=2)
    assert len(result.history) == 30
    assert result.history[-1].total < 0.1 * result.history[0].total
    assert result.adam_state.step_count == 30 * 8


def test_training_is_deterministic(small_dataset):
    images = scalogram_batch(small_dataset, 10)
    config = TrainConfig(epochs=2, batch_size=4)
    first = train(VaeModel.initialize(seed=4, image_size=32), images, config, seed=8)
    second = train(VaeModel.initialize(seed=4, image_size=32), images, config, seed=8)
    assert [item.total for item in first.history] == [item.total for item in second.history]
    for name, array in first.model.state_dict().items():
        assert np.array_equal(array, second.model.state_dict()[name])


def test_zero_epochs_leaves_model_unchanged(small_model, small_images):
    before = {name: array.copy() for name, array in small_model.state_dict().items()}
    result = train(small_model, small_images, TrainConfig(epochs=0), seed=0)
    assert result.history == []
    for name, array in result.model.state_dict().items():
        assert np.array_equal(array, before[name])


def test_empty_dataset_rejected(small_model):
    with pytest.raises(EmptyDataset):
        train(small_model, np.zeros((0, 1, 32, 32)), TrainConfig(epochs=1), seed=0)

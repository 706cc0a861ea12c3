import pytest

from app.core.config import RunConfig, dump_run_config, load_run_config, parse_config_file
from app.core.exception import EXIT_BAD_INPUT, EXIT_NUMERICAL, EXIT_UNEXPECTED, ConfigError, InvalidEncoding, NonFiniteLoss
from app.core.exception_handlers import handle_exception


def write_config(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


# ==================== 优先级 ====================


def test_defaults():
    config = load_run_config()
    assert config.epochs == 50
    assert config.image_size == 64
    assert config.threshold_names == ["p99", "max"]
    assert config.checkpoint is None


def test_precedence(tmp_path, monkeypatch):
    monkeypatch.setenv("GWVAE_EPOCHS", "7")
    monkeypatch.setenv("GWVAE_BATCH_SIZE", "9")
    assert load_run_config().epochs == 7

    path = write_config(tmp_path / "run.cfg", "# 注释\n\nepochs = 11\nlatent_dim=3\n")
    config = load_run_config(path)
    assert config.epochs == 11
    assert config.batch_size == 9
    assert config.latent_dim == 3

    config = load_run_config(path, {"epochs": 13})
    assert config.epochs == 13
    assert config.latent_dim == 3


def test_dotenv_file(tmp_path):
    # isolated_env 已切换到 tmp_path
    (tmp_path / ".env").write_text("GWVAE_SEED=42\n", encoding="utf-8")
    assert load_run_config().seed == 42


# ==================== 错误 ====================


def test_unknown_key_in_file(tmp_path):
    path = write_config(tmp_path / "run.cfg", "epochs=1\nwarp_speed=9\n")
    with pytest.raises(ConfigError, match="warp_speed"):
        parse_config_file(path)


def test_missing_equals(tmp_path):
    path = write_config(tmp_path / "run.cfg", "epochs 1\n")
    with pytest.raises(ConfigError):
        load_run_config(path)


def test_unknown_override():
    with pytest.raises(ConfigError):
        load_run_config(None, {"warp_speed": 9})


@pytest.mark.parametrize("overrides", [
    {"thresholds": "p95"},
    {"thresholds": ""},
    {"image_size": 16},
    {"threads": 0},
    {"inference_mode": "median"},
    {"seed": -1},
])
def test_invalid_values(overrides):
    with pytest.raises(ConfigError):
        load_run_config(None, overrides)


def test_threshold_names_normalized():
    assert load_run_config(None, {"thresholds": " max , p99"}).threshold_names == ["max", "p99"]


@pytest.mark.parametrize("exc, code", [
    (InvalidEncoding(), EXIT_BAD_INPUT),
    (UnicodeDecodeError("utf-8", b"\xff", 0, 1, "invalid start byte"), EXIT_BAD_INPUT),
    (FileNotFoundError("nope.gws"), EXIT_BAD_INPUT),
    (NonFiniteLoss(1, 2), EXIT_NUMERICAL),
    (RuntimeError("boom"), EXIT_UNEXPECTED),
])
def test_exit_codes(exc, code):
    assert handle_exception(exc) == code


# ==================== 回写 ====================


def test_dump_and_reload(tmp_path):
    config = load_run_config(None, {
        "seed": 2 ** 64 - 1,
        "learning_rate": 0.1 + 0.2,
        "write_pgm": False,
        "checkpoint": "model/checkpoint.vae",
        "thresholds": "max",
    })
    path = dump_run_config(config, tmp_path / "echo" / "train_config.cfg")
    text = path.read_text(encoding="utf-8")
    assert text.startswith("# resolved configuration\n")
    assert "write_pgm=false\n" in text
    assert "log_file=\n" in text

    reloaded = load_run_config(str(path))
    assert reloaded == config
    assert reloaded.learning_rate == 0.1 + 0.2


def test_empty_path_values_are_unset(tmp_path):
    path = write_config(tmp_path / "run.cfg", "checkpoint=\ninput=  \n")
    config = load_run_config(path)
    assert config.checkpoint is None
    assert config.input is None


def test_run_config_forbids_extra_fields():
    with pytest.raises(ValueError):
        RunConfig(warp_speed=9)

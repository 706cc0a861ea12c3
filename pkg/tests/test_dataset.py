import struct

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import stats

from app.core.exception import (
    EXIT_BAD_INPUT,
    BadMagic,
    EmptyDataset,
    InsufficientSamples,
    InvalidEncoding,
    LengthMismatch,
    ParseError,
    RaggedRows,
    TruncatedFile,
)
from app.crud.dataset_crud import dataset_crud
from app.schemas.dataset_schema import Dataset, SplitSpec, SynthConfig
from app.schemas.signal_schema import Signal, SignalLabel
from app.service.synth_service import split, synthesize, tone_burst
from main import main


def random_dataset(seed):
    rng = np.random.default_rng(seed)
    n_signals = int(rng.integers(0, 6))
    n_samples = int(rng.integers(1, 64))
    labels = list(SignalLabel)
    signals = [
        Signal(
            id=f"sig-{seed}-{i}-信号",
            samples=rng.standard_normal(n_samples) * 10 ** rng.uniform(-3, 3),
            sample_rate=500e3,
            label=labels[int(rng.integers(len(labels)))],
        )
        for i in range(n_signals)
    ]
    return Dataset(signals=signals, sample_rate=500e3)


def assert_same_signals(a, b):
    assert a.sample_rate == b.sample_rate
    assert len(a.signals) == len(b.signals)
    for left, right in zip(a.signals, b.signals):
        assert left.id == right.id
        assert left.label == right.label
        assert left.samples.tobytes() == right.samples.tobytes()


# ==================== 合成数据 ====================


def test_tone_burst_shape():
    burst = tone_burst(100e3, 5, 1e6)
    assert burst.shape == (50,)
    assert burst[0] == 0 and burst[-1] == pytest.approx(0, abs=1e-12)
    assert np.max(np.abs(burst)) <= 1


def test_synthesize_counts_and_ids(small_dataset):
    assert small_dataset.count_by_label() == {"baseline": 12, "damage": 6, "unknown": 0}
    assert small_dataset.signals[0].id == "baseline-00000"
    assert small_dataset.signals[-1].id == "damage-00005"
    assert small_dataset.n_samples == 256


def test_synthesize_deterministic_without_noise():
    config = SynthConfig(n_baseline=5, n_damage=5, n_samples=512, noise_sigma=0, seed=9)
    assert_same_signals(synthesize(config), synthesize(config))


def test_synthesize_deterministic_with_noise(small_synth_config):
    assert_same_signals(synthesize(small_synth_config), synthesize(small_synth_config))


def test_degenerate_damage_matches_baseline():
    # 无散射回波且不衰减时，同一随机流下损伤信号与对应的基线信号分布相同
    config = SynthConfig(n_baseline=4, n_damage=4, n_samples=1024, damage_echo_amplitude=0, damage_attenuation=0, seed=1)
    degenerate = synthesize(config)
    relabeled = synthesize(config.model_copy(update={"n_baseline": 8, "n_damage": 0}))
    for left, right in zip(degenerate.signals, relabeled.signals):
        assert np.array_equal(left.samples, right.samples)


def test_damage_energy_differs_from_baseline():
    dataset = synthesize(SynthConfig(n_baseline=200, n_damage=200, seed=7))
    energy = {
        label: [float(np.mean(signal.samples.astype(np.float64) ** 2)) for signal in dataset.by_label(label)]
        for label in (SignalLabel.BASELINE, SignalLabel.DAMAGE)
    }
    _, p_value = stats.ttest_ind(energy[SignalLabel.DAMAGE], energy[SignalLabel.BASELINE], equal_var=False)
    assert p_value < 0.01


def test_generated_signals_are_bounded():
    dataset = synthesize(SynthConfig(n_baseline=50, n_damage=50, noise_sigma=0.05, seed=3))
    for signal in dataset.signals:
        assert np.all(np.isfinite(signal.samples))
        assert np.max(np.abs(signal.samples)) <= 2.0


def test_invalid_synth_configs():
    with pytest.raises(ValidationError):
        SynthConfig(n_baseline=0, n_damage=0)
    with pytest.raises(ValidationError):
        SynthConfig(excitation_freqs=[600e3])


# ==================== 划分 ====================


def test_split_partitions(small_dataset):
    train, test = split(small_dataset, SplitSpec(n_train_baseline=8, n_test_baseline=4, n_test_damage=5, seed=2))
    assert len(train.signals) == 8
    assert all(signal.label == SignalLabel.BASELINE for signal in train.signals)
    assert not {s.id for s in train.signals} & {s.id for s in test.signals}
    assert test.count_by_label() == {"baseline": 4, "damage": 5, "unknown": 0}
    assert train.metadata["partition"] == "train"
    assert test.metadata["split_seed"] == "2"


def test_split_deterministic_per_seed():
    dataset = synthesize(SynthConfig(n_baseline=60, n_damage=30, n_samples=64, seed=0))
    spec = SplitSpec(n_train_baseline=30, n_test_baseline=10, n_test_damage=10, seed=5)
    ids = lambda part: [signal.id for signal in part.signals]
    first_train, first_test = split(dataset, spec)
    again_train, again_test = split(dataset, spec)
    assert ids(first_train) == ids(again_train) and ids(first_test) == ids(again_test)
    other_train, _ = split(dataset, spec.model_copy(update={"seed": 6}))
    assert ids(other_train) != ids(first_train)


def test_split_insufficient(small_dataset):
    with pytest.raises(InsufficientSamples):
        split(small_dataset, SplitSpec(n_train_baseline=10, n_test_baseline=3, n_test_damage=1))
    with pytest.raises(InsufficientSamples):
        split(small_dataset, SplitSpec(n_train_baseline=1, n_test_baseline=1, n_test_damage=7))


# ==================== GWS1 ====================


def test_round_trip_small_dataset(tmp_path, small_dataset):
    path = dataset_crud.save_dataset(small_dataset, tmp_path / "corpus.gws")
    assert_same_signals(dataset_crud.load_dataset(path), small_dataset)


@pytest.mark.parametrize("seed", range(50))
def test_round_trip_random_datasets(seed):
    dataset = random_dataset(seed)
    assert_same_signals(dataset_crud.decode(dataset_crud.encode(dataset)), dataset)


def test_header_layout(small_dataset):
    data = dataset_crud.encode(small_dataset)
    assert data[:4] == b"GWS1"
    assert struct.unpack("<IIIf", data[4:20]) == (1, 18, 256, 1e6)
    # 第一条信号：标签字节 + u16 长度 + id
    assert data[20] == 0
    assert struct.unpack("<H", data[21:23])[0] == len("baseline-00000")


def test_corrupted_magic(small_dataset):
    data = bytearray(dataset_crud.encode(small_dataset))
    data[0:4] = b"GWSX"
    with pytest.raises(BadMagic):
        dataset_crud.decode(bytes(data))


def test_missing_signal_is_truncation():
    signals = [Signal(id=f"s{i}", samples=np.ones(8), sample_rate=1e6) for i in range(4)]
    data = bytearray(dataset_crud.encode(Dataset(signals=signals, sample_rate=1e6)))
    data[8:12] = struct.pack("<I", 5)
    with pytest.raises(TruncatedFile):
        dataset_crud.decode(bytes(data))


def test_short_file_is_truncation():
    with pytest.raises(TruncatedFile):
        dataset_crud.decode(b"GW")


def test_trailing_bytes_rejected(small_dataset):
    with pytest.raises(LengthMismatch):
        dataset_crud.decode(dataset_crud.encode(small_dataset) + b"\x00")


def test_mixed_lengths_rejected():
    with pytest.raises(ValidationError):
        Dataset(signals=[
            Signal(id="a", samples=np.ones(4), sample_rate=1e6),
            Signal(id="b", samples=np.ones(5), sample_rate=1e6),
        ], sample_rate=1e6)



def test_invalid_utf8_id(tmp_path):
    signals = [Signal(id="ab", samples=np.ones(4), sample_rate=1e6)]
    data = bytearray(dataset_crud.encode(Dataset(signals=signals, sample_rate=1e6)))
    # 头部 20 字节，标签 1 字节，u16 长度 2 字节，之后是 id
    data[23:25] = b"\xff\xfe"
    with pytest.raises(InvalidEncoding):
        dataset_crud.decode(bytes(data))

    path = tmp_path / "corrupt.gws"
    path.write_bytes(bytes(data))
    assert main(["split", "--input", str(path), "--out", str(tmp_path / "split")]) == EXIT_BAD_INPUT


# ==================== CSV 导入 ====================


def test_import_csv(tmp_path):
    path = tmp_path / "plate.csv"
    path.write_text("1,2,3,4\n\n5,6,7,1e-3\n", encoding="utf-8")
    dataset = dataset_crud.import_csv(path, 1e6, SignalLabel.DAMAGE)
    assert len(dataset.signals) == 2
    assert dataset.n_samples == 4
    assert dataset.signals[1].samples[3] == np.float32(0.001)
    assert [s.id for s in dataset.signals] == ["plate-00000", "plate-00001"]
    assert all(s.label == SignalLabel.DAMAGE for s in dataset.signals)


def test_import_csv_ragged(tmp_path):
    path = tmp_path / "ragged.csv"
    path.write_text("1,2,3\n4,5,6\n7,8\n", encoding="utf-8")
    with pytest.raises(RaggedRows) as excinfo:
        dataset_crud.import_csv(path, 1e6, SignalLabel.UNKNOWN)
    assert excinfo.value.row == 3


@pytest.mark.parametrize("cell", ["abc", "nan", "inf"])
def test_import_csv_parse_error(tmp_path, cell):
    path = tmp_path / "bad.csv"
    path.write_text(f"1,2\n3,{cell}\n", encoding="utf-8")
    with pytest.raises(ParseError) as excinfo:
        dataset_crud.import_csv(path, 1e6, SignalLabel.UNKNOWN)
    assert (excinfo.value.row, excinfo.value.column) == (2, 2)


def test_import_csv_empty(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("\n\n", encoding="utf-8")
    with pytest.raises(EmptyDataset):
        dataset_crud.import_csv(path, 1e6, SignalLabel.UNKNOWN)


def test_import_csv_strips_bom(tmp_path):
    path = tmp_path / "excel.csv"
    path.write_text("\ufeff1,2\n3,4\n", encoding="utf-8")
    dataset = dataset_crud.import_csv(path, 1e6, SignalLabel.UNKNOWN)
    np.testing.assert_array_equal(dataset.signals[0].samples, [1, 2])


@pytest.mark.parametrize("cell", ["1_000", "0x10", "1e", "--1", "1.2.3"])
def test_import_csv_rejects_non_decimal(tmp_path, cell):
    path = tmp_path / "bad.csv"
    path.write_text(f"{cell},2\n3,4\n", encoding="utf-8")
    with pytest.raises(ParseError) as excinfo:
        dataset_crud.import_csv(path, 1e6, SignalLabel.UNKNOWN)
    assert (excinfo.value.row, excinfo.value.column) == (1, 1)


def test_import_csv_accepts_decimal_forms(tmp_path):
    path = tmp_path / "forms.csv"
    path.write_text(".5,-2.,+3E2, 7 \n", encoding="utf-8")
    dataset = dataset_crud.import_csv(path, 1e6, SignalLabel.UNKNOWN)
    np.testing.assert_array_equal(dataset.signals[0].samples, np.array([0.5, -2.0, 300.0, 7.0], dtype=np.float32))


def test_import_csv_invalid_utf8(tmp_path):
    path = tmp_path / "latin1.csv"
    path.write_bytes(b"1,2\n3,\xe9\n")
    with pytest.raises(InvalidEncoding):
        dataset_crud.import_csv(path, 1e6, SignalLabel.UNKNOWN)

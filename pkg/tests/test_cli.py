import csv

import pytest

from app.core.exception import EXIT_ARTIFACT_MISMATCH, EXIT_BAD_INPUT, EXIT_OK
from app.crud.dataset_crud import dataset_crud
from app.crud.report_crud import report_crud
from main import build_parser, main


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


# ==================== 参数与退出码 ====================


def test_no_command_is_bad_input():
    assert main([]) == EXIT_BAD_INPUT


def test_unknown_flag_exits_with_usage_error():
    with pytest.raises(SystemExit) as excinfo:
        main(["synth", "--warp-speed", "9"])
    assert excinfo.value.code == 2


def test_all_commands_registered():
    parser = build_parser()
    for command in ["synth", "split", "import-csv", "cwt", "train", "detect", "latent"]:
        args = parser.parse_args([command])
        assert args.command == command
        assert callable(args.handler)


def test_unset_flags_do_not_override_config():
    args = build_parser().parse_args(["train", "--epochs", "3"])
    assert args.epochs == 3
    assert not hasattr(args, "batch_size")


def test_synth_rejects_empty_corpus(tmp_path):
    assert main(["synth", "--n-baseline", "0", "--n-damage", "0", "--out", str(tmp_path / "c.gws")]) == EXIT_BAD_INPUT


def test_cwt_requires_input(tmp_path):
    assert main(["cwt", "--out", str(tmp_path)]) == EXIT_BAD_INPUT


def test_missing_input_file(tmp_path):
    assert main(["split", "--input", str(tmp_path / "nope.gws"), "--out", str(tmp_path)]) == EXIT_BAD_INPUT


def test_bad_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("warp_speed=9\n", encoding="utf-8")
    assert main(["synth", "--config", str(path), "--out", str(tmp_path / "c.gws")]) == EXIT_BAD_INPUT


# ==================== synth / import-csv ====================


def test_synth_is_reproducible(tmp_path):
    flags = ["synth", "--n-baseline", "3", "--n-damage", "2", "--n-samples", "128", "--seed", "5"]
    assert main(flags + ["--out", str(tmp_path / "a.gws")]) == EXIT_OK
    assert main(flags + ["--out", str(tmp_path / "b.gws")]) == EXIT_OK
    assert (tmp_path / "a.gws").read_bytes() == (tmp_path / "b.gws").read_bytes()

    dataset = dataset_crud.load_dataset(tmp_path / "a.gws")
    assert dataset.count_by_label() == {"baseline": 3, "damage": 2, "unknown": 0}
    assert dataset.n_samples == 128
    assert (tmp_path / "synth_config.cfg").exists()


def test_synth_out_directory(tmp_path):
    assert main(["synth", "--n-baseline", "1", "--n-damage", "1", "--n-samples", "64", "--out", str(tmp_path / "run")]) == EXIT_OK
    assert (tmp_path / "run" / "corpus.gws").exists()


def test_import_csv(tmp_path):
    source = tmp_path / "plate.csv"
    source.write_text("0.1,0.2,0.3\n0.4,0.5,0.6\n", encoding="utf-8")
    code = main([
        "import-csv", "--input", str(source), "--label", "baseline",
        "--sample-rate", "500000", "--out", str(tmp_path / "plate.gws"),
    ])
    assert code == EXIT_OK
    dataset = dataset_crud.load_dataset(tmp_path / "plate.gws")
    assert dataset.sample_rate == 500000
    assert dataset.count_by_label()["baseline"] == 2


# ==================== 完整流水线 ====================


@pytest.fixture
def pipeline(tmp_path):
    """小规模走通 synth → split → cwt → train，返回各阶段目录"""
    config = tmp_path / "run.cfg"
    config.write_text("image_size=32\nn_scales=16\nscale_max=32\nn_samples=256\nseed=3\n", encoding="utf-8")
    common = ["--config", str(config)]

    assert main(["synth", *common, "--n-baseline", "12", "--n-damage", "6", "--out", str(tmp_path / "corpus.gws")]) == EXIT_OK
    assert main([
        "split", *common, "--input", str(tmp_path / "corpus.gws"),
        "--n-train-baseline", "8", "--n-test-baseline", "4", "--n-test-damage", "6",
        "--out", str(tmp_path / "split"),
    ]) == EXIT_OK
    for part in ("train", "test"):
        assert main([
            "cwt", *common, "--input", str(tmp_path / "split" / f"{part}.gws"),
            "--threads", "2", "--out", str(tmp_path / f"{part}_cwt"),
        ]) == EXIT_OK
    assert main([
        "train", *common, "--manifest", str(tmp_path / "train_cwt" / "manifest.csv"),
        "--epochs", "2", "--batch-size", "4", "--out", str(tmp_path / "model"),
    ]) == EXIT_OK
    return tmp_path, common


def test_pipeline_artifacts(pipeline):
    root, _ = pipeline
    assert len(read_csv(root / "train_cwt" / "manifest.csv")) == 8
    assert len(read_csv(root / "test_cwt" / "manifest.csv")) == 10
    assert len(list((root / "test_cwt" / "pgm").glob("*.pgm"))) == 10

    model_dir = root / "model"
    for name in ["checkpoint.vae", "checkpoint.opt", "train_config.cfg"]:
        assert (model_dir / name).exists()
    assert len(read_csv(model_dir / "loss_history.csv")) == 2
    assert len(read_csv(model_dir / "training_errors.csv")) == 8
    thresholds = report_crud.read_thresholds(model_dir / "thresholds.csv")
    assert thresholds.p99 <= thresholds.max


def test_detect_and_latent(pipeline):
    root, common = pipeline
    checkpoint = str(root / "model" / "checkpoint.vae")
    detect = ["detect", *common, "--manifest", str(root / "test_cwt" / "manifest.csv"), "--checkpoint", checkpoint]

    assert main(detect + ["--batch-size", "4", "--out", str(root / "detect")]) == EXIT_OK
    verdicts = read_csv(root / "detect" / "verdicts.csv")
    assert len(verdicts) == 10
    assert set(verdicts[0]) == {"id", "label", "error", "verdict_p99", "verdict_max"}
    metrics = {row["threshold"]: row for row in read_csv(root / "detect" / "metrics.csv")}
    assert set(metrics) == {"p99", "max"}
    for row in metrics.values():
        assert sum(int(row[key]) for key in ("tp", "fp", "tn", "fn")) == 10
    assert (root / "detect" / "detect_config.cfg").exists()

    # 相同种子与批大小下重复检测结果一致
    assert main(detect + ["--batch-size", "4", "--out", str(root / "again")]) == EXIT_OK
    assert (root / "again" / "verdicts.csv").read_bytes() == (root / "detect" / "verdicts.csv").read_bytes()

    assert main(["latent", *common, "--manifest", str(root / "test_cwt" / "manifest.csv"),
                 "--checkpoint", checkpoint, "--out", str(root / "latent")]) == EXIT_OK
    latent = report_crud.read_latent(root / "latent" / "latent.csv")
    assert len(latent) == 10
    assert all(len(row.mu) == 2 for row in latent)


def test_training_set_is_healthy_under_max(pipeline):
    root, common = pipeline
    # 与训练阶段相同的种子、批大小和推理方式，误差逐一重现
    code = main([
        "detect", *common, "--manifest", str(root / "train_cwt" / "manifest.csv"),
        "--checkpoint", str(root / "model" / "checkpoint.vae"),
        "--batch-size", "4", "--thresholds", "max", "--out", str(root / "self"),
    ])
    assert code == EXIT_OK
    verdicts = read_csv(root / "self" / "verdicts.csv")
    assert set(verdicts[0]) == {"id", "label", "error", "verdict_max"}
    assert all(row["verdict_max"] == "healthy" for row in verdicts)


def test_resume_training(pipeline):
    root, common = pipeline
    code = main([
        "train", *common, "--manifest", str(root / "train_cwt" / "manifest.csv"),
        "--checkpoint", str(root / "model" / "checkpoint.vae"),
        "--epochs", "1", "--batch-size", "4", "--out", str(root / "resumed"),
    ])
    assert code == EXIT_OK
    assert len(read_csv(root / "resumed" / "loss_history.csv")) == 1


def test_train_rejects_damage_samples(pipeline):
    root, common = pipeline
    code = main([
        "train", *common, "--manifest", str(root / "test_cwt" / "manifest.csv"),
        "--epochs", "1", "--out", str(root / "bad"),
    ])
    assert code == EXIT_BAD_INPUT


def test_detect_artifact_mismatches(pipeline):
    root, common = pipeline
    checkpoint = str(root / "model" / "checkpoint.vae")

    broken = root / "broken_thresholds.csv"
    broken.write_text("name,value\np99,2.0\nmax,1.0\n", encoding="utf-8")
    code = main([
        "detect", *common, "--manifest", str(root / "test_cwt" / "manifest.csv"), "--checkpoint", checkpoint,
        "--thresholds-file", str(broken), "--out", str(root / "d1"),
    ])
    assert code == EXIT_ARTIFACT_MISMATCH

    # 64×64 时频图与 32×32 模型不匹配
    assert main([
        "cwt", *common, "--input", str(root / "split" / "test.gws"), "--image-size", "64",
        "--no-write-pgm", "--out", str(root / "cwt64"),
    ]) == EXIT_OK
    assert not (root / "cwt64" / "pgm").exists()
    code = main([
        "detect", *common, "--manifest", str(root / "cwt64" / "manifest.csv"), "--checkpoint", checkpoint,
        "--out", str(root / "d2"),
    ])
    assert code == EXIT_ARTIFACT_MISMATCH


def test_cwt_single_scale(tmp_path):
    corpus = str(tmp_path / "c.gws")
    assert main(["synth", "--n-baseline", "2", "--n-damage", "1", "--n-samples", "128", "--out", corpus]) == EXIT_OK
    code = main([
        "cwt", "--input", corpus, "--n-scales", "1", "--scale-min", "4", "--scale-max", "4",
        "--image-size", "32", "--out", str(tmp_path / "cwt"),
    ])
    assert code == EXIT_OK
    assert len(read_csv(tmp_path / "cwt" / "manifest.csv")) == 3

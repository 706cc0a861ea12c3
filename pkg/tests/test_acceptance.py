"""
默认规模的端到端验收（耗时数分钟，需 --runslow）
"""

import csv

import pytest

from app.core.exception import EXIT_OK
from app.crud.report_crud import report_crud
from app.service.anomaly_service import latent_separation
from main import main


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


@pytest.mark.slow
def test_synthetic_end_to_end(tmp_path):
    common = ["--seed", "7", "--threads", "4"]
    corpus = str(tmp_path / "corpus.gws")
    steps = [
        ["synth", *common, "--n-baseline", "640", "--n-damage", "128", "--out", corpus],
        ["split", *common, "--input", corpus, "--out", str(tmp_path / "split")],
        ["cwt", *common, "--input", str(tmp_path / "split" / "train.gws"), "--no-write-pgm", "--out", str(tmp_path / "cwt_train")],
        ["cwt", *common, "--input", str(tmp_path / "split" / "test.gws"), "--no-write-pgm", "--out", str(tmp_path / "cwt_test")],
        ["train", *common, "--manifest", str(tmp_path / "cwt_train" / "manifest.csv"), "--out", str(tmp_path / "model")],
    ]
    checkpoint = str(tmp_path / "model" / "checkpoint.vae")
    test_manifest = str(tmp_path / "cwt_test" / "manifest.csv")
    steps += [
        ["detect", *common, "--manifest", test_manifest, "--checkpoint", checkpoint, "--out", str(tmp_path / "detect")],
        ["latent", *common, "--manifest", test_manifest, "--checkpoint", checkpoint, "--out", str(tmp_path / "latent")],
    ]
    for argv in steps:
        assert main(argv) == EXIT_OK, argv[0]

    history = [float(row["total"]) for row in read_csv(tmp_path / "model" / "loss_history.csv")]
    assert len(history) == 50
    assert history[-1] < 0.5 * history[0]

    metrics = {row["threshold"]: row for row in read_csv(tmp_path / "detect" / "metrics.csv")}
    for row in metrics.values():
        assert sum(int(row[key]) for key in ("tp", "fp", "tn", "fn")) == 256
    assert float(metrics["max"]["accuracy"]) >= 0.9
    assert float(metrics["p99"]["fpr"]) <= 0.1
    assert float(metrics["max"]["fpr"]) <= float(metrics["p99"]["fpr"])

    distance, pooled_std = latent_separation(report_crud.read_latent(tmp_path / "latent" / "latent.csv"))
    assert distance > pooled_std

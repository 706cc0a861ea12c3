"""
端到端运行合成数据流水线
synth → split → cwt（训练 / 测试）→ train → detect → latent，产物全部写入同一目录
"""

import argparse
import csv
import logging
import sys
from pathlib import Path

# 添加项目根目录到路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from main import main as run_command
from app.core.exception import EXIT_OK
from app.crud.report_crud import report_crud
from app.service.anomaly_service import latent_separation

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)
logger = logging.getLogger(__name__)


def run_step(name: str, argv: list):
    logger.info(f"===== {name} =====")
    code = run_command(argv)
    if code != EXIT_OK:
        raise RuntimeError(f"步骤 {name} 失败，退出码 {code}")


def run_pipeline(out: Path, seed: int, epochs: int, threads: int):
    """
    依次执行全部子命令并汇总验收指标

    Args:
        out: 输出根目录
        seed: 随机种子
        epochs: 训练轮数
        threads: CWT 与推理线程数
    """
    common = ["--seed", str(seed), "--threads", str(threads)]
    corpus = out / "corpus.gws"
    run_step("synth", ["synth", *common, "--n-baseline", "640", "--n-damage", "128", "--out", str(corpus)])
    run_step("split", ["split", *common, "--input", str(corpus), "--out", str(out / "split")])
    run_step("cwt-train", ["cwt", *common, "--input", str(out / "split" / "train.gws"), "--out", str(out / "cwt_train")])
    run_step("cwt-test", ["cwt", *common, "--input", str(out / "split" / "test.gws"), "--out", str(out / "cwt_test")])
    run_step("train", [
        "train", *common, "--manifest", str(out / "cwt_train" / "manifest.csv"),
        "--epochs", str(epochs), "--out", str(out / "model"),
    ])
    checkpoint = str(out / "model" / "checkpoint.vae")
    test_manifest = str(out / "cwt_test" / "manifest.csv")
    run_step("detect", ["detect", *common, "--manifest", test_manifest, "--checkpoint", checkpoint, "--out", str(out / "detect")])
    run_step("latent", ["latent", *common, "--manifest", test_manifest, "--checkpoint", checkpoint, "--out", str(out / "latent")])

    with (out / "model" / "loss_history.csv").open(newline="", encoding="utf-8") as f:
        history = [float(row["total"]) for row in csv.DictReader(f)]
    with (out / "detect" / "metrics.csv").open(newline="", encoding="utf-8") as f:
        metrics = {row["threshold"]: row for row in csv.DictReader(f)}
    distance, pooled_std = latent_separation(report_crud.read_latent(out / "latent" / "latent.csv"))

    print("=" * 60)
    if history:
        print(f"损失: 第 1 轮 {history[0]:.6f} → 最后一轮 {history[-1]:.6f} ({history[-1] / history[0]:.2%})")
    for name, row in metrics.items():
        print(f"阈值 {name}: accuracy={float(row['accuracy']):.4f} FPR={float(row['fpr']):.4f} FNR={float(row['fnr']):.4f}")
    print(f"隐空间: 类中心距离 {distance:.4f}, 合并类内标准差 {pooled_std:.4f}")
    print("=" * 60)


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="运行合成数据端到端流水线")
    parser.add_argument("--out", default="out/pipeline", help="输出根目录")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--epochs", type=int, default=50)
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args()

    print("=" * 60)
    print("开始运行合成数据流水线")
    print("=" * 60)

    try:
        run_pipeline(Path(args.out), args.seed, args.epochs, args.threads)
        print("\n流水线完成！")
    except KeyboardInterrupt:
        print("\n用户中断")
    except Exception as e:
        print(f"\n流水线失败: {e}")
        sys.exit(1)

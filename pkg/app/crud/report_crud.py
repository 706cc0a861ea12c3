import csv
import logging
from pathlib import Path
from typing import Iterable, List, Sequence, Union

from app.core.exception import ArtifactMismatch, InvalidEncoding
from app.schemas.detection_schema import DetectionReport, LatentRow, ThresholdSet
from app.schemas.model_schema import LossBreakdown
from app.schemas.signal_schema import SignalLabel


logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _fmt(value: float) -> str:
    # repr 保证浮点数可无损回读
    return repr(float(value))


class ReportCRUD:
    """
    训练与检测产物的 CSV 读写
    """

    def _write_rows(self, path: PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        logger.info(f"已写入: {path}")
        return path

    def _read_rows(self, path: PathLike) -> List[dict]:
        with Path(path).open(newline="", encoding="utf-8") as f:
            try:
                return list(csv.DictReader(f))
            except UnicodeDecodeError as e:
                raise InvalidEncoding(f"{path} 不是合法的 UTF-8 文本") from e

    def write_loss_history(self, history: Sequence[LossBreakdown], path: PathLike) -> Path:
        """loss_history.csv：epoch,reconstruction,kl,total"""
        rows = [
            [epoch, _fmt(item.reconstruction), _fmt(item.kl), _fmt(item.total)]
            for epoch, item in enumerate(history, start=1)
        ]
        return self._write_rows(path, ["epoch", "reconstruction", "kl", "total"], rows)

    def write_training_errors(
        self,
        ids: Sequence[str],
        labels: Sequence[SignalLabel],
        reconstruction: Sequence[float],
        kl: Sequence[float],
        path: PathLike
    ) -> Path:
        """training_errors.csv：id,label,reconstruction,kl,error"""
        rows = [
            [sample_id, label.value, _fmt(r), _fmt(k), _fmt(r + k)]
            for sample_id, label, r, k in zip(ids, labels, reconstruction, kl)
        ]
        return self._write_rows(path, ["id", "label", "reconstruction", "kl", "error"], rows)

    def write_thresholds(self, thresholds: ThresholdSet, path: PathLike) -> Path:
        """thresholds.csv：name,value"""
        rows = [[name, _fmt(value)] for name, value in thresholds.as_dict().items()]
        return self._write_rows(path, ["name", "value"], rows)

    def read_thresholds(self, path: PathLike) -> ThresholdSet:
        """
        读取阈值文件；缺项或 p99 > max 视为产物不匹配
        """
        values = {}
        for row in self._read_rows(path):
            try:
                values[row["name"]] = float(row["value"])
            except (KeyError, TypeError, ValueError) as e:
                raise ArtifactMismatch(f"阈值文件 {path} 格式错误: {row}") from e
        if set(values) != {"p99", "max"}:
            raise ArtifactMismatch(f"阈值文件 {path} 应包含 p99 与 max，收到 {sorted(values)}")
        try:
            return ThresholdSet(**values)
        except ValueError as e:
            raise ArtifactMismatch(f"阈值文件 {path} 无效: {e}") from e

    def write_verdicts(self, report: DetectionReport, names: Sequence[str], path: PathLike) -> Path:
        """verdicts.csv：id,label,error,verdict_<阈值名>..."""
        header = ["id", "label", "error"] + [f"verdict_{name}" for name in names]
        rows = [
            [sample.id, sample.label.value, _fmt(sample.error)] + [sample.verdicts[name].value for name in names]
            for sample in report.samples
        ]
        return self._write_rows(path, header, rows)

    def write_metrics(self, report: DetectionReport, path: PathLike) -> Path:
        """metrics.csv：threshold,tp,fp,tn,fn,accuracy,fpr,fnr"""
        rows = [
            [name, m.tp, m.fp, m.tn, m.fn, _fmt(m.accuracy), _fmt(m.fpr), _fmt(m.fnr)]
            for name, m in report.metrics.items()
        ]
        return self._write_rows(path, ["threshold", "tp", "fp", "tn", "fn", "accuracy", "fpr", "fnr"], rows)

    def write_latent(self, rows: Sequence[LatentRow], path: PathLike) -> Path:
        """latent.csv：id,label,mu1,mu2,..."""
        dims = len(rows[0].mu) if rows else 2
        header = ["id", "label"] + [f"mu{i}" for i in range(1, dims + 1)]
        data = [[row.id, row.label.value] + [_fmt(value) for value in row.mu] for row in rows]
        return self._write_rows(path, header, data)

    def read_latent(self, path: PathLike) -> List[LatentRow]:
        rows = []
        for row in self._read_rows(path):
            mu_keys = sorted((key for key in row if key.startswith("mu")), key=lambda key: int(key[2:]))
            rows.append(LatentRow(
                id=row["id"],
                label=SignalLabel(row["label"]),
                mu=[float(row[key]) for key in mu_keys],
            ))
        return rows


# 创建全局CRUD实例
report_crud = ReportCRUD()

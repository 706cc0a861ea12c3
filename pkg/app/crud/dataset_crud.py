import csv
import logging
import math
import re
import struct
from pathlib import Path
from typing import List, Union

from app.core.exception import EmptyDataset, InputError, InvalidEncoding, LengthMismatch, ParseError, RaggedRows
from app.schemas.dataset_schema import Dataset
from app.schemas.signal_schema import Signal, SignalLabel
from app.utils.binary import BinaryReader, pack_float32, pack_text


logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

GWS1_MAGIC = b"GWS1"
GWS1_VERSION = 1

# 十进制浮点数（可带指数），不接受下划线、十六进制、nan、inf
_DECIMAL = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")


class DatasetCRUD:
    """
    数据集读写：GWS1 二进制与 CSV 导入
    """

    def encode(self, dataset: Dataset) -> bytes:
        """
        序列化为 GWS1 字节串

        Args:
            dataset: 数据集（所有信号长度与采样率一致）

        Returns:
            bytes: 完整文件内容
        """
        n_samples = dataset.n_samples
        for signal in dataset.signals:
            if signal.n_samples != n_samples:
                raise LengthMismatch(f"信号 {signal.id} 长度 {signal.n_samples} 与数据集 {n_samples} 不一致")
            if signal.sample_rate != dataset.sample_rate:
                raise LengthMismatch(f"信号 {signal.id} 采样率与数据集不一致")

        chunks = [
            GWS1_MAGIC,
            struct.pack("<IIIf", GWS1_VERSION, len(dataset.signals), n_samples, dataset.sample_rate),
        ]
        for signal in dataset.signals:
            chunks.append(struct.pack("<B", signal.label.code))
            chunks.append(pack_text(signal.id))
            chunks.append(pack_float32(signal.samples))
        return b"".join(chunks)

    def decode(self, data: bytes, source: str = "<bytes>") -> Dataset:
        """
        解析 GWS1 字节串

        Args:
            data: 文件内容
            source: 用于错误信息的来源描述

        Returns:
            Dataset
        """
        reader = BinaryReader(data, source)
        reader.expect_magic(GWS1_MAGIC)
        reader.expect_version(GWS1_VERSION)
        n_signals = reader.u32()
        n_samples = reader.u32()
        sample_rate = reader.f32()

        signals: List[Signal] = []
        for index in range(n_signals):
            code = reader.u8()
            try:
                label = SignalLabel.from_code(code)
            except ValueError as e:
                raise InputError(f"{source} 第 {index} 条信号的标签编码无效: {code}") from e
            signal_id = reader.text()
            samples = reader.float32_array(n_samples)
            signals.append(Signal(id=signal_id, samples=samples, sample_rate=sample_rate, label=label))
        reader.expect_end()
        return Dataset(signals=signals, sample_rate=sample_rate)

    def save_dataset(self, dataset: Dataset, path: PathLike) -> Path:
        """
        写入 GWS1 文件

        Args:
            dataset: 数据集
            path: 输出路径

        Returns:
            Path: 输出路径
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(self.encode(dataset))
        logger.info(f"✓ 数据集已保存: {path} ({len(dataset.signals)} 条信号)")
        return path

    def load_dataset(self, path: PathLike) -> Dataset:
        """
        读取 GWS1 文件

        Args:
            path: 文件路径

        Returns:
            Dataset
        """
        path = Path(path)
        dataset = self.decode(path.read_bytes(), source=str(path))
        logger.info(f"读取数据集: {path} - {dataset.count_by_label()}")
        return dataset

    def import_csv(self, path: PathLike, sample_rate: float, label: SignalLabel) -> Dataset:
        """
        从 CSV 导入：每行一条信号，逗号分隔的十进制浮点数

        Args:
            path: CSV 文件路径
            sample_rate: 采样率（Hz）
            label: 应用到所有行的标签

        Returns:
            Dataset
        """
        path = Path(path)
        # utf-8-sig 去掉表格软件写入的 BOM
        with path.open(newline="", encoding="utf-8-sig") as f:
            try:
                rows = list(csv.reader(f))
            except UnicodeDecodeError as e:
                raise InvalidEncoding(f"CSV 文件 {path} 不是合法的 UTF-8 文本") from e

        signals: List[Signal] = []
        expected = None
        for row_no, row in enumerate(rows, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if expected is None:
                expected = len(row)
            elif len(row) != expected:
                raise RaggedRows(row_no, expected, len(row))

            values = []
            for col_no, cell in enumerate(row, start=1):
                text = cell.strip()
                if not _DECIMAL.fullmatch(text):
                    raise ParseError(row_no, col_no, cell)
                value = float(text)
                if not math.isfinite(value):
                    raise ParseError(row_no, col_no, cell)
                values.append(value)
            signals.append(Signal(
                id=f"{path.stem}-{len(signals):05d}",
                samples=values,
                sample_rate=sample_rate,
                label=label,
            ))

        if not signals:
            raise EmptyDataset(f"CSV 文件 {path} 中没有数据行")
        logger.info(f"✓ CSV 导入完成: {path} - {len(signals)} 条信号, 长度 {expected}")
        return Dataset(signals=signals, sample_rate=sample_rate, metadata={"source": path.name})


# 创建全局CRUD实例
dataset_crud = DatasetCRUD()

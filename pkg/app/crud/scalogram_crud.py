import csv
import logging
import struct
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np

from app.core.exception import ArtifactMismatch, InputError, InvalidEncoding, ShapeMismatch
from app.schemas.dataset_schema import ManifestEntry
from app.schemas.signal_schema import Scalogram, SignalLabel
from app.utils.binary import BinaryReader, pack_float32


logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SCG1_MAGIC = b"SCG1"
SCG1_VERSION = 1
MANIFEST_COLUMNS = ["id", "label", "path"]


class ScalogramCRUD:
    """
    时频图读写：SCG1 原始数据、PGM 图像与清单 CSV
    """

    def encode(self, scalogram: Scalogram) -> bytes:
        n_scales, n_times = scalogram.shape
        header = SCG1_MAGIC + struct.pack("<III", SCG1_VERSION, n_scales, n_times)
        return header + pack_float32(scalogram.values)

    def decode(self, data: bytes, source: str = "<bytes>") -> Scalogram:
        reader = BinaryReader(data, source)
        reader.expect_magic(SCG1_MAGIC)
        reader.expect_version(SCG1_VERSION)
        n_scales = reader.u32()
        n_times = reader.u32()
        values = reader.float32_array(n_scales * n_times).reshape(n_scales, n_times)
        reader.expect_end()
        return Scalogram(values=values)

    def save_scg(self, scalogram: Scalogram, path: PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(self.encode(scalogram))
        return path

    def load_scg(self, path: PathLike) -> Scalogram:
        path = Path(path)
        return self.decode(path.read_bytes(), source=str(path))

    def encode_pgm(self, scalogram: Scalogram) -> bytes:
        """
        8 位二进制 PGM（P5）：最大尺度在第一行，像素值 round(255·v)

        Args:
            scalogram: 已归一化到 [0,1] 的时频图

        Returns:
            bytes: 完整文件内容
        """
        values = scalogram.values
        if values.min() < 0 or values.max() > 1:
            raise ShapeMismatch("PGM 导出要求时频图已归一化到 [0, 1]")
        pixels = np.round(255 * values[::-1]).astype(np.uint8)
        height, width = pixels.shape
        return f"P5\n{width} {height}\n255\n".encode("ascii") + pixels.tobytes()

    def save_pgm(self, scalogram: Scalogram, path: PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(self.encode_pgm(scalogram))
        return path

    def write_manifest(self, entries: Sequence[ManifestEntry], path: PathLike) -> Path:
        """
        写入清单 CSV（id,label,path），path 相对于清单所在目录
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(MANIFEST_COLUMNS)
            for entry in entries:
                writer.writerow([entry.id, entry.label.value, entry.path])
        logger.info(f"✓ 清单已写入: {path} ({len(entries)} 行)")
        return path

    def read_manifest(self, path: PathLike) -> List[ManifestEntry]:
        """
        读取清单 CSV

        Args:
            path: 清单路径

        Returns:
            List[ManifestEntry]: 按文件顺序
        """
        path = Path(path)
        with path.open(newline="", encoding="utf-8") as f:
            try:
                rows = list(csv.reader(f))
            except UnicodeDecodeError as e:
                raise InvalidEncoding(f"清单 {path} 不是合法的 UTF-8 文本") from e

        header = rows[0] if rows else None
        if header != MANIFEST_COLUMNS:
            raise InputError(f"清单 {path} 表头应为 {','.join(MANIFEST_COLUMNS)}，收到 {header}")
        entries = []
        for row_no, row in enumerate(rows[1:], start=2):
            if not row:
                continue
            if len(row) != len(MANIFEST_COLUMNS):
                raise InputError(f"清单 {path} 第 {row_no} 行列数错误")
            try:
                label = SignalLabel(row[1])
            except ValueError:
                raise InputError(f"清单 {path} 第 {row_no} 行标签无效: {row[1]!r}") from None
            entries.append(ManifestEntry(id=row[0], label=label, path=row[2]))
        return entries

    def load_manifest_images(
        self,
        manifest_path: PathLike,
        image_size: int = None
    ) -> Tuple[List[ManifestEntry], np.ndarray]:
        """
        读取清单及其引用的全部 SCG1 文件

        Args:
            manifest_path: 清单路径
            image_size: 期望的边长（与模型不符时视为产物不匹配），None 表示不检查

        Returns:
            (清单条目, float32 数组 [N,1,S,S])
        """
        manifest_path = Path(manifest_path)
        entries = self.read_manifest(manifest_path)
        images = []
        for entry in entries:
            scalogram = self.load_scg(manifest_path.parent / entry.path)
            if images and scalogram.shape != images[0].shape:
                raise InputError(f"时频图 {entry.path} 尺寸 {scalogram.shape} 与其他样本不一致")
            if image_size is not None and scalogram.shape != (image_size, image_size):
                raise ArtifactMismatch(f"时频图 {entry.path} 尺寸 {scalogram.shape} 与模型输入 {image_size} 不一致")
            images.append(scalogram.values)

        if images:
            batch = np.stack(images)[:, None, :, :].astype(np.float32)
        else:
            batch = np.zeros((0, 1, image_size or 0, image_size or 0), dtype=np.float32)
        logger.info(f"读取清单: {manifest_path} - {len(entries)} 个样本")
        return entries, batch


# 创建全局CRUD实例
scalogram_crud = ScalogramCRUD()

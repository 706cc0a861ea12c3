"""
小端二进制读写工具（GWS1 / SCG1 / VAE1 / OPT1 共用）
"""

import struct
from collections import OrderedDict
from typing import Dict, Tuple

import numpy as np

from app.core.exception import BadMagic, InvalidEncoding, LengthMismatch, TruncatedFile, UnsupportedVersion

FLOAT32_LE = np.dtype("<f4")


class BinaryReader:
    """
    顺序读取字节串，越界统一抛出 TruncatedFile
    """

    def __init__(self, data: bytes, source: str = "<bytes>"):
        self.data = data
        self.offset = 0
        self.source = source

    def read(self, size: int) -> bytes:
        end = self.offset + size
        if end > len(self.data):
            raise TruncatedFile(f"{self.source} 在偏移 {self.offset} 处被截断（需要 {size} 字节）")
        chunk = self.data[self.offset:end]
        self.offset = end
        return chunk

    def unpack(self, fmt: str) -> Tuple:
        return struct.unpack(fmt, self.read(struct.calcsize(fmt)))

    def u8(self) -> int:
        return self.unpack("<B")[0]

    def u16(self) -> int:
        return self.unpack("<H")[0]

    def u32(self) -> int:
        return self.unpack("<I")[0]

    def u64(self) -> int:
        return self.unpack("<Q")[0]

    def f32(self) -> float:
        return self.unpack("<f")[0]

    def text(self) -> str:
        """u16 长度前缀的 UTF-8 字符串"""
        start = self.offset
        raw = self.read(self.u16())
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise InvalidEncoding(f"{self.source} 偏移 {start} 处的字符串不是合法的 UTF-8: {raw!r}") from e

    def float32_array(self, count: int) -> np.ndarray:
        raw = self.read(count * FLOAT32_LE.itemsize)
        return np.frombuffer(raw, dtype=FLOAT32_LE).astype(np.float32)

    def expect_magic(self, magic: bytes):
        if len(self.data) < len(magic):
            raise TruncatedFile(f"{self.source} 长度不足，无法读取文件头")
        found = self.read(len(magic))
        if found != magic:
            raise BadMagic(f"{self.source} 魔数应为 {magic!r}，实际为 {found!r}")

    def expect_version(self, supported: int) -> int:
        version = self.u32()
        if version != supported:
            raise UnsupportedVersion(f"{self.source} 版本 {version} 不受支持（支持 {supported}）")
        return version

    def expect_end(self):
        remaining = len(self.data) - self.offset
        if remaining:
            raise LengthMismatch(f"{self.source} 末尾多出 {remaining} 字节")


def pack_text(text: str) -> bytes:
    encoded = text.encode("utf-8")
    if len(encoded) > 0xFFFF:
        raise ValueError(f"字符串过长: {len(encoded)} 字节")
    return struct.pack("<H", len(encoded)) + encoded


def pack_float32(array: np.ndarray) -> bytes:
    return np.ascontiguousarray(array, dtype=FLOAT32_LE).tobytes()


def pack_tensors(tensors: Dict[str, np.ndarray]) -> bytes:
    """
    张量表：每个张量为 u16 名称长度 + 名称 + u8 维数 + u32 各维 + float32 数据
    """
    chunks = []
    for name, array in tensors.items():
        array = np.asarray(array)
        chunks.append(pack_text(name))
        chunks.append(struct.pack("<B", array.ndim))
        chunks.append(struct.pack(f"<{array.ndim}I", *array.shape))
        chunks.append(pack_float32(array))
    return b"".join(chunks)


def read_tensors(reader: BinaryReader, count: int) -> Dict[str, np.ndarray]:
    """按 pack_tensors 的布局读取 count 个张量"""
    tensors: Dict[str, np.ndarray] = OrderedDict()
    for _ in range(count):
        name = reader.text()
        rank = reader.u8()
        shape = reader.unpack(f"<{rank}I") if rank else ()
        size = int(np.prod(shape)) if shape else 1
        tensors[name] = reader.float32_array(size).reshape(shape)
    return tensors

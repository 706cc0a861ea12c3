# Utils module init
from .binary import BinaryReader, pack_text, pack_float32, pack_tensors, read_tensors

__all__ = [
    "BinaryReader",
    "pack_text",
    "pack_float32",
    "pack_tensors",
    "read_tensors",
]

"""Binary checkpoint container for trained models.

Layout: magic ``RNET``, format version (u32), length-prefixed canonical JSON
(model configuration plus the vocabulary as ``[word, frequency]`` pairs in
rank order), a feature-statistics block, then the named-tensor payload.  Each
tensor is stored as length-prefixed UTF-8 name, dtype tag, rank, dims, and
raw little-endian IEEE-754 values.  All integers are little-endian.

Loading a file and saving it again reproduces the bytes exactly: the JSON is
re-serialized canonically (sorted keys, no whitespace) and arrays round-trip
bit-for-bit.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

__all__ = ["ModelCheckpoint", "save_checkpoint", "load_checkpoint", "CheckpointError"]

MAGIC = b"RNET"
FORMAT_VERSION = 1

_DTYPE_TAGS = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_TAG_FOR_KIND = {"float32": 0, "float64": 1}


class CheckpointError(ValueError):
    """Raised for malformed or incompatible checkpoint files."""


@dataclass
class ModelCheckpoint:
    """Versioned container: config + vocabulary + feature stats + parameters."""

    config: dict
    vocab_items: list  # [word, frequency] pairs in rank order
    stats: dict[str, np.ndarray] = field(default_factory=dict)
    tensors: dict[str, np.ndarray] = field(default_factory=dict)
    version: int = FORMAT_VERSION


def _canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def _write_name(out: bytearray, name: str) -> None:
    raw = name.encode("utf-8")
    out += struct.pack("<I", len(raw))
    out += raw


def checkpoint_bytes(ckpt: ModelCheckpoint) -> bytes:
    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", ckpt.version)
    header = _canonical_json({"config": ckpt.config, "vocab": ckpt.vocab_items})
    out += struct.pack("<I", len(header))
    out += header
    out += struct.pack("<I", len(ckpt.stats))
    for name, values in ckpt.stats.items():
        _write_name(out, name)
        arr = np.ascontiguousarray(values, dtype="<f8")
        out += struct.pack("<I", arr.size)
        out += arr.tobytes()
    out += struct.pack("<I", len(ckpt.tensors))
    for name, values in ckpt.tensors.items():
        _write_name(out, name)
        kind = str(values.dtype)
        if kind not in _TAG_FOR_KIND:
            raise CheckpointError(f"tensor {name!r} has unsupported dtype {kind}")
        tag = _TAG_FOR_KIND[kind]
        arr = np.ascontiguousarray(values, dtype=_DTYPE_TAGS[tag])
        out += struct.pack("<BB", tag, arr.ndim)
        out += struct.pack(f"<{arr.ndim}I", *arr.shape)
        out += arr.tobytes()
    return bytes(out)


def save_checkpoint(path, ckpt: ModelCheckpoint) -> None:
    with open(path, "wb") as fh:
        fh.write(checkpoint_bytes(ckpt))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointError("truncated checkpoint")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def name(self) -> str:
        return self.take(self.u32()).decode("utf-8")


def load_checkpoint(path) -> ModelCheckpoint:
    with open(path, "rb") as fh:
        data = fh.read()
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file (bad magic)")
    version = r.u32()
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    header = json.loads(r.take(r.u32()).decode("utf-8"))
    stats = {}
    for _ in range(r.u32()):
        name = r.name()
        n = r.u32()
        stats[name] = np.frombuffer(r.take(8 * n), dtype="<f8").copy()
    tensors = {}
    for _ in range(r.u32()):
        name = r.name()
        tag, rank = struct.unpack("<BB", r.take(2))
        if tag not in _DTYPE_TAGS:
            raise CheckpointError(f"{path}: unknown dtype tag {tag}")
        dims = struct.unpack(f"<{rank}I", r.take(4 * rank))
        dtype = _DTYPE_TAGS[tag]
        count = int(np.prod(dims)) if dims else 1
        arr = np.frombuffer(r.take(dtype.itemsize * count), dtype=dtype)
        tensors[name] = arr.reshape(dims).copy()
    if r.pos != len(data):
        raise CheckpointError(f"{path}: {len(data) - r.pos} trailing bytes")
    return ModelCheckpoint(
        config=header["config"],
        vocab_items=header["vocab"],
        stats=stats,
        tensors=tensors,
        version=version,
    )

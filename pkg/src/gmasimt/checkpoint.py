"""Versioned binary checkpoints: a JSON config block followed by named float64 arrays.

Layout (all integers little-endian)::

    magic       8 bytes  b"GMASIMT\\x00"
    version     u32
    config_len  u64, then config_len bytes of UTF-8 JSON (sorted keys)
    n_arrays    u32
    per array, sorted by name:
        name_len u16, name (UTF-8), ndim u8, shape u32 * ndim, data float64 LE (C order)

Identical parameters and config always serialize to identical bytes.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Vocabulary
from .model import GmaTransformer, ModelConfig

MAGIC = b"GMASIMT\x00"
VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    model: GmaTransformer
    src_vocab: Vocabulary
    tgt_vocab: Vocabulary
    extra: dict


def encode_arrays(arrays: dict[str, np.ndarray]) -> bytes:
    out = io.BytesIO()
    out.write(struct.pack("<I", len(arrays)))
    for name in sorted(arrays):
        a = np.ascontiguousarray(arrays[name], dtype="<f8")
        raw = name.encode("utf-8")
        out.write(struct.pack("<H", len(raw)))
        out.write(raw)
        out.write(struct.pack("<B", a.ndim))
        out.write(struct.pack(f"<{a.ndim}I", *a.shape))
        out.write(a.tobytes(order="C"))
    return out.getvalue()


def serialize(config: dict, arrays: dict[str, np.ndarray]) -> bytes:
    block = json.dumps(config, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return (MAGIC + struct.pack("<I", VERSION) + struct.pack("<Q", len(block)) + block
            + encode_arrays(arrays))


def _take(buf: memoryview, pos: int, n: int) -> tuple[memoryview, int]:
    if pos + n > len(buf):
        raise CheckpointError("truncated checkpoint")
    return buf[pos:pos + n], pos + n


def deserialize(data: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    buf = memoryview(data)
    head, pos = _take(buf, 0, len(MAGIC))
    if bytes(head) != MAGIC:
        raise CheckpointError("not a gmasimt checkpoint (bad magic)")
    raw, pos = _take(buf, pos, 4)
    (version,) = struct.unpack("<I", raw)
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    raw, pos = _take(buf, pos, 8)
    (n,) = struct.unpack("<Q", raw)
    raw, pos = _take(buf, pos, n)
    try:
        config = json.loads(bytes(raw).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"corrupt config block: {exc}") from None
    raw, pos = _take(buf, pos, 4)
    (count,) = struct.unpack("<I", raw)
    arrays = {}
    for _ in range(count):
        raw, pos = _take(buf, pos, 2)
        (name_len,) = struct.unpack("<H", raw)
        raw, pos = _take(buf, pos, name_len)
        name = bytes(raw).decode("utf-8")
        raw, pos = _take(buf, pos, 1)
        (ndim,) = struct.unpack("<B", raw)
        raw, pos = _take(buf, pos, 4 * ndim)
        shape = struct.unpack(f"<{ndim}I", raw)
        size = int(np.prod(shape, dtype=np.int64)) * 8
        raw, pos = _take(buf, pos, size)
        arrays[name] = np.frombuffer(raw, dtype="<f8").reshape(shape).astype(np.float64)
    if pos != len(buf):
        raise CheckpointError(f"{len(buf) - pos} trailing bytes after the last array")
    return config, arrays


def save(path: str | Path, model: GmaTransformer, src_vocab: Vocabulary, tgt_vocab: Vocabulary,
         extra: dict | None = None) -> None:
    config = {"model": model.config.to_dict(), "src_vocab": src_vocab.to_dict(),
              "tgt_vocab": tgt_vocab.to_dict(), "extra": extra or {}}
    Path(path).write_bytes(serialize(config, model.state_dict()))


def load(path: str | Path) -> Checkpoint:
    config, arrays = deserialize(Path(path).read_bytes())
    try:
        mcfg = ModelConfig.from_dict(config["model"])
        sv = Vocabulary.from_dict(config["src_vocab"])
        tv = Vocabulary.from_dict(config["tgt_vocab"])
    except (KeyError, TypeError) as exc:
        raise CheckpointError(f"incomplete config block: {exc}") from None
    if len(sv) != mcfg.src_vocab or len(tv) != mcfg.tgt_vocab:
        raise CheckpointError("vocabulary sizes disagree with the model config")
    return Checkpoint(GmaTransformer(mcfg, arrays), sv, tv, config.get("extra", {}))

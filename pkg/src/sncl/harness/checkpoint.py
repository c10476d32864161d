"""Binary checkpoint container: weights, packed session masks, q8 compression.

Format (little endian throughout):

  magic b"SNCL" | u16 version | 32-byte config digest | u32 record count
  per record:
    u16 name length | name utf8
    u8 kind (0 = f32, 1 = q8) | u8 ndim | u32 * ndim dims
    payload: f32 raw values, or q8 as f32 qmin + f32 qscale + one byte per value
    u16 mask count | per mask: u32 session id + packed bits

Masks pack one bit per element in C order, little bit order, so a mask costs
1/32 of the f32 tensor it covers.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import CheckpointError

MAGIC = b"SNCL"
VERSION = 1
_KIND_F32 = 0
_KIND_Q8 = 1
_KIND_NAMES = {"f32": _KIND_F32, "q8": _KIND_Q8}
_LEVELS = 255  # q8 code range 0..255


def bitpack_mask(bits: np.ndarray) -> bytes:
    b = np.asarray(bits)
    if not np.isin(b, (0, 1)).all():
        raise CheckpointError("mask bits must be 0 or 1")
    return np.packbits(b.reshape(-1).astype(np.uint8), bitorder="little").tobytes()


def bitunpack_mask(data: bytes, shape: tuple[int, ...]) -> np.ndarray:
    n = int(np.prod(shape, dtype=np.int64)) if shape else 1
    expect = (n + 7) // 8
    if len(data) != expect:
        raise CheckpointError(f"packed mask for shape {shape} needs {expect} bytes, "
                              f"got {len(data)}")
    flat = np.unpackbits(np.frombuffer(data, np.uint8), count=n, bitorder="little")
    return flat.reshape(shape)


def quantize_q8(values: np.ndarray) -> tuple[np.ndarray, np.float32, np.float32]:
    """Uniform affine 8-bit codes: q = round((w - min)/scale), scale = range/255.

    Constant tensors use scale = 1 with all-zero codes so they round-trip
    exactly. Every element dequantizes to within half a step.
    """
    a = np.asarray(values, dtype=np.float64)
    if a.size == 0:
        raise CheckpointError("cannot quantize an empty tensor")
    if not np.isfinite(a).all():
        raise CheckpointError("cannot quantize non-finite values")
    qmin = np.float32(a.min())
    span = float(a.max()) - float(qmin)
    if span <= 0.0:
        return np.zeros(a.shape, np.uint8), qmin, np.float32(1.0)
    qscale = np.float32(span / _LEVELS)
    codes = np.clip(np.round((a - float(qmin)) / float(qscale)), 0, _LEVELS).astype(np.uint8)
    return codes, qmin, qscale


def dequantize_q8(codes: np.ndarray, qmin: float, qscale: float) -> np.ndarray:
    return (float(qmin) + codes.astype(np.float64) * float(qscale)).astype(np.float32)


@dataclass
class TensorRecord:
    name: str
    shape: tuple[int, ...]
    kind: str                      # "f32" or "q8"
    data: np.ndarray               # float32 values, or uint8 codes for q8
    qmin: float = 0.0
    qscale: float = 1.0
    masks: dict[int, np.ndarray] = field(default_factory=dict)

    def values(self) -> np.ndarray:
        if self.kind == "f32":
            return self.data.astype(np.float32)
        return dequantize_q8(self.data, self.qmin, self.qscale).reshape(self.shape)

    def quantized(self) -> "TensorRecord":
        if self.kind == "q8":
            return self
        codes, qmin, qscale = quantize_q8(self.data)
        return TensorRecord(self.name, self.shape, "q8", codes,
                            float(qmin), float(qscale), dict(self.masks))

    def payload_bytes(self) -> int:
        n = int(np.prod(self.shape, dtype=np.int64)) if self.shape else 1
        return 4 * n if self.kind == "f32" else 8 + n


class Checkpoint:
    """Ordered named tensors with per-session masks, bound to a config digest."""

    def __init__(self, config_digest: bytes):
        if len(config_digest) != 32:
            raise CheckpointError("config digest must be 32 bytes")
        self.config_digest = bytes(config_digest)
        self.records: dict[str, TensorRecord] = {}

    def add(self, name: str, values: np.ndarray, masks: dict[int, np.ndarray] | None = None) -> None:
        if name in self.records:
            raise CheckpointError(f"duplicate record {name!r}")
        arr = np.asarray(values, dtype=np.float32)
        rec = TensorRecord(name, arr.shape, "f32", arr)
        for sid, bits in sorted((masks or {}).items()):
            b = np.asarray(bits)
            if b.shape != arr.shape:
                raise CheckpointError(f"mask shape {b.shape} does not match "
                                      f"tensor {name} shape {arr.shape}")
            rec.masks[int(sid)] = b.astype(np.uint8)
        self.records[name] = rec

    def record(self, name: str) -> TensorRecord:
        if name not in self.records:
            raise CheckpointError(f"checkpoint has no record {name!r}")
        return self.records[name]

    def quantized(self) -> "Checkpoint":
        out = Checkpoint(self.config_digest)
        for name, rec in self.records.items():
            out.records[name] = rec.quantized()
        return out

    def write(self, path: str | Path) -> None:
        chunks = [MAGIC, struct.pack("<H", VERSION), self.config_digest,
                  struct.pack("<I", len(self.records))]
        for rec in self.records.values():
            name = rec.name.encode("utf-8")
            chunks.append(struct.pack("<H", len(name)))
            chunks.append(name)
            chunks.append(struct.pack("<BB", _KIND_NAMES[rec.kind], len(rec.shape)))
            chunks.append(struct.pack(f"<{len(rec.shape)}I", *rec.shape))
            if rec.kind == "f32":
                chunks.append(rec.data.astype("<f4").tobytes())
            else:
                chunks.append(struct.pack("<ff", rec.qmin, rec.qscale))
                chunks.append(rec.data.astype(np.uint8).tobytes())
            chunks.append(struct.pack("<H", len(rec.masks)))
            for sid in sorted(rec.masks):
                chunks.append(struct.pack("<I", sid))
                chunks.append(bitpack_mask(rec.masks[sid]))
        Path(path).write_bytes(b"".join(chunks))

    @classmethod
    def read(cls, path: str | Path) -> "Checkpoint":
        try:
            raw = Path(path).read_bytes()
        except OSError as e:
            raise CheckpointError(f"cannot read {path}: {e}") from e
        rd = _Reader(raw)
        if rd.take(4) != MAGIC:
            raise CheckpointError("not a checkpoint file (bad magic)")
        (version,) = struct.unpack("<H", rd.take(2))
        if version != VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        ckpt = cls(rd.take(32))
        (count,) = struct.unpack("<I", rd.take(4))
        for _ in range(count):
            (nlen,) = struct.unpack("<H", rd.take(2))
            name = rd.take(nlen).decode("utf-8")
            kind_code, ndim = struct.unpack("<BB", rd.take(2))
            if kind_code not in (_KIND_F32, _KIND_Q8):
                raise CheckpointError(f"record {name!r}: unknown kind {kind_code}")
            shape = struct.unpack(f"<{ndim}I", rd.take(4 * ndim))
            n = int(np.prod(shape, dtype=np.int64)) if shape else 1
            if kind_code == _KIND_F32:
                data = np.frombuffer(rd.take(4 * n), "<f4").reshape(shape).astype(np.float32)
                rec = TensorRecord(name, shape, "f32", data)
            else:
                qmin, qscale = struct.unpack("<ff", rd.take(8))
                codes = np.frombuffer(rd.take(n), np.uint8).reshape(shape).copy()
                rec = TensorRecord(name, shape, "q8", codes, qmin, qscale)
            (nmasks,) = struct.unpack("<H", rd.take(2))
            for _ in range(nmasks):
                (sid,) = struct.unpack("<I", rd.take(4))
                rec.masks[sid] = bitunpack_mask(rd.take((n + 7) // 8), shape).astype(np.uint8)
            if name in ckpt.records:
                raise CheckpointError(f"duplicate record {name!r}")
            ckpt.records[name] = rec
        if rd.remaining():
            raise CheckpointError(f"{rd.remaining()} trailing bytes after last record")
        return ckpt

    def summary(self) -> list[dict]:
        out = []
        for rec in self.records.values():
            out.append({"name": rec.name, "kind": rec.kind,
                        "shape": list(rec.shape), "masks": sorted(rec.masks),
                        "payload_bytes": rec.payload_bytes()})
        return out


class _Reader:
    def __init__(self, raw: bytes):
        self._raw = raw
        self._pos = 0

    def take(self, n: int) -> bytes:
        if self._pos + n > len(self._raw):
            raise CheckpointError(f"truncated checkpoint: wanted {n} bytes at "
                                  f"offset {self._pos}, file has {len(self._raw)}")
        out = self._raw[self._pos:self._pos + n]
        self._pos += n
        return out

    def remaining(self) -> int:
        return len(self._raw) - self._pos

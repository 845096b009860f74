"""Dense sentence-embedding matrices with a bit-exact on-disk format.

The canonical file layout is little-endian: magic ``EMB1`` (4 bytes),
``dim`` as u32, ``count`` as u64, ``normalized`` as u8, three reserved
zero bytes, then ``count * dim`` float32 values in row-major order.
A headerless float32 blob (``load_raw``) is supported for interop with
external encoder tooling.

Matrices are immutable after load: every mutating operation returns a
new value, so instances are safe to share across worker threads.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    CountMismatch,
    SizeNotDivisible,
    TruncatedFile,
    ZeroDim,
    ZeroRow,
)

MAGIC = b"EMB1"
_HEADER = struct.Struct("<4sIQB3x")  # magic, dim, count, normalized flag, pad

#: Row norms of a normalized matrix must sit within this of 1.0.
NORM_TOL = 1e-4


@dataclass(frozen=True)
class EmbeddingMatrix:
    """``count`` sentence embeddings of width ``dim``, stored as float32."""

    dim: int
    count: int
    data: np.ndarray  # shape (count, dim), float32, row-major
    normalized: bool = False

    def __post_init__(self):
        if self.dim <= 0:
            raise ZeroDim(f"dim must be positive, got {self.dim}")
        if self.count < 0:
            raise CountMismatch(f"count must be non-negative, got {self.count}")
        data = np.ascontiguousarray(self.data, dtype=np.float32).reshape(
            self.count, self.dim
        )
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_array(cls, arr, normalized: bool = False) -> "EmbeddingMatrix":
        arr = np.atleast_2d(np.asarray(arr, dtype=np.float32))
        return cls(dim=arr.shape[1], count=arr.shape[0], data=arr, normalized=normalized)

    def row(self, i: int) -> np.ndarray:
        return self.data[i]


@dataclass(frozen=True)
class SentenceIndexMap:
    """External identifiers for the rows of a paired :class:`EmbeddingMatrix`."""

    ids: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        ids = tuple(str(i) for i in self.ids)
        if len(set(ids)) != len(ids):
            raise CountMismatch("sentence identifiers must be unique within one matrix")
        object.__setattr__(self, "ids", ids)

    def __len__(self) -> int:
        return len(self.ids)

    def check_against(self, matrix: EmbeddingMatrix) -> None:
        if len(self.ids) != matrix.count:
            raise CountMismatch(
                f"id map has {len(self.ids)} entries but matrix has {matrix.count} rows"
            )


def load_headered(path) -> EmbeddingMatrix:
    """Read a matrix from the canonical headered format."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise TruncatedFile(f"{path}: {len(raw)} bytes is shorter than the header")
    magic, dim, count, norm_flag = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise BadMagic(f"{path}: expected magic {MAGIC!r}, found {magic!r}")
    if dim == 0:
        raise ZeroDim(f"{path}: header declares dim 0")
    need = dim * count * 4
    body = raw[_HEADER.size :]
    if len(body) < need:
        raise TruncatedFile(
            f"{path}: header promises {need} data bytes, file holds {len(body)}"
        )
    data = np.frombuffer(body[:need], dtype="<f4").reshape(count, dim)
    return EmbeddingMatrix(dim=dim, count=count, data=data, normalized=bool(norm_flag))


def load_raw(path, dim: int) -> EmbeddingMatrix:
    """Read a headerless little-endian float32 blob of width ``dim``."""
    if dim <= 0:
        raise ZeroDim(f"dim must be positive, got {dim}")
    raw = Path(path).read_bytes()
    row_bytes = dim * 4
    if len(raw) % row_bytes != 0:
        raise SizeNotDivisible(
            f"{path}: {len(raw)} bytes is not divisible by dim*4 = {row_bytes}"
        )
    count = len(raw) // row_bytes
    data = np.frombuffer(raw, dtype="<f4").reshape(count, dim)
    return EmbeddingMatrix(dim=dim, count=count, data=data, normalized=False)


def save(matrix: EmbeddingMatrix, path, headered: bool = True) -> None:
    """Write ``matrix`` to ``path``; headered is the canonical format."""
    body = np.ascontiguousarray(matrix.data, dtype="<f4").tobytes()
    if headered:
        head = _HEADER.pack(MAGIC, matrix.dim, matrix.count, int(matrix.normalized))
        Path(path).write_bytes(head + body)
    else:
        Path(path).write_bytes(body)


def l2_normalize(matrix: EmbeddingMatrix) -> EmbeddingMatrix:
    """Return a copy with unit-norm rows; zero rows are a hard error.

    Norms are computed in float64 before casting back to float32, which
    keeps pairwise cosines stable to well under 1e-5.
    """
    if matrix.count == 0:
        return EmbeddingMatrix(matrix.dim, 0, matrix.data, normalized=True)
    data = matrix.data.astype(np.float64)
    norms = np.linalg.norm(data, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ZeroRow(int(zero[0]))
    out = (data / norms[:, None]).astype(np.float32)
    return EmbeddingMatrix(matrix.dim, matrix.count, out, normalized=True)


def as_normalized(matrix: EmbeddingMatrix) -> EmbeddingMatrix:
    """Normalize unless the matrix is already flagged normalized."""
    return matrix if matrix.normalized else l2_normalize(matrix)


def load_ids(path) -> SentenceIndexMap:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    return SentenceIndexMap(tuple(lines))


def save_ids(ids: SentenceIndexMap, path) -> None:
    Path(path).write_text(
        "".join(f"{i}\n" for i in ids.ids), encoding="utf-8"
    )

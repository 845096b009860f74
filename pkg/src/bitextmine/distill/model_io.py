"""Versioned binary student-model files.

Layout, little-endian: magic "SMD1" | format version u32 | header
length u32 | UTF-8 JSON header | float32 parameter blob. The header
records the encoder config, the subword vocab, parameter names/shapes
in blob order, and free-form metadata, so a file is self-contained.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
import torch

from ..errors import BadMagic, IOFailure, TruncatedFile
from .encoder import EncoderConfig, StudentEncoder
from .vocab import SubwordVocab

MAGIC = b"SMD1"
VERSION = 1
_PREFIX = struct.Struct("<4sII")


def save_student(path, model: StudentEncoder, vocab: SubwordVocab,
                 meta: dict | None = None) -> None:
    names = []
    blobs = []
    for name, tensor in model.state_dict().items():
        arr = tensor.detach().to(torch.float32).numpy()
        names.append([name, list(arr.shape)])
        blobs.append(np.ascontiguousarray(arr))
    header = {
        "encoder": model.cfg.to_dict(),
        "vocab": vocab.to_dict(),
        "params": names,
        "meta": meta or {},
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    try:
        with open(path, "wb") as f:
            f.write(_PREFIX.pack(MAGIC, VERSION, len(header_bytes)))
            f.write(header_bytes)
            for blob in blobs:
                f.write(blob.tobytes())
    except OSError as e:
        raise IOFailure(str(e)) from e


def load_student(path):
    """Returns (model, vocab, meta)."""
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise IOFailure(str(e)) from e
    if len(raw) < _PREFIX.size:
        raise TruncatedFile(f"{path}: shorter than the fixed prefix")
    magic, version, header_len = _PREFIX.unpack_from(raw)
    if magic != MAGIC:
        raise BadMagic(f"{path}: expected {MAGIC!r}, found {magic!r}")
    if version != VERSION:
        raise BadMagic(f"{path}: unsupported model format version {version}")
    if len(raw) < _PREFIX.size + header_len:
        raise TruncatedFile(f"{path}: header cut short")
    header = json.loads(raw[_PREFIX.size:_PREFIX.size + header_len])
    cfg = EncoderConfig(**header["encoder"])
    vocab = SubwordVocab.from_dict(header["vocab"])
    model = StudentEncoder(cfg)

    offset = _PREFIX.size + header_len
    state = {}
    for name, shape in header["params"]:
        n = int(np.prod(shape)) if shape else 1
        nbytes = 4 * n
        if len(raw) < offset + nbytes:
            raise TruncatedFile(f"{path}: parameter blob cut short at {name}")
        arr = np.frombuffer(raw, dtype="<f4", count=n, offset=offset).reshape(shape)
        state[name] = torch.from_numpy(arr.copy())
        offset += nbytes
    if offset != len(raw):
        raise TruncatedFile(f"{path}: {len(raw) - offset} trailing bytes")
    model.load_state_dict(state)
    model.eval()
    return model, vocab, header.get("meta", {})

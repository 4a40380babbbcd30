"""Byte-stable model checkpoints.

Layout: 4-byte magic, 4-byte little-endian version, 8-byte little-endian
header length, a JSON header with sorted keys, then the raw float64
little-endian tensor blob. Tensors are written in sorted-name order, so the
same weights and config always produce the same bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

MAGIC = b"AKCP"
VERSION = 1


class CheckpointError(ValueError):
    """Checkpoint file is malformed or has an unsupported version."""


def save_checkpoint(path, tensors: dict[str, np.ndarray], config: dict) -> None:
    names = sorted(tensors)
    entries = {}
    offset = 0
    blobs = []
    for name in names:
        arr = np.ascontiguousarray(tensors[name], dtype=np.float64)
        raw = arr.astype("<f8").tobytes()
        entries[name] = {"shape": list(arr.shape), "offset": offset}
        offset += len(raw)
        blobs.append(raw)
    header = json.dumps({"config": config, "tensors": entries},
                        sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(VERSION.to_bytes(4, "little"))
        fh.write(len(header).to_bytes(8, "little"))
        fh.write(header)
        for raw in blobs:
            fh.write(raw)


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:4] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    version = int.from_bytes(data[4:8], "little")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    header_len = int.from_bytes(data[8:16], "little")
    try:
        header = json.loads(data[16:16 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt header: {exc}") from exc
    blob = data[16 + header_len:]
    tensors: dict[str, np.ndarray] = {}
    for name, entry in header["tensors"].items():
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        end = start + count * 8
        if end > len(blob):
            raise CheckpointError(f"{path}: tensor {name!r} exceeds file size")
        tensors[name] = np.frombuffer(blob[start:end], dtype="<f8").reshape(shape).copy()
    return tensors, header["config"]

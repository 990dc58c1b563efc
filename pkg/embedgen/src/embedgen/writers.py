"""Embedding file writers matching the annoaudit ingest contract.

Two formats, both round-tripping binary32 values bit-exactly:

  jsonl   one `{"instance_id": ..., "vector": [...]}` object per line
  bin     magic `AEMB`, version uint16 LE = 1, dim uint32 LE,
          count uint64 LE; per row: id length uint16 LE, id UTF-8 bytes,
          dim IEEE-754 binary32 LE values
"""

from __future__ import annotations

import json
import struct

import numpy as np

FORMATS = ("jsonl", "bin")

_HEADER = struct.Struct("<4sHIQ")
_ROW_PREFIX = struct.Struct("<H")


def write_embedding_file(ids, matrix: np.ndarray, path, fmt: str) -> None:
    matrix = np.asarray(matrix, dtype=np.float32)
    if matrix.ndim != 2 or matrix.shape[0] != len(ids):
        raise ValueError(
            f"matrix shape {matrix.shape} does not match {len(ids)} ids"
        )
    if not np.isfinite(matrix).all():
        raise ValueError("refusing to write non-finite embedding values")
    if fmt == "jsonl":
        _write_jsonl(ids, matrix, path)
    elif fmt == "bin":
        _write_bin(ids, matrix, path)
    else:
        raise ValueError(f"unknown format {fmt!r}, expected one of {FORMATS}")


def _write_jsonl(ids, matrix, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for iid, row in zip(ids, matrix):
            # float() of binary32 is exact and repr round-trips, so the
            # decimal form parses back to the identical 32-bit value
            vec = [float(x) for x in row]
            fh.write(
                json.dumps({"instance_id": iid, "vector": vec}, ensure_ascii=False)
                + "\n"
            )


def _write_bin(ids, matrix, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(b"AEMB", 1, matrix.shape[1], len(ids)))
        for iid, row in zip(ids, matrix):
            raw = iid.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise ValueError(f"instance id too long for binary format: {iid!r}")
            fh.write(_ROW_PREFIX.pack(len(raw)))
            fh.write(raw)
            fh.write(row.astype("<f4").tobytes())

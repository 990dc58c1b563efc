"""Parsing and writing of judgment files, embedding files, and label maps.

Judgment files are UTF-8 JSON lines. Each line is an object with string
`instance_id`, string `annotator_id`, a non-empty string array `labels`,
and an optional string `text`. An optional first line `{"label_set": [...]}`
declares the vocabulary and its order; otherwise the vocabulary is inferred
lexicographically.

Embedding files come in two formats that round-trip bit-exactly at 32-bit
precision:

  jsonl   one `{"instance_id": ..., "vector": [...]}` object per line
  bin     magic `AEMB`, version uint16 LE = 1, dim uint32 LE,
          count uint64 LE; then per row: id length uint16 LE, id UTF-8
          bytes, dim IEEE-754 binary32 LE values
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .model import AnnotationRecord, Dataset, LabelSet, SchemaError

EMBEDDING_MAGIC = b"AEMB"
EMBEDDING_VERSION = 1
EMBEDDING_FORMATS = ("jsonl", "bin")


class ParseError(SchemaError):
    """Schema error tied to a specific file location."""

    def __init__(self, path, lineno: Optional[int], message: str):
        self.path = str(path)
        self.lineno = lineno
        where = f"{self.path}:{lineno}" if lineno is not None else self.path
        super().__init__(f"{where}: {message}")


class LabelMapping:
    """Single-step label rename applied before judgment expansion."""

    def __init__(self, mapping: Mapping[str, str]):
        for src, dst in mapping.items():
            if not isinstance(src, str) or not isinstance(dst, str):
                raise SchemaError("label mapping must map strings to strings")
            if src != dst and dst in mapping and mapping[dst] != dst:
                raise SchemaError(
                    f"label mapping is not single-step: {src!r} -> {dst!r} -> {mapping[dst]!r}"
                )
        self.mapping = dict(mapping)

    @classmethod
    def load(cls, path) -> "LabelMapping":
        with open(path, encoding="utf-8") as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParseError(path, None, f"invalid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise ParseError(path, None, "label mapping must be a JSON object")
        return cls(obj)

    def apply(self, labels: Sequence[str]) -> list[str]:
        """Map labels, deduplicating collisions while keeping first occurrence."""
        out: list[str] = []
        for label in labels:
            mapped = self.mapping.get(label, label)
            if mapped not in out:
                out.append(mapped)
        return out


class EmbeddingStore:
    """Dense fixed-dimension float32 vector per instance id."""

    __slots__ = ("dim", "vectors")

    def __init__(self, dim: int, vectors: Mapping[str, np.ndarray]):
        if dim < 1:
            raise SchemaError(f"embedding dim must be >= 1, got {dim}")
        self.dim = int(dim)
        self.vectors: dict[str, np.ndarray] = {}
        for iid, vec in vectors.items():
            arr = np.asarray(vec, dtype=np.float32)
            if arr.shape != (self.dim,):
                raise SchemaError(
                    f"embedding for {iid!r} has dim {arr.shape}, expected ({self.dim},)"
                )
            if not np.isfinite(arr).all():
                raise SchemaError(f"non-finite embedding component for {iid!r}")
            arr.flags.writeable = False
            self.vectors[iid] = arr

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(self.vectors.keys())

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, instance_id: object) -> bool:
        return instance_id in self.vectors

    def vector(self, instance_id: str) -> np.ndarray:
        if instance_id not in self.vectors:
            raise KeyError(f"no embedding for instance {instance_id!r}")
        return self.vectors[instance_id]

    def matrix(self, instance_ids: Iterable[str]) -> np.ndarray:
        """Row-stacked float32 matrix for the given ids, in the given order."""
        ids = list(instance_ids)
        out = np.empty((len(ids), self.dim), dtype=np.float32)
        for row, iid in enumerate(ids):
            out[row] = self.vector(iid)
        return out


@dataclass
class AlignmentReport:
    """Ids present on one side of the dataset/embedding pairing only."""

    missing_embeddings: list[str] = field(default_factory=list)
    orphan_embeddings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        """True when every dataset instance has an embedding (orphans allowed)."""
        return not self.missing_embeddings


def validate_alignment(dataset: Dataset, store: EmbeddingStore) -> AlignmentReport:
    dataset_ids = set(dataset.instance_ids)
    return AlignmentReport(
        missing_embeddings=[iid for iid in dataset.instance_ids if iid not in store],
        orphan_embeddings=[iid for iid in store.ids if iid not in dataset_ids],
    )


def parse_judgment_file(path, mapping: Optional[LabelMapping] = None) -> Dataset:
    """Parse a judgment jsonl file into a Dataset.

    The label mapping, when given, is applied before expansion; a record
    whose mapped labels collide keeps a single copy of the label.
    """
    records: list[AnnotationRecord] = []
    texts: dict[str, str] = {}
    declared: Optional[LabelSet] = None
    seen_pairs: set[tuple[str, str]] = set()

    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(path, lineno, f"invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise ParseError(path, lineno, "line is not a JSON object")

            if "label_set" in obj:
                if records or declared is not None:
                    raise ParseError(
                        path, lineno, "label_set header must be the first line"
                    )
                names = obj["label_set"]
                if not isinstance(names, list) or not all(
                    isinstance(n, str) for n in names
                ):
                    raise ParseError(path, lineno, "label_set must be a string array")
                try:
                    declared = LabelSet(names)
                except SchemaError as exc:
                    raise ParseError(path, lineno, str(exc)) from exc
                continue

            record = _parse_record_line(path, lineno, obj, mapping, declared)
            pair = (record.instance_id, record.annotator_id)
            if pair in seen_pairs:
                raise ParseError(
                    path, lineno, f"duplicate record for instance/annotator pair {pair!r}"
                )
            seen_pairs.add(pair)
            records.append(record)
            text = obj.get("text")
            if text is not None and record.instance_id not in texts:
                texts[record.instance_id] = text

    if not records:
        raise ParseError(path, None, "no judgments")
    return Dataset.from_records(records, label_set=declared, texts=texts)


def _parse_record_line(path, lineno, obj, mapping, declared) -> AnnotationRecord:
    instance_id = obj.get("instance_id")
    annotator_id = obj.get("annotator_id")
    labels = obj.get("labels")
    if not isinstance(instance_id, str) or not instance_id:
        raise ParseError(path, lineno, "missing or invalid instance_id")
    if not isinstance(annotator_id, str) or not annotator_id:
        raise ParseError(path, lineno, "missing or invalid annotator_id")
    if (
        not isinstance(labels, list)
        or not labels
        or not all(isinstance(name, str) and name for name in labels)
    ):
        raise ParseError(path, lineno, "labels must be a non-empty string array")
    if len(set(labels)) != len(labels):
        raise ParseError(path, lineno, f"duplicate labels in record: {labels!r}")
    text = obj.get("text")
    if text is not None and not isinstance(text, str):
        raise ParseError(path, lineno, "text must be a string")

    if mapping is not None:
        labels = mapping.apply(labels)
    if declared is not None:
        for name in labels:
            if name not in declared:
                raise ParseError(
                    path, lineno, f"unknown label {name!r} after mapping"
                )
    return AnnotationRecord(instance_id, annotator_id, tuple(labels))


def write_judgment_file(dataset: Dataset, path) -> None:
    """Serialize a dataset back to judgment jsonl (vocabulary header included).

    Judgments are grouped back into one record per (instance, annotator)
    pair, preserving canonical instance order and per-record label order, so
    parse(write(d)) reproduces the judgment multiset exactly.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"label_set": list(dataset.label_set)}) + "\n")
        for iid in dataset.instance_ids:
            by_annotator: dict[str, list[str]] = {}
            for j in dataset.judgments_for(iid):
                by_annotator.setdefault(j.annotator_id, []).append(j.label)
            text = dataset.text(iid)
            first = True
            for annotator_id, labels in by_annotator.items():
                row = {
                    "instance_id": iid,
                    "annotator_id": annotator_id,
                    "labels": labels,
                }
                if first and text is not None:
                    row["text"] = text
                first = False
                fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def parse_embeddings(path, fmt: str = "jsonl") -> EmbeddingStore:
    if fmt == "jsonl":
        return _parse_embeddings_jsonl(path)
    if fmt == "bin":
        return _parse_embeddings_bin(path)
    raise ValueError(f"unknown embedding format {fmt!r}, expected one of {EMBEDDING_FORMATS}")


def write_embeddings(store: EmbeddingStore, path, fmt: str = "jsonl") -> None:
    if fmt == "jsonl":
        _write_embeddings_jsonl(store, path)
    elif fmt == "bin":
        _write_embeddings_bin(store, path)
    else:
        raise ValueError(f"unknown embedding format {fmt!r}, expected one of {EMBEDDING_FORMATS}")


def _parse_embeddings_jsonl(path) -> EmbeddingStore:
    vectors: dict[str, np.ndarray] = {}
    dim: Optional[int] = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(path, lineno, f"invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise ParseError(path, lineno, "line is not a JSON object")
            iid = obj.get("instance_id")
            vec = obj.get("vector")
            if not isinstance(iid, str) or not iid:
                raise ParseError(path, lineno, "missing or invalid instance_id")
            if (
                not isinstance(vec, list)
                or not vec
                or not all(
                    isinstance(x, (int, float)) and not isinstance(x, bool)
                    for x in vec
                )
            ):
                raise ParseError(path, lineno, "vector must be a non-empty number array")
            if any(not math.isfinite(x) for x in vec):
                raise ParseError(path, lineno, f"non-finite value in vector for {iid!r}")
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise ParseError(
                    path, lineno,
                    f"dimension mismatch: expected {dim}, got {len(vec)} for {iid!r}",
                )
            if iid in vectors:
                raise ParseError(path, lineno, f"duplicate instance_id {iid!r}")
            with np.errstate(over="ignore"):
                arr = np.asarray(vec, dtype=np.float32)
            if not np.isfinite(arr).all():
                raise ParseError(
                    path, lineno, f"value overflows 32-bit float for {iid!r}"
                )
            vectors[iid] = arr
    if dim is None:
        raise ParseError(path, None, "no embeddings")
    return EmbeddingStore(dim, vectors)


def _write_embeddings_jsonl(store: EmbeddingStore, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for iid in store.ids:
            # float() of a float32 is exact, and repr round-trips, so the
            # decimal form parses back to the identical binary32 value
            vec = [float(x) for x in store.vectors[iid]]
            fh.write(
                json.dumps({"instance_id": iid, "vector": vec}, ensure_ascii=False)
                + "\n"
            )


_HEADER = struct.Struct("<4sHIQ")
_ROW_PREFIX = struct.Struct("<H")


def _parse_embeddings_bin(path) -> EmbeddingStore:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ParseError(path, None, "truncated header")
        magic, version, dim, count = _HEADER.unpack(header)
        if magic != EMBEDDING_MAGIC:
            raise ParseError(path, None, f"bad magic {magic!r}")
        if version != EMBEDDING_VERSION:
            raise ParseError(path, None, f"unsupported version {version}")
        if dim < 1:
            raise ParseError(path, None, f"invalid dim {dim}")
        vectors: dict[str, np.ndarray] = {}
        row_bytes = 4 * dim
        for row in range(count):
            prefix = fh.read(_ROW_PREFIX.size)
            if len(prefix) != _ROW_PREFIX.size:
                raise ParseError(path, None, f"truncated row {row}")
            (id_len,) = _ROW_PREFIX.unpack(prefix)
            id_raw = fh.read(id_len)
            if len(id_raw) != id_len:
                raise ParseError(path, None, f"truncated id in row {row}")
            try:
                iid = id_raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise ParseError(path, None, f"invalid UTF-8 id in row {row}") from exc
            payload = fh.read(row_bytes)
            if len(payload) != row_bytes:
                raise ParseError(path, None, f"truncated vector in row {row}")
            arr = np.frombuffer(payload, dtype="<f4").astype(np.float32)
            if not np.isfinite(arr).all():
                raise ParseError(path, None, f"non-finite value in vector for {iid!r}")
            if iid in vectors:
                raise ParseError(path, None, f"duplicate instance_id {iid!r}")
            vectors[iid] = arr
        if fh.read(1):
            raise ParseError(path, None, "trailing data after last row")
    return EmbeddingStore(dim, vectors)


def _write_embeddings_bin(store: EmbeddingStore, path) -> None:
    with open(path, "wb") as fh:
        fh.write(
            _HEADER.pack(EMBEDDING_MAGIC, EMBEDDING_VERSION, store.dim, len(store))
        )
        for iid in store.ids:
            id_raw = iid.encode("utf-8")
            if len(id_raw) > 0xFFFF:
                raise SchemaError(f"instance id too long for binary format: {iid!r}")
            fh.write(_ROW_PREFIX.pack(len(id_raw)))
            fh.write(id_raw)
            fh.write(store.vectors[iid].astype("<f4").tobytes())

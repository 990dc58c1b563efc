"""Embedding job: judgment file in, embedding file out."""

from __future__ import annotations

from dataclasses import dataclass

from .encoders import DEFAULT_MODEL, get_encoder
from .texts import read_instance_texts
from .writers import write_embedding_file


@dataclass(frozen=True)
class EmbedJobConfig:
    input_path: str
    output_path: str
    output_format: str = "jsonl"
    model: str = DEFAULT_MODEL
    batch_size: int = 32

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


def run_job(config: EmbedJobConfig) -> int:
    """Embed every unique instance text; returns the number of rows written."""
    texts = read_instance_texts(config.input_path)
    encoder = get_encoder(config.model)
    ids = list(texts.keys())
    matrix = encoder.encode([texts[iid] for iid in ids], config.batch_size)
    write_embedding_file(ids, matrix, config.output_path, config.output_format)
    return len(ids)

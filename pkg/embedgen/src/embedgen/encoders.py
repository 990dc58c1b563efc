"""Text encoders: pretrained sentence-embedding models plus an offline
deterministic fallback.

The default model is the sentence-transformers checkpoint
"all-mpnet-base-v2". For environments without model access (CI, air-gapped
boxes) the built-in `hash:<dim>` encoder embeds texts by signed character
n-gram feature hashing; it is deterministic across runs and platforms and
produces the same file formats, so the downstream pipeline can be
exercised without any model download.
"""

from __future__ import annotations

import hashlib
import re

import numpy as np

DEFAULT_MODEL = "all-mpnet-base-v2"

_HASH_SPEC = re.compile(r"^hash:(\d+)$")


class EncoderError(RuntimeError):
    """Model could not be loaded or used."""


class HashingEncoder:
    """Signed feature hashing of character 3-5-grams, L2-normalized.

    Grams are hashed with blake2b (stable across processes, unlike
    Python's salted hash()); the top bit picks the sign, the rest the
    bucket. The whole text is also hashed as one feature so no non-empty
    text maps to the zero vector.
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise EncoderError(f"hash encoder dim must be >= 1, got {dim}")
        self.dim = dim

    @property
    def name(self) -> str:
        return f"hash:{self.dim}"

    def _features(self, text: str):
        lowered = text.lower()
        yield lowered
        for n in (3, 4, 5):
            for i in range(len(lowered) - n + 1):
                yield lowered[i : i + n]

    def encode(self, texts: list[str], batch_size: int = 32) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            for gram in self._features(text):
                digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
                value = int.from_bytes(digest, "little")
                sign = 1.0 if value >> 63 else -1.0
                out[row, value % self.dim] += sign
            norm = np.linalg.norm(out[row])
            if norm > 0:
                out[row] /= norm
        return out.astype(np.float32)


class SentenceTransformerEncoder:
    """Wrapper over a sentence-transformers checkpoint (inference only)."""

    def __init__(self, model_id: str):
        self.model_id = model_id
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise EncoderError(
                f"sentence-transformers is not installed; cannot load {model_id!r} "
                "(install the 'model' extra or use the hash:<dim> encoder)"
            ) from exc
        try:
            self._model = SentenceTransformer(model_id)
        except Exception as exc:
            raise EncoderError(f"failed to load model {model_id!r}: {exc}") from exc

    @property
    def name(self) -> str:
        return self.model_id

    def encode(self, texts: list[str], batch_size: int = 32) -> np.ndarray:
        vectors = self._model.encode(
            texts,
            batch_size=batch_size,
            convert_to_numpy=True,
            show_progress_bar=False,
        )
        return np.asarray(vectors, dtype=np.float32)


def get_encoder(model: str):
    match = _HASH_SPEC.match(model)
    if match:
        return HashingEncoder(int(match.group(1)))
    return SentenceTransformerEncoder(model)

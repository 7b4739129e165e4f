"""Embedding providers and the description-level embedding matrix.

Three providers back the blocking stage: a remote HTTP service, a
precomputed-embedding file, and a deterministic character-n-gram hash
embedder used for tests and offline runs.  All vectors are float32,
L2-normalized, and keyed by (entity IRI, item index).
"""

import base64
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
import requests

from .graph import Iri
from .text import TextBundle

EMBED_BATCH_SIZE = 128


class ProviderError(Exception):
    """Embedding provider failed; fatal for the requesting stage."""


class EmbeddingProvider:
    """Maps a batch of texts to unit-norm float32 vectors, deterministically."""

    def embed(self, texts: list[str]) -> np.ndarray:
        raise NotImplementedError


def _l2_normalize(vectors: np.ndarray) -> np.ndarray:
    vectors = np.asarray(vectors, dtype=np.float32)
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return (vectors / norms).astype(np.float32)


class HashEmbedder(EmbeddingProvider):
    """Character n-gram hashing into a fixed-dimension signed count vector.

    Identical strings always produce identical vectors (crc32 is stable
    across runs and platforms), and cosine grows with n-gram overlap, which
    is all the desk-scale pipeline needs.
    """

    def __init__(self, dim: int = 64, ngram: int = 3):
        if dim < 2 or ngram < 1:
            raise ValueError("dim must be >= 2 and ngram >= 1")
        self.dim = dim
        self.ngram = ngram
        self._cache: dict[str, np.ndarray] = {}

    def _embed_one(self, text: str) -> np.ndarray:
        cached = self._cache.get(text)
        if cached is not None:
            return cached
        vec = np.zeros(self.dim, dtype=np.float64)
        padded = f" {text} "
        grams = (
            [padded[i:i + self.ngram] for i in range(len(padded) - self.ngram + 1)]
            if len(padded) >= self.ngram
            else [padded]
        )
        for gram in grams:
            h = zlib.crc32(gram.encode("utf-8"))
            sign = 1.0 if (h >> 16) & 1 else -1.0
            vec[h % self.dim] += sign
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            vec[0] = 1.0
            norm = 1.0
        out = (vec / norm).astype(np.float32)
        self._cache[text] = out
        return out

    def embed(self, texts: list[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dim), dtype=np.float32)
        return np.stack([self._embed_one(t) for t in texts])


class RemoteEmbeddingProvider(EmbeddingProvider):
    """Client for the inference service's POST /embed endpoint."""

    def __init__(self, base_url: str, model_id: str, timeout: float = 120.0,
                 session: requests.Session | None = None):
        self.base_url = base_url.rstrip("/")
        self.model_id = model_id
        self.timeout = timeout
        self._session = session or requests.Session()

    def embed(self, texts: list[str]) -> np.ndarray:
        try:
            resp = self._session.post(
                f"{self.base_url}/embed",
                json={"modelId": self.model_id, "texts": texts},
                timeout=self.timeout,
            )
            resp.raise_for_status()
            payload = resp.json()
        except requests.RequestException as exc:
            raise ProviderError(f"embed request failed for model {self.model_id}: {exc}") from exc
        try:
            dim = int(payload["dim"])
            vectors = decode_vectors(payload["vectors"], dim)
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderError(f"malformed embed response: {exc}") from exc
        if vectors.shape[0] != len(texts):
            raise ProviderError(
                f"embed returned {vectors.shape[0]} vectors for {len(texts)} texts"
            )
        return vectors


def encode_vector(vector: np.ndarray) -> str:
    """float32 little-endian -> base64 (the wire/file vector encoding)."""
    return base64.b64encode(np.asarray(vector, dtype="<f4").tobytes()).decode("ascii")


def decode_vector(data: str, dim: int) -> np.ndarray:
    vec = np.frombuffer(base64.b64decode(data), dtype="<f4")
    if vec.shape[0] != dim:
        raise ValueError(f"vector payload has {vec.shape[0]} floats, expected {dim}")
    return vec.astype(np.float32)


def decode_vectors(data: list[str], dim: int) -> np.ndarray:
    if not data:
        return np.zeros((0, dim), dtype=np.float32)
    return np.stack([decode_vector(item, dim) for item in data])


@dataclass
class EmbeddingMatrix:
    """Rows of unit vectors aligned with (entity, item index) keys."""

    keys: list[tuple[Iri, int]]
    vectors: np.ndarray  # (len(keys), dim) float32

    def __post_init__(self):
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.keys):
            raise ValueError("vectors must be a 2-d array with one row per key")
        self.vectors = _l2_normalize(self.vectors)

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def row_index(self) -> dict[tuple[Iri, int], int]:
        return {key: i for i, key in enumerate(self.keys)}


def build_matrix(
    bundles: dict[Iri, TextBundle],
    provider: EmbeddingProvider,
    batch_size: int = EMBED_BATCH_SIZE,
) -> EmbeddingMatrix:
    """Embed every text item of every bundle in deterministic key order."""
    keys: list[tuple[Iri, int]] = []
    texts: list[str] = []
    for entity in sorted(bundles):
        for idx, item in enumerate(bundles[entity].items):
            keys.append((entity, idx))
            texts.append(item.text)
    chunks: list[np.ndarray] = []
    for start in range(0, len(texts), batch_size):
        batch = texts[start:start + batch_size]
        try:
            vectors = provider.embed(batch)
        except ProviderError:
            raise
        except Exception as exc:
            raise ProviderError(
                f"provider failed on batch starting at text {start}: {exc}"
            ) from exc
        if len(vectors) != len(batch):
            raise ProviderError(
                f"provider returned {len(vectors)} vectors for a batch of {len(batch)}"
            )
        chunks.append(np.asarray(vectors, dtype=np.float32))
    if chunks:
        matrix = np.concatenate(chunks, axis=0)
    else:
        matrix = np.zeros((0, 1), dtype=np.float32)
    return EmbeddingMatrix(keys=keys, vectors=matrix)


EMBEDDING_FILE_HEADER_PREFIX = "dim="


def save_embedding_file(matrix: EmbeddingMatrix, path: Union[str, Path]) -> None:
    """Write `dim=<d>` then one `<entity>\\t<index>\\t<base64 float32>` row per key."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{EMBEDDING_FILE_HEADER_PREFIX}{matrix.dim}\n")
        for (entity, idx), row in zip(matrix.keys, matrix.vectors):
            fh.write(f"{entity}\t{idx}\t{encode_vector(row)}\n")


def load_embedding_file(path: Union[str, Path]) -> EmbeddingMatrix:
    keys: list[tuple[Iri, int]] = []
    rows: list[np.ndarray] = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith(EMBEDDING_FILE_HEADER_PREFIX):
            raise ValueError(f"{path}: missing '{EMBEDDING_FILE_HEADER_PREFIX}<d>' header")
        dim = int(header[len(EMBEDDING_FILE_HEADER_PREFIX):])
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 tab-separated fields")
            entity, idx, payload = fields
            keys.append((entity, int(idx)))
            rows.append(decode_vector(payload, dim))
    vectors = np.stack(rows) if rows else np.zeros((0, dim), dtype=np.float32)
    return EmbeddingMatrix(keys=keys, vectors=vectors)


class PrecomputedProvider:
    """Serves an EmbeddingMatrix loaded from file, keyed by (entity, index).

    Not a text->vector provider: lookups happen by key, which is how the
    candidate generator consumes it when `--provider file` is selected.
    """

    def __init__(self, matrix: EmbeddingMatrix):
        self.matrix = matrix
        self._index = matrix.row_index()

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "PrecomputedProvider":
        return cls(load_embedding_file(path))

    def submatrix(self, keys: list[tuple[Iri, int]]) -> np.ndarray:
        missing = [k for k in keys if k not in self._index]
        if missing:
            raise ProviderError(
                f"embedding file lacks {len(missing)} key(s), e.g. {missing[0]}"
            )
        rows = [self._index[k] for k in keys]
        return self.matrix.vectors[rows]

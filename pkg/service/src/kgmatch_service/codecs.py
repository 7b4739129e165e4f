"""Wire encoding for vectors: float32 little-endian, base64.

Matches the embedding-file and /embed payload encoding used by the
pipeline clients, so the bytes round-trip exactly.
"""

import base64

import numpy as np


def encode_vector(vector: np.ndarray) -> str:
    return base64.b64encode(np.asarray(vector, dtype="<f4").tobytes()).decode("ascii")


def encode_matrix(matrix: np.ndarray) -> list[str]:
    return [encode_vector(row) for row in np.asarray(matrix, dtype=np.float32)]


def decode_vector(data: str, dim: int) -> np.ndarray:
    vec = np.frombuffer(base64.b64decode(data), dtype="<f4")
    if vec.shape[0] != dim:
        raise ValueError(f"vector payload has {vec.shape[0]} floats, expected {dim}")
    return vec.astype(np.float32)

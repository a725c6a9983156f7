"""Mutual matching score between projected queries and moment features."""
from dataclasses import dataclass

import numpy as np

from core.errors import DegenerateEmbeddingError, DimensionMismatchError
from grounding.text_encoder import QueryEmbedding


@dataclass(frozen=True)
class MatchProjection:
    """Query-side projection f^q_mm = W_mm f^q + b_mm."""
    weight: np.ndarray  # d x d
    bias: np.ndarray  # d

    def __post_init__(self):
        d = self.weight.shape[0]
        if self.weight.shape != (d, d) or self.bias.shape != (d,):
            raise DimensionMismatchError(d, self.bias.shape[0], "projection bias")
        if not (np.all(np.isfinite(self.weight)) and np.all(np.isfinite(self.bias))):
            raise DegenerateEmbeddingError("projection parameters must be finite")

    @property
    def dim(self) -> int:
        return self.weight.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "MatchProjection":
        return cls(weight=np.eye(dim), bias=np.zeros(dim))


def l2_normalize(x: np.ndarray) -> np.ndarray:
    """Normalize along the last axis. Shared by scoring and the reference scorer so both round identically."""
    norm = np.sqrt(np.sum(x * x, axis=-1, keepdims=True))
    if np.any(norm == 0) or not np.all(np.isfinite(norm)):
        raise DegenerateEmbeddingError("cannot l2-normalize a zero or non-finite vector")
    return x / norm


def project_query(query: QueryEmbedding, projection: MatchProjection) -> np.ndarray:
    if query.vector.shape != (projection.dim,):
        raise DimensionMismatchError(projection.dim, query.vector.shape[-1], "query embedding dim")
    projected = projection.weight @ query.vector + projection.bias
    return l2_normalize(projected)


def cosine_scores(moments_normalized: np.ndarray, query_normalized: np.ndarray) -> np.ndarray:
    return np.clip(np.sum(moments_normalized * query_normalized, axis=-1), -1.0, 1.0)


def matching_score(query: QueryEmbedding, moment_vector: np.ndarray, projection: MatchProjection) -> float:
    """s_mm = normalize(W q + b) . normalize(f^v), in [-1, 1]."""
    if moment_vector.shape != (projection.dim,):
        raise DimensionMismatchError(projection.dim, moment_vector.shape[-1], "moment vector dim")
    q = project_query(query, projection)
    v = l2_normalize(np.asarray(moment_vector, dtype=np.float64))
    return float(cosine_scores(v, q))

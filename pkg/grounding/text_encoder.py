"""Query text encoders producing d-dimensional query embeddings f^q."""
import hashlib
import json
import logging
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List

import numpy as np

from core.errors import EmptyQueryError, StoreParseError

logger = logging.getLogger(__name__)

# Bracketed identifiers such as "[V]" or "[sks]" stay one token.
TOKEN_PATTERN = re.compile(r"\[[^\[\]\s]+\]|\w+")


def tokenize(text: str) -> List[str]:
    return [token.lower() for token in TOKEN_PATTERN.findall(text)]


@dataclass(frozen=True)
class QueryEmbedding:
    text: str
    vector: np.ndarray


class TextEncoder(ABC):
    """Pluggable text encoder; implementations must be deterministic."""

    dim: int

    @abstractmethod
    def encode(self, text: str) -> QueryEmbedding:
        raise NotImplementedError


class HashTextEncoder(TextEncoder):
    """Seeded token hashing, mean-pooled over tokens.

    Each token maps to a standard-normal vector drawn from a generator seeded by
    blake2b(seed, token), so embeddings are stable across processes.
    """

    def __init__(self, dim: int, seed: int = 0):
        if dim < 1:
            raise ValueError(f"embedding dim must be >= 1, got {dim}")
        self.dim = dim
        self.seed = seed

    def token_vector(self, token: str) -> np.ndarray:
        digest = hashlib.blake2b(f"{self.seed}:{token}".encode("utf-8"), digest_size=8).digest()
        rng = np.random.default_rng(int.from_bytes(digest, "big"))
        return rng.standard_normal(self.dim)

    def encode(self, text: str) -> QueryEmbedding:
        tokens = tokenize(text or "")
        if not tokens:
            raise EmptyQueryError(f"query text {text!r} has no tokens")
        vector = np.mean([self.token_vector(t) for t in tokens], axis=0)
        return QueryEmbedding(text=text, vector=vector)


class FileTextEncoder(TextEncoder):
    """Embeddings precomputed by an external encoder, stored as JSON {text: [floats]}."""

    def __init__(self, path):
        self.path = Path(path)
        try:
            raw = json.loads(self.path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise StoreParseError(self.path, str(e)) from e
        self._table: Dict[str, np.ndarray] = {text: np.asarray(v, dtype=np.float64) for text, v in raw.items()}
        dims = {v.shape for v in self._table.values()}
        if len(dims) != 1:
            raise StoreParseError(self.path, f"embeddings must share one 1-D shape, found {sorted(dims)}")
        (shape,) = dims
        self.dim = shape[0]

    def encode(self, text: str) -> QueryEmbedding:
        if not text or not text.strip():
            raise EmptyQueryError("query text is empty")
        try:
            return QueryEmbedding(text=text, vector=self._table[text])
        except KeyError:
            raise EmptyQueryError(f"no precomputed embedding for {text!r} in {self.path}") from None

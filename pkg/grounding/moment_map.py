"""2D temporal moment maps: FC reduction of clip features plus span max-pooling."""
from dataclasses import dataclass

import numpy as np

from core.errors import DimensionMismatchError, GroundingError


@dataclass(frozen=True)
class LinearReducer:
    """r = W x + b, mapping D-dim clip features into the d-dim joint space."""
    weight: np.ndarray  # d x D
    bias: np.ndarray  # d

    def __post_init__(self):
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise DimensionMismatchError(self.weight.shape[0], self.bias.shape[-1], "reducer bias")
        if not (np.all(np.isfinite(self.weight)) and np.all(np.isfinite(self.bias))):
            raise GroundingError("reducer parameters must be finite")

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "LinearReducer":
        return cls(weight=np.eye(dim), bias=np.zeros(dim))

    @classmethod
    def orthonormal(cls, in_dim: int, out_dim: int, seed: int = 0) -> "LinearReducer":
        """Seeded reducer with orthonormal rows (requires out_dim <= in_dim)."""
        if out_dim > in_dim:
            raise DimensionMismatchError(in_dim, out_dim, "reducer output dim (must not exceed input dim)")
        rng = np.random.default_rng(seed)
        q, _ = np.linalg.qr(rng.standard_normal((in_dim, out_dim)))
        return cls(weight=q.T.copy(), bias=np.zeros(out_dim))

    def reduce(self, clip_features: np.ndarray) -> np.ndarray:
        x = np.asarray(clip_features, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise DimensionMismatchError(self.in_dim, x.shape[-1], "reducer input dim")
        return x @ self.weight.T + self.bias


@dataclass(frozen=True)
class MomentMap:
    video_id: str
    features: np.ndarray  # N x N x d, zeros where invalid
    valid_mask: np.ndarray  # N x N bool, True where i <= j

    @property
    def num_clips(self) -> int:
        return self.features.shape[0]

    def moment(self, start: int, end: int) -> np.ndarray:
        if not self.valid_mask[start, end]:
            raise GroundingError(f"({start}, {end}) is not a valid moment of '{self.video_id}'")
        return self.features[start, end]


def build_moment_map(video_id: str, clip_features: np.ndarray, reducer: LinearReducer) -> MomentMap:
    """F[i][j] = elementwise max of reduced clip features r_i..r_j for i <= j."""
    reduced = reducer.reduce(clip_features)
    n, d = reduced.shape
    features = np.zeros((n, n, d), dtype=np.float64)
    for i in range(n):
        running = reduced[i].copy()
        features[i, i] = running
        for j in range(i + 1, n):
            running = np.maximum(running, reduced[j])
            features[i, j] = running
    valid = np.triu(np.ones((n, n), dtype=bool))
    return MomentMap(video_id=video_id, features=features, valid_mask=valid)

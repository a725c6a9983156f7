"""Persisted grounding parameters: reducer (W_fc, b_fc) and match projection (W_mm, b_mm)."""
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from core.errors import DimensionMismatchError, StoreParseError
from grounding.matching import MatchProjection
from grounding.moment_map import LinearReducer

logger = logging.getLogger(__name__)

WEIGHTS_FORMAT_VERSION = 1


def _paths(path):
    base = Path(path)
    if base.suffix == ".npz":
        base = base.with_suffix("")
    return base.with_suffix(".npz"), base.with_suffix(".json")


@dataclass(frozen=True)
class GroundingWeights:
    reducer: LinearReducer
    projection: MatchProjection

    def __post_init__(self):
        if self.reducer.out_dim != self.projection.dim:
            raise DimensionMismatchError(self.projection.dim, self.reducer.out_dim, "reducer output vs projection dim")

    @property
    def feature_dim(self) -> int:
        return self.reducer.in_dim

    @property
    def joint_dim(self) -> int:
        return self.projection.dim

    @classmethod
    def default(cls, feature_dim: int, joint_dim: Optional[int] = None, seed: int = 0) -> "GroundingWeights":
        """Identity reducer when d = D, seeded orthonormal rows otherwise; W_mm = I, b_mm = 0."""
        d = joint_dim or feature_dim
        if d == feature_dim:
            reducer = LinearReducer.identity(feature_dim)
        else:
            reducer = LinearReducer.orthonormal(feature_dim, d, seed=seed)
        return cls(reducer=reducer, projection=MatchProjection.identity(d))

    def save(self, path) -> Path:
        matrix_path, sidecar_path = _paths(path)
        matrix_path.parent.mkdir(parents=True, exist_ok=True)
        np.savez(
            matrix_path,
            reducer_weight=self.reducer.weight,
            reducer_bias=self.reducer.bias,
            mm_weight=self.projection.weight,
            mm_bias=self.projection.bias,
        )
        sidecar_path.write_text(
            json.dumps(
                {
                    "format_version": WEIGHTS_FORMAT_VERSION,
                    "feature_dim": self.feature_dim,
                    "joint_dim": self.joint_dim,
                },
                indent=2,
            ),
            encoding="utf-8",
        )
        return matrix_path

    @classmethod
    def load(cls, path) -> "GroundingWeights":
        matrix_path, sidecar_path = _paths(path)
        try:
            sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
            with np.load(matrix_path) as arrays:
                weights = cls(
                    reducer=LinearReducer(arrays["reducer_weight"], arrays["reducer_bias"]),
                    projection=MatchProjection(arrays["mm_weight"], arrays["mm_bias"]),
                )
        except (OSError, KeyError, ValueError) as e:
            raise StoreParseError(matrix_path, str(e)) from e
        if sidecar.get("feature_dim") != weights.feature_dim or sidecar.get("joint_dim") != weights.joint_dim:
            raise StoreParseError(
                sidecar_path,
                f"sidecar dims ({sidecar.get('feature_dim')}, {sidecar.get('joint_dim')}) "
                f"disagree with matrices ({weights.feature_dim}, {weights.joint_dim})",
            )
        logger.info(f"Loaded grounding weights {matrix_path} (D={weights.feature_dim}, d={weights.joint_dim})")
        return weights

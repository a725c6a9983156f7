"""Query embedding, moment maps and mutual-matching retrieval."""

from .matching import MatchProjection, l2_normalize, matching_score, project_query
from .moment_map import LinearReducer, MomentMap, build_moment_map
from .retrieval import brute_force_retrieve, retrieve
from .text_encoder import FileTextEncoder, HashTextEncoder, QueryEmbedding, TextEncoder, tokenize
from .weights import GroundingWeights

__all__ = [
    "MatchProjection",
    "l2_normalize",
    "matching_score",
    "project_query",
    "LinearReducer",
    "MomentMap",
    "build_moment_map",
    "retrieve",
    "brute_force_retrieve",
    "FileTextEncoder",
    "HashTextEncoder",
    "QueryEmbedding",
    "TextEncoder",
    "tokenize",
    "GroundingWeights",
]

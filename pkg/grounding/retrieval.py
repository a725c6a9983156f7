"""Multi-sentence moment retrieval over a feature corpus."""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np

from core.errors import DegenerateEmbeddingError, EmptyStoreError
from core.models import MomentCandidate, RetrievalResult
from grounding.matching import cosine_scores, l2_normalize, matching_score, project_query
from grounding.moment_map import build_moment_map
from grounding.text_encoder import TextEncoder
from grounding.weights import GroundingWeights

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class _MomentTable:
    """Normalized valid moments of one video, in (start asc, end asc) order."""
    video_id: str
    starts: np.ndarray
    ends: np.ndarray
    vectors: np.ndarray  # M x d, unit rows


def _moment_table(video_id: str, clip_features: np.ndarray, weights: GroundingWeights) -> _MomentTable:
    moment_map = build_moment_map(video_id, clip_features, weights.reducer)
    starts, ends = np.triu_indices(moment_map.num_clips)
    raw = moment_map.features[starts, ends]
    norms = np.sqrt(np.sum(raw * raw, axis=-1))
    valid = (norms > 0) & np.isfinite(norms)
    if not np.all(valid):
        logger.warning(f"Video {video_id}: skipping {int(np.sum(~valid))} zero or non-finite moment vectors")
    return _MomentTable(video_id=video_id, starts=starts[valid], ends=ends[valid], vectors=l2_normalize(raw[valid]))


def _best_in_video(table: _MomentTable, query_vector: np.ndarray) -> Optional[MomentCandidate]:
    if not len(table.vectors):
        return None
    scores = cosine_scores(table.vectors, query_vector)
    # argmax keeps the first maximum: earlier start, then shorter span
    best = int(np.argmax(scores))
    return MomentCandidate(
        video_id=table.video_id,
        start_clip=int(table.starts[best]),
        end_clip=int(table.ends[best]),
        score=float(scores[best]),
    )


def _rank(query: str, best_per_video: Sequence[MomentCandidate], top_k: int) -> RetrievalResult:
    ranked = sorted(best_per_video, key=MomentCandidate.sort_key)
    return RetrievalResult(query=query, candidates=ranked[:top_k], truncated=top_k > len(ranked))


def _check_inputs(corpus: Mapping[str, np.ndarray], top_k: int) -> None:
    if not corpus:
        raise EmptyStoreError("feature store has no videos to ground against")
    if top_k < 1:
        raise ValueError(f"top_k must be >= 1, got {top_k}")


def retrieve(
    queries: Sequence[str],
    corpus: Mapping[str, np.ndarray],
    weights: GroundingWeights,
    encoder: TextEncoder,
    top_k: int = 1,
    jobs: int = 1,
) -> List[RetrievalResult]:
    """Top-k moments per query, at most one per video.

    Moment tables are built per video (optionally on a thread pool); merging
    always follows sorted video ids so the output does not depend on `jobs`.
    """
    _check_inputs(corpus, top_k)
    start = time.perf_counter()
    video_ids = sorted(corpus)

    def build(video_id: str) -> _MomentTable:
        return _moment_table(video_id, corpus[video_id], weights)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            tables = list(pool.map(build, video_ids))
    else:
        tables = [build(v) for v in video_ids]

    results = []
    for query in queries:
        query_vector = project_query(encoder.encode(query), weights.projection)
        best = [_best_in_video(table, query_vector) for table in tables]
        results.append(_rank(query, [c for c in best if c is not None], top_k))

    logger.info(
        f"Grounded {len(queries)} queries over {len(video_ids)} videos in {time.perf_counter() - start:.3f}s"
    )
    return results


def brute_force_retrieve(
    queries: Sequence[str],
    corpus: Mapping[str, np.ndarray],
    weights: GroundingWeights,
    encoder: TextEncoder,
    top_k: int = 1,
) -> List[RetrievalResult]:
    """Reference scorer: every (video, i <= j) moment through `matching_score`; zero moments are skipped."""
    _check_inputs(corpus, top_k)
    maps = [build_moment_map(v, corpus[v], weights.reducer) for v in sorted(corpus)]
    results = []
    for query in queries:
        embedding = encoder.encode(query)
        project_query(embedding, weights.projection)
        best_per_video = []
        for moment_map in maps:
            best: Optional[Tuple[float, int, int]] = None
            for i in range(moment_map.num_clips):
                for j in range(i, moment_map.num_clips):
                    try:
                        score = matching_score(embedding, moment_map.moment(i, j), weights.projection)
                    except DegenerateEmbeddingError:
                        continue
                    if best is None or score > best[0]:
                        best = (score, i, j)
            if best is not None:
                best_per_video.append(
                    MomentCandidate(video_id=moment_map.video_id, start_clip=best[1], end_clip=best[2], score=best[0])
                )
        results.append(_rank(query, best_per_video, top_k))
    return results

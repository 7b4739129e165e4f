"""Bi-encoder blocking: exact top-k cosine retrieval over description vectors.

Descriptions are embedded per entity-kind partition and searched exactly
(brute-force matrix cosine), in both directions.  Description hits map back
to their entities; an entity pair's confidence is the maximum cosine over
all contributing description pairs.  Retrieval stays exact rather than
approximate so results are reproducible; an ANN index would slot in at
`_topk_description_hits` if scale ever demands it.
"""

import logging
from typing import Union

import numpy as np

from .alignment import Alignment, Correspondence
from .embeddings import (
    EmbeddingMatrix,
    EmbeddingProvider,
    PrecomputedProvider,
    ProviderError,
    build_matrix,
)
from .graph import EntityKind, Iri
from .text import TextBundle

logger = logging.getLogger(__name__)

_QUERY_CHUNK = 512


def _topk_description_hits(
    queries: np.ndarray, corpus: np.ndarray, k: int
) -> list[list[tuple[int, float]]]:
    """Exact top-k by cosine for each query row, deterministic under ties.

    Corpus rows must already be in canonical (entity, index) order; a stable
    descending sort then breaks cosine ties by that order.  Similarities are
    computed in float64 so rankings do not depend on float32 accumulation
    order (vectors stay float32 only as the storage format).
    """
    hits: list[list[tuple[int, float]]] = []
    kk = min(k, corpus.shape[0])
    corpus_t = corpus.T.astype(np.float64)
    for start in range(0, queries.shape[0], _QUERY_CHUNK):
        sims = queries[start:start + _QUERY_CHUNK].astype(np.float64) @ corpus_t
        order = np.argsort(-sims, axis=1, kind="stable")[:, :kk]
        for row, idxs in enumerate(order):
            hits.append([(int(j), float(sims[row, j])) for j in idxs])
    return hits


def _entity_candidates(
    query_keys: list[tuple[Iri, int]],
    corpus_keys: list[tuple[Iri, int]],
    hits: list[list[tuple[int, float]]],
) -> dict[Iri, dict[Iri, float]]:
    """Map description-level hits back to entities, keeping the max cosine."""
    per_entity: dict[Iri, dict[Iri, float]] = {}
    for (query_entity, _), row_hits in zip(query_keys, hits):
        bucket = per_entity.setdefault(query_entity, {})
        for corpus_row, sim in row_hits:
            corpus_entity = corpus_keys[corpus_row][0]
            if sim > bucket.get(corpus_entity, float("-inf")):
                bucket[corpus_entity] = sim
    return per_entity


def _cap_per_entity(candidates: dict[Iri, float], k: int) -> list[tuple[Iri, float]]:
    """Keep the k highest-confidence targets; ties broken by IRI order."""
    ranked = sorted(candidates.items(), key=lambda item: (-item[1], item[0]))
    return ranked[:k]


def _clip_unit(value: float) -> float:
    # float32 dot products of unit vectors can exceed 1 by rounding noise.
    return min(max(value, 0.0), 1.0)


def _partition_matrix(
    matrix: EmbeddingMatrix, entities: set[Iri]
) -> tuple[list[tuple[Iri, int]], np.ndarray]:
    rows = [i for i, key in enumerate(matrix.keys) if key[0] in entities]
    return [matrix.keys[i] for i in rows], matrix.vectors[rows]


def topk_candidates(
    bundles1: dict[Iri, TextBundle],
    bundles2: dict[Iri, TextBundle],
    kinds1: dict[Iri, EntityKind],
    kinds2: dict[Iri, EntityKind],
    provider: Union[EmbeddingProvider, PrecomputedProvider],
    k: int,
) -> Alignment:
    """High-recall candidate alignment from bidirectional top-k retrieval.

    Per entity-kind partition: every description of each source entity
    retrieves its k nearest target descriptions and vice versa; hits are
    mapped to entities (confidence = best cosine), each query entity keeps at
    most k targets, and the two directional passes are unioned.  The output
    therefore holds at most k*(|O1|+|O2|) correspondences.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    matrix1 = _resolve_matrix(bundles1, provider, "source")
    matrix2 = _resolve_matrix(bundles2, provider, "target")
    if matrix1.vectors.size and matrix2.vectors.size and matrix1.dim != matrix2.dim:
        raise ProviderError(
            f"embedding dimension mismatch between graphs: {matrix1.dim} vs {matrix2.dim}"
        )

    alignment = Alignment()
    kinds_present = sorted(
        {kinds1[e] for e in bundles1 if e in kinds1}
        & {kinds2[e] for e in bundles2 if e in kinds2},
        key=lambda kind: kind.value,
    )
    for kind in kinds_present:
        side1 = {e for e in bundles1 if kinds1.get(e) is kind}
        side2 = {e for e in bundles2 if kinds2.get(e) is kind}
        keys1, vecs1 = _partition_matrix(matrix1, side1)
        keys2, vecs2 = _partition_matrix(matrix2, side2)
        if not keys1 or not keys2:
            continue

        forward = _entity_candidates(keys1, keys2, _topk_description_hits(vecs1, vecs2, k))
        for source, targets in forward.items():
            for target, sim in _cap_per_entity(targets, k):
                alignment.add(
                    Correspondence(source, target, confidence=_clip_unit(sim), kind=kind)
                )
        backward = _entity_candidates(keys2, keys1, _topk_description_hits(vecs2, vecs1, k))
        for target, sources in backward.items():
            for source, sim in _cap_per_entity(sources, k):
                alignment.add(
                    Correspondence(source, target, confidence=_clip_unit(sim), kind=kind)
                )
    return alignment


def _resolve_matrix(
    bundles: dict[Iri, TextBundle],
    provider: Union[EmbeddingProvider, PrecomputedProvider],
    side: str,
) -> EmbeddingMatrix:
    if isinstance(provider, PrecomputedProvider):
        keys = [
            (entity, idx)
            for entity in sorted(bundles)
            for idx in range(len(bundles[entity].items))
        ]
        return EmbeddingMatrix(keys=keys, vectors=provider.submatrix(keys))
    try:
        return build_matrix(bundles, provider)
    except ProviderError as exc:
        raise ProviderError(f"{side} side: {exc}") from exc


def description_candidates(
    bundles1: dict[Iri, TextBundle],
    bundles2: dict[Iri, TextBundle],
    provider: EmbeddingProvider,
    k: int,
) -> dict[Iri, dict[Iri, float]]:
    """Single-direction, single-partition entity candidates before the
    per-entity cap; exposed for the k-monotonicity property (the candidate
    sets grow with k even where the capped alignment may not)."""
    matrix1 = build_matrix(bundles1, provider)
    matrix2 = build_matrix(bundles2, provider)
    hits = _topk_description_hits(matrix1.vectors, matrix2.vectors, k)
    return _entity_candidates(matrix1.keys, matrix2.keys, hits)

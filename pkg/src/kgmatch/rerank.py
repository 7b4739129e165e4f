"""Cross-encoder re-ranking of candidate correspondences.

Each candidate's text pairs are truncated to the scorer's token budget,
scored in batches, and aggregated by max into the correspondence
confidence.  Scorers are pluggable: a remote HTTP service for real
models, a token-Jaccard mock for deterministic offline runs.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import requests

from .alignment import Alignment, Correspondence
from .embeddings import ProviderError
from .graph import Iri
from .text import PairingStrategy, TextBundle, build_text_pairs, normalize_label

logger = logging.getLogger(__name__)

SCORE_BATCH_SIZE = 32
SCORE_ATTEMPTS = 3

TextPair = tuple[str, str]


def _token_count(text: str) -> int:
    return len(text.split())


def _drop_last_token(text: str) -> str:
    return " ".join(text.split()[:-1])


def truncate_pair(
    a: str, b: str, budget: int, measure: Callable[[str], int] = _token_count
) -> TextPair:
    """Drop trailing tokens from the longer side until the pair fits."""
    if budget < 2:
        raise ValueError("budget must be at least 2 units")
    while measure(a) + measure(b) > budget:
        longer, other = (a, b) if measure(a) >= measure(b) else (b, a)
        if _token_count(longer) <= 1:
            if _token_count(other) <= 1:
                break
            longer, other = other, longer
        longer = _drop_last_token(longer)
        # Ties truncate a first, so "longer" slots back by identity of other.
        a, b = (longer, other) if other == b else (other, longer)
    return a, b


class PairScorer:
    """Scores text pairs with match probabilities in [0, 1].

    max_length is the token budget per pair; callers truncate to it before
    scoring.
    """

    max_length: int = 256

    def score(self, pairs: list[TextPair]) -> list[float]:
        raise NotImplementedError


class MockScorer(PairScorer):
    """Token Jaccard over normalized texts; deterministic and model-free."""

    def score(self, pairs: list[TextPair]) -> list[float]:
        scores = []
        for a, b in pairs:
            tokens_a = set(normalize_label(a).split())
            tokens_b = set(normalize_label(b).split())
            if not tokens_a and not tokens_b:
                scores.append(1.0)
            elif not tokens_a or not tokens_b:
                scores.append(0.0)
            else:
                scores.append(len(tokens_a & tokens_b) / len(tokens_a | tokens_b))
        return scores


class RemoteScorer(PairScorer):
    """Client for the inference service's POST /score endpoint."""

    def __init__(
        self,
        base_url: str,
        model_id: str,
        max_length: int = 256,
        timeout: float = 120.0,
        session: Optional[requests.Session] = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.model_id = model_id
        self.max_length = max_length
        self.timeout = timeout
        self._session = session or requests.Session()

    def score(self, pairs: list[TextPair]) -> list[float]:
        payload = {"modelId": self.model_id, "pairs": [[a, b] for a, b in pairs]}
        try:
            resp = self._session.post(f"{self.base_url}/score", json=payload, timeout=self.timeout)
            resp.raise_for_status()
            body = resp.json()
        except requests.RequestException as exc:
            raise ProviderError(f"scoring request failed: {exc}") from exc
        scores = body.get("scores")
        if not isinstance(scores, list) or len(scores) != len(pairs):
            raise ProviderError(f"scorer returned {scores!r} for {len(pairs)} pairs")
        return [min(max(float(s), 0.0), 1.0) for s in scores]


@dataclass(frozen=True)
class ScoreDetail:
    best_pair: TextPair
    pair_count: int
    max_score: float
    min_score: float
    mean_score: float


class ScoredAlignment(Alignment):
    """Alignment whose confidences are scorer outputs, with per-pair detail."""

    def __init__(self, correspondences: Iterable[Correspondence] = ()):
        super().__init__(correspondences)
        self._details: dict[tuple[Iri, Iri], ScoreDetail] = {}

    def add_scored(self, corr: Correspondence, detail: ScoreDetail) -> None:
        self.add(corr)
        self._details[corr.pair] = detail

    def detail(self, source: Iri, target: Iri) -> ScoreDetail:
        return self._details[(source, target)]


def _score_batched(scorer: PairScorer, pairs: list[TextPair], context: str) -> list[float]:
    scores: list[float] = []
    for start in range(0, len(pairs), SCORE_BATCH_SIZE):
        batch = pairs[start:start + SCORE_BATCH_SIZE]
        last_error: Exception | None = None
        for attempt in range(1, SCORE_ATTEMPTS + 1):
            try:
                scores.extend(scorer.score(batch))
                last_error = None
                break
            except Exception as exc:
                last_error = exc
                logger.warning("scoring attempt %d/%d failed (%s): %s", attempt, SCORE_ATTEMPTS, context, exc)
        if last_error is not None:
            raise ProviderError(f"scoring failed after {SCORE_ATTEMPTS} attempts ({context})") from last_error
    return scores


def score_alignment(
    candidates: Alignment,
    bundles1: dict[Iri, TextBundle],
    bundles2: dict[Iri, TextBundle],
    strategy: PairingStrategy,
    scorer: PairScorer,
) -> ScoredAlignment:
    """Replace candidate confidences with max pair score; membership unchanged."""
    pair_texts: list[TextPair] = []
    spans: list[tuple[Correspondence, int, int]] = []
    for corr in candidates.sorted():
        bundle_a = bundles1.get(corr.source)
        bundle_b = bundles2.get(corr.target)
        if bundle_a is None or bundle_b is None:
            raise ValueError(f"no text bundle for candidate {corr.source} -> {corr.target}")
        start = len(pair_texts)
        for a, b in build_text_pairs(bundle_a, bundle_b, strategy):
            pair_texts.append(truncate_pair(a, b, scorer.max_length))
        spans.append((corr, start, len(pair_texts)))

    scores = _score_batched(scorer, pair_texts, f"{len(candidates)} candidates")

    scored = ScoredAlignment()
    for corr, start, end in spans:
        corr_scores = scores[start:end]
        best = max(range(len(corr_scores)), key=lambda i: (corr_scores[i], -i))
        detail = ScoreDetail(
            best_pair=pair_texts[start + best],
            pair_count=len(corr_scores),
            max_score=corr_scores[best],
            min_score=min(corr_scores),
            mean_score=sum(corr_scores) / len(corr_scores),
        )
        scored.add_scored(corr.with_confidence(corr_scores[best]), detail)
    return scored

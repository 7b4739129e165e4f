"""Training-pair generation for cross-encoder fine-tuning.

Positives come either from a random share of the reference alignment or
from the high-precision lexical matcher; negatives are candidate
correspondences that contradict a known positive under the one-to-one
assumption.  The output is a deterministic, seed-shuffled TSV of text
pairs.
"""

import logging
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Union

from .alignment import Alignment, Correspondence
from .candidates import topk_candidates
from .embeddings import EmbeddingProvider
from .graph import Iri, KnowledgeGraph
from .lexical import high_precision_match
from .text import PairingStrategy, TextBundle, build_text_pairs, extract_bundles

logger = logging.getLogger(__name__)


class PairLabel(Enum):
    POSITIVE = 1
    NEGATIVE = 0


class Provenance(Enum):
    REFERENCE_SAMPLED = "reference_sampled"
    PRECISION_MATCHED = "precision_matched"
    ONE_TO_ONE_NEGATIVE = "one_to_one_negative"


_POSITIVE_PROVENANCES = frozenset({Provenance.REFERENCE_SAMPLED, Provenance.PRECISION_MATCHED})


@dataclass(frozen=True)
class TrainingPair:
    text_a: str
    text_b: str
    label: PairLabel
    provenance: Provenance
    source_entity: Iri
    target_entity: Iri

    def __post_init__(self):
        expected = PairLabel.POSITIVE if self.provenance in _POSITIVE_PROVENANCES else PairLabel.NEGATIVE
        if self.label is not expected:
            raise ValueError(f"label {self.label} inconsistent with provenance {self.provenance}")


class TrainMode(Enum):
    REFERENCE = "reference"
    PRECISION_MATCHER = "precision"


@dataclass
class TrainConfig:
    mode: TrainMode = TrainMode.PRECISION_MATCHER
    sample_share: float = 0.2
    rng_seed: int = 42
    strategy: PairingStrategy = PairingStrategy.GROUPED
    k: int = 5
    # Fig-2 style sampling only ever shows the single-conflicting-endpoint
    # case; by default a candidate contradicting two positives also counts
    # as negative.
    strict_one_endpoint: bool = False
    max_depth: int = field(default=3)

    def __post_init__(self):
        if not 0.0 < self.sample_share <= 1.0:
            raise ValueError("sample_share must be in (0, 1]")


def sample_reference(reference: Alignment, share: float, seed: int) -> Alignment:
    """Uniform sample without replacement of round(share * |reference|)."""
    if not 0.0 < share <= 1.0:
        raise ValueError("share must be in (0, 1]")
    ordered = reference.sorted()
    size = int(share * len(ordered) + 0.5)
    rng = random.Random(seed)
    return Alignment(rng.sample(ordered, size))


def generate_negatives(
    positives: Alignment, recall: Alignment, strict_one_endpoint: bool = False
) -> Alignment:
    """Candidates that clash with a positive under the one-to-one assumption.

    A recall correspondence not itself a positive is negative when one of its
    endpoints is already taken by some positive (the entity "can only be
    involved in one correspondence").  Candidates touching no positive at all
    are ignored: they may still be correct.  With strict_one_endpoint, a
    candidate conflicting on both endpoints is ignored too.
    """
    pos_sources = positives.sources()
    pos_targets = positives.targets()
    negatives = Alignment()
    for corr in recall:
        if (corr.source, corr.target) in positives:
            continue
        source_taken = corr.source in pos_sources
        target_taken = corr.target in pos_targets
        if strict_one_endpoint:
            conflicting = source_taken != target_taken
        else:
            conflicting = source_taken or target_taken
        if conflicting:
            negatives.add(corr)
    return negatives


def build_training_set(
    g1: KnowledgeGraph,
    g2: KnowledgeGraph,
    config: TrainConfig,
    provider: EmbeddingProvider,
    reference: Alignment | None = None,
    bundles1: dict[Iri, TextBundle] | None = None,
    bundles2: dict[Iri, TextBundle] | None = None,
) -> list[TrainingPair]:
    """Positives per mode, negatives from the recall alignment, expanded to
    shuffled text pairs.  Deterministic for a fixed config."""
    if config.mode is TrainMode.REFERENCE:
        if reference is None:
            raise ValueError("reference alignment required in reference mode")
        positives = sample_reference(reference, config.sample_share, config.rng_seed)
        provenance = Provenance.REFERENCE_SAMPLED
    else:
        positives = high_precision_match(g1, g2)
        provenance = Provenance.PRECISION_MATCHED
    if len(positives) == 0:
        raise ValueError("no positive correspondences; cannot build a training set")

    if bundles1 is None:
        bundles1 = extract_bundles(g1, config.max_depth)
    if bundles2 is None:
        bundles2 = extract_bundles(g2, config.max_depth)
    recall = topk_candidates(bundles1, bundles2, g1.entities, g2.entities, provider, config.k)
    negatives = generate_negatives(positives, recall, config.strict_one_endpoint)
    logger.info(
        "training set: %d positives (%s), %d negatives from %d candidates",
        len(positives), provenance.value, len(negatives), len(recall),
    )

    pairs: list[TrainingPair] = []

    def expand(corr: Correspondence, label: PairLabel, prov: Provenance):
        bundle_a = bundles1.get(corr.source)
        bundle_b = bundles2.get(corr.target)
        if bundle_a is None or bundle_b is None:
            logger.warning("skipping %s -> %s: missing text bundle", corr.source, corr.target)
            return
        for text_a, text_b in build_text_pairs(bundle_a, bundle_b, config.strategy):
            pairs.append(TrainingPair(text_a, text_b, label, prov, corr.source, corr.target))

    for corr in positives.sorted():
        expand(corr, PairLabel.POSITIVE, provenance)
    for corr in negatives.sorted():
        expand(corr, PairLabel.NEGATIVE, Provenance.ONE_TO_ONE_NEGATIVE)

    random.Random(config.rng_seed).shuffle(pairs)
    return pairs


TRAINING_TSV_HEADER = "textA\ttextB\tlabel\tprovenance\tsource\ttarget"

_FIELD_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}


def escape_field(text: str) -> str:
    return "".join(_FIELD_ESCAPES.get(ch, ch) for ch in text)


def unescape_field(text: str) -> str:
    out: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            out.append({"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}.get(nxt, "\\" + nxt))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def write_training_tsv(pairs: list[TrainingPair], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(TRAINING_TSV_HEADER + "\n")
        for pair in pairs:
            fh.write(
                "\t".join((
                    escape_field(pair.text_a),
                    escape_field(pair.text_b),
                    str(pair.label.value),
                    pair.provenance.value,
                    pair.source_entity,
                    pair.target_entity,
                )) + "\n"
            )


def read_training_tsv(path: Union[str, Path]) -> list[TrainingPair]:
    pairs: list[TrainingPair] = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != TRAINING_TSV_HEADER:
            raise ValueError(f"{path}: unexpected training TSV header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 6:
                raise ValueError(f"{path}:{lineno}: expected 6 tab-separated fields")
            text_a, text_b, label, provenance, source, target = fields
            pairs.append(
                TrainingPair(
                    unescape_field(text_a),
                    unescape_field(text_b),
                    PairLabel(int(label)),
                    Provenance(provenance),
                    source,
                    target,
                )
            )
    return pairs

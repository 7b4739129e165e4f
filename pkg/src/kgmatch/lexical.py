"""String-based matchers over normalized labels and IRI fragments.

Two variants share the key-extraction machinery: the high-precision matcher
keeps only entities mapped to exactly one partner (its output seeds
cross-encoder training positives), while the baseline matcher keeps every
key collision and serves as an evaluation reference point.
"""

from collections import defaultdict

from .alignment import Alignment, Correspondence
from .graph import SKOS_LABELS, EntityKind, Iri, KnowledgeGraph, Literal, fragment_of
from .text import _LABEL_FRAGMENTS, _prefer_english, normalize_label


def lexical_keys(graph: KnowledgeGraph, entity: Iri) -> set[str]:
    """Normalized fragment plus normalized label/name and skos-label literals.

    Annotation-property recursion is deliberately excluded; empty normalized
    keys never match.
    """
    keys = {normalize_label(fragment_of(entity))}
    label_lits = [
        t.object
        for t in graph.subject_triples(entity)
        if isinstance(t.object, Literal)
        and (fragment_of(t.predicate).lower() in _LABEL_FRAGMENTS or t.predicate in SKOS_LABELS)
    ]
    keys.update(normalize_label(lit.lexical) for lit in _prefer_english(label_lits))
    keys.discard("")
    return keys


def _key_index(graph: KnowledgeGraph, kind: EntityKind) -> dict[str, list[Iri]]:
    index: dict[str, list[Iri]] = defaultdict(list)
    for entity in graph.entities_of_kind(kind):
        for key in sorted(lexical_keys(graph, entity)):
            index[key].append(entity)
    return index


def _key_matches(g1: KnowledgeGraph, g2: KnowledgeGraph) -> list[Correspondence]:
    """All cross-graph entity pairs sharing a key, per kind partition."""
    matches: dict[tuple[Iri, Iri], Correspondence] = {}
    for kind in EntityKind:
        index1 = _key_index(g1, kind)
        index2 = _key_index(g2, kind)
        for key in sorted(set(index1) & set(index2)):
            for source in index1[key]:
                for target in index2[key]:
                    pair = (source, target)
                    if pair not in matches:
                        matches[pair] = Correspondence(source, target, confidence=1.0, kind=kind)
    return list(matches.values())


def baseline_match(g1: KnowledgeGraph, g2: KnowledgeGraph) -> Alignment:
    """Shared-key matching without any one-to-one pruning."""
    return Alignment(_key_matches(g1, g2))


def high_precision_match(g1: KnowledgeGraph, g2: KnowledgeGraph) -> Alignment:
    """Shared-key matching keeping only strictly one-to-one correspondences.

    Any correspondence whose source or target participates in more than one
    candidate pair is dropped, so the output is injective in both directions.
    """
    candidates = _key_matches(g1, g2)
    source_degree: dict[Iri, int] = defaultdict(int)
    target_degree: dict[Iri, int] = defaultdict(int)
    for corr in candidates:
        source_degree[corr.source] += 1
        target_degree[corr.target] += 1
    return Alignment(
        corr
        for corr in candidates
        if source_degree[corr.source] == 1 and target_degree[corr.target] == 1
    )

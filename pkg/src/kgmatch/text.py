"""Textual descriptions of entities: extraction, normalization, grouping, pairing.

Every matchable entity gets a bundle of texts.  Short texts are the IRI
fragment, label/name literals, skos labels, and literals reached through
annotation properties; long texts are comment/description/abstract literals
and the longest literal attached to the entity.  Normalization is used only
to remove near-duplicates; the verbatim text is what gets embedded/scored.
"""

import logging
import re
from dataclasses import dataclass
from enum import Enum

from .graph import (
    SKOS_LABELS,
    Iri,
    KnowledgeGraph,
    Literal,
    fragment_of,
    is_blank_node,
)

logger = logging.getLogger(__name__)

_LABEL_FRAGMENTS = frozenset({"label", "name"})
_COMMENT_FRAGMENTS = frozenset({"comment", "description", "abstract"})

_CAMEL_BOUNDARY = re.compile(r"(?<=[a-z0-9])(?=[A-Z])|(?<=[A-Z])(?=[A-Z][a-z])")
_NON_ALNUM = re.compile(r"[\W_]+", re.UNICODE)

DEFAULT_MAX_DEPTH = 3


def normalize_label(raw: str) -> str:
    """Split camel case, replace non-alphanumerics with spaces, lowercase,
    collapse whitespace.  Idempotent."""
    spaced = _CAMEL_BOUNDARY.sub(" ", raw)
    spaced = _NON_ALNUM.sub(" ", spaced)
    return " ".join(spaced.lower().split())


class TextGroup(Enum):
    SHORT = "short"
    LONG = "long"


class TextOrigin(Enum):
    FRAGMENT = "fragment"
    LABEL_PROPERTY = "label_property"
    ANNOTATION_PROPERTY = "annotation_property"
    COMMENT_PROPERTY = "comment_property"
    LONGEST_LITERAL = "longest_literal"


_SHORT_ORIGINS = frozenset(
    {TextOrigin.FRAGMENT, TextOrigin.LABEL_PROPERTY, TextOrigin.ANNOTATION_PROPERTY}
)


@dataclass(frozen=True)
class TextItem:
    """One verbatim text with its normalized form, group, and origin."""

    text: str
    normalized: str
    group: TextGroup
    origin: TextOrigin

    @classmethod
    def make(cls, text: str, origin: TextOrigin) -> "TextItem":
        group = TextGroup.SHORT if origin in _SHORT_ORIGINS else TextGroup.LONG
        return cls(text=text, normalized=normalize_label(text), group=group, origin=origin)


@dataclass(frozen=True)
class TextBundle:
    """The ordered, deduplicated texts of one entity."""

    entity: Iri
    items: tuple[TextItem, ...]

    def texts(self) -> list[str]:
        return [item.text for item in self.items]

    def group_texts(self, group: TextGroup) -> list[str]:
        return [item.text for item in self.items if item.group is group]

    def __len__(self) -> int:
        return len(self.items)


class PairingStrategy(Enum):
    """How two bundles are turned into scorer input pairs."""

    CONCAT = "concat"
    FULL_CROSS = "cross"
    GROUPED = "grouped"


class EmptyBundleError(Exception):
    """Entity has no usable text at all (not even an IRI fragment)."""


def _prefer_english(literals: list[Literal]) -> list[Literal]:
    """Keep untagged/en literals when any exist; otherwise keep everything."""
    def preferred(lit: Literal) -> bool:
        tag = lit.language_tag
        return tag is None or tag.lower() == "en" or tag.lower().startswith("en-")

    if any(preferred(lit) for lit in literals):
        return [lit for lit in literals if preferred(lit)]
    return literals


def _literal_objects(graph: KnowledgeGraph, subject: Iri, predicate_ok) -> list[Literal]:
    return [
        t.object
        for t in graph.subject_triples(subject)
        if isinstance(t.object, Literal) and predicate_ok(t.predicate)
    ]


def _is_label_predicate(graph: KnowledgeGraph, predicate: Iri) -> bool:
    return (
        fragment_of(predicate).lower() in _LABEL_FRAGMENTS
        or predicate in SKOS_LABELS
        or predicate in graph.annotation_properties
    )


def _annotation_texts(graph: KnowledgeGraph, entity: Iri, max_depth: int) -> list[str]:
    """Literals reached by following annotation properties from the entity.

    The entity's own edges count only when the predicate is a declared
    annotation property; at recursed resources, label-like and skos
    predicates count too (rdfs:label is a built-in annotation property).
    Resource-valued objects are followed depth-first up to max_depth with a
    visited set guarding against cycles.
    """
    collected: list[Literal] = []
    visited: set[str] = {entity}

    def visit(resource: str, depth: int, entity_level: bool):
        for t in graph.subject_triples(resource):
            if entity_level:
                followable = t.predicate in graph.annotation_properties
            else:
                followable = _is_label_predicate(graph, t.predicate)
            if not followable:
                continue
            if isinstance(t.object, Literal):
                if not entity_level:
                    collected.append(t.object)
            elif depth < max_depth and t.object not in visited:
                visited.add(t.object)
                visit(t.object, depth + 1, entity_level=False)

    direct = [
        t.object
        for t in graph.subject_triples(entity)
        if t.predicate in graph.annotation_properties and isinstance(t.object, Literal)
    ]
    visit(entity, 1, entity_level=True)
    pool = _prefer_english(direct + collected)
    return [lit.lexical for lit in pool]


def extract_bundle(
    graph: KnowledgeGraph, entity: Iri, max_depth: int = DEFAULT_MAX_DEPTH
) -> TextBundle:
    """Collect the entity's texts, dedup by normalized form (first kept).

    Collection order: IRI fragment; label/name literals; skos labels;
    annotation-property texts (recursive); comment/description/abstract
    literals; the longest literal attached to the entity.  Raises
    EmptyBundleError when nothing with a non-empty normalized form remains.
    """
    items: list[TextItem] = []
    seen_normalized: set[str] = set()

    def add(text: str, origin: TextOrigin):
        item = TextItem.make(text, origin)
        if item.normalized and item.normalized not in seen_normalized:
            seen_normalized.add(item.normalized)
            items.append(item)

    if not is_blank_node(entity):
        add(fragment_of(entity), TextOrigin.FRAGMENT)

    label_lits = _literal_objects(
        graph, entity, lambda p: fragment_of(p).lower() in _LABEL_FRAGMENTS
    )
    for lit in _prefer_english(label_lits):
        add(lit.lexical, TextOrigin.LABEL_PROPERTY)

    skos_lits = _literal_objects(graph, entity, lambda p: p in SKOS_LABELS)
    for lit in _prefer_english(skos_lits):
        add(lit.lexical, TextOrigin.LABEL_PROPERTY)

    for text in _annotation_texts(graph, entity, max_depth):
        add(text, TextOrigin.ANNOTATION_PROPERTY)

    comment_lits = _literal_objects(
        graph, entity, lambda p: fragment_of(p).lower() in _COMMENT_FRAGMENTS
    )
    for lit in _prefer_english(comment_lits):
        add(lit.lexical, TextOrigin.COMMENT_PROPERTY)

    all_lits = _prefer_english(_literal_objects(graph, entity, lambda p: True))
    if all_lits:
        # Longest lexical form; ties go to the lexicographically smallest.
        longest = min(all_lits, key=lambda lit: (-len(lit.lexical), lit.lexical))
        add(longest.lexical, TextOrigin.LONGEST_LITERAL)

    if not items:
        raise EmptyBundleError(f"entity {entity} has no textual description")
    return TextBundle(entity=entity, items=tuple(items))


def extract_bundles(
    graph: KnowledgeGraph, max_depth: int = DEFAULT_MAX_DEPTH
) -> dict[Iri, TextBundle]:
    """Bundles for every classified entity; entities without text are skipped."""
    bundles: dict[Iri, TextBundle] = {}
    skipped = 0
    for entity in graph.entities:
        try:
            bundles[entity] = extract_bundle(graph, entity, max_depth)
        except EmptyBundleError:
            skipped += 1
    if skipped:
        logger.warning("%s: excluded %d entit(ies) with no usable text", graph.id, skipped)
    return bundles


def build_text_pairs(
    a: TextBundle, b: TextBundle, strategy: PairingStrategy
) -> list[tuple[str, str]]:
    """Expand two bundles into scorer input pairs.

    CONCAT joins each side's texts into one string (single pair); FULL_CROSS
    is the full cross product; GROUPED crosses short texts with short and
    long with long, falling back to FULL_CROSS (logged) when grouping would
    produce no pairs at all.  Pair order is deterministic: a-major, item
    order within each side.
    """
    if not a.items or not b.items:
        raise ValueError("both bundles must be non-empty")
    if strategy is PairingStrategy.CONCAT:
        return [(" ".join(a.texts()), " ".join(b.texts()))]
    if strategy is PairingStrategy.FULL_CROSS:
        return [(ta, tb) for ta in a.texts() for tb in b.texts()]

    pairs: list[tuple[str, str]] = []
    for group in (TextGroup.SHORT, TextGroup.LONG):
        a_texts = a.group_texts(group)
        b_texts = b.group_texts(group)
        pairs.extend((ta, tb) for ta in a_texts for tb in b_texts)
    if not pairs:
        logger.info(
            "grouped pairing empty for (%s, %s); falling back to full cross product",
            a.entity, b.entity,
        )
        return build_text_pairs(a, b, PairingStrategy.FULL_CROSS)
    return pairs


def write_bundles_tsv(bundles: dict[Iri, TextBundle], path) -> None:
    """Debug dump: one row per text item (entity, group, origin, text)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("entity\tgroup\torigin\ttext\n")
        for entity in sorted(bundles):
            for item in bundles[entity].items:
                safe = item.text.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")
                fh.write(f"{entity}\t{item.group.value}\t{item.origin.value}\t{safe}\n")

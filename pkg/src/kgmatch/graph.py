"""Knowledge-graph ingestion: N-Triples parsing and entity-kind classification.

A graph is a flat list of triples plus a classification of its named
subjects into the five kinds used for partitioned matching (classes,
object/datatype/other properties, instances).  Input is line-oriented
N-Triples only; RDF/XML or Turtle sources are expected to be converted
externally.
"""

import logging
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import BinaryIO, Iterable, Union

logger = logging.getLogger(__name__)

# Entity IRIs are plain strings throughout the package.
Iri = str

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
RDF_PROPERTY = "http://www.w3.org/1999/02/22-rdf-syntax-ns#Property"
RDFS_SUBCLASSOF = "http://www.w3.org/2000/01/rdf-schema#subClassOf"
RDFS_LABEL = "http://www.w3.org/2000/01/rdf-schema#label"
OWL_CLASS = "http://www.w3.org/2002/07/owl#Class"
OWL_OBJECT_PROPERTY = "http://www.w3.org/2002/07/owl#ObjectProperty"
OWL_DATATYPE_PROPERTY = "http://www.w3.org/2002/07/owl#DatatypeProperty"
OWL_ANNOTATION_PROPERTY = "http://www.w3.org/2002/07/owl#AnnotationProperty"

SKOS_PREF_LABEL = "http://www.w3.org/2004/02/skos/core#prefLabel"
SKOS_ALT_LABEL = "http://www.w3.org/2004/02/skos/core#altLabel"
SKOS_HIDDEN_LABEL = "http://www.w3.org/2004/02/skos/core#hiddenLabel"
SKOS_LABELS = frozenset({SKOS_PREF_LABEL, SKOS_ALT_LABEL, SKOS_HIDDEN_LABEL})


class EntityKind(Enum):
    """Kind partition of a matchable entity; matching never crosses kinds."""

    CLASS = "class"
    OBJECT_PROPERTY = "object_property"
    DATATYPE_PROPERTY = "datatype_property"
    OTHER_PROPERTY = "other_property"
    INSTANCE = "instance"


# Classification precedence for entities carrying conflicting declarations.
_KIND_PRECEDENCE = (
    EntityKind.CLASS,
    EntityKind.OBJECT_PROPERTY,
    EntityKind.DATATYPE_PROPERTY,
    EntityKind.OTHER_PROPERTY,
    EntityKind.INSTANCE,
)


@dataclass(frozen=True)
class Literal:
    """An RDF literal: lexical form plus an optional language tag or datatype."""

    lexical: str
    language_tag: str | None = None
    datatype: Iri | None = None

    def __post_init__(self):
        if self.language_tag is not None and self.datatype is not None:
            raise ValueError("literal cannot carry both a language tag and a datatype")


@dataclass(frozen=True)
class Triple:
    """One RDF triple; the object is either an IRI/blank-node string or a Literal."""

    subject: Iri
    predicate: Iri
    object: Union[Iri, Literal]

    @property
    def object_is_literal(self) -> bool:
        return isinstance(self.object, Literal)


def is_blank_node(term: str) -> bool:
    return term.startswith("_:")


def fragment_of(iri: Iri) -> str:
    """Suffix after the last '#', else after the last '/', else the whole IRI."""
    hash_pos = iri.rfind("#")
    if hash_pos >= 0:
        return iri[hash_pos + 1:]
    slash_pos = iri.rfind("/")
    if slash_pos >= 0:
        return iri[slash_pos + 1:]
    return iri


class GraphParseError(Exception):
    """Fatal failure while reading a triple stream."""


class KnowledgeGraph:
    """Immutable triple store with per-entity kind classification.

    Construction happens in :func:`parse_ntriples` (or :func:`from_triples`);
    afterwards the graph is read-only and safe to share across workers.
    """

    def __init__(self, graph_id: str, triples: Iterable[Triple], warnings: list[str] | None = None):
        self.id = graph_id
        # Deduplicate while keeping first-occurrence (file) order so every
        # downstream traversal is deterministic.
        seen: set[Triple] = set()
        ordered: list[Triple] = []
        for t in triples:
            if t not in seen:
                seen.add(t)
                ordered.append(t)
        self.triples: tuple[Triple, ...] = tuple(ordered)
        self.warnings: tuple[str, ...] = tuple(warnings or ())

        by_subject: dict[str, list[Triple]] = {}
        for t in self.triples:
            by_subject.setdefault(t.subject, []).append(t)
        self._by_subject = {s: tuple(ts) for s, ts in by_subject.items()}

        self.annotation_properties: frozenset[Iri] = frozenset(
            t.subject
            for t in self.triples
            if t.predicate == RDF_TYPE
            and t.object == OWL_ANNOTATION_PROPERTY
            and not is_blank_node(t.subject)
        )
        self.entities: dict[Iri, EntityKind] = classify_entities(self)

    @classmethod
    def from_triples(cls, graph_id: str, triples: Iterable[Triple]) -> "KnowledgeGraph":
        return cls(graph_id, triples)

    def subject_triples(self, subject: Iri) -> tuple[Triple, ...]:
        return self._by_subject.get(subject, ())

    def subjects(self) -> Iterable[Iri]:
        return self._by_subject.keys()

    def entities_of_kind(self, kind: EntityKind) -> list[Iri]:
        return sorted(e for e, k in self.entities.items() if k is kind)

    def __len__(self) -> int:
        return len(self.triples)

    def __repr__(self) -> str:
        return f"KnowledgeGraph(id={self.id!r}, triples={len(self.triples)}, entities={len(self.entities)})"


def classify_entities(graph: KnowledgeGraph) -> dict[Iri, EntityKind]:
    """Assign at most one EntityKind per named subject.

    Rules, in precedence order (first hit wins for conflicting declarations):
      1. declared owl:Class, or an endpoint of rdfs:subClassOf  -> CLASS
      2. declared owl:ObjectProperty                            -> OBJECT_PROPERTY
      3. declared owl:DatatypeProperty                          -> DATATYPE_PROPERTY
      4. declared rdf:Property                                  -> OTHER_PROPERTY
      5. remaining subject typed with a declared class          -> INSTANCE
    Blank nodes are never classified.  Typed subjects matching no rule
    (e.g. ontology headers) are excluded from matching and logged.
    """
    evidence: dict[Iri, set[EntityKind]] = {}

    def note(entity: Iri, kind: EntityKind):
        if not is_blank_node(entity):
            evidence.setdefault(entity, set()).add(kind)

    type_objects: dict[Iri, list[Iri]] = {}
    for t in graph.triples:
        if t.predicate == RDFS_SUBCLASSOF:
            note(t.subject, EntityKind.CLASS)
            if isinstance(t.object, str):
                note(t.object, EntityKind.CLASS)
        elif t.predicate == RDF_TYPE and isinstance(t.object, str):
            if t.object == OWL_CLASS:
                note(t.subject, EntityKind.CLASS)
            elif t.object == OWL_OBJECT_PROPERTY:
                note(t.subject, EntityKind.OBJECT_PROPERTY)
            elif t.object == OWL_DATATYPE_PROPERTY:
                note(t.subject, EntityKind.DATATYPE_PROPERTY)
            elif t.object == RDF_PROPERTY:
                note(t.subject, EntityKind.OTHER_PROPERTY)
            if not is_blank_node(t.subject):
                type_objects.setdefault(t.subject, []).append(t.object)

    classes = {e for e, kinds in evidence.items() if EntityKind.CLASS in kinds}
    for subject, objects in type_objects.items():
        if subject not in evidence and any(o in classes for o in objects):
            evidence.setdefault(subject, set()).add(EntityKind.INSTANCE)

    result: dict[Iri, EntityKind] = {}
    for entity, kinds in evidence.items():
        kind = next(k for k in _KIND_PRECEDENCE if k in kinds)
        if len(kinds) > 1:
            logger.warning(
                "entity %s has conflicting declarations %s; classified as %s by precedence",
                entity, sorted(k.value for k in kinds), kind.value,
            )
        result[entity] = kind

    unmatched = [s for s in type_objects if s not in result]
    if unmatched:
        logger.info(
            "%d typed subject(s) match no entity kind and are excluded from matching (e.g. %s)",
            len(unmatched), unmatched[0],
        )
    return result


# --- N-Triples grammar -------------------------------------------------------

_IRI_PAT = r'<([^<>"{}|^`\\\x00-\x20]*)>'
_BNODE_PAT = r'(_:[^\s<>"]+)'
_LITERAL_PAT = (
    r'"((?:[^"\\\r\n]|\\.)*)"'
    r'(?:@([A-Za-z]+(?:-[A-Za-z0-9]+)*)|\^\^<([^<>"{}|^`\\\x00-\x20]*)>)?'
)
_TRIPLE_RE = re.compile(
    r"^[ \t]*(?:%s|%s)[ \t]+%s[ \t]+(?:%s|%s|%s)[ \t]*\.[ \t]*(?:#.*)?$"
    % (_IRI_PAT, _BNODE_PAT, _IRI_PAT, _IRI_PAT, _BNODE_PAT, _LITERAL_PAT)
)
_BLANK_LINE_RE = re.compile(r"^[ \t]*(?:#.*)?$")

_STRING_ESCAPES = {
    "t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f",
    '"': '"', "'": "'", "\\": "\\",
}
_SERIALIZE_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def _unescape(raw: str) -> str:
    if "\\" not in raw:
        return raw
    out: list[str] = []
    i = 0
    n = len(raw)
    while i < n:
        ch = raw[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        if i + 1 >= n:
            raise ValueError("dangling backslash")
        key = raw[i + 1]
        if key in _STRING_ESCAPES:
            out.append(_STRING_ESCAPES[key])
            i += 2
        elif key == "u":
            out.append(chr(int(raw[i + 2:i + 6], 16)))
            i += 6
        elif key == "U":
            out.append(chr(int(raw[i + 2:i + 10], 16)))
            i += 10
        else:
            raise ValueError(f"unknown escape \\{key}")
    return "".join(out)


def _parse_line(line: str) -> Triple | None:
    """One N-Triples line -> Triple, or None for blank/comment lines."""
    if _BLANK_LINE_RE.match(line):
        return None
    m = _TRIPLE_RE.match(line)
    if not m:
        raise ValueError("line does not match the N-Triples grammar")
    subj_iri, subj_bnode, pred, obj_iri, obj_bnode, lit, lang, dtype = m.groups()
    subject = _unescape(subj_iri) if subj_iri is not None else subj_bnode
    predicate = _unescape(pred)
    obj: Union[str, Literal]
    if obj_iri is not None:
        obj = _unescape(obj_iri)
    elif obj_bnode is not None:
        obj = obj_bnode
    else:
        obj = Literal(
            lexical=_unescape(lit),
            language_tag=lang,
            datatype=_unescape(dtype) if dtype is not None else None,
        )
    if not subject or not predicate:
        raise ValueError("empty subject or predicate IRI")
    return Triple(subject, predicate, obj)


def parse_ntriples(
    source: Union[str, Path, bytes, BinaryIO],
    graph_id: str | None = None,
) -> KnowledgeGraph:
    """Parse UTF-8 N-Triples from a path, bytes, or binary stream.

    Malformed lines are skipped and recorded as warnings with their line
    number; an unreadable stream raises :class:`GraphParseError`.
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        graph_id = graph_id or path.name
        try:
            raw_lines = path.read_bytes().splitlines()
        except OSError as exc:
            raise GraphParseError(f"cannot read {path}: {exc}") from exc
    elif isinstance(source, bytes):
        raw_lines = source.splitlines()
    else:
        try:
            raw_lines = source.read().splitlines()
        except OSError as exc:
            raise GraphParseError(f"cannot read stream: {exc}") from exc

    triples: list[Triple] = []
    warnings: list[str] = []
    for lineno, raw in enumerate(raw_lines, start=1):
        try:
            line = raw.decode("utf-8") if isinstance(raw, bytes) else raw
            triple = _parse_line(line)
        except (ValueError, UnicodeDecodeError) as exc:
            warnings.append(f"line {lineno}: {exc}")
            continue
        if triple is not None:
            triples.append(triple)
    if warnings:
        logger.warning("%s: skipped %d malformed line(s)", graph_id or "<stream>", len(warnings))
    return KnowledgeGraph(graph_id or "<stream>", triples, warnings)


def _escape_lexical(text: str) -> str:
    out = []
    for ch in text:
        if ch in _SERIALIZE_ESCAPES:
            out.append(_SERIALIZE_ESCAPES[ch])
        elif ord(ch) < 0x20:
            out.append("\\u%04X" % ord(ch))
        else:
            out.append(ch)
    return "".join(out)


def _term_to_ntriples(term: Union[str, Literal]) -> str:
    if isinstance(term, Literal):
        body = f'"{_escape_lexical(term.lexical)}"'
        if term.language_tag is not None:
            return f"{body}@{term.language_tag}"
        if term.datatype is not None:
            return f"{body}^^<{term.datatype}>"
        return body
    if is_blank_node(term):
        return term
    return f"<{term}>"


def serialize_ntriples(graph: KnowledgeGraph) -> str:
    """Render the graph back to N-Triples text (one triple per line)."""
    lines = [
        f"{_term_to_ntriples(t.subject)} {_term_to_ntriples(t.predicate)} "
        f"{_term_to_ntriples(t.object)} ."
        for t in graph.triples
    ]
    return "\n".join(lines) + ("\n" if lines else "")

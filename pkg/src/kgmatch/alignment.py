"""Correspondences and alignments, plus the TSV / OAEI-XML file formats.

An alignment is a set of (source, target) correspondences indexed both
ways; correspondence identity ignores confidence and relation.  The
canonical on-disk format is a TSV sorted by (source, target); the OAEI
Alignment Format XML is supported for interoperability with reference
files.
"""

import xml.etree.ElementTree as ET
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator, Union

from .graph import EntityKind, Iri

EQUIVALENCE = "="


@dataclass(frozen=True)
class Correspondence:
    """A directed (source, target) match with confidence in [0, 1]."""

    source: Iri
    target: Iri
    relation: str = EQUIVALENCE
    confidence: float = 1.0
    kind: EntityKind | None = None

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")

    @property
    def pair(self) -> tuple[Iri, Iri]:
        return (self.source, self.target)

    def with_confidence(self, confidence: float) -> "Correspondence":
        return replace(self, confidence=confidence)


class Alignment:
    """Set of correspondences, unique by (source, target), indexed both ways."""

    def __init__(self, correspondences: Iterable[Correspondence] = ()):
        self._by_pair: dict[tuple[Iri, Iri], Correspondence] = {}
        self._by_source: dict[Iri, set[Iri]] = {}
        self._by_target: dict[Iri, set[Iri]] = {}
        for corr in correspondences:
            self.add(corr)

    def add(self, corr: Correspondence, keep_max_confidence: bool = True) -> None:
        """Insert a correspondence; an existing (source, target) pair keeps
        the higher-confidence version when keep_max_confidence is set."""
        existing = self._by_pair.get(corr.pair)
        if existing is not None:
            if keep_max_confidence and corr.confidence > existing.confidence:
                self._by_pair[corr.pair] = corr
            return
        self._by_pair[corr.pair] = corr
        self._by_source.setdefault(corr.source, set()).add(corr.target)
        self._by_target.setdefault(corr.target, set()).add(corr.source)

    def discard(self, pair: tuple[Iri, Iri]) -> None:
        corr = self._by_pair.pop(pair, None)
        if corr is None:
            return
        self._by_source[corr.source].discard(corr.target)
        if not self._by_source[corr.source]:
            del self._by_source[corr.source]
        self._by_target[corr.target].discard(corr.source)
        if not self._by_target[corr.target]:
            del self._by_target[corr.target]

    def get(self, source: Iri, target: Iri) -> Correspondence | None:
        return self._by_pair.get((source, target))

    def pairs(self) -> set[tuple[Iri, Iri]]:
        return set(self._by_pair)

    def sources(self) -> set[Iri]:
        return set(self._by_source)

    def targets(self) -> set[Iri]:
        return set(self._by_target)

    def targets_of(self, source: Iri) -> set[Iri]:
        return set(self._by_source.get(source, ()))

    def sources_of(self, target: Iri) -> set[Iri]:
        return set(self._by_target.get(target, ()))

    def sorted(self) -> list[Correspondence]:
        """Correspondences in canonical (source, target) order."""
        return [self._by_pair[p] for p in sorted(self._by_pair)]

    def __contains__(self, key: Union[Correspondence, tuple[Iri, Iri]]) -> bool:
        pair = key.pair if isinstance(key, Correspondence) else tuple(key)
        return pair in self._by_pair

    def __iter__(self) -> Iterator[Correspondence]:
        return iter(self._by_pair.values())

    def __len__(self) -> int:
        return len(self._by_pair)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Alignment):
            return NotImplemented
        return self.pairs() == other.pairs()

    def __repr__(self) -> str:
        return f"Alignment({len(self)} correspondences)"


TSV_HEADER = "source\ttarget\trelation\tconfidence"


def write_alignment_tsv(alignment: Alignment, path: Union[str, Path]) -> None:
    """Canonical TSV, rows sorted by (source, target) for byte determinism."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(TSV_HEADER + "\n")
        for corr in alignment.sorted():
            fh.write(f"{corr.source}\t{corr.target}\t{corr.relation}\t{corr.confidence!r}\n")


def read_alignment_tsv(path: Union[str, Path]) -> Alignment:
    alignment = Alignment()
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != TSV_HEADER:
            raise ValueError(f"{path}: unexpected alignment TSV header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 tab-separated fields")
            source, target, relation, confidence = fields
            alignment.add(
                Correspondence(source, target, relation=relation, confidence=float(confidence))
            )
    return alignment


_ALIGNMENT_NS = "http://knowledgeweb.semanticweb.org/heterogeneity/alignment"
_RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"


def write_alignment_xml(alignment: Alignment, path: Union[str, Path]) -> None:
    """OAEI Alignment Format export; measures printed with 6 decimal places."""
    lines = [
        '<?xml version="1.0" encoding="utf-8"?>',
        f'<rdf:RDF xmlns="{_ALIGNMENT_NS}"',
        f'         xmlns:rdf="{_RDF_NS}"',
        '         xmlns:xsd="http://www.w3.org/2001/XMLSchema#">',
        "<Alignment>",
        "  <xml>yes</xml>",
        "  <level>0</level>",
        "  <type>??</type>",
    ]
    for corr in alignment.sorted():
        lines.extend([
            "  <map>",
            "    <Cell>",
            f'      <entity1 rdf:resource="{_xml_attr(corr.source)}"/>',
            f'      <entity2 rdf:resource="{_xml_attr(corr.target)}"/>',
            f"      <relation>{_xml_text(corr.relation)}</relation>",
            f'      <measure rdf:datatype="http://www.w3.org/2001/XMLSchema#float">'
            f"{corr.confidence:.6f}</measure>",
            "    </Cell>",
            "  </map>",
        ])
    lines.extend(["</Alignment>", "</rdf:RDF>", ""])
    Path(path).write_text("\n".join(lines), encoding="utf-8")


def _xml_attr(value: str) -> str:
    return (
        value.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _xml_text(value: str) -> str:
    return value.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _localname(tag: str) -> str:
    return tag.rsplit("}", 1)[-1] if "}" in tag else tag


def read_alignment_xml(path: Union[str, Path]) -> Alignment:
    """Parse the <Cell> structure of an OAEI Alignment Format file.

    Namespace-agnostic: tags are matched by local name so both namespaced
    and bare files are accepted.
    """
    tree = ET.parse(path)
    alignment = Alignment()
    for elem in tree.iter():
        if _localname(elem.tag) != "Cell":
            continue
        source = target = None
        relation = EQUIVALENCE
        measure = 1.0
        for child in elem:
            name = _localname(child.tag)
            if name == "entity1":
                source = _resource_of(child)
            elif name == "entity2":
                target = _resource_of(child)
            elif name == "relation" and child.text:
                relation = child.text.strip()
            elif name == "measure" and child.text:
                measure = float(child.text.strip())
        if source is None or target is None:
            raise ValueError(f"{path}: Cell without entity1/entity2 resources")
        alignment.add(
            Correspondence(source, target, relation=relation, confidence=min(max(measure, 0.0), 1.0))
        )
    return alignment


def _resource_of(elem: ET.Element) -> str | None:
    for key, value in elem.attrib.items():
        if _localname(key) == "resource":
            return value
    return elem.text.strip() if elem.text and elem.text.strip() else None


def read_alignment(path: Union[str, Path]) -> Alignment:
    """Load an alignment, sniffing TSV vs OAEI XML from the content."""
    head = Path(path).read_bytes()[:256].lstrip()
    if head.startswith(b"<"):
        return read_alignment_xml(path)
    return read_alignment_tsv(path)

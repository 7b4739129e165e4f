import pytest

from kgmatch.graph import (
    OWL_CLASS,
    OWL_DATATYPE_PROPERTY,
    OWL_OBJECT_PROPERTY,
    RDF_TYPE,
    RDFS_LABEL,
    parse_ntriples,
)

RDFS_COMMENT = "http://www.w3.org/2000/01/rdf-schema#comment"

# Verdict lines collected by the acceptance suite; echoed after the run so
# they stay visible regardless of output capture.
ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_RESULTS:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria:")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)


def nt_doc(lines) -> str:
    return "".join(line + "\n" for line in lines)


def triple(s, p, o) -> str:
    if o.startswith('"'):
        return f"<{s}> <{p}> {o} ."
    return f"<{s}> <{p}> <{o}> ."


def class_decl(ns, name, label=None, comment=None):
    iri = ns + name
    lines = [triple(iri, RDF_TYPE, OWL_CLASS)]
    if label is not None:
        lines.append(triple(iri, RDFS_LABEL, f'"{label}"'))
    if comment is not None:
        lines.append(triple(iri, RDFS_COMMENT, f'"{comment}"'))
    return lines


def build_graph(lines, graph_id="test"):
    return parse_ntriples(nt_doc(lines).encode("utf-8"), graph_id)


@pytest.fixture
def anatomy_pair():
    """Two small disjoint-namespace graphs with known correspondences."""
    src = build_graph(
        class_decl("http://a.org/", "Heart", "Heart", "hollow muscular organ")
        + class_decl("http://a.org/", "Lung", "Lung", "organ for breathing")
        + class_decl("http://a.org/", "BloodVessel", "blood vessel")
        + class_decl("http://a.org/", "Tissue", "Tissue")
        + [triple("http://a.org/Heart", "http://www.w3.org/2000/01/rdf-schema#subClassOf", "http://a.org/Tissue")],
        "src",
    )
    tgt = build_graph(
        class_decl("http://b.org/", "heart", "Heart", "pump of the circulatory system")
        + class_decl("http://b.org/", "pulmo", "Lung")
        + class_decl("http://b.org/", "vessel", "BloodVessel")
        + class_decl("http://b.org/", "tissue", "Tissue"),
        "tgt",
    )
    return src, tgt

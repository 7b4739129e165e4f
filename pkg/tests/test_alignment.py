import string

import pytest
from hypothesis import given
from hypothesis import strategies as st

from kgmatch.alignment import (
    Alignment,
    Correspondence,
    read_alignment,
    read_alignment_tsv,
    read_alignment_xml,
    write_alignment_tsv,
    write_alignment_xml,
)
from kgmatch.graph import EntityKind


def corr(s, t, conf=1.0, kind=None):
    return Correspondence(f"http://a/{s}", f"http://b/{t}", confidence=conf, kind=kind)


class TestCorrespondence:
    def test_confidence_bounds(self):
        with pytest.raises(ValueError):
            corr("x", "y", conf=1.5)
        with pytest.raises(ValueError):
            corr("x", "y", conf=-0.1)

    def test_with_confidence(self):
        c = corr("x", "y", conf=0.4, kind=EntityKind.CLASS)
        c2 = c.with_confidence(0.9)
        assert c2.confidence == 0.9
        assert (c2.source, c2.target, c2.kind) == (c.source, c.target, EntityKind.CLASS)

    def test_pair(self):
        assert corr("x", "y").pair == ("http://a/x", "http://b/y")


class TestAlignment:
    def test_add_keeps_max_confidence(self):
        a = Alignment()
        a.add(corr("x", "y", conf=0.3))
        a.add(corr("x", "y", conf=0.8))
        a.add(corr("x", "y", conf=0.5))
        assert a.get("http://a/x", "http://b/y").confidence == 0.8
        assert len(a) == 1

    def test_contains_pair_and_correspondence(self):
        a = Alignment([corr("x", "y")])
        assert ("http://a/x", "http://b/y") in a
        assert corr("x", "y", conf=0.2) in a
        assert ("http://a/x", "http://b/z") not in a

    def test_discard(self):
        a = Alignment([corr("x", "y"), corr("x", "z")])
        a.discard(("http://a/x", "http://b/y"))
        assert a.pairs() == {("http://a/x", "http://b/z")}
        a.discard(("http://a/never", "http://b/there"))

    def test_index_sets(self):
        a = Alignment([corr("x", "y"), corr("x", "z"), corr("w", "y")])
        assert a.targets_of("http://a/x") == {"http://b/y", "http://b/z"}
        assert a.sources_of("http://b/y") == {"http://a/x", "http://a/w"}
        assert a.sources() == {"http://a/x", "http://a/w"}

    def test_sorted_canonical_order(self):
        a = Alignment([corr("b", "b"), corr("a", "z"), corr("a", "a")])
        assert [c.pair for c in a.sorted()] == [
            ("http://a/a", "http://b/a"),
            ("http://a/a", "http://b/z"),
            ("http://a/b", "http://b/b"),
        ]

    def test_equality_by_pair_set(self):
        assert Alignment([corr("x", "y", conf=0.1)]) == Alignment([corr("x", "y", conf=0.9)])
        assert Alignment([corr("x", "y")]) != Alignment([corr("x", "z")])


_iri = st.text(alphabet=string.ascii_lowercase + string.digits, min_size=1, max_size=8).map(
    lambda s: f"http://x.org/{s}"
)
_corr = st.builds(
    Correspondence,
    source=_iri,
    target=_iri,
    confidence=st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
)


class TestTsvFormat:
    def test_round_trip_exact(self, tmp_path):
        a = Alignment([corr("x", "y", conf=0.123456789), corr("w", "z", conf=1.0)])
        path = tmp_path / "a.tsv"
        write_alignment_tsv(a, path)
        b = read_alignment_tsv(path)
        assert b == a
        assert {c.pair: c.confidence for c in b} == {c.pair: c.confidence for c in a}

    @given(st.lists(_corr, max_size=30))
    def test_round_trip_property(self, tmp_path_factory, corrs):
        a = Alignment(corrs)
        path = tmp_path_factory.mktemp("tsv") / "a.tsv"
        write_alignment_tsv(a, path)
        b = read_alignment_tsv(path)
        assert {c.pair: c.confidence for c in b} == {c.pair: c.confidence for c in a}

    def test_header_enforced(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("nope\n", encoding="utf-8")
        with pytest.raises(ValueError):
            read_alignment_tsv(path)

    def test_field_count_enforced(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("source\ttarget\trelation\tconfidence\na\tb\t=\n", encoding="utf-8")
        with pytest.raises(ValueError):
            read_alignment_tsv(path)


class TestXmlFormat:
    def test_round_trip(self, tmp_path):
        a = Alignment([corr("x", "y", conf=0.654321), corr("w", "z", conf=0.25)])
        path = tmp_path / "a.xml"
        write_alignment_xml(a, path)
        b = read_alignment_xml(path)
        assert b == a
        assert b.get("http://a/x", "http://b/y").confidence == pytest.approx(0.654321, abs=1e-6)

    def test_measure_six_decimals(self, tmp_path):
        path = tmp_path / "a.xml"
        write_alignment_xml(Alignment([corr("x", "y", conf=1 / 3)]), path)
        assert "0.333333" in path.read_text(encoding="utf-8")

    def test_escaping(self, tmp_path):
        weird = Correspondence("http://a/x?q=1&r=2", "http://b/y", confidence=0.5)
        path = tmp_path / "a.xml"
        write_alignment_xml(Alignment([weird]), path)
        b = read_alignment_xml(path)
        assert ("http://a/x?q=1&r=2", "http://b/y") in b

    def test_sniffing_dispatch(self, tmp_path):
        a = Alignment([corr("x", "y", conf=0.5)])
        tsv, xml = tmp_path / "a.tsv", tmp_path / "a.xml"
        write_alignment_tsv(a, tsv)
        write_alignment_xml(a, xml)
        assert read_alignment(tsv) == a
        assert read_alignment(xml) == a

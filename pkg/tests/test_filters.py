import math
import random

import pytest

from kgmatch.alignment import Alignment, Correspondence
from kgmatch.filters import (
    DEFAULT_THRESHOLD,
    apply_chain,
    confidence_cut,
    default_chain,
    make_cut,
    mwb_filter,
)
from kgmatch.graph import EntityKind
from tests import oracles


def corr(s, t, w, kind=None):
    return Correspondence(s, t, confidence=w, kind=kind)


def alignment(weighted_pairs, kind=None):
    return Alignment(corr(s, t, w, kind) for s, t, w in weighted_pairs)


def edges_of(a):
    return [(c.source, c.target, c.confidence) for c in a.sorted()]


def total(a):
    return math.fsum(c.confidence for c in a)


def random_edges(rng, n_sources=6, n_targets=6, density=0.5, weights=None):
    edges = []
    for i in range(rng.randint(1, n_sources)):
        for j in range(rng.randint(1, n_targets)):
            if rng.random() < density:
                w = rng.choice(weights) if weights else round(rng.random(), 3)
                edges.append((f"s{i}", f"t{j}", w))
    return edges


class TestConfidenceCut:
    def test_boundary_inclusive(self):
        a = alignment([("s1", "t1", 0.49), ("s2", "t2", 0.5), ("s3", "t3", 0.51)])
        kept = confidence_cut(a, 0.5)
        assert {c.confidence for c in kept} == {0.5, 0.51}

    def test_zero_threshold_is_identity(self):
        a = alignment([("s1", "t1", 0.0), ("s2", "t2", 0.9)])
        assert confidence_cut(a, 0.0).pairs() == a.pairs()

    def test_one_keeps_only_full_confidence(self):
        a = alignment([("s1", "t1", 1.0), ("s2", "t2", 0.999)])
        assert confidence_cut(a, 1.0).pairs() == {("s1", "t1")}

    def test_default_threshold(self):
        assert DEFAULT_THRESHOLD == 0.5
        a = alignment([("s1", "t1", 0.4), ("s2", "t2", 0.6)])
        assert confidence_cut(a).pairs() == {("s2", "t2")}

    @pytest.mark.parametrize("bad", [-0.1, 1.1])
    def test_threshold_bounds(self, bad):
        with pytest.raises(ValueError):
            confidence_cut(Alignment(), bad)


class TestMwbFilter:
    def test_worked_example(self):
        a = alignment([("s1", "t1", 0.9), ("s1", "t2", 0.8), ("s2", "t1", 0.85)])
        result = mwb_filter(a)
        assert result.pairs() == {("s1", "t2"), ("s2", "t1")}
        assert total(result) == pytest.approx(1.65)

    def test_one_to_one_input_unchanged(self):
        a = alignment([("s1", "t1", 0.2), ("s2", "t2", 0.9), ("s3", "t3", 0.5)])
        assert mwb_filter(a).pairs() == a.pairs()

    @pytest.mark.parametrize("seed", range(40))
    def test_value_matches_enumeration(self, seed):
        rng = random.Random(seed)
        edges = random_edges(rng)
        result = mwb_filter(alignment(edges))
        assert total(result) == oracles.best_matching_value(edges)

    @pytest.mark.parametrize("seed", range(40))
    def test_lexicographic_tie_break(self, seed):
        # coarse weight grid forces plenty of exactly tied optima
        rng = random.Random(1000 + seed)
        edges = random_edges(rng, n_sources=4, n_targets=4, density=0.7,
                             weights=[0.0, 0.25, 0.5, 1.0])
        result = mwb_filter(alignment(edges))
        assert sorted(result.pairs()) == oracles.lex_min_optimal_matching(edges)

    def test_all_zero_weights_selects_nothing(self):
        a = alignment([("s1", "t1", 0.0), ("s2", "t2", 0.0)])
        assert len(mwb_filter(a)) == 0

    def test_zero_edge_kept_when_it_sorts_before_needed_edge(self):
        # ("a","a") carries no weight, but including it makes the sorted
        # pair list lexicographically smaller than {("b","b")} alone
        a = alignment([("a", "a", 0.0), ("b", "b", 1.0)])
        assert mwb_filter(a).pairs() == {("a", "a"), ("b", "b")}

    def test_trailing_zero_edge_dropped(self):
        # the proper prefix {("a","a")} beats {("a","a"),("z","z")}
        a = alignment([("z", "z", 0.0), ("a", "a", 1.0)])
        assert mwb_filter(a).pairs() == {("a", "a")}

    @pytest.mark.parametrize("seed", range(20))
    def test_one_to_one_and_subset(self, seed):
        rng = random.Random(2000 + seed)
        a = alignment(random_edges(rng, density=0.8))
        result = mwb_filter(a)
        assert result.pairs() <= a.pairs()
        sources = [s for s, _ in result.pairs()]
        targets = [t for _, t in result.pairs()]
        assert len(sources) == len(set(sources))
        assert len(targets) == len(set(targets))

    @pytest.mark.parametrize("seed", range(10))
    def test_beats_greedy_selection(self, seed):
        rng = random.Random(3000 + seed)
        edges = random_edges(rng, density=0.9)
        greedy_total, used_s, used_t = 0.0, set(), set()
        for s, t, w in sorted(edges, key=lambda e: -e[2]):
            if s not in used_s and t not in used_t:
                greedy_total += w
                used_s.add(s)
                used_t.add(t)
        assert total(mwb_filter(alignment(edges))) >= greedy_total - 1e-12

    @pytest.mark.parametrize("seed", range(10))
    def test_scaling_preserves_selection(self, seed):
        # halving is exact in floating point, so ties scale faithfully
        rng = random.Random(4000 + seed)
        edges = random_edges(rng, weights=[0.0, 0.25, 0.5, 1.0])
        halved = [(s, t, w / 2) for s, t, w in edges]
        assert mwb_filter(alignment(edges)).pairs() == mwb_filter(alignment(halved)).pairs()

    def test_kind_partitions_are_independent(self):
        a = Alignment([
            corr("s1", "t1", 0.9, EntityKind.CLASS),
            corr("s1", "t2", 0.8, EntityKind.INSTANCE),
            corr("s1", "t3", 0.7, EntityKind.INSTANCE),
        ])
        result = mwb_filter(a)
        # s1 may match once per partition: the class edge plus the best
        # instance edge
        assert result.pairs() == {("s1", "t1"), ("s1", "t2")}

    def test_unkinded_correspondences_share_one_partition(self):
        a = alignment([("s1", "t1", 0.9), ("s1", "t2", 0.8)])
        assert mwb_filter(a).pairs() == {("s1", "t1")}

    def test_empty(self):
        assert len(mwb_filter(Alignment())) == 0


class TestChain:
    def test_default_chain_order_matters(self):
        a = alignment([("s1", "t1", 0.6), ("s1", "t2", 0.55), ("s2", "t1", 0.45)])
        cut_then_mwb = apply_chain(a, default_chain(0.5))
        mwb_then_cut = confidence_cut(mwb_filter(a), 0.5)
        assert cut_then_mwb.pairs() == {("s1", "t1")}
        assert mwb_then_cut.pairs() == {("s1", "t2")}
        assert cut_then_mwb.pairs() != mwb_then_cut.pairs()

    def test_none_uses_default_chain(self):
        a = alignment([("s1", "t1", 0.4), ("s1", "t2", 0.8), ("s2", "t2", 0.9)])
        assert apply_chain(a).pairs() == apply_chain(a, default_chain()).pairs()
        assert apply_chain(a).pairs() == {("s2", "t2")}

    def test_empty_chain_is_identity(self):
        a = alignment([("s1", "t1", 0.1)])
        assert apply_chain(a, []).pairs() == a.pairs()

    def test_empty_alignment(self):
        assert len(apply_chain(Alignment())) == 0

    def test_make_cut_binds_threshold(self):
        cut = make_cut(0.75)
        a = alignment([("s1", "t1", 0.7), ("s2", "t2", 0.8)])
        assert cut(a).pairs() == {("s2", "t2")}

    def test_filters_only_shrink(self):
        rng = random.Random(5)
        a = alignment(random_edges(rng, density=0.9))
        for filt in default_chain():
            filtered = filt(a)
            assert filtered.pairs() <= a.pairs()
            a = filtered

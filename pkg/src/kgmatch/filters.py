"""Alignment post-processing: confidence cut and one-to-one assignment.

The assignment filter keeps a maximum-weight one-to-one subset of the
alignment.  Ties between optima are broken deterministically: the result
is the optimum whose sorted (source, target) pair list is
lexicographically smallest, treating a proper prefix as smaller.
"""

import math
from functools import partial
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .alignment import Alignment, Correspondence
from .graph import EntityKind

DEFAULT_THRESHOLD = 0.5

Filter = Callable[[Alignment], Alignment]


def confidence_cut(alignment: Alignment, threshold: float = DEFAULT_THRESHOLD) -> Alignment:
    """Keep correspondences with confidence >= threshold."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must be in [0, 1]")
    return Alignment(c for c in alignment if c.confidence >= threshold)


class _Component:
    """One connected piece of a partition's bipartite graph."""

    def __init__(self, edges: list[Correspondence]):
        self.sources = sorted({e.source for e in edges})
        self.targets = sorted({e.target for e in edges})
        self._row = {iri: i for i, iri in enumerate(self.sources)}
        self._col = {iri: j for j, iri in enumerate(self.targets)}
        self.weights = np.zeros((len(self.sources), len(self.targets)))
        for e in edges:
            self.weights[self._row[e.source], self._col[e.target]] = e.confidence
        self.used_rows: set[int] = set()
        self.used_cols: set[int] = set()
        self.chosen_weights: list[float] = []
        self.optimum = self._best_value([], set(), set())
        self.done = math.fsum(self.chosen_weights) == self.optimum

    def _best_value(self, base: list[float], skip_rows: set[int], skip_cols: set[int]) -> float:
        """Max total weight of a matching on the unused part, plus base.

        fsum is correctly rounded, so equal real sums give equal floats and
        the optimality comparisons below are exact equality tests.
        """
        rows = [i for i in range(len(self.sources)) if i not in skip_rows]
        cols = [j for j in range(len(self.targets)) if j not in skip_cols]
        if not rows or not cols:
            return math.fsum(base)
        sub = self.weights[np.ix_(rows, cols)]
        ri, ci = linear_sum_assignment(sub, maximize=True)
        return math.fsum(list(base) + [sub[r, c] for r, c in zip(ri, ci)])

    def endpoints_free(self, edge: Correspondence) -> bool:
        return self._row[edge.source] not in self.used_rows and self._col[edge.target] not in self.used_cols

    def admits(self, edge: Correspondence) -> bool:
        """True when some maximum-weight matching extends the chosen edges
        with this one."""
        if self.done:
            # Chosen edges already reach the optimum; only a free zero-weight
            # edge extends them without losing it.
            return edge.confidence == 0.0
        skip_rows = self.used_rows | {self._row[edge.source]}
        skip_cols = self.used_cols | {self._col[edge.target]}
        value = self._best_value(self.chosen_weights + [edge.confidence], skip_rows, skip_cols)
        return value == self.optimum

    def take(self, edge: Correspondence) -> None:
        self.used_rows.add(self._row[edge.source])
        self.used_cols.add(self._col[edge.target])
        self.chosen_weights.append(edge.confidence)
        self.done = math.fsum(self.chosen_weights) == self.optimum


def _connected_components(edges: Sequence[Correspondence]) -> list[list[Correspondence]]:
    parent: dict[str, str] = {}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in edges:
        for node in (f"s:{e.source}", f"t:{e.target}"):
            parent.setdefault(node, node)
        parent[find(f"s:{e.source}")] = find(f"t:{e.target}")
    groups: dict[str, list[Correspondence]] = {}
    for e in edges:
        groups.setdefault(find(f"s:{e.source}"), []).append(e)
    return list(groups.values())


def _assign_partition(edges: list[Correspondence]) -> list[Correspondence]:
    """Lexicographically smallest maximum-weight matching of one partition.

    Scans edges in sorted pair order, keeping an edge exactly when some
    maximum-weight matching contains all kept edges plus it.  Components
    interact only through the scan order, so each test is local to the
    edge's component.
    """
    of_edge: dict[tuple, _Component] = {}
    all_components: list[_Component] = []
    for component in _connected_components(edges):
        comp = _Component(component)
        all_components.append(comp)
        for e in component:
            of_edge[e.pair] = comp
    chosen: list[Correspondence] = []
    for edge in sorted(edges, key=lambda e: e.pair):
        if all(c.done for c in all_components):
            break
        comp = of_edge[edge.pair]
        if not comp.endpoints_free(edge):
            continue
        if comp.admits(edge):
            comp.take(edge)
            chosen.append(edge)
    return chosen


def mwb_filter(alignment: Alignment) -> Alignment:
    """Maximum-weight one-to-one subset, computed per entity-kind partition."""
    partitions: dict[object, list[Correspondence]] = {}
    for corr in alignment:
        key = corr.kind.value if isinstance(corr.kind, EntityKind) else None
        partitions.setdefault(key, []).append(corr)
    result = Alignment()
    for key in sorted(partitions, key=lambda k: (k is None, k)):
        for corr in _assign_partition(partitions[key]):
            result.add(corr)
    return result


def make_cut(threshold: float = DEFAULT_THRESHOLD) -> Filter:
    return partial(confidence_cut, threshold=threshold)


def default_chain(threshold: float = DEFAULT_THRESHOLD) -> list[Filter]:
    """Confidence cut then one-to-one assignment, the standard order."""
    return [make_cut(threshold), mwb_filter]


def apply_chain(alignment: Alignment, chain: Iterable[Filter] | None = None) -> Alignment:
    filters = default_chain() if chain is None else list(chain)
    for filt in filters:
        alignment = filt(alignment)
    return alignment

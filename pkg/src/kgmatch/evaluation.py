"""Alignment evaluation: precision/recall/F1 and McNemar significance.

Correspondence equality for all counts is by (source, target) pair;
relation and confidence are ignored.
"""

import math
from dataclasses import dataclass

from .alignment import Alignment

DEFAULT_ALPHA = 0.05


@dataclass(frozen=True)
class CaseResult:
    name: str
    precision: float
    recall: float
    f1: float
    system_size: int
    reference_size: int
    true_positives: int

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "systemSize": self.system_size,
            "referenceSize": self.reference_size,
            "truePositives": self.true_positives,
        }


def _prf(tp: int, system_size: int, reference_size: int) -> tuple[float, float, float]:
    precision = tp / system_size if system_size else 0.0
    recall = tp / reference_size if reference_size else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def evaluate(system: Alignment, reference: Alignment) -> tuple[float, float, float, int]:
    """Precision, recall, F1, and true-positive count of system vs reference."""
    tp = len(system.pairs() & reference.pairs())
    return (*_prf(tp, len(system), len(reference)), tp)


def evaluate_case(name: str, system: Alignment, reference: Alignment) -> CaseResult:
    precision, recall, f1, tp = evaluate(system, reference)
    return CaseResult(name, precision, recall, f1, len(system), len(reference), tp)


@dataclass(frozen=True)
class EvalReport:
    cases: tuple[CaseResult, ...]
    macro: tuple[float, float, float]
    micro: tuple[float, float, float]

    def to_dict(self) -> dict:
        return {
            "cases": [case.to_dict() for case in self.cases],
            "macro": dict(zip(("precision", "recall", "f1"), self.macro)),
            "micro": dict(zip(("precision", "recall", "f1"), self.micro)),
        }


def macro_micro(cases: list[CaseResult]) -> EvalReport:
    """Macro = unweighted mean of per-case scores; micro = pooled counts."""
    if not cases:
        raise ValueError("no test cases to aggregate")
    n = len(cases)
    macro = (
        sum(c.precision for c in cases) / n,
        sum(c.recall for c in cases) / n,
        sum(c.f1 for c in cases) / n,
    )
    micro = _prf(
        sum(c.true_positives for c in cases),
        sum(c.system_size for c in cases),
        sum(c.reference_size for c in cases),
    )
    return EvalReport(tuple(cases), macro, micro)


def format_report(report: EvalReport) -> str:
    lines = [f"{'case':<24} {'prec':>7} {'rec':>7} {'f1':>7} {'|sys|':>7} {'|ref|':>7} {'tp':>6}"]
    for case in report.cases:
        lines.append(
            f"{case.name:<24} {case.precision:>7.4f} {case.recall:>7.4f} {case.f1:>7.4f}"
            f" {case.system_size:>7d} {case.reference_size:>7d} {case.true_positives:>6d}"
        )
    for label, (p, r, f1) in (("macro", report.macro), ("micro", report.micro)):
        lines.append(f"{label:<24} {p:>7.4f} {r:>7.4f} {f1:>7.4f}")
    return "\n".join(lines)


@dataclass(frozen=True)
class McNemarResult:
    b: int
    c: int
    statistic: float
    p_value: float
    alpha: float
    significant: bool

    def to_dict(self) -> dict:
        return {
            "b": self.b,
            "c": self.c,
            "statistic": self.statistic,
            "pValue": self.p_value,
            "alpha": self.alpha,
            "significant": self.significant,
        }


def chi2_upper_tail(statistic: float) -> float:
    """P(X >= statistic) for chi-square with one degree of freedom."""
    if statistic < 0:
        raise ValueError("statistic must be nonnegative")
    return math.erfc(math.sqrt(statistic / 2.0))


def mcnemar_counts(a: Alignment, b: Alignment, reference: Alignment) -> tuple[int, int]:
    """Disagreement counts over the union of both outputs and the reference.

    A matcher is correct on a pair exactly when its membership verdict
    matches the reference's.  Pairs outside all three sets carry no
    information and are excluded by construction.
    """
    universe = a.pairs() | b.pairs() | reference.pairs()
    b_count = c_count = 0
    for pair in universe:
        a_correct = (pair in a) == (pair in reference)
        b_correct = (pair in b) == (pair in reference)
        if a_correct and not b_correct:
            b_count += 1
        elif b_correct and not a_correct:
            c_count += 1
    return b_count, c_count


def mcnemar_from_counts(b_count: int, c_count: int, alpha: float = DEFAULT_ALPHA) -> McNemarResult:
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    total = b_count + c_count
    if total == 0:
        statistic = 0.0
    else:
        # Continuity correction, clamped so |b-c| <= 1 cannot go negative
        # and yields p = 1 exactly.
        statistic = max(abs(b_count - c_count) - 1, 0) ** 2 / total
    p_value = chi2_upper_tail(statistic)
    return McNemarResult(b_count, c_count, statistic, p_value, alpha, p_value < alpha)


def mcnemar_test(
    a: Alignment, b: Alignment, reference: Alignment, alpha: float = DEFAULT_ALPHA
) -> McNemarResult:
    """McNemar's asymptotic test with continuity correction, df = 1."""
    b_count, c_count = mcnemar_counts(a, b, reference)
    return mcnemar_from_counts(b_count, c_count, alpha)

"""Confusion-matrix metrics, agreement statistics, and significance testing.

The claim class (label 1) is the positive class everywhere. All functions
are pure and freely parallelizable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DataError

__all__ = [
    "ConfusionMatrix",
    "AgreementMatrix",
    "f1_scores",
    "weighted_average",
    "cohen_kappa",
    "mean_pairwise_kappa",
    "majority_vote",
    "paired_ttest",
    "TTestResult",
]


@dataclass
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def add(self, predicted: int, gold: int) -> None:
        if predicted == 1 and gold == 1:
            self.tp += 1
        elif predicted == 1 and gold == 0:
            self.fp += 1
        elif predicted == 0 and gold == 1:
            self.fn += 1
        else:
            self.tn += 1

    @classmethod
    def from_pairs(cls, predicted, gold) -> "ConfusionMatrix":
        if len(predicted) != len(gold):
            raise DataError("prediction/gold length mismatch")
        cm = cls()
        for p, g in zip(predicted, gold):
            cm.add(int(p), int(g))
        return cm

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


def f1_scores(cm: ConfusionMatrix) -> dict:
    """Claim F1, non-claim F1 and their unweighted mean; 0/0 ratios are 0."""
    if cm.total == 0:
        raise DataError("empty confusion matrix")
    c_denom = 2 * cm.tp + cm.fp + cm.fn
    c_f1 = (2 * cm.tp / c_denom) if c_denom else 0.0
    n_denom = 2 * cm.tn + cm.fp + cm.fn
    nonclaim_f1 = (2 * cm.tn / n_denom) if n_denom else 0.0
    return {
        "c_f1": c_f1,
        "nonclaim_f1": nonclaim_f1,
        "m_f1": (c_f1 + nonclaim_f1) / 2,
    }


def weighted_average(per_dataset: list[tuple[float, int]]) -> float:
    """Size-weighted mean of per-dataset metric values."""
    if not per_dataset:
        raise DataError("weighted_average of an empty list")
    total = 0.0
    weight = 0
    for value, size in per_dataset:
        if size <= 0:
            raise DataError(f"non-positive dataset size {size}")
        total += value * size
        weight += size
    return total / weight


@dataclass
class AgreementMatrix:
    """2x2 counts of annotator-A label (rows) by annotator-B label (cols)."""

    counts: list[list[int]]

    def __post_init__(self):
        if len(self.counts) != 2 or any(len(row) != 2 for row in self.counts):
            raise DataError("agreement matrix must be 2x2")
        if any(c < 0 for row in self.counts for c in row):
            raise DataError("agreement counts must be non-negative")

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)


def cohen_kappa(am: AgreementMatrix) -> float:
    """Chance-corrected agreement with marginal-product chance estimate."""
    n = am.total
    if n == 0:
        raise DataError("empty agreement matrix")
    c = am.counts
    p_o = (c[0][0] + c[1][1]) / n
    row0 = c[0][0] + c[0][1]
    row1 = c[1][0] + c[1][1]
    col0 = c[0][0] + c[1][0]
    col1 = c[0][1] + c[1][1]
    p_e = (row0 * col0 + row1 * col1) / (n * n)
    if p_e == 1.0:
        return 1.0 if p_o == 1.0 else 0.0
    return (p_o - p_e) / (1.0 - p_e)


def mean_pairwise_kappa(matrices: list[AgreementMatrix]) -> float:
    """Average kappa over annotator pairs (multi-annotator summary)."""
    if not matrices:
        raise DataError("no agreement matrices")
    return sum(cohen_kappa(m) for m in matrices) / len(matrices)


def majority_vote(labels: list) -> int | str:
    """Most frequent non-obscure label; ties and all-obscure resolve to 'x'."""
    if len(labels) < 2:
        raise DataError("majority_vote needs at least two labels")
    ones = sum(1 for lab in labels if lab == 1)
    zeros = sum(1 for lab in labels if lab == 0)
    if ones > zeros:
        return 1
    if zeros > ones:
        return 0
    return "x"


@dataclass
class TTestResult:
    t: float
    p: float
    n: int
    degenerate: bool = False


def paired_ttest(a: list[float], b: list[float]) -> TTestResult:
    """Two-sided paired Student t-test.

    The p-value comes from the t CDF evaluated through the continued-fraction
    regularized incomplete beta function (abs. error < 1e-8). Zero-variance
    nonzero differences return a +-inf sentinel with p = 0 and a flag.
    """
    if len(a) != len(b):
        raise DataError("paired_ttest: length mismatch")
    n = len(a)
    if n < 2:
        raise DataError("paired_ttest: need at least two pairs")
    diffs = [float(x) - float(y) for x, y in zip(a, b)]
    mean = sum(diffs) / n
    var = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    if var == 0.0:
        if mean == 0.0:
            return TTestResult(t=0.0, p=1.0, n=n)
        return TTestResult(t=math.copysign(math.inf, mean), p=0.0, n=n, degenerate=True)
    t = mean / math.sqrt(var / n)
    df = n - 1
    p = 2.0 * _student_t_sf(abs(t), df)
    return TTestResult(t=t, p=min(max(p, 0.0), 1.0), n=n)


def _student_t_sf(t: float, df: int) -> float:
    """P(T_df > t) for t >= 0 via the regularized incomplete beta."""
    x = df / (df + t * t)
    return 0.5 * _betainc_regularized(df / 2.0, 0.5, x)


def _betainc_regularized(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) by Lentz continued fraction."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log(1.0 - x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def _beta_cf(a: float, b: float, x: float, max_iter: int = 300, eps: float = 1e-14) -> float:
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        num = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + num * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + num / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        num = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + num * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + num / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    return h

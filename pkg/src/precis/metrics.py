"""Edge-selection and estimation quality metrics.

All selection metrics operate on the strict upper triangle only: an
undirected graph on d nodes has d(d-1)/2 candidate edges.  Metrics whose
denominator vanishes return 0 and flag the fact instead of raising, so that
replicate aggregation stays total.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import DimensionMismatch, SingleClass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class ClassificationMetrics:
    """Sensitivity, specificity, precision, accuracy, and Matthews correlation.

    ``degenerate`` lists the metrics whose denominator was zero (reported as 0).
    """

    sen: float
    spe: float
    pre: float
    acc: float
    mcc: float
    degenerate: tuple[str, ...] = ()

    def as_dict(self) -> dict[str, float]:
        return {"sen": self.sen, "spe": self.spe, "pre": self.pre, "acc": self.acc, "mcc": self.mcc}


def _upper(matrix: np.ndarray) -> np.ndarray:
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    iu = np.triu_indices(m.shape[0], k=1)
    return m[iu]


def confusion(estimated: np.ndarray, truth: np.ndarray) -> ConfusionCounts:
    """Count edge decisions over the strict upper triangle."""
    est = _upper(estimated).astype(bool)
    tru = _upper(truth).astype(bool)
    if est.shape != tru.shape:
        raise DimensionMismatch("estimated and truth adjacency dimensions differ")
    return ConfusionCounts(
        tp=int((est & tru).sum()),
        fp=int((est & ~tru).sum()),
        tn=int((~est & ~tru).sum()),
        fn=int((~est & tru).sum()),
    )


def classification_metrics(c: ConfusionCounts) -> ClassificationMetrics:
    """Confusion-matrix summaries; MCC uses the square-rooted denominator."""
    degenerate = []

    def ratio(name: str, num: float, den: float) -> float:
        if den == 0:
            degenerate.append(name)
            return 0.0
        return num / den

    sen = ratio("sen", c.tp, c.tp + c.fn)
    spe = ratio("spe", c.tn, c.tn + c.fp)
    pre = ratio("pre", c.tp, c.tp + c.fp)
    acc = ratio("acc", c.tp + c.tn, c.total)
    mcc_den = np.sqrt(
        float(c.tp + c.fp) * float(c.tp + c.fn) * float(c.tn + c.fp) * float(c.tn + c.fn)
    )
    mcc = ratio("mcc", c.tp * c.tn - c.fp * c.fn, mcc_den)
    return ClassificationMetrics(
        sen=sen, spe=spe, pre=pre, acc=acc, mcc=mcc, degenerate=tuple(degenerate)
    )


def auc(scores: np.ndarray, truth: np.ndarray) -> float:
    """Rank-based area under the ROC curve over upper-triangle edge scores.

    Mann-Whitney convention: ties contribute 1/2.  Raises ``SingleClass``
    when the truth has no edges or all edges, where AUC is undefined.
    """
    s = _upper(scores).astype(np.float64)
    t = _upper(truth).astype(bool)
    if s.shape != t.shape:
        raise DimensionMismatch("scores and truth adjacency dimensions differ")
    if not np.isfinite(s).all():
        raise ValueError("scores contain non-finite values")
    n_pos = int(t.sum())
    n_neg = t.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass(f"truth has {n_pos} positives out of {t.size} pairs")
    ranks = rankdata(s)
    rank_sum = float(ranks[t].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def frobenius_error(omega_hat: np.ndarray, omega_true: np.ndarray) -> float:
    """Frobenius norm of the elementwise difference."""
    a = np.asarray(omega_hat, dtype=np.float64)
    b = np.asarray(omega_true, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(((a - b) ** 2).sum()))

"""The seven per-release evaluation measures."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAXIMIZE = "maximize"
MINIMIZE = "minimize"

# Polarity metadata: which direction is better for each measure.
METRIC_POLARITY = {
    "recall": MAXIMIZE,
    "pf": MINIMIZE,
    "auc": MAXIMIZE,
    "gm": MAXIMIZE,
    "d2h": MINIMIZE,
    "brier": MINIMIZE,
    "ifa": MINIMIZE,
}

RESULT_METRICS = ("recall", "pf", "auc", "gm", "d2h", "brier", "ifa")
WIN_TABLE_METRICS = ("d2h", "auc", "ifa", "brier", "recall", "pf", "gm")

FLAG_NO_POSITIVES = "no-positives"
FLAG_NO_NEGATIVES = "no-negatives"


@dataclass(frozen=True)
class PredictionSet:
    """Predicted defect probabilities paired with true labels (1=defective)."""

    probs: np.ndarray
    labels: np.ndarray
    hashes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "probs", np.asarray(self.probs, dtype=float))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=int))
        if len(self.probs) != len(self.labels) or len(self.probs) == 0:
            raise ValueError("prediction set must be nonempty and aligned")
        if ((self.probs < 0) | (self.probs > 1)).any():
            raise ValueError("probabilities must lie in [0, 1]")
        if not np.isin(self.labels, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")

    def __len__(self) -> int:
        return len(self.probs)


@dataclass(frozen=True)
class MetricReport:
    recall: float
    pf: float
    auc: float
    gm: float
    d2h: float
    brier: float
    ifa: int
    flags: tuple[str, ...] = ()

    def value(self, name: str) -> float:
        return float(getattr(self, name))


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks, ties averaged."""
    order = np.argsort(values, kind="stable")
    sorted_vals = values[order]
    n = len(values)
    starts = np.r_[0, np.nonzero(np.diff(sorted_vals))[0] + 1]
    ends = np.r_[starts[1:], n]
    ranks = np.empty(n)
    for s, e in zip(starts, ends):
        ranks[order[s:e]] = (s + e + 1) / 2.0
    return ranks


def _auc(probs: np.ndarray, labels: np.ndarray) -> float:
    """Probability a random defective outranks a random clean commit, ties
    counting one half (equals the trapezoidal ROC area)."""
    ranks = _average_ranks(probs)
    n1 = int(labels.sum())
    n0 = len(labels) - n1
    return float((ranks[labels == 1].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


def _ifa(probs: np.ndarray, labels: np.ndarray) -> int:
    """False alarms before the first true positive, probabilities descending.

    Equal probabilities keep the original (chronological) order.
    """
    order = np.argsort(-probs, kind="stable")
    ordered = labels[order]
    return int(np.argmax(ordered == 1))


def evaluate(preds: PredictionSet, threshold: float = 0.5) -> MetricReport:
    """Score one release's predictions on all seven measures.

    A probability exactly at the threshold counts as predicted defective.
    Degenerate single-class test sets report 0 for the undefined measures and
    carry a flag instead of NaN so downstream ranking stays total.
    """
    y = preds.labels
    p = preds.probs
    predicted = p >= threshold
    tp = int(np.sum(predicted & (y == 1)))
    fp = int(np.sum(predicted & (y == 0)))
    fn = int(np.sum(~predicted & (y == 1)))
    tn = int(np.sum(~predicted & (y == 0)))
    pos = tp + fn
    neg = fp + tn

    flags: list[str] = []
    if pos == 0:
        flags.append(FLAG_NO_POSITIVES)
    if neg == 0:
        flags.append(FLAG_NO_NEGATIVES)

    recall = tp / pos if pos else 0.0
    pf = fp / neg if neg else 0.0
    complement = 1.0 - pf
    gm = (2.0 * recall * complement / (recall + complement)
          if (recall + complement) > 0 else 0.0)
    d2h = math.sqrt((1.0 - recall) ** 2 + pf ** 2) / math.sqrt(2.0)
    brier = float(np.mean((y - p) ** 2))
    auc = _auc(p, y) if pos and neg else 0.0
    ifa = _ifa(p, y) if pos else 0

    return MetricReport(recall=recall, pf=pf, auc=auc, gm=gm, d2h=d2h,
                        brier=brier, ifa=ifa, flags=tuple(flags))

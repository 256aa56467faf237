"""Confusion-matrix metrics and the tabular report layout."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..errors import EmptyMatrix


def _ratio(num: int, den: int) -> Fraction:
    return Fraction(num, den) if den else Fraction(0)


@dataclass
class EvalReport:
    classes: tuple[str, ...]
    confusion: np.ndarray  # rows = true class, columns = predicted
    tp_rate: np.ndarray
    fp_rate: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    support: np.ndarray
    weighted: dict
    accuracy: float
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "classes": list(self.classes),
            "confusion": self.confusion.tolist(),
            "accuracy": self.accuracy,
            "per_class": {
                c: {
                    "tp_rate": float(self.tp_rate[i]),
                    "fp_rate": float(self.fp_rate[i]),
                    "precision": float(self.precision[i]),
                    "recall": float(self.recall[i]),
                    "support": int(self.support[i]),
                }
                for i, c in enumerate(self.classes)
            },
            "weighted": dict(self.weighted),
            "meta": dict(self.meta),
        }

    def row(self) -> str:
        w = self.weighted
        return (f"TP {w['tp_rate'] * 100:.1f}% | FP {w['fp_rate'] * 100:.1f}% | "
                f"Precision {w['precision'] * 100:.1f}% | Recall {w['recall'] * 100:.1f}%")


def evaluate(confusion, classes=None) -> EvalReport:
    """Per-class and support-weighted TP rate, FP rate, precision and recall.

    Ratios are formed with exact rational arithmetic and rounded once, so
    they equal hand computation bit for bit. Empty denominators give 0.
    """
    cm = np.asarray(confusion)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1] or cm.shape[0] == 0:
        raise EmptyMatrix("confusion matrix must be square and non-empty")
    if np.any(cm < 0) or not np.all(np.equal(np.mod(cm, 1), 0)):
        raise ValueError("confusion matrix must hold non-negative integers")
    cm = cm.astype(np.int64)
    total = int(cm.sum())
    if total == 0:
        raise EmptyMatrix("confusion matrix has no entries")
    n = cm.shape[0]
    classes = tuple(classes) if classes is not None else tuple(str(i) for i in range(n))
    support = cm.sum(axis=1)
    predicted = cm.sum(axis=0)
    tp = np.diag(cm)

    tpr, fpr, prec = [], [], []
    for i in range(n):
        s, p, t = int(support[i]), int(predicted[i]), int(tp[i])
        tpr.append(_ratio(t, s))
        fpr.append(_ratio(p - t, total - s))
        prec.append(_ratio(t, p))

    def wavg(vals):
        return float(sum(Fraction(int(support[i])) * v for i, v in enumerate(vals)) / total)

    weighted = {
        "tp_rate": wavg(tpr),
        "fp_rate": wavg(fpr),
        "precision": wavg(prec),
        "recall": wavg(tpr),
    }
    as_arr = lambda vals: np.array([float(v) for v in vals])  # noqa: E731
    return EvalReport(
        classes, cm, as_arr(tpr), as_arr(fpr), as_arr(prec), as_arr(tpr), support,
        weighted, float(Fraction(int(tp.sum()), total)),
    )


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(y_true), np.asarray(y_pred)), 1)
    return cm


TABLE_HEADER = ("Detection", "Classifier", "Data set", "TP Rate", "FP Rate", "Precision", "Recall")


def render_table(rows) -> str:
    """Plain-text table with the TP/FP/Precision/Recall column layout.

    ``rows`` holds (detection, classifier, dataset, EvalReport) tuples.
    """
    body = []
    for det, clf, ds, rep in rows:
        w = rep.weighted
        body.append((det, clf, ds) + tuple(f"{w[k] * 100:.1f}%" for k in
                                           ("tp_rate", "fp_rate", "precision", "recall")))
    widths = [max(len(str(r[i])) for r in [TABLE_HEADER] + body) for i in range(len(TABLE_HEADER))]
    fmt = lambda r: "| " + " | ".join(str(v).ljust(w) for v, w in zip(r, widths)) + " |"  # noqa: E731
    rule = "+-" + "-+-".join("-" * w for w in widths) + "-+"
    lines = [rule, fmt(TABLE_HEADER), rule.replace("-", "=")]
    lines += [fmt(r) for r in body]
    lines.append(rule)
    return "\n".join(lines) + "\n"

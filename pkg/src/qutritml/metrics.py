"""Classification metrics: accuracy, macro precision/recall/F1, confusion matrix."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


@dataclass
class MetricsReport:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    confusion: np.ndarray  # rows = true class, columns = predicted class
    per_class: list = field(default_factory=list)  # (precision, recall, f1) per class
    zero_division: bool = False  # some precision/recall was 0/0 and reported as 0

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "confusion": self.confusion.tolist(),
            "per_class": [
                {"class": c, "precision": p, "recall": r, "f1": f, "support": int(self.confusion[c].sum())}
                for c, (p, r, f) in enumerate(self.per_class)
            ],
            "zero_division": self.zero_division,
        }


def confusion_matrix(y_true, y_pred, k: int) -> np.ndarray:
    cm = np.zeros((k, k), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def _ratio(num, den):
    return (num / den, False) if den > 0 else (0.0, True)


def compute_metrics(y_true, y_pred, k: int | None = None) -> MetricsReport:
    """Per-class scores from the confusion matrix; macro = unweighted mean."""
    y_true = np.asarray(y_true, dtype=np.int64).reshape(-1)
    y_pred = np.asarray(y_pred, dtype=np.int64).reshape(-1)
    if y_true.shape != y_pred.shape:
        raise ValidationError(f"length mismatch: {y_true.size} true vs {y_pred.size} predicted labels")
    if y_true.size == 0:
        raise ValidationError("no labels to score")
    if k is None:
        k = int(max(y_true.max(), y_pred.max())) + 1
    if y_true.min() < 0 or y_pred.min() < 0 or max(y_true.max(), y_pred.max()) >= k:
        raise ValidationError(f"labels must lie in 0..{k - 1}")

    cm = confusion_matrix(y_true, y_pred, k)
    tp = np.diag(cm).astype(np.float64)
    flagged = False
    per_class = []
    for c in range(k):
        p, zp = _ratio(tp[c], cm[:, c].sum())
        r, zr = _ratio(tp[c], cm[c, :].sum())
        f, _ = _ratio(2 * p * r, p + r)
        flagged |= zp or zr
        per_class.append((float(p), float(r), float(f)))
    arr = np.array(per_class)
    return MetricsReport(
        accuracy=float(tp.sum() / y_true.size),
        macro_precision=float(arr[:, 0].mean()),
        macro_recall=float(arr[:, 1].mean()),
        macro_f1=float(arr[:, 2].mean()),
        confusion=cm,
        per_class=per_class,
        zero_division=bool(flagged),
    )

"""Set-based accuracy / precision / recall, as used for both images and species."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ArgumentError


@dataclass(frozen=True)
class SetMetrics:
    """Percentages; precision/recall are ``None`` when their denominator is zero."""

    accuracy: float
    precision: float | None
    recall: float | None
    tp: int
    fp: int
    fn: int
    tn: int

    def as_dict(self) -> dict:
        return {
            "accuracy_pct": self.accuracy,
            "precision_pct": self.precision,
            "recall_pct": self.recall,
            "tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn,
        }


def classification_metrics(predicted: set, truth: set, universe: set) -> SetMetrics:
    """Score a predicted positive set against the true positive set.

    Every universe member is classified; agreement on either side (both
    positive or both negative) counts toward accuracy.
    """
    predicted, truth, universe = set(predicted), set(truth), set(universe)
    if not universe:
        raise ArgumentError("universe is empty")
    if not predicted <= universe:
        raise ArgumentError(f"predicted items outside universe: {sorted(map(str, predicted - universe))}")
    if not truth <= universe:
        raise ArgumentError(f"truth items outside universe: {sorted(map(str, truth - universe))}")
    tp = len(predicted & truth)
    fp = len(predicted - truth)
    fn = len(truth - predicted)
    tn = len(universe) - tp - fp - fn
    return SetMetrics(
        accuracy=(tp + tn) / len(universe) * 100,
        precision=tp / (tp + fp) * 100 if tp + fp else None,
        recall=tp / (tp + fn) * 100 if tp + fn else None,
        tp=tp, fp=fp, fn=fn, tn=tn,
    )

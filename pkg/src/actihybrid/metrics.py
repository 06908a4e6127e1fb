"""Confusion-matrix metrics for binary classifiers, with class 1 as positive."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError, ValidationError

CLASSES = (0, 1)


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def swapped(self) -> "ConfusionMatrix":
        """The same counts with class 0 treated as positive."""
        return ConfusionMatrix(tp=self.tn, fp=self.fn, tn=self.tp, fn=self.fp)


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class AverageScores:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class EvaluationReport:
    accuracy: float
    per_class: dict  # class id -> ClassScores
    macro_avg: AverageScores
    weighted_avg: AverageScores
    confusion: ConfusionMatrix
    flags: tuple = field(default=())

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "classes": {
                str(c): {"precision": s.precision, "recall": s.recall, "f1": s.f1, "support": s.support}
                for c, s in sorted(self.per_class.items())
            },
            "macro_avg": _avg_dict(self.macro_avg),
            "weighted_avg": _avg_dict(self.weighted_avg),
            "confusion": {"tp": self.confusion.tp, "fp": self.confusion.fp,
                          "tn": self.confusion.tn, "fn": self.confusion.fn},
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvaluationReport":
        return cls(
            accuracy=d["accuracy"],
            per_class={int(c): ClassScores(**s) for c, s in d["classes"].items()},
            macro_avg=AverageScores(**d["macro_avg"]),
            weighted_avg=AverageScores(**d["weighted_avg"]),
            confusion=ConfusionMatrix(**d["confusion"]),
            flags=tuple(d.get("flags", ())),
        )


def _avg_dict(a: AverageScores) -> dict:
    return {"precision": a.precision, "recall": a.recall, "f1": a.f1}


def _check(y_true, y_pred):
    t = np.asarray(y_true).reshape(-1)
    p = np.asarray(y_pred).reshape(-1)
    if len(t) != len(p):
        raise ValidationError(f"{len(t)} true labels but {len(p)} predictions")
    if len(t) == 0:
        raise ValidationError("cannot evaluate zero instances")
    if not (np.isin(t, CLASSES).all() and np.isin(p, CLASSES).all()):
        raise ValidationError("labels must be 0 or 1")
    return t.astype(np.int64), p.astype(np.int64)


def confusion_matrix(y_true, y_pred) -> ConfusionMatrix:
    t, p = _check(y_true, y_pred)
    return ConfusionMatrix(
        tp=int(np.sum((t == 1) & (p == 1))),
        fp=int(np.sum((t == 0) & (p == 1))),
        tn=int(np.sum((t == 0) & (p == 0))),
        fn=int(np.sum((t == 1) & (p == 0))),
    )


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise DomainError("accuracy of an empty confusion matrix is undefined")
    return (cm.tp + cm.tn) / cm.total


def precision_recall_f1(cm: ConfusionMatrix, positive_class: int = 1, flags: list = None):
    """``(precision, recall, f1)`` for ``positive_class``.

    A 0/0 ratio is scored 0; when ``flags`` is given, a note naming the
    undefined quantity is appended to it.
    """
    if positive_class not in CLASSES:
        raise ValidationError(f"positive_class must be 0 or 1, got {positive_class!r}")
    if positive_class == 0:
        cm = cm.swapped()

    def ratio(num, den, what):
        if den == 0:
            if flags is not None:
                flags.append(f"{what}_zero_division:class_{positive_class}")
            return 0.0
        return num / den

    precision = ratio(cm.tp, cm.tp + cm.fp, "precision")
    recall = ratio(cm.tp, cm.tp + cm.fn, "recall")
    if precision + recall == 0:
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def classification_report(y_true, y_pred) -> EvaluationReport:
    cm = confusion_matrix(y_true, y_pred)
    flags = []
    per_class = {}
    for c in CLASSES:
        pr, rc, f1 = precision_recall_f1(cm, c, flags)
        support = cm.tp + cm.fn if c == 1 else cm.tn + cm.fp
        per_class[c] = ClassScores(pr, rc, f1, support)
    n = cm.total
    macro = AverageScores(*(sum(getattr(per_class[c], k) for c in CLASSES) / len(CLASSES)
                            for k in ("precision", "recall", "f1")))
    weighted = AverageScores(*(sum(getattr(per_class[c], k) * per_class[c].support for c in CLASSES) / n
                               for k in ("precision", "recall", "f1")))
    return EvaluationReport(accuracy(cm), per_class, macro, weighted, cm, tuple(flags))


def render_report(report: EvaluationReport, title: str = "", digits: int = 2) -> str:
    """Fixed-width text table in the familiar precision/recall/f1/support layout."""
    w = max(digits + 7, 10)
    head = f"{'':>14}{'precision':>{w + 3}}{'recall':>{w}}{'f1-score':>{w}}{'support':>{w}}"
    lines = [title] if title else []
    lines += [head, ""]
    fmt = f"{{:>{w + 3}.{digits}f}}{{:>{w}.{digits}f}}{{:>{w}.{digits}f}}"
    for c, s in sorted(report.per_class.items()):
        lines.append(f"{c:>14}" + fmt.format(s.precision, s.recall, s.f1) + f"{s.support:>{w}}")
    n = report.confusion.total
    lines.append("")
    lines.append(f"{'accuracy':>14}{'':>{w + 3}}{'':>{w}}{report.accuracy:>{w}.{digits}f}{n:>{w}}")
    for name, a in (("macro avg", report.macro_avg), ("weighted avg", report.weighted_avg)):
        lines.append(f"{name:>14}" + fmt.format(a.precision, a.recall, a.f1) + f"{n:>{w}}")
    if report.flags:
        lines.append(f"flags: {', '.join(report.flags)}")
    return "\n".join(lines)

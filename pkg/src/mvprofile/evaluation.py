"""Classification metrics, confusion breakdowns and annotator agreement."""
from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Hashable, Mapping, Optional, Sequence

import numpy as np

from .errors import DegenerateMarginalsError, InvalidClassError, LengthMismatchError


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    per_class: dict[int, ClassMetrics]
    macro_f1: float
    confusion: np.ndarray  # rows = gold, columns = predicted
    n: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "n": self.n,
            "per_class": {str(k): asdict(m) for k, m in self.per_class.items()},
            "confusion": self.confusion.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(
            accuracy=d["accuracy"],
            per_class={int(k): ClassMetrics(**v) for k, v in d["per_class"].items()},
            macro_f1=d["macro_f1"],
            confusion=np.asarray(d["confusion"], dtype=np.int64),
            n=d["n"],
        )

    def __eq__(self, other):
        if not isinstance(other, EvalReport):
            return NotImplemented
        return (self.accuracy == other.accuracy and self.macro_f1 == other.macro_f1
                and self.n == other.n and self.per_class == other.per_class
                and np.array_equal(self.confusion, other.confusion))


def _ratio(num: float, den: float) -> float:
    return float(num) / float(den) if den else 0.0


def evaluate(gold: Sequence[int], predicted: Sequence[int], num_classes: int) -> EvalReport:
    """Accuracy, per-class P/R/F1 and macro-F1. Classes absent from both sides score F1 = 0."""
    g = np.asarray(gold, dtype=np.int64)
    p = np.asarray(predicted, dtype=np.int64)
    if g.shape != p.shape:
        raise LengthMismatchError(f"{len(g)} gold labels vs {len(p)} predictions")
    if g.size == 0:
        raise LengthMismatchError("need at least one example")
    for arr in (g, p):
        if arr.min() < 0 or arr.max() >= num_classes:
            raise InvalidClassError(f"class index outside [0, {num_classes})")
    confusion = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(confusion, (g, p), 1)
    per_class = {}
    for c in range(num_classes):
        tp = confusion[c, c]
        prec = _ratio(tp, confusion[:, c].sum())
        rec = _ratio(tp, confusion[c, :].sum())
        f1 = _ratio(2 * prec * rec, prec + rec)
        per_class[c] = ClassMetrics(prec, rec, f1, int(confusion[c, :].sum()))
    n = int(g.size)
    return EvalReport(
        accuracy=float(np.trace(confusion)) / n,
        per_class=per_class,
        macro_f1=float(np.mean([m.f1 for m in per_class.values()])),
        confusion=confusion,
        n=n,
    )


@dataclass(frozen=True)
class ConfusionBreakdown:
    """Per gold class: how many went to each other class."""

    misclassified_as: dict[str, dict[str, int]]
    errors_by_gold: dict[str, int]
    errors_by_predicted: dict[str, int]
    correct: int
    errors: int

    def lines(self) -> list[str]:
        out = [f"correct: {self.correct}  misclassified: {self.errors}"]
        for gold, row in self.misclassified_as.items():
            parts = ", ".join(f"{k}={v}" for k, v in row.items())
            out.append(f"gold {gold}: {self.errors_by_gold[gold]} wrong ({parts})")
        return out


def confusion_report(report: EvalReport, class_names: Sequence[str]) -> ConfusionBreakdown:
    cm = report.confusion
    if len(class_names) != cm.shape[0]:
        raise ValueError("class_names does not match the confusion matrix")
    names = list(class_names)
    rows = {names[i]: {names[j]: int(cm[i, j]) for j in range(len(names)) if j != i}
            for i in range(len(names))}
    off = cm - np.diag(np.diag(cm))
    return ConfusionBreakdown(
        misclassified_as=rows,
        errors_by_gold={names[i]: int(off[i].sum()) for i in range(len(names))},
        errors_by_predicted={names[j]: int(off[:, j].sum()) for j in range(len(names))},
        correct=int(np.trace(cm)),
        errors=int(off.sum()),
    )


def cohens_kappa(annotations_a: Sequence[Hashable], annotations_b: Sequence[Hashable]) -> float:
    """Chance-corrected agreement (p_o - p_e) / (1 - p_e), computed exactly."""
    if len(annotations_a) != len(annotations_b):
        raise LengthMismatchError("annotation lists differ in length")
    n = len(annotations_a)
    if n == 0:
        raise LengthMismatchError("need at least one annotation")
    agree = sum(a == b for a, b in zip(annotations_a, annotations_b))
    ca, cb = Counter(annotations_a), Counter(annotations_b)
    p_o = Fraction(agree, n)
    p_e = Fraction(sum(ca[k] * cb[k] for k in ca), n * n)
    if p_e == 1:
        if p_o == 1:
            return 1.0
        raise DegenerateMarginalsError("chance agreement is 1 but annotators disagree")
    return float((p_o - p_e) / (1 - p_e))


def format_table(rows: Sequence[tuple[str, Optional[EvalReport]]], title: str = "") -> str:
    """Aligned text table with Model / Accuracy / Macro-avg F1 columns."""
    width = max([len("Model")] + [len(name) for name, _ in rows])
    lines = []
    if title:
        lines.append(title)
    lines.append(f"{'Model':<{width}}  {'Accuracy':>8}  {'Macro-avg F1':>12}")
    lines.append("-" * (width + 24))
    for name, rep in rows:
        if rep is None:
            lines.append(f"{name:<{width}}  {'failed':>8}  {'':>12}")
        else:
            lines.append(f"{name:<{width}}  {rep.accuracy:>8.3f}  {rep.macro_f1:>12.3f}")
    return "\n".join(lines)


def labels_to_indices(labels: Sequence[str], classes: Sequence[str]) -> list[int]:
    index = {c: i for i, c in enumerate(classes)}
    try:
        return [index[x] for x in labels]
    except KeyError as e:
        raise InvalidClassError(f"unknown class {e.args[0]!r}") from e


def report_from_labels(gold: Mapping[str, str], predicted: Mapping[str, str],
                       classes: Sequence[str]) -> EvalReport:
    ids = sorted(gold)
    return evaluate(labels_to_indices([gold[i] for i in ids], classes),
                    labels_to_indices([predicted[i] for i in ids], classes), len(classes))

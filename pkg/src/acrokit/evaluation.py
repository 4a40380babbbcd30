"""Span-boundary and per-long-form metrics, dataset splitting, corpus stats.

A predicted span counts only on an exact (start, end, kind) match. Long-form
scores are computed per class and macro-averaged over every long form seen in
gold or predictions; a class nobody predicted gets precision 0 (and a class
absent from gold gets recall 0) rather than being excluded, which shifts macro
values and is therefore fixed here as the convention.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .dictionary import ADSample, AcronymDictionary
from .extraction import LONG, SHORT, SpanAnnotation
from .validation import DataError, require_same_length

AI_CLASSES = ("acronym", "long")
_KIND_TO_CLASS = {SHORT: "acronym", LONG: "long"}


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class PrfReport:
    per_class: dict[str, ClassScores]
    macro_precision: float
    macro_recall: float
    macro_f1: float

    def to_dict(self) -> dict:
        return {
            "per_class": {
                name: {"precision": s.precision, "recall": s.recall,
                       "f1": s.f1, "support": s.support}
                for name, s in sorted(self.per_class.items())
            },
            "macro": {"precision": self.macro_precision,
                      "recall": self.macro_recall, "f1": self.macro_f1},
        }

    def text_table(self) -> str:
        names = sorted(self.per_class) + ["macro"]
        width = max(len(n) for n in names)
        lines = [f"{'class':<{width}}  {'prec':>7}  {'rec':>7}  {'f1':>7}  {'support':>7}"]
        for name in sorted(self.per_class):
            s = self.per_class[name]
            lines.append(f"{name:<{width}}  {s.precision:>7.4f}  {s.recall:>7.4f}  "
                         f"{s.f1:>7.4f}  {s.support:>7d}")
        lines.append(f"{'macro':<{width}}  {self.macro_precision:>7.4f}  "
                     f"{self.macro_recall:>7.4f}  {self.macro_f1:>7.4f}  {'':>7}")
        return "\n".join(lines)


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def report_from_counts(counts: dict[str, tuple[int, int, int]]) -> PrfReport:
    """counts: class -> (true positives, predicted count, gold count)."""
    per_class = {}
    for name, (tp, n_pred, n_gold) in counts.items():
        precision = tp / n_pred if n_pred else 0.0
        recall = tp / n_gold if n_gold else 0.0
        per_class[name] = ClassScores(precision, recall, _f1(precision, recall),
                                      n_gold)
    if not per_class:
        raise DataError("no classes to score")
    k = len(per_class)
    return PrfReport(
        per_class,
        sum(s.precision for s in per_class.values()) / k,
        sum(s.recall for s in per_class.values()) / k,
        sum(s.f1 for s in per_class.values()) / k,
    )


def _by_ref(annotations, which: str) -> dict:
    out = {}
    for ann in annotations:
        if ann.sent_ref in out:
            raise DataError(f"duplicate {which} annotation for sentence {ann.sent_ref}")
        out[ann.sent_ref] = ann
    return out


def evaluate_ai(gold: list[SpanAnnotation], pred: list[SpanAnnotation]) -> PrfReport:
    """Exact-boundary span metrics for the two span kinds."""
    gold_by_ref = _by_ref(gold, "gold")
    pred_by_ref = _by_ref(pred, "predicted")
    if set(gold_by_ref) != set(pred_by_ref):
        odd = sorted(set(gold_by_ref).symmetric_difference(pred_by_ref))
        raise DataError(f"gold and predictions cover different sentences, "
                        f"e.g. {odd[0]}")
    counts = {name: [0, 0, 0] for name in AI_CLASSES}
    for ref, gold_ann in gold_by_ref.items():
        pred_ann = pred_by_ref[ref]
        for kind, name in _KIND_TO_CLASS.items():
            gold_spans = {(s.start, s.end) for s in gold_ann.spans_of(kind)}
            pred_spans = {(s.start, s.end) for s in pred_ann.spans_of(kind)}
            counts[name][0] += len(gold_spans & pred_spans)
            counts[name][1] += len(pred_spans)
            counts[name][2] += len(gold_spans)
    return report_from_counts({n: tuple(c) for n, c in counts.items()})


def _gold_form(item) -> str:
    if isinstance(item, ADSample):
        if item.gold_long_form is None:
            raise DataError(f"sample at {item.sentence.ref} has no gold long form")
        return item.gold_long_form
    return item


def evaluate_ad(gold, pred, forms: list[str] | None = None) -> PrfReport:
    """Per-long-form metrics over gold samples (or strings) and predictions.

    pred entries may be long-form strings or inventory ids; ids need `forms`
    (the id-ordered long-form list) to resolve.
    """
    require_same_length(gold, pred, "gold vs predictions")
    if not gold:
        raise DataError("nothing to evaluate")
    gold_forms = [_gold_form(g) for g in gold]
    pred_forms = []
    for p in pred:
        if isinstance(p, str):
            pred_forms.append(p)
        else:
            if forms is None:
                raise DataError("integer predictions need the long-form list")
            pred_forms.append(forms[int(p)])
    classes = sorted(set(gold_forms) | set(pred_forms))
    counts = {c: [0, 0, 0] for c in classes}
    for g, p in zip(gold_forms, pred_forms):
        if g == p:
            counts[g][0] += 1
        counts[p][1] += 1
        counts[g][2] += 1
    return report_from_counts({c: tuple(v) for c, v in counts.items()})


# ---------------------------------------------------------------------------
# splitting

SPLIT_UNITS = ("sentence", "document")


def _doc_key(item) -> str:
    if hasattr(item, "doc_id"):
        return item.doc_id
    if hasattr(item, "sentence"):
        return item.sentence.doc_id
    raise DataError(f"cannot infer a document id for {type(item).__name__}")


def _nearest_boundary(boundaries: list[int], target: float, at_least: int) -> int:
    best = None
    for b in boundaries:
        if b < at_least:
            continue
        if best is None or abs(b - target) < abs(best - target):
            best = b
    return best if best is not None else boundaries[-1]


def split_dataset(items, ratios=(0.8, 0.1, 0.1), seed: int = 0,
                  unit: str = "sentence"):
    """Seeded shuffle then contiguous three-way cut.

    unit="document" shuffles whole documents and moves each cut to the
    nearest document boundary, so no document straddles two splits.
    """
    if unit not in SPLIT_UNITS:
        raise DataError(f"unit must be one of {SPLIT_UNITS}, got {unit!r}")
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise DataError("ratios must be three non-negative numbers")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise DataError(f"ratios must sum to 1, got {sum(ratios)}")
    items = list(items)
    n = len(items)
    if n < 3:
        raise DataError(f"need at least 3 items to split, got {n}")
    rng = random.Random(seed)
    if unit == "sentence":
        order = list(range(n))
        rng.shuffle(order)
        shuffled = [items[i] for i in order]
        cut1 = int(n * ratios[0])
        cut2 = int(n * (ratios[0] + ratios[1]))
    else:
        groups: dict[str, list] = {}
        group_order: list[str] = []
        for item in items:
            key = _doc_key(item)
            if key not in groups:
                groups[key] = []
                group_order.append(key)
            groups[key].append(item)
        rng.shuffle(group_order)
        shuffled = []
        boundaries = [0]
        for key in group_order:
            shuffled.extend(groups[key])
            boundaries.append(len(shuffled))
        cut1 = _nearest_boundary(boundaries, n * ratios[0], 0)
        cut2 = _nearest_boundary(boundaries, n * (ratios[0] + ratios[1]), cut1)
    return shuffled[:cut1], shuffled[cut1:cut2], shuffled[cut2:]


# ---------------------------------------------------------------------------
# distribution summaries

def ambiguity_histogram(dictionary: AcronymDictionary) -> dict[int, int]:
    """Acronym counts keyed by how many long forms each acronym has."""
    hist: dict[int, int] = {}
    for entry in dictionary.entries.values():
        hist[len(entry)] = hist.get(len(entry), 0) + 1
    return dict(sorted(hist.items()))


def sample_ambiguity_histogram(samples: list[ADSample],
                               dictionary: AcronymDictionary) -> dict[int, int]:
    """Sample counts keyed by the ambiguity of each sample's acronym."""
    hist: dict[int, int] = {}
    for sample in samples:
        if sample.acronym not in dictionary.entries:
            raise DataError(f"acronym {sample.acronym!r} missing from dictionary")
        k = len(dictionary.entries[sample.acronym])
        hist[k] = hist.get(k, 0) + 1
    return dict(sorted(hist.items()))


def long_form_support_split(samples: list[ADSample],
                            threshold: int = 10) -> dict[str, int]:
    """How many long forms have fewer than / at least `threshold` samples."""
    counts: dict[str, int] = {}
    for sample in samples:
        form = _gold_form(sample)
        counts[form] = counts.get(form, 0) + 1
    below = sum(1 for c in counts.values() if c < threshold)
    return {"threshold": threshold, "below": below,
            "at_or_above": len(counts) - below}

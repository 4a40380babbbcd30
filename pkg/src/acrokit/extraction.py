"""Acronym/long-form candidate heuristics, a rule pairing baseline and BIO codecs.

An acronym candidate is a word whose characters are mostly uppercase. A long-form
candidate for it is a token window in the same sentence whose words, each either
skipped or contributing its first 1, 2 or 3 characters in order, concatenate to
the acronym's alphabetic characters (case-insensitive).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from sklearn.base import BaseEstimator

from .corpus import Document, Sentence, iter_sentences
from .validation import DataError

SHORT = "short"
LONG = "long"
SPAN_KINDS = (SHORT, LONG)

# Label order is fixed; the CRF tagger indexes transitions by it.
BIO_LABELS = ("B-acronym", "I-acronym", "B-long", "I-long", "O")
O_LABEL = "O"

_KIND_TO_TAG = {SHORT: "acronym", LONG: "long"}
_TAG_TO_KIND = {"acronym": SHORT, "long": LONG}


@dataclass(frozen=True)
class Span:
    start: int
    end: int  # exclusive
    kind: str

    def overlaps(self, other: "Span") -> bool:
        return self.start < other.end and other.start < self.end


@dataclass
class SpanAnnotation:
    sent_ref: tuple[str, str]
    spans: list[Span] = field(default_factory=list)
    pairs: list[tuple[int, int]] = field(default_factory=list)  # (short id, long id)

    def validate(self, sentence_len: int | None = None) -> None:
        for span in self.spans:
            if span.kind not in SPAN_KINDS:
                raise DataError(f"unknown span kind {span.kind!r}")
            if not 0 <= span.start < span.end:
                raise DataError(f"bad span boundaries ({span.start}, {span.end})")
            if sentence_len is not None and span.end > sentence_len:
                raise DataError(
                    f"span ({span.start}, {span.end}) exceeds sentence length "
                    f"{sentence_len}"
                )
        for kind in SPAN_KINDS:
            same = sorted(
                (s for s in self.spans if s.kind == kind),
                key=lambda s: (s.start, s.end),
            )
            for a, b in zip(same, same[1:]):
                if a.overlaps(b):
                    raise DataError(f"overlapping {kind} spans {a} and {b}")
        for short_id, long_id in self.pairs:
            if not (0 <= short_id < len(self.spans) and 0 <= long_id < len(self.spans)):
                raise DataError(f"pair ({short_id}, {long_id}) references missing span")
            if self.spans[short_id].kind != SHORT or self.spans[long_id].kind != LONG:
                raise DataError(f"pair ({short_id}, {long_id}) has wrong span kinds")

    def spans_of(self, kind: str) -> list[Span]:
        return [s for s in self.spans if s.kind == kind]


@dataclass(frozen=True)
class SearchLimits:
    """Bounds for the long-form window search.

    max_window caps the window token count (None: acronym length + 5);
    max_skips caps omitted window tokens. First and last window tokens must
    always contribute characters.
    """

    max_window: int | None = None
    max_skips: int = 2

    def window_cap(self, target_len: int) -> int:
        return self.max_window if self.max_window is not None else target_len + 5


DEFAULT_MIN_ACRONYM_LEN = 2


def alpha_core(word: str) -> str:
    """Alphabetic characters of a word, lowercased (digits/hyphens dropped)."""
    return "".join(c for c in word if c.isalpha()).lower()


def is_acronym_candidate(word: str, min_len: int = DEFAULT_MIN_ACRONYM_LEN) -> bool:
    """True iff the word is long enough and mostly uppercase."""
    if len(word) < min_len:
        return False
    upper = sum(1 for c in word if c.isupper())
    return upper > len(word) / 2


def find_long_form_candidates(
    sentence: Sentence,
    acronym_index: int,
    limits: SearchLimits = SearchLimits(),
) -> list[tuple[int, int]]:
    """All token windows that can spell the acronym at acronym_index.

    Windows never contain the acronym token and may lie on either side of it.
    Returns sorted, de-duplicated (start, end) pairs with end exclusive.
    """
    target = alpha_core(sentence.tokens[acronym_index].text)
    if not target:
        return []
    m = len(target)
    cap = limits.window_cap(m)
    words = [t.text.lower() for t in sentence.tokens]
    n = len(words)
    found: set[tuple[int, int]] = set()
    for start in range(n):
        if start == acronym_index:
            continue
        # states: reachable (chars consumed, skips used) after the window prefix
        states: set[tuple[int, int]] = set()
        for i in range(start, min(n, start + cap)):
            if i == acronym_index:
                break
            w = words[i]
            new_states: set[tuple[int, int]] = set()
            if i == start:
                takes_from = {(0, 0)}
            else:
                takes_from = states
                for j, k in states:  # skipping token i
                    if k < limits.max_skips:
                        new_states.add((j, k + 1))
            for j, k in takes_from:
                for c in (1, 2, 3):
                    if c <= len(w) and w[:c] == target[j : j + c]:
                        if j + c == m:
                            found.add((start, i + 1))
                        new_states.add((j + c, k))
            states = new_states
            if not states:
                break
    return sorted(found)


def filter_annotation_sentences(
    corpus: list[Document],
    limits: SearchLimits = SearchLimits(),
    min_len: int = DEFAULT_MIN_ACRONYM_LEN,
) -> list[Sentence]:
    """Keep sentences holding an acronym candidate with a long-form window."""
    kept = []
    for sent in iter_sentences(corpus):
        for i, tok in enumerate(sent.tokens):
            if is_acronym_candidate(tok.text, min_len) and find_long_form_candidates(
                sent, i, limits
            ):
                kept.append(sent)
                break
    return kept


def rule_pair_baseline(
    sentence: Sentence,
    limits: SearchLimits = SearchLimits(),
    min_len: int = DEFAULT_MIN_ACRONYM_LEN,
) -> SpanAnnotation:
    """Pair each acronym candidate with a long-form window by position rules.

    Chooses the window ending nearest before the acronym, preferring one that
    ends right before a parenthesized acronym; end ties go to the longest
    window. Windows after the acronym are never used. Acronyms without a
    usable window get a short span only. A long span overlapping an already
    chosen one is dropped rather than emitted twice.
    """
    ann = SpanAnnotation(sent_ref=sentence.ref)
    long_ids: dict[tuple[int, int], int] = {}
    for p, tok in enumerate(sentence.tokens):
        if not is_acronym_candidate(tok.text, min_len):
            continue
        short_id = len(ann.spans)
        ann.spans.append(Span(p, p + 1, SHORT))
        windows = [
            w for w in find_long_form_candidates(sentence, p, limits) if w[1] <= p
        ]
        if not windows:
            continue
        if p >= 1 and sentence.tokens[p - 1].text == "(":
            preceding_paren = [w for w in windows if w[1] == p - 1]
            if preceding_paren:
                windows = preceding_paren
        best_end = max(e for _, e in windows)
        start, end = min(w for w in windows if w[1] == best_end)
        if (start, end) in long_ids:
            ann.pairs.append((short_id, long_ids[(start, end)]))
            continue
        chosen = Span(start, end, LONG)
        if any(chosen.overlaps(s) for s in ann.spans_of(LONG)):
            continue
        long_ids[(start, end)] = len(ann.spans)
        ann.pairs.append((short_id, len(ann.spans)))
        ann.spans.append(chosen)
    return ann


class RuleBasedExtractor(BaseEstimator):
    """Estimator facade over the rule pairing baseline (no training)."""

    def __init__(self, min_len: int = DEFAULT_MIN_ACRONYM_LEN,
                 max_window: int | None = None, max_skips: int = 2):
        self.min_len = min_len
        self.max_window = max_window
        self.max_skips = max_skips

    def fit(self, X=None, y=None):
        return self

    def predict(self, X: list[Sentence]) -> list[SpanAnnotation]:
        limits = SearchLimits(max_window=self.max_window, max_skips=self.max_skips)
        return [rule_pair_baseline(s, limits, self.min_len) for s in X]


# ---------------------------------------------------------------------------
# BIO encoding


def spans_to_bio(
    annotation: SpanAnnotation,
    sentence_len: int,
    on_conflict: str = "error",
) -> list[str]:
    """Encode spans as BIO labels. Pairs are not representable and are dropped.

    Tokens covered by both a short and a long span cannot be BIO-encoded;
    on_conflict="prefer-long" keeps the long label (the convention for
    embedded acronyms), the default raises.
    """
    annotation.validate(sentence_len)
    labels = [O_LABEL] * sentence_len
    for kind in (SHORT, LONG):  # long encoded last so "prefer-long" wins
        tag = _KIND_TO_TAG[kind]
        for span in annotation.spans_of(kind):
            occupied = [i for i in range(span.start, span.end) if labels[i] != O_LABEL]
            if occupied:
                if on_conflict == "prefer-long":
                    pass
                else:
                    raise DataError(
                        f"token {occupied[0]} carries both a short and a long span; "
                        "BIO cannot encode that"
                    )
            labels[span.start] = f"B-{tag}"
            for i in range(span.start + 1, span.end):
                labels[i] = f"I-{tag}"
    return labels


def bio_to_spans(
    labels: list[str],
    sent_ref: tuple[str, str] = ("", ""),
    repair: bool = False,
) -> SpanAnnotation:
    """Decode BIO labels into spans (no pairs).

    With repair=True an I-x without a preceding B-x/I-x opens a new span, which
    makes unconstrained tagger output decodable; otherwise it is an error.
    """
    ann = SpanAnnotation(sent_ref=sent_ref)
    open_tag: str | None = None
    open_start = 0

    def close(end: int) -> None:
        nonlocal open_tag
        if open_tag is not None:
            ann.spans.append(Span(open_start, end, _TAG_TO_KIND[open_tag]))
            open_tag = None

    for i, label in enumerate(labels):
        if label not in BIO_LABELS:
            raise DataError(f"unknown BIO label {label!r} at position {i}")
        if label == O_LABEL:
            close(i)
            continue
        marker, tag = label.split("-", 1)
        if marker == "B":
            close(i)
            open_tag, open_start = tag, i
        else:  # I-x
            if open_tag != tag:
                if not repair:
                    prev = labels[i - 1] if i else "<start>"
                    raise DataError(
                        f"invalid BIO transition {prev} -> {label} at position {i}"
                    )
                close(i)
                open_tag, open_start = tag, i
    close(len(labels))
    return ann


# ---------------------------------------------------------------------------
# pairing heuristic for BIO-only data (BIO carries no short<->long mapping)


def pair_spans_nearest(annotation: SpanAnnotation) -> SpanAnnotation:
    """Pair each short span with its nearest long span (preceding wins ties)."""
    paired = SpanAnnotation(
        sent_ref=annotation.sent_ref, spans=list(annotation.spans), pairs=[]
    )
    shorts = [(i, s) for i, s in enumerate(paired.spans) if s.kind == SHORT]
    longs = [(i, s) for i, s in enumerate(paired.spans) if s.kind == LONG]
    for short_id, short in shorts:
        best = None
        for long_id, long_span in longs:
            if long_span.end <= short.start:
                key = (short.start - long_span.end, 0, -long_span.start)
            elif short.end <= long_span.start:
                key = (long_span.start - short.end, 1, long_span.start)
            else:  # embedded/overlapping, treat as distance zero
                key = (0, 0, -long_span.start)
            if best is None or key < best[0]:
                best = (key, long_id)
        if best is not None:
            paired.pairs.append((short_id, best[1]))
    return paired


# ---------------------------------------------------------------------------
# file formats


@dataclass
class AiRecord:
    """One sentence of the span-labeling dataset (tokens + BIO labels)."""

    doc_id: str
    sent_id: str
    tokens: list[str]
    labels: list[str]

    @property
    def ref(self) -> tuple[str, str]:
        return (self.doc_id, self.sent_id)

    def to_annotation(self, repair: bool = False) -> SpanAnnotation:
        return bio_to_spans(self.labels, self.ref, repair=repair)


def read_ai_dataset(path: str | Path) -> list[AiRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            obj = json.loads(raw)
            rec = AiRecord(obj["doc_id"], obj["sent_id"], obj["tokens"], obj["labels"])
            if len(rec.tokens) != len(rec.labels):
                raise DataError(
                    f"{path}: line {line_no}: {len(rec.tokens)} tokens but "
                    f"{len(rec.labels)} labels"
                )
            for label in rec.labels:
                if label not in BIO_LABELS:
                    raise DataError(
                        f"{path}: line {line_no}: unknown BIO label {label!r}"
                    )
            records.append(rec)
    return records


def write_ai_dataset(records: list[AiRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(
                json.dumps(
                    {
                        "doc_id": rec.doc_id,
                        "sent_id": rec.sent_id,
                        "tokens": rec.tokens,
                        "labels": rec.labels,
                    }
                )
                + "\n"
            )


def write_annotations(annotations: list[SpanAnnotation], path: str | Path) -> None:
    """Span-annotation JSON lines; unlike BIO this keeps short<->long pairs."""
    with open(path, "w", encoding="utf-8") as fh:
        for ann in annotations:
            fh.write(
                json.dumps(
                    {
                        "doc_id": ann.sent_ref[0],
                        "sent_id": ann.sent_ref[1],
                        "spans": [[s.start, s.end, s.kind] for s in ann.spans],
                        "pairs": [list(p) for p in ann.pairs],
                    }
                )
                + "\n"
            )


def read_annotations(path: str | Path) -> list[SpanAnnotation]:
    annotations = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            if not raw.strip():
                continue
            obj = json.loads(raw)
            ann = SpanAnnotation(
                sent_ref=(obj["doc_id"], obj["sent_id"]),
                spans=[Span(s, e, k) for s, e, k in obj["spans"]],
                pairs=[tuple(p) for p in obj["pairs"]],
            )
            ann.validate()
            annotations.append(ann)
    return annotations

"""Ambiguous-acronym dictionary construction and disambiguation-sample generation.

Long-form variants are normalized by edit distance (the less common variant is
absorbed by the more frequent form), acronyms with a single canonical meaning
are dropped, and samples are generated under one-sense-per-discourse: an
acronym defined once in a document keeps that meaning for every occurrence in
the document.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .corpus import Document, Sentence, make_sentence
from .extraction import SHORT, LONG, SpanAnnotation
from .validation import DataError

logger = logging.getLogger(__name__)

DEFAULT_EDIT_THRESHOLD = 2


def levenshtein(a: str, b: str) -> int:
    """Edit distance (insert/delete/substitute, unit costs), two-row DP."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    cur = [0] * (len(b) + 1)
    for i, ca in enumerate(a):
        cur[0] = i + 1
        for j, cb in enumerate(b):
            cost = 0 if ca == cb else 1
            cur[j + 1] = min(cur[j] + 1, prev[j + 1] + 1, prev[j] + cost)
        prev, cur = cur, prev
    return prev[len(b)]


def normalize_long_forms(
    raw: list[tuple[str, int]],
    threshold: int = DEFAULT_EDIT_THRESHOLD,
) -> tuple[list[tuple[str, int]], dict[str, str]]:
    """Collapse long-form variants whose edit distance is within threshold.

    Forms are visited in descending-count order (count ties: lexicographically
    smaller first); a less common form within threshold of a more frequent one
    maps to it, transitively to a fixed point. Distances are computed on
    lowercased strings. Returns the canonical (form, aggregated count) list,
    most frequent first, and the raw -> canonical map for absorbed variants.
    """
    counts: dict[str, int] = {}
    for form, count in raw:
        if count < 1:
            raise DataError(f"long form {form!r} has count {count} < 1")
        counts[form] = counts.get(form, 0) + count
    order = sorted(counts, key=lambda f: (-counts[f], f))
    absorbed_by: dict[str, str] = {}
    for i, winner in enumerate(order):
        for loser in order[i + 1 :]:
            if loser in absorbed_by:
                continue
            if levenshtein(winner.lower(), loser.lower()) <= threshold:
                absorbed_by[loser] = winner

    def resolve(form: str) -> str:
        while form in absorbed_by:
            form = absorbed_by[form]
        return form

    totals: dict[str, int] = {}
    variant_map: dict[str, str] = {}
    for form in order:
        root = resolve(form)
        totals[root] = totals.get(root, 0) + counts[form]
        if root != form:
            variant_map[form] = root
    canonical = sorted(totals.items(), key=lambda item: (-item[1], item[0]))
    return canonical, variant_map


@dataclass
class AcronymDictionary:
    """Acronym -> canonical long forms with frequencies, plus the variant map."""

    entries: dict[str, list[tuple[str, int]]]
    variant_map: dict[str, str]

    def canonical_forms(self, acronym: str) -> list[str]:
        return [form for form, _ in self.entries[acronym]]

    def canonical_of(self, raw_long_form: str) -> str:
        return self.variant_map.get(raw_long_form, raw_long_form)

    def all_long_forms(self) -> list[str]:
        """Every canonical long form across entries, deduplicated, sorted."""
        forms = {form for entry in self.entries.values() for form, _ in entry}
        return sorted(forms)

    def validate(self) -> None:
        known = {form for entry in self.entries.values() for form, _ in entry}
        for acronym, entry in self.entries.items():
            forms = [form for form, _ in entry]
            if len(forms) < 2:
                raise DataError(f"acronym {acronym!r} is not ambiguous")
            if len(set(forms)) != len(forms):
                raise DataError(f"acronym {acronym!r} has duplicate long forms")
            if any(freq < 1 for _, freq in entry):
                raise DataError(f"acronym {acronym!r} has a non-positive frequency")
        for raw, canonical in self.variant_map.items():
            if canonical not in known:
                raise DataError(
                    f"variant map target {canonical!r} is not a canonical form"
                )

    def save(self, path: str | Path) -> None:
        obj: dict = {
            acr: [{"long_form": f, "freq": c} for f, c in entry]
            for acr, entry in sorted(self.entries.items())
        }
        obj["variant_map"] = dict(sorted(self.variant_map.items()))
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2, sort_keys=False)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "AcronymDictionary":
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        variant_map = obj.pop("variant_map", {})
        entries = {
            acr: [(e["long_form"], e["freq"]) for e in entry]
            for acr, entry in obj.items()
        }
        dictionary = cls(entries=entries, variant_map=variant_map)
        dictionary.validate()
        return dictionary


def collect_long_form_counts(
    annotations: list[SpanAnnotation],
    sentences: Mapping[tuple[str, str], Sentence],
) -> dict[str, dict[str, int]]:
    """Count (acronym surface, raw long-form surface) pairs from annotations."""
    counts: dict[str, dict[str, int]] = {}
    for ann in annotations:
        if not ann.pairs:
            continue
        if ann.sent_ref not in sentences:
            raise DataError(f"annotation references unknown sentence {ann.sent_ref}")
        texts = sentences[ann.sent_ref].texts
        for short_id, long_id in ann.pairs:
            short, long_span = ann.spans[short_id], ann.spans[long_id]
            acronym = " ".join(texts[short.start : short.end])
            long_form = " ".join(texts[long_span.start : long_span.end])
            group = counts.setdefault(acronym, {})
            group[long_form] = group.get(long_form, 0) + 1
    return counts


def build_dictionary(
    annotations: list[SpanAnnotation],
    sentences: Mapping[tuple[str, str], Sentence],
    threshold: int = DEFAULT_EDIT_THRESHOLD,
    overrides: dict[str, str] | None = None,
) -> AcronymDictionary:
    """Build the ambiguous-acronym dictionary from paired span annotations.

    Acronym grouping is case-sensitive. After per-acronym normalization,
    manual overrides (raw long form -> canonical) are applied, then acronyms
    with a single canonical form are dropped. When the same raw variant occurs
    under several acronyms with different canonicals, the variant map keeps
    the mapping from the lexicographically first acronym.
    """
    counts = collect_long_form_counts(annotations, sentences)
    entries: dict[str, list[tuple[str, int]]] = {}
    variant_map: dict[str, str] = {}
    for acronym in sorted(counts):
        raw = sorted(counts[acronym].items())
        canonical, variants = normalize_long_forms(raw, threshold)
        if overrides:
            canonical, variants = _apply_overrides(raw, canonical, variants, overrides)
        if len(canonical) < 2:
            continue
        entries[acronym] = canonical
        for raw_form, target in variants.items():
            variant_map.setdefault(raw_form, target)
    dictionary = AcronymDictionary(entries=entries, variant_map=variant_map)
    dictionary.validate()
    return dictionary


def _apply_overrides(
    raw: list[tuple[str, int]],
    canonical: list[tuple[str, int]],
    variants: dict[str, str],
    overrides: dict[str, str],
) -> tuple[list[tuple[str, int]], dict[str, str]]:
    # Re-point each overridden raw form at its mandated canonical and move its
    # original count there; untouched raw forms keep the computed mapping.
    resolved: dict[str, str] = {}
    for form, _ in raw:
        resolved[form] = overrides.get(form, variants.get(form, form))
    totals: dict[str, int] = {}
    for form, count in raw:
        target = resolved[form]
        # an override may point at a form that is itself absorbed; follow once
        target = overrides.get(target, target) if target != form else target
        totals[target] = totals.get(target, 0) + count
    new_canonical = sorted(totals.items(), key=lambda item: (-item[1], item[0]))
    new_variants = {f: t for f, t in resolved.items() if f != t and t in totals}
    return new_canonical, new_variants


# ---------------------------------------------------------------------------
# disambiguation samples


@dataclass
class ADSample:
    """One disambiguation instance: a sentence, an acronym position, its meaning."""

    sentence: Sentence
    acronym_index: int
    acronym: str
    gold_long_form: str | None = None

    def validate(self, dictionary: AcronymDictionary | None = None) -> None:
        if not 0 <= self.acronym_index < len(self.sentence):
            raise DataError(
                f"acronym index {self.acronym_index} out of range in sentence "
                f"{self.sentence.sent_id!r}"
            )
        if self.sentence.tokens[self.acronym_index].text != self.acronym:
            raise DataError(
                f"token at index {self.acronym_index} is not {self.acronym!r}"
            )
        if dictionary is not None and self.gold_long_form is not None:
            if self.gold_long_form not in dictionary.canonical_forms(self.acronym):
                raise DataError(
                    f"gold long form {self.gold_long_form!r} is not a dictionary "
                    f"meaning of {self.acronym!r}"
                )


def generate_ad_samples(
    corpus: list[Document],
    annotations: list[SpanAnnotation],
    dictionary: AcronymDictionary,
) -> list[ADSample]:
    """Propagate in-document definitions to every occurrence of the acronym.

    Only single-token short spans act as definitions and only single tokens
    count as occurrences. A document that defines one acronym with two
    distinct canonical meanings violates one-sense-per-discourse; that acronym
    is skipped for that document and the skip is logged.
    """
    by_ref = {s.ref: s for doc in corpus for s in doc.sentences}
    defs_per_doc: dict[str, dict[str, set[str]]] = {}
    for ann in annotations:
        sent = by_ref.get(ann.sent_ref)
        if sent is None:
            raise DataError(f"annotation references unknown sentence {ann.sent_ref}")
        for short_id, long_id in ann.pairs:
            short, long_span = ann.spans[short_id], ann.spans[long_id]
            if short.end - short.start != 1:
                continue
            acronym = sent.tokens[short.start].text
            if acronym not in dictionary.entries:
                continue
            raw = " ".join(sent.texts[long_span.start : long_span.end])
            canonical = dictionary.canonical_of(raw)
            if canonical not in dictionary.canonical_forms(acronym):
                logger.warning(
                    "document %s: long form %r for %r is not in the dictionary; "
                    "definition ignored",
                    sent.doc_id, raw, acronym,
                )
                continue
            defs_per_doc.setdefault(sent.doc_id, {}).setdefault(acronym, set()).add(
                canonical
            )

    samples: list[ADSample] = []
    for doc in corpus:
        definitions = defs_per_doc.get(doc.doc_id, {})
        resolved: dict[str, str] = {}
        for acronym in sorted(definitions):
            meanings = definitions[acronym]
            if len(meanings) > 1:
                logger.warning(
                    "document %s defines %r with %d meanings (%s); skipped",
                    doc.doc_id, acronym, len(meanings), ", ".join(sorted(meanings)),
                )
                continue
            resolved[acronym] = next(iter(meanings))
        if not resolved:
            continue
        for sent in doc.sentences:
            for i, tok in enumerate(sent.tokens):
                if tok.text in resolved:
                    samples.append(
                        ADSample(
                            sentence=sent,
                            acronym_index=i,
                            acronym=tok.text,
                            gold_long_form=resolved[tok.text],
                        )
                    )
    return samples


def subsample_per_long_form(
    samples: list[ADSample], k: int, seed: int = 0
) -> list[ADSample]:
    """Keep at most k samples per canonical long form (seeded, order-preserving)."""
    if k < 1:
        raise DataError(f"k must be >= 1, got {k}")
    by_form: dict[str, list[int]] = {}
    for i, sample in enumerate(samples):
        by_form.setdefault(sample.gold_long_form, []).append(i)
    rng = random.Random(seed)
    keep: set[int] = set()
    for form in sorted(by_form, key=lambda f: (f is None, f)):
        indices = by_form[form]
        if len(indices) <= k:
            keep.update(indices)
        else:
            keep.update(rng.sample(indices, k))
    return [samples[i] for i in sorted(keep)]


# ---------------------------------------------------------------------------
# file formats


def write_ad_dataset(samples: list[ADSample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sample in samples:
            sent = sample.sentence
            obj = {
                "doc_id": sent.doc_id,
                "sent_id": sent.sent_id,
                "tokens": sent.texts,
                "pos": sent.pos_tags,
                "heads": sent.heads,
                "acronym_index": sample.acronym_index,
                "acronym": sample.acronym,
            }
            if sample.gold_long_form is not None:
                obj["long_form"] = sample.gold_long_form
            fh.write(json.dumps(obj) + "\n")


def read_ad_dataset(path: str | Path) -> list[ADSample]:
    samples = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            obj = json.loads(raw)
            try:
                sent = make_sentence(
                    obj["tokens"], obj["pos"], obj.get("heads"),
                    obj["doc_id"], obj["sent_id"],
                )
                sample = ADSample(
                    sentence=sent,
                    acronym_index=obj["acronym_index"],
                    acronym=obj["acronym"],
                    gold_long_form=obj.get("long_form"),
                )
                sample.validate()
            except (KeyError, DataError, ValueError) as exc:
                raise DataError(f"{path}: line {line_no}: {exc}") from None
            samples.append(sample)
    return samples

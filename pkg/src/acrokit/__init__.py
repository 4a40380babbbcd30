"""Acronym identification and disambiguation toolkit.

Pipeline: ingest parsed corpora, find acronym/long-form candidate spans by
rule, build an ambiguous-acronym dictionary with edit-distance normalization,
generate disambiguation samples under one-sense-per-discourse, and train two
models on numpy-backed autodiff: a BiLSTM-CRF span tagger and a BiLSTM +
dependency-GCN long-form classifier (plus a most-frequent baseline).
"""

__version__ = "0.1.0"

from .corpus import (
    CORPUS_FORMATS,
    CorpusFormatError,
    Document,
    EmbeddingTable,
    ROOT,
    Sentence,
    Token,
    group_documents,
    index_sentences,
    ingest_corpus,
    is_tree,
    iter_sentences,
    load_embeddings,
    make_sentence,
    require_tree,
    write_corpus,
)
from .dictionary import (
    ADSample,
    AcronymDictionary,
    build_dictionary,
    generate_ad_samples,
    levenshtein,
    normalize_long_forms,
    read_ad_dataset,
    subsample_per_long_form,
    write_ad_dataset,
)
from .disambiguator import (
    GraphDisambiguator,
    LongFormInventory,
    MostFrequentBaseline,
    mf_predict,
)
from .evaluation import (
    PrfReport,
    evaluate_ad,
    evaluate_ai,
    split_dataset,
)
from .extraction import (
    AiRecord,
    BIO_LABELS,
    RuleBasedExtractor,
    SearchLimits,
    Span,
    SpanAnnotation,
    bio_to_spans,
    filter_annotation_sentences,
    find_long_form_candidates,
    is_acronym_candidate,
    pair_spans_nearest,
    read_ai_dataset,
    read_annotations,
    rule_pair_baseline,
    spans_to_bio,
    write_ai_dataset,
    write_annotations,
)
from .tagger import AcronymTagger, crf_nll, log_partition, sequence_score, viterbi_decode
from .validation import DataError

__all__ = [
    "ADSample",
    "AcronymDictionary",
    "AcronymTagger",
    "AiRecord",
    "BIO_LABELS",
    "CORPUS_FORMATS",
    "CorpusFormatError",
    "DataError",
    "Document",
    "EmbeddingTable",
    "GraphDisambiguator",
    "LongFormInventory",
    "MostFrequentBaseline",
    "PrfReport",
    "ROOT",
    "RuleBasedExtractor",
    "SearchLimits",
    "Sentence",
    "Span",
    "SpanAnnotation",
    "Token",
    "bio_to_spans",
    "build_dictionary",
    "crf_nll",
    "evaluate_ad",
    "evaluate_ai",
    "filter_annotation_sentences",
    "find_long_form_candidates",
    "generate_ad_samples",
    "group_documents",
    "index_sentences",
    "ingest_corpus",
    "is_acronym_candidate",
    "is_tree",
    "iter_sentences",
    "levenshtein",
    "load_embeddings",
    "log_partition",
    "make_sentence",
    "mf_predict",
    "normalize_long_forms",
    "pair_spans_nearest",
    "read_ad_dataset",
    "read_ai_dataset",
    "read_annotations",
    "require_tree",
    "rule_pair_baseline",
    "sequence_score",
    "spans_to_bio",
    "split_dataset",
    "subsample_per_long_form",
    "viterbi_decode",
    "write_ad_dataset",
    "write_ai_dataset",
    "write_annotations",
    "write_corpus",
]

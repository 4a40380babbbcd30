"""In-memory document model plus ingestion of parsed corpora and embedding files.

All inputs are pre-tokenized, POS-tagged and (optionally) dependency-parsed;
nothing in this package ever tokenizes or parses raw text.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# Head sentinel for the syntactic root. A head of None means the input file
# carried no parse for that token; rule/candidate operations tolerate that,
# the graph disambiguator does not.
ROOT = -1

CORPUS_FORMATS = ("conllu_like", "json_lines")


class CorpusFormatError(ValueError):
    """An input file violates its declared format or a corpus invariant."""


@dataclass(frozen=True)
class Token:
    text: str
    pos: str
    head: int | None
    index: int


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    doc_id: str
    sent_id: str

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def texts(self) -> list[str]:
        return [t.text for t in self.tokens]

    @property
    def pos_tags(self) -> list[str]:
        return [t.pos for t in self.tokens]

    @property
    def heads(self) -> list[int | None]:
        return [t.head for t in self.tokens]

    @property
    def ref(self) -> tuple[str, str]:
        return (self.doc_id, self.sent_id)


@dataclass(frozen=True)
class Document:
    doc_id: str
    sentences: tuple[Sentence, ...]


def make_sentence(
    texts: list[str],
    pos: list[str],
    heads: list[int | None] | None,
    doc_id: str,
    sent_id: str,
) -> Sentence:
    """Build a validated Sentence from parallel token/POS/head lists."""
    n = len(texts)
    if len(pos) != n:
        raise CorpusFormatError(
            f"sentence {sent_id!r}: {n} tokens but {len(pos)} POS tags"
        )
    if heads is None:
        heads = [None] * n
    if len(heads) != n:
        raise CorpusFormatError(
            f"sentence {sent_id!r}: {n} tokens but {len(heads)} heads"
        )
    tokens = []
    for i, (text, tag, head) in enumerate(zip(texts, pos, heads)):
        if not text:
            raise CorpusFormatError(f"sentence {sent_id!r}: empty token at index {i}")
        if head is not None:
            if head == i:
                raise CorpusFormatError(
                    f"sentence {sent_id!r}: token {i} is its own head"
                )
            if head != ROOT and not 0 <= head < n:
                raise CorpusFormatError(
                    f"sentence {sent_id!r}: head {head} of token {i} out of range"
                )
        tokens.append(Token(text=text, pos=tag, head=head, index=i))
    sentence = Sentence(tokens=tuple(tokens), doc_id=doc_id, sent_id=sent_id)
    _check_acyclic(sentence)
    return sentence


def _check_acyclic(sentence: Sentence) -> None:
    # Follow head links from every token; with head != self, failing to reach
    # ROOT (or an unparsed token) within n steps means a cycle.
    n = len(sentence)
    heads = sentence.heads
    for start in range(n):
        seen = set()
        i = start
        while i != ROOT and heads[i] is not None:
            if i in seen:
                raise CorpusFormatError(
                    f"cyclic head links in sentence {sentence.sent_id!r}"
                )
            seen.add(i)
            i = heads[i]


def is_tree(sentence: Sentence) -> bool:
    """True iff head links form a single tree rooted at exactly one ROOT token."""
    heads = sentence.heads
    if any(h is None for h in heads):
        return False
    if sum(1 for h in heads if h == ROOT) != 1:
        return False
    # Acyclicity was checked at construction, so one root implies a tree.
    return True


def require_tree(sentence: Sentence) -> None:
    if not is_tree(sentence):
        raise CorpusFormatError(
            f"sentence {sentence.sent_id!r} is not a single dependency tree"
        )


# ---------------------------------------------------------------------------
# corpus ingestion


def ingest_corpus(path: str | Path, format: str = "conllu_like") -> list[Document]:
    """Read a parsed corpus file into Documents.

    Formats: "conllu_like" (blank-line separated sentences, per-token lines
    "INDEX\\tFORM\\tPOS\\tHEAD" with 1-based HEAD, 0 = root, "_" = unparsed) or
    "json_lines" (one sentence object per line; see read/write helpers).
    """
    path = Path(path)
    if format == "conllu_like":
        sentences = _read_conllu_like(path)
    elif format == "json_lines":
        sentences = _read_json_lines(path)
    else:
        raise CorpusFormatError(f"unknown corpus format {format!r}")
    return group_documents(sentences)


def group_documents(sentences: list[Sentence]) -> list[Document]:
    """Group consecutive same-doc_id sentences; a doc_id may not reappear."""
    docs: list[Document] = []
    seen: set[str] = set()
    current: list[Sentence] = []
    for sent in sentences:
        if current and sent.doc_id != current[0].doc_id:
            docs.append(Document(current[0].doc_id, tuple(current)))
            current = []
        if not current:
            if sent.doc_id in seen:
                raise CorpusFormatError(
                    f"doc_id {sent.doc_id!r} reappears after other documents"
                )
            seen.add(sent.doc_id)
        current.append(sent)
    if current:
        docs.append(Document(current[0].doc_id, tuple(current)))
    return docs


def iter_sentences(docs: list[Document]):
    for doc in docs:
        yield from doc.sentences


def index_sentences(docs: list[Document]) -> dict[tuple[str, str], Sentence]:
    """Map (doc_id, sent_id) -> Sentence for annotation lookups."""
    return {s.ref: s for s in iter_sentences(docs)}


def _read_conllu_like(path: Path) -> list[Sentence]:
    sentences: list[Sentence] = []
    doc_id = "doc0"  # sticky across sentences until a new "# doc_id =" comment
    sent_id: str | None = None
    texts: list[str] = []
    pos: list[str] = []
    heads: list[int | None] = []
    first_line = 0

    def flush(line_no: int) -> None:
        nonlocal sent_id, texts, pos, heads
        if not texts:
            sent_id = None
            return
        sid = sent_id if sent_id is not None else f"s{len(sentences)}"
        try:
            sentences.append(make_sentence(texts, pos, heads, doc_id, sid))
        except CorpusFormatError as exc:
            raise CorpusFormatError(f"{path}: line {line_no}: {exc}") from None
        sent_id, texts, pos, heads = None, [], [], []

    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                flush(line_no)
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    key, value = key.strip(), value.strip()
                    if key == "doc_id":
                        doc_id = value
                    elif key == "sent_id":
                        sent_id = value
                continue
            if not texts:
                first_line = line_no
            cols = line.split("\t")
            if len(cols) != 4:
                raise CorpusFormatError(
                    f"{path}: line {line_no}: expected 4 tab-separated fields "
                    f"(INDEX, FORM, POS, HEAD), got {len(cols)}"
                )
            idx_s, form, tag, head_s = cols
            try:
                idx = int(idx_s)
            except ValueError:
                raise CorpusFormatError(
                    f"{path}: line {line_no}: INDEX {idx_s!r} is not an integer"
                ) from None
            if idx != len(texts) + 1:
                raise CorpusFormatError(
                    f"{path}: line {line_no}: INDEX {idx} breaks the 1..n order"
                )
            if head_s == "_":
                head: int | None = None
            else:
                try:
                    head_1b = int(head_s)
                except ValueError:
                    raise CorpusFormatError(
                        f"{path}: line {line_no}: HEAD {head_s!r} is not an integer"
                    ) from None
                head = ROOT if head_1b == 0 else head_1b - 1
            texts.append(form)
            pos.append(tag)
            heads.append(head)
        flush(first_line)
    return sentences


def _read_json_lines(path: Path) -> list[Sentence]:
    sentences = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(
                    f"{path}: line {line_no}: invalid JSON ({exc.msg})"
                ) from None
            for key in ("doc_id", "sent_id", "tokens", "pos"):
                if key not in obj:
                    raise CorpusFormatError(
                        f"{path}: line {line_no}: missing field {key!r}"
                    )
            try:
                sentences.append(
                    make_sentence(
                        obj["tokens"],
                        obj["pos"],
                        obj.get("heads"),
                        obj["doc_id"],
                        obj["sent_id"],
                    )
                )
            except CorpusFormatError as exc:
                raise CorpusFormatError(f"{path}: line {line_no}: {exc}") from None
    return sentences


def write_corpus(docs: list[Document], path: str | Path, format: str = "json_lines") -> None:
    """Serialize documents; re-ingesting the output reproduces the object graph."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        if format == "json_lines":
            for sent in iter_sentences(docs):
                fh.write(json.dumps(sentence_to_json(sent)) + "\n")
        elif format == "conllu_like":
            for sent in iter_sentences(docs):
                fh.write(f"# doc_id = {sent.doc_id}\n")
                fh.write(f"# sent_id = {sent.sent_id}\n")
                for tok in sent.tokens:
                    if tok.head is None:
                        head_s = "_"
                    elif tok.head == ROOT:
                        head_s = "0"
                    else:
                        head_s = str(tok.head + 1)
                    fh.write(f"{tok.index + 1}\t{tok.text}\t{tok.pos}\t{head_s}\n")
                fh.write("\n")
        else:
            raise CorpusFormatError(f"unknown corpus format {format!r}")


def sentence_to_json(sent: Sentence) -> dict:
    return {
        "doc_id": sent.doc_id,
        "sent_id": sent.sent_id,
        "tokens": sent.texts,
        "pos": sent.pos_tags,
        "heads": [ROOT if h == ROOT else h for h in sent.heads],
    }


# ---------------------------------------------------------------------------
# embeddings


@dataclass
class EmbeddingTable:
    """Static word vectors; unknown words map to the mean of all stored vectors."""

    dim: int
    vectors: dict[str, np.ndarray]
    unk_vector: np.ndarray

    def lookup(self, word: str) -> np.ndarray:
        return self.vectors.get(word, self.unk_vector)

    def __contains__(self, word: str) -> bool:
        return word in self.vectors


def load_embeddings(path: str | Path, expected_dim: int | None = None) -> EmbeddingTable:
    """Read a whitespace-separated "word v1 ... vd" embedding file."""
    path = Path(path)
    vectors: dict[str, np.ndarray] = {}
    dim = expected_dim
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            parts = raw.split()
            if not parts:
                continue
            word, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
                if dim == 0:
                    raise CorpusFormatError(
                        f"{path}: line {line_no}: no vector components"
                    )
            if len(values) != dim:
                raise CorpusFormatError(
                    f"{path}: line {line_no}: vector length {len(values)} != {dim}"
                )
            try:
                vec = np.array([float(v) for v in values], dtype=np.float64)
            except ValueError:
                raise CorpusFormatError(
                    f"{path}: line {line_no}: non-numeric vector component"
                ) from None
            vectors[word] = vec
    if not vectors:
        raise CorpusFormatError(f"{path}: no embedding vectors found")
    unk = np.mean(np.stack(list(vectors.values())), axis=0)
    return EmbeddingTable(dim=dim, vectors=vectors, unk_vector=unk)

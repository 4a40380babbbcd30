"""BiLSTM-CRF sequence tagger over the five span labels.

The chain CRF scores a label sequence as the sum of per-token emission scores
and pairwise transition scores, with explicit START and STOP states so the
first and last transitions are well defined. Training minimizes the negative
log-likelihood computed by the forward algorithm in log space; decoding uses
Viterbi.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .extraction import BIO_LABELS, SpanAnnotation, bio_to_spans
from .nn import (
    BiLstmStack,
    Linear,
    Parameter,
    ShapeError,
    StaticEmbedder,
    Tensor,
    TrainableEmbedder,
    add,
    adam_step,
    backward,
    concat,
    dropout,
    getitem,
    load_checkpoint,
    logsumexp,
    mul,
    reshape,
    save_checkpoint,
    sub,
    tensor_sum,
    zero_grads,
)
from .validation import DataError, check_fitted, require_pos_tags, require_same_length

NUM_LABELS = len(BIO_LABELS)
START_ID = NUM_LABELS
STOP_ID = NUM_LABELS + 1
TRANSITION_DIM = NUM_LABELS + 2

LABEL_TO_ID = {label: i for i, label in enumerate(BIO_LABELS)}


def masked_transitions(transitions: np.ndarray) -> np.ndarray:
    """Copy of the transition matrix with impossible moves set to -inf.

    Moves into START and out of STOP never occur in any scored path; this
    view makes that explicit for export and inspection. The trainable matrix
    itself stays finite because those entries are simply never read.
    """
    out = np.array(transitions, dtype=np.float64)
    out[:, START_ID] = -np.inf
    out[STOP_ID, :] = -np.inf
    return out


def _check_emissions(emissions: Tensor) -> int:
    if emissions.data.ndim != 2 or emissions.data.shape[1] != NUM_LABELS:
        raise ShapeError(
            f"emissions must be (n, {NUM_LABELS}), got {emissions.data.shape}")
    n = emissions.data.shape[0]
    if n == 0:
        raise ShapeError("emissions must cover at least one token")
    return n


def sequence_score(emissions: Tensor, labels, transitions: Tensor) -> Tensor:
    """Score one label sequence: emissions plus START -> ... -> STOP transitions."""
    n = _check_emissions(emissions)
    labels = np.asarray(labels, dtype=int)
    if labels.shape != (n,):
        raise ShapeError(f"expected {n} labels, got shape {labels.shape}")
    if labels.min() < 0 or labels.max() >= NUM_LABELS:
        raise ShapeError(f"label ids must lie in [0, {NUM_LABELS})")
    path = np.concatenate([[START_ID], labels, [STOP_ID]])
    transition_terms = getitem(transitions, (path[:-1], path[1:]))
    emission_terms = getitem(emissions, (np.arange(n), labels))
    return add(tensor_sum(transition_terms), tensor_sum(emission_terms))


def log_partition(emissions: Tensor, transitions: Tensor) -> Tensor:
    """log Z over all label sequences, by the forward algorithm in log space."""
    n = _check_emissions(emissions)
    start = getitem(transitions, (START_ID, slice(0, NUM_LABELS)))
    block = getitem(transitions, (slice(0, NUM_LABELS), slice(0, NUM_LABELS)))
    stop = getitem(transitions, (slice(0, NUM_LABELS), STOP_ID))
    alpha = add(start, getitem(emissions, 0))
    for j in range(1, n):
        scores = add(add(reshape(alpha, (NUM_LABELS, 1)), block),
                     reshape(getitem(emissions, j), (1, NUM_LABELS)))
        alpha = logsumexp(scores, axis=0)
    return logsumexp(add(alpha, stop))


def crf_nll(emissions: Tensor, gold_labels, transitions: Tensor) -> Tensor:
    """Negative log-likelihood of the gold sequence: log Z - Score(gold)."""
    return sub(log_partition(emissions, transitions),
               sequence_score(emissions, gold_labels, transitions))


def bio_transition_allowed(prev_label: str | None, next_label: str) -> bool:
    """prev_label None means sequence start."""
    if next_label.startswith("I-"):
        kind = next_label[2:]
        return prev_label in (f"B-{kind}", f"I-{kind}")
    return True


def _bio_masks() -> tuple[np.ndarray, np.ndarray]:
    start_ok = np.array([bio_transition_allowed(None, lab) for lab in BIO_LABELS])
    pair_ok = np.array([[bio_transition_allowed(p, q) for q in BIO_LABELS]
                        for p in BIO_LABELS])
    return start_ok, pair_ok


def viterbi_decode(emissions, transitions, constrained: bool = False) -> list[int]:
    """Best label sequence; ties break toward the smallest label index.

    constrained=True masks label bigrams that are invalid BIO (an I- tag not
    continuing a same-kind span) to -inf; the default decodes the raw scores.
    """
    v = np.asarray(getattr(emissions, "data", emissions), dtype=np.float64)
    t = np.asarray(getattr(transitions, "data", transitions), dtype=np.float64)
    if v.ndim != 2 or v.shape[1] != NUM_LABELS or v.shape[0] == 0:
        raise ShapeError(f"emissions must be (n, {NUM_LABELS}), got {v.shape}")
    n = v.shape[0]
    start = t[START_ID, :NUM_LABELS].copy()
    block = t[:NUM_LABELS, :NUM_LABELS].copy()
    stop = t[:NUM_LABELS, STOP_ID]
    if constrained:
        start_ok, pair_ok = _bio_masks()
        start[~start_ok] = -np.inf
        block[~pair_ok] = -np.inf
    delta = start + v[0]
    backptr = np.zeros((n, NUM_LABELS), dtype=int)
    for j in range(1, n):
        scores = delta[:, None] + block
        backptr[j] = scores.argmax(axis=0)  # first max = smallest previous label
        delta = scores[backptr[j], np.arange(NUM_LABELS)] + v[j]
    best = int((delta + stop).argmax())
    path = [best]
    for j in range(n - 1, 0, -1):
        best = int(backptr[j][best])
        path.append(best)
    path.reverse()
    return path


class AcronymTagger(BaseEstimator):
    """Sequence tagger: word + POS embeddings -> BiLSTM -> emission scores -> CRF.

    fit(X, y) takes sentences carrying POS tags and per-token label strings
    from BIO_LABELS. predict(X) returns label strings per sentence;
    predict_annotations(X) decodes them into span annotations.

    embeddings: a loaded embedding table to use frozen, or None to learn word
    vectors of size embed_dim over the training vocabulary.
    """

    def __init__(self, embeddings=None, embed_dim: int = 50,
                 pos_embed_dim: int = 25, hidden_dim: int = 200,
                 num_layers: int = 2, dropout: float = 0.2,
                 batch_size: int = 50, lr: float = 1e-3, epochs: int = 5,
                 seed: int = 0, constrained_decoding: bool = False,
                 stop_train_accuracy: float | None = None):
        self.embeddings = embeddings
        self.embed_dim = embed_dim
        self.pos_embed_dim = pos_embed_dim
        self.hidden_dim = hidden_dim
        self.num_layers = num_layers
        self.dropout = dropout
        self.batch_size = batch_size
        self.lr = lr
        self.epochs = epochs
        self.seed = seed
        self.constrained_decoding = constrained_decoding
        self.stop_train_accuracy = stop_train_accuracy

    def _check_config(self) -> None:
        for name in ("embed_dim", "pos_embed_dim", "hidden_dim", "num_layers",
                     "batch_size", "epochs"):
            if getattr(self, name) < 1:
                raise DataError(f"{name} must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise DataError("dropout must lie in [0, 1)")

    def fit(self, X, y) -> "AcronymTagger":
        self._check_config()
        require_same_length(X, y, "sentences vs label sequences")
        if len(X) == 0:
            raise DataError("empty dataset")
        gold: list[np.ndarray] = []
        for sentence, labels in zip(X, y):
            require_pos_tags(sentence)
            if len(labels) != len(sentence):
                raise DataError(
                    f"sentence {sentence.ref} has {len(sentence)} tokens "
                    f"but {len(labels)} labels")
            try:
                gold.append(np.array([LABEL_TO_ID[lab] for lab in labels]))
            except KeyError as exc:
                raise DataError(f"unknown label {exc.args[0]!r} in sentence "
                                f"{sentence.ref}") from None
        rng = np.random.default_rng(self.seed)
        self._build(
            word_vocab=sorted({tok for s in X for tok in s.texts}),
            pos_vocab=sorted({tag for s in X for tag in s.pos_tags}),
            rng=rng,
        )
        self.training_loss_: list[float] = []
        self.n_iter_ = 0
        for _ in range(self.epochs):
            order = rng.permutation(len(X))
            epoch_loss = 0.0
            for lo in range(0, len(order), self.batch_size):
                batch = order[lo:lo + self.batch_size]
                zero_grads(self.params_)
                total = None
                for i in batch:
                    loss = crf_nll(
                        self._emissions(X[i], training=True, rng=rng),
                        gold[i], self.transitions_)
                    total = loss if total is None else add(total, loss)
                mean_loss = mul(total, 1.0 / len(batch))
                backward(mean_loss)
                adam_step(self.params_, lr=self.lr)
                epoch_loss += mean_loss.item() * len(batch)
            self.training_loss_.append(epoch_loss / len(X))
            self.n_iter_ += 1
            if self.stop_train_accuracy is not None:
                if self._token_accuracy(X, gold) >= self.stop_train_accuracy:
                    break
        return self

    def _build(self, word_vocab: list[str], pos_vocab: list[str],
               rng: np.random.Generator) -> None:
        if self.embeddings is not None:
            self.word_embedder_ = StaticEmbedder.from_table(self.embeddings)
        else:
            self.word_embedder_ = TrainableEmbedder(word_vocab, self.embed_dim,
                                                    rng, name="word")
        self.pos_embedder_ = TrainableEmbedder(pos_vocab, self.pos_embed_dim,
                                               rng, name="pos")
        in_dim = self.word_embedder_.dim + self.pos_embedder_.dim
        self.bilstm_ = BiLstmStack(rng, in_dim, self.hidden_dim,
                                   self.num_layers, name="bilstm")
        self.projection_ = Linear(rng, 2 * self.hidden_dim, NUM_LABELS,
                                  bias=False, name="emission")
        self.transitions_ = Parameter(np.zeros((TRANSITION_DIM, TRANSITION_DIM)),
                                      "crf.transitions")
        self.params_: list[Parameter] = (
            self.word_embedder_.parameters() + self.pos_embedder_.parameters()
            + self.bilstm_.parameters() + self.projection_.parameters()
            + [self.transitions_])

    def _emissions(self, sentence, training: bool = False,
                   rng: np.random.Generator | None = None) -> Tensor:
        require_pos_tags(sentence)
        embedded = concat([self.word_embedder_.lookup(list(sentence.texts)),
                           self.pos_embedder_.lookup(list(sentence.pos_tags))],
                          axis=1)
        embedded = dropout(embedded, self.dropout, rng, training)
        hidden = self.bilstm_(embedded, dropout_rate=self.dropout, rng=rng,
                              training=training)
        return self.projection_(hidden)

    def emission_scores(self, sentence) -> np.ndarray:
        check_fitted(self, "transitions_")
        return self._emissions(sentence).data

    def _token_accuracy(self, X, gold: list[np.ndarray]) -> float:
        correct = total = 0
        for sentence, labels in zip(X, gold):
            decoded = viterbi_decode(self._emissions(sentence),
                                     self.transitions_,
                                     constrained=self.constrained_decoding)
            correct += int((np.array(decoded) == labels).sum())
            total += len(labels)
        return correct / total

    def predict(self, X) -> list[list[str]]:
        check_fitted(self, "transitions_")
        out = []
        for sentence in X:
            ids = viterbi_decode(self._emissions(sentence), self.transitions_,
                                 constrained=self.constrained_decoding)
            out.append([BIO_LABELS[i] for i in ids])
        return out

    def predict_annotations(self, X) -> list[SpanAnnotation]:
        # repair=True: unconstrained decoding may emit I- tags without a B-.
        return [bio_to_spans(labels, sent_ref=sentence.ref, repair=True)
                for sentence, labels in zip(X, self.predict(X))]

    # persistence -----------------------------------------------------------

    def save(self, path) -> None:
        check_fitted(self, "transitions_")
        tensors = {p.name: p.data for p in self.params_}
        config = {
            "kind": "sequence-tagger",
            "pos_embed_dim": self.pos_embed_dim,
            "hidden_dim": self.hidden_dim,
            "num_layers": self.num_layers,
            "dropout": self.dropout,
            "batch_size": self.batch_size,
            "lr": self.lr,
            "epochs": self.epochs,
            "seed": self.seed,
            "constrained_decoding": self.constrained_decoding,
            "pos_vocab": self.pos_embedder_.itos,
        }
        if isinstance(self.word_embedder_, StaticEmbedder):
            config["word_mode"] = "static"
            vocab = sorted(self.word_embedder_.vectors)
            config["word_vocab"] = vocab
            if vocab:
                tensors["word.matrix"] = np.stack(
                    [self.word_embedder_.vectors[w] for w in vocab])
            tensors["word.unk"] = self.word_embedder_.unk_vector
            config["embed_dim"] = self.word_embedder_.dim
        else:
            config["word_mode"] = "trainable"
            config["word_vocab"] = self.word_embedder_.itos
            config["embed_dim"] = self.word_embedder_.dim
        save_checkpoint(path, tensors, config)

    @classmethod
    def load(cls, path) -> "AcronymTagger":
        tensors, config = load_checkpoint(path)
        if config.get("kind") != "sequence-tagger":
            raise DataError(f"{path}: not a sequence-tagger checkpoint")
        model = cls(
            embeddings=None,
            embed_dim=config["embed_dim"],
            pos_embed_dim=config["pos_embed_dim"],
            hidden_dim=config["hidden_dim"],
            num_layers=config["num_layers"],
            dropout=config["dropout"],
            batch_size=config["batch_size"],
            lr=config["lr"],
            epochs=config["epochs"],
            seed=config["seed"],
            constrained_decoding=config["constrained_decoding"],
        )
        if config["word_mode"] == "static":
            vocab = config["word_vocab"]
            matrix = tensors.get("word.matrix")
            vectors = {w: matrix[i] for i, w in enumerate(vocab)} if vocab else {}
            model.word_embedder_ = StaticEmbedder(vectors, config["embed_dim"],
                                                  tensors["word.unk"])
        else:
            model.word_embedder_ = TrainableEmbedder.from_matrix(
                config["word_vocab"], tensors["word.matrix"], name="word")
        model.pos_embedder_ = TrainableEmbedder.from_matrix(
            config["pos_vocab"], tensors["pos.matrix"], name="pos")
        rng = np.random.default_rng(0)
        in_dim = config["embed_dim"] + config["pos_embed_dim"]
        model.bilstm_ = BiLstmStack(rng, in_dim, config["hidden_dim"],
                                    config["num_layers"], name="bilstm")
        model.projection_ = Linear(rng, 2 * config["hidden_dim"], NUM_LABELS,
                                   bias=False, name="emission")
        model.transitions_ = Parameter(
            np.zeros((TRANSITION_DIM, TRANSITION_DIM)), "crf.transitions")
        model.params_ = (model.word_embedder_.parameters()
                         + model.pos_embedder_.parameters()
                         + model.bilstm_.parameters()
                         + model.projection_.parameters()
                         + [model.transitions_])
        for p in model.params_:
            stored = tensors[p.name]
            if stored.shape != p.data.shape:
                raise DataError(f"{path}: tensor {p.name} has shape "
                                f"{stored.shape}, expected {p.data.shape}")
            p.data = stored
        model.training_loss_ = []
        model.n_iter_ = 0
        return model

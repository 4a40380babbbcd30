"""Long-form disambiguation models.

GraphDisambiguator encodes the sentence with a BiLSTM, encodes syntactic
context by running graph convolutions over the undirected, self-looped
dependency adjacency, and classifies the occurrence over the full long-form
inventory from the concatenation [h_p : h^s_p : maxpool(H) : maxpool(H^s)],
where p is the acronym position. MostFrequentBaseline predicts each acronym's
most frequent training long form.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .corpus import require_tree
from .dictionary import ADSample, AcronymDictionary
from .nn import (
    AdjacencyMatrix,
    BiLstmStack,
    GcnStack,
    Linear,
    Parameter,
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
    max_pool_time,
    mul,
    nll_loss,
    relu,
    save_checkpoint,
    zero_grads,
)
from .validation import DataError, check_fitted, require_pos_tags, require_same_length


@dataclass(frozen=True)
class LongFormInventory:
    """Dense id space over long forms, candidate lists, and training counts."""

    forms: tuple[str, ...]
    per_acronym: dict[str, tuple[int, ...]] = field(default_factory=dict)
    train_freq: tuple[int, ...] = ()

    def __post_init__(self):
        if len(set(self.forms)) != len(self.forms):
            raise DataError("inventory long forms must be distinct")
        if self.train_freq and len(self.train_freq) != len(self.forms):
            raise DataError("train_freq must have one count per long form")
        for acronym, ids in self.per_acronym.items():
            if not ids:
                raise DataError(f"acronym {acronym!r} has an empty candidate list")
            for i in ids:
                if not 0 <= i < len(self.forms):
                    raise DataError(f"acronym {acronym!r} lists unknown id {i}")

    def __len__(self) -> int:
        return len(self.forms)

    @property
    def id_of(self) -> dict[str, int]:
        return {form: i for i, form in enumerate(self.forms)}

    def candidates(self, acronym: str) -> tuple[int, ...]:
        try:
            return self.per_acronym[acronym]
        except KeyError:
            raise DataError(f"acronym {acronym!r} is not in the inventory") from None

    @classmethod
    def build(cls, samples: list[ADSample],
              dictionary: AcronymDictionary | None = None) -> "LongFormInventory":
        """Inventory from a training split, optionally shaped by a dictionary.

        With a dictionary, ids cover its canonical long forms and candidate
        lists follow its entries; a training gold outside them is an error.
        Without one, ids and candidate lists come from training co-occurrence.
        """
        if dictionary is not None:
            forms = tuple(dictionary.all_long_forms())
            ids = {form: i for i, form in enumerate(forms)}
            per_acronym = {
                acronym: tuple(sorted(ids[form] for form, _ in entry))
                for acronym, entry in dictionary.entries.items()
            }
        else:
            seen: dict[str, set[str]] = {}
            for sample in samples:
                if sample.gold_long_form is None:
                    raise DataError(
                        f"sample at {sample.sentence.ref} has no gold long form")
                seen.setdefault(sample.acronym, set()).add(sample.gold_long_form)
            forms = tuple(sorted({f for group in seen.values() for f in group}))
            ids = {form: i for i, form in enumerate(forms)}
            per_acronym = {acronym: tuple(sorted(ids[f] for f in group))
                           for acronym, group in sorted(seen.items())}
        freq = [0] * len(forms)
        for sample in samples:
            if sample.gold_long_form is None:
                raise DataError(
                    f"sample at {sample.sentence.ref} has no gold long form")
            if sample.gold_long_form not in ids:
                raise DataError(
                    f"gold long form {sample.gold_long_form!r} at "
                    f"{sample.sentence.ref} is not in the inventory")
            freq[ids[sample.gold_long_form]] += 1
        return cls(forms, per_acronym, tuple(freq))

    def to_dict(self) -> dict:
        return {
            "forms": list(self.forms),
            "per_acronym": {a: list(ids) for a, ids in sorted(self.per_acronym.items())},
            "train_freq": list(self.train_freq),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "LongFormInventory":
        return cls(tuple(payload["forms"]),
                   {a: tuple(ids) for a, ids in payload["per_acronym"].items()},
                   tuple(payload["train_freq"]))


def mf_predict(inventory: LongFormInventory, acronym: str) -> int:
    """Candidate id with the highest training frequency; ties to smaller id."""
    best_id, best_freq = None, -1
    for candidate in sorted(inventory.candidates(acronym)):
        freq = inventory.train_freq[candidate] if inventory.train_freq else 0
        if freq > best_freq:
            best_id, best_freq = candidate, freq
    return best_id


MODES = ("masked", "unmasked")


class GraphDisambiguator(BaseEstimator):
    """BiLSTM + dependency-graph-convolution classifier over long forms.

    fit(X, y=None) takes ADSample values; gold long forms come from y when
    given, else from each sample. With gcn_layers=0 the graph side is dropped
    and classification uses [h_p : maxpool(H)] only.

    dictionary: optional AcronymDictionary fixing the id space and candidate
    lists; embeddings: frozen table or None for learned word vectors.
    """

    def __init__(self, dictionary: AcronymDictionary | None = None,
                 embeddings=None, embed_dim: int = 50, pos_embed_dim: int = 25,
                 hidden_dim: int = 200, num_layers: int = 2,
                 gcn_layers: int = 2, dropout: float = 0.2,
                 batch_size: int = 50, lr: float = 1e-3, epochs: int = 5,
                 seed: int = 0, masked_inference: bool = True,
                 patience: int | None = None,
                 stop_train_accuracy: float | None = None):
        self.dictionary = dictionary
        self.embeddings = embeddings
        self.embed_dim = embed_dim
        self.pos_embed_dim = pos_embed_dim
        self.hidden_dim = hidden_dim
        self.num_layers = num_layers
        self.gcn_layers = gcn_layers
        self.dropout = dropout
        self.batch_size = batch_size
        self.lr = lr
        self.epochs = epochs
        self.seed = seed
        self.masked_inference = masked_inference
        self.patience = patience
        self.stop_train_accuracy = stop_train_accuracy

    def _check_config(self) -> None:
        for name in ("embed_dim", "pos_embed_dim", "hidden_dim", "num_layers",
                     "batch_size", "epochs"):
            if getattr(self, name) < 1:
                raise DataError(f"{name} must be positive")
        if self.gcn_layers < 0:
            raise DataError("gcn_layers must be non-negative")
        if not 0.0 <= self.dropout < 1.0:
            raise DataError("dropout must lie in [0, 1)")

    # encoding --------------------------------------------------------------

    def _encode(self, sample: ADSample, training: bool = False,
                rng: np.random.Generator | None = None,
                pad_to: int | None = None) -> tuple[Tensor, Tensor | None]:
        """Sentence matrix H and, when graph layers are on, context matrix H^s.

        pad_to appends masked positions whose states carry through the BiLSTM
        and are sliced away before pooling, so results match the unpadded run.
        """
        sentence = sample.sentence
        require_pos_tags(sentence)
        n = len(sentence)
        words = list(sentence.texts)
        tags = list(sentence.pos_tags)
        mask = None
        if pad_to is not None and pad_to > n:
            words += [""] * (pad_to - n)
            tags += [""] * (pad_to - n)
            mask = np.array([1] * n + [0] * (pad_to - n))
        embedded = concat([self.word_embedder_.lookup(words),
                           self.pos_embedder_.lookup(tags)], axis=1)
        embedded = dropout(embedded, self.dropout, rng, training)
        hidden = self.bilstm_(embedded, mask=mask, dropout_rate=self.dropout,
                              rng=rng, training=training)
        if mask is not None:
            hidden = getitem(hidden, slice(0, n))
        if self.gcn_layers == 0:
            return hidden, None
        require_tree(sentence)
        adjacency = AdjacencyMatrix.from_heads(sentence.heads)
        context = self.gcn_(hidden, adjacency, dropout_rate=self.dropout,
                            rng=rng, training=training)
        return hidden, context

    def logits(self, sample: ADSample, training: bool = False,
               rng: np.random.Generator | None = None,
               pad_to: int | None = None) -> Tensor:
        check_fitted(self, "inventory_")
        p = sample.acronym_index
        hidden, context = self._encode(sample, training, rng, pad_to)
        pieces = [getitem(hidden, p)]
        if context is not None:
            pieces.append(getitem(context, p))
        pieces.append(max_pool_time(hidden))
        if context is not None:
            pieces.append(max_pool_time(context))
        features = concat(pieces, axis=0)
        return self.head_out_(relu(self.head_hidden_(features)))

    def sample_loss(self, sample: ADSample, gold_id: int,
                    training: bool = False,
                    rng: np.random.Generator | None = None) -> Tensor:
        """Negative log-likelihood of the gold id over the full inventory."""
        return nll_loss(self.logits(sample, training, rng), gold_id)

    # training ---------------------------------------------------------------

    def fit(self, X, y=None) -> "GraphDisambiguator":
        self._check_config()
        if len(X) == 0:
            raise DataError("empty dataset")
        if y is not None:
            require_same_length(X, y, "samples vs gold long forms")
            golds = list(y)
        else:
            golds = [s.gold_long_form for s in X]
        labeled = [ADSample(s.sentence, s.acronym_index, s.acronym, g)
                   for s, g in zip(X, golds)]
        self.inventory_ = LongFormInventory.build(labeled, self.dictionary)
        id_of = self.inventory_.id_of
        gold_ids = np.array([id_of[g] for g in golds])
        rng = np.random.default_rng(self.seed)
        self._build(
            word_vocab=sorted({t for s in X for t in s.sentence.texts}),
            pos_vocab=sorted({t for s in X for t in s.sentence.pos_tags}),
            rng=rng,
        )
        self.training_loss_: list[float] = []
        self.n_iter_ = 0
        best_loss = np.inf
        stale = 0
        for _ in range(self.epochs):
            order = rng.permutation(len(X))
            epoch_loss = 0.0
            for lo in range(0, len(order), self.batch_size):
                batch = order[lo:lo + self.batch_size]
                zero_grads(self.params_)
                total = None
                for i in batch:
                    loss = self.sample_loss(X[i], int(gold_ids[i]),
                                            training=True, rng=rng)
                    total = loss if total is None else add(total, loss)
                mean_loss = mul(total, 1.0 / len(batch))
                backward(mean_loss)
                adam_step(self.params_, lr=self.lr)
                epoch_loss += mean_loss.item() * len(batch)
            epoch_loss /= len(X)
            self.training_loss_.append(epoch_loss)
            self.n_iter_ += 1
            if self.stop_train_accuracy is not None:
                preds = np.array([self._predict_sample(s)[0] for s in X])
                if (preds == gold_ids).mean() >= self.stop_train_accuracy:
                    break
            if self.patience is not None:
                if epoch_loss < best_loss - 1e-12:
                    best_loss = epoch_loss
                    stale = 0
                else:
                    stale += 1
                    if stale > self.patience:
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
        sentence_dim = 2 * self.hidden_dim
        self.gcn_ = GcnStack(rng, sentence_dim, self.hidden_dim,
                             self.gcn_layers, name="gcn")
        feature_dim = 2 * sentence_dim
        if self.gcn_layers > 0:
            feature_dim += 2 * self.gcn_.out_dim
        self.head_hidden_ = Linear(rng, feature_dim, self.hidden_dim,
                                   bias=True, name="head.hidden")
        self.head_out_ = Linear(rng, self.hidden_dim, len(self.inventory_),
                                bias=True, name="head.out")
        self.params_: list[Parameter] = (
            self.word_embedder_.parameters() + self.pos_embedder_.parameters()
            + self.bilstm_.parameters() + self.gcn_.parameters()
            + self.head_hidden_.parameters() + self.head_out_.parameters())

    # prediction -------------------------------------------------------------

    def _predict_sample(self, sample: ADSample,
                        mode: str | None = None) -> tuple[int, np.ndarray]:
        mode = (("masked" if self.masked_inference else "unmasked")
                if mode is None else mode)
        if mode not in MODES:
            raise DataError(f"mode must be one of {MODES}, got {mode!r}")
        scores = self.logits(sample).data
        if mode == "masked":
            candidates = sorted(self.inventory_.candidates(sample.acronym))
            best = candidates[int(np.argmax(scores[candidates]))]
        else:
            best = int(np.argmax(scores))  # first max = smallest id
        return best, scores

    def predict_ids(self, X, mode: str | None = None) -> list[int]:
        check_fitted(self, "inventory_")
        return [self._predict_sample(s, mode)[0] for s in X]

    def predict(self, X, mode: str | None = None) -> list[str]:
        return [self.inventory_.forms[i] for i in self.predict_ids(X, mode)]

    def predict_scores(self, X, mode: str | None = None) -> list[tuple[int, np.ndarray]]:
        check_fitted(self, "inventory_")
        return [self._predict_sample(s, mode) for s in X]

    # persistence -------------------------------------------------------------

    def save(self, path) -> None:
        check_fitted(self, "inventory_")
        tensors = {p.name: p.data for p in self.params_}
        config = {
            "kind": "graph-disambiguator",
            "pos_embed_dim": self.pos_embed_dim,
            "hidden_dim": self.hidden_dim,
            "num_layers": self.num_layers,
            "gcn_layers": self.gcn_layers,
            "dropout": self.dropout,
            "batch_size": self.batch_size,
            "lr": self.lr,
            "epochs": self.epochs,
            "seed": self.seed,
            "masked_inference": self.masked_inference,
            "pos_vocab": self.pos_embedder_.itos,
            "inventory": self.inventory_.to_dict(),
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
    def load(cls, path) -> "GraphDisambiguator":
        tensors, config = load_checkpoint(path)
        if config.get("kind") != "graph-disambiguator":
            raise DataError(f"{path}: not a graph-disambiguator checkpoint")
        model = cls(
            embed_dim=config["embed_dim"],
            pos_embed_dim=config["pos_embed_dim"],
            hidden_dim=config["hidden_dim"],
            num_layers=config["num_layers"],
            gcn_layers=config["gcn_layers"],
            dropout=config["dropout"],
            batch_size=config["batch_size"],
            lr=config["lr"],
            epochs=config["epochs"],
            seed=config["seed"],
            masked_inference=config["masked_inference"],
        )
        model.inventory_ = LongFormInventory.from_dict(config["inventory"])
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
        sentence_dim = 2 * config["hidden_dim"]
        model.gcn_ = GcnStack(rng, sentence_dim, config["hidden_dim"],
                              config["gcn_layers"], name="gcn")
        feature_dim = 2 * sentence_dim
        if config["gcn_layers"] > 0:
            feature_dim += 2 * model.gcn_.out_dim
        model.head_hidden_ = Linear(rng, feature_dim, config["hidden_dim"],
                                    bias=True, name="head.hidden")
        model.head_out_ = Linear(rng, config["hidden_dim"],
                                 len(model.inventory_), bias=True,
                                 name="head.out")
        model.params_ = (model.word_embedder_.parameters()
                         + model.pos_embedder_.parameters()
                         + model.bilstm_.parameters() + model.gcn_.parameters()
                         + model.head_hidden_.parameters()
                         + model.head_out_.parameters())
        for p in model.params_:
            stored = tensors[p.name]
            if stored.shape != p.data.shape:
                raise DataError(f"{path}: tensor {p.name} has shape "
                                f"{stored.shape}, expected {p.data.shape}")
            p.data = stored
        model.training_loss_ = []
        model.n_iter_ = 0
        return model


class MostFrequentBaseline(BaseEstimator):
    """Predicts each acronym's most frequent training long form; ties to smaller id."""

    def __init__(self, dictionary: AcronymDictionary | None = None):
        self.dictionary = dictionary

    def fit(self, X, y=None) -> "MostFrequentBaseline":
        if len(X) == 0:
            raise DataError("empty dataset")
        if y is not None:
            require_same_length(X, y, "samples vs gold long forms")
            X = [ADSample(s.sentence, s.acronym_index, s.acronym, g)
                 for s, g in zip(X, y)]
        self.inventory_ = LongFormInventory.build(list(X), self.dictionary)
        return self

    def predict_ids(self, X) -> list[int]:
        check_fitted(self, "inventory_")
        return [mf_predict(self.inventory_, s.acronym) for s in X]

    def predict(self, X) -> list[str]:
        return [self.inventory_.forms[i] for i in self.predict_ids(X)]

    def save(self, path) -> None:
        check_fitted(self, "inventory_")
        payload = {"kind": "most-frequent", "inventory": self.inventory_.to_dict()}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "MostFrequentBaseline":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("kind") != "most-frequent":
            raise DataError(f"{path}: not a most-frequent model file")
        model = cls()
        model.inventory_ = LongFormInventory.from_dict(payload["inventory"])
        return model

"""Layers shared by the sequence tagger and the disambiguator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import (
    Parameter,
    ShapeError,
    Tensor,
    add,
    concat,
    constant,
    dropout,
    getitem,
    matmul,
    mul,
    relu,
    sigmoid,
    stack_rows,
    tanh,
)

ROOT = -1


def glorot_uniform(rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
    fan_in, fan_out = shape
    r = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-r, r, size=shape)


class Linear:
    """Affine map x @ W + b. Bias optional."""

    def __init__(self, rng: np.random.Generator, in_dim: int, out_dim: int,
                 bias: bool = True, name: str = "linear"):
        self.weight = Parameter(glorot_uniform(rng, (in_dim, out_dim)), f"{name}.weight")
        self.bias = Parameter(np.zeros(out_dim), f"{name}.bias") if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        out = matmul(x, self.weight)
        if self.bias is not None:
            out = add(out, self.bias)
        return out

    def parameters(self) -> list[Parameter]:
        return [self.weight] + ([self.bias] if self.bias is not None else [])


class LstmParams:
    """One direction of an LSTM layer.

    Gates are packed in i, f, g, o order along the last axis; the forget-gate
    bias starts at 1.
    """

    def __init__(self, rng: np.random.Generator, in_dim: int, hidden_dim: int,
                 name: str = "lstm"):
        h = hidden_dim
        self.hidden_dim = h
        self.w_input = Parameter(glorot_uniform(rng, (in_dim, 4 * h)), f"{name}.w_input")
        self.w_hidden = Parameter(glorot_uniform(rng, (h, 4 * h)), f"{name}.w_hidden")
        bias = np.zeros(4 * h)
        bias[h:2 * h] = 1.0
        self.bias = Parameter(bias, f"{name}.bias")

    def parameters(self) -> list[Parameter]:
        return [self.w_input, self.w_hidden, self.bias]


def lstm_forward(x: Tensor, params: LstmParams, reverse: bool = False,
                 mask: np.ndarray | None = None) -> Tensor:
    """Run one LSTM direction over a (n, d) sequence, returning (n, H) states.

    mask marks real positions with 1; at masked positions the state carries
    through unchanged, so padded runs match their unpadded counterparts.
    """
    if x.data.ndim != 2:
        raise ShapeError(f"lstm_forward expects a (n, d) input, got {x.data.shape}")
    n = x.data.shape[0]
    h_dim = params.hidden_dim
    projected = add(matmul(x, params.w_input), params.bias)
    h = constant(np.zeros(h_dim))
    c = constant(np.zeros(h_dim))
    outputs: list[Tensor | None] = [None] * n
    order = range(n - 1, -1, -1) if reverse else range(n)
    for t in order:
        if mask is not None and not mask[t]:
            outputs[t] = h
            continue
        gates = add(getitem(projected, t), matmul(h, params.w_hidden))
        i_gate = sigmoid(getitem(gates, slice(0, h_dim)))
        f_gate = sigmoid(getitem(gates, slice(h_dim, 2 * h_dim)))
        g_gate = tanh(getitem(gates, slice(2 * h_dim, 3 * h_dim)))
        o_gate = sigmoid(getitem(gates, slice(3 * h_dim, 4 * h_dim)))
        c = add(mul(f_gate, c), mul(i_gate, g_gate))
        h = mul(o_gate, tanh(c))
        outputs[t] = h
    return stack_rows(outputs)


def bilstm(x: Tensor, forward_params: LstmParams, backward_params: LstmParams,
           mask: np.ndarray | None = None) -> Tensor:
    """Concatenate forward and backward LSTM states: (n, 2H)."""
    fwd = lstm_forward(x, forward_params, reverse=False, mask=mask)
    bwd = lstm_forward(x, backward_params, reverse=True, mask=mask)
    return concat([fwd, bwd], axis=1)


class BiLstmStack:
    def __init__(self, rng: np.random.Generator, in_dim: int, hidden_dim: int,
                 num_layers: int, name: str = "bilstm"):
        self.layers: list[tuple[LstmParams, LstmParams]] = []
        dim = in_dim
        for k in range(num_layers):
            fwd = LstmParams(rng, dim, hidden_dim, f"{name}.{k}.fwd")
            bwd = LstmParams(rng, dim, hidden_dim, f"{name}.{k}.bwd")
            self.layers.append((fwd, bwd))
            dim = 2 * hidden_dim
        self.out_dim = dim

    def __call__(self, x: Tensor, mask: np.ndarray | None = None,
                 dropout_rate: float = 0.0, rng: np.random.Generator | None = None,
                 training: bool = False) -> Tensor:
        h = x
        for fwd, bwd in self.layers:
            h = bilstm(h, fwd, bwd, mask=mask)
            h = dropout(h, dropout_rate, rng, training)
        return h

    def parameters(self) -> list[Parameter]:
        out: list[Parameter] = []
        for fwd, bwd in self.layers:
            out.extend(fwd.parameters())
            out.extend(bwd.parameters())
        return out


@dataclass(frozen=True)
class AdjacencyMatrix:
    """Undirected adjacency with self loops, as a boolean (n, n) matrix."""

    edges: np.ndarray

    def __post_init__(self):
        e = self.edges
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ShapeError(f"adjacency must be square, got {e.shape}")
        if e.dtype != np.bool_:
            raise ShapeError("adjacency entries must be boolean")
        if not np.array_equal(e, e.T):
            raise ValueError("adjacency must be symmetric")
        if not e.diagonal().all():
            raise ValueError("adjacency must include self loops")

    @property
    def n(self) -> int:
        return self.edges.shape[0]

    @classmethod
    def from_heads(cls, heads) -> "AdjacencyMatrix":
        n = len(heads)
        edges = np.eye(n, dtype=bool)
        for i, head in enumerate(heads):
            if head is None or head == ROOT:
                continue
            if not 0 <= head < n:
                raise ValueError(f"head {head} out of range for {n} tokens")
            edges[i, head] = True
            edges[head, i] = True
        return cls(edges)

    @classmethod
    def from_edges(cls, n: int, pairs) -> "AdjacencyMatrix":
        edges = np.eye(n, dtype=bool)
        for a, b in pairs:
            edges[a, b] = True
            edges[b, a] = True
        return cls(edges)

    def normalized(self) -> np.ndarray:
        """Row-normalized float matrix: row i sums node i's neighborhood to 1."""
        degrees = self.edges.sum(axis=1, dtype=np.float64)
        return self.edges.astype(np.float64) / degrees[:, None]


def gcn_layer(h: Tensor, adjacency: AdjacencyMatrix, weight: Tensor,
              activation: str = "relu") -> Tensor:
    """One graph convolution: act(normalized_adjacency @ h @ weight)."""
    if h.data.shape[0] != adjacency.n:
        raise ShapeError(
            f"node count mismatch: features {h.data.shape} vs adjacency {adjacency.n}")
    aggregated = matmul(constant(adjacency.normalized()), h)
    out = matmul(aggregated, weight)
    if activation == "relu":
        return relu(out)
    if activation == "identity":
        return out
    raise ValueError(f"unknown activation {activation!r}")


class GcnStack:
    """Stacked graph convolutions, all ReLU, no biases."""

    def __init__(self, rng: np.random.Generator, in_dim: int, hidden_dim: int,
                 num_layers: int, name: str = "gcn"):
        self.weights: list[Parameter] = []
        dim = in_dim
        for k in range(num_layers):
            self.weights.append(
                Parameter(glorot_uniform(rng, (dim, hidden_dim)), f"{name}.{k}.weight"))
            dim = hidden_dim
        self.out_dim = dim

    def __call__(self, h: Tensor, adjacency: AdjacencyMatrix,
                 dropout_rate: float = 0.0, rng: np.random.Generator | None = None,
                 training: bool = False) -> Tensor:
        for weight in self.weights:
            h = gcn_layer(h, adjacency, weight)
            h = dropout(h, dropout_rate, rng, training)
        return h

    def parameters(self) -> list[Parameter]:
        return list(self.weights)


class StaticEmbedder:
    """Frozen pretrained vectors; lookups are constants in the graph."""

    def __init__(self, vectors: dict[str, np.ndarray], dim: int,
                 unk_vector: np.ndarray):
        self.dim = dim
        self.vectors = vectors
        self.unk_vector = np.asarray(unk_vector, dtype=np.float64)

    @classmethod
    def from_table(cls, table) -> "StaticEmbedder":
        return cls(dict(table.vectors), table.dim, table.unk_vector)

    def lookup(self, words: list[str]) -> Tensor:
        rows = [self.vectors.get(w, self.unk_vector) for w in words]
        return constant(np.stack(rows, axis=0))

    def parameters(self) -> list[Parameter]:
        return []


UNK_TOKEN = "<unk>"


class TrainableEmbedder:
    """Embedding matrix over a closed vocabulary; index 0 is the unknown token."""

    def __init__(self, vocab: list[str], dim: int, rng: np.random.Generator,
                 name: str = "embedding"):
        if vocab and vocab[0] == UNK_TOKEN:
            vocab = vocab[1:]
        self.itos = [UNK_TOKEN] + sorted(set(vocab) - {UNK_TOKEN})
        self.stoi = {w: i for i, w in enumerate(self.itos)}
        self.dim = dim
        self.matrix = Parameter(glorot_uniform(rng, (len(self.itos), dim)),
                                f"{name}.matrix")

    @classmethod
    def from_matrix(cls, itos: list[str], matrix: np.ndarray,
                    name: str = "embedding") -> "TrainableEmbedder":
        if not itos or itos[0] != UNK_TOKEN:
            raise ValueError(f"vocabulary must start with {UNK_TOKEN!r}")
        out = cls.__new__(cls)
        out.itos = list(itos)
        out.stoi = {w: i for i, w in enumerate(out.itos)}
        out.dim = matrix.shape[1]
        out.matrix = Parameter(matrix, f"{name}.matrix")
        return out

    def lookup(self, words: list[str]) -> Tensor:
        idx = np.array([self.stoi.get(w, 0) for w in words])
        return getitem(self.matrix, idx)

    def parameters(self) -> list[Parameter]:
        return [self.matrix]

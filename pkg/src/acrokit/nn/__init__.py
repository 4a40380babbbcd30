"""Numpy-backed neural primitives: autodiff tensors, layers, Adam, checkpoints."""

from .autodiff import (
    Parameter,
    ShapeError,
    Tensor,
    add,
    as_tensor,
    backward,
    concat,
    constant,
    dropout,
    exp,
    getitem,
    log,
    log_softmax,
    logsumexp,
    matmul,
    max_pool_time,
    mean,
    mul,
    nll_loss,
    relu,
    reshape,
    sigmoid,
    stack_rows,
    sub,
    tanh,
    tensor_sum,
    zero_grads,
)
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .layers import (
    AdjacencyMatrix,
    BiLstmStack,
    GcnStack,
    Linear,
    LstmParams,
    StaticEmbedder,
    TrainableEmbedder,
    UNK_TOKEN,
    bilstm,
    gcn_layer,
    glorot_uniform,
    lstm_forward,
)
from .optim import adam_step

__all__ = [
    "AdjacencyMatrix",
    "BiLstmStack",
    "CheckpointError",
    "GcnStack",
    "Linear",
    "LstmParams",
    "Parameter",
    "ShapeError",
    "StaticEmbedder",
    "Tensor",
    "TrainableEmbedder",
    "UNK_TOKEN",
    "adam_step",
    "add",
    "as_tensor",
    "backward",
    "bilstm",
    "concat",
    "constant",
    "dropout",
    "exp",
    "gcn_layer",
    "getitem",
    "glorot_uniform",
    "load_checkpoint",
    "log",
    "log_softmax",
    "logsumexp",
    "lstm_forward",
    "matmul",
    "max_pool_time",
    "mean",
    "mul",
    "nll_loss",
    "relu",
    "reshape",
    "save_checkpoint",
    "sigmoid",
    "stack_rows",
    "sub",
    "tanh",
    "tensor_sum",
    "zero_grads",
]

"""Reference float32 interpreter.

Every kernel reproduces the exact operation order of the generated C code:
accumulators start from the bias and fold products in ascending index order,
one float32 rounding per multiply and per add. Transcendentals are evaluated
in float64 and rounded once to float32, mirroring the C expressions
(float)(1.0/(1.0+exp(-(double)x))) and (float)tanh((double)x).
"""
from __future__ import annotations

import numpy as np

from .errors import NonFiniteActivation, ShapeMismatch
from .graph import (
    BatchNorm,
    Conv1D,
    Dense,
    Graph,
    Lstm,
    MaxPool1D,
    WeightStore,
    infer_shapes,
)

F32 = np.float32


def _ordered_accum(bias: np.ndarray, products: np.ndarray) -> np.ndarray:
    """Sequential float32 fold: bias + p[0] + p[1] + ... along the last axis."""
    seq = np.concatenate([bias[..., None], products], axis=-1)
    return np.add.accumulate(seq, axis=-1, dtype=F32)[..., -1]


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return (1.0 / (1.0 + np.exp(-x.astype(np.float64)))).astype(F32)


def _tanh(x: np.ndarray) -> np.ndarray:
    return np.tanh(x.astype(np.float64)).astype(F32)


def _activate(x: np.ndarray, activation: str) -> np.ndarray:
    if activation == "linear":
        return x
    if activation == "relu":
        return np.maximum(x, F32(0.0))
    if activation == "tanh":
        return _tanh(x)
    if activation == "sigmoid":
        return _sigmoid(x)
    raise ShapeMismatch(f"unknown activation {activation!r}")


def run_dense(layer: Dense, x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    if x.ndim == 1:
        products = w * x[None, :]
        acc = _ordered_accum(b, products)
    else:
        products = x[:, None, :] * w[None, :, :]
        acc = _ordered_accum(np.broadcast_to(b, (x.shape[0], b.shape[0])), products)
    return _activate(acc, layer.activation)


def run_conv1d(layer: Conv1D, x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    t_in, channels = x.shape
    t_out = (t_in - layer.kernel) // layer.stride + 1
    # Window elements flatten as (tap, channel), matching the generated loop nest.
    windows = np.stack(
        [x[t * layer.stride : t * layer.stride + layer.kernel].reshape(-1) for t in range(t_out)]
    )
    w_flat = w.reshape(layer.filters, layer.kernel * channels)
    products = windows[:, None, :] * w_flat[None, :, :]
    acc = _ordered_accum(np.broadcast_to(b, (t_out, layer.filters)), products)
    return _activate(acc, layer.activation)


def run_maxpool1d(layer: MaxPool1D, x: np.ndarray) -> np.ndarray:
    t_in = x.shape[0]
    t_out = (t_in - layer.pool) // layer.stride + 1
    rows = [
        x[t * layer.stride : t * layer.stride + layer.pool].max(axis=0) for t in range(t_out)
    ]
    return np.stack(rows)


def run_batchnorm(
    layer: BatchNorm,
    x: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    mean: np.ndarray,
    var: np.ndarray,
) -> np.ndarray:
    eps = F32(layer.epsilon)
    scale = gamma / np.sqrt(var + eps)
    shift = beta - mean * scale
    return x * scale + shift


def run_lstm(
    layer: Lstm, x: np.ndarray, w: np.ndarray, u_rec: np.ndarray, b: np.ndarray
) -> np.ndarray:
    units = layer.units
    h = np.zeros(units, dtype=F32)
    c = np.zeros(units, dtype=F32)
    seq = []
    for t in range(x.shape[0]):
        # Per gate row: bias, then input products, then recurrent products.
        products = np.concatenate([w * x[t][None, :], u_rec * h[None, :]], axis=1)
        acc = _ordered_accum(b, products)
        gi = _sigmoid(acc[0:units])
        gf = _sigmoid(acc[units : 2 * units])
        gg = _tanh(acc[2 * units : 3 * units])
        go = _sigmoid(acc[3 * units : 4 * units])
        c = gf * c + gi * gg
        h = go * _tanh(c)
        if layer.return_sequences:
            seq.append(h)
    if layer.return_sequences:
        return np.stack(seq)
    return h


def run_layer(layer, x: np.ndarray, weights: WeightStore, index: int) -> np.ndarray:
    if isinstance(layer, Dense):
        return run_dense(layer, x, weights.get(index, "W"), weights.get(index, "b"))
    if isinstance(layer, Conv1D):
        return run_conv1d(layer, x, weights.get(index, "W"), weights.get(index, "b"))
    if isinstance(layer, MaxPool1D):
        return run_maxpool1d(layer, x)
    if isinstance(layer, BatchNorm):
        return run_batchnorm(
            layer,
            x,
            weights.get(index, "gamma"),
            weights.get(index, "beta"),
            weights.get(index, "mean"),
            weights.get(index, "var"),
        )
    if isinstance(layer, Lstm):
        return run_lstm(
            layer, x, weights.get(index, "W"), weights.get(index, "U_rec"), weights.get(index, "b")
        )
    raise ShapeMismatch(f"unsupported layer {layer!r}")


def forward(
    graph: Graph,
    weights: WeightStore,
    x: np.ndarray,
    collect: bool = False,
) -> np.ndarray | tuple[np.ndarray, list[np.ndarray]]:
    """Run one inference. With collect=True also return every layer output."""
    graph = graph if graph.resolved else infer_shapes(graph)
    x = np.asarray(x, dtype=F32)
    if x.shape != graph.input_shape.dims:
        raise ShapeMismatch(
            f"input shape {x.shape} does not match model input {graph.input_shape}"
        )
    if not np.isfinite(x).all():
        raise NonFiniteActivation("model input contains non-finite values")
    outputs: list[np.ndarray] = []
    for idx, layer in enumerate(graph.layers):
        x = run_layer(layer, x, weights, idx)
        if not np.isfinite(x).all():
            raise NonFiniteActivation(f"layer {idx} ({layer.kind}) produced non-finite values")
        if collect:
            outputs.append(x)
    if collect:
        return x, outputs
    return x


def run_batch(graph: Graph, weights: WeightStore, batch: np.ndarray) -> np.ndarray:
    """Run N independent inferences; batch has shape (N, *input_shape)."""
    graph = graph if graph.resolved else infer_shapes(graph)
    batch = np.asarray(batch, dtype=F32)
    expected = (batch.shape[0],) + graph.input_shape.dims
    if batch.shape != expected:
        raise ShapeMismatch(f"batch shape {batch.shape}, expected {expected}")
    return np.stack([forward(graph, weights, row) for row in batch])

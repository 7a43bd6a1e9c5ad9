"""Linear-chain network IR: layer specs, shape inference, parameter/MACC counting.

A model is an ordered chain of layers over rank-1 or rank-2 float32 tensors
(rank 2 is [timesteps, features]). Graphs and weight stores are immutable
after construction and safe to share across threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import ClassVar, Iterator, Union

import numpy as np

from .errors import (
    IncompleteWeights,
    InvalidLayer,
    NegativeVariance,
    NonFiniteWeight,
    ShapeMismatch,
)

ACTIVATIONS = ("linear", "relu", "tanh", "sigmoid")

# Gate rows in LSTM weight blocks, in storage order.
LSTM_GATE_ORDER = ("input", "forget", "cell", "output")


@dataclass(frozen=True)
class TensorShape:
    """Rank-1 [features] or rank-2 [timesteps, features] extents."""

    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if len(self.dims) not in (1, 2):
            raise ShapeMismatch(f"tensor rank must be 1 or 2, got {len(self.dims)}")
        if any(d < 1 for d in self.dims):
            raise ShapeMismatch(f"tensor extents must be >= 1, got {list(self.dims)}")

    @property
    def rank(self) -> int:
        return len(self.dims)

    @property
    def element_count(self) -> int:
        return math.prod(self.dims)

    def __str__(self) -> str:
        return "[" + ",".join(str(d) for d in self.dims) + "]"


def _require_positive(layer_kind: str, **attrs: int) -> None:
    for name, value in attrs.items():
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            raise InvalidLayer(f"{layer_kind}.{name} must be an integer >= 1, got {value!r}")


def _require_activation(layer_kind: str, activation: str) -> None:
    if activation not in ACTIVATIONS:
        raise InvalidLayer(
            f"{layer_kind}.activation must be one of {ACTIVATIONS}, got {activation!r}"
        )


@dataclass(frozen=True)
class Dense:
    """Fully connected layer; applied independently per timestep on rank-2 input."""

    units: int
    activation: str = "linear"
    kind: ClassVar[str] = "dense"

    def __post_init__(self) -> None:
        _require_positive(self.kind, units=self.units)
        _require_activation(self.kind, self.activation)


@dataclass(frozen=True)
class Conv1D:
    """1-D convolution over the time axis, valid padding only."""

    filters: int
    kernel: int
    stride: int = 1
    padding: str = "valid"
    activation: str = "linear"
    kind: ClassVar[str] = "conv1d"

    def __post_init__(self) -> None:
        _require_positive(self.kind, filters=self.filters, kernel=self.kernel, stride=self.stride)
        _require_activation(self.kind, self.activation)
        if self.padding != "valid":
            raise InvalidLayer(f"conv1d.padding must be 'valid', got {self.padding!r}")


@dataclass(frozen=True)
class MaxPool1D:
    pool: int = 2
    stride: int = 2
    kind: ClassVar[str] = "maxpool1d"

    def __post_init__(self) -> None:
        _require_positive(self.kind, pool=self.pool, stride=self.stride)


@dataclass(frozen=True)
class BatchNorm:
    """Channelwise scale/shift with stored statistics (inference form)."""

    epsilon: float = 1e-3
    kind: ClassVar[str] = "batchnorm"

    def __post_init__(self) -> None:
        eps = float(self.epsilon)
        if not math.isfinite(eps) or eps < 0.0:
            raise InvalidLayer(f"batchnorm.epsilon must be finite and >= 0, got {eps!r}")
        object.__setattr__(self, "epsilon", eps)


@dataclass(frozen=True)
class Lstm:
    """LSTM with zero initial state; gate blocks stored [input, forget, cell, output].

    Gates use exact logistic sigmoid; cell candidate and output squashing use tanh.
    """

    units: int
    return_sequences: bool = False
    kind: ClassVar[str] = "lstm"

    def __post_init__(self) -> None:
        _require_positive(self.kind, units=self.units)
        if not isinstance(self.return_sequences, bool):
            raise InvalidLayer("lstm.return_sequences must be a bool")


LayerSpec = Union[Dense, Conv1D, MaxPool1D, BatchNorm, Lstm]

LAYER_KINDS: dict[str, type] = {
    cls.kind: cls for cls in (Dense, Conv1D, MaxPool1D, BatchNorm, Lstm)
}


def layer_attrs(layer: LayerSpec) -> dict:
    """Plain attribute dict for serialization (kind excluded)."""
    return {f.name: getattr(layer, f.name) for f in fields(layer)}


@dataclass(frozen=True)
class Graph:
    """Ordered layer chain with (optionally) resolved per-layer output shapes."""

    name: str
    input_shape: TensorShape
    layers: tuple[LayerSpec, ...]
    output_shapes: tuple[TensorShape, ...] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise InvalidLayer("graph must contain at least one layer")
        if self.output_shapes is not None:
            object.__setattr__(self, "output_shapes", tuple(self.output_shapes))

    @property
    def resolved(self) -> bool:
        return self.output_shapes is not None

    @property
    def output_shape(self) -> TensorShape:
        if self.output_shapes is None:
            raise ShapeMismatch("graph shapes not resolved; call infer_shapes first")
        return self.output_shapes[-1]

    def layer_input_shapes(self) -> tuple[TensorShape, ...]:
        """Input shape seen by each layer (requires resolved shapes)."""
        if self.output_shapes is None:
            raise ShapeMismatch("graph shapes not resolved; call infer_shapes first")
        return (self.input_shape,) + self.output_shapes[:-1]


def _layer_output_shape(layer: LayerSpec, x: TensorShape) -> TensorShape:
    if isinstance(layer, Dense):
        if x.rank == 1:
            return TensorShape((layer.units,))
        return TensorShape((x.dims[0], layer.units))
    if isinstance(layer, Conv1D):
        if x.rank != 2:
            raise ShapeMismatch(f"conv1d needs rank-2 input, got {x}")
        timesteps = x.dims[0]
        if layer.kernel > timesteps:
            raise ShapeMismatch(f"conv1d kernel {layer.kernel} exceeds {timesteps} timesteps")
        t_out = (timesteps - layer.kernel) // layer.stride + 1
        return TensorShape((t_out, layer.filters))
    if isinstance(layer, MaxPool1D):
        if x.rank != 2:
            raise ShapeMismatch(f"maxpool1d needs rank-2 input, got {x}")
        timesteps = x.dims[0]
        if layer.pool > timesteps:
            raise ShapeMismatch(f"maxpool1d pool {layer.pool} exceeds {timesteps} timesteps")
        t_out = (timesteps - layer.pool) // layer.stride + 1
        return TensorShape((t_out, x.dims[1]))
    if isinstance(layer, BatchNorm):
        if x.rank != 2:
            raise ShapeMismatch(f"batchnorm needs rank-2 input, got {x}")
        return x
    if isinstance(layer, Lstm):
        if x.rank != 2:
            raise ShapeMismatch(f"lstm needs rank-2 input, got {x}")
        if layer.return_sequences:
            return TensorShape((x.dims[0], layer.units))
        return TensorShape((layer.units,))
    raise InvalidLayer(f"unknown layer kind {layer!r}")


def infer_shapes(graph: Graph) -> Graph:
    """Resolve every layer's output shape. Deterministic and idempotent."""
    shapes: list[TensorShape] = []
    current = graph.input_shape
    for idx, layer in enumerate(graph.layers):
        try:
            current = _layer_output_shape(layer, current)
        except ShapeMismatch as exc:
            raise ShapeMismatch(f"layer {idx} ({layer.kind}): {exc}") from None
        shapes.append(current)
    return Graph(graph.name, graph.input_shape, graph.layers, tuple(shapes))


def _channels(shape: TensorShape) -> int:
    return shape.dims[-1]


def layer_param_counts(graph: Graph) -> list[int]:
    """Trainable parameters per layer (batchnorm statistics excluded)."""
    graph = graph if graph.resolved else infer_shapes(graph)
    counts: list[int] = []
    for layer, x in zip(graph.layers, graph.layer_input_shapes()):
        if isinstance(layer, Dense):
            counts.append((_channels(x) + 1) * layer.units)
        elif isinstance(layer, Conv1D):
            counts.append((layer.kernel * _channels(x) + 1) * layer.filters)
        elif isinstance(layer, BatchNorm):
            counts.append(2 * _channels(x))
        elif isinstance(layer, Lstm):
            u = layer.units
            counts.append(4 * (u * (_channels(x) + u) + u))
        else:
            counts.append(0)
    return counts


def param_count(graph: Graph) -> int:
    """Total trainable parameters."""
    return sum(layer_param_counts(graph))


def layer_stored_param_counts(graph: Graph) -> list[int]:
    """Stored weight elements per layer; batchnorm keeps mean/var too."""
    graph = graph if graph.resolved else infer_shapes(graph)
    counts = layer_param_counts(graph)
    for i, (layer, x) in enumerate(zip(graph.layers, graph.layer_input_shapes())):
        if isinstance(layer, BatchNorm):
            counts[i] = 4 * _channels(x)
    return counts


def layer_maccs(graph: Graph) -> list[int]:
    """Multiply-accumulate count per layer (batchnorm as fused scale-shift)."""
    graph = graph if graph.resolved else infer_shapes(graph)
    counts: list[int] = []
    for layer, x, y in zip(graph.layers, graph.layer_input_shapes(), graph.output_shapes):
        if isinstance(layer, Dense):
            t = x.dims[0] if x.rank == 2 else 1
            counts.append(t * _channels(x) * layer.units)
        elif isinstance(layer, Conv1D):
            counts.append(y.dims[0] * layer.kernel * _channels(x) * layer.filters)
        elif isinstance(layer, BatchNorm):
            counts.append(x.dims[0] * _channels(x))
        elif isinstance(layer, Lstm):
            u = layer.units
            counts.append(x.dims[0] * 4 * u * (_channels(x) + u))
        else:
            counts.append(0)
    return counts


def macc_count(graph: Graph) -> tuple[list[int], int]:
    """Per-layer MACCs and their total."""
    per_layer = layer_maccs(graph)
    return per_layer, sum(per_layer)


# Weight tensor roles per layer kind, in canonical storage order.
def weight_layout(graph: Graph) -> list[dict[str, tuple[int, ...]]]:
    """Role -> array shape for every layer, in blob storage order.

    dense:     W [units, in], b [units]
    conv1d:    W [filters, kernel, in_ch], b [filters]
    batchnorm: gamma/beta/mean/var [channels]
    lstm:      W [4U, in], U_rec [4U, U], b [4U]
    """
    graph = graph if graph.resolved else infer_shapes(graph)
    layouts: list[dict[str, tuple[int, ...]]] = []
    for layer, x in zip(graph.layers, graph.layer_input_shapes()):
        if isinstance(layer, Dense):
            layouts.append({"W": (layer.units, _channels(x)), "b": (layer.units,)})
        elif isinstance(layer, Conv1D):
            layouts.append(
                {"W": (layer.filters, layer.kernel, _channels(x)), "b": (layer.filters,)}
            )
        elif isinstance(layer, BatchNorm):
            c = (_channels(x),)
            layouts.append({"gamma": c, "beta": c, "mean": c, "var": c})
        elif isinstance(layer, Lstm):
            u = layer.units
            layouts.append(
                {"W": (4 * u, _channels(x)), "U_rec": (4 * u, u), "b": (4 * u,)}
            )
        else:
            layouts.append({})
    return layouts


class WeightStore:
    """Immutable map from (layer index, role) to a float32 array."""

    def __init__(self, arrays: dict[tuple[int, str], np.ndarray]):
        store: dict[tuple[int, str], np.ndarray] = {}
        for key, arr in arrays.items():
            a = np.ascontiguousarray(arr, dtype=np.float32)
            a.flags.writeable = False
            store[key] = a
        self._arrays = store

    def get(self, layer_index: int, role: str) -> np.ndarray:
        try:
            return self._arrays[(layer_index, role)]
        except KeyError:
            raise IncompleteWeights(f"missing weights for layer {layer_index} role {role!r}") from None

    def items(self) -> Iterator[tuple[tuple[int, str], np.ndarray]]:
        return iter(sorted(self._arrays.items()))

    def __len__(self) -> int:
        return len(self._arrays)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeightStore):
            return NotImplemented
        if set(self._arrays) != set(other._arrays):
            return False
        return all(
            np.array_equal(a, other._arrays[k], equal_nan=True)
            for k, a in self._arrays.items()
        )

    def validate_for(self, graph: Graph) -> None:
        """Check completeness, shapes, finiteness and variance sign against a graph."""
        layouts = weight_layout(graph)
        expected = {(i, role) for i, layout in enumerate(layouts) for role in layout}
        have = set(self._arrays)
        if have != expected:
            missing = sorted(expected - have)
            extra = sorted(have - expected)
            raise IncompleteWeights(f"weight set mismatch: missing {missing}, unexpected {extra}")
        for i, layout in enumerate(layouts):
            for role, shape in layout.items():
                arr = self._arrays[(i, role)]
                if arr.shape != shape:
                    raise IncompleteWeights(
                        f"layer {i} role {role!r}: expected shape {shape}, got {arr.shape}"
                    )
                if not np.isfinite(arr).all():
                    raise NonFiniteWeight(f"layer {i} role {role!r} contains non-finite values")
                if role == "var" and (arr < 0).any():
                    raise NegativeVariance(f"layer {i} batchnorm variance has negative entries")

    def total_elements(self) -> int:
        return sum(a.size for a in self._arrays.values())

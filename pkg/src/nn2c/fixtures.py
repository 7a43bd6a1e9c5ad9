"""Bundled case-study models.

Two model bundles ship with the package so every CLI command runs out of the
box: `autoencoder`, a 24x20 LSTM autoencoder for CAN traffic, and `cnnlstm`,
a 20x4 CNN-LSTM capacity estimator. Training is out of scope, so weights are
seeded uniform random; the topologies, parameter counts, and memory behavior
are what matter. `scripts/make_fixtures.py` regenerates the data files.
"""
from __future__ import annotations

from importlib import resources

import numpy as np

from .graph import (
    BatchNorm,
    Conv1D,
    Dense,
    Graph,
    Lstm,
    MaxPool1D,
    TensorShape,
    WeightStore,
    infer_shapes,
    weight_layout,
)
from .model_format import loads_model

BUNDLED = ("autoencoder", "cnnlstm")

FIXTURE_SEED = 2024


def autoencoder_graph() -> Graph:
    return infer_shapes(
        Graph(
            "autoencoder",
            TensorShape((24, 20)),
            (
                Dense(20),
                Lstm(18, return_sequences=True),
                Lstm(18, return_sequences=True),
                Dense(20),
            ),
        )
    )


def cnnlstm_graph() -> Graph:
    return infer_shapes(
        Graph(
            "cnnlstm",
            TensorShape((20, 4)),
            (
                Conv1D(32, kernel=4, stride=1, activation="relu"),
                BatchNorm(),
                MaxPool1D(pool=2, stride=2),
                Lstm(32),
                Dense(1),
            ),
        )
    )


def random_weights(graph: Graph, seed: int = FIXTURE_SEED) -> WeightStore:
    """Seeded weights in ranges that keep every activation finite and tame."""
    rng = np.random.default_rng(seed)
    arrays: dict[tuple[int, str], np.ndarray] = {}
    for idx, layout in enumerate(weight_layout(graph)):
        for role, shape in layout.items():
            if role == "gamma":
                arr = rng.uniform(0.5, 1.5, size=shape)
            elif role == "var":
                arr = rng.uniform(0.05, 1.0, size=shape)
            else:
                arr = rng.uniform(-0.5, 0.5, size=shape)
            arrays[(idx, role)] = arr.astype(np.float32)
    return WeightStore(arrays)


def build_fixture(name: str, seed: int = FIXTURE_SEED) -> tuple[Graph, WeightStore]:
    if name == "autoencoder":
        graph = autoencoder_graph()
    elif name == "cnnlstm":
        graph = cnnlstm_graph()
    else:
        raise KeyError(f"no bundled model named {name!r}; have {BUNDLED}")
    return graph, random_weights(graph, seed)


def load_bundled(name: str) -> tuple[Graph, WeightStore]:
    """Load a bundled model from the packaged data files."""
    if name not in BUNDLED:
        raise KeyError(f"no bundled model named {name!r}; have {BUNDLED}")
    data = resources.files("nn2c").joinpath("data")
    text = data.joinpath(f"{name}.tnnf.json").read_text()
    blob = data.joinpath(f"{name}.weights.bin").read_bytes()
    return loads_model(text, blob)

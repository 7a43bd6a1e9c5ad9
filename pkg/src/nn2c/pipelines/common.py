"""Shared window-set container for both case-study pipelines."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import LengthMismatch, ShapeMismatch
from ..vectorfile import read_vectors, write_vectors


@dataclass(frozen=True)
class WindowSet:
    """Fixed-shape feature windows plus one label (flag/kind or target) each."""

    windows: np.ndarray  # float32, (count, T, F)
    labels: np.ndarray  # float32, (count,)

    def __post_init__(self) -> None:
        w = np.asarray(self.windows, dtype=np.float32)
        l = np.asarray(self.labels, dtype=np.float32)
        if w.ndim != 3:
            raise ShapeMismatch(f"windows must be (count, T, F), got {w.shape}")
        if l.shape != (w.shape[0],):
            raise LengthMismatch(f"{w.shape[0]} windows but {l.shape} labels")
        object.__setattr__(self, "windows", w)
        object.__setattr__(self, "labels", l)

    @property
    def count(self) -> int:
        return int(self.windows.shape[0])

    @property
    def window_shape(self) -> tuple[int, int]:
        return int(self.windows.shape[1]), int(self.windows.shape[2])

    def save(self, inputs_path: str | Path, labels_path: str | Path) -> None:
        t, f = self.window_shape
        write_vectors(inputs_path, self.windows.reshape(self.count, t * f))
        write_vectors(labels_path, self.labels.reshape(self.count, 1))


def load_window_set(
    inputs_path: str | Path, labels_path: str | Path, timesteps: int, features: int
) -> WindowSet:
    flat, _ = read_vectors(inputs_path)
    labels, _ = read_vectors(labels_path)
    if flat.shape[1] != timesteps * features:
        raise ShapeMismatch(
            f"window file holds {flat.shape[1]}-element rows, expected {timesteps * features}"
        )
    if labels.shape[1] != 1 or labels.shape[0] != flat.shape[0]:
        raise LengthMismatch(
            f"label file shape {labels.shape} does not pair with {flat.shape[0]} windows"
        )
    return WindowSet(flat.reshape(-1, timesteps, features), labels[:, 0])

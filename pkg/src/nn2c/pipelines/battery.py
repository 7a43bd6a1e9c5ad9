"""Li-Ion capacity-estimation pipeline.

Each discharge cycle contributes one window: a fixed number of evenly spaced
measurements (first and last always included), with features per row
[current, voltage, temperature, delta-t to the previous selected row] and the
cycle's capacity as target. Feature scaling is min-max, fit on training
windows only.
"""
from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import (
    DegenerateFeatureWarning,
    LengthMismatch,
    NonPositiveRated,
    ParseError,
    ShapeMismatch,
    ShortCycle,
)
from .common import WindowSet

FEATURES = ("current", "voltage", "temperature", "dt")

SOH_REPLACE_BELOW = 0.8


@dataclass(frozen=True)
class DischargeCycle:
    cycle_id: str
    time: np.ndarray
    voltage: np.ndarray
    current: np.ndarray
    temperature: np.ndarray
    capacity: float

    def __post_init__(self) -> None:
        n = len(self.time)
        for field in ("voltage", "current", "temperature"):
            if len(getattr(self, field)) != n:
                raise LengthMismatch(f"cycle {self.cycle_id}: ragged {field} column")
        if n == 0:
            raise ShortCycle(f"cycle {self.cycle_id} is empty")
        if np.any(np.diff(self.time) < 0):
            raise ParseError(f"cycle {self.cycle_id}: time must be non-decreasing")

    def __len__(self) -> int:
        return len(self.time)


def load_battery_csv(path: str | Path) -> list[DischargeCycle]:
    """CSV `cycle_id,time,voltage,current,temperature,capacity`.

    Capacity repeats on every row of a cycle and must not vary within one.
    """
    columns: dict[str, dict[str, list[float]]] = {}
    capacities: dict[str, float] = {}
    order: list[str] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["cycle_id", "time", "voltage", "current", "temperature", "capacity"]
        if header is None or [h.strip().lower() for h in header] != expected:
            raise ParseError(f"{path}: header must be {','.join(expected)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 6:
                raise ParseError(f"{path}:{lineno}: expected 6 columns, got {len(row)}")
            cid = row[0].strip()
            try:
                t, v, i, temp, cap = (float(cell) for cell in row[1:])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric measurement") from None
            if cid not in columns:
                columns[cid] = {"time": [], "voltage": [], "current": [], "temperature": []}
                capacities[cid] = cap
                order.append(cid)
            elif capacities[cid] != cap:
                raise ParseError(
                    f"{path}:{lineno}: cycle {cid} capacity changed "
                    f"({capacities[cid]} -> {cap})"
                )
            columns[cid]["time"].append(t)
            columns[cid]["voltage"].append(v)
            columns[cid]["current"].append(i)
            columns[cid]["temperature"].append(temp)
    if not order:
        raise ParseError(f"{path} contains no measurements")
    return [
        DischargeCycle(
            cid,
            np.asarray(columns[cid]["time"]),
            np.asarray(columns[cid]["voltage"]),
            np.asarray(columns[cid]["current"]),
            np.asarray(columns[cid]["temperature"]),
            capacities[cid],
        )
        for cid in order
    ]


def even_indices(n: int, samples: int) -> list[int]:
    """Evenly spaced row picks including both endpoints: round(i*(n-1)/(samples-1))."""
    if samples < 2:
        raise ValueError("samples must be >= 2")
    return [round(i * (n - 1) / (samples - 1)) for i in range(samples)]


def build_battery_windows(cycles: list[DischargeCycle], samples: int = 20) -> WindowSet:
    """One [samples x 4] window per cycle, target = cycle capacity."""
    windows = []
    targets = []
    for cycle in cycles:
        n = len(cycle)
        if n < samples:
            raise ShortCycle(
                f"cycle {cycle.cycle_id} has {n} measurements, needs >= {samples}"
            )
        idx = even_indices(n, samples)
        rows = np.empty((samples, len(FEATURES)), dtype=np.float32)
        rows[:, 0] = cycle.current[idx]
        rows[:, 1] = cycle.voltage[idx]
        rows[:, 2] = cycle.temperature[idx]
        picked_t = cycle.time[idx]
        rows[1:, 3] = (picked_t[1:] - picked_t[:-1]).astype(np.float32)
        rows[0, 3] = 0.0
        windows.append(rows)
        targets.append(cycle.capacity)
    return WindowSet(np.stack(windows), np.asarray(targets, dtype=np.float32))


@dataclass(frozen=True)
class MinMaxScaler:
    """Per-feature min/max in binary32; transform maps each feature to [0, 1]."""

    minimum: np.ndarray
    maximum: np.ndarray

    def __post_init__(self) -> None:
        mn = np.asarray(self.minimum, dtype=np.float32)
        mx = np.asarray(self.maximum, dtype=np.float32)
        if mn.shape != mx.shape or mn.ndim != 1:
            raise ShapeMismatch(f"scaler min {mn.shape} vs max {mx.shape}")
        if np.any(mx < mn):
            raise ValueError("scaler max must be >= min per feature")
        object.__setattr__(self, "minimum", mn)
        object.__setattr__(self, "maximum", mx)

    @classmethod
    def fit(cls, windows: np.ndarray) -> "MinMaxScaler":
        w = np.asarray(windows, dtype=np.float32)
        flat = w.reshape(-1, w.shape[-1])
        return cls(flat.min(axis=0), flat.max(axis=0))

    def transform(self, windows: np.ndarray) -> np.ndarray:
        w = np.asarray(windows, dtype=np.float32)
        span = self.maximum - self.minimum
        degenerate = span == 0
        if np.any(degenerate):
            warnings.warn(
                f"features {np.nonzero(degenerate)[0].tolist()} have max == min; mapped to 0",
                DegenerateFeatureWarning,
                stacklevel=2,
            )
        safe = np.where(degenerate, np.float32(1.0), span)
        out = (w - self.minimum) / safe
        return np.where(degenerate, np.float32(0.0), out).astype(np.float32)

    def inverse_transform(self, scaled: np.ndarray) -> np.ndarray:
        s = np.asarray(scaled, dtype=np.float32)
        span = self.maximum - self.minimum
        return (s * span + self.minimum).astype(np.float32)

    def to_json(self) -> str:
        payload = {
            "minimum": [float(v) for v in self.minimum],
            "maximum": [float(v) for v in self.maximum],
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "MinMaxScaler":
        try:
            payload = json.loads(text)
            return cls(np.asarray(payload["minimum"]), np.asarray(payload["maximum"]))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ParseError(f"bad scaler file: {exc}") from None


def eval_capacity(predictions, targets) -> float:
    """Mean absolute error between predicted and true capacities."""
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if p.shape != t.shape or p.ndim != 1:
        raise LengthMismatch(f"predictions {p.shape} vs targets {t.shape}")
    if p.size == 0:
        raise LengthMismatch("no prediction/target pairs")
    return float(np.mean(np.abs(p - t)))


def compute_soh(c_max: float, c_rated: float) -> tuple[float, bool]:
    """State of health plus replacement flag; replace strictly below 0.8."""
    if c_rated <= 0:
        raise NonPositiveRated(f"rated capacity must be positive, got {c_rated}")
    soh = c_max / c_rated
    return soh, soh < SOH_REPLACE_BELOW

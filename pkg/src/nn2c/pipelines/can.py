"""CAN-bus intrusion-detection pipeline.

Messages arrive as (label, timestamp, id, up to 4 decoded signals in [0,1]).
A signal map assigns every (id, signal index) to one snapshot column; the
stream becomes a last-known-value snapshot matrix with one row per mapped
message, and fixed-length windows over those rows feed the autoencoder.

Window labels are attack-kind codes: 0 normal, 1..5 the named kinds, 6 an
attack of unstated kind. A window is an attack window iff any contributing
message is an attack; its code is the first attack message's code.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import EmptyScores, EmptyStream, LengthMismatch, ParseError, ShapeMismatch
from .common import WindowSet

ATTACK_KINDS = ("plateau", "continuous_change", "playback", "suppress", "flooding")

# 0 is reserved for normal traffic, 6 for attacks with no stated kind.
KIND_CODES = {"normal": 0, **{k: i + 1 for i, k in enumerate(ATTACK_KINDS)}, "attack": 6}
CODE_NAMES = {v: k for k, v in KIND_CODES.items()}

MAX_SIGNALS = 4


@dataclass(frozen=True)
class CanMessage:
    label: str
    timestamp: float
    can_id: int
    signals: tuple[float | None, ...]  # length MAX_SIGNALS, None = absent

    def __post_init__(self) -> None:
        if self.label not in KIND_CODES:
            raise ParseError(f"unknown message label {self.label!r}")
        if len(self.signals) != MAX_SIGNALS:
            raise ParseError(f"message must carry {MAX_SIGNALS} signal slots")
        if all(v is None for v in self.signals):
            raise ParseError("message carries no signals")

    @property
    def is_attack(self) -> bool:
        return self.label != "normal"

    @property
    def kind_code(self) -> int:
        return KIND_CODES[self.label]


@dataclass(frozen=True)
class SignalMap:
    """Bijection from (message id, signal index) onto columns 0..C-1."""

    mapping: dict[tuple[int, int], int]

    def __post_init__(self) -> None:
        columns = sorted(self.mapping.values())
        if not columns:
            raise ParseError("signal map is empty")
        if columns != list(range(len(columns))):
            raise ParseError(
                f"signal map columns must cover 0..{len(columns) - 1} exactly once"
            )
        ids = {key[0] for key in self.mapping}
        object.__setattr__(self, "_ids", frozenset(ids))

    @property
    def columns(self) -> int:
        return len(self.mapping)

    def knows_id(self, can_id: int) -> bool:
        return can_id in self._ids

    def column(self, can_id: int, signal_index: int) -> int:
        try:
            return self.mapping[(can_id, signal_index)]
        except KeyError:
            raise ParseError(
                f"id {can_id:#x} signal {signal_index} carried by stream but not mapped"
            ) from None


def _parse_int(text: str, where: str) -> int:
    try:
        return int(text.strip(), 0)
    except ValueError:
        raise ParseError(f"{where}: bad integer {text!r}") from None


def load_signal_map(path: str | Path) -> SignalMap:
    """Text file, one `id,signal_index,column` triple per line; # comments."""
    mapping: dict[tuple[int, int], int] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p for p in line.split(",")]
        if len(parts) != 3:
            raise ParseError(f"{path}:{lineno}: expected id,signal_index,column")
        key = (
            _parse_int(parts[0], f"{path}:{lineno}"),
            _parse_int(parts[1], f"{path}:{lineno}"),
        )
        if key[1] < 0 or key[1] >= MAX_SIGNALS:
            raise ParseError(f"{path}:{lineno}: signal index must be 0..{MAX_SIGNALS - 1}")
        if key in mapping:
            raise ParseError(f"{path}:{lineno}: duplicate mapping for {key}")
        mapping[key] = _parse_int(parts[2], f"{path}:{lineno}")
    return SignalMap(mapping)


def load_can_csv(path: str | Path) -> list[CanMessage]:
    """CSV `label,time,id,signal1,signal2,signal3,signal4`; empty cell = absent."""
    messages: list[CanMessage] = []
    last_ts = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyStream(f"{path} is empty")
        expected = ["label", "time", "id", "signal1", "signal2", "signal3", "signal4"]
        if [h.strip().lower() for h in header] != expected:
            raise ParseError(f"{path}: header must be {','.join(expected)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 7:
                raise ParseError(f"{path}:{lineno}: expected 7 columns, got {len(row)}")
            label = row[0].strip()
            try:
                ts = float(row[1])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: bad timestamp {row[1]!r}") from None
            can_id = _parse_int(row[2], f"{path}:{lineno}")
            signals = []
            for cell in row[3:7]:
                cell = cell.strip()
                if not cell:
                    signals.append(None)
                    continue
                try:
                    signals.append(float(cell))
                except ValueError:
                    raise ParseError(f"{path}:{lineno}: bad signal {cell!r}") from None
            if last_ts is not None and ts < last_ts:
                raise ParseError(f"{path}:{lineno}: timestamps must be non-decreasing")
            last_ts = ts
            try:
                messages.append(CanMessage(label, ts, can_id, tuple(signals)))
            except ParseError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    if not messages:
        raise EmptyStream(f"{path} contains no messages")
    return messages


@dataclass(frozen=True)
class CanWindowResult:
    window_set: WindowSet
    skipped_unmapped: int
    rows: int


def build_can_windows(
    messages: list[CanMessage],
    signal_map: SignalMap,
    window: int = 24,
    stride: int = 1,
) -> CanWindowResult:
    """Snapshot rows (one per mapped message) sliced into labeled windows.

    Messages whose id the map does not know are skipped and counted; they
    produce no row and cannot taint any window's label.
    """
    if window < 1 or stride < 1:
        raise ParseError("window and stride must be >= 1")
    snapshot = np.zeros(signal_map.columns, dtype=np.float32)
    rows: list[np.ndarray] = []
    row_codes: list[int] = []
    skipped = 0
    for msg in messages:
        if not signal_map.knows_id(msg.can_id):
            skipped += 1
            continue
        for idx, value in enumerate(msg.signals):
            if value is not None:
                snapshot[signal_map.column(msg.can_id, idx)] = np.float32(value)
        rows.append(snapshot.copy())
        row_codes.append(msg.kind_code)
    if not rows:
        raise EmptyStream("no mapped messages in stream")

    n = len(rows)
    starts = range(0, n - window + 1, stride) if n >= window else range(0)
    windows = np.stack([np.stack(rows[s : s + window]) for s in starts]) if n >= window else (
        np.zeros((0, window, signal_map.columns), dtype=np.float32)
    )
    labels = []
    for s in starts:
        codes = row_codes[s : s + window]
        attack = next((c for c in codes if c != 0), 0)
        labels.append(float(attack))
    labels_arr = np.asarray(labels, dtype=np.float32) if labels else np.zeros(0, np.float32)
    return CanWindowResult(WindowSet(windows, labels_arr), skipped, n)


def mae_score(x: np.ndarray, reconstruction: np.ndarray) -> float:
    """Mean absolute error over all elements of one window."""
    x = np.asarray(x, dtype=np.float64)
    r = np.asarray(reconstruction, dtype=np.float64)
    if x.shape != r.shape:
        raise ShapeMismatch(f"window {x.shape} vs reconstruction {r.shape}")
    return float(np.mean(np.abs(x - r)))


def select_threshold(scores_on_normal, quantile: float = 0.99) -> float:
    """Nearest-rank empirical quantile; flag windows with score > threshold."""
    scores = np.asarray(list(scores_on_normal), dtype=np.float64)
    if scores.size == 0:
        raise EmptyScores("cannot pick a threshold from zero scores")
    if not 0.0 < quantile <= 1.0:
        raise ValueError(f"quantile must be in (0, 1], got {quantile}")
    ranked = np.sort(scores)
    rank = int(np.ceil(quantile * ranked.size))
    return float(ranked[rank - 1])


@dataclass(frozen=True)
class KindMetrics:
    kind: str
    windows: int
    true_positives: int
    false_positives: int
    false_negatives: int
    precision: float | None
    recall: float | None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "windows": self.windows,
            "tp": self.true_positives,
            "fp": self.false_positives,
            "fn": self.false_negatives,
            "precision": self.precision,
            "recall": self.recall,
        }


@dataclass(frozen=True)
class DetectionReport:
    overall: KindMetrics
    per_kind: tuple[KindMetrics, ...]
    mean_precision: float | None
    mean_recall: float | None

    def to_dict(self) -> dict:
        return {
            "overall": self.overall.to_dict(),
            "per_kind": [k.to_dict() for k in self.per_kind],
            "mean_precision": self.mean_precision,
            "mean_recall": self.mean_recall,
        }


def _metrics(name: str, flags: np.ndarray, attacks: np.ndarray) -> KindMetrics:
    tp = int(np.sum(flags & attacks))
    fp = int(np.sum(flags & ~attacks))
    fn = int(np.sum(~flags & attacks))
    precision = tp / (tp + fp) if (tp + fp) > 0 else None
    recall = tp / (tp + fn) if (tp + fn) > 0 else None
    return KindMetrics(name, int(flags.size), tp, fp, fn, precision, recall)


def eval_detection(flags, kind_codes) -> DetectionReport:
    """Precision/recall overall and per attack kind (kind windows + all normals).

    Undefined ratios (zero denominator) stay None rather than collapsing to 0.
    """
    flags = np.asarray(flags, dtype=bool)
    codes = np.asarray(kind_codes)
    if flags.shape != codes.shape or flags.ndim != 1:
        raise LengthMismatch(f"flags {flags.shape} vs labels {codes.shape}")
    codes = codes.astype(np.int64)
    attacks = codes != 0

    overall = _metrics("overall", flags, attacks)
    per_kind = []
    for code in sorted(set(codes[attacks].tolist())):
        mask = (codes == code) | ~attacks
        per_kind.append(_metrics(CODE_NAMES.get(code, str(code)), flags[mask], attacks[mask]))
    precisions = [k.precision for k in per_kind if k.precision is not None]
    recalls = [k.recall for k in per_kind if k.recall is not None]
    return DetectionReport(
        overall=overall,
        per_kind=tuple(per_kind),
        mean_precision=float(np.mean(precisions)) if precisions else None,
        mean_recall=float(np.mean(recalls)) if recalls else None,
    )

"""Case-study data pipelines: CAN intrusion detection and battery capacity."""

from .battery import (
    DischargeCycle,
    MinMaxScaler,
    build_battery_windows,
    compute_soh,
    eval_capacity,
    even_indices,
    load_battery_csv,
)
from .can import (
    ATTACK_KINDS,
    KIND_CODES,
    CanMessage,
    CanWindowResult,
    DetectionReport,
    SignalMap,
    build_can_windows,
    eval_detection,
    load_can_csv,
    load_signal_map,
    mae_score,
    select_threshold,
)
from .common import WindowSet, load_window_set

__all__ = [
    "ATTACK_KINDS",
    "KIND_CODES",
    "CanMessage",
    "CanWindowResult",
    "DetectionReport",
    "DischargeCycle",
    "MinMaxScaler",
    "SignalMap",
    "WindowSet",
    "build_battery_windows",
    "build_can_windows",
    "compute_soh",
    "eval_capacity",
    "eval_detection",
    "even_indices",
    "load_battery_csv",
    "load_can_csv",
    "load_signal_map",
    "load_window_set",
    "mae_score",
    "select_threshold",
]

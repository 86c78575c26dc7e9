"""Hydraulic-rig dataset: channel definitions, loading, resampling, labels.

The on-disk layout is the public hydraulic condition-monitoring format:
one plain-text matrix per sensor (``<CHANNEL>.txt``, one cycle per row,
tab-separated) plus ``profile.txt`` with five integer label columns
(cooler, valve, pump leak, accumulator, stable flag). Every cycle covers
60 seconds; channels are natively sampled at 1, 10 or 100 Hz and are
resampled here to a common 1 Hz grid by per-second block means.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from .errors import (
    LengthMismatch,
    MissingFile,
    NonNumericValue,
    RowCountMismatch,
    UnknownLabel,
)

CYCLE_SECONDS = 60
CANONICAL_NUM_CYCLES = 2205
LABEL_FILE = "profile.txt"


@dataclass(frozen=True)
class SensorChannel:
    id: str
    native_rate: int  # Hz
    unit: str

    @property
    def samples_per_cycle(self) -> int:
        return self.native_rate * CYCLE_SECONDS


CHANNELS: tuple[SensorChannel, ...] = (
    SensorChannel("PS1", 100, "bar"),
    SensorChannel("PS2", 100, "bar"),
    SensorChannel("PS3", 100, "bar"),
    SensorChannel("PS4", 100, "bar"),
    SensorChannel("PS5", 100, "bar"),
    SensorChannel("PS6", 100, "bar"),
    SensorChannel("EPS1", 100, "W"),
    SensorChannel("FS1", 10, "l/min"),
    SensorChannel("FS2", 10, "l/min"),
    SensorChannel("TS1", 1, "degC"),
    SensorChannel("TS2", 1, "degC"),
    SensorChannel("TS3", 1, "degC"),
    SensorChannel("TS4", 1, "degC"),
    SensorChannel("VS1", 1, "mm/s"),
    SensorChannel("CE", 1, "%"),
    SensorChannel("CP", 1, "kW"),
    SensorChannel("SE", 1, "%"),
)

CHANNEL_BY_ID: dict[str, SensorChannel] = {c.id: c for c in CHANNELS}

# Fixed channel ordering used everywhere downstream (feature layout,
# aggregated batches): lexicographic by channel id.
CHANNEL_ORDER: tuple[str, ...] = tuple(sorted(CHANNEL_BY_ID))

NUM_CHANNELS = len(CHANNELS)


class Task(str, Enum):
    COOLER = "cooler"
    VALVE = "valve"
    PUMP_LEAK = "pump_leak"
    ACCUMULATOR = "accumulator"
    STABLE_FLAG = "stable_flag"


# Column position of each task in profile.txt.
TASK_COLUMN: dict[Task, int] = {
    Task.COOLER: 0,
    Task.VALVE: 1,
    Task.PUMP_LEAK: 2,
    Task.ACCUMULATOR: 3,
    Task.STABLE_FLAG: 4,
}

ALL_TASKS: tuple[Task, ...] = tuple(TASK_COLUMN)


@dataclass(frozen=True)
class TaskSpec:
    """Distinct raw label values of one task, in ascending order."""

    task: Task
    classes: tuple[int, ...]

    def __post_init__(self):
        if list(self.classes) != sorted(set(self.classes)):
            raise ValueError("classes must be distinct and ascending")

    @property
    def num_classes(self) -> int:
        return len(self.classes)


@dataclass
class Cycle:
    """One 60-second measurement window: 17 x 60 resampled samples + labels."""

    index: int
    signals: dict[str, np.ndarray]  # channel id -> 60 float64 samples
    labels: dict[Task, int]  # raw label values

    def channel_matrix(self) -> np.ndarray:
        """Signals stacked in CHANNEL_ORDER, shape (17, 60)."""
        return np.stack([self.signals[ch] for ch in CHANNEL_ORDER])


def resample_to_1hz(samples: Sequence[float] | np.ndarray, native_rate: int) -> np.ndarray:
    """Block-mean a native-rate cycle down to 60 one-second samples."""
    x = np.asarray(samples, dtype=np.float64)
    expected = native_rate * CYCLE_SECONDS
    if x.ndim != 1 or x.size != expected:
        raise LengthMismatch(
            f"expected {expected} samples at {native_rate} Hz, got {x.size}"
        )
    return _block_mean(x[np.newaxis, :], native_rate)[0]


def _block_mean(matrix: np.ndarray, native_rate: int) -> np.ndarray:
    """Per-row mean of consecutive blocks of ``native_rate`` samples."""
    n_rows = matrix.shape[0]
    return matrix.reshape(n_rows, CYCLE_SECONDS, native_rate).mean(axis=2)


def class_index(spec: TaskSpec, raw_label: int) -> int:
    """Map a raw label value to its ascending-order class index."""
    try:
        return spec.classes.index(raw_label)
    except ValueError:
        raise UnknownLabel(
            f"label {raw_label!r} not in {spec.task.value} classes {spec.classes}"
        ) from None


def task_specs_from_labels(labels: np.ndarray) -> dict[Task, TaskSpec]:
    """Build a TaskSpec per task from a (n, 5) raw label matrix."""
    specs = {}
    for task, col in TASK_COLUMN.items():
        values = tuple(int(v) for v in np.unique(labels[:, col]))
        specs[task] = TaskSpec(task, values)
    return specs


def task_specs_from_cycles(cycles: Sequence[Cycle]) -> dict[Task, TaskSpec]:
    labels = np.array([[c.labels[t] for t in ALL_TASKS] for c in cycles])
    return task_specs_from_labels(labels)


def _read_matrix(path: Path) -> np.ndarray:
    """Read a tab-separated numeric matrix, localizing bad cells on failure."""
    try:
        frame = pd.read_csv(path, sep="\t", header=None, dtype=np.float64)
        # C-contiguous so downstream reductions take the same (pairwise)
        # summation path as on per-row vectors.
        matrix = np.ascontiguousarray(frame.to_numpy())
    except (ValueError, pd.errors.ParserError):
        _locate_bad_cell(path)
        raise NonNumericValue(f"{path.name}: unparseable numeric data", file=path.name)
    if not np.all(np.isfinite(matrix)):
        row, col = np.argwhere(~np.isfinite(matrix))[0]
        raise NonNumericValue(
            f"{path.name}: non-finite value at row {row}, col {col}",
            file=path.name,
            row=int(row),
            col=int(col),
        )
    return matrix


def _locate_bad_cell(path: Path) -> None:
    """Slow scan to report the exact cell that failed to parse."""
    with open(path, "r") as fh:
        for row, line in enumerate(fh):
            for col, token in enumerate(line.rstrip("\n").split("\t")):
                try:
                    float(token)
                except ValueError:
                    raise NonNumericValue(
                        f"{path.name}: non-numeric value {token!r} at row {row}, col {col}",
                        file=path.name,
                        row=row,
                        col=col,
                    ) from None


def load_labels(root: Path | str) -> np.ndarray:
    """Read profile.txt into an (n, 5) int array."""
    path = Path(root) / LABEL_FILE
    if not path.is_file():
        raise MissingFile(f"label file not found: {path}")
    matrix = _read_matrix(path)
    if matrix.shape[1] != len(TASK_COLUMN):
        raise RowCountMismatch(
            f"{LABEL_FILE}: expected {len(TASK_COLUMN)} label columns, got {matrix.shape[1]}"
        )
    if not np.all(matrix == np.round(matrix)):
        row, col = np.argwhere(matrix != np.round(matrix))[0]
        raise NonNumericValue(
            f"{LABEL_FILE}: non-integer label at row {row}, col {col}",
            file=LABEL_FILE,
            row=int(row),
            col=int(col),
        )
    return matrix.astype(np.int64)


def load_dataset(root: Path | str, expected_cycles: int | None = None) -> list[Cycle]:
    """Load the full dataset from ``root`` and resample everything to 1 Hz.

    All per-sensor files and the label file must agree on the row count;
    pass ``expected_cycles`` to additionally pin it (the canonical dataset
    has 2205 rows).
    """
    root = Path(root)
    labels = load_labels(root)
    n_cycles = labels.shape[0]
    if expected_cycles is not None and n_cycles != expected_cycles:
        raise RowCountMismatch(
            f"{LABEL_FILE}: expected {expected_cycles} rows, got {n_cycles}"
        )

    resampled: dict[str, np.ndarray] = {}
    for channel in CHANNELS:
        path = root / f"{channel.id}.txt"
        if not path.is_file():
            raise MissingFile(f"sensor file not found: {path}")
        matrix = _read_matrix(path)
        if matrix.shape[0] != n_cycles:
            raise RowCountMismatch(
                f"{path.name}: expected {n_cycles} rows, got {matrix.shape[0]}"
            )
        if matrix.shape[1] != channel.samples_per_cycle:
            raise LengthMismatch(
                f"{path.name}: expected {channel.samples_per_cycle} samples per row "
                f"at {channel.native_rate} Hz, got {matrix.shape[1]}"
            )
        resampled[channel.id] = _block_mean(matrix, channel.native_rate)

    cycles = []
    for i in range(n_cycles):
        signals = {ch: resampled[ch][i] for ch in CHANNEL_ORDER}
        row_labels = {task: int(labels[i, col]) for task, col in TASK_COLUMN.items()}
        cycles.append(Cycle(index=i, signals=signals, labels=row_labels))
    return cycles

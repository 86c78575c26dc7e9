"""Per-cycle feature extraction: 8 statistics x {time, frequency} x 17 channels.

Layout (version 1): channels in CHANNEL_ORDER; per channel first the 8
time-domain statistics of the 60-sample signal, then the same 8 statistics
of its 31-bin one-sided magnitude spectrum. Statistic order is
(mean, std, min, max, sum, median, skewness, kurtosis) with population
moments and excess kurtosis; zero-variance signals get skewness =
kurtosis = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import CHANNEL_ORDER, CYCLE_SECONDS, Cycle
from .errors import EmptyTrainingSet, LengthMismatch, NonFinite, TooShort

STAT_NAMES = ("mean", "std", "min", "max", "sum", "median", "skewness", "kurtosis")
SPECTRUM_BINS = CYCLE_SECONDS // 2 + 1  # DC through Nyquist inclusive
NUM_FEATURES = len(CHANNEL_ORDER) * 2 * len(STAT_NAMES)
LAYOUT_VERSION = 1

# Features with training-fold std below this are mapped to 0 by normalize().
_STD_FLOOR = 1e-12


def stats8(signal: Sequence[float] | np.ndarray) -> np.ndarray:
    """The 8 summary statistics of a 1-D signal, in STAT_NAMES order."""
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise TooShort(f"need a 1-D signal with >= 2 samples, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFinite("signal contains non-finite samples")
    mean = x.mean()
    d = x - mean
    m2 = np.mean(d * d)
    if m2 == 0.0:
        skewness = 0.0
        kurtosis = 0.0
    else:
        skewness = np.mean(d**3) / m2**1.5
        kurtosis = np.mean(d**4) / (m2 * m2) - 3.0
    return np.array(
        [mean, np.sqrt(m2), x.min(), x.max(), x.sum(), np.median(x), skewness, kurtosis]
    )


def spectrum(signal: Sequence[float] | np.ndarray) -> np.ndarray:
    """One-sided DFT magnitudes (bins 0..30) of a 60-sample signal, no window."""
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1 or x.size != CYCLE_SECONDS:
        raise LengthMismatch(f"expected {CYCLE_SECONDS} samples, got shape {x.shape}")
    return np.abs(np.fft.rfft(x))


def extract_from_matrix(channel_matrix: np.ndarray) -> np.ndarray:
    """Feature vector from a (17, 60) matrix in CHANNEL_ORDER."""
    if channel_matrix.shape != (len(CHANNEL_ORDER), CYCLE_SECONDS):
        raise LengthMismatch(
            f"expected ({len(CHANNEL_ORDER)}, {CYCLE_SECONDS}) matrix, "
            f"got {channel_matrix.shape}"
        )
    parts = []
    for row in channel_matrix:
        parts.append(stats8(row))
        parts.append(stats8(spectrum(row)))
    return np.concatenate(parts)


def extract(cycle: Cycle) -> np.ndarray:
    """Unnormalized 272-value feature vector of one cycle."""
    return extract_from_matrix(cycle.channel_matrix())


def extract_many(cycles: Sequence[Cycle]) -> np.ndarray:
    """Feature matrix (n_cycles, 272)."""
    return np.stack([extract(c) for c in cycles])


def feature_names() -> tuple[str, ...]:
    names = []
    for channel in CHANNEL_ORDER:
        for domain in ("time", "freq"):
            for stat in STAT_NAMES:
                names.append(f"{channel}.{domain}.{stat}")
    return tuple(names)


@dataclass
class Normalizer:
    """Per-feature z-score parameters, fitted on training-fold data only."""

    mean: np.ndarray
    std: np.ndarray
    fitted_on: str

    def __post_init__(self):
        if np.any(self.std < 0):
            raise ValueError("std must be non-negative")


def fit_normalizer(train_vectors: np.ndarray, fitted_on: str = "all") -> Normalizer:
    X = np.asarray(train_vectors, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise EmptyTrainingSet(f"need >= 2 training vectors, got shape {X.shape}")
    return Normalizer(mean=X.mean(axis=0), std=X.std(axis=0), fitted_on=fitted_on)


def normalize(normalizer: Normalizer, vectors: np.ndarray) -> np.ndarray:
    """z-score a vector or matrix; near-constant features map to 0."""
    x = np.asarray(vectors, dtype=np.float64)
    degenerate = normalizer.std < _STD_FLOOR
    safe_std = np.where(degenerate, 1.0, normalizer.std)
    z = (x - normalizer.mean) / safe_std
    return np.where(degenerate, 0.0, z)


def save_feature_cache(path: Path | str, matrix: np.ndarray) -> None:
    """Write the extracted feature matrix with its layout version."""
    np.savez_compressed(
        path, layout_version=LAYOUT_VERSION, features=np.asarray(matrix, np.float64)
    )


def load_feature_cache(path: Path | str) -> np.ndarray:
    with np.load(path) as data:
        version = int(data["layout_version"])
        if version != LAYOUT_VERSION:
            raise LengthMismatch(
                f"feature cache layout version {version} != {LAYOUT_VERSION}"
            )
        matrix = data["features"]
    if matrix.ndim != 2 or matrix.shape[1] != NUM_FEATURES:
        raise LengthMismatch(f"feature cache has shape {matrix.shape}")
    return matrix

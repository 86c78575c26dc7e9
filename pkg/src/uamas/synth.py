"""Synthetic surrogate for the hydraulic-rig dataset, in the same file format.

The real rig data is a separate download; this generator produces a
stand-in with the same 17 channels, native sampling rates, label columns
and label value sets, so the whole pipeline (loading, features, training,
agents, dashboard) can run self-contained. Condition labels drive channel
means, waveform harmonics, decay slopes and transient bursts; per-cycle
random offsets control how separable each task is. It makes no attempt to
be physically accurate.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import CHANNELS, CYCLE_SECONDS, LABEL_FILE

# Raw label value sets, matching the published rig conventions.
COOLER_VALUES = (3, 20, 100)  # cooling effectiveness, percent
VALVE_VALUES = (73, 80, 90, 100)  # switching behaviour, percent
PUMP_VALUES = (0, 1, 2)  # internal leakage severity
ACCUMULATOR_VALUES = (90, 100, 115, 130)  # pre-charge pressure, bar
STABLE_VALUES = (0, 1)  # 1 = instability transients injected

_LABEL_CHOICES = (
    (COOLER_VALUES, (1 / 3, 1 / 3, 1 / 3)),
    (VALVE_VALUES, (0.25, 0.25, 0.25, 0.25)),
    (PUMP_VALUES, (0.4, 0.35, 0.25)),
    (ACCUMULATOR_VALUES, (0.25, 0.25, 0.25, 0.25)),
    (STABLE_VALUES, (0.6, 0.4)),
)

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class _CycleState:
    """Latent per-cycle quantities derived from the drawn labels."""

    eff: float  # cooler effectiveness in [0, 1]
    vf: float  # valve responsiveness in [0, 1]
    leak: int  # pump leakage level 0..2
    decay: float  # accumulator pressure-loss factor in [0, 1]
    unstable: bool
    burst_center: float  # seconds; transient location when unstable


def _wave(t: np.ndarray, cycles_per_window: float, phase: float = 0.0) -> np.ndarray:
    return np.sin(_TWO_PI * (cycles_per_window * t / CYCLE_SECONDS + phase))


def _burst(t: np.ndarray, center: float) -> np.ndarray:
    return np.exp(-(((t - center) / 3.0) ** 2))


def _draw_labels(n: int, rng: np.random.Generator) -> np.ndarray:
    cols = []
    for values, probs in _LABEL_CHOICES:
        cols.append(rng.choice(values, size=n, p=probs))
    return np.stack(cols, axis=1).astype(np.int64)


def _state(labels: np.ndarray, rng: np.random.Generator) -> _CycleState:
    cooler, valve, pump, acc, stable = (int(v) for v in labels)
    return _CycleState(
        eff=(cooler / 100.0) ** 0.5,
        vf=valve / 100.0,
        leak=pump,
        decay=(130 - acc) / 40.0,
        unstable=stable == 1,
        burst_center=float(rng.uniform(12.0, 45.0)),
    )


def _channel_signal(
    channel_id: str, st: _CycleState, t: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """One cycle of one channel at its native rate, noise included."""
    n = t.size
    off = rng.normal  # cycle-level offsets: one draw, shared by all samples
    burst = _burst(t, st.burst_center) if st.unstable else 0.0
    ramp = t / CYCLE_SECONDS

    if channel_id == "PS1":
        base = (
            160.0
            + 9.0 * _wave(t, 1)
            + 6.0 * (1.0 - st.vf) * _wave(t, 2)
            + 0.8 * st.leak * _wave(t, 5)
            + 1.4 * st.eff
            + off(0, 0.5)
        )
        noise = rng.normal(0, 0.8, n)
        if st.unstable:
            base = base + 1.0 * burst * _wave(t, 7)
        return base + noise
    if channel_id == "PS2":
        base = (
            152.0
            + 7.0 * _wave(t, 1, phase=0.1)
            + 4.6 * (1.0 - st.vf) * _wave(t, 3)
            + 0.5 * st.leak
            + 1.0 * st.eff
            + off(0, 0.5)
        )
        noise = rng.normal(0, 0.8, n)
        if st.unstable:
            base = base + 0.85 * burst * _wave(t, 6)
        return base + noise
    if channel_id == "PS3":
        # Strongest cooler coupling among the pressure channels.
        base = 145.0 + 5.0 * _wave(t, 1, phase=0.2) + 3.6 * st.eff + off(0, 0.4)
        if st.unstable:
            base = base + 0.7 * burst * _wave(t, 8)
        return base + rng.normal(0, 0.6, n)
    if channel_id in ("PS4", "PS5", "PS6"):
        scale = {"PS4": 3.0, "PS5": 2.4, "PS6": 2.0}[channel_id]
        level = {"PS4": 135.0, "PS5": 130.0, "PS6": 125.0}[channel_id]
        eff_gain = {"PS4": 0.8, "PS5": 0.7, "PS6": 0.6}[channel_id]
        slope = scale * st.decay + off(0, 0.5)
        base = (
            level
            - slope * ramp
            + 3.0 * _wave(t, 1, phase=0.3)
            + eff_gain * st.eff
            + off(0, 0.3)
        )
        if st.unstable:
            base = base + 0.55 * burst * _wave(t, 9)
        return base + rng.normal(0, 0.7, n)
    if channel_id == "EPS1":
        base = (
            2400.0
            + 38.0 * st.leak
            + 110.0 * (1.0 - st.vf)
            + 25.0 * st.eff
            + 40.0 * _wave(t, 1)
            + off(0, 25.0)
        )
        return base + rng.normal(0, 15.0, n)
    if channel_id == "FS1":
        base = 6.0 + 7.0 * st.vf - 0.85 * st.leak + 0.8 * _wave(t, 1) + off(0, 0.22)
        return base + rng.normal(0, 0.3, n)
    if channel_id == "FS2":
        base = 9.0 + 3.6 * st.vf - 0.25 * st.leak + 0.5 * _wave(t, 1) + off(0, 0.2)
        return base + rng.normal(0, 0.25, n)
    if channel_id in ("TS1", "TS2", "TS3", "TS4"):
        level = {"TS1": 46.0, "TS2": 48.0, "TS3": 44.0, "TS4": 42.0}[channel_id]
        gain = {"TS1": 20.0, "TS2": 21.0, "TS3": 19.0, "TS4": 18.0}[channel_id]
        base = level - gain * st.eff + 0.8 * ramp + off(0, 0.45)
        return base + rng.normal(0, 0.15, n)
    if channel_id == "VS1":
        base = 0.55 + 0.09 * st.leak + 0.04 * st.eff + off(0, 0.07)
        if st.unstable:
            base = base + 0.035 + 0.08 * burst
        return base + rng.normal(0, 0.05, n)
    if channel_id == "CE":
        base = 19.0 + 48.0 * st.eff + off(0, 1.2)
        return base + rng.normal(0, 1.0, n)
    if channel_id == "CP":
        base = 1.1 + 2.6 * st.eff + off(0, 0.07)
        return base + rng.normal(0, 0.05, n)
    if channel_id == "SE":
        base = 55.0 + 15.0 * st.vf - 2.4 * st.leak + 3.0 * st.eff + off(0, 0.8)
        return base + rng.normal(0, 0.6, n)
    raise KeyError(channel_id)


def generate_raw(num_cycles: int, seed: int) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Labels (n, 5) and per-channel native-rate matrices for n cycles."""
    rng = np.random.default_rng(np.random.SeedSequence((0x53594E54, seed)))
    labels = _draw_labels(num_cycles, rng)
    grids = {
        rate: np.arange(rate * CYCLE_SECONDS, dtype=np.float64) / rate
        for rate in {c.native_rate for c in CHANNELS}
    }
    matrices = {
        c.id: np.empty((num_cycles, c.samples_per_cycle)) for c in CHANNELS
    }
    for i in range(num_cycles):
        st = _state(labels[i], rng)
        for channel in CHANNELS:
            matrices[channel.id][i] = _channel_signal(
                channel.id, st, grids[channel.native_rate], rng
            )
    return labels, matrices


def write_dataset(root: Path | str, num_cycles: int, seed: int) -> Path:
    """Generate and write the surrogate dataset files under ``root``."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    labels, matrices = generate_raw(num_cycles, seed)
    np.savetxt(root / LABEL_FILE, labels, fmt="%d", delimiter="\t")
    for channel in CHANNELS:
        np.savetxt(root / f"{channel.id}.txt", matrices[channel.id], fmt="%.4f", delimiter="\t")
    return root

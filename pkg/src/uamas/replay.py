"""Timed replay of loaded cycles as a per-channel sensor stream."""

from __future__ import annotations

import threading
import time
from typing import Callable, Sequence

from .dataset import CHANNEL_ORDER, CYCLE_SECONDS, Cycle

# sink(channel_id, cycle_index, samples) is called once per channel per cycle.
ReplaySink = Callable[[str, int, "np.ndarray"], None]  # noqa: F821


class CycleReplayer:
    """Emits each cycle's 17 channel blocks on a fixed period.

    The cycle period is ``60 s / speed``; ``speed=60`` replays one cycle per
    second. Pause/resume never skips or duplicates a cycle: the position
    only advances when a full cycle has been emitted.
    """

    def __init__(
        self,
        cycles: Sequence[Cycle],
        speed: float,
        sink: ReplaySink,
        *,
        loop: bool = False,
        max_cycles: int | None = None,
    ):
        if speed <= 0:
            raise ValueError("speed must be positive")
        self._cycles = list(cycles)
        self._period = CYCLE_SECONDS / speed
        self._speed = speed
        self._sink = sink
        self._loop = loop
        self._max_cycles = max_cycles
        self._position = 0
        self._emitted = 0
        self._resume = threading.Event()
        self._resume.set()
        self._stop = threading.Event()
        self._done = threading.Event()
        self._thread: threading.Thread | None = None
        self._lock = threading.Lock()

    # -- controls (safe from any thread) --

    def start(self) -> "CycleReplayer":
        if self._thread is not None:
            raise RuntimeError("replay already started")
        self._thread = threading.Thread(target=self._run, name="replay", daemon=True)
        self._thread.start()
        return self

    def pause(self):
        self._resume.clear()

    def resume(self):
        self._resume.set()

    def stop(self):
        self._stop.set()
        self._resume.set()  # unblock a paused loop so it can exit

    def set_speed(self, speed: float):
        if speed <= 0:
            raise ValueError("speed must be positive")
        with self._lock:
            self._speed = speed
            self._period = CYCLE_SECONDS / speed

    @property
    def speed(self) -> float:
        with self._lock:
            return self._speed

    @property
    def position(self) -> int:
        """Index of the next cycle to emit."""
        return self._position

    @property
    def paused(self) -> bool:
        return not self._resume.is_set()

    @property
    def running(self) -> bool:
        return self._thread is not None and not self._done.is_set()

    def wait_done(self, timeout: float | None = None) -> bool:
        return self._done.wait(timeout)

    # -- emission loop --

    def _run(self):
        try:
            next_deadline = time.monotonic()
            while not self._stop.is_set():
                self._resume.wait()
                if self._stop.is_set():
                    break
                if self._position >= len(self._cycles):
                    if not self._loop:
                        break
                    self._position = 0
                if self._max_cycles is not None and self._emitted >= self._max_cycles:
                    break
                cycle = self._cycles[self._position]
                # Stream index stays monotone across loop restarts; it equals
                # the dataset row index until the first wrap-around.
                stream_index = self._emitted
                for channel in CHANNEL_ORDER:
                    self._sink(channel, stream_index, cycle.signals[channel])
                self._position += 1
                self._emitted += 1
                with self._lock:
                    period = self._period
                next_deadline += period
                delay = next_deadline - time.monotonic()
                if delay > 0:
                    if self._stop.wait(delay):
                        break
                else:
                    # Fell behind (slow sink or speed change): re-anchor.
                    next_deadline = time.monotonic()
        finally:
            self._done.set()

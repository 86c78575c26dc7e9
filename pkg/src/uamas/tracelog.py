"""Line-delimited JSON trace of everything flowing through the runtime."""

from __future__ import annotations

import json
import threading
from pathlib import Path

from .runtime import MessageEvent, RuntimeEvent, TopologyEvent


def payload_summary(payload) -> dict:
    """JSON-safe extract of a message payload (duck-typed by field)."""
    summary: dict = {}
    samples = getattr(payload, "samples", None)
    if samples is not None:
        summary["mean"] = float(samples.mean())
        summary["min"] = float(samples.min())
        summary["max"] = float(samples.max())
    mask = getattr(payload, "mask", None)
    if mask is not None:
        summary["reported"] = int(sum(mask))
    prediction = getattr(payload, "prediction", None)
    if prediction is not None:
        summary.update(
            modal_class=int(prediction.modal_class),
            class_label=int(getattr(payload, "class_label", -1)),
            certainty=float(prediction.certainty),
            votes=list(prediction.votes),
        )
    entries = getattr(payload, "entries", None)
    if entries is not None:
        summary["entries"] = {
            task.value: {
                "modal_class": v.modal_class,
                "class_label": v.class_label,
                "certainty": v.certainty,
                "verdict": v.verdict,
                "threshold": v.threshold,
            }
            for task, v in entries.items()
        }
    if isinstance(payload, dict) and "action" in payload:
        summary["action"] = str(payload["action"])
    return summary


def runtime_event_record(event: RuntimeEvent) -> dict:
    """Flatten a runtime event into a JSON-safe dict."""
    if isinstance(event, MessageEvent):
        msg = event.message
        record = {
            "event": "message",
            "kind": msg.kind.value,
            "source": msg.source.name,
            "source_role": msg.source.role.value,
            "target": event.target.name,
            "seq": msg.seq,
            "timestamp_ms": msg.timestamp_ms,
            "payload": payload_summary(msg.payload),
        }
        cycle = getattr(msg.payload, "cycle_index", None)
        if cycle is not None:
            record["cycle_index"] = int(cycle)
        task = getattr(msg.payload, "task", None)
        if task is not None:
            record["task"] = getattr(task, "value", str(task))
        channel = getattr(msg.payload, "channel", None)
        if channel is not None:
            record["channel"] = channel
        return record
    if isinstance(event, TopologyEvent):
        return {
            "event": "topology_change",
            "change": event.change,
            "agent": event.agent.name if event.agent else None,
            "nodes": sorted(
                ({"name": n.name, "role": n.role.value} for n in event.topology.nodes),
                key=lambda d: d["name"],
            ),
            "edges": sorted(
                [p.name, c.name] for (p, c) in event.topology.edges
            ),
        }
    raise TypeError(f"unknown runtime event {event!r}")


class TraceLog:
    """Appends one JSON object per line; ends with a shutdown marker."""

    def __init__(self, path: Path | str):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w")
        self._lock = threading.Lock()
        self._closed = False

    def emit(self, record: dict) -> None:
        line = json.dumps(record, sort_keys=True)
        with self._lock:
            if self._closed:
                return
            self._fh.write(line + "\n")
            self._fh.flush()

    def close(self) -> None:
        with self._lock:
            if self._closed:
                return
            self._fh.write(json.dumps({"event": "shutdown"}) + "\n")
            self._fh.flush()
            self._fh.close()
            self._closed = True


def read_trace(path: Path | str) -> list[dict]:
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records

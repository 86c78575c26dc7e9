"""HTTP + WebSocket facade over a running monitor system.

Endpoints
---------
GET  /api/topology            agent graph with per-node role/state
GET  /api/agents/{name}       one agent's status record (404 if unknown)
GET  /api/snapshot            topology + replay + thresholds + sensor modes
POST /api/threshold           {"task": ..., "value": 0..1}
POST /api/sensors/{channel}   {"mode": Active|Passive|Zeroed|Off, "noise_sigma"?}
POST /api/replay              {"action": start|pause|resume|stop|set_speed, "speed"?}
POST /api/train               {"task": ..., "epochs"?, "seed"?, ...} -> job id
WS   /api/stream?kinds=a,b    server-push StreamEvents (subprotocol
                              "uncertain-mas.v1")

Stream kinds: sensor_sample, prediction, decision, topology_change,
training_progress. Close codes: 4400 = invalid kinds filter (protocol
error), 1013 = consumer too slow, its bounded buffer overflowed.

Access levels are a stub: requests carry an X-Role header (default
"operator"); "viewer" may read but not POST.
"""

from __future__ import annotations

import asyncio
import threading
import uuid
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Header, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from .agents import AGGREGATOR_NAME, MonitorSystem, SENSOR_MODES, SensorMode, UI_NAME
from .dataset import Task
from .errors import UnknownAgent
from .evaluation import train_full_model
from .training import TrainConfig

STREAM_KINDS = (
    "sensor_sample",
    "prediction",
    "decision",
    "topology_change",
    "training_progress",
)
STREAM_SUBPROTOCOL = "uncertain-mas.v1"
CLOSE_INVALID_FILTER = 4400
CLOSE_SLOW_CONSUMER = 1013
STREAM_BUFFER = 512


def stream_event(record: dict) -> dict | None:
    """Map a trace record to a StreamEvent, or None if it is not streamable."""
    event = record.get("event")
    if event == "topology_change":
        return {
            "kind": "topology_change",
            "payload": {
                "change": record["change"],
                "agent": record["agent"],
                "nodes": record["nodes"],
                "edges": record["edges"],
            },
            "cycle_index": None,
            "timestamp_ms": record.get("timestamp_ms"),
        }
    if event == "training_progress":
        return {
            "kind": "training_progress",
            "payload": {k: v for k, v in record.items() if k != "event"},
            "cycle_index": None,
            "timestamp_ms": record.get("timestamp_ms"),
        }
    if event != "message":
        return None
    kind = record["kind"]
    base = {
        "cycle_index": record.get("cycle_index"),
        "timestamp_ms": record["timestamp_ms"],
    }
    if kind == "SensorData" and record["source"] != "_replay" and record["target"] == AGGREGATOR_NAME:
        return {
            "kind": "sensor_sample",
            "payload": {"channel": record.get("channel"), **record.get("payload", {})},
            **base,
        }
    if kind == "Prediction":
        return {
            "kind": "prediction",
            "payload": {"task": record.get("task"), **record.get("payload", {})},
            **base,
        }
    if kind == "Decision" and record["target"] == UI_NAME:
        return {"kind": "decision", "payload": record.get("payload", {}), **base}
    return None


class TrainJobs:
    """One background training job per task; concurrent requests get 409."""

    def __init__(self, monitor: MonitorSystem):
        self._monitor = monitor
        self._lock = threading.Lock()
        self._jobs: dict[Task, dict] = {}

    def start(self, task: Task, overrides: dict) -> dict:
        with self._lock:
            existing = self._jobs.get(task)
            if existing and existing["thread"].is_alive():
                raise JobConflict(existing["job_id"])
            job_id = uuid.uuid4().hex[:12]
            thread = threading.Thread(
                target=self._run, args=(task, overrides, job_id),
                name=f"train-{task.value}", daemon=True,
            )
            self._jobs[task] = {"job_id": job_id, "thread": thread, "state": "running"}
            thread.start()
            return {"job_id": job_id, "task": task.value, "state": "running"}

    def _run(self, task: Task, overrides: dict, job_id: str):
        monitor = self._monitor

        def progress(info: dict):
            monitor.emit_event(
                {
                    "event": "training_progress",
                    "job_id": job_id,
                    "task": task.value,
                    "state": "running",
                    "timestamp_ms": monitor.system.now_ms(),
                    **info,
                }
            )

        try:
            config = TrainConfig(**overrides)
            bundle = train_full_model(monitor.cycles, task, config, progress=progress)
            monitor.deploy(task, bundle)
            state = "done"
        except Exception as exc:  # surfaced on the stream, job marked failed
            state = f"failed: {exc}"
        with self._lock:
            if task in self._jobs and self._jobs[task]["job_id"] == job_id:
                self._jobs[task]["state"] = state
        monitor.emit_event(
            {
                "event": "training_progress",
                "job_id": job_id,
                "task": task.value,
                "state": state,
                "timestamp_ms": monitor.system.now_ms(),
            }
        )


class JobConflict(Exception):
    def __init__(self, job_id: str):
        super().__init__(job_id)
        self.job_id = job_id


def _require_operator(x_role: str):
    # Access-level stub: viewers read, operators change things.
    if x_role == "viewer":
        raise HTTPException(status_code=403, detail="role 'viewer' may not operate controls")


def _parse_task(name: str) -> Task:
    try:
        return Task(name)
    except ValueError:
        raise HTTPException(status_code=404, detail=f"unknown task {name!r}")


def create_app(monitor: MonitorSystem, static_dir: Path | str | None = None) -> FastAPI:
    app = FastAPI(title="uamas control service")
    jobs = TrainJobs(monitor)
    app.state.monitor = monitor

    @app.get("/api/topology")
    def topology():
        return monitor.snapshot()["topology"]

    @app.get("/api/snapshot")
    def snapshot():
        return monitor.snapshot()

    @app.get("/api/agents/{name}")
    def agent_status(name: str):
        try:
            record = monitor.status(name)
        except UnknownAgent:
            raise HTTPException(status_code=404, detail=f"unknown agent {name!r}")
        return {
            "name": record.agent.name,
            "role": record.agent.role.value,
            "state": record.state,
            "mailbox_depth": record.mailbox_depth,
            "last_seq": record.last_seq,
            "handled": record.handled,
            "enqueued": record.enqueued,
            "dropped": record.dropped,
            "errors": record.errors,
            "summary": record.summary,
        }

    @app.post("/api/threshold")
    def set_threshold(body: dict, x_role: str = Header(default="operator")):
        _require_operator(x_role)
        if "task" not in body or "value" not in body:
            raise HTTPException(status_code=400, detail="body needs task and value")
        task = _parse_task(str(body["task"]))
        try:
            value = float(body["value"])
        except (TypeError, ValueError):
            raise HTTPException(status_code=400, detail="value must be a number")
        if not 0.0 <= value <= 1.0:
            raise HTTPException(status_code=400, detail="value must be in [0, 1]")
        monitor.set_threshold(task, value)
        return {"ok": True, "task": task.value, "value": value}

    @app.post("/api/sensors/{channel}")
    def set_sensor(channel: str, body: dict, x_role: str = Header(default="operator")):
        _require_operator(x_role)
        mode_name = body.get("mode")
        if mode_name not in SENSOR_MODES:
            raise HTTPException(
                status_code=400, detail=f"mode must be one of {SENSOR_MODES}"
            )
        sigma = body.get("noise_sigma")
        try:
            mode = SensorMode(mode=mode_name, noise_sigma=sigma)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        try:
            monitor.set_sensor_mode(channel, mode)
        except UnknownAgent:
            raise HTTPException(status_code=404, detail=f"unknown sensor {channel!r}")
        return {"ok": True, "channel": channel, "mode": mode_name}

    @app.post("/api/replay")
    def replay_control(body: dict, x_role: str = Header(default="operator")):
        _require_operator(x_role)
        action = body.get("action")
        if action == "start":
            if monitor.replay is not None and monitor.replay.running:
                raise HTTPException(status_code=409, detail="replay already running")
            monitor.start_replay(max_cycles=body.get("max_cycles"))
        elif action == "pause":
            if monitor.replay is None:
                raise HTTPException(status_code=400, detail="replay not started")
            monitor.replay.pause()
        elif action == "resume":
            if monitor.replay is None:
                raise HTTPException(status_code=400, detail="replay not started")
            monitor.replay.resume()
        elif action == "stop":
            if monitor.replay is not None:
                monitor.replay.stop()
        elif action == "set_speed":
            try:
                speed = float(body.get("speed"))
            except (TypeError, ValueError):
                raise HTTPException(status_code=400, detail="speed must be a number")
            if speed <= 0:
                raise HTTPException(status_code=400, detail="speed must be positive")
            if monitor.replay is not None:
                monitor.replay.set_speed(speed)
            monitor.config.speed = speed
        else:
            raise HTTPException(status_code=400, detail=f"unknown action {action!r}")
        return {"ok": True, "replay": monitor.replay_state()}

    @app.post("/api/train")
    def train(body: dict, x_role: str = Header(default="operator")):
        _require_operator(x_role)
        task = _parse_task(str(body.get("task")))
        overrides: dict[str, Any] = {}
        for key in ("epochs", "seed", "batch_size", "train_mc_samples"):
            if key in body:
                overrides[key] = int(body[key])
        if "learning_rate" in body:
            overrides["learning_rate"] = float(body["learning_rate"])
        try:
            TrainConfig(**overrides)
        except (TypeError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=f"bad config: {exc}")
        try:
            return jobs.start(task, overrides)
        except JobConflict as exc:
            raise HTTPException(
                status_code=409,
                detail=f"training already running for {task.value} (job {exc.job_id})",
            )

    @app.websocket("/api/stream")
    async def stream(ws: WebSocket):
        requested = ws.headers.get("sec-websocket-protocol", "")
        subprotocol = STREAM_SUBPROTOCOL if STREAM_SUBPROTOCOL in requested else None
        await ws.accept(subprotocol=subprotocol)
        raw = ws.query_params.get("kinds", "")
        kinds = {k for k in raw.split(",") if k}
        invalid = kinds - set(STREAM_KINDS)
        if invalid:
            await ws.close(
                code=CLOSE_INVALID_FILTER,
                reason=f"invalid kinds: {','.join(sorted(invalid))}",
            )
            return

        loop = asyncio.get_running_loop()
        queue: asyncio.Queue = asyncio.Queue(maxsize=STREAM_BUFFER)
        state = {"overflow": False}

        def offer(event: dict):
            try:
                queue.put_nowait(event)
            except asyncio.QueueFull:
                state["overflow"] = True

        def listener(record: dict):
            event = stream_event(record)
            if event is None:
                return
            if kinds and event["kind"] not in kinds:
                return
            loop.call_soon_threadsafe(offer, event)

        unsubscribe = monitor.hub.add(listener)
        try:
            while True:
                if state["overflow"]:
                    await ws.close(code=CLOSE_SLOW_CONSUMER, reason="consumer too slow")
                    return
                try:
                    event = await asyncio.wait_for(queue.get(), timeout=1.0)
                except asyncio.TimeoutError:
                    continue
                await ws.send_json(event)
        except WebSocketDisconnect:
            pass
        finally:
            unsubscribe()

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="dashboard")

    return app

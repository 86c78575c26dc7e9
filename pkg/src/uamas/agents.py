"""The six monitoring roles wired into a live pipeline.

Data flow per cycle (all channels replayed at once): every Sensor agent
forwards its block to the Aggregator, which assembles one batch per cycle
(zero-filling channels that never report before its timeout). Each deployed
Predictor turns a batch into an MC prediction; the Decision Maker fuses the
per-task predictions for a cycle into one report with certain/uncertain
verdicts; the User Interface agent keeps the recent reports. The Model
Trainer owns deployment: predictors swap models only between batches.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .bnn import ModelBundle, UncertainPrediction, load_model, predict, prediction_rng
from .dataset import CHANNEL_ORDER, CYCLE_SECONDS, Cycle, Task, TaskSpec
from .errors import InvalidModel, UnknownAgent, UnknownTask
from .features import extract_from_matrix, normalize
from .replay import CycleReplayer
from .runtime import (
    AgentContext,
    AgentMessage,
    AgentSystem,
    MessageKind,
    REPLAY_ID,
    Role,
    StatusRecord,
)
from .tracelog import TraceLog, runtime_event_record

AGGREGATOR_NAME = "aggregator"
TRAINER_NAME = "trainer"
DECISION_MAKER_NAME = "decision-maker"
UI_NAME = "ui"

SENSOR_MODES = ("Active", "Passive", "Zeroed", "Off")
MC_SAMPLES = 50


def predictor_name(task: Task) -> str:
    return f"predictor-{task.value}"


@dataclass(frozen=True)
class SensorMode:
    mode: str = "Active"
    noise_sigma: float | None = None

    def __post_init__(self):
        if self.mode not in SENSOR_MODES:
            raise ValueError(f"unknown sensor mode {self.mode!r}")
        if self.noise_sigma is not None and self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


# -- message payloads ---------------------------------------------------------


@dataclass(frozen=True)
class SensorBlock:
    channel: str
    cycle_index: int
    samples: np.ndarray  # 60 values at 1 Hz


@dataclass(frozen=True)
class BatchPayload:
    cycle_index: int
    matrix: np.ndarray  # (17, 60) in CHANNEL_ORDER
    mask: tuple[bool, ...]  # which channels actually reported

    @property
    def reported(self) -> int:
        return sum(self.mask)


@dataclass(frozen=True)
class PredictionPayload:
    task: Task
    cycle_index: int
    prediction: UncertainPrediction
    class_label: int  # raw label value of the modal class


@dataclass(frozen=True)
class TaskVerdict:
    modal_class: int
    class_label: int
    certainty: float
    verdict: str  # "certain" | "uncertain"
    threshold: float


@dataclass(frozen=True)
class ReportPayload:
    cycle_index: int
    entries: dict  # Task -> TaskVerdict


# -- agent behaviors ----------------------------------------------------------


class SensorBehavior:
    """One physical channel; mode decides whether/what it emits."""

    def __init__(self, channel: str, mode: SensorMode = SensorMode(), noise_seed: int = 0):
        self.channel = channel
        self.mode = mode
        self._rng = np.random.default_rng(
            np.random.SeedSequence((noise_seed, CHANNEL_ORDER.index(channel)))
        )
        self._latest: SensorBlock | None = None
        self.emitted = 0
        self.suppressed = 0

    def __call__(self, ctx: AgentContext, msg: AgentMessage):
        if msg.kind is MessageKind.SENSOR_DATA:
            block: SensorBlock = msg.payload
            self._latest = block
            if self.mode.mode == "Active":
                self._emit(ctx, block)
            elif self.mode.mode == "Zeroed":
                self._emit(ctx, replace(block, samples=np.zeros(CYCLE_SECONDS)))
            else:  # Passive buffers, Off stays silent
                self.suppressed += 1
        elif msg.kind is MessageKind.CONTROL:
            action = msg.payload.get("action")
            if action == "set_mode":
                self.mode = msg.payload["mode"]
                ctx.reply(msg, {"ok": True, "mode": self.mode.mode})
            elif action == "request_data":
                if self.mode.mode == "Passive" and self._latest is not None:
                    self._emit(ctx, self._latest)
                ctx.reply(msg, {"ok": True})
            else:
                ctx.reply(msg, {"ok": False, "error": f"unknown action {action!r}"})

    def _emit(self, ctx: AgentContext, block: SensorBlock):
        samples = block.samples
        if self.mode.noise_sigma:
            samples = samples + self._rng.normal(0, self.mode.noise_sigma, samples.shape)
        ctx.publish(MessageKind.SENSOR_DATA, replace(block, samples=samples))
        self.emitted += 1

    def status_summary(self) -> dict:
        return {
            "channel": self.channel,
            "mode": self.mode.mode,
            "noise_sigma": self.mode.noise_sigma,
            "emitted": self.emitted,
            "suppressed": self.suppressed,
        }


class AggregatorBehavior:
    """Collects one cycle's blocks from all live channels, emits one batch.

    A timeout (default 2x the cycle emission period) bounds the wait; the
    batch then goes out with a partial mask and zero-filled gaps. Blocks for
    already-emitted cycles are dropped and counted.
    """

    def __init__(self, expected: Sequence[str], timeout_s: float):
        self.expected = set(expected)
        self.timeout_s = timeout_s
        self._pending: dict[int, dict[str, np.ndarray]] = {}
        self._emitted: set[int] = set()
        self.batches = 0
        self.late_drops = 0

    def __call__(self, ctx: AgentContext, msg: AgentMessage):
        if msg.kind is MessageKind.SENSOR_DATA:
            block: SensorBlock = msg.payload
            cycle = block.cycle_index
            if cycle in self._emitted:
                self.late_drops += 1
                return
            first_arrival = cycle not in self._pending
            self._pending.setdefault(cycle, {})[block.channel] = block.samples
            if first_arrival:
                ctx.system.schedule(
                    self.timeout_s,
                    lambda: ctx.system.send(
                        ctx.self_id.name,
                        MessageKind.CONTROL,
                        {"action": "flush", "cycle": cycle},
                        source=ctx.self_id,
                    ),
                )
            if self.expected.issubset(self._pending[cycle]):
                self._emit(ctx, cycle)
        elif msg.kind is MessageKind.CONTROL:
            action = msg.payload.get("action")
            if action == "flush":
                cycle = msg.payload["cycle"]
                if cycle not in self._emitted and cycle in self._pending:
                    self._emit(ctx, cycle)
                ctx.reply(msg, {"ok": True})
            elif action == "set_expected":
                self.expected = set(msg.payload["channels"])
                ctx.reply(msg, {"ok": True, "expected": sorted(self.expected)})
            elif action == "set_timeout":
                self.timeout_s = float(msg.payload["timeout_s"])
                ctx.reply(msg, {"ok": True})
            else:
                ctx.reply(msg, {"ok": False, "error": f"unknown action {action!r}"})

    def _emit(self, ctx: AgentContext, cycle: int):
        received = self._pending.pop(cycle)
        matrix = np.zeros((len(CHANNEL_ORDER), CYCLE_SECONDS))
        mask = []
        for i, channel in enumerate(CHANNEL_ORDER):
            if channel in received:
                matrix[i] = received[channel]
                mask.append(True)
            else:
                mask.append(False)  # zero-filled
        self._emitted.add(cycle)
        self.batches += 1
        ctx.publish(
            MessageKind.AGGREGATED_BATCH,
            BatchPayload(cycle_index=cycle, matrix=matrix, mask=tuple(mask)),
        )

    def status_summary(self) -> dict:
        return {
            "expected_channels": sorted(self.expected),
            "pending_cycles": len(self._pending),
            "batches": self.batches,
            "late_drops": self.late_drops,
            "timeout_s": self.timeout_s,
        }


class PredictorBehavior:
    """Runs the deployed model on every batch; silent until a model arrives."""

    def __init__(self, task: Task, bundle: ModelBundle | None = None, T: int = MC_SAMPLES):
        self.task = task
        self.bundle = bundle
        self.T = T
        self.predictions = 0
        self.no_model_drops = 0

    def __call__(self, ctx: AgentContext, msg: AgentMessage):
        if msg.kind is MessageKind.AGGREGATED_BATCH:
            batch: BatchPayload = msg.payload
            bundle = self.bundle  # one reference for the whole batch
            if bundle is None:
                self.no_model_drops += 1
                ctx.send(
                    msg.source.name,
                    MessageKind.STATUS_REPLY,
                    {"error": "NoModelDeployed", "task": self.task.value,
                     "cycle_index": batch.cycle_index},
                )
                return
            features = extract_from_matrix(batch.matrix)
            x = normalize(bundle.normalizer, features)
            rng = prediction_rng(bundle.train_seed, batch.cycle_index)
            pred = predict(bundle.net, x, T=self.T, rng=rng)
            self.predictions += 1
            ctx.publish(
                MessageKind.PREDICTION,
                PredictionPayload(
                    task=self.task,
                    cycle_index=batch.cycle_index,
                    prediction=pred,
                    class_label=bundle.task.classes[pred.modal_class],
                ),
            )
        elif msg.kind is MessageKind.CONTROL:
            action = msg.payload.get("action")
            if action == "deploy":
                bundle: ModelBundle = msg.payload["bundle"]
                validate_bundle(bundle, self.task)
                self.bundle = bundle  # swap between batches, never mid-batch
                ctx.reply(msg, {"ok": True, "train_seed": bundle.train_seed})
            elif action == "undeploy":
                self.bundle = None
                ctx.reply(msg, {"ok": True})
            else:
                ctx.reply(msg, {"ok": False, "error": f"unknown action {action!r}"})

    def status_summary(self) -> dict:
        return {
            "task": self.task.value,
            "model_deployed": self.bundle is not None,
            "train_seed": self.bundle.train_seed if self.bundle else None,
            "predictions": self.predictions,
            "no_model_drops": self.no_model_drops,
            "mc_samples": self.T,
        }


def validate_bundle(bundle: ModelBundle, task: Task) -> None:
    if bundle.net.task is None:
        raise InvalidModel("model carries no task spec")
    if bundle.net.task.task is not task:
        raise InvalidModel(
            f"model is for {bundle.net.task.task.value}, predictor handles {task.value}"
        )
    if bundle.net.num_classes != bundle.net.task.num_classes:
        raise InvalidModel(
            f"model has {bundle.net.num_classes} outputs for "
            f"{bundle.net.task.num_classes} classes"
        )


class DecisionMakerBehavior:
    """Fuses per-task predictions for a cycle into one thresholded report."""

    def __init__(self, thresholds: dict[Task, float], live_tasks: Sequence[Task],
                 timeout_s: float):
        self.thresholds = dict(thresholds)
        self.live_tasks = set(live_tasks)
        self.timeout_s = timeout_s
        self._pending: dict[int, dict[Task, PredictionPayload]] = {}
        self._emitted: set[int] = set()
        self.reports = 0

    def __call__(self, ctx: AgentContext, msg: AgentMessage):
        if msg.kind is MessageKind.PREDICTION:
            payload: PredictionPayload = msg.payload
            cycle = payload.cycle_index
            if cycle in self._emitted:
                return
            first_arrival = cycle not in self._pending
            self._pending.setdefault(cycle, {})[payload.task] = payload
            if first_arrival:
                ctx.system.schedule(
                    self.timeout_s,
                    lambda: ctx.system.send(
                        ctx.self_id.name,
                        MessageKind.CONTROL,
                        {"action": "flush", "cycle": cycle},
                        source=ctx.self_id,
                    ),
                )
            if self.live_tasks.issubset(self._pending[cycle]):
                self._emit(ctx, cycle)
        elif msg.kind is MessageKind.CONTROL:
            action = msg.payload.get("action")
            if action == "flush":
                cycle = msg.payload["cycle"]
                if cycle not in self._emitted and cycle in self._pending:
                    self._emit(ctx, cycle)
                ctx.reply(msg, {"ok": True})
            elif action == "set_threshold":
                task: Task = msg.payload["task"]
                value = float(msg.payload["value"])
                if not 0.0 <= value <= 1.0:
                    raise ValueError(f"threshold {value} outside [0, 1]")
                self.thresholds[task] = value
                ctx.reply(msg, {"ok": True, "task": task.value, "value": value})
            elif action == "set_live_tasks":
                self.live_tasks = set(msg.payload["tasks"])
                ctx.reply(msg, {"ok": True})
            else:
                ctx.reply(msg, {"ok": False, "error": f"unknown action {action!r}"})

    def _emit(self, ctx: AgentContext, cycle: int):
        predictions = self._pending.pop(cycle)
        entries = {}
        for task, payload in sorted(predictions.items(), key=lambda kv: kv[0].value):
            threshold = self.thresholds.get(task, 0.8)
            certainty = payload.prediction.certainty
            entries[task] = TaskVerdict(
                modal_class=payload.prediction.modal_class,
                class_label=payload.class_label,
                certainty=certainty,
                verdict="certain" if certainty >= threshold else "uncertain",
                threshold=threshold,
            )
        self._emitted.add(cycle)
        self.reports += 1
        ctx.publish(MessageKind.DECISION, ReportPayload(cycle_index=cycle, entries=entries))

    def status_summary(self) -> dict:
        return {
            "thresholds": {t.value: v for t, v in sorted(self.thresholds.items(),
                                                         key=lambda kv: kv[0].value)},
            "live_tasks": sorted(t.value for t in self.live_tasks),
            "reports": self.reports,
            "pending_cycles": len(self._pending),
            "timeout_s": self.timeout_s,
        }


class ModelTrainerBehavior:
    """Owns model deployment; forwards validated bundles to predictors."""

    def __init__(self):
        self.deployed: dict[Task, int] = {}  # task -> train seed

    def __call__(self, ctx: AgentContext, msg: AgentMessage):
        if msg.kind is not MessageKind.CONTROL:
            return
        action = msg.payload.get("action")
        if action == "deploy":
            task: Task = msg.payload["task"]
            bundle: ModelBundle = msg.payload["bundle"]
            validate_bundle(bundle, task)
            ack = ctx.system.ask(
                predictor_name(task),
                MessageKind.CONTROL,
                {"action": "deploy", "bundle": bundle},
                source=ctx.self_id,
            )
            self.deployed[task] = bundle.train_seed
            ctx.reply(msg, ack)
        elif action == "undeploy":
            task = msg.payload["task"]
            ctx.system.ask(
                predictor_name(task),
                MessageKind.CONTROL,
                {"action": "undeploy"},
                source=ctx.self_id,
            )
            self.deployed.pop(task, None)
            ctx.reply(msg, {"ok": True})
        else:
            ctx.reply(msg, {"ok": False, "error": f"unknown action {action!r}"})

    def status_summary(self) -> dict:
        return {"deployed": {t.value: s for t, s in self.deployed.items()}}


class UserInterfaceBehavior:
    """Buffers recent reports for operator-facing consumers."""

    def __init__(self, buffer_size: int = 600):
        from collections import deque

        self.recent = deque(maxlen=buffer_size)
        self.reports = 0
        self._lock = threading.Lock()

    def __call__(self, ctx: AgentContext, msg: AgentMessage):
        if msg.kind is MessageKind.DECISION:
            with self._lock:
                self.recent.append(msg.payload)
                self.reports += 1
        elif msg.kind is MessageKind.STATUS_QUERY:
            with self._lock:
                reports = list(self.recent)
            ctx.reply(msg, reports)

    def status_summary(self) -> dict:
        with self._lock:
            last = self.recent[-1].cycle_index if self.recent else None
            return {"reports": self.reports, "last_cycle": last}


# -- orchestration --------------------------------------------------------------


EventListener = Callable[[dict], None]


class EventHub:
    """Fans normalized event dicts out to the trace log and live streams."""

    def __init__(self):
        self._listeners: list[EventListener] = []
        self._lock = threading.Lock()

    def add(self, listener: EventListener) -> Callable[[], None]:
        with self._lock:
            self._listeners.append(listener)

        def remove():
            with self._lock:
                if listener in self._listeners:
                    self._listeners.remove(listener)

        return remove

    def dispatch(self, record: dict) -> None:
        with self._lock:
            listeners = list(self._listeners)
        for listener in listeners:
            try:
                listener(record)
            except Exception:
                pass


@dataclass
class MonitorConfig:
    speed: float = 60.0
    loop: bool = False
    threshold: float = 0.8
    mc_samples: int = MC_SAMPLES
    aggregator_timeout_s: float | None = None  # default: 2x cycle period
    decision_timeout_s: float | None = None
    trace_path: Path | str | None = None
    noise_seed: int = 0
    ui_buffer: int = 600


class MonitorSystem:
    """Builds and drives the full agent graph over a replayed dataset."""

    def __init__(self, cycles: Sequence[Cycle], task_specs: dict[Task, TaskSpec],
                 config: MonitorConfig | None = None):
        self.cycles = list(cycles)
        self.task_specs = task_specs
        self.config = config or MonitorConfig()
        self.system = AgentSystem()
        self.hub = EventHub()
        self.trace: TraceLog | None = None
        self.replay: CycleReplayer | None = None
        self._sensor_modes: dict[str, SensorMode] = {}
        self._built = False

        period = CYCLE_SECONDS / self.config.speed
        self._agg_timeout = (
            self.config.aggregator_timeout_s
            if self.config.aggregator_timeout_s is not None
            else 2.0 * period
        )
        self._dm_timeout = (
            self.config.decision_timeout_s
            if self.config.decision_timeout_s is not None
            else 2.0 * period
        )

    # -- construction --

    def build(self) -> "MonitorSystem":
        if self._built:
            raise RuntimeError("already built")
        self._built = True

        if self.config.trace_path is not None:
            self.trace = TraceLog(self.config.trace_path)
            self.hub.add(self.trace.emit)
        self.system.add_tap(lambda event: self.hub.dispatch(runtime_event_record(event)))

        aggregator = self.system.spawn_agent(
            Role.AGGREGATOR,
            AGGREGATOR_NAME,
            AggregatorBehavior(expected=CHANNEL_ORDER, timeout_s=self._agg_timeout),
        )
        trainer = self.system.spawn_agent(
            Role.MODEL_TRAINER, TRAINER_NAME, ModelTrainerBehavior()
        )
        decision_maker = self.system.spawn_agent(
            Role.DECISION_MAKER,
            DECISION_MAKER_NAME,
            DecisionMakerBehavior(
                thresholds={t: self.config.threshold for t in Task},
                live_tasks=[],
                timeout_s=self._dm_timeout,
            ),
        )
        ui = self.system.spawn_agent(
            Role.USER_INTERFACE, UI_NAME, UserInterfaceBehavior(self.config.ui_buffer)
        )

        for channel in CHANNEL_ORDER:
            self._sensor_modes[channel] = SensorMode()
            sensor = self.system.spawn_agent(
                Role.SENSOR,
                channel,
                SensorBehavior(channel, noise_seed=self.config.noise_seed),
            )
            self.system.subscribe(aggregator, sensor)

        for task in Task:
            predictor = self.system.spawn_agent(
                Role.PREDICTOR,
                predictor_name(task),
                PredictorBehavior(task, T=self.config.mc_samples),
            )
            self.system.subscribe(predictor, aggregator)
            self.system.subscribe(predictor, trainer)
            self.system.subscribe(decision_maker, predictor)

        self.system.subscribe(ui, decision_maker)
        self.system.subscribe(trainer, decision_maker)
        return self

    # -- model management --

    def deploy(self, task: Task, bundle: ModelBundle) -> dict:
        if task not in self.task_specs:
            raise UnknownTask(task.value)
        ack = self.system.ask(
            TRAINER_NAME,
            MessageKind.CONTROL,
            {"action": "deploy", "task": task, "bundle": bundle},
            timeout=30.0,
        )
        self._sync_live_tasks()
        return ack

    def deploy_file(self, task: Task, path: Path | str) -> dict:
        return self.deploy(task, load_model(path))

    def undeploy(self, task: Task) -> None:
        self.system.ask(
            TRAINER_NAME, MessageKind.CONTROL, {"action": "undeploy", "task": task},
            timeout=30.0,
        )
        self._sync_live_tasks()

    def deployed_tasks(self) -> list[Task]:
        summary = self.system.query_status(TRAINER_NAME).summary
        return [Task(v) for v in summary.get("deployed", {})]

    def _sync_live_tasks(self) -> None:
        self.system.ask(
            DECISION_MAKER_NAME,
            MessageKind.CONTROL,
            {"action": "set_live_tasks", "tasks": self.deployed_tasks()},
            timeout=10.0,
        )

    # -- operator controls --

    def set_sensor_mode(self, channel: str, mode: SensorMode) -> dict:
        if channel not in self._sensor_modes:
            raise UnknownAgent(f"no sensor for channel {channel!r}")
        ack = self.system.ask(
            channel, MessageKind.CONTROL, {"action": "set_mode", "mode": mode},
            timeout=10.0,
        )
        self._sensor_modes[channel] = mode
        expected = [
            ch for ch, m in self._sensor_modes.items()
            if m.mode != "Off" and self._sensor_exists(ch)
        ]
        self.system.ask(
            AGGREGATOR_NAME,
            MessageKind.CONTROL,
            {"action": "set_expected", "channels": expected},
            timeout=10.0,
        )
        return ack

    def _sensor_exists(self, channel: str) -> bool:
        try:
            self.system.query_status(channel)
            return True
        except UnknownAgent:
            return False

    def sensor_modes(self) -> dict[str, SensorMode]:
        return dict(self._sensor_modes)

    def set_threshold(self, task: Task, value: float) -> dict:
        return self.system.ask(
            DECISION_MAKER_NAME,
            MessageKind.CONTROL,
            {"action": "set_threshold", "task": task, "value": value},
            timeout=10.0,
        )

    def thresholds(self) -> dict[str, float]:
        return self.system.query_status(DECISION_MAKER_NAME).summary["thresholds"]

    # -- replay --

    def start_replay(self, max_cycles: int | None = None) -> CycleReplayer:
        if self.replay is not None and self.replay.running:
            raise RuntimeError("replay already running")

        def sink(channel: str, stream_index: int, samples: np.ndarray):
            try:
                self.system.send(
                    channel,
                    MessageKind.SENSOR_DATA,
                    SensorBlock(channel=channel, cycle_index=stream_index, samples=samples),
                    source=REPLAY_ID,
                )
            except UnknownAgent:
                pass  # sensor was removed mid-replay

        self.replay = CycleReplayer(
            self.cycles,
            self.config.speed,
            sink,
            loop=self.config.loop,
            max_cycles=max_cycles,
        ).start()
        return self.replay

    def replay_state(self) -> dict:
        if self.replay is None:
            return {"state": "idle", "position": 0, "speed": self.config.speed}
        if self.replay.paused:
            state = "paused"
        elif self.replay.running:
            state = "running"
        else:
            state = "done"
        return {
            "state": state,
            "position": self.replay.position,
            "speed": self.replay.speed,
        }

    # -- introspection --

    def status(self, name: str) -> StatusRecord:
        return self.system.query_status(name)

    def snapshot(self) -> dict:
        """Single-point-in-time view: topology with states, replay, controls."""
        topology = self.system.topology()
        nodes = []
        for node in sorted(topology.nodes, key=lambda n: n.name):
            if node.role is Role.SENSOR and node.name in self._sensor_modes:
                state = self._sensor_modes[node.name].mode
            else:
                state = self.system.query_status(node.name).state
            nodes.append({"name": node.name, "role": node.role.value, "state": state})
        return {
            "topology": {
                "nodes": nodes,
                "edges": sorted([p.name, c.name] for (p, c) in topology.edges),
            },
            "replay": self.replay_state(),
            "thresholds": self.thresholds(),
            "sensor_modes": {
                ch: {"mode": m.mode, "noise_sigma": m.noise_sigma}
                for ch, m in sorted(self._sensor_modes.items())
            },
            "deployed_tasks": sorted(t.value for t in self.deployed_tasks()),
        }

    def recent_reports(self) -> list[ReportPayload]:
        return self.system.ask(UI_NAME, MessageKind.STATUS_QUERY, {}, timeout=10.0)

    def emit_event(self, record: dict) -> None:
        """Publish a non-message event (e.g. training progress) to trace/streams."""
        self.hub.dispatch(record)

    def shutdown(self) -> None:
        if self.replay is not None:
            self.replay.stop()
            self.replay.wait_done(timeout=10)
        self.system.shutdown()
        if self.trace is not None:
            self.trace.close()

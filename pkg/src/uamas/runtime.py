"""Thread-based agent runtime: lifecycle, mailboxes, pub/sub topology.

Each agent runs one daemon thread that consumes its mailbox serially, so a
handler never races with itself. Messages are immutable envelopes; senders
never share mutable state with receivers. Mailboxes are bounded: SensorData
overflows drop the oldest entry (sensor streams are replaceable), all other
kinds block the sender until space frees up.
"""

from __future__ import annotations

import logging
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable

from .errors import DuplicateName, MailboxClosed, UnknownAgent

logger = logging.getLogger(__name__)

DEFAULT_MAILBOX_SIZE = 1024


class Role(Enum):
    SENSOR = "Sensor"
    AGGREGATOR = "Aggregator"
    PREDICTOR = "Predictor"
    MODEL_TRAINER = "ModelTrainer"
    DECISION_MAKER = "DecisionMaker"
    USER_INTERFACE = "UserInterface"


class MessageKind(Enum):
    SENSOR_DATA = "SensorData"
    AGGREGATED_BATCH = "AggregatedBatch"
    PREDICTION = "Prediction"
    DECISION = "Decision"
    CONTROL = "Control"
    STATUS_QUERY = "StatusQuery"
    STATUS_REPLY = "StatusReply"


@dataclass(frozen=True)
class AgentId:
    name: str
    role: Role


# Reserved ids for non-agent senders (operator controls, the replay feed).
SYSTEM_ID = AgentId("_system", Role.USER_INTERFACE)
REPLAY_ID = AgentId("_replay", Role.SENSOR)


class _Reply:
    """Rendezvous slot for ask(); the handler (or the runtime) resolves it."""

    def __init__(self):
        self._event = threading.Event()
        self._value: Any = None
        self._error: Exception | None = None

    @property
    def done(self) -> bool:
        return self._event.is_set()

    def resolve(self, value: Any = None, error: Exception | None = None):
        if not self._event.is_set():
            self._value = value
            self._error = error
            self._event.set()

    def wait(self, timeout: float | None):
        if not self._event.wait(timeout):
            raise TimeoutError("no reply within timeout")
        if self._error is not None:
            raise self._error
        return self._value


@dataclass(frozen=True)
class AgentMessage:
    source: AgentId
    kind: MessageKind
    payload: Any
    seq: int
    timestamp_ms: int
    reply: _Reply | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Topology:
    nodes: frozenset[AgentId]
    edges: frozenset[tuple[AgentId, AgentId]]  # (producer, consumer)


@dataclass(frozen=True)
class StatusRecord:
    agent: AgentId
    state: str  # "Running" | "Stopping"
    mailbox_depth: int
    last_seq: int | None  # seq of the last handled message
    handled: int
    enqueued: int
    dropped: int
    errors: int
    summary: dict


@dataclass(frozen=True)
class MessageEvent:
    """Tap event: a message was enqueued for ``target``."""

    message: AgentMessage
    target: AgentId


@dataclass(frozen=True)
class TopologyEvent:
    """Tap event: the agent graph changed."""

    change: str  # "spawn" | "remove" | "subscribe"
    agent: AgentId | None
    topology: Topology


RuntimeEvent = MessageEvent | TopologyEvent
Tap = Callable[[RuntimeEvent], None]
Behavior = Callable[["AgentContext", AgentMessage], None]


class _Clock:
    """Monotonic clock mapped to wall time once at startup, in milliseconds."""

    def __init__(self):
        self._offset = time.time() - time.monotonic()

    def now_ms(self) -> int:
        return int((time.monotonic() + self._offset) * 1000)


class Mailbox:
    def __init__(self, maxsize: int = DEFAULT_MAILBOX_SIZE):
        self._queue: deque[AgentMessage] = deque()
        self._maxsize = maxsize
        self._lock = threading.Lock()
        self._not_empty = threading.Condition(self._lock)
        self._not_full = threading.Condition(self._lock)
        self._closed = False
        self.enqueued = 0
        self.dropped = 0

    def put(self, msg: AgentMessage) -> None:
        """Enqueue; SensorData drops the oldest on overflow, others block."""
        with self._lock:
            if self._closed:
                raise MailboxClosed("mailbox is closed")
            if msg.kind is MessageKind.SENSOR_DATA:
                if len(self._queue) >= self._maxsize:
                    self._queue.popleft()
                    self.dropped += 1
            else:
                while len(self._queue) >= self._maxsize:
                    self._not_full.wait()
                    if self._closed:
                        raise MailboxClosed("mailbox closed while waiting for space")
            self._queue.append(msg)
            self.enqueued += 1
            self._not_empty.notify()

    def get(self) -> AgentMessage | None:
        """Blocking take; returns None once closed and drained-or-discarded."""
        with self._lock:
            while not self._queue and not self._closed:
                self._not_empty.wait()
            if self._closed:
                return None
            msg = self._queue.popleft()
            self._not_full.notify()
            return msg

    def close(self) -> None:
        """Discard queued messages and wake every waiter."""
        with self._lock:
            self._closed = True
            self._queue.clear()
            self._not_empty.notify_all()
            self._not_full.notify_all()

    @property
    def depth(self) -> int:
        with self._lock:
            return len(self._queue)


class AgentContext:
    """Handler-side API: addressed sends, broadcasts and replies."""

    def __init__(self, system: "AgentSystem", agent_id: AgentId):
        self.system = system
        self.self_id = agent_id

    def send(self, to: str, kind: MessageKind, payload: Any) -> None:
        self.system.send(to, kind, payload, source=self.self_id)

    def publish(self, kind: MessageKind, payload: Any) -> None:
        self.system.publish(self.self_id, kind, payload)

    def reply(self, msg: AgentMessage, value: Any = None) -> None:
        if msg.reply is not None:
            msg.reply.resolve(value)


class _Agent:
    def __init__(self, system: "AgentSystem", agent_id: AgentId, behavior: Behavior,
                 mailbox_size: int):
        self.id = agent_id
        self.behavior = behavior
        self.mailbox = Mailbox(mailbox_size)
        self.context = AgentContext(system, agent_id)
        self.state = "Running"
        self.last_seq: int | None = None
        self.handled = 0
        self.errors = 0
        self.thread = threading.Thread(
            target=self._run, name=f"agent-{agent_id.name}", daemon=True
        )

    def _run(self):
        while True:
            msg = self.mailbox.get()
            if msg is None:
                break
            try:
                self.behavior(self.context, msg)
            except Exception as exc:
                self.errors += 1
                logger.exception("agent %s failed handling %s: %s",
                                 self.id.name, msg.kind.value, exc)
                if msg.reply is not None:
                    msg.reply.resolve(error=exc)
            finally:
                if msg.reply is not None and not msg.reply.done:
                    msg.reply.resolve(None)  # implicit ack after handling
                self.last_seq = msg.seq
                self.handled += 1
        self.state = "Stopped"

    def summary(self) -> dict:
        fn = getattr(self.behavior, "status_summary", None)
        if callable(fn):
            try:
                return dict(fn())
            except Exception:  # summary must never break status queries
                logger.exception("status summary of %s failed", self.id.name)
        return {}


class AgentSystem:
    """Registry + message router for one running system."""

    def __init__(self):
        self._clock = _Clock()
        self._lock = threading.RLock()
        self._agents: dict[str, _Agent] = {}
        self._edges: set[tuple[str, str]] = set()  # (producer, consumer) names
        self._seq_lock = threading.Lock()
        self._seq: dict[tuple[str, str], int] = {}
        self._taps: list[Tap] = []
        self._timers: set[threading.Timer] = set()
        self._shutdown = False

    # -- lifecycle --

    def spawn_agent(self, role: Role, name: str, behavior: Behavior,
                    mailbox_size: int = DEFAULT_MAILBOX_SIZE) -> AgentId:
        agent_id = AgentId(name, role)
        with self._lock:
            if name in self._agents:
                raise DuplicateName(f"agent {name!r} already registered")
            agent = _Agent(self, agent_id, behavior, mailbox_size)
            self._agents[name] = agent
        # Fresh seq counters per lifecycle (remove + re-spawn starts over);
        # cleared before the thread runs so a fast first publish keeps its seq.
        with self._seq_lock:
            for key in [k for k in self._seq if k[0] == name]:
                del self._seq[key]
        agent.thread.start()
        self._emit(TopologyEvent("spawn", agent_id, self.topology()))
        return agent_id

    def remove_agent(self, agent: str | AgentId) -> Topology:
        name = agent.name if isinstance(agent, AgentId) else agent
        with self._lock:
            record = self._agents.pop(name, None)
            if record is None:
                raise UnknownAgent(f"no agent named {name!r}")
            self._edges = {e for e in self._edges if name not in e}
        record.state = "Stopping"
        record.mailbox.close()  # discard queued messages per shutdown policy
        record.thread.join(timeout=5.0)
        topology = self.topology()
        self._emit(TopologyEvent("remove", record.id, topology))
        return topology

    def shutdown(self) -> None:
        self._shutdown = True
        with self._lock:
            timers = list(self._timers)
            self._timers.clear()
        for timer in timers:
            timer.cancel()
        for name in list(self._agents):
            try:
                self.remove_agent(name)
            except UnknownAgent:
                pass

    # -- messaging --

    def _next_seq(self, source: str, kind: MessageKind) -> int:
        with self._seq_lock:
            key = (source, kind.value)
            self._seq[key] = self._seq.get(key, 0) + 1
            return self._seq[key]

    def _resolve(self, agent: str | AgentId) -> _Agent:
        name = agent.name if isinstance(agent, AgentId) else agent
        with self._lock:
            record = self._agents.get(name)
        if record is None:
            raise UnknownAgent(f"no agent named {name!r}")
        return record

    def send(self, to: str | AgentId, kind: MessageKind, payload: Any,
             source: AgentId = SYSTEM_ID, reply: _Reply | None = None) -> None:
        record = self._resolve(to)
        msg = AgentMessage(
            source=source,
            kind=kind,
            payload=payload,
            seq=self._next_seq(source.name, kind),
            timestamp_ms=self._clock.now_ms(),
            reply=reply,
        )
        record.mailbox.put(msg)
        self._emit(MessageEvent(msg, record.id))

    def ask(self, to: str | AgentId, kind: MessageKind, payload: Any,
            timeout: float = 10.0, source: AgentId = SYSTEM_ID) -> Any:
        """Send and wait until the target has handled the message."""
        reply = _Reply()
        self.send(to, kind, payload, source=source, reply=reply)
        return reply.wait(timeout)

    def publish(self, source: AgentId, kind: MessageKind, payload: Any) -> None:
        """Deliver to every subscriber of ``source``; missing targets are
        skipped (they may have been removed concurrently)."""
        with self._lock:
            consumers = [c for (p, c) in self._edges if p == source.name]
        for consumer in consumers:
            try:
                self.send(consumer, kind, payload, source=source)
            except (UnknownAgent, MailboxClosed):
                pass

    # -- topology --

    def subscribe(self, consumer: str | AgentId, producer: str | AgentId) -> Topology:
        consumer_rec = self._resolve(consumer)
        producer_rec = self._resolve(producer)
        if consumer_rec.id == producer_rec.id:
            raise ValueError("self-subscription is not allowed")
        with self._lock:
            self._edges.add((producer_rec.id.name, consumer_rec.id.name))
        topology = self.topology()
        self._emit(TopologyEvent("subscribe", consumer_rec.id, topology))
        return topology

    def topology(self) -> Topology:
        with self._lock:
            nodes = frozenset(a.id for a in self._agents.values())
            by_name = {a.id.name: a.id for a in self._agents.values()}
            edges = frozenset(
                (by_name[p], by_name[c])
                for (p, c) in self._edges
                if p in by_name and c in by_name
            )
        return Topology(nodes=nodes, edges=edges)

    def agent_ids(self, role: Role | None = None) -> list[AgentId]:
        with self._lock:
            ids = [a.id for a in self._agents.values()]
        if role is not None:
            ids = [i for i in ids if i.role is role]
        return sorted(ids, key=lambda i: i.name)

    # -- introspection --

    def query_status(self, agent: str | AgentId) -> StatusRecord:
        record = self._resolve(agent)
        return StatusRecord(
            agent=record.id,
            state=record.state,
            mailbox_depth=record.mailbox.depth,
            last_seq=record.last_seq,
            handled=record.handled,
            enqueued=record.mailbox.enqueued,
            dropped=record.mailbox.dropped,
            errors=record.errors,
            summary=record.summary(),
        )

    # -- taps and timers --

    def add_tap(self, tap: Tap) -> None:
        self._taps.append(tap)

    def _emit(self, event: RuntimeEvent) -> None:
        for tap in self._taps:
            try:
                tap(event)
            except Exception:
                logger.exception("tap failed")

    def schedule(self, delay: float, fn: Callable[[], None]) -> threading.Timer:
        """Run ``fn`` after ``delay`` seconds unless the system shuts down."""
        timer = threading.Timer(delay, self._run_timer, args=(fn,))
        timer.daemon = True
        with self._lock:
            if self._shutdown:
                return timer  # never started
            self._timers.add(timer)
        timer.start()
        return timer

    def _run_timer(self, fn: Callable[[], None]) -> None:
        with self._lock:
            self._timers = {t for t in self._timers if t.is_alive()}
        if self._shutdown:
            return
        try:
            fn()
        except Exception:
            logger.exception("scheduled callback failed")

    def now_ms(self) -> int:
        return self._clock.now_ms()

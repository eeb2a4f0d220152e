"""In-process pub/sub node graph with throughput measurement.

Each node runs on its own worker thread.  Topics carry bounded
per-subscriber FIFO queues: a full queue either blocks the producer
(blocking mode) or sheds its oldest message (drop_oldest mode).
Average FPS is measured from the moment the first frame is enqueued to
the publish of the last message on the sink topic.
"""

from __future__ import annotations

import statistics
import threading
import time
from collections import deque
from configparser import ConfigParser
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .errors import ConfigError, NodeError, ParseError

DEFAULT_CAPACITY = 2
SOURCE_TOPIC = "__source__"

# handler(topic, payload) -> list of (topic, payload) to publish
Handler = Callable[[str, object], list[tuple[str, object]]]


@dataclass
class TopicSpec:
    name: str
    capacity: int = DEFAULT_CAPACITY
    multi_writer: bool = False

    def __post_init__(self):
        if self.capacity < 1:
            raise ConfigError(f"topic {self.name!r}: capacity must be >= 1")


@dataclass
class NodeSpec:
    name: str
    subscribes: list[str] = field(default_factory=list)
    publishes: list[str] = field(default_factory=list)
    handler: Handler | None = None  # None: forward from forward_from
    latency_ms: float = 0.0
    # topic whose messages a default-forward node passes downstream;
    # messages on other subscriptions are consumed silently
    forward_from: str | None = None


@dataclass
class RunReport:
    frames_in: int
    frames_out: int
    wall_time: float
    fps: float
    node_latency: dict[str, tuple[float, float]]  # name -> (p50 ms, p95 ms)
    queue_highwater: dict[str, int]               # topic -> max depth
    dropped: int
    mode: str

    @property
    def frames(self) -> int:
        return self.frames_out


def default_topology() -> tuple[list[TopicSpec], list[NodeSpec]]:
    """Feeder -> detector -> visualizer topology with its four topics."""
    topics = [
        TopicSpec("input_frame"),
        TopicSpec("traffic_sign_detections"),
        TopicSpec("traffic_light_detections"),
        TopicSpec("output_frame"),
    ]
    nodes = [
        NodeSpec("image_feeder", publishes=["input_frame"]),
        NodeSpec("traffic_sign_and_traffic_light_detector",
                 subscribes=["input_frame"],
                 publishes=["traffic_sign_detections",
                            "traffic_light_detections"]),
        NodeSpec("visualizer",
                 subscribes=["traffic_sign_detections",
                             "traffic_light_detections"],
                 publishes=["output_frame"],
                 forward_from="traffic_sign_detections"),
    ]
    return topics, nodes


class Graph:
    """Validated node/topic graph, ready to run."""

    def __init__(self, topics: list[TopicSpec], nodes: list[NodeSpec],
                 sink: str | None = None):
        self.topics = {t.name: t for t in topics}
        if len(self.topics) != len(topics):
            raise ConfigError("duplicate topic name")
        names = [n.name for n in nodes]
        for name in names:
            if names.count(name) > 1:
                raise ConfigError(f"duplicate node name {name!r}")
        self.nodes = list(nodes)
        self._validate()
        subscribed = {t for n in nodes for t in n.subscribes}
        sinks = [t for t in self.topics if t not in subscribed]
        if sink is not None:
            if sink not in self.topics:
                raise ConfigError(f"sink topic {sink!r} not declared")
            self.sink = sink
        elif len(sinks) == 1:
            self.sink = sinks[0]
        else:
            raise ConfigError(
                f"cannot infer sink topic (candidates: {sorted(sinks)})")

    def _validate(self) -> None:
        writers: dict[str, list[str]] = {}
        for n in self.nodes:
            for t in n.subscribes + n.publishes:
                if t not in self.topics:
                    raise ConfigError(f"node {n.name!r}: undeclared topic {t!r}")
            if set(n.subscribes) & set(n.publishes):
                raise ConfigError(f"node {n.name!r} subscribes to its own output")
            for t in n.publishes:
                writers.setdefault(t, []).append(n.name)
            if n.forward_from is not None and n.forward_from not in n.subscribes:
                raise ConfigError(
                    f"node {n.name!r}: forward_from {n.forward_from!r} not subscribed")
        for t, ws in writers.items():
            if len(ws) > 1 and not self.topics[t].multi_writer:
                raise ConfigError(
                    f"topic {t!r} has multiple writers {ws} but is single-writer")
        self._check_acyclic()

    def _check_acyclic(self) -> None:
        succ: dict[str, set[str]] = {n.name: set() for n in self.nodes}
        for u in self.nodes:
            for v in self.nodes:
                if u is not v and set(u.publishes) & set(v.subscribes):
                    succ[u.name].add(v.name)
        state: dict[str, int] = {}  # 1 = on stack, 2 = done

        def visit(name: str) -> None:
            state[name] = 1
            for nxt in succ[name]:
                if state.get(nxt) == 1:
                    raise ConfigError(f"cycle through node {nxt!r}")
                if nxt not in state:
                    visit(nxt)
            state[name] = 2

        for n in self.nodes:
            if n.name not in state:
                visit(n.name)

    def subscribers(self, topic: str) -> list[NodeSpec]:
        return [n for n in self.nodes if topic in n.subscribes]

    def writer_count(self, topic: str) -> int:
        return sum(1 for n in self.nodes if topic in n.publishes)


def parse_graph_config(text: str) -> Graph:
    """Build a graph from key-value sections: [topic X] and [node Y]."""
    parser = ConfigParser()
    try:
        parser.read_string(text)
    except Exception as e:
        raise ParseError(f"bad graph config: {e}") from None
    topics: list[TopicSpec] = []
    nodes: list[NodeSpec] = []
    sink: str | None = None
    for section in parser.sections():
        kind, _, name = section.partition(" ")
        sec = parser[section]
        if kind == "topic" and name:
            topics.append(TopicSpec(
                name,
                capacity=sec.getint("capacity", DEFAULT_CAPACITY),
                multi_writer=sec.getboolean("multi_writer", False),
            ))
        elif kind == "node" and name:
            split = lambda key: [v.strip() for v in sec.get(key, "").split(",")
                                 if v.strip()]
            nodes.append(NodeSpec(
                name,
                subscribes=split("subscribes"),
                publishes=split("publishes"),
                latency_ms=sec.getfloat("latency_ms", 0.0),
                forward_from=sec.get("forward_from", None),
            ))
        elif kind == "graph":
            sink = sec.get("sink", None)
        else:
            raise ConfigError(f"unknown config section {section!r}")
    return Graph(topics, nodes, sink=sink)


def load_graph_config(path: str | Path) -> Graph:
    try:
        text = Path(path).read_text("utf-8")
    except OSError as e:
        raise ParseError(f"cannot read graph config: {e}", path=str(path)) from None
    return parse_graph_config(text)


def build_graph(cfg: str | Path | None = None) -> Graph:
    """Graph from a config file, or the default topology when None."""
    if cfg is None:
        topics, nodes = default_topology()
        return Graph(topics, nodes)
    return load_graph_config(cfg)


_SENTINEL = object()


class _SubQueue:
    """Bounded FIFO between one topic and one subscriber."""

    def __init__(self, topic: str, capacity: int, mode: str, writers: int):
        self.topic = topic
        self.capacity = capacity
        self.mode = mode
        self.items: deque = deque()
        self.cv = threading.Condition()
        self.writers_open = max(writers, 1)
        self.dropped = 0
        self.highwater = 0

    def put(self, item, abort: threading.Event) -> None:
        with self.cv:
            if item is _SENTINEL:
                self.writers_open -= 1
                self.cv.notify_all()
                return
            if self.mode == "blocking":
                while len(self.items) >= self.capacity and not abort.is_set():
                    self.cv.wait(0.05)
                if abort.is_set():
                    return
            elif len(self.items) >= self.capacity:
                self.items.popleft()
                self.dropped += 1
            self.items.append(item)
            self.highwater = max(self.highwater, len(self.items))
            self.cv.notify_all()

    def try_get(self):
        """Non-blocking pop; returns (found, item, closed)."""
        with self.cv:
            if self.items:
                item = self.items.popleft()
                self.cv.notify_all()
                return True, item, False
            return False, None, self.writers_open <= 0


class _NodeWorker:
    def __init__(self, spec: NodeSpec, inputs: list[_SubQueue],
                 publish: Callable[[str, object, threading.Event], None],
                 abort: threading.Event,
                 errors: list[NodeError]):
        self.spec = spec
        self.inputs = inputs
        self.publish = publish
        self.abort = abort
        self.errors = errors
        self.latencies_ms: list[float] = []
        # absolute deadline of the previous simulated-latency frame; kept
        # across frames while the node has backlog so that scheduler
        # oversleep on one frame is repaid by the next instead of
        # accumulating into the measured throughput
        self._pace: float | None = None
        self.thread = threading.Thread(target=self._run, name=spec.name,
                                       daemon=True)

    def _handle(self, topic: str, payload) -> None:
        t0 = time.monotonic()
        if self.spec.latency_ms > 0:
            base = self._pace if self._pace is not None else t0
            deadline = base + self.spec.latency_ms / 1000.0
            self._pace = deadline
            while (remaining := deadline - time.monotonic()) > 0:
                time.sleep(remaining)
        if self.spec.handler is not None:
            outputs = self.spec.handler(topic, payload)
        else:
            forward_from = self.spec.forward_from or (
                self.spec.subscribes[0] if self.spec.subscribes else SOURCE_TOPIC)
            if topic in (forward_from, SOURCE_TOPIC):
                outputs = [(t, payload) for t in self.spec.publishes]
            else:
                outputs = []
        self.latencies_ms.append((time.monotonic() - t0) * 1000.0)
        for out_topic, out_payload in outputs:
            if out_topic not in self.spec.publishes:
                raise NodeError(self.spec.name,
                                f"published to undeclared topic {out_topic!r}")
            self.publish(out_topic, out_payload, self.abort)

    def _run(self) -> None:
        open_queues = list(self.inputs)
        idx = 0
        try:
            while open_queues and not self.abort.is_set():
                progressed = False
                for _ in range(len(open_queues)):
                    q = open_queues[idx % len(open_queues)]
                    idx += 1
                    found, item, closed = q.try_get()
                    if closed:
                        open_queues.remove(q)
                        idx = 0
                        progressed = True
                        break
                    if found:
                        self._handle(q.topic, item)
                        progressed = True
                        break
                if not progressed:
                    # all queues empty but open: the node is input-bound,
                    # so restart latency pacing from the next arrival
                    self._pace = None
                    q = open_queues[0]
                    with q.cv:
                        if not q.items:
                            q.cv.wait(0.002)
            if not self.abort.is_set():
                for topic in self.spec.publishes:
                    self.publish(topic, _SENTINEL, self.abort)
        except NodeError as e:
            self.errors.append(e)
            self.abort.set()
        except Exception as e:  # handler failure surfaces with node name
            self.errors.append(NodeError(self.spec.name, repr(e)))
            self.abort.set()


def run(g: Graph, source: Iterable | Iterator, n_frames: int,
        mode: str = "blocking", warmup: bool = False,
        tap: Callable[[str, int, object], None] | None = None) -> RunReport:
    """Push n_frames from source through the graph and measure throughput.

    tap, when given, observes every (topic, timestamp_ns, payload)
    publish — used for bag recording.
    """
    if mode not in ("blocking", "drop_oldest"):
        raise ConfigError(f"unknown mode {mode!r}")
    if n_frames == 0:
        return RunReport(0, 0, 0.0, 0.0,
                         {n.name: (0.0, 0.0) for n in g.nodes},
                         {t: 0 for t in g.topics}, 0, mode)

    abort = threading.Event()
    errors: list[NodeError] = []
    queues: dict[tuple[str, str], _SubQueue] = {}
    for t in g.topics.values():
        for sub in g.subscribers(t.name):
            queues[(t.name, sub.name)] = _SubQueue(
                t.name, t.capacity, mode, g.writer_count(t.name))

    sink_cv = threading.Condition()
    sink_times: list[float] = []
    sink_writers = [g.writer_count(g.sink)]

    def publish(topic: str, payload, pub_abort: threading.Event) -> None:
        if payload is not _SENTINEL and tap is not None:
            tap(topic, time.monotonic_ns(), payload)
        if topic == g.sink:
            with sink_cv:
                if payload is _SENTINEL:
                    sink_writers[0] -= 1
                else:
                    sink_times.append(time.monotonic())
                sink_cv.notify_all()
        for sub in g.subscribers(topic):
            queues[(topic, sub.name)].put(payload, pub_abort)

    source_nodes = [n for n in g.nodes if not n.subscribes]
    if len(source_nodes) != 1:
        raise ConfigError(
            f"graph needs exactly one source node, found "
            f"{[n.name for n in source_nodes]}")
    src_queue = _SubQueue(SOURCE_TOPIC, DEFAULT_CAPACITY, mode="blocking",
                          writers=1)

    workers = []
    for spec in g.nodes:
        inputs = ([src_queue] if spec in source_nodes
                  else [queues[(t, spec.name)] for t in spec.subscribes])
        workers.append(_NodeWorker(spec, inputs, publish, abort, errors))

    frames_in = 0
    t_start = time.monotonic()
    for w in workers:
        w.thread.start()
    it = iter(source)
    try:
        for _ in range(n_frames):
            try:
                frame = next(it)
            except StopIteration:
                break
            src_queue.put(frame, abort)
            frames_in += 1
            if abort.is_set():
                break
    finally:
        src_queue.put(_SENTINEL, abort)

    # Wait for the sink topic's writer(s) to finish.
    with sink_cv:
        while sink_writers[0] > 0 and not abort.is_set():
            sink_cv.wait(0.05)
    for w in workers:
        w.thread.join(timeout=30.0)
    if errors:
        raise errors[0]

    frames_out = len(sink_times)
    t_end = sink_times[-1] if sink_times else time.monotonic()
    if warmup and frames_out > 10:
        wall = t_end - sink_times[9]
        fps = (frames_out - 10) / wall if wall > 0 else 0.0
    else:
        wall = t_end - t_start
        fps = frames_out / wall if wall > 0 and frames_out else 0.0

    def pct(vals: list[float]) -> tuple[float, float]:
        if not vals:
            return 0.0, 0.0
        if len(vals) == 1:
            return vals[0], vals[0]
        qs = statistics.quantiles(vals, n=20, method="inclusive")
        return qs[9], qs[18]  # p50, p95

    highwater: dict[str, int] = {t: 0 for t in g.topics}
    dropped = 0
    for (topic, _), q in queues.items():
        highwater[topic] = max(highwater[topic], q.highwater)
        dropped += q.dropped
    return RunReport(
        frames_in=frames_in,
        frames_out=frames_out,
        wall_time=t_end - t_start,
        fps=fps,
        node_latency={w.spec.name: pct(w.latencies_ms) for w in workers},
        queue_highwater=highwater,
        dropped=dropped,
        mode=mode,
    )

from __future__ import annotations

import pytest

from roadsense.errors import ConfigError, NodeError
from roadsense.graph import (Graph, NodeSpec, TopicSpec, build_graph,
                             parse_graph_config, run)


def linear_graph(latencies, capacity=2):
    """src -> s1 -> ... -> sink topic chain with given stage latencies."""
    topics = [TopicSpec(f"t{i}", capacity=capacity)
              for i in range(len(latencies))]
    nodes = [NodeSpec("src", publishes=["t0"], latency_ms=latencies[0])]
    for i, lat in enumerate(latencies[1:], start=1):
        nodes.append(NodeSpec(f"s{i}", subscribes=[f"t{i-1}"],
                              publishes=[f"t{i}"], latency_ms=lat))
    return Graph(topics, nodes)


class TestBuildGraph:
    def test_default_topology(self):
        g = build_graph()
        assert [n.name for n in g.nodes] == [
            "image_feeder", "traffic_sign_and_traffic_light_detector",
            "visualizer"]
        assert set(g.topics) == {"input_frame", "traffic_sign_detections",
                                 "traffic_light_detections", "output_frame"}
        assert g.sink == "output_frame"

    def test_undeclared_topic(self):
        with pytest.raises(ConfigError) as exc:
            Graph([TopicSpec("a")],
                  [NodeSpec("n", subscribes=["ghost"], publishes=["a"])])
        assert "ghost" in str(exc.value)

    def test_two_node_cycle(self):
        with pytest.raises(ConfigError):
            Graph([TopicSpec("a"), TopicSpec("b")],
                  [NodeSpec("n1", subscribes=["b"], publishes=["a"]),
                   NodeSpec("n2", subscribes=["a"], publishes=["b"])])

    def test_self_subscription(self):
        with pytest.raises(ConfigError):
            Graph([TopicSpec("a")],
                  [NodeSpec("n", subscribes=["a"], publishes=["a"])])

    def test_duplicate_node_name(self):
        with pytest.raises(ConfigError):
            Graph([TopicSpec("a"), TopicSpec("b"), TopicSpec("c")],
                  [NodeSpec("n", publishes=["a"]),
                   NodeSpec("n", subscribes=["a"], publishes=["b"])])

    def test_single_writer_enforced(self):
        with pytest.raises(ConfigError):
            Graph([TopicSpec("a"), TopicSpec("b")],
                  [NodeSpec("n1", publishes=["a"]),
                   NodeSpec("n2", publishes=["a"])])

    def test_config_text_round(self):
        g = parse_graph_config("""
[topic a]
capacity = 4
[topic b]
[node src]
publishes = a
latency_ms = 2.5
[node worker]
subscribes = a
publishes = b
""")
        assert g.topics["a"].capacity == 4
        assert g.nodes[0].latency_ms == 2.5
        assert g.sink == "b"


class TestRun:
    def test_zero_frames(self):
        g = linear_graph([0, 0])
        report = run(g, iter([]), 0)
        assert report.frames_out == 0
        assert report.fps == 0.0

    def test_blocking_is_lossless(self):
        g = linear_graph([0, 5], capacity=2)
        report = run(g, (i for i in range(100)), 100)
        assert report.frames_in == 100
        assert report.frames_out == 100
        assert report.dropped == 0

    def test_throughput_law(self):
        g = linear_graph([0, 10])
        report = run(g, (i for i in range(200)), 200)
        assert 90 <= report.fps <= 110

    def test_pipelining_gain(self):
        # two 10 ms stages overlap: throughput ~ 1000/10, not 1000/20
        g = linear_graph([0, 10, 10])
        report = run(g, (i for i in range(200)), 200)
        assert report.fps == pytest.approx(100, rel=0.15)

    def test_drop_accounting_exact(self):
        g = linear_graph([1, 10], capacity=2)
        report = run(g, (i for i in range(150)), 150, mode="drop_oldest")
        assert report.dropped > 0
        assert report.frames_in == report.frames_out + report.dropped

    def test_latency_percentiles_reported(self):
        g = linear_graph([0, 10])
        report = run(g, (i for i in range(50)), 50)
        p50, p95 = report.node_latency["s1"]
        assert 9 <= p50 <= 13
        assert p95 >= p50

    def test_source_ends_early(self):
        g = linear_graph([0, 0])
        report = run(g, (i for i in range(30)), 100)
        assert report.frames_in == 30
        assert report.frames_out == 30

    def test_handler_failure_surfaces_node_name(self):
        def bad_handler(topic, payload):
            raise RuntimeError("kaput")

        g = Graph([TopicSpec("a"), TopicSpec("b")],
                  [NodeSpec("src", publishes=["a"]),
                   NodeSpec("worker", subscribes=["a"], publishes=["b"],
                            handler=bad_handler)])
        with pytest.raises(NodeError) as exc:
            run(g, (i for i in range(10)), 10)
        assert exc.value.node == "worker"

    def test_default_topology_one_output_per_frame(self):
        g = build_graph()
        report = run(g, (f"f{i}".encode() for i in range(50)), 50)
        assert report.frames_out == 50

    def test_queue_highwater_bounded_by_capacity(self):
        g = linear_graph([0, 5], capacity=3)
        report = run(g, (i for i in range(60)), 60)
        assert 1 <= report.queue_highwater["t0"] <= 3

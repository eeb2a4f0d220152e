from __future__ import annotations

import pytest

from roadsense.bag import BagWriter, read_bag, replay_bag
from roadsense.errors import ReplayError
from roadsense.graph import Graph, NodeSpec, TopicSpec, run


def test_round_trip(tmp_path):
    path = tmp_path / "r.bag"
    frames = [f"frame-{i}".encode() for i in range(100)]
    with BagWriter(path, ["input_frame"]) as w:
        for i, f in enumerate(frames):
            w.write("input_frame", i * 1000, f)
    assert list(replay_bag(path)) == frames


def test_empty_recording(tmp_path):
    path = tmp_path / "e.bag"
    BagWriter(path, ["a"]).close()
    assert list(replay_bag(path)) == []


def test_per_topic_order_preserved(tmp_path):
    path = tmp_path / "i.bag"
    with BagWriter(path, ["a", "b"]) as w:
        for i in range(50):
            w.write("a", i, f"a{i}".encode())
            w.write("b", i, f"b{i}".encode())
    a_payloads = list(replay_bag(path, topic="a"))
    b_payloads = list(replay_bag(path, topic="b"))
    assert a_payloads == [f"a{i}".encode() for i in range(50)]
    assert b_payloads == [f"b{i}".encode() for i in range(50)]


def test_timestamps_and_topics_survive(tmp_path):
    path = tmp_path / "t.bag"
    with BagWriter(path, ["x"]) as w:
        w.write("x", 12345, b"payload")
    recs = list(read_bag(path))
    assert len(recs) == 1
    assert recs[0].topic == "x"
    assert recs[0].timestamp_ns == 12345
    assert recs[0].payload == b"payload"


def test_truncated_raises_with_offset(tmp_path):
    path = tmp_path / "bad.bag"
    with BagWriter(path, ["a"]) as w:
        w.write("a", 1, b"hello")
    data = path.read_bytes()
    path.write_bytes(data[:-3])
    with pytest.raises(ReplayError) as exc:
        list(read_bag(path))
    assert exc.value.offset > 0


def test_bad_magic(tmp_path):
    path = tmp_path / "junk.bag"
    path.write_bytes(b"NOPE rest")
    with pytest.raises(ReplayError):
        list(read_bag(path))


def test_record_during_run_then_replay(tmp_path):
    path = tmp_path / "run.bag"
    g = Graph([TopicSpec("a"), TopicSpec("b")],
              [NodeSpec("src", publishes=["a"]),
               NodeSpec("fwd", subscribes=["a"], publishes=["b"])])
    frames = [f"f{i}".encode() for i in range(40)]
    with BagWriter(path, ["a", "b"]) as w:
        def tap(topic, ts, payload):
            w.write(topic, ts, payload)
        run(g, iter(frames), 40, tap=tap)
    assert list(replay_bag(path, topic="a")) == frames
    assert list(replay_bag(path, topic="b")) == frames

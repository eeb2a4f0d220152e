"""Binary record/replay log for topic messages.

File layout (all integers little-endian):

    magic  b"RSBG"
    u32    topic count
    per topic: u32 name length, name bytes (utf-8); id = table index
    records: u32 topic-id, u64 monotonic-nanos, u32 length, payload

Replay reproduces per-topic message order exactly (records are stored
in publish order).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from .errors import ReplayError

MAGIC = b"RSBG"
_REC = struct.Struct("<IQI")


@dataclass(frozen=True)
class BagRecord:
    topic: str
    timestamp_ns: int
    payload: bytes


class BagWriter:
    """Streams records for a fixed topic set to a file."""

    def __init__(self, path: str | Path, topics: list[str]):
        self.path = Path(path)
        self.topics = list(topics)
        self._ids = {name: i for i, name in enumerate(self.topics)}
        self._fh = open(self.path, "wb")
        self._fh.write(MAGIC)
        self._fh.write(struct.pack("<I", len(self.topics)))
        for name in self.topics:
            raw = name.encode("utf-8")
            self._fh.write(struct.pack("<I", len(raw)))
            self._fh.write(raw)

    def write(self, topic: str, timestamp_ns: int, payload: bytes) -> None:
        self._fh.write(_REC.pack(self._ids[topic], timestamp_ns, len(payload)))
        self._fh.write(payload)

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "BagWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_bag(path: str | Path) -> Iterator[BagRecord]:
    """Yield every record in file (publish) order."""
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ReplayError(f"bad magic {raw[:4]!r}", offset=0)
    pos = 4

    def take(n: int, what: str) -> bytes:
        nonlocal pos
        if pos + n > len(raw):
            raise ReplayError(f"truncated {what}", offset=pos)
        chunk = raw[pos:pos + n]
        pos += n
        return chunk

    (n_topics,) = struct.unpack("<I", take(4, "topic count"))
    topics = []
    for _ in range(n_topics):
        (name_len,) = struct.unpack("<I", take(4, "topic name length"))
        topics.append(take(name_len, "topic name").decode("utf-8"))
    while pos < len(raw):
        topic_id, ts, length = _REC.unpack(take(_REC.size, "record header"))
        if topic_id >= len(topics):
            raise ReplayError(f"unknown topic id {topic_id}", offset=pos - _REC.size)
        payload = take(length, "record payload")
        yield BagRecord(topics[topic_id], ts, payload)


def replay_bag(path: str | Path, topic: str | None = None) -> Iterator[bytes]:
    """Payload iterator, optionally restricted to one topic."""
    for rec in read_bag(path):
        if topic is None or rec.topic == topic:
            yield rec.payload

"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class RoadsenseError(Exception):
    """Base class for all toolkit errors."""


class UnknownLabel(RoadsenseError):
    """A class code not present in the taxonomy registry."""

    def __init__(self, label: str):
        super().__init__(f"unknown class code: {label!r}")
        self.label = label


class ParseError(RoadsenseError):
    """Malformed input file (XML, manifest, prediction JSONL, config)."""

    def __init__(self, message: str, *, offset: int | None = None,
                 line: int | None = None, path: str | None = None):
        loc = []
        if path is not None:
            loc.append(path)
        if line is not None:
            loc.append(f"line {line}")
        if offset is not None:
            loc.append(f"byte {offset}")
        prefix = f"[{': '.join(loc)}] " if loc else ""
        super().__init__(prefix + message)
        self.offset = offset
        self.line = line
        self.path = path


class BoundsError(RoadsenseError):
    """A bounding box is degenerate or outside its image."""

    def __init__(self, message: str, *, index: int | None = None):
        if index is not None:
            message = f"object {index}: {message}"
        super().__init__(message)
        self.index = index


class ConfigError(RoadsenseError):
    """Invalid graph or pipeline configuration."""


class BackendError(RoadsenseError):
    """A detector or classifier backend failed."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


class NodeError(RoadsenseError):
    """A graph node handler failed during a run."""

    def __init__(self, node: str, message: str):
        super().__init__(f"node {node!r}: {message}")
        self.node = node


class GenerationError(RoadsenseError):
    """Synthetic data generation could not satisfy its constraints."""


class ReplayError(RoadsenseError):
    """A bag recording is truncated or corrupt."""

    def __init__(self, message: str, *, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset

"""Canonical registry of traffic-sign and traffic-light classes.

75 classes total: 70 signs and 5 lights, grouped into 8 superclasses.
The registry ships as a versioned TSV data file; codes not attested in
the source material are synthesized as sequential members of their
superclass and flagged provisional.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Iterator

from .errors import RoadsenseError, UnknownLabel

SUPERCLASSES: tuple[str, ...] = (
    "DWS", "MNS", "PHS", "PRS", "SLS", "OSD", "APR", "TLS",
)

SUPERCLASS_NAMES: dict[str, str] = {
    "DWS": "Danger Warning Signs",
    "MNS": "Mandatory Signs",
    "PHS": "Prohibitory Signs",
    "PRS": "Priority Signs",
    "SLS": "Speed Limit Signs",
    "OSD": "Other Signs Useful for Drivers",
    "APR": "Additional Regulatory Signs",
    "TLS": "Traffic Light Signs",
}

# Codes whose prefix is allowed to differ from their superclass.
# RSS-02 has no superclass of its own; it is filed under PRS, the only
# superclass its source table leaves otherwise unused.
_PREFIX_EXCEPTIONS: dict[str, str] = {"RSS-02": "PRS"}

EXPECTED_TOTAL = 75
EXPECTED_LIGHTS = 5


def parse_superclass(s: str) -> str:
    """Validate a superclass code; the enumeration is closed."""
    if s not in SUPERCLASSES:
        raise UnknownLabel(s)
    return s


@dataclass(frozen=True)
class ClassDef:
    code: str
    superclass: str
    kind: str  # "sign" | "light"
    provisional: bool = False


class Taxonomy:
    """Immutable, ordered registry of all 75 classes."""

    def __init__(self, classes: list[ClassDef]):
        self.classes: tuple[ClassDef, ...] = tuple(classes)
        self._by_code: dict[str, ClassDef] = {c.code: c for c in self.classes}
        self._validate()

    def _validate(self) -> None:
        if len(self._by_code) != len(self.classes):
            raise RoadsenseError("registry contains duplicate codes")
        if len(self.classes) != EXPECTED_TOTAL:
            raise RoadsenseError(
                f"registry has {len(self.classes)} classes, expected {EXPECTED_TOTAL}")
        lights = [c for c in self.classes if c.kind == "light"]
        if len(lights) != EXPECTED_LIGHTS:
            raise RoadsenseError(
                f"registry has {len(lights)} light classes, expected {EXPECTED_LIGHTS}")
        for c in self.classes:
            if c.superclass not in SUPERCLASSES:
                raise RoadsenseError(f"{c.code}: unknown superclass {c.superclass}")
            if (c.kind == "light") != (c.superclass == "TLS"):
                raise RoadsenseError(f"{c.code}: kind/superclass mismatch")
            prefix = c.code.split("-", 1)[0]
            expected = _PREFIX_EXCEPTIONS.get(c.code, prefix)
            if c.superclass not in (prefix, expected):
                raise RoadsenseError(
                    f"{c.code}: prefix {prefix} does not match superclass {c.superclass}")

    def __len__(self) -> int:
        return len(self.classes)

    def __iter__(self) -> Iterator[ClassDef]:
        return iter(self.classes)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Taxonomy) and self.classes == other.classes

    def __contains__(self, code: str) -> bool:
        return code in self._by_code

    def lookup(self, code: str) -> ClassDef:
        try:
            return self._by_code[code]
        except KeyError:
            raise UnknownLabel(code) from None

    def superclass_of(self, code: str) -> str:
        """Owning superclass of a registered fine-class code."""
        return self.lookup(code).superclass

    def classes_in(self, superclass: str) -> list[ClassDef]:
        """All classes of one superclass, in registry order."""
        parse_superclass(superclass)
        return [c for c in self.classes if c.superclass == superclass]

    def codes(self) -> list[str]:
        return [c.code for c in self.classes]

    def to_tsv(self) -> str:
        """Serialize back to the registry file format."""
        lines = ["# code\tsuperclass\tkind\tprovisional"]
        for c in self.classes:
            lines.append(
                f"{c.code}\t{c.superclass}\t{c.kind}\t{1 if c.provisional else 0}")
        return "\n".join(lines) + "\n"


def _parse_registry(text: str) -> Taxonomy:
    classes = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise RoadsenseError(f"registry line {lineno}: expected 4 fields")
        code, superclass, kind, provisional = parts
        if kind not in ("sign", "light"):
            raise RoadsenseError(f"registry line {lineno}: bad kind {kind!r}")
        if provisional not in ("0", "1"):
            raise RoadsenseError(f"registry line {lineno}: bad provisional flag")
        classes.append(ClassDef(code, superclass, kind, provisional == "1"))
    return Taxonomy(classes)


def load_taxonomy() -> Taxonomy:
    """Load the embedded 75-class registry."""
    text = resources.files("roadsense.data").joinpath("registry.tsv").read_text("utf-8")
    return _parse_registry(text)

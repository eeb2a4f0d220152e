"""PASCAL VOC-style XML annotations: parsing, serialization, statistics.

Unknown XML elements (pose, truncated, ...) are ignored for forward
compatibility.  Coordinates are 0-based integer pixel corners with
exclusive xmax/ymax.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

from .errors import BoundsError, ParseError, UnknownLabel
from .geometry import BBox
from .taxonomy import SUPERCLASSES, Taxonomy

SPLITS = ("train", "test")


@dataclass(frozen=True)
class GroundTruthObject:
    label: str
    bbox: BBox


@dataclass(frozen=True)
class ImageAnnotation:
    filename: str
    width: int
    height: int
    objects: tuple[GroundTruthObject, ...] = ()

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise BoundsError(f"non-positive image size {self.width}x{self.height}")
        object.__setattr__(self, "objects", tuple(self.objects))


@dataclass
class ManifestEntry:
    path: Path
    split: str


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry] = field(default_factory=list)

    def paths(self, split: str | None = None) -> list[Path]:
        return [e.path for e in self.entries if split is None or e.split == split]


@dataclass
class Violation:
    kind: str  # parse | unknown-label | bounds | duplicate
    path: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.path}: {self.detail}"


@dataclass
class StatsReport:
    """Instance counts shaped like the dataset's superclass table."""

    per_superclass: dict[str, tuple[int, int]]  # sc -> (train, test)
    per_class: dict[str, tuple[int, int]]       # code -> (train, test)
    images: dict[str, int]                      # split -> image count
    min_instances: int = 0                      # reporting filter applied to per_class

    def superclass_row(self, sc: str) -> tuple[int, int, int]:
        tr, te = self.per_superclass.get(sc, (0, 0))
        return tr, te, tr + te

    @property
    def totals(self) -> tuple[int, int, int]:
        tr = sum(v[0] for v in self.per_superclass.values())
        te = sum(v[1] for v in self.per_superclass.values())
        return tr, te, tr + te


def _require(elem: ET.Element, tag: str) -> ET.Element:
    child = elem.find(tag)
    if child is None:
        raise ParseError(f"missing element <{tag}>")
    return child


def _int_text(elem: ET.Element, tag: str) -> int:
    child = _require(elem, tag)
    try:
        return int((child.text or "").strip())
    except ValueError:
        raise ParseError(f"non-integer <{tag}>: {child.text!r}") from None


def parse_annotation(xml: bytes, t: Taxonomy) -> ImageAnnotation:
    """Parse one VOC XML document into an ImageAnnotation."""
    try:
        root = ET.fromstring(xml)
    except ET.ParseError as e:
        line, col = e.position
        # Byte offset of the failure, recovered from line/column.
        offset = sum(len(ln) + 1 for ln in xml.split(b"\n")[: line - 1]) + col
        raise ParseError(f"malformed XML: {e.msg}", offset=offset, line=line) from None

    filename = (_require(root, "filename").text or "").strip()
    size = _require(root, "size")
    width = _int_text(size, "width")
    height = _int_text(size, "height")
    if width <= 0 or height <= 0:
        raise BoundsError(f"non-positive image size {width}x{height}")

    objects = []
    for index, obj in enumerate(root.iter("object")):
        label = (_require(obj, "name").text or "").strip()
        t.lookup(label)
        bnd = _require(obj, "bndbox")
        xmin = _int_text(bnd, "xmin")
        ymin = _int_text(bnd, "ymin")
        xmax = _int_text(bnd, "xmax")
        ymax = _int_text(bnd, "ymax")
        if xmax <= xmin or ymax <= ymin:
            raise BoundsError(
                f"degenerate box ({xmin},{ymin},{xmax},{ymax})", index=index)
        if xmin < 0 or ymin < 0 or xmax > width or ymax > height:
            raise BoundsError(
                f"box ({xmin},{ymin},{xmax},{ymax}) outside {width}x{height}",
                index=index)
        objects.append(GroundTruthObject(label, BBox(xmin, ymin, xmax, ymax)))
    return ImageAnnotation(filename, width, height, tuple(objects))


def serialize_annotation(a: ImageAnnotation) -> bytes:
    """Emit VOC XML; parse(serialize(a)) == a up to whitespace."""
    root = ET.Element("annotation")
    ET.SubElement(root, "filename").text = a.filename
    size = ET.SubElement(root, "size")
    ET.SubElement(size, "width").text = str(a.width)
    ET.SubElement(size, "height").text = str(a.height)
    ET.SubElement(size, "depth").text = "3"
    for obj in a.objects:
        node = ET.SubElement(root, "object")
        ET.SubElement(node, "name").text = obj.label
        bnd = ET.SubElement(node, "bndbox")
        ET.SubElement(bnd, "xmin").text = str(obj.bbox.xmin)
        ET.SubElement(bnd, "ymin").text = str(obj.bbox.ymin)
        ET.SubElement(bnd, "xmax").text = str(obj.bbox.xmax)
        ET.SubElement(bnd, "ymax").text = str(obj.bbox.ymax)
    ET.indent(root)
    return ET.tostring(root, encoding="utf-8", xml_declaration=True)


def load_manifest(path: str | Path) -> DatasetManifest:
    """Read a manifest file: one `path<TAB>split` line per entry."""
    path = Path(path)
    entries = []
    try:
        text = path.read_text("utf-8")
    except OSError as e:
        raise ParseError(f"cannot read manifest: {e}", path=str(path)) from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError("expected `path<TAB>split`",
                             path=str(path), line=lineno)
        ann_path, split = parts
        if split not in SPLITS:
            raise ParseError(f"unknown split {split!r}",
                             path=str(path), line=lineno)
        resolved = Path(ann_path)
        if not resolved.is_absolute():
            resolved = path.parent / resolved
        entries.append(ManifestEntry(resolved, split))
    return DatasetManifest(entries)


def _load_entry(entry: ManifestEntry, t: Taxonomy) -> ImageAnnotation:
    try:
        xml = entry.path.read_bytes()
    except OSError as e:
        raise ParseError(f"cannot read annotation: {e}", path=str(entry.path)) from None
    try:
        return parse_annotation(xml, t)
    except ParseError as e:
        raise ParseError(str(e), path=str(entry.path)) from None
    except BoundsError as e:
        raise BoundsError(f"{entry.path}: {e}") from None


def iter_annotations(m: DatasetManifest, t: Taxonomy):
    """Yield (entry, annotation) pairs in manifest order."""
    for entry in m.entries:
        yield entry, _load_entry(entry, t)


def dataset_stats(m: DatasetManifest, t: Taxonomy,
                  min_instances: int = 0) -> StatsReport:
    """Per-class and per-superclass instance counts by split.

    min_instances is a reporting filter: fine classes whose total falls
    below it are dropped from the per-class table only.
    """
    split_idx = {"train": 0, "test": 1}
    per_class: dict[str, list[int]] = {}
    per_superclass: dict[str, list[int]] = {}
    images: dict[str, int] = {s: 0 for s in SPLITS}
    for entry, ann in iter_annotations(m, t):
        images[entry.split] += 1
        i = split_idx[entry.split]
        for obj in ann.objects:
            per_class.setdefault(obj.label, [0, 0])[i] += 1
            sc = t.superclass_of(obj.label)
            per_superclass.setdefault(sc, [0, 0])[i] += 1
    classes = {
        code: (tr, te) for code, (tr, te) in per_class.items()
        if tr + te >= min_instances
    }
    return StatsReport(
        per_superclass={sc: (v[0], v[1]) for sc, v in per_superclass.items()},
        per_class=classes,
        images=images,
        min_instances=min_instances,
    )


def validate_dataset(m: DatasetManifest, t: Taxonomy) -> list[Violation]:
    """Collect all dataset violations; empty list means clean."""
    violations: list[Violation] = []
    seen: dict[str, set[str]] = {s: set() for s in SPLITS}
    for entry in m.entries:
        name = entry.path.name
        if name in seen[entry.split]:
            violations.append(Violation(
                "duplicate", str(entry.path), f"repeated in split {entry.split}"))
        seen[entry.split].add(name)
        try:
            _load_entry(entry, t)
        except UnknownLabel as e:
            violations.append(Violation("unknown-label", str(entry.path), str(e)))
        except BoundsError as e:
            violations.append(Violation("bounds", str(entry.path), str(e)))
        except ParseError as e:
            violations.append(Violation("parse", str(entry.path), str(e)))
    return violations

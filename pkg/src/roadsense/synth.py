"""Synthetic frames, annotations and perturbed predictions.

Rendering is deliberately primitive: each object is a solid rectangle
whose color is a hash of its class code, on a gray background.  The
point is analytically known evaluation outcomes, not realism.  All
randomness flows through the in-repo xorshift64* generator, so every
output is a pure function of (spec, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import GenerationError
from .evaluation import MatchTally, Prediction
from .geometry import BBox, Frame, intersection_area, iou, write_ppm
from .rng import Xorshift64Star, fnv1a64
from .taxonomy import Taxonomy
from .voc import (DatasetManifest, GroundTruthObject, ImageAnnotation,
                  ManifestEntry, serialize_annotation)

BACKGROUND = (128, 128, 128)
_MAX_RETRIES = 200


def color_for(label: str) -> tuple[int, int, int]:
    """Deterministic class-code color, distinct from the background."""
    h = fnv1a64(label.encode("utf-8"))
    r, g, b = (h >> 16) & 0xFF, (h >> 8) & 0xFF, h & 0xFF
    if (r, g, b) == BACKGROUND:
        b ^= 0xFF
    return r, g, b


@dataclass
class SceneSpec:
    width: int = 1920
    height: int = 1080
    placements: list[tuple[str, BBox]] | None = None
    n_objects: tuple[int, int] = (1, 8)
    labels: list[str] | None = None  # defaults to the full taxonomy
    disjoint: bool = True
    min_size: int = 20
    max_size: int = 120
    seed: int = 0


@dataclass
class NoiseSpec:
    p_drop: float = 0.0
    jitter: int = 0
    n_fp: int = 0
    fp_disjoint: bool = True

    def __post_init__(self):
        if not 0.0 <= self.p_drop <= 1.0:
            raise ValueError("p_drop outside [0, 1]")
        if self.jitter < 0 or self.n_fp < 0:
            raise ValueError("jitter and n_fp must be non-negative")


def _overlaps_any(b: BBox, others: list[BBox]) -> bool:
    return any(intersection_area(b, o) > 0 for o in others)


def _random_box(rng: Xorshift64Star, width: int, height: int,
                min_size: int, max_size: int) -> BBox:
    w = rng.randint(min_size, min(max_size, width))
    h = rng.randint(min_size, min(max_size, height))
    x = rng.randint(0, width - w)
    y = rng.randint(0, height - h)
    return BBox(x, y, x + w, y + h)


def render_scene(width: int, height: int,
                 objects: list[GroundTruthObject],
                 name: str | None = None) -> Frame:
    arr = np.empty((height, width, 3), dtype=np.uint8)
    arr[:] = BACKGROUND
    for obj in objects:
        b = obj.bbox
        arr[b.ymin:b.ymax, b.xmin:b.xmax] = color_for(obj.label)
    return Frame.from_array(arr, name)


def generate_scene(s: SceneSpec, t: Taxonomy,
                   name: str = "scene.ppm") -> tuple[Frame, ImageAnnotation]:
    """Render one frame plus its exact annotation."""
    if s.placements is not None:
        objects = [GroundTruthObject(label, bbox) for label, bbox in s.placements]
        for obj in objects:
            t.lookup(obj.label)
            b = obj.bbox
            if b.xmin < 0 or b.ymin < 0 or b.xmax > s.width or b.ymax > s.height:
                raise GenerationError(f"placement {b.as_tuple()} out of bounds")
    else:
        rng = Xorshift64Star.substream(s.seed, "scene", name)
        labels = s.labels if s.labels is not None else t.codes()
        n = rng.randint(*s.n_objects)
        boxes: list[BBox] = []
        objects = []
        for _ in range(n):
            for _ in range(_MAX_RETRIES):
                b = _random_box(rng, s.width, s.height, s.min_size, s.max_size)
                if not s.disjoint or not _overlaps_any(b, boxes):
                    break
            else:
                raise GenerationError(
                    f"could not place {n} disjoint objects in {s.width}x{s.height}")
            boxes.append(b)
            objects.append(GroundTruthObject(rng.choice(labels), b))
    frame = render_scene(s.width, s.height, objects, name)
    return frame, ImageAnnotation(name, s.width, s.height, tuple(objects))


def _grid_cells(width: int, height: int, cell: int, margin: int) -> list[BBox]:
    cells = []
    for y in range(0, height - cell + 1, cell):
        for x in range(0, width - cell + 1, cell):
            cells.append(BBox(x + margin, y + margin,
                              x + cell - margin, y + cell - margin))
    return cells


def corpus(targets: dict[str, tuple[int, int]], out_dir: str | Path,
           t: Taxonomy, seed: int = 0,
           image_size: tuple[int, int] = (1920, 1080),
           write_frames: bool = True) -> Path:
    """Write a dataset whose per-superclass statistics equal `targets`.

    targets maps superclass -> (train count, test count).  Objects are
    packed onto a disjoint grid, several per image.  Returns the path
    of the written manifest; frames (PPM) are optional since only the
    annotations matter for statistics.
    """
    out_dir = Path(out_dir)
    ann_dir = out_dir / "annotations"
    frame_dir = out_dir / "frames"
    ann_dir.mkdir(parents=True, exist_ok=True)
    if write_frames:
        frame_dir.mkdir(parents=True, exist_ok=True)

    width, height = image_size
    cell = max(40, min(width, height) // 8)
    cells = _grid_cells(width, height, cell, margin=4)
    if not cells:
        raise GenerationError(f"image size {width}x{height} too small for grid")

    entries: list[ManifestEntry] = []
    for split_i, split in enumerate(("train", "test")):
        rng = Xorshift64Star.substream(seed, "corpus", split)
        labels: list[str] = []
        for sc in sorted(targets):
            count = targets[sc][split_i]
            if count < 0:
                raise GenerationError(f"negative target for {sc}")
            pool = [c.code for c in t.classes_in(sc)]
            labels.extend(rng.choice(pool) for _ in range(count))
        rng.shuffle(labels)

        for img_i in range(0, (len(labels) + len(cells) - 1) // len(cells)):
            chunk = labels[img_i * len(cells):(img_i + 1) * len(cells)]
            name = f"{split}_{img_i:05d}.ppm"
            objects = tuple(
                GroundTruthObject(label, cells[ci])
                for ci, label in enumerate(chunk)
            )
            ann = ImageAnnotation(name, width, height, objects)
            xml_path = ann_dir / f"{split}_{img_i:05d}.xml"
            try:
                xml_path.write_bytes(serialize_annotation(ann))
                if write_frames:
                    write_ppm(render_scene(width, height, list(objects), name),
                              frame_dir / name)
            except OSError as e:
                raise GenerationError(f"cannot write {xml_path}: {e}") from None
            entries.append(ManifestEntry(xml_path, split))

    manifest_path = out_dir / "manifest.tsv"
    lines = [f"{e.path.relative_to(out_dir)}\t{e.split}" for e in entries]
    try:
        manifest_path.write_text("\n".join(lines) + ("\n" if lines else ""))
    except OSError as e:
        raise GenerationError(f"cannot write {manifest_path}: {e}") from None
    return manifest_path


def perturb(ann: ImageAnnotation, n: NoiseSpec, seed: int,
            iou_threshold: float = 0.3) -> tuple[list[Prediction], MatchTally]:
    """Noisy predictions for one annotation plus their exact match tally.

    The tally is forced by construction and is valid whenever the
    ground-truth boxes are pairwise disjoint and fp_disjoint is set:
    each kept prediction retains IoU above the threshold with its own
    source box and at most the threshold with every other, and each
    injected false box is disjoint from all ground truths.
    """
    rng = Xorshift64Star.substream(seed, "perturb", ann.filename)
    gt_boxes = [o.bbox for o in ann.objects]
    preds: list[Prediction] = []
    dropped = 0

    for i, obj in enumerate(ann.objects):
        if rng.random() < n.p_drop:
            dropped += 1
            continue
        b = obj.bbox
        if n.jitter > 0:
            others = gt_boxes[:i] + gt_boxes[i + 1:]
            for _ in range(_MAX_RETRIES):
                j = n.jitter
                coords = (b.xmin + rng.randint(-j, j), b.ymin + rng.randint(-j, j),
                          b.xmax + rng.randint(-j, j), b.ymax + rng.randint(-j, j))
                xmin = max(0, min(coords[0], ann.width - 1))
                ymin = max(0, min(coords[1], ann.height - 1))
                xmax = min(ann.width, max(coords[2], xmin + 1))
                ymax = min(ann.height, max(coords[3], ymin + 1))
                cand = BBox(xmin, ymin, xmax, ymax)
                if iou(cand, b) > iou_threshold and all(
                        iou(cand, o) <= iou_threshold for o in others):
                    b = cand
                    break
            else:
                raise GenerationError(
                    f"jitter {n.jitter} cannot keep box {b.as_tuple()} matchable")
        score = 0.5 + rng.random() / 2
        preds.append(Prediction(ann.filename, obj.label, b, score))

    for _ in range(n.n_fp):
        for _ in range(_MAX_RETRIES):
            b = _random_box(rng, ann.width, ann.height, 10,
                            max(10, min(ann.width, ann.height) // 4))
            if not n.fp_disjoint or not _overlaps_any(b, gt_boxes):
                break
        else:
            raise GenerationError("cannot place disjoint false positive")
        label = rng.choice([o.label for o in ann.objects]) if ann.objects else "DWS-01"
        preds.append(Prediction(ann.filename, label, b, rng.random() * 0.45 + 0.05))

    expected = MatchTally(tp=len(ann.objects) - dropped, fp=n.n_fp, fn=dropped)
    return preds, expected

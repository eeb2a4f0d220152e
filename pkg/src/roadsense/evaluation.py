"""IoU matching and precision/recall/F1 computation.

Matching is greedy one-to-one: predictions are visited in descending
score order (ties broken by higher best-candidate IoU, then input
order) and each claims the unmatched ground truth with maximal IoU,
provided that IoU is strictly greater than the threshold.  Matched
pairs count as true positives, leftover predictions as false positives
and leftover ground truths as false negatives.  Overall metrics are
micro-averaged from the summed tallies.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError
from .geometry import BBox, iou
from .taxonomy import SUPERCLASSES, Taxonomy
from .voc import DatasetManifest, GroundTruthObject, Violation, iter_annotations

DEFAULT_IOU_THRESHOLD = 0.3
GRANULARITIES = ("fine", "superclass")


@dataclass(frozen=True)
class Prediction:
    image: str
    label: str
    bbox: BBox
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")


@dataclass
class MatchTally:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __iadd__(self, other: "MatchTally") -> "MatchTally":
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn
        return self

    def __add__(self, other: "MatchTally") -> "MatchTally":
        return MatchTally(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, MatchTally)
                and (self.tp, self.fp, self.fn) == (other.tp, other.fp, other.fn))


@dataclass(frozen=True)
class MetricsEntry:
    precision: float
    recall: float
    f1: float


@dataclass
class MatchResult:
    tally: MatchTally
    # (prediction index, ground-truth index) pairs, in match order
    pairs: list[tuple[int, int]] = field(default_factory=list)
    unmatched_predictions: list[int] = field(default_factory=list)
    unmatched_ground_truths: list[int] = field(default_factory=list)


@dataclass
class EvalReport:
    per_class: dict[str, MetricsEntry]
    overall: MetricsEntry
    per_class_tally: dict[str, MatchTally]
    overall_tally: MatchTally
    granularity: str
    iou_threshold: float
    violations: list[Violation] = field(default_factory=list)
    filtered_classes: list[str] = field(default_factory=list)


def match_image(gts: list[GroundTruthObject], preds: list[Prediction],
                thr: float = DEFAULT_IOU_THRESHOLD,
                class_aware: bool = True) -> MatchResult:
    """Greedy one-to-one matching of one image's predictions to its GTs."""
    ious = [[iou(p.bbox, g.bbox) for g in gts] for p in preds]

    def candidates(pi: int) -> list[int]:
        return [gi for gi, g in enumerate(gts)
                if not class_aware or g.label == preds[pi].label]

    # Tie-break on the best achievable IoU before any GT is claimed.
    best_iou = [max((ious[pi][gi] for gi in candidates(pi)), default=0.0)
                for pi in range(len(preds))]
    order = sorted(range(len(preds)),
                   key=lambda pi: (-preds[pi].score, -best_iou[pi], pi))

    matched_gt: set[int] = set()
    result = MatchResult(MatchTally())
    for pi in order:
        best, best_gi = 0.0, -1
        for gi in candidates(pi):
            if gi in matched_gt:
                continue
            if ious[pi][gi] > best:
                best, best_gi = ious[pi][gi], gi
        if best_gi >= 0 and best > thr:
            matched_gt.add(best_gi)
            result.pairs.append((pi, best_gi))
        else:
            result.unmatched_predictions.append(pi)
    result.pairs.sort()
    result.unmatched_predictions.sort()
    result.unmatched_ground_truths = [
        gi for gi in range(len(gts)) if gi not in matched_gt]
    result.tally = MatchTally(
        tp=len(result.pairs),
        fp=len(result.unmatched_predictions),
        fn=len(result.unmatched_ground_truths),
    )
    return result


def compute_metrics(t: MatchTally) -> MetricsEntry:
    """precision = TP/(TP+FP), recall = TP/(TP+FN), f1 = harmonic mean.

    Zero denominators yield 0 for the affected metric.
    """
    p = t.tp / (t.tp + t.fp) if t.tp + t.fp else 0.0
    r = t.tp / (t.tp + t.fn) if t.tp + t.fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return MetricsEntry(p, r, f1)


def load_predictions(path: str | Path) -> list[Prediction]:
    """Read a JSON Lines prediction file."""
    path = Path(path)
    try:
        text = path.read_text("utf-8")
    except OSError as e:
        raise ParseError(f"cannot read predictions: {e}", path=str(path)) from None
    preds = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            bbox = BBox(*(int(v) for v in obj["bbox"]))
            preds.append(Prediction(
                image=str(obj["image"]),
                label=str(obj["label"]),
                bbox=bbox,
                score=float(obj["score"]),
            ))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise ParseError(f"bad prediction record: {e}",
                             path=str(path), line=lineno) from None
    return preds


def dump_predictions(preds: list[Prediction]) -> str:
    lines = [
        json.dumps({"image": p.image, "label": p.label,
                    "bbox": list(p.bbox.as_tuple()), "score": p.score})
        for p in preds
    ]
    return "\n".join(lines) + ("\n" if lines else "")


@dataclass
class EvalConfig:
    iou_threshold: float = DEFAULT_IOU_THRESHOLD
    granularity: str = "fine"
    min_instances_filter: int = 0
    score_floor: float = 0.0


def _at_granularity(label: str, granularity: str, t: Taxonomy) -> str:
    if granularity == "superclass":
        return label if label in SUPERCLASSES else t.superclass_of(label)
    return label


def evaluate(gt: DatasetManifest, preds: list[Prediction], t: Taxonomy,
             cfg: EvalConfig | None = None) -> EvalReport:
    """Match predictions against a dataset and aggregate per-class tallies."""
    cfg = cfg or EvalConfig()
    if cfg.granularity not in GRANULARITIES:
        raise ValueError(f"unknown granularity {cfg.granularity!r}")

    by_image: dict[str, list[Prediction]] = {}
    for p in preds:
        if p.score < cfg.score_floor:
            continue
        by_image.setdefault(p.image, []).append(p)

    per_class_tally: dict[str, MatchTally] = {}
    gt_counts: dict[str, int] = {}
    known_images: set[str] = set()
    violations: list[Violation] = []

    for entry, ann in iter_annotations(gt, t):
        known_images.add(ann.filename)
        gts = [GroundTruthObject(_at_granularity(o.label, cfg.granularity, t),
                                 o.bbox)
               for o in ann.objects]
        img_preds = [
            Prediction(p.image, _at_granularity(p.label, cfg.granularity, t),
                       p.bbox, p.score)
            for p in by_image.get(ann.filename, [])
        ]
        for g in gts:
            gt_counts[g.label] = gt_counts.get(g.label, 0) + 1
        result = match_image(gts, img_preds, cfg.iou_threshold, class_aware=True)
        for pi, _ in result.pairs:
            label = img_preds[pi].label
            per_class_tally.setdefault(label, MatchTally()).tp += 1
        for pi in result.unmatched_predictions:
            label = img_preds[pi].label
            per_class_tally.setdefault(label, MatchTally()).fp += 1
        for gi in result.unmatched_ground_truths:
            label = gts[gi].label
            per_class_tally.setdefault(label, MatchTally()).fn += 1

    for p in preds:
        if p.image not in known_images:
            violations.append(Violation(
                "unknown-image", p.image, f"prediction for unlisted image ({p.label})"))

    overall = MatchTally()
    for tally in per_class_tally.values():
        overall += tally

    filtered = sorted(
        label for label in per_class_tally
        if gt_counts.get(label, 0) < cfg.min_instances_filter
    )
    per_class = {
        label: compute_metrics(tally)
        for label, tally in sorted(per_class_tally.items())
        if label not in filtered
    }
    return EvalReport(
        per_class=per_class,
        overall=compute_metrics(overall),
        per_class_tally={k: v for k, v in sorted(per_class_tally.items())
                         if k not in filtered},
        overall_tally=overall,
        granularity=cfg.granularity,
        iou_threshold=cfg.iou_threshold,
        violations=violations,
        filtered_classes=filtered,
    )

"""Two-stage detect-then-classify pipeline with pluggable backends.

Stage 1 consumes a frame resized to 512x512 and emits superclass
bounding boxes in original-frame coordinates; stage 2 classifies a
100x100 crop of each surviving detection into one of the 75 fine
classes.  Trained models are out of scope: the oracle backends below
replay (optionally perturbed) ground truth and are fully deterministic
given a seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

from .errors import BackendError
from .evaluation import Prediction
from .geometry import BBox, Crop, Frame, clamp_bbox, crop_region, iou, resize_frame
from .rng import Xorshift64Star
from .synth import NoiseSpec, _random_box
from .taxonomy import Taxonomy
from .voc import ImageAnnotation

DETECTOR_INPUT = (512, 512)


@dataclass(frozen=True)
class Detection:
    bbox: BBox
    superclass: str
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")


@dataclass(frozen=True)
class ClassPrediction:
    label: str
    confidence: float


@dataclass(frozen=True)
class CropProvenance:
    """Where a crop came from: source frame name and original box."""

    frame_name: str | None
    bbox: BBox


@dataclass(frozen=True)
class LabeledDetection:
    detection: Detection
    classification: ClassPrediction
    consistent: bool  # superclass of fine label == detection superclass


class DetectorBackend(Protocol):
    def infer(self, frame: Frame,
              original_size: tuple[int, int]) -> list[Detection]: ...


class ClassifierBackend(Protocol):
    def infer(self, crop: Crop,
              provenance: CropProvenance | None) -> ClassPrediction: ...


@dataclass
class PipelineResult:
    detections: list[LabeledDetection]
    # indices of detector boxes that had to be clamped to the frame
    clamped: list[int] = field(default_factory=list)

    def to_predictions(self, image: str) -> list[Prediction]:
        return [
            Prediction(image, ld.classification.label,
                       ld.detection.bbox, ld.detection.score)
            for ld in self.detections
        ]


def run_two_stage(d: DetectorBackend, c: ClassifierBackend, f: Frame,
                  t: Taxonomy, score_floor: float = 0.0) -> PipelineResult:
    """Detect, crop, classify.  Stage 2 never touches stage-1 geometry."""
    resized = resize_frame(f, *DETECTOR_INPUT)
    try:
        detections = d.infer(resized, (f.width, f.height))
    except BackendError:
        raise
    except Exception as e:
        raise BackendError("detector", str(e)) from e

    result = PipelineResult([])
    for i, det in enumerate(detections):
        if det.score < score_floor:
            continue
        bbox = det.bbox
        if bbox.xmin < 0 or bbox.ymin < 0 or bbox.xmax > f.width or bbox.ymax > f.height:
            bbox = clamp_bbox(bbox, f.width, f.height)
            det = Detection(bbox, det.superclass, det.score)
            result.clamped.append(i)
        crop = crop_region(f, bbox)
        try:
            cls = c.infer(crop, CropProvenance(f.name, bbox))
        except BackendError:
            raise
        except Exception as e:
            raise BackendError("classifier", str(e)) from e
        consistent = t.superclass_of(cls.label) == det.superclass
        result.detections.append(LabeledDetection(det, cls, consistent))
    return result


class OracleDetector:
    """Replays ground-truth boxes as superclass detections.

    Noise model: each ground truth is dropped with probability p_drop,
    corners are jittered by up to +-jitter pixels, and n_fp false boxes
    are injected per image.  Per-image randomness is derived from
    (seed, frame name), so results are independent of call order.
    """

    def __init__(self, fixtures: dict[str, ImageAnnotation], t: Taxonomy,
                 noise: NoiseSpec | None = None, seed: int = 0):
        self.fixtures = fixtures
        self.taxonomy = t
        self.noise = noise or NoiseSpec()
        self.seed = seed

    def infer(self, frame: Frame,
              original_size: tuple[int, int]) -> list[Detection]:
        if frame.name is None or frame.name not in self.fixtures:
            raise BackendError("detector", f"no fixture for frame {frame.name!r}")
        ann = self.fixtures[frame.name]
        width, height = original_size
        rng = Xorshift64Star.substream(self.seed, "detector", frame.name)
        n = self.noise
        out: list[Detection] = []
        gt_boxes = [o.bbox for o in ann.objects]
        for obj in ann.objects:
            if rng.random() < n.p_drop:
                continue
            b = obj.bbox
            if n.jitter > 0:
                j = n.jitter
                xmin = max(0, min(b.xmin + rng.randint(-j, j), width - 1))
                ymin = max(0, min(b.ymin + rng.randint(-j, j), height - 1))
                xmax = min(width, max(b.xmax + rng.randint(-j, j), xmin + 1))
                ymax = min(height, max(b.ymax + rng.randint(-j, j), ymin + 1))
                b = BBox(xmin, ymin, xmax, ymax)
            out.append(Detection(b, self.taxonomy.superclass_of(obj.label), 1.0))
        for _ in range(n.n_fp):
            for _ in range(200):
                b = _random_box(rng, width, height, 10,
                                max(10, min(width, height) // 4))
                if not n.fp_disjoint or all(
                        iou(b, g) == 0.0 for g in gt_boxes):
                    break
            sc = rng.choice([c.superclass for c in self.taxonomy.classes])
            out.append(Detection(b, sc, 0.5 + rng.random() / 4))
        return out


class OracleClassifier:
    """Returns the true fine label of a crop, flipped at error_rate.

    Needs crop provenance to find the matching ground truth; a wrong
    answer is a uniformly random different label of the same
    superclass.  Per-crop randomness is derived from (seed, frame,
    box), independent of call order.
    """

    def __init__(self, fixtures: dict[str, ImageAnnotation], t: Taxonomy,
                 error_rate: float = 0.0, seed: int = 0):
        if not 0.0 <= error_rate <= 1.0:
            raise ValueError("error_rate outside [0, 1]")
        self.fixtures = fixtures
        self.taxonomy = t
        self.error_rate = error_rate
        self.seed = seed

    def infer(self, crop: Crop,
              provenance: CropProvenance | None) -> ClassPrediction:
        if provenance is None:
            raise BackendError("classifier", "crop without provenance")
        name = provenance.frame_name
        if name is None or name not in self.fixtures:
            raise BackendError("classifier", f"no fixture for frame {name!r}")
        ann = self.fixtures[name]
        if not ann.objects:
            raise BackendError("classifier", f"fixture {name!r} has no objects")
        true = max(ann.objects, key=lambda o: iou(o.bbox, provenance.bbox))
        label = true.label
        rng = Xorshift64Star.substream(
            self.seed, "classifier", name, provenance.bbox.as_tuple())
        if self.error_rate > 0 and rng.random() < self.error_rate:
            sc = self.taxonomy.superclass_of(label)
            siblings = [c.code for c in self.taxonomy.classes_in(sc)
                        if c.code != label]
            if siblings:
                label = rng.choice(siblings)
        return ClassPrediction(label, 1.0)

"""Traffic-sign and traffic-light detection toolkit.

Annotation parsing, taxonomy, IoU/F1 evaluation, a two-stage
detect-then-classify pipeline with pluggable backends, synthetic
fixture generation, and a pub/sub node-graph runtime with throughput
benchmarking.
"""

from .errors import (BackendError, BoundsError, ConfigError, GenerationError,
                     NodeError, ParseError, ReplayError, RoadsenseError,
                     UnknownLabel)
from .evaluation import (EvalConfig, EvalReport, MatchTally, MetricsEntry,
                         Prediction, compute_metrics, evaluate, match_image)
from .geometry import BBox, Crop, Frame, crop_region, horizontal_flip, iou, resize_frame
from .taxonomy import ClassDef, Taxonomy, load_taxonomy
from .voc import (DatasetManifest, GroundTruthObject, ImageAnnotation,
                  StatsReport, dataset_stats, parse_annotation,
                  serialize_annotation, validate_dataset)

__version__ = "0.1.0"

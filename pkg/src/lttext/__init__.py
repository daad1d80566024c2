"""Long-tailed scene text detection benchmarking toolkit.

Polygon geometry, canonical annotation manifests, ICDAR-style evaluation with
Hard/Norm/per-category modes, benchmark construction, joint-dataset merging
and a reference balanced reconstruction loss.
"""

from .annotations import (
    ChallengeCategory,
    DatasetManifest,
    Detection,
    DetectionSet,
    ImageAnnotation,
    Script,
    Split,
    TextInstance,
    dataset_stats,
    validate_manifest,
)
from .evaluation import EvalConfig, EvalMode, evaluate, gap_report, match_image
from .geometry import Polygon, area, intersection_area, iou

__version__ = "0.1.0"

__all__ = [
    "ChallengeCategory", "DatasetManifest", "Detection", "DetectionSet", "EvalConfig", "EvalMode",
    "ImageAnnotation", "Polygon", "Script", "Split", "TextInstance", "area", "dataset_stats",
    "evaluate", "gap_report", "intersection_area", "iou", "match_image", "validate_manifest",
]

"""Long-tailed benchmark construction: detector-assisted filtering and cleaning."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

from .annotations import DatasetManifest, ImageAnnotation, Script, TextInstance
from .geometry import Polygon, iou

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FilterConfig:
    iou_threshold: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 < self.iou_threshold <= 1.0:
            raise ValueError(f"iou_threshold must be in (0, 1], got {self.iou_threshold}")


@dataclass
class FilterOutput:
    images_with_undetected: list[str] = field(default_factory=list)
    undetected: dict[str, list[TextInstance]] = field(default_factory=dict)
    # (image_id, instance index) for each undetected instance, in image order
    indices: dict[str, list[int]] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return bool(self.images_with_undetected)

    @property
    def count(self) -> int:
        return sum(len(v) for v in self.undetected.values())


def joint_predict(detections, image_id: str) -> list[Polygon]:
    """Union of every detector's polygons for one image, in detector order."""
    out: list[Polygon] = []
    for ds in detections:
        out.extend(ds.polygons(image_id))
    return out


def max_iou(preds: Sequence[Polygon], g: Polygon) -> float:
    return max((iou(g, p) for p in preds), default=0.0)


def filter_undetected(detections, manifest: DatasetManifest, cfg: FilterConfig = FilterConfig(),
                      threads: int = 1) -> FilterOutput:
    """Care instances whose best IoU against the union of all detectors stays below t."""
    images = sorted(manifest.images, key=lambda im: im.image_id)

    def one(im) -> list[int]:
        joint = joint_predict(detections, im.image_id)
        return [k for k, g in enumerate(im.instances)
                if g.care and max_iou(joint, g.polygon) < cfg.iou_threshold]

    if threads > 1 and len(images) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            kept_lists = list(pool.map(one, images))
    else:
        kept_lists = [one(im) for im in images]
    out = FilterOutput()
    for im, kept in zip(images, kept_lists):
        if kept:
            out.images_with_undetected.append(im.image_id)
            out.undetected[im.image_id] = [im.instances[k] for k in kept]
            out.indices[im.image_id] = kept
    return out


def filtered_manifest(manifest: DatasetManifest, result: FilterOutput, name: str | None = None) -> DatasetManifest:
    """Images holding undetected instances; those stay care, everything else becomes don't-care."""
    by_id = manifest.by_id()
    images = []
    for image_id in result.images_with_undetected:
        im = by_id[image_id]
        keep = set(result.indices[image_id])
        insts = tuple(t.with_care(k in keep) for k, t in enumerate(im.instances))
        images.append(replace(im, instances=insts))
    return DatasetManifest(name or manifest.name, tuple(images), manifest.split)


# ---------------------------------------------------------------------------
# cleaning

@dataclass
class CleaningReport:
    step: str
    demoted: list[tuple[str, int, str]] = field(default_factory=list)  # image_id, index, reason
    warnings: list[tuple[str, int, str]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "demoted": [{"image_id": i, "instance": k, "reason": r} for i, k, r in self.demoted],
            "warnings": [{"image_id": i, "instance": k, "message": r} for i, k, r in self.warnings],
        }


def is_basic_latin(text: str) -> bool:
    """English letters, digits, ASCII punctuation and space only.

    Accented Latin letters (e.g. U+00C9) fall outside this set on purpose.
    """
    return all(0x20 <= ord(ch) <= 0x7E for ch in text)


def _apply(m: DatasetManifest, step: str, decide) -> tuple[DatasetManifest, CleaningReport]:
    rep = CleaningReport(step)
    images = []
    for im in m.images:
        insts = []
        for k, t in enumerate(im.instances):
            reason = decide(t, im, k, rep)
            if reason and t.care:
                rep.demoted.append((im.image_id, k, reason))
                t = t.with_care(False)
            insts.append(t)
        images.append(replace(im, instances=tuple(insts)))
    return replace(m, images=tuple(images)), rep


def strip_non_latin(m: DatasetManifest) -> tuple[DatasetManifest, CleaningReport]:
    """Demote instances with non-Latin text to don't-care.

    Demoted regions stay in the manifest so they still absorb detections.
    """
    def decide(t: TextInstance, im: ImageAnnotation, k: int, rep: CleaningReport) -> str | None:
        if t.script == Script.NON_LATIN:
            return "script=non_latin"
        if t.transcription is None:
            if t.script == Script.UNKNOWN and t.care:
                rep.warnings.append((im.image_id, k, "no transcription and unknown script; kept"))
            return None
        if t.script in (Script.UNKNOWN, Script.MIXED) and not is_basic_latin(t.transcription):
            bad = next(ch for ch in t.transcription if not 0x20 <= ord(ch) <= 0x7E)
            return f"codepoint U+{ord(bad):04X} outside basic Latin"
        return None

    return _apply(m, "strip_non_latin", decide)


def enforce_word_level(m: DatasetManifest) -> tuple[DatasetManifest, CleaningReport]:
    def decide(t: TextInstance, im: ImageAnnotation, k: int, rep: CleaningReport) -> str | None:
        if not t.word_level:
            return "line-level annotation"
        if t.transcription is not None and " " in t.transcription.strip(" "):
            return "transcription spans several words"
        return None

    return _apply(m, "enforce_word_level", decide)

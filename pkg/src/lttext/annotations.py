"""Ground truth, detections, datasets and challenge labels."""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional

from .errors import GeometryError
from .geometry import Polygon


class ChallengeGroup(enum.Enum):
    INTRA = "intra_instance"
    INTER = "inter_instance"
    BACKGROUND = "background"
    OTHER = "other"


class ChallengeCategory(enum.Enum):
    BLURRED = "blurred"
    ARTISTIC = "artistic"
    GLASS = "glass"
    SINGLE_CHAR = "single_char"
    DISTORTED = "distorted"
    INVERSE = "inverse"
    DELIMITED = "delimited"
    DENSE = "dense"
    OVERLAPPED = "overlapped"
    OCCLUDED = "occluded"
    LOW_CONTRAST = "low_contrast"
    COMPLEX_BACKGROUND = "complex_background"
    OTHERS = "others"

    @property
    def group(self) -> ChallengeGroup:
        return _GROUPS[self]

    @property
    def label(self) -> str:
        return _LABELS[self]

    @classmethod
    def parse(cls, tag: str) -> "ChallengeCategory":
        return cls(tag)


_C = ChallengeCategory
_GROUPS = {
    **{c: ChallengeGroup.INTRA for c in (_C.BLURRED, _C.ARTISTIC, _C.GLASS, _C.SINGLE_CHAR,
                                          _C.DISTORTED, _C.INVERSE, _C.DELIMITED)},
    _C.DENSE: ChallengeGroup.INTER,
    _C.OVERLAPPED: ChallengeGroup.INTER,
    _C.OCCLUDED: ChallengeGroup.BACKGROUND,
    _C.LOW_CONTRAST: ChallengeGroup.BACKGROUND,
    _C.COMPLEX_BACKGROUND: ChallengeGroup.BACKGROUND,
    _C.OTHERS: ChallengeGroup.OTHER,
}
_LABELS = {
    _C.BLURRED: "Blurred", _C.ARTISTIC: "Artistic", _C.GLASS: "Glass",
    _C.SINGLE_CHAR: "Single-Char", _C.DISTORTED: "Distorted", _C.INVERSE: "Inverse",
    _C.DELIMITED: "Delimited", _C.DENSE: "Dense", _C.OVERLAPPED: "Overlapped",
    _C.OCCLUDED: "Occluded", _C.LOW_CONTRAST: "Low-Contrast",
    _C.COMPLEX_BACKGROUND: "Complex-BG", _C.OTHERS: "Others",
}

# Column order of the LTB results table (Inverse precedes Distorted there).
TABLE_ORDER: tuple[ChallengeCategory, ...] = (
    _C.BLURRED, _C.ARTISTIC, _C.GLASS, _C.SINGLE_CHAR, _C.INVERSE, _C.DISTORTED,
    _C.DELIMITED, _C.DENSE, _C.OVERLAPPED, _C.OCCLUDED, _C.LOW_CONTRAST,
    _C.COMPLEX_BACKGROUND, _C.OTHERS,
)


class Script(enum.Enum):
    LATIN = "latin"
    NON_LATIN = "non_latin"
    MIXED = "mixed"
    UNKNOWN = "unknown"


class Split(enum.Enum):
    TRAIN = "train"
    TEST = "test"
    UNSPLIT = "unsplit"


@dataclass(frozen=True)
class TextInstance:
    polygon: Polygon
    care: bool = True
    transcription: Optional[str] = None
    categories: frozenset[ChallengeCategory] = frozenset()
    word_level: bool = True
    script: Script = Script.UNKNOWN

    def __post_init__(self) -> None:
        if not isinstance(self.categories, frozenset):
            object.__setattr__(self, "categories", frozenset(self.categories))
        if self.transcription == "###":
            object.__setattr__(self, "transcription", None)
            object.__setattr__(self, "care", False)

    def with_care(self, care: bool) -> "TextInstance":
        return self if care == self.care else replace(self, care=care)


@dataclass(frozen=True)
class ImageAnnotation:
    image_id: str
    file_name: str
    width: int
    height: int
    source_dataset: str = ""
    instances: tuple[TextInstance, ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.instances, tuple):
            object.__setattr__(self, "instances", tuple(self.instances))

    @property
    def care_instances(self) -> list[TextInstance]:
        return [t for t in self.instances if t.care]


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    images: tuple[ImageAnnotation, ...] = ()
    split: Split = Split.UNSPLIT

    def __post_init__(self) -> None:
        if not isinstance(self.images, tuple):
            object.__setattr__(self, "images", tuple(self.images))

    def by_id(self) -> dict[str, ImageAnnotation]:
        return {im.image_id: im for im in self.images}

    def sorted(self) -> "DatasetManifest":
        return replace(self, images=tuple(sorted(self.images, key=lambda im: im.image_id)))

    def __len__(self) -> int:
        return len(self.images)


@dataclass(frozen=True)
class Detection:
    polygon: Polygon
    score: Optional[float] = None


@dataclass(frozen=True)
class DetectionSet:
    detector_name: str
    per_image: Mapping[str, tuple[Detection, ...]] = field(default_factory=dict)

    def polygons(self, image_id: str) -> list[Polygon]:
        return [d.polygon for d in self.per_image.get(image_id, ())]


# ---------------------------------------------------------------------------
# diagnostics

@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str
    image_id: Optional[str] = None

    def __str__(self) -> str:
        where = f" [{self.image_id}]" if self.image_id else ""
        return f"{self.severity}: {self.code}{where}: {self.message}"


OUT_OF_BOUNDS_FRACTION = 0.05


def validate_manifest(m: DatasetManifest) -> list[Diagnostic]:
    """Collect problems with a manifest; never raises.

    Invalid geometry can only be present when polygons were built with
    ``validate=False`` (lenient parsing keeps them that way).
    """
    out: list[Diagnostic] = []
    seen: Counter[str] = Counter(im.image_id for im in m.images)
    for image_id, n in sorted(seen.items()):
        if n > 1:
            out.append(Diagnostic("error", "duplicate_id", f"image_id occurs {n} times", image_id))
    for im in m.images:
        if im.width <= 0 or im.height <= 0:
            out.append(Diagnostic("error", "bad_dims", f"{im.width}x{im.height}", im.image_id))
            continue
        if not im.instances:
            out.append(Diagnostic("warning", "empty_image", "no text instances", im.image_id))
        mx = OUT_OF_BOUNDS_FRACTION * im.width
        my = OUT_OF_BOUNDS_FRACTION * im.height
        for k, inst in enumerate(im.instances):
            try:
                inst.polygon.check()
            except GeometryError as exc:
                out.append(Diagnostic("error", "invalid_polygon", f"instance {k}: {exc}", im.image_id))
                continue
            x0, y0, x1, y1 = inst.polygon.bounds
            if x0 < -mx or y0 < -my or x1 > im.width + mx or y1 > im.height + my:
                out.append(Diagnostic("warning", "out_of_bounds",
                                      f"instance {k} extends beyond {im.width}x{im.height} by more than 5%",
                                      im.image_id))
    return out


# ---------------------------------------------------------------------------
# statistics

@dataclass
class StatsReport:
    images: int = 0
    care_instances: int = 0
    dontcare_instances: int = 0
    attribute_total: int = 0
    category_images: dict[ChallengeCategory, int] = field(
        default_factory=lambda: {c: 0 for c in ChallengeCategory})
    category_instances: dict[ChallengeCategory, int] = field(
        default_factory=lambda: {c: 0 for c in ChallengeCategory})

    @property
    def mean_attributes(self) -> float:
        return self.attribute_total / self.care_instances if self.care_instances else 0.0

    def __add__(self, other: "StatsReport") -> "StatsReport":
        return StatsReport(
            images=self.images + other.images,
            care_instances=self.care_instances + other.care_instances,
            dontcare_instances=self.dontcare_instances + other.dontcare_instances,
            attribute_total=self.attribute_total + other.attribute_total,
            category_images={c: self.category_images[c] + other.category_images[c] for c in ChallengeCategory},
            category_instances={c: self.category_instances[c] + other.category_instances[c]
                                for c in ChallengeCategory},
        )

    def to_dict(self) -> dict:
        return {
            "images": self.images,
            "care_instances": self.care_instances,
            "dontcare_instances": self.dontcare_instances,
            "attribute_total": self.attribute_total,
            "mean_attributes": self.mean_attributes,
            "categories": {
                c.value: {"images": self.category_images[c], "instances": self.category_instances[c]}
                for c in ChallengeCategory
            },
        }


def dataset_stats(m: DatasetManifest | Iterable[ImageAnnotation]) -> StatsReport:
    """Per-category image/instance counts over care instances.

    An instance carrying several categories is counted once under each.
    """
    images = m.images if isinstance(m, DatasetManifest) else tuple(m)
    rep = StatsReport()
    for im in images:
        rep.images += 1
        present: set[ChallengeCategory] = set()
        for inst in im.instances:
            if not inst.care:
                rep.dontcare_instances += 1
                continue
            rep.care_instances += 1
            rep.attribute_total += len(inst.categories)
            for c in inst.categories:
                rep.category_instances[c] += 1
                present.add(c)
        for c in present:
            rep.category_images[c] += 1
    return rep

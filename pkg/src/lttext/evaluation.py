"""ICDAR-style detection evaluation with Norm, Hard and per-category modes."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from decimal import Decimal
from typing import Iterable, Mapping, Optional, Sequence

from .annotations import (
    TABLE_ORDER,
    ChallengeCategory,
    DatasetManifest,
    DetectionSet,
    Diagnostic,
    ImageAnnotation,
)
from .errors import MissingDiagonal
from .geometry import Polygon, intersection_over_first, iou

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvalMode:
    kind: str = "norm"
    category: Optional[ChallengeCategory] = None

    def __post_init__(self) -> None:
        if self.kind not in ("norm", "hard", "category"):
            raise ValueError(f"unknown mode {self.kind!r}")
        if (self.kind == "category") != (self.category is not None):
            raise ValueError("category mode needs exactly one category")

    @classmethod
    def parse(cls, text: str) -> "EvalMode":
        text = text.strip().lower()
        if text.startswith("category:"):
            return cls("category", ChallengeCategory(text.split(":", 1)[1]))
        return cls(text)

    def __str__(self) -> str:
        return f"category:{self.category.value}" if self.category else self.kind


NORM = EvalMode("norm")
HARD = EvalMode("hard")


def category_mode(c: ChallengeCategory) -> EvalMode:
    return EvalMode("category", c)


@dataclass(frozen=True)
class EvalConfig:
    iou_threshold: float = 0.5
    dontcare_overlap_threshold: float = 0.5
    mode: EvalMode = NORM

    def __post_init__(self) -> None:
        for name in ("iou_threshold", "dontcare_overlap_threshold"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {v}")


def prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def relabel_for_mode(gt: ImageAnnotation, mode: EvalMode) -> ImageAnnotation:
    if mode.kind == "norm":
        return gt
    if mode.kind == "hard":
        keep = [t.care and bool(t.categories) for t in gt.instances]
    else:
        keep = [t.care and mode.category in t.categories for t in gt.instances]
    insts = tuple(t.with_care(k) for t, k in zip(gt.instances, keep))
    return replace(gt, instances=insts)


def relabel_manifest(m: DatasetManifest, mode: EvalMode) -> DatasetManifest:
    if mode.kind == "norm":
        return m
    return replace(m, images=tuple(relabel_for_mode(im, mode) for im in m.images))


@dataclass
class MatchResult:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    pairs: list[tuple[int, int, float]] = field(default_factory=list)  # (gt index, pred index, iou)
    ignored: list[int] = field(default_factory=list)  # preds suppressed by don't-care regions

    @property
    def n_care(self) -> int:
        return self.tp + self.fn


def match_image(gt: ImageAnnotation, preds: Sequence[Polygon], cfg: EvalConfig = EvalConfig()) -> MatchResult:
    """One-to-one greedy matching of predictions to care ground truth.

    Predictions covered by a don't-care region (intersection over the
    prediction's own area at or above the threshold) are dropped first.
    Remaining (gt, pred) pairs are taken in descending IoU order, ties by
    gt index then pred index.
    """
    dontcare = [t.polygon for t in gt.instances if not t.care]
    care = [(k, t.polygon) for k, t in enumerate(gt.instances) if t.care]
    res = MatchResult()
    live: list[int] = []
    for j, p in enumerate(preds):
        if any(intersection_over_first(p, d) >= cfg.dontcare_overlap_threshold for d in dontcare):
            res.ignored.append(j)
        else:
            live.append(j)
    cand = []
    for gi, g in care:
        for j in live:
            v = iou(g, preds[j])
            if v >= cfg.iou_threshold:
                cand.append((-v, gi, j))
    cand.sort()
    used_g: set[int] = set()
    used_p: set[int] = set()
    for neg, gi, j in cand:
        if gi in used_g or j in used_p:
            continue
        used_g.add(gi)
        used_p.add(j)
        res.pairs.append((gi, j, -neg))
    res.tp = len(res.pairs)
    res.fp = len(live) - res.tp
    res.fn = len(care) - res.tp
    return res


@dataclass
class CategoryScore:
    tp: int
    fp: int
    fn: int

    @property
    def vacuous(self) -> bool:
        return self.tp + self.fn == 0

    @property
    def prf(self) -> tuple[float, float, float]:
        return prf(self.tp, self.fp, self.fn)


@dataclass
class EvalReport:
    true_positives: int
    false_positives: int
    false_negatives: int
    mode: str = "norm"
    detector: str = ""
    per_category: Optional[dict[ChallengeCategory, CategoryScore]] = None
    per_image: Optional[dict[str, tuple[int, int, int]]] = None
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def precision(self) -> float:
        return prf(self.true_positives, self.false_positives, self.false_negatives)[0]

    @property
    def recall(self) -> float:
        return prf(self.true_positives, self.false_positives, self.false_negatives)[1]

    @property
    def f_measure(self) -> float:
        return prf(self.true_positives, self.false_positives, self.false_negatives)[2]

    def to_dict(self) -> dict:
        out = {
            "detector": self.detector,
            "mode": self.mode,
            "true_positives": self.true_positives,
            "false_positives": self.false_positives,
            "false_negatives": self.false_negatives,
            "precision": self.precision,
            "recall": self.recall,
            "f_measure": self.f_measure,
        }
        if self.per_category is not None:
            cats = {}
            for c in TABLE_ORDER:
                s = self.per_category[c]
                p, r, f = s.prf
                cats[c.value] = {"true_positives": s.tp, "false_positives": s.fp, "false_negatives": s.fn,
                                 "precision": None if s.vacuous else p,
                                 "recall": None if s.vacuous else r,
                                 "f_measure": None if s.vacuous else f}
            out["per_category"] = cats
        if self.per_image is not None:
            out["per_image"] = {k: {"true_positives": v[0], "false_positives": v[1], "false_negatives": v[2]}
                                for k, v in sorted(self.per_image.items())}
        return out


def _run_images(images: Sequence[ImageAnnotation], det: DetectionSet, cfg: EvalConfig,
                threads: int) -> list[MatchResult]:
    def one(im: ImageAnnotation) -> MatchResult:
        return match_image(relabel_for_mode(im, cfg.mode), det.polygons(im.image_id), cfg)

    if threads <= 1 or len(images) < 2:
        return [one(im) for im in images]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        # map preserves input order, so aggregation is schedule independent
        return list(pool.map(one, images))


def evaluate(gt: DatasetManifest, det: DetectionSet, cfg: EvalConfig = EvalConfig(),
             per_category: bool = False, per_image: bool = False, threads: int = 1) -> EvalReport:
    images = sorted(gt.images, key=lambda im: im.image_id)
    known = {im.image_id for im in images}
    diags = []
    for image_id in sorted(set(det.per_image) - known):
        diags.append(Diagnostic("warning", "orphan_prediction",
                                "predictions for an image absent from ground truth ignored", image_id))
    for image_id in sorted(known - set(det.per_image)):
        diags.append(Diagnostic("warning", "missing_prediction",
                                "no predictions for image; treated as empty", image_id))
    for d in diags:
        log.debug("%s", d)

    results = _run_images(images, det, cfg, threads)
    tp = sum(r.tp for r in results)
    fp = sum(r.fp for r in results)
    fn = sum(r.fn for r in results)
    rep = EvalReport(tp, fp, fn, mode=str(cfg.mode), detector=det.detector_name, diagnostics=diags)
    if per_image:
        rep.per_image = {im.image_id: (r.tp, r.fp, r.fn) for im, r in zip(images, results)}
    if per_category:
        rep.per_category = {}
        for c in TABLE_ORDER:
            sub = _run_images(images, det, replace(cfg, mode=category_mode(c)), threads)
            rep.per_category[c] = CategoryScore(sum(r.tp for r in sub), sum(r.fp for r in sub),
                                                sum(r.fn for r in sub))
    return rep


@dataclass
class CategoryTableRow:
    detector: str
    categories: dict[ChallengeCategory, Optional[float]]
    hard: float
    norm: float


def eval_all_categories(gt: DatasetManifest, dets: Iterable[DetectionSet],
                        cfg: EvalConfig = EvalConfig(), threads: int = 1) -> list[CategoryTableRow]:
    """One row per detector: 13 category F-measures, then Hard and Norm.

    A category with no care instances in the ground truth gets ``None``.
    """
    rows = []
    for det in dets:
        cat_rep = evaluate(gt, det, replace(cfg, mode=NORM), per_category=True, threads=threads)
        hard = evaluate(gt, det, replace(cfg, mode=HARD), threads=threads)
        cats = {c: (None if s.vacuous else s.prf[2]) for c, s in cat_rep.per_category.items()}
        rows.append(CategoryTableRow(det.detector_name, cats, hard.f_measure, cat_rep.f_measure))
    return rows


# ---------------------------------------------------------------------------
# fine-tuning gap

def _dec(v) -> Decimal:
    return v if isinstance(v, Decimal) else Decimal(str(v))


@dataclass
class GapMatrix:
    train_sets: list[str]
    test_sets: list[str]
    cells: dict[tuple[str, str], Decimal]
    gaps: dict[tuple[str, str], Decimal]

    def gap(self, train: str, test: str) -> Decimal:
        return self.gaps[(train, test)]

    @property
    def max_gap(self) -> Optional[Decimal]:
        return max(self.gaps.values()) if self.gaps else None

    @property
    def mean_gap(self) -> Optional[Decimal]:
        return mean_f(self.gaps.values()) if self.gaps else None

    def row_mean(self, train: str) -> Decimal:
        return mean_f(v for (tr, _), v in self.cells.items() if tr == train)

    def to_dict(self) -> dict:
        return {
            "train_sets": self.train_sets,
            "test_sets": self.test_sets,
            "cells": [{"train": tr, "test": te, "f": float(v)} for (tr, te), v in self.cells.items()],
            "gaps": [{"train": tr, "test": te, "gap": float(v)} for (tr, te), v in self.gaps.items()],
            "max_gap": None if self.max_gap is None else float(self.max_gap),
            "mean_gap": None if self.mean_gap is None else float(self.mean_gap),
        }


def mean_f(values: Iterable) -> Decimal:
    """Unweighted mean, as used for an "Avg." column."""
    vals = [_dec(v) for v in values]
    if not vals:
        raise ValueError("mean of no values")
    return sum(vals, Decimal(0)) / len(vals)


def gap_report(results: Mapping[tuple[str, str], object]) -> GapMatrix:
    """In-domain minus cross-domain F per train set.

    Values are handled as decimals so ``89.0 - 73.9`` is exactly ``15.1``.
    """
    train_sets: list[str] = []
    test_sets: list[str] = []
    cells: dict[tuple[str, str], Decimal] = {}
    for (tr, te), v in results.items():
        if tr not in train_sets:
            train_sets.append(tr)
        if te not in test_sets:
            test_sets.append(te)
        cells[(tr, te)] = _dec(v)
    gaps: dict[tuple[str, str], Decimal] = {}
    for tr in train_sets:
        if (tr, tr) not in cells:
            raise MissingDiagonal(f"no in-domain result for {tr!r}")
        for te in test_sets:
            if te != tr and (tr, te) in cells:
                gaps[(tr, te)] = cells[(tr, tr)] - cells[(tr, te)]
    return GapMatrix(train_sets, test_sets, cells, gaps)

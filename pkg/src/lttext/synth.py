"""Synthetic manifests and scenes for tests, fixtures and experiment scripts."""

from __future__ import annotations

import json
import math
import random
from importlib import resources
from typing import Optional

from .annotations import (
    ChallengeCategory,
    DatasetManifest,
    Detection,
    DetectionSet,
    ImageAnnotation,
    Script,
    Split,
    TextInstance,
)
from .geometry import Polygon
from .merge import KEEP_ORIGINAL, MergePlan, PlanEntry, SplitPolicy
from .reference import JOINT98K, JOINT98K_ENGLISH, LTB_DONTCARE, ltb_fixture_distribution

IMAGE_W, IMAGE_H = 1280, 720
_CELL_W, _CELL_H = 64, 32


def grid_box(slot: int, width: int = IMAGE_W) -> Polygon:
    """Non-overlapping word-sized box for the ``slot``-th instance of an image."""
    cols = width // _CELL_W
    r, c = divmod(slot, cols)
    x, y = c * _CELL_W + 4, r * _CELL_H + 4
    return Polygon.box(x, y, x + _CELL_W - 8, y + _CELL_H - 8)


# ---------------------------------------------------------------------------
# long-tailed benchmark distribution

def ltb_layout() -> dict[str, list[list[list[str]]]]:
    """Per source dataset, per image, the category labels of each care instance.

    The layout was solved once by ``scripts/build_ltb_layout.py`` so that every
    (images, instances) cell of the distribution table is hit exactly.
    """
    text = resources.files("lttext").joinpath("data/ltb_layout.json").read_text(encoding="utf-8")
    return json.loads(text)


def ltb_manifest(name: str = "LTB") -> DatasetManifest:
    """A manifest whose statistics reproduce the published LTB distribution table.

    Don't-care regions are spread round-robin over all images.
    """
    images: list[ImageAnnotation] = []
    per_image_labels = []
    layout = ltb_layout()
    for ds, spec in ltb_fixture_distribution().items():
        n_img, n_inst = spec["total"]
        labels = layout[ds]
        if len(labels) != n_img or sum(map(len, labels)) != n_inst:
            raise ValueError(f"stored layout for {ds} does not match the distribution table")
        for k, lab in enumerate(labels):
            per_image_labels.append((ds, f"{ds}/{k:04d}", lab))
    n = len(per_image_labels)
    dontcare = [LTB_DONTCARE // n + (1 if k < LTB_DONTCARE % n else 0) for k in range(n)]
    for (ds, image_id, lab), ndc in zip(per_image_labels, dontcare):
        insts = [TextInstance(grid_box(j), True, f"word{j}", frozenset(ChallengeCategory(v) for v in s), script=Script.LATIN)
                 for j, s in enumerate(lab)]
        insts += [TextInstance(grid_box(len(lab) + j), False) for j in range(ndc)]
        images.append(ImageAnnotation(image_id, f"{image_id}.jpg", IMAGE_W, IMAGE_H, ds, tuple(insts)))
    return DatasetManifest(name, tuple(images), Split.TEST)


# ---------------------------------------------------------------------------
# joint composition

_WORD = Polygon.box(10, 10, 90, 40)


def _images(prefix: str, n: int, ds: str, english: Optional[int] = None) -> tuple[ImageAnnotation, ...]:
    out = []
    for k in range(n):
        latin = english is None or k < english
        inst = TextInstance(_WORD, True, "text" if latin else "文字",
                            script=Script.LATIN if latin else Script.NON_LATIN)
        out.append(ImageAnnotation(f"{prefix}{k:06d}", f"{prefix}{k:06d}.jpg", 640, 480, ds, (inst,)))
    return tuple(out)


def joint98k_plan(shuffle_seed: Optional[int] = None) -> MergePlan:
    """Nine per-dataset manifests with the published original sizes."""
    entries = []
    for ds, (policy, tr, val, te, _, _) in JOINT98K.items():
        if policy == "keep":
            n_test = val if val is not None else te
            entries.append(PlanEntry(
                ds, KEEP_ORIGINAL,
                train=DatasetManifest(ds, _images("train_", tr, ds), Split.TRAIN),
                test=DatasetManifest(ds, _images("test_", n_test, ds), Split.TEST)))
        else:
            eng = JOINT98K_ENGLISH.get(ds)
            imgs = _images("img_", tr, ds, eng)
            entries.append(PlanEntry(ds, SplitPolicy(policy, 0.8, shuffle_seed),
                                     manifest=DatasetManifest(ds, imgs, Split.UNSPLIT)))
    return MergePlan(entries, True, "joint98k")


# ---------------------------------------------------------------------------
# random geometry and scenes

def random_simple_polygon(rng: random.Random, n: int, cx: float, cy: float, r: float,
                          concave: bool) -> Polygon:
    """Star-shaped polygon around (cx, cy); angular gaps stay below pi so it is simple."""
    off = rng.uniform(0, 2 * math.pi)
    angs = [off + 2 * math.pi * (k + rng.uniform(-0.4, 0.4)) / n for k in range(n)]
    if concave:
        rs = [r * rng.uniform(0.3, 1.0) for _ in angs]
    else:
        rs = [r] * n
    sx = rng.uniform(0.5, 1.5)
    return Polygon(tuple((cx + sx * q * math.cos(t), cy + q * math.sin(t)) for q, t in zip(rs, angs)))


def jitter_box(rng: random.Random, p: Polygon, amount: float) -> Polygon:
    x0, y0, x1, y1 = p.bounds
    w, h = x1 - x0, y1 - y0
    return Polygon.box(x0 + rng.uniform(-amount, amount) * w, y0 + rng.uniform(-amount, amount) * h,
                       x1 + rng.uniform(-amount, amount) * w, y1 + rng.uniform(-amount, amount) * h)


def random_scene(rng: random.Random, image_id: str = "img", max_gt: int = 6, max_pred: int = 6,
                 dontcare_rate: float = 0.2, width: int = 400, height: int = 300,
                 categories: bool = True) -> tuple[ImageAnnotation, list[Polygon]]:
    """Word boxes with jittered hits, misses and stray detections; boxes may overlap."""
    n_gt = rng.randint(0, max_gt)
    gts = []
    cats = list(ChallengeCategory)
    for _ in range(n_gt):
        w, h = rng.uniform(20, 120), rng.uniform(10, 40)
        x, y = rng.uniform(0, width - w), rng.uniform(0, height - h)
        poly = Polygon.box(x, y, x + w, y + h)
        care = rng.random() >= dontcare_rate
        cs = frozenset(rng.sample(cats, rng.choice([0, 0, 1, 1, 2]))) if categories and care else frozenset()
        gts.append(TextInstance(poly, care, "word" if care else None, cs))
    preds: list[Polygon] = []
    for g in gts:
        if len(preds) < max_pred and rng.random() < 0.7:
            preds.append(jitter_box(rng, g.polygon, rng.choice([0.05, 0.15, 0.3])))
    while len(preds) < max_pred and rng.random() < 0.4:
        w, h = rng.uniform(20, 120), rng.uniform(10, 40)
        x, y = rng.uniform(0, width - w), rng.uniform(0, height - h)
        preds.append(Polygon.box(x, y, x + w, y + h))
    rng.shuffle(preds)
    return ImageAnnotation(image_id, f"{image_id}.jpg", width, height, "synthetic", tuple(gts)), preds


def random_corpus(seed: int, n_images: int = 40, n_detectors: int = 2) -> tuple[DatasetManifest, list[DetectionSet]]:
    rng = random.Random(seed)
    images = []
    per_det: list[dict[str, tuple[Detection, ...]]] = [{} for _ in range(n_detectors)]
    for k in range(n_images):
        im, preds = random_scene(rng, f"img_{k:04d}")
        images.append(im)
        for d in range(n_detectors):
            keep = [p for p in preds if rng.random() < 0.8]
            per_det[d][im.image_id] = tuple(Detection(p, round(rng.uniform(0.5, 1.0), 3)) for p in keep)
    gt = DatasetManifest("synthetic", tuple(images), Split.TEST)
    return gt, [DetectionSet(f"det{d}", per_det[d]) for d in range(n_detectors)]


def counts_fixture(tp: int, fp: int, fn: int, per_image: int = 20) -> tuple[DatasetManifest, DetectionSet]:
    """Ground truth and detections that evaluate to exactly the given TP/FP/FN."""
    images = []
    dets: dict[str, tuple[Detection, ...]] = {}
    kinds = ["tp"] * tp + ["fn"] * fn + ["fp"] * fp
    for k in range(0, max(1, len(kinds)), per_image):
        chunk = kinds[k:k + per_image]
        image_id = f"img_{k // per_image:05d}"
        insts, preds = [], []
        for slot, kind in enumerate(chunk):
            box = grid_box(slot)
            if kind in ("tp", "fn"):
                insts.append(TextInstance(box, True, "w"))
            if kind in ("tp", "fp"):
                preds.append(Detection(box))
        images.append(ImageAnnotation(image_id, image_id + ".jpg", IMAGE_W, IMAGE_H, "synthetic", tuple(insts)))
        dets[image_id] = tuple(preds)
    return DatasetManifest("counts", tuple(images), Split.TEST), DetectionSet("counts", dets)

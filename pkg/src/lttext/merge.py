"""Joint-dataset construction: per-dataset split policies and the merged manifests."""

from __future__ import annotations

import json
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

from .annotations import DatasetManifest, ImageAnnotation, Script, Split
from .builder import is_basic_latin
from .errors import DuplicateNamespacedId, EmptySplit
from .formats import toml_loads


@dataclass(frozen=True)
class SplitPolicy:
    """``keep`` passes declared splits through; ``ratio`` and ``english_ratio`` cut by image_id order."""

    kind: str = "keep"
    train_fraction: float = 0.8
    shuffle_seed: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in ("keep", "ratio", "english_ratio"):
            raise ValueError(f"unknown split policy {self.kind!r}")
        if self.kind != "keep" and not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")


KEEP_ORIGINAL = SplitPolicy("keep")


def ratio_split(fraction: float = 0.8, shuffle_seed: Optional[int] = None) -> SplitPolicy:
    return SplitPolicy("ratio", fraction, shuffle_seed)


def english_only_then_ratio(fraction: float = 0.8, shuffle_seed: Optional[int] = None) -> SplitPolicy:
    return SplitPolicy("english_ratio", fraction, shuffle_seed)


@dataclass
class PlanEntry:
    name: str
    policy: SplitPolicy
    # KeepOriginal datasets arrive as a declared train manifest and/or test manifest
    manifest: Optional[DatasetManifest] = None
    train: Optional[DatasetManifest] = None
    test: Optional[DatasetManifest] = None


@dataclass
class MergePlan:
    entries: list[PlanEntry]
    require_at_least_one_instance: bool = True
    name: str = "joint"

    def __post_init__(self) -> None:
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            raise ValueError("dataset names in a merge plan must be unique")


def _has_english(im: ImageAnnotation) -> bool:
    for t in im.instances:
        if t.script == Script.LATIN:
            return True
        if t.script != Script.NON_LATIN and t.transcription is not None and is_basic_latin(t.transcription):
            return True
    return False


def english_only_filter(m: DatasetManifest) -> DatasetManifest:
    """Keep images with at least one Latin-script or all-ASCII instance."""
    return replace(m, images=tuple(im for im in m.images if _has_english(im)))


def split_dataset(m: DatasetManifest, policy: SplitPolicy) -> tuple[DatasetManifest, DatasetManifest]:
    if policy.kind == "keep":
        if m.split == Split.TRAIN:
            return m.sorted(), replace(m, images=(), split=Split.TEST)
        if m.split == Split.TEST:
            return replace(m, images=(), split=Split.TRAIN), m.sorted()
        raise EmptySplit(f"{m.name}: KeepOriginal needs a manifest declared train or test")
    if policy.kind == "english_ratio":
        m = english_only_filter(m)
    images = sorted(m.images, key=lambda im: im.image_id)
    if policy.shuffle_seed is not None:
        random.Random(policy.shuffle_seed).shuffle(images)
    n_train = math.floor(policy.train_fraction * len(images))
    if n_train == 0 or n_train == len(images):
        raise EmptySplit(f"{m.name}: {len(images)} images cannot be split at {policy.train_fraction}")
    train = sorted(images[:n_train], key=lambda im: im.image_id)
    test = sorted(images[n_train:], key=lambda im: im.image_id)
    return (replace(m, images=tuple(train), split=Split.TRAIN),
            replace(m, images=tuple(test), split=Split.TEST))


@dataclass
class ContributionRow:
    dataset: str
    policy: str
    original_train: int
    original_test: int
    train: int
    test: int


@dataclass
class MergeReport:
    rows: list[ContributionRow] = field(default_factory=list)

    @property
    def train_total(self) -> int:
        return sum(r.train for r in self.rows)

    @property
    def test_total(self) -> int:
        return sum(r.test for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "datasets": [vars(r) for r in self.rows],
            "train_total": self.train_total,
            "test_total": self.test_total,
        }


def _namespaced(m: DatasetManifest, ns: str) -> list[ImageAnnotation]:
    return [replace(im, image_id=f"{ns}/{im.image_id}",
                    source_dataset=im.source_dataset or ns) for im in m.images]


def _entry_splits(e: PlanEntry) -> tuple[DatasetManifest, DatasetManifest, int, int]:
    if e.policy.kind == "keep":
        parts = [p for p in (e.train, e.test, e.manifest) if p is not None]
        train_imgs: list[ImageAnnotation] = []
        test_imgs: list[ImageAnnotation] = []
        for p in parts:
            tr, te = split_dataset(p, e.policy)
            train_imgs += tr.images
            test_imgs += te.images
        return (DatasetManifest(e.name, tuple(train_imgs), Split.TRAIN),
                DatasetManifest(e.name, tuple(test_imgs), Split.TEST), len(train_imgs), len(test_imgs))
    src = e.manifest if e.manifest is not None else e.train
    if src is None:
        raise ValueError(f"{e.name}: ratio policies need a source manifest")
    tr, te = split_dataset(src, e.policy)
    return tr, te, len(src.images), 0


def build_joint(plan: MergePlan) -> tuple[DatasetManifest, DatasetManifest, MergeReport]:
    """Union of per-dataset train and test splits with namespaced image ids."""
    report = MergeReport()
    train: list[ImageAnnotation] = []
    test: list[ImageAnnotation] = []
    for e in sorted(plan.entries, key=lambda e: e.name):
        tr, te, n_tr0, n_te0 = _entry_splits(e)
        tr_imgs = _namespaced(tr, e.name)
        if plan.require_at_least_one_instance:
            tr_imgs = [im for im in tr_imgs if im.instances]
        te_imgs = _namespaced(te, e.name)
        train += tr_imgs
        test += te_imgs
        report.rows.append(ContributionRow(e.name, e.policy.kind, n_tr0, n_te0, len(tr_imgs), len(te_imgs)))
    for imgs in (train, test):
        ids = [im.image_id for im in imgs]
        if len(set(ids)) != len(ids):
            raise DuplicateNamespacedId("namespaced image ids collide")
    key = lambda im: im.image_id  # noqa: E731
    return (DatasetManifest(f"{plan.name}-train", tuple(sorted(train, key=key)), Split.TRAIN),
            DatasetManifest(f"{plan.name}-test", tuple(sorted(test, key=key)), Split.TEST),
            report)


# ---------------------------------------------------------------------------
# plan files

def _policy_from(d: dict, default_seed: Optional[int]) -> SplitPolicy:
    kind = d.get("policy", "keep")
    aliases = {"keep_original": "keep", "ratio_split": "ratio", "english_only_then_ratio": "english_ratio"}
    kind = aliases.get(kind, kind)
    return SplitPolicy(kind, float(d.get("train_fraction", 0.8)), d.get("shuffle_seed", default_seed))


def load_plan(path: str | Path, loader, shuffle_seed: Optional[int] = None, threads: int = 1) -> MergePlan:
    """Read a TOML or JSON plan.

    ``loader(path)`` turns a manifest path into a ``DatasetManifest``; relative
    paths resolve against the plan's directory.

    Example TOML::

        name = "joint98k"
        require_at_least_one_instance = true

        [[dataset]]
        name = "ICDAR2015"
        policy = "keep"
        train = "ic15_train.json"
        test = "ic15_test.json"

        [[dataset]]
        name = "ArT"
        policy = "ratio"
        train_fraction = 0.8
        manifest = "art_train.json"
    """
    path = Path(path)
    raw = path.read_bytes()
    if path.suffix.lower() == ".json":
        doc = json.loads(raw)
    else:
        doc = toml_loads(raw)
    base = path.parent
    entries = []
    jobs: list[tuple[PlanEntry, str, Path]] = []
    for d in doc.get("dataset", doc.get("datasets", [])):
        e = PlanEntry(d["name"], _policy_from(d, shuffle_seed))
        for slot in ("manifest", "train", "test"):
            if slot in d:
                p = Path(d[slot])
                jobs.append((e, slot, p if p.is_absolute() else base / p))
        entries.append(e)
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            loaded = list(pool.map(loader, [p for _, _, p in jobs]))
    else:
        loaded = [loader(p) for _, _, p in jobs]
    for (e, slot, _), m in zip(jobs, loaded):
        setattr(e, slot, m)
    return MergePlan(entries, bool(doc.get("require_at_least_one_instance", True)), doc.get("name", path.stem))

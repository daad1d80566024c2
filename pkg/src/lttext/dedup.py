"""Near-duplicate image removal with 64-bit difference hashes.

Two images are duplicates when ``1 - hamming/64`` exceeds the similarity
threshold. Candidate pairs come from banding the hash: with a distance
budget of ``d`` bits, splitting the 64 bits into ``d + 1`` bands guarantees
any pair within budget agrees exactly on at least one band, so bucketing by
band value finds every pair without comparing all of them.
"""

from __future__ import annotations

import csv
import io
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .annotations import Diagnostic
from .errors import UndecodableImage

log = logging.getLogger(__name__)

HASH_BITS = 64
IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".ppm", ".pgm", ".gif", ".tif", ".tiff", ".webp"}


@dataclass(frozen=True)
class DedupConfig:
    similarity_threshold: float = 0.95
    hash_kind: str = "dhash64"
    exact: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.similarity_threshold <= 1.0:
            raise ValueError("similarity_threshold must be in (0, 1]")
        if self.hash_kind != "dhash64":
            raise ValueError(f"unsupported hash kind {self.hash_kind!r}")

    @property
    def max_distance(self) -> int:
        """Largest Hamming distance still counted as a duplicate (similarity strictly above threshold)."""
        d = -1
        while d + 1 <= HASH_BITS and 1 - (d + 1) / HASH_BITS > self.similarity_threshold:
            d += 1
        return d


def dhash64(image) -> int:
    """Difference hash: 9x8 grayscale thumbnail, one bit per horizontal gradient sign."""
    from PIL import Image

    if not isinstance(image, Image.Image):
        with Image.open(image) as im:
            return dhash64(im.convert("L"))
    g = np.asarray(image.convert("L").resize((9, 8), Image.Resampling.LANCZOS), dtype=np.int16)
    bits = (g[:, :-1] > g[:, 1:]).ravel()
    return int(sum(1 << i for i, b in enumerate(bits) if b))


def similarity(h1: int, h2: int) -> float:
    return 1.0 - bin(h1 ^ h2).count("1") / HASH_BITS


def _bands(n_bands: int) -> list[tuple[int, int]]:
    edges = [round(i * HASH_BITS / n_bands) for i in range(n_bands + 1)]
    return [(edges[i], edges[i + 1] - edges[i]) for i in range(n_bands)]


def candidate_pairs(hashes: Mapping[str, int], max_distance: int) -> set[tuple[str, str]]:
    if max_distance < 0:
        return set()
    n_bands = max_distance + 1
    if n_bands > HASH_BITS:
        return set(combinations(sorted(hashes), 2))
    out: set[tuple[str, str]] = set()
    for shift, width in _bands(n_bands):
        mask = (1 << width) - 1
        buckets: dict[int, list[str]] = {}
        for k, h in hashes.items():
            buckets.setdefault((h >> shift) & mask, []).append(k)
        for ids in buckets.values():
            if len(ids) > 1:
                out.update(combinations(sorted(ids), 2))
    return out


@dataclass
class DedupResult:
    pairs: list[tuple[str, str, float]] = field(default_factory=list)
    survivors: list[str] = field(default_factory=list)
    removed: dict[str, str] = field(default_factory=dict)  # removed id -> survivor of its component
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def pairs_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["id_a", "id_b", "similarity"])
        for a, b, s in self.pairs:
            w.writerow([a, b, repr(s)])
        return buf.getvalue()

    def survivors_text(self) -> str:
        return "".join(f"{s}\n" for s in self.survivors)


def dedup_hashes(hashes: Mapping[str, int], cfg: DedupConfig = DedupConfig()) -> DedupResult:
    ids = sorted(hashes)
    dmax = cfg.max_distance
    if cfg.exact:
        cands = combinations(ids, 2)
    else:
        cands = sorted(candidate_pairs(hashes, dmax))
    res = DedupResult()
    parent = {k: k for k in ids}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in cands:
        s = similarity(hashes[a], hashes[b])
        if s > cfg.similarity_threshold:
            res.pairs.append((a, b, s))
            ra, rb = find(a), find(b)
            if ra != rb:
                # root is always the smaller id, so it is the component's survivor
                if rb < ra:
                    ra, rb = rb, ra
                parent[rb] = ra
    for k in ids:
        r = find(k)
        if r == k:
            res.survivors.append(k)
        else:
            res.removed[k] = r
    return res


def hash_images(paths: Iterable[os.PathLike | str], ids: Iterable[str] | None = None,
                threads: int = 1) -> tuple[dict[str, int], list[Diagnostic]]:
    """Hash every readable image; undecodable files become warnings, not errors."""
    paths = list(paths)
    ids = list(ids) if ids is not None else [Path(p).name for p in paths]

    def one(p) -> int | Exception:
        try:
            return dhash64(p)
        except Exception as exc:  # PIL raises a zoo of types on corrupt files
            return exc

    if threads > 1 and len(paths) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, paths))
    else:
        results = [one(p) for p in paths]
    hashes: dict[str, int] = {}
    diags: list[Diagnostic] = []
    for image_id, p, h in zip(ids, paths, results):
        if isinstance(h, Exception):
            err = UndecodableImage(f"{p}: {h}")
            log.warning("%s", err)
            diags.append(Diagnostic("warning", "undecodable_image", str(err), image_id))
        else:
            hashes[image_id] = h
    return hashes, diags


def dedup_directory(root: os.PathLike | str, cfg: DedupConfig = DedupConfig(), threads: int = 1) -> DedupResult:
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(2, "not a directory", str(root))
    files = sorted(p for p in root.rglob("*") if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)
    hashes, diags = hash_images(files, [p.relative_to(root).as_posix() for p in files], threads)
    res = dedup_hashes(hashes, cfg)
    res.diagnostics = diags
    return res


def read_hash_file(path: os.PathLike | str) -> dict[str, int]:
    """CSV with columns ``image_id,hash`` (hash in hex, optional 0x prefix)."""
    out: dict[str, int] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or row[0] == "image_id":
                continue
            out[row[0]] = int(row[1], 16)
    return out

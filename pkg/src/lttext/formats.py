"""Readers and writers for the canonical JSON schema and ICDAR-style text files.

Every parser turns malformed input into ``ParseError`` (line-oriented text)
or ``SchemaError`` (JSON, with the offending path); nothing else escapes.
"""

from __future__ import annotations

import json
import logging
import math
import os
from pathlib import Path
from typing import Any, Iterable, Optional, Union

from .annotations import (
    ChallengeCategory,
    DatasetManifest,
    Detection,
    DetectionSet,
    Diagnostic,
    ImageAnnotation,
    Script,
    Split,
    TextInstance,
)
from .errors import GeometryError, ParseError, SchemaError
from .geometry import Polygon

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"
DONT_CARE = "###"

_DOC_KEYS = ("schema_version", "dataset")
_DATASET_KEYS = ("name", "split", "images")
_IMAGE_KEYS = ("image_id", "file_name", "width", "height", "source_dataset", "instances")
_INSTANCE_KEYS = ("polygon", "care", "transcription", "categories", "word_level", "script")
_DET_KEYS = ("schema_version", "detector", "results")
_RESULT_KEYS = ("image_id", "polygons", "scores")

Source = Union[bytes, str, os.PathLike]


def _read_bytes(src: Source) -> bytes:
    if isinstance(src, (bytes, bytearray)):
        return bytes(src)
    return Path(src).read_bytes()


def _decode(data: bytes, source: str | None = None) -> str:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"invalid UTF-8 at byte {exc.start}", source=source) from None
    return text[1:] if text.startswith("\ufeff") else text


def _reject_constant(name: str) -> Any:
    raise SchemaError(f"non-finite number {name} not allowed")


def _load_json(data: bytes) -> Any:
    text = _decode(data)
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except SchemaError:
        raise
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})") from None
    except RecursionError:
        raise SchemaError("JSON nested too deeply") from None
    except ValueError as exc:  # e.g. integer string too long
        raise SchemaError(f"invalid JSON: {exc}") from None


# ---------------------------------------------------------------------------
# canonical schema helpers

class _Ctx:
    def __init__(self, strict: bool, diagnostics: list[Diagnostic] | None):
        self.strict = strict
        self.diagnostics = diagnostics

    def warn(self, code: str, message: str, image_id: str | None = None) -> None:
        log.warning("%s: %s", code, message)
        if self.diagnostics is not None:
            self.diagnostics.append(Diagnostic("warning", code, message, image_id))

    def check_keys(self, obj: dict, allowed: tuple[str, ...], path: str, required: Iterable[str] = ()) -> None:
        for k in required:
            if k not in obj:
                raise SchemaError(f"missing key {k!r}", path)
        extra = sorted(k for k in obj if k not in allowed)
        if extra:
            if self.strict:
                raise SchemaError(f"unknown key {extra[0]!r}", f"{path}.{extra[0]}")
            self.warn("unknown_key", f"{path}: ignoring unknown keys {extra}")


def _obj(v: Any, path: str) -> dict:
    if not isinstance(v, dict):
        raise SchemaError(f"expected object, got {type(v).__name__}", path)
    return v


def _list(v: Any, path: str) -> list:
    if not isinstance(v, list):
        raise SchemaError(f"expected array, got {type(v).__name__}", path)
    return v


def _str(v: Any, path: str) -> str:
    if not isinstance(v, str):
        raise SchemaError(f"expected string, got {type(v).__name__}", path)
    try:
        v.encode("utf-8")
    except UnicodeEncodeError:
        raise SchemaError("string is not valid Unicode (lone surrogate)", path) from None
    return v


def _bool(v: Any, path: str) -> bool:
    if not isinstance(v, bool):
        raise SchemaError(f"expected boolean, got {type(v).__name__}", path)
    return v


def _int(v: Any, path: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(f"expected integer, got {type(v).__name__}", path)
    return v


def _num(v: Any, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"expected number, got {type(v).__name__}", path)
    try:
        f = float(v)
    except OverflowError:
        raise SchemaError("number out of range", path) from None
    if not math.isfinite(f):
        raise SchemaError("number must be finite", path)
    return f


def _enum(cls, v: Any, path: str):
    s = _str(v, path)
    try:
        return cls(s)
    except ValueError:
        raise SchemaError(f"unknown value {s!r}", path) from None


def _polygon_points(v: Any, path: str) -> tuple[tuple[float, float], ...]:
    pts = []
    for k, p in enumerate(_list(v, path)):
        pp = _list(p, f"{path}[{k}]")
        if len(pp) != 2:
            raise SchemaError("vertex must be [x, y]", f"{path}[{k}]")
        pts.append((_num(pp[0], f"{path}[{k}][0]"), _num(pp[1], f"{path}[{k}][1]")))
    return tuple(pts)


def _make_polygon(pts, path: str, ctx: _Ctx, image_id: str | None) -> Polygon | None:
    try:
        return Polygon(pts)
    except GeometryError as exc:
        if ctx.strict:
            raise SchemaError(f"invalid polygon: {exc}", path) from None
        ctx.diagnostics is not None and ctx.diagnostics.append(
            Diagnostic("error", "invalid_polygon", f"{path}: {exc}; instance dropped", image_id))
        log.warning("%s: invalid polygon (%s); instance dropped", path, exc)
        return None


def _parse_instance(v: Any, path: str, ctx: _Ctx, image_id: str) -> TextInstance | None:
    o = _obj(v, path)
    ctx.check_keys(o, _INSTANCE_KEYS, path, required=("polygon",))
    pts = _polygon_points(o["polygon"], f"{path}.polygon")
    care = _bool(o.get("care", True), f"{path}.care")
    tr = o.get("transcription")
    if tr is not None:
        tr = _str(tr, f"{path}.transcription")
    cats = []
    for k, c in enumerate(_list(o.get("categories", []), f"{path}.categories")):
        cats.append(_enum(ChallengeCategory, c, f"{path}.categories[{k}]"))
    word_level = _bool(o.get("word_level", True), f"{path}.word_level")
    script = _enum(Script, o.get("script", "unknown"), f"{path}.script")
    poly = _make_polygon(pts, f"{path}.polygon", ctx, image_id)
    if poly is None:
        return None
    return TextInstance(poly, care, tr, frozenset(cats), word_level, script)


def _parse_image(v: Any, path: str, ctx: _Ctx) -> ImageAnnotation:
    o = _obj(v, path)
    ctx.check_keys(o, _IMAGE_KEYS, path, required=("image_id", "width", "height"))
    image_id = _str(o["image_id"], f"{path}.image_id")
    file_name = _str(o.get("file_name", image_id), f"{path}.file_name")
    width = _int(o["width"], f"{path}.width")
    height = _int(o["height"], f"{path}.height")
    if width <= 0 or height <= 0:
        raise SchemaError("width and height must be positive", f"{path}.width" if width <= 0 else f"{path}.height")
    source = _str(o.get("source_dataset", ""), f"{path}.source_dataset")
    insts = []
    for k, iv in enumerate(_list(o.get("instances", []), f"{path}.instances")):
        inst = _parse_instance(iv, f"{path}.instances[{k}]", ctx, image_id)
        if inst is not None:
            insts.append(inst)
    return ImageAnnotation(image_id, file_name, width, height, source, tuple(insts))


def manifest_from_obj(doc: Any, strict: bool = True,
                      diagnostics: list[Diagnostic] | None = None) -> DatasetManifest:
    ctx = _Ctx(strict, diagnostics)
    d = _obj(doc, "$")
    ctx.check_keys(d, _DOC_KEYS, "$", required=_DOC_KEYS)
    ver = _str(d["schema_version"], "$.schema_version")
    if ver != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {ver!r}", "$.schema_version")
    ds = _obj(d["dataset"], "dataset")
    ctx.check_keys(ds, _DATASET_KEYS, "dataset", required=("name",))
    name = _str(ds["name"], "dataset.name")
    split = _enum(Split, ds.get("split", "unsplit"), "dataset.split")
    images = []
    seen: set[str] = set()
    for k, iv in enumerate(_list(ds.get("images", []), "dataset.images")):
        path = f"images[{k}]"
        im = _parse_image(iv, path, ctx)
        if im.image_id in seen:
            if strict:
                raise SchemaError(f"duplicate image_id {im.image_id!r}", f"{path}.image_id")
            ctx.warn("duplicate_id", f"{path}: duplicate image_id {im.image_id!r} skipped", im.image_id)
            continue
        seen.add(im.image_id)
        images.append(im)
    return DatasetManifest(name, tuple(images), split)


def parse_canonical(src: Source, strict: bool = True,
                    diagnostics: list[Diagnostic] | None = None) -> DatasetManifest:
    """Parse a canonical annotation document.

    In lenient mode unknown keys are logged and invalid polygons are dropped
    (recorded in ``diagnostics`` when a list is passed) instead of raising.
    """
    doc = _load_json(_read_bytes(src))
    return manifest_from_obj(doc, strict, diagnostics)


# ---------------------------------------------------------------------------
# writers

def _instance_obj(t: TextInstance) -> dict:
    order = {c: i for i, c in enumerate(ChallengeCategory)}
    return {
        "polygon": [[x, y] for x, y in t.polygon.points],
        "care": t.care,
        "transcription": t.transcription,
        "categories": [c.value for c in sorted(t.categories, key=order.__getitem__)],
        "word_level": t.word_level,
        "script": t.script.value,
    }


def manifest_to_obj(m: DatasetManifest) -> dict:
    images = sorted(m.images, key=lambda im: im.image_id)
    return {
        "schema_version": SCHEMA_VERSION,
        "dataset": {
            "name": m.name,
            "split": m.split.value,
            "images": [
                {
                    "image_id": im.image_id,
                    "file_name": im.file_name,
                    "width": im.width,
                    "height": im.height,
                    "source_dataset": im.source_dataset,
                    "instances": [_instance_obj(t) for t in im.instances],
                }
                for im in images
            ],
        },
    }


def _dumps(obj: Any) -> bytes:
    # float repr is already the shortest round-trip form
    return (json.dumps(obj, ensure_ascii=False, separators=(",", ":"), allow_nan=False) + "\n").encode("utf-8")


def write_canonical(m: DatasetManifest) -> bytes:
    return _dumps(manifest_to_obj(m))


def write_detections(ds: DetectionSet) -> bytes:
    results = []
    for image_id in sorted(ds.per_image):
        dets = ds.per_image[image_id]
        scores = [d.score for d in dets]
        results.append({
            "image_id": image_id,
            "polygons": [[[x, y] for x, y in d.polygon.points] for d in dets],
            "scores": None if all(s is None for s in scores) else [0.0 if s is None else s for s in scores],
        })
    return _dumps({"schema_version": SCHEMA_VERSION, "detector": ds.detector_name, "results": results})


# ---------------------------------------------------------------------------
# ICDAR text lines

def _is_number(tok: str) -> bool:
    try:
        return math.isfinite(float(tok))
    except ValueError:
        return False


def _text_lines(data: bytes, source: str | None) -> Iterable[tuple[int, str]]:
    text = _decode(data, source)
    for n, line in enumerate(text.split("\n"), start=1):
        line = line.rstrip("\r")
        if line.strip():
            yield n, line


def _coords_polygon(coords: list[float], lineno: int, source: str | None, strict: bool) -> Polygon | None:
    if len(coords) % 2:
        raise ParseError("odd number of coordinates", lineno, source)
    if len(coords) < 8:
        raise ParseError(f"need at least 4 coordinate pairs, got {len(coords) // 2}", lineno, source)
    try:
        return Polygon.from_flat(coords)
    except GeometryError as exc:
        if strict:
            raise ParseError(f"invalid polygon: {exc}", lineno, source) from None
        log.warning("%s line %d: invalid polygon (%s); instance dropped", source or "<input>", lineno, exc)
        return None


def parse_icdar_gt(src: Source, image_id: str | None = None,
                   image_dims: tuple[int, int] | None = None, strict: bool = True,
                   word_level: bool = True) -> list[TextInstance]:
    """Parse ``x1,y1,...,xN,yN,transcription`` lines.

    The transcription is whatever follows the leading run of numbers. When a
    line is all numbers the last field is taken as the transcription, so a
    numeric word such as ``2017`` survives. ``###`` marks don't-care.
    """
    data = _read_bytes(src)
    source = image_id
    out: list[TextInstance] = []
    for lineno, line in _text_lines(data, source):
        fields = line.split(",")
        k = 0
        while k < len(fields) and _is_number(fields[k].strip()):
            k += 1
        if k == len(fields):
            k -= 1
        coords = [float(f) for f in fields[:k]]
        transcription = ",".join(fields[k:])
        poly = _coords_polygon(coords, lineno, source, strict)
        if poly is None:
            continue
        if transcription == DONT_CARE:
            out.append(TextInstance(poly, care=False, transcription=None, word_level=word_level))
        else:
            out.append(TextInstance(poly, care=True, transcription=transcription, word_level=word_level))
    return out


def parse_detection_lines(src: Source, source: str | None = None, strict: bool = True) -> list[Detection]:
    """Coordinate lines with an optional trailing confidence in [0, 1]."""
    data = _read_bytes(src)
    out: list[Detection] = []
    for lineno, line in _text_lines(data, source):
        fields = [f.strip() for f in line.split(",")]
        k = 0
        while k < len(fields) and _is_number(fields[k]):
            k += 1
        nums = [float(f) for f in fields[:k]]
        score = None
        if len(nums) % 2:
            score = nums.pop()
            if not 0.0 <= score <= 1.0:
                raise ParseError(f"score {score} outside [0, 1]", lineno, source)
        poly = _coords_polygon(nums, lineno, source, strict)
        if poly is not None:
            out.append(Detection(poly, score))
    return out


def _txt_image_id(path: Path) -> str:
    stem = path.stem
    return stem[4:] if stem.startswith("res_") else stem


def detections_from_obj(doc: Any, detector_name: str | None = None, strict: bool = True) -> DetectionSet:
    ctx = _Ctx(strict, None)
    d = _obj(doc, "$")
    ctx.check_keys(d, _DET_KEYS, "$", required=_DET_KEYS)
    ver = _str(d["schema_version"], "$.schema_version")
    if ver != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {ver!r}", "$.schema_version")
    name = _str(d["detector"], "$.detector")
    per_image: dict[str, tuple[Detection, ...]] = {}
    for k, rv in enumerate(_list(d["results"], "results")):
        path = f"results[{k}]"
        r = _obj(rv, path)
        ctx.check_keys(r, _RESULT_KEYS, path, required=("image_id", "polygons"))
        image_id = _str(r["image_id"], f"{path}.image_id")
        polys = _list(r["polygons"], f"{path}.polygons")
        scores = r.get("scores")
        if scores is not None:
            scores = _list(scores, f"{path}.scores")
            if len(scores) != len(polys):
                raise SchemaError("scores and polygons differ in length", f"{path}.scores")
        dets = list(per_image.get(image_id, ()))
        for j, pv in enumerate(polys):
            ppath = f"{path}.polygons[{j}]"
            pts = _polygon_points(pv, ppath)
            score = None
            if scores is not None:
                score = _num(scores[j], f"{path}.scores[{j}]")
                if not 0.0 <= score <= 1.0:
                    raise SchemaError(f"score {score} outside [0, 1]", f"{path}.scores[{j}]")
            poly = _make_polygon(pts, ppath, ctx, image_id)
            if poly is not None:
                dets.append(Detection(poly, score))
        per_image[image_id] = tuple(dets)
    return DetectionSet(detector_name or name, per_image)


def parse_detections(src: Source, detector_name: str | None = None, strict: bool = True) -> DetectionSet:
    """Read detections from canonical JSON bytes/file or a directory of txt files."""
    if isinstance(src, (str, os.PathLike)) and not isinstance(src, bytes) and Path(src).is_dir():
        root = Path(src)
        per_image = {}
        for f in sorted(root.glob("*.txt")):
            per_image[_txt_image_id(f)] = tuple(parse_detection_lines(f.read_bytes(), f.name, strict))
        return DetectionSet(detector_name or root.name, per_image)
    data = _read_bytes(src)
    if isinstance(src, (str, os.PathLike)) and str(src).endswith(".txt"):
        p = Path(src)
        return DetectionSet(detector_name or p.stem,
                            {_txt_image_id(p): tuple(parse_detection_lines(data, p.name, strict))})
    return detections_from_obj(_load_json(data), detector_name, strict)


def load_manifest(path: Source, strict: bool = True,
                  diagnostics: list[Diagnostic] | None = None) -> DatasetManifest:
    return parse_canonical(path, strict, diagnostics)


def image_from_icdar(src: Source, image_id: str, width: int, height: int,
                     file_name: Optional[str] = None, source_dataset: str = "",
                     strict: bool = True) -> ImageAnnotation:
    insts = parse_icdar_gt(src, image_id, (width, height), strict)
    return ImageAnnotation(image_id, file_name or image_id, width, height, source_dataset, tuple(insts))


def toml_loads(data: bytes) -> dict:
    """Parse TOML with the standard library when present, else ``tomli``."""
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    return tomllib.loads(data.decode("utf-8"))

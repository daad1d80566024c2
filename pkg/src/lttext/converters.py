"""Source-format converters feeding the canonical schema.

COCO-Text-like JSON::

    {"imgs": {"<id>": {"id": 1, "file_name": "...", "width": W, "height": H, "set": "train"|"val"|"test"}},
     "anns": {"<id>": {"image_id": 1, "mask": [x1, y1, ...] | "bbox": [x, y, w, h],
                       "utf8_string": "...", "legibility": "legible"|"illegible",
                       "language": "english"|"not english"|"na"}}}

Total-Text mat-export txt, one instance per line::

    x: [[115 503 494 115]], y: [[322 346 426 404]], ornt: [u'h'], transcriptions: [u'nauGHTY']

``ornt`` or transcription ``#`` marks don't-care.
"""

from __future__ import annotations

import logging
import re
from pathlib import Path
from typing import Callable, Optional

from .annotations import DatasetManifest, ImageAnnotation, Script, Split, TextInstance
from .errors import GeometryError, ParseError, SchemaError
from .formats import _decode, _load_json, _read_bytes, parse_icdar_gt
from .geometry import Polygon

log = logging.getLogger(__name__)

_COCO_SPLITS = {"train": Split.TRAIN, "val": Split.TEST, "test": Split.TEST}


def convert_coco_text(src, name: str = "COCO-Text", split: Optional[str] = None,
                      strict: bool = False) -> DatasetManifest:
    """``split`` keeps only images whose ``set`` maps to it ("train" or "test")."""
    doc = _load_json(_read_bytes(src))
    if not isinstance(doc, dict) or not isinstance(doc.get("imgs"), dict) or not isinstance(doc.get("anns"), dict):
        raise SchemaError("expected object with 'imgs' and 'anns' maps")
    by_image: dict[str, list[TextInstance]] = {}
    for ann_id, a in sorted(doc["anns"].items()):
        path = f"anns.{ann_id}"
        try:
            image_id = str(a["image_id"])
            if "mask" in a and a["mask"]:
                poly = Polygon.from_flat([float(v) for v in a["mask"]])
            else:
                x, y, w, h = (float(v) for v in a["bbox"])
                poly = Polygon.box(x, y, x + w, y + h)
        except GeometryError as exc:
            if strict:
                raise SchemaError(f"invalid polygon: {exc}", path) from None
            log.warning("%s: invalid polygon (%s); dropped", path, exc)
            continue
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed annotation: {exc}", path) from None
        legible = a.get("legibility", "legible") == "legible"
        text = a.get("utf8_string")
        lang = a.get("language", "na")
        script = {"english": Script.LATIN, "not english": Script.NON_LATIN}.get(lang, Script.UNKNOWN)
        care = legible and text not in (None, "", "###")
        by_image.setdefault(image_id, []).append(
            TextInstance(poly, care, text if care else None, script=script))
    images = []
    wanted = None if split is None else Split(split)
    for key, im in sorted(doc["imgs"].items()):
        try:
            image_id = str(im.get("id", key))
            s = _COCO_SPLITS.get(im.get("set", "train"), Split.UNSPLIT)
            if wanted is not None and s != wanted:
                continue
            images.append(ImageAnnotation(image_id, im.get("file_name", image_id), int(im["width"]),
                                          int(im["height"]), name, tuple(by_image.get(image_id, ()))))
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise SchemaError(f"malformed image record: {exc}", f"imgs.{key}") from None
    return DatasetManifest(name, tuple(images), wanted or Split.UNSPLIT)


_TT_LINE = re.compile(
    r"x:\s*\[\[(?P<x>[^\]]*)\]\],\s*y:\s*\[\[(?P<y>[^\]]*)\]\],\s*ornt:\s*\[u?'(?P<o>[^']*)'\],"
    r"\s*transcriptions:\s*\[u?'(?P<t>.*)'\]\s*$")


def parse_totaltext(src, source: str | None = None, strict: bool = False) -> list[TextInstance]:
    data = _read_bytes(src)
    out = []
    text = _decode(data, source)
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        m = _TT_LINE.match(line.strip())
        if not m:
            raise ParseError("not a Total-Text annotation line", lineno, source)
        try:
            xs = [float(v) for v in m["x"].split()]
            ys = [float(v) for v in m["y"].split()]
        except ValueError:
            raise ParseError("malformed coordinates", lineno, source) from None
        if len(xs) != len(ys):
            raise ParseError("x and y lists differ in length", lineno, source)
        try:
            poly = Polygon(tuple(zip(xs, ys)))
        except GeometryError as exc:
            if strict:
                raise ParseError(f"invalid polygon: {exc}", lineno, source) from None
            log.warning("%s line %d: invalid polygon (%s); dropped", source, lineno, exc)
            continue
        tr = m["t"]
        care = m["o"] != "#" and tr != "#"
        out.append(TextInstance(poly, care, tr if care else None))
    return out


def _dims_from_image(path: Path) -> tuple[int, int]:
    from PIL import Image

    with Image.open(path) as im:
        return im.size


def convert_directory(gt_dir, images_dir=None, name: str = "", kind: str = "icdar",
                      default_size: Optional[tuple[int, int]] = None, strict: bool = False,
                      split: str = "unsplit") -> DatasetManifest:
    """Convert a directory of per-image annotation txt files.

    ICDAR files are named ``gt_<image>.txt``; Total-Text exports ``poly_gt_<image>.txt``.
    Image sizes come from ``images_dir`` (any extension) or ``default_size``.
    """
    gt_dir = Path(gt_dir)
    parse: Callable = parse_icdar_gt if kind == "icdar" else parse_totaltext
    images = []
    sizes: dict[str, Path] = {}
    if images_dir is not None:
        for p in Path(images_dir).iterdir():
            sizes[p.stem] = p
    for f in sorted(gt_dir.glob("*.txt")):
        stem = re.sub(r"^(poly_)?gt_", "", f.stem)
        if stem in sizes:
            w, h = _dims_from_image(sizes[stem])
            file_name = sizes[stem].name
        elif default_size is not None:
            w, h = default_size
            file_name = stem
        else:
            raise ParseError("no image found to read dimensions from", source=str(f))
        if kind == "icdar":
            insts = parse_icdar_gt(f.read_bytes(), stem, (w, h), strict)
        else:
            insts = parse(f.read_bytes(), f.name, strict)
        images.append(ImageAnnotation(stem, file_name, w, h, name or gt_dir.name, tuple(insts)))
    return DatasetManifest(name or gt_dir.name, tuple(images), Split(split))


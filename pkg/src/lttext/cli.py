"""Command-line entry point: ``lttext <command> [options]``.

Exit codes: 0 on success, 1 on a usage error (bad flags or config), 2 on a
data error (unreadable or malformed input). Reports go to stdout or --out;
diagnostics and logs go to stderr. Set LTTEXT_LOG=debug to see everything.

A TOML file given with --config supplies defaults under the explicit flags.
Top-level keys apply to every command, a table named after the command
applies to that command only::

    threads = 4
    [eval]
    mode = "hard"
    iou_thresh = 0.5
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import logging
import os
import sys
from dataclasses import replace
from decimal import Decimal
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import __version__, reports
from .annotations import DatasetManifest, Diagnostic, dataset_stats, validate_manifest
from .builder import FilterConfig, enforce_word_level, filter_undetected, filtered_manifest, strip_non_latin
from .converters import convert_coco_text, convert_directory
from .dedup import DedupConfig, dedup_directory, dedup_hashes, read_hash_file
from .errors import FormatError, GeometryError, LTTextError
from .evaluation import EvalConfig, EvalMode, eval_all_categories, evaluate, gap_report
from .formats import load_manifest, parse_detections, toml_loads, write_canonical
from .merge import build_joint, load_plan
from .recon_loss import LossConfig, analytic_gradient, load_image, loss_decomposition

log = logging.getLogger("lttext")

FORMATS = ("json", "csv", "markdown")
LOG_LEVELS = ("debug", "info", "warning", "error")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# argument types

def _threads(text: str) -> int:
    if text == "auto":
        return os.cpu_count() or 1
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer or 'auto', got {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("threads must be >= 1")
    return n


def _unit(text: str) -> float:
    """A threshold in (0, 1]."""
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < v <= 1.0:
        raise argparse.ArgumentTypeError(f"must be in (0, 1], got {v}")
    return v


def _closed_unit(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"must be in [0, 1], got {v}")
    return v


def _finite(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not np.isfinite(v):
        raise argparse.ArgumentTypeError("must be finite")
    return v


def _mode(text: str) -> str:
    if text.strip().lower() == "all":
        return "all"
    try:
        return str(EvalMode.parse(text))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected norm, hard, all or category:<tag>, got {text!r}") from None


def _size(text: str) -> tuple[int, int]:
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}") from None
    if w <= 0 or h <= 0:
        raise argparse.ArgumentTypeError("image size must be positive")
    return w, h


# ---------------------------------------------------------------------------
# parser

# Defaults live here rather than on the parser so that a config file can sit
# between them and the explicit flags.
COMMON_DEFAULTS = {"threads": 1, "out": None, "strict": False, "log_level": "warning"}
DEFAULTS: dict[str, dict] = {
    "convert": {"format": "json", "images_dir": None, "name": "", "split": "unsplit",
                "default_size": None, "coco_split": None},
    "eval": {"format": "json", "mode": "norm", "iou_thresh": 0.5, "dontcare_thresh": 0.5,
             "per_category": False, "per_image": False},
    "filter-undetected": {"format": "json", "iou_thresh": 0.5, "report": None, "latin_only": False,
                          "word_level": False, "name": None},
    "merge": {"format": "markdown", "shuffle_seed": None, "out_dir": "."},
    "dedup": {"format": "csv", "similarity": 0.95, "exact": False, "hashes": None, "images": None,
              "survivors": None},
    "stats": {"format": "markdown", "by_source": False, "validate": False},
    "gap-report": {"format": "markdown"},
    "br-loss": {"format": "json", "alpha": 0.5, "threshold": 0.1, "normalize": False, "gradient": None},
}
# Converters for values that arrive from a config file instead of argv.
CONFIG_TYPES: dict[str, Callable] = {
    "threads": lambda v: _threads(str(v)), "iou_thresh": lambda v: _unit(str(v)),
    "dontcare_thresh": lambda v: _unit(str(v)), "similarity": lambda v: _unit(str(v)),
    "alpha": lambda v: _closed_unit(str(v)), "threshold": lambda v: _finite(str(v)),
    "mode": lambda v: _mode(str(v)), "default_size": lambda v: _size(str(v)),
}


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("global options")
    g.add_argument("--threads", type=_threads, default=None,
                   help="worker threads for per-image work, or 'auto' (default 1)")
    g.add_argument("--out", default=None, help="write the report here instead of stdout")
    g.add_argument("--format", choices=FORMATS, default=None, help="report format")
    g.add_argument("--strict", action="store_true", default=None,
                   help="reject unknown keys and invalid polygons instead of skipping them")
    g.add_argument("--config", default=None, help="TOML file with defaults for these options")
    g.add_argument("--log-level", choices=LOG_LEVELS, default=None,
                   help="stderr log level; LTTEXT_LOG overrides it")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lttext", description="Long-tailed scene text detection toolkit.")
    parser.add_argument("--version", action="version", version=f"lttext {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("convert", help="convert ICDAR, Total-Text or COCO-Text annotations to a manifest")
    p.add_argument("kind", choices=("icdar", "totaltext", "coco-text"))
    p.add_argument("src", help="annotation directory (icdar, totaltext) or JSON file (coco-text)")
    p.add_argument("--images-dir", default=None, help="images to read sizes from")
    p.add_argument("--default-size", type=_size, default=None, help="WxH used when no image is found")
    p.add_argument("--name", default=None, help="dataset name written into the manifest")
    p.add_argument("--split", choices=("train", "test", "unsplit"), default=None)
    p.add_argument("--coco-split", choices=("train", "test"), default=None,
                   help="keep only COCO-Text images of this split")
    _common(p)

    p = sub.add_parser("eval", help="precision/recall/F of detections against ground truth")
    p.add_argument("--gt", required=True, help="ground-truth manifest (JSON)")
    p.add_argument("--det", action="append", required=True,
                   help="detections: JSON file, txt file or directory of txt files; repeatable")
    p.add_argument("--mode", type=_mode, default=None,
                   help="norm, hard, category:<tag>, or all for the per-category table")
    p.add_argument("--iou-thresh", type=_unit, default=None, help="match threshold (default 0.5)")
    p.add_argument("--dontcare-thresh", type=_unit, default=None,
                   help="prediction area inside a don't-care region that suppresses it (default 0.5)")
    p.add_argument("--per-category", action="store_true", default=None)
    p.add_argument("--per-image", action="store_true", default=None)
    _common(p)

    p = sub.add_parser("filter-undetected", help="keep care instances no detector finds")
    p.add_argument("--gt", required=True)
    p.add_argument("--det", action="append", required=True)
    p.add_argument("--iou-thresh", type=_unit, default=None)
    p.add_argument("--latin-only", action="store_true", default=None,
                   help="demote non-Latin instances to don't-care first")
    p.add_argument("--word-level", action="store_true", default=None,
                   help="demote multi-word instances to don't-care first")
    p.add_argument("--report", default=None, help="write a JSON filtering report here")
    p.add_argument("--name", default=None)
    _common(p)

    p = sub.add_parser("merge", help="build joint train/test manifests from a plan")
    p.add_argument("--plan", required=True, help="TOML or JSON merge plan")
    p.add_argument("--shuffle-seed", type=int, default=None)
    p.add_argument("--out-dir", default=None, help="where <name>-train.json and <name>-test.json go")
    _common(p)

    p = sub.add_parser("dedup", help="find near-duplicate images")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--images", help="directory searched recursively for images")
    src.add_argument("--hashes", help="CSV of image_id,hex hash")
    p.add_argument("--similarity", type=_unit, default=None, help="duplicate above this (default 0.95)")
    p.add_argument("--exact", action="store_true", default=None, help="compare every pair")
    p.add_argument("--survivors", default=None, help="write surviving ids here, one per line")
    _common(p)

    p = sub.add_parser("stats", help="category distribution of one or more manifests")
    p.add_argument("manifests", nargs="+")
    p.add_argument("--by-source", action="store_true", default=None,
                   help="one row per source dataset instead of per manifest")
    p.add_argument("--validate", action="store_true", default=None,
                   help="also report manifest diagnostics on stderr")
    _common(p)

    p = sub.add_parser("gap-report", help="fine-tuning gap matrix from train/test F values")
    p.add_argument("input", help="CSV with train,test,f columns or JSON list of such objects")
    _common(p)

    p = sub.add_parser("br-loss", help="balanced reconstruction loss of one image")
    p.add_argument("--image", required=True, help="original image (PNG/PPM or .npy)")
    p.add_argument("--recon", required=True, help="reconstruction, same shape")
    p.add_argument("--mask", required=True, help="guidance map, HxW")
    p.add_argument("--alpha", type=_closed_unit, default=None, help="text weight (default 0.5)")
    p.add_argument("--threshold", type=_finite, default=None, help="guidance threshold (default 0.1)")
    p.add_argument("--normalize", action="store_true", default=None, help="divide by H*W*C")
    p.add_argument("--gradient", default=None, help="write d loss / d recon as .npy here")
    _common(p)
    return parser


def _read_config(path: str) -> dict:
    try:
        doc = toml_loads(Path(path).read_bytes())
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise UsageError(f"invalid config {path}: {exc}") from None
    return doc


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset options from the config file, then from the built-in defaults."""
    defaults = {**COMMON_DEFAULTS, **DEFAULTS[args.command]}
    layered = dict(defaults)
    if args.config:
        doc = _read_config(args.config)
        section = doc.get(args.command, {})
        flat = {k: v for k, v in doc.items() if not isinstance(v, dict)}
        for key, value in {**flat, **section}.items():
            dest = key.replace("-", "_")
            if dest not in defaults:
                raise UsageError(f"config key {key!r} is not an option of {args.command}")
            try:
                layered[dest] = CONFIG_TYPES[dest](value) if dest in CONFIG_TYPES else value
            except argparse.ArgumentTypeError as exc:
                raise UsageError(f"config key {key!r}: {exc}") from None
    for dest, value in layered.items():
        if getattr(args, dest, None) is None:
            setattr(args, dest, value)
    return args


# ---------------------------------------------------------------------------
# helpers

@contextlib.contextmanager
def reading(path):
    """Re-raise any input problem as a DataError naming the path."""
    try:
        yield
    except (DataError, UsageError):
        raise
    except FileNotFoundError:
        raise DataError(f"{path}: no such file or directory") from None
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror or exc}") from None
    except (LTTextError, FormatError, GeometryError, ValueError, KeyError, TypeError) as exc:
        raise DataError(f"{path}: {exc}") from None


def _emit(text: str, args) -> None:
    if args.out:
        with reading(args.out):
            Path(args.out).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)


def _write_bytes(path, data: bytes) -> None:
    with reading(path):
        Path(path).write_bytes(data)


def _report_diagnostics(diags: list[Diagnostic], what: str) -> None:
    if not diags:
        return
    codes: dict[str, int] = {}
    for d in diags:
        codes[d.code] = codes.get(d.code, 0) + 1
        log.debug("%s", d)
    for code, n in sorted(codes.items()):
        log.warning("%s: %d x %s", what, n, code)


def _load_gt(args) -> DatasetManifest:
    diags: list[Diagnostic] = []
    with reading(args.gt):
        m = load_manifest(args.gt, args.strict, diags)
    _report_diagnostics(diags, args.gt)
    return m


def _load_dets(args):
    out = []
    for path in args.det:
        with reading(path):
            out.append(parse_detections(path, strict=args.strict))
    names = [d.detector_name for d in out]
    if len(set(names)) != len(names):
        log.warning("detector names repeat (%s); rows may be ambiguous", ", ".join(names))
    return out


# ---------------------------------------------------------------------------
# commands

def cmd_convert(args) -> None:
    with reading(args.src):
        if args.kind == "coco-text":
            m = convert_coco_text(args.src, args.name or "COCO-Text", args.coco_split, args.strict)
        else:
            m = convert_directory(args.src, args.images_dir, args.name, args.kind.replace("-", ""),
                                  args.default_size, args.strict, args.split)
    _report_diagnostics(validate_manifest(m), args.src)
    _emit(write_canonical(m).decode("utf-8"), args)


def cmd_eval(args) -> None:
    gt = _load_gt(args)
    dets = _load_dets(args)
    cfg = EvalConfig(args.iou_thresh, args.dontcare_thresh)
    if args.mode == "all":
        rows = eval_all_categories(gt, dets, cfg, threads=args.threads)
        _emit(reports.category_table(rows, args.format), args)
        return
    cfg = replace(cfg, mode=EvalMode.parse(args.mode))
    reps = []
    for det in dets:
        rep = evaluate(gt, det, cfg, args.per_category, args.per_image, args.threads)
        _report_diagnostics(rep.diagnostics, det.detector_name)
        reps.append(rep)
    _emit(reports.eval_reports(reps, args.format), args)


def cmd_filter(args) -> None:
    gt = _load_gt(args)
    dets = _load_dets(args)
    cleaning = []
    if args.latin_only:
        gt, rep = strip_non_latin(gt)
        cleaning.append(rep)
    if args.word_level:
        gt, rep = enforce_word_level(gt)
        cleaning.append(rep)
    result = filter_undetected(dets, gt, FilterConfig(args.iou_thresh), threads=args.threads)
    out = filtered_manifest(gt, result, args.name)
    log.info("%d undetected instances in %d images", result.count, len(result.images_with_undetected))
    if args.report:
        doc = {
            "iou_threshold": args.iou_thresh,
            "detectors": [d.detector_name for d in dets],
            "images_with_undetected": result.images_with_undetected,
            "undetected": {k: v for k, v in result.indices.items()},
            "undetected_count": result.count,
            "cleaning": [c.to_dict() for c in cleaning],
        }
        with reading(args.report):
            Path(args.report).write_text(reports.to_json(doc), encoding="utf-8")
    if args.format == "json":
        _emit(write_canonical(out).decode("utf-8"), args)
    elif args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["image_id", "instance"])
        for image_id in result.images_with_undetected:
            for k in result.indices[image_id]:
                w.writerow([image_id, k])
        _emit(buf.getvalue(), args)
    else:
        s = dataset_stats(out)
        _emit(f"Undetected instances: {result.count}\n"
              f"Images with undetected instances: {len(result.images_with_undetected)}\n"
              f"Don't-care regions kept: {s.dontcare_instances}\n", args)


def cmd_merge(args) -> None:
    def loader(p):
        with reading(p):
            return load_manifest(p, args.strict)

    with reading(args.plan):
        plan = load_plan(args.plan, loader, args.shuffle_seed, args.threads)
        train, test, rep = build_joint(plan)
    out_dir = Path(args.out_dir)
    with reading(out_dir):
        out_dir.mkdir(parents=True, exist_ok=True)
    _write_bytes(out_dir / f"{plan.name}-train.json", write_canonical(train))
    _write_bytes(out_dir / f"{plan.name}-test.json", write_canonical(test))
    if args.format == "json":
        _emit(reports.to_json(rep.to_dict()), args)
    elif args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["dataset", "policy", "original_train", "original_test", "train", "test"])
        for r in rep.rows:
            w.writerow([r.dataset, r.policy, r.original_train, r.original_test, r.train, r.test])
        w.writerow(["Total", "", "", "", rep.train_total, rep.test_total])
        _emit(buf.getvalue(), args)
    else:
        _emit(reports.merge_table(rep), args)


def cmd_dedup(args) -> None:
    cfg = DedupConfig(args.similarity, exact=args.exact)
    if args.hashes:
        with reading(args.hashes):
            res = dedup_hashes(read_hash_file(args.hashes), cfg)
    else:
        with reading(args.images):
            res = dedup_directory(args.images, cfg, threads=args.threads)
    _report_diagnostics(res.diagnostics, args.images or args.hashes)
    if args.survivors:
        with reading(args.survivors):
            Path(args.survivors).write_text(res.survivors_text(), encoding="utf-8")
    if args.format == "json":
        _emit(reports.to_json({
            "pairs": [{"id_a": a, "id_b": b, "similarity": s} for a, b, s in res.pairs],
            "survivors": res.survivors,
            "removed": dict(sorted(res.removed.items())),
        }), args)
    elif args.format == "csv":
        _emit(res.pairs_csv(), args)
    else:
        _emit(f"Duplicate pairs: {len(res.pairs)}\nSurvivors: {len(res.survivors)}\n"
              f"Removed: {len(res.removed)}\n", args)


def cmd_stats(args) -> None:
    named = []
    for path in args.manifests:
        diags: list[Diagnostic] = []
        with reading(path):
            m = load_manifest(path, args.strict, diags)
        if args.validate:
            diags += validate_manifest(m)
            for d in diags:
                print(f"{path}: {d}", file=sys.stderr)
        else:
            _report_diagnostics(diags, path)
        if args.by_source:
            groups: dict[str, list] = {}
            for im in m.images:
                groups.setdefault(im.source_dataset or m.name, []).append(im)
            named += [(src, dataset_stats(imgs)) for src, imgs in groups.items()]
        else:
            named.append((m.name, dataset_stats(m)))
    _emit(reports.stats_report(named, args.format), args)


def _read_gap_input(path: str) -> dict[tuple[str, str], Decimal]:
    raw = Path(path).read_bytes().decode("utf-8-sig")
    cells: dict[tuple[str, str], Decimal] = {}
    if path.lower().endswith(".json"):
        doc = json.loads(raw, parse_float=Decimal, parse_int=Decimal)
        rows = doc.get("cells", []) if isinstance(doc, dict) else doc
        if not isinstance(rows, list):
            raise FormatError("expected a list of {train, test, f} objects")
        for r in rows:
            cells[(str(r["train"]), str(r["test"]))] = Decimal(str(r["f"]))
    else:
        for r in csv.DictReader(io.StringIO(raw)):
            if not r.get("train"):
                continue
            cells[(r["train"], r["test"])] = Decimal(r["f"].strip())
    for key, v in cells.items():
        if not v.is_finite():
            raise FormatError(f"non-finite F value for {key}")
    return cells


def cmd_gap(args) -> None:
    with reading(args.input):
        g = gap_report(_read_gap_input(args.input))
    _emit(reports.gap_matrix(g, args.format), args)


def _load_array(path: str, mask: bool) -> np.ndarray:
    if path.lower().endswith(".npy"):
        return np.load(path, allow_pickle=False)
    return load_image(path, mask=mask)


def cmd_br_loss(args) -> None:
    cfg = LossConfig(args.alpha, args.threshold, args.normalize)
    with reading(args.image):
        img = _load_array(args.image, False)
    with reading(args.recon):
        rec = _load_array(args.recon, False)
    with reading(args.mask):
        mg = _load_array(args.mask, True)
    with reading(args.image):
        text, bg = loss_decomposition(img, rec, mg, cfg)
        grad = analytic_gradient(img, rec, mg, cfg) if args.gradient else None
    if grad is not None:
        with reading(args.gradient):
            np.save(args.gradient, grad)
    doc = {"total": text + bg, "text_term": text, "background_term": bg,
           "alpha": cfg.alpha, "threshold": cfg.threshold, "normalize": cfg.normalize}
    if args.format == "json":
        _emit(reports.to_json(doc), args)
    elif args.format == "csv":
        _emit(f"total,text_term,background_term\n{doc['total']!r},{text!r},{bg!r}\n", args)
    else:
        _emit("| Total | Text term | Background term |\n|---|---|---|\n"
              f"| {doc['total']:.6g} | {text:.6g} | {bg:.6g} |\n", args)


COMMANDS = {
    "convert": cmd_convert,
    "eval": cmd_eval,
    "filter-undetected": cmd_filter,
    "merge": cmd_merge,
    "dedup": cmd_dedup,
    "stats": cmd_stats,
    "gap-report": cmd_gap,
    "br-loss": cmd_br_loss,
}


def _setup_logging(level: str) -> None:
    env = os.environ.get("LTTEXT_LOG", "").strip().lower()
    if env:
        if env not in LOG_LEVELS:
            raise UsageError(f"LTTEXT_LOG must be one of {', '.join(LOG_LEVELS)}, got {env!r}")
        level = env
    root = logging.getLogger("lttext")
    root.setLevel(level.upper())
    for h in list(root.handlers):
        if getattr(h, "_lttext", False):
            root.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("lttext: %(levelname)s: %(message)s"))
    handler._lttext = True  # type: ignore[attr-defined]
    root.addHandler(handler)
    root.propagate = False


def run(argv: Optional[list[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        resolve(args)
        _setup_logging(args.log_level)
    except UsageError as exc:
        print(f"{exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    try:
        COMMANDS[args.command](args)
    except DataError as exc:
        print(f"lttext {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except UsageError as exc:
        print(f"lttext {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

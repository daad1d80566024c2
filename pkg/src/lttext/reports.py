"""JSON, CSV and Markdown emitters for evaluation, stats, gap and merge reports."""

from __future__ import annotations

import csv
import io
import json
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Optional

from .annotations import TABLE_ORDER, ChallengeCategory, ChallengeGroup, StatsReport
from .evaluation import CategoryTableRow, EvalReport, GapMatrix, mean_f
from .merge import MergeReport

DASH = "—"


def pct(x: Optional[float]) -> str:
    """Fraction in [0, 1] as a one-decimal percentage; ``None`` renders as a dash."""
    if x is None:
        return DASH
    return str((Decimal(repr(x)) * 100).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def one_decimal(x) -> str:
    return str(Decimal(str(x)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def to_json(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=False) + "\n"


def _md_table(header: list[str], rows: Iterable[list[str]]) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(r) + " |" for r in rows]
    return "\n".join(lines) + "\n"


def _csv(rows: list[list]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# evaluation

def eval_report(rep: EvalReport, fmt: str) -> str:
    return eval_reports([rep], fmt)


def eval_reports(reps: list[EvalReport], fmt: str) -> str:
    """Reports for one or more detectors; JSON is an object for one, a list otherwise."""
    if fmt == "json":
        docs = [r.to_dict() for r in reps]
        return to_json(docs[0] if len(docs) == 1 else docs)
    if fmt == "csv":
        rows = [["detector", "mode", "category", "tp", "fp", "fn", "precision", "recall", "f_measure"]]
        for rep in reps:
            rows.append([rep.detector, rep.mode, "overall", rep.true_positives, rep.false_positives,
                         rep.false_negatives, repr(rep.precision), repr(rep.recall), repr(rep.f_measure)])
            for c in TABLE_ORDER if rep.per_category else ():
                s = rep.per_category[c]
                p, r, f = ("", "", "") if s.vacuous else tuple(map(repr, s.prf))
                rows.append([rep.detector, "category", c.value, s.tp, s.fp, s.fn, p, r, f])
        return _csv(rows)
    if fmt == "markdown":
        header = ["Detector", "Mode", "TP", "FP", "FN", "P", "R", "F"]
        rows = [[rep.detector, rep.mode, str(rep.true_positives), str(rep.false_positives),
                 str(rep.false_negatives), pct(rep.precision), pct(rep.recall), pct(rep.f_measure)]
                for rep in reps]
        out = _md_table(header, rows)
        for rep in reps:
            if rep.per_category:
                out += f"\n{rep.detector or 'detector'} per category\n\n" + _md_table(
                    ["Category", "P", "R", "F"],
                    [[c.label] + ([DASH] * 3 if rep.per_category[c].vacuous else
                                  [pct(v) for v in rep.per_category[c].prf]) for c in TABLE_ORDER])
        return out
    raise ValueError(f"unknown format {fmt!r}")


_GROUP_TITLES = {
    ChallengeGroup.INTRA: "Intra-instance",
    ChallengeGroup.INTER: "Inter-instance",
    ChallengeGroup.BACKGROUND: "Background",
    ChallengeGroup.OTHER: "Others",
}


def category_table_header() -> list[str]:
    return [c.label for c in TABLE_ORDER] + ["Hard", "Norm"]


def category_table(rows: list[CategoryTableRow], fmt: str) -> str:
    if fmt == "json":
        return to_json([{"detector": r.detector,
                         "categories": {c.value: r.categories[c] for c in TABLE_ORDER},
                         "hard": r.hard, "norm": r.norm} for r in rows])
    if fmt == "csv":
        out = [["detector"] + [c.value for c in TABLE_ORDER] + ["hard", "norm"]]
        for r in rows:
            out.append([r.detector] + ["" if r.categories[c] is None else repr(r.categories[c])
                                       for c in TABLE_ORDER] + [repr(r.hard), repr(r.norm)])
        return _csv(out)
    if fmt == "markdown":
        groups, last = [], None
        for c in TABLE_ORDER:
            title = _GROUP_TITLES[c.group]
            groups.append(title if title != last else "")
            last = title
        header = ["Method"] + category_table_header()
        body = [[""] + groups + ["Overall", ""]]
        body += [[r.detector] + [pct(r.categories[c]) for c in TABLE_ORDER] + [pct(r.hard), pct(r.norm)]
                 for r in rows]
        return _md_table(header, body)
    raise ValueError(f"unknown format {fmt!r}")


# ---------------------------------------------------------------------------
# stats

DISTRIBUTION_ORDER: tuple[ChallengeCategory, ...] = tuple(ChallengeCategory)


def stats_report(named: list[tuple[str, StatsReport]], fmt: str) -> str:
    """One row per dataset plus a Total row, cells as ``images/instances``."""
    total = StatsReport()
    for _, s in named:
        total = total + s
    rows = named + ([("Total", total)] if len(named) != 1 else [])
    if fmt == "json":
        return to_json({name: s.to_dict() for name, s in rows})
    if fmt == "csv":
        out = [["dataset", "category", "images", "instances"]]
        for name, s in rows:
            for c in DISTRIBUTION_ORDER:
                out.append([name, c.value, s.category_images[c], s.category_instances[c]])
            out.append([name, "total", s.images, s.care_instances])
        return _csv(out)
    if fmt == "markdown":
        header = ["Dataset"] + [c.label for c in DISTRIBUTION_ORDER] + ["Total", "Don't care", "Mean attrs"]

        def cell(i: int, n: int) -> str:
            return DASH if n == 0 else f"{i}/{n}"

        body = [[name] + [cell(s.category_images[c], s.category_instances[c]) for c in DISTRIBUTION_ORDER]
                + [f"{s.images}/{s.care_instances}", str(s.dontcare_instances), f"{s.mean_attributes:.3f}"]
                for name, s in rows]
        return _md_table(header, body)
    raise ValueError(f"unknown format {fmt!r}")


# ---------------------------------------------------------------------------
# gap matrix

def gap_matrix(g: GapMatrix, fmt: str) -> str:
    if fmt == "json":
        return to_json(g.to_dict())
    if fmt == "csv":
        out = [["train", "test", "f", "gap"]]
        for (tr, te), v in g.cells.items():
            gap = g.gaps.get((tr, te))
            out.append([tr, te, str(v), "" if gap is None else str(gap)])
        return _csv(out)
    if fmt == "markdown":
        header = ["Train \\ Test"] + g.test_sets + ["Avg."]
        body = []
        for tr in g.train_sets:
            row = [tr]
            for te in g.test_sets:
                v = g.cells.get((tr, te))
                if v is None:
                    row.append(DASH)
                elif te == tr:
                    row.append(f"**{one_decimal(v)}**")
                else:
                    row.append(f"{one_decimal(v)} (−{one_decimal(g.gaps[(tr, te)])})"
                               if g.gaps[(tr, te)] >= 0 else f"{one_decimal(v)} (+{one_decimal(-g.gaps[(tr, te)])})")
            row.append(one_decimal(g.row_mean(tr)))
            body.append(row)
        out = _md_table(header, body)
        if g.gaps:
            out += f"\nmax gap: {one_decimal(g.max_gap)}; mean gap: {one_decimal(g.mean_gap)}\n"
        return out
    raise ValueError(f"unknown format {fmt!r}")


def row_average(values: Iterable) -> str:
    return one_decimal(mean_f(values))


# ---------------------------------------------------------------------------
# merge

def merge_table(rep: MergeReport) -> str:
    header = ["Datasets", "Policy", "Original train", "Original test", "Train", "Test"]
    # split datasets have no original test set of their own
    body = [[r.dataset, r.policy, str(r.original_train),
             str(r.original_test) if r.original_test or r.policy == "keep" else DASH, str(r.train), str(r.test)]
            for r in rep.rows]
    body.append(["Total", "", "", "", str(rep.train_total), str(rep.test_total)])
    return _md_table(header, body)

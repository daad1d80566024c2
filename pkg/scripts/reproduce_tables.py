"""Recompute the published tables that are pure arithmetic over released numbers.

    python3 scripts/reproduce_tables.py [ltb|joint|gap|avg|all] [--format markdown|json|csv]

ltb    distribution of challenge categories on the benchmark fixture manifest
joint  per-dataset train/test composition of the nine-dataset union
gap    fine-tuning gap matrices for the two reference detectors
avg    unweighted average over a nine-test-set F row
"""

import argparse

from lttext import reports
from lttext.annotations import dataset_stats
from lttext.evaluation import gap_report
from lttext.merge import build_joint
from lttext.reference import FINETUNE_F, NINE_SET_ROW_DBNETPP
from lttext.synth import joint98k_plan, ltb_manifest


def ltb(fmt: str) -> str:
    m = ltb_manifest()
    groups: dict[str, list] = {}
    for im in m.images:
        groups.setdefault(im.source_dataset, []).append(im)
    return reports.stats_report([(ds, dataset_stats(imgs)) for ds, imgs in groups.items()], fmt)


def joint(fmt: str) -> str:
    _, _, rep = build_joint(joint98k_plan())
    return reports.to_json(rep.to_dict()) if fmt == "json" else reports.merge_table(rep)


def gap(fmt: str) -> str:
    out = []
    for name, cells in FINETUNE_F.items():
        body = reports.gap_matrix(gap_report(cells), fmt)
        out.append(body if fmt == "json" else f"{name}\n\n{body}")
    return "\n".join(out)


def avg(fmt: str) -> str:
    values, printed = NINE_SET_ROW_DBNETPP
    got = reports.row_average(values)
    return f"DBNet++ row {', '.join(values)} -> Avg. {got} (published {printed})\n"


TABLES = {"ltb": ltb, "joint": joint, "gap": gap, "avg": avg}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("table", nargs="?", default="all", choices=[*TABLES, "all"])
    ap.add_argument("--format", default="markdown", choices=("markdown", "json", "csv"))
    args = ap.parse_args()
    names = list(TABLES) if args.table == "all" else [args.table]
    for name in names:
        print(f"## {name}\n")
        print(TABLES[name](args.format))


if __name__ == "__main__":
    main()

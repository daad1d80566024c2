"""Solve for an instance layout that reproduces the LTB distribution table.

The cells come from ``ltb_fixture_distribution`` so that category columns
add up to the published Total row.

For each source dataset we need, per challenge category, exactly the
published number of images containing it and instances carrying it, with
every care instance carrying at least one category. A small integer
program finds per-image label counts; labels are then dealt round-robin
over each image's instances. Output: src/lttext/data/ltb_layout.json.

    python scripts/build_ltb_layout.py
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import lil_matrix

from lttext.annotations import ChallengeCategory
from lttext.reference import ltb_fixture_distribution

OUT = Path(__file__).resolve().parents[1] / "src" / "lttext" / "data" / "ltb_layout.json"


def solve(n: int, total: int, cells: dict) -> list[list[list[str]]]:
    cats = sorted(cells, key=lambda c: c.value)
    nc = len(cats)
    ny = nl = nc * n
    nv = ny + nl + n

    def y(c, k):
        return c * n + k

    def lab(c, k):
        return ny + c * n + k

    def s(k):
        return ny + nl + k

    a = lil_matrix((2 * nc + 3 * nc * n + n + 1, nv))
    lo, hi = [], []
    r = 0

    def row(lower, upper):
        nonlocal r
        lo.append(lower)
        hi.append(upper)
        r += 1

    for c, cat in enumerate(cats):
        n_img, n_inst = cells[cat]
        for k in range(n):
            a[r, y(c, k)] = 1
        row(n_img, n_img)
        for k in range(n):
            a[r, lab(c, k)] = 1
        row(n_inst, n_inst)
        for k in range(n):
            a[r, lab(c, k)], a[r, y(c, k)] = 1, -1
            row(0, np.inf)
            a[r, lab(c, k)], a[r, y(c, k)] = 1, -total
            row(-np.inf, 0)
            a[r, lab(c, k)], a[r, s(k)] = 1, -1
            row(-np.inf, 0)
    for k in range(n):
        for c in range(nc):
            a[r, lab(c, k)] = 1
        a[r, s(k)] = -1
        row(0, np.inf)
    for k in range(n):
        a[r, s(k)] = 1
    row(total, total)

    lb = np.zeros(nv)
    ub = np.full(nv, float(total))
    ub[:ny] = 1
    lb[ny + nl:] = 1
    res = milp(np.zeros(nv), constraints=LinearConstraint(a.tocsr(), lo, hi),
               integrality=np.ones(nv), bounds=Bounds(lb, ub))
    if res.status != 0:
        raise RuntimeError(res.message)
    x = np.rint(res.x).astype(int)

    images = []
    for k in range(n):
        size = x[s(k)]
        slots: list[list[str]] = [[] for _ in range(size)]
        p = 0
        for c, cat in enumerate(cats):
            for _ in range(x[lab(c, k)]):
                slots[p % size].append(cat.value)
                p += 1
        images.append(slots)
    # largest images first so the layout reads naturally
    images.sort(key=lambda im: (-len(im), im))
    return images


def main() -> None:
    layout = {}
    for ds, spec in ltb_fixture_distribution().items():
        n_img, n_inst = spec["total"]
        layout[ds] = solve(n_img, n_inst, spec["categories"])
        print(f"{ds}: {n_img} images, {n_inst} instances")
    OUT.write_text(json.dumps(layout, separators=(",", ":")) + "\n", encoding="utf-8")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    assert len(ChallengeCategory) == 13
    main()

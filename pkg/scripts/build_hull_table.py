"""Regenerate src/multihelix/data/hulls.csv.

For each disk count n the script searches hexagonal-lattice clusters: every
parallelogram patch of the triangular lattice cut by two diagonal lines is
trimmed greedily (drop the hull vertex whose removal shortens the hull most)
down to n points. The smallest centre-hull perimeter found, plus pi, is the
hull perimeter around unit-diameter disks. These are upper estimates of the
true minimal hulls (exact only for small n), so every row is flagged
conjectural except the first few where the lattice cluster is known optimal.

    python3 scripts/build_hull_table.py [max_n]
"""
from __future__ import annotations

import math
import sys
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "multihelix" / "data" / "hulls.csv"
PROVEN = {1, 2, 3, 4, 5, 6}


def hull_indices(points: np.ndarray) -> list[int]:
    order = sorted(range(len(points)), key=lambda k: (round(points[k][0], 9), round(points[k][1], 9)))

    def cross(o, a, b):
        return ((points[a][0] - points[o][0]) * (points[b][1] - points[o][1])
                - (points[a][1] - points[o][1]) * (points[b][0] - points[o][0]))

    lower, upper = [], []
    for k in order:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], k) <= 1e-12:
            lower.pop()
        lower.append(k)
    for k in reversed(order):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], k) <= 1e-12:
            upper.pop()
        upper.append(k)
    return lower[:-1] + upper[:-1]


def centre_perimeter(points: np.ndarray) -> float:
    if len(points) < 2:
        return 0.0
    v = points[hull_indices(points)]
    return float(np.linalg.norm(v - np.roll(v, 1, axis=0), axis=1).sum())


def lattice_hull(n: int, slack: int = 8) -> float:
    if n == 1:
        return 0.0
    side = int(math.ceil(math.sqrt(n))) + 2
    best = math.inf
    for a in range(side + 1):
        for b in range(a, side + 1):
            if (a + 1) * (b + 1) < n:
                continue
            i, j = np.meshgrid(np.arange(a + 1), np.arange(b + 1))
            i, j = i.ravel(), j.ravel()
            s = i + j
            for c1 in range(a + b + 1):
                for c2 in range(c1, a + b + 1):
                    mask = (s >= c1) & (s <= c2)
                    count = int(mask.sum())
                    if count < n or count > n + slack:
                        continue
                    pts = np.c_[i[mask] + 0.5 * j[mask], j[mask] * math.sqrt(3) / 2].astype(float)
                    while len(pts) > n:
                        pts = min((np.delete(pts, v, axis=0) for v in hull_indices(pts)), key=centre_perimeter)
                    best = min(best, centre_perimeter(pts))
    return best


def main(max_n: int = 120) -> None:
    rows = ["# hull perimeter around n unit-diameter disks (centre hull + pi); regenerate with scripts/build_hull_table.py",
            "n,perimeter,conjectural"]
    for n in range(1, max_n + 1):
        per = lattice_hull(n) + math.pi
        rows.append(f"{n},{per:.10f},{0 if n in PROVEN else 1}")
        print(n, round(per, 6), file=sys.stderr, flush=True)
    OUT.write_text("\n".join(rows) + "\n")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 120)

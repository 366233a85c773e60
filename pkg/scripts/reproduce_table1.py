"""Print the single-shell optimum table for n = 2..N next to the reference values.

    python3 scripts/reproduce_table1.py [N]
"""
import sys

from multihelix.acceptance import TABLE1
from multihelix.helix_core import ideal_helix


def main(n_max: int = 10) -> None:
    print(f"{'n':>3} {'R':>10} {'H':>10} {'L':>10} {'L/C':>10}  max rel err")
    for n in range(2, n_max + 1):
        p = ideal_helix(n)
        got = (p.radius, p.height, p.length_per_twist, p.length_per_crossing)
        err = max(abs(g / r - 1) for g, r in zip(got, TABLE1[n])) if n in TABLE1 else float("nan")
        print(f"{n:3d} " + " ".join(f"{v:10.5f}" for v in got) + f"  {err:.1e}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 10)

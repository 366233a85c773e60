"""Best arrangements for Q = 2..39 with closed-link ratios (p = 3, minimal rule).

Writes a CSV to stdout and a comparison column against the reference table.
Takes a few minutes; pass --no-close to skip the closures.

    python3 scripts/reproduce_table3.py [--no-close] [--jobs 4]
"""
import argparse
import csv
import sys

from multihelix.acceptance import TABLE3
from multihelix.shell_optimizer import exhaustive_search
from multihelix.torus_closure import close_link


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--no-close", action="store_true")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["q", "arrangement", "length", "ref_length", "rel_err", "ratio", "ref_ratio"])
    for q, (ref_len, ref_label, ref_ratio) in TABLE3.items():
        best = exhaustive_search(q - 1, jobs=args.jobs)[0]
        ratio = "" if args.no_close else f"{close_link(best, 3).report.ratio:.4f}"
        w.writerow([q, best.arrangement.label(), f"{best.total_length:.4f}", ref_len,
                    f"{best.total_length / ref_len - 1:.1e}", ratio, ref_ratio])
        sys.stdout.flush()


if __name__ == "__main__":
    main()

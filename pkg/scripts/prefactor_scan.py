"""L / Q^(3/2) for each scalable family over decades of Q, plus the fitted exponent.

    python3 scripts/prefactor_scan.py [max_exponent]
"""
import sys

import numpy as np

from multihelix.scalable_constructions import delta_exact_prefactor, prefactor_scan

KINDS = ("incremental", "equal_per_shell", "gamma", "infilled")


def main(max_exp: int = 6) -> None:
    qs = [10 ** e for e in range(2, max_exp + 1)]
    print(f"{'family':>16} " + " ".join(f"{'Q=1e%d' % e:>9}" for e in range(2, max_exp + 1)) + "   exponent")
    for kind in KINDS:
        reps = prefactor_scan(kind, qs)
        slope = np.polyfit(np.log([r.q for r in reps]), np.log([r.length for r in reps]), 1)[0]
        print(f"{kind:>16} " + " ".join(f"{r.measured_prefactor:9.4f}" for r in reps) + f"   {slope:.4f}")
    print(f"closed-form infill constant: {delta_exact_prefactor():.5f}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 6)

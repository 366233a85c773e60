"""Acceptance checks with pinned reference values and tolerances.

Each criterion returns a CriterionResult holding individual checks. The same
functions back `multihelix verify` and tests/test_acceptance.py, so both
report identical numbers.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from . import helix_core as hc
from . import scalable_constructions as sc
from . import shell_optimizer as so
from . import torus_closure as tc
from .constraint_geometry import (DEFAULT_FIT, min_height, min_radius, planar_min_radius,
                                  scaled_coordinates)

# reference values --------------------------------------------------------

TABLE1 = {  # n: (R, H, L, L/C)
    2: (1.04587, 5.3934, 17.0026, 8.5013),
    3: (1.43524, 8.36102, 36.8926, 6.14877),
    4: (1.86156, 11.2303, 64.8603, 5.40503),
    5: (2.29861, 14.0787, 100.846, 5.0423),
    6: (2.7404, 16.9191, 144.839, 4.82797),
    7: (3.18472, 19.7556, 196.834, 4.68652),
    8: (3.63056, 22.5898, 256.832, 4.58629),
    9: (4.07739, 25.4227, 324.83, 4.51153),
    10: (4.52491, 28.2546, 400.828, 4.45364),
}

TABLE3 = {  # Q: (length per twist, arrangement, closed-link ratio)
    2: (14.72454, "[1,1]", 13.8768), 3: (30.73456, "[1,2]", 13.4973),
    4: (49.78447, "[1,3]", 12.5865), 5: (75.83379, "[1,3,1]", 12.4741),
    6: (101.8831, "[1,3,2]", 13.7952), 7: (127.9324, "[1,3,3]", 13.0972),
    8: (157.7684, "[1,4,3]", 11.6443), 9: (185.0106, "[1,4,4]", 12.6218),
    10: (214.4321, "[1,4,5]", 12.2666), 11: (253.6763, "[1,4,5,1]", 12.22),
    12: (292.9205, "[1,4,5,2]", 12.1181), 13: (332.1647, "[1,4,5,3]", 11.9766),
    14: (371.4089, "[1,4,5,4]", 12.8455), 15: (410.6531, "[1,4,5,5]", 12.613),
    16: (459.9192, "[1,5,7,3]", 12.04), 17: (500.1824, "[1,4,6,6]", 12.5978),
    18: (542.8946, "[1,5,7,5]", 11.7), 19: (584.3822, "[1,5,7,6]", 11.5455),
    20: (625.8699, "[1,5,7,7]", 11.91), 21: (674.2664, "[1,5,7,8]", 12.2183),
    22: (727.5485, "[1,5,7,8,1]", 12.1617), 23: (780.8305, "[1,5,7,8,2]", 12.0935),
    24: (834.1126, "[1,5,7,8,3]", 12.0181), 25: (887.3946, "[1,5,7,8,4]", 11.9359),
    26: (940.6767, "[1,5,7,8,5]", 11.8492), 27: (993.9587, "[1,5,7,8,6]", 11.7592),
    28: (1047.241, "[1,5,7,8,7]", 12.4236), 29: (1100.523, "[1,5,7,8,8]", 12.3093),
    30: (1165.793, "[1,5,7,8,8,1]", 12.2867), 31: (1226.158, "[1,5,8,9,8]", 12.412),
    32: (1280.561, "[1,5,8,9,9]", 12.298), 33: (1346.749, "[1,5,8,9,9,1]", 12.2626),
    34: (1412.937, "[1,5,8,9,9,2]", 12.2219), 35: (1479.125, "[1,5,8,9,9,3]", 12.1769),
    36: (1545.313, "[1,5,8,9,9,4]", 12.1283), 37: (1611.501, "[1,5,8,9,9,5]", 12.0767),
    38: (1677.689, "[1,5,8,9,9,6]", 12.0227), 39: (1743.877, "[1,5,8,9,9,7]", 11.97),
}

JENGA_721 = (1, 5, 12, 17, 22, 26, 30, 33, 36, 38, 40, 41, 42, 43, 44, 44, 45, 46, 46, 47, 47, 16)

TOL_TABLE1 = 5e-4
TOL_TABLE3 = 1e-3
FIT_COLLAPSE_M = (3, 5, 8, 12, 20)
FIT_COLLAPSE_X = np.linspace(0.05, 1.0, 20)


@dataclass(frozen=True)
class Check:
    label: str
    passed: bool
    measured: str
    target: str


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list[Check] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, label: str, passed: bool, measured, target: str) -> None:
        self.checks.append(Check(label, bool(passed), str(measured), target))

    def summary_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        failed = [c.label for c in self.checks if not c.passed]
        tail = f" failed: {', '.join(failed)}" if failed else ""
        return (f"criterion {self.number:2d} {status}  {self.title}  "
                f"({sum(c.passed for c in self.checks)}/{len(self.checks)} checks, {self.seconds:.1f} s){tail}")


def _rel(a: float, b: float) -> float:
    return abs(a / b - 1.0)


def _within(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol


# shared computations --------------------------------------------------------


@lru_cache(maxsize=None)
def table3_configs(vertices: int = 500) -> dict[int, tuple[so.MultihelixConfig, ...]]:
    """Ranked search results for Q = 2..39 (full search to Q=21, windowed above)."""
    return {q: tuple(so.exhaustive_search(q - 1, vertices=vertices)) for q in range(2, 40)}


@lru_cache(maxsize=None)
def table3_closures(p: int = 3) -> dict[int, tc.TorusLinkReport]:
    return {q: tc.close_link(r[0], p, "minimal", lower_bound_mode="circular").report
            for q, r in table3_configs().items()}


@lru_cache(maxsize=None)
def pipeline_721() -> dict:
    sweep = sc.equal_sweep(720)
    t_best, base = min(sweep, key=lambda tc_: tc_[1].total_length)
    filled = sc.infill(base)
    jenga = sc.reverse_jenga(filled.config)
    return {"sweep": sweep, "t_best": t_best, "base": base, "infill": filled, "jenga": jenga}


# criteria -------------------------------------------------------------------


def criterion_1() -> CriterionResult:
    res = CriterionResult(1, "single-shell optimum table (n = 2..10)")
    t0 = time.perf_counter()
    worst = 0.0
    for n, ref in TABLE1.items():
        p = hc.ideal_helix(n)
        got = (p.radius, p.height, p.length_per_twist, p.length_per_crossing)
        err = max(_rel(g, r) for g, r in zip(got, ref))
        worst = max(worst, err)
        res.add(f"n={n}", err <= TOL_TABLE1, f"max rel err {err:.2e}", f"<= {TOL_TABLE1:g}")
    dt = time.perf_counter() - t0
    res.add("runtime", dt < 1.0, f"{dt:.3f} s", "< 1 s")
    return res


def criterion_2() -> CriterionResult:
    res = CriterionResult(2, "multihelix optima Q = 2..39")
    t0 = time.perf_counter()
    ranked = table3_configs()
    for q, (length, label, _) in TABLE3.items():
        best = ranked[q][0]
        ties = {c.arrangement.label() for c in ranked[q]
                if c.total_length <= best.total_length * (1.0 + so.TIE_TOL)}
        err = _rel(best.total_length, length)
        ok = err <= TOL_TABLE3 and label in ties
        res.add(f"Q={q}", ok, f"{best.arrangement.label()} {best.total_length:.4f} ({err:.2e})",
                f"{label} {length} within {TOL_TABLE3:g}")
    dt = time.perf_counter() - t0
    res.add("runtime", dt < 1800.0, f"{dt:.1f} s", "minutes")
    return res


def criterion_3() -> CriterionResult:
    res = CriterionResult(3, "two spot arrangements")
    a = so.optimize_geometry(so.Arrangement.parse("1,5,6"))
    res.add("[1,5,6] length", _within(a.total_length, 297.45, 0.5), f"{a.total_length:.4f}", "297.45 +- 0.5")
    res.add("[1,5,6] inner radius", _within(a.inner_radius, 2.25, 0.05), f"{a.inner_radius:.4f}", "2.25 +- 0.05")
    b = so.optimize_geometry(so.Arrangement.parse("1,4,5,2"))
    res.add("[1,4,5,2] length", _within(b.total_length, 292.92, 0.5), f"{b.total_length:.4f}", "292.92 +- 0.5")
    radii_ok = all(_within(r, t, 1e-3) for r, t in zip(b.shell_radii, (2.0, 4.0, 6.0)))
    res.add("[1,4,5,2] radii", radii_ok, str(tuple(round(r, 4) for r in b.shell_radii)), "(2, 4, 6)")
    return res


def criterion_4() -> CriterionResult:
    res = CriterionResult(4, "4x4 square grid vs concentric 16-multihelix")
    g = so.square_grid_16()
    res.add("spacing", _within(g.spacing, 2.85, 0.05), f"{g.spacing:.4f}", "2.85 +- 0.05")
    res.add("height", _within(g.height, 26.75, 0.3), f"{g.height:.4f}", "26.75 +- 0.3")
    res.add("length", _rel(g.total_length, 619.4) <= 0.01, f"{g.total_length:.3f}", "619.4 +- 1%")
    best16 = table3_configs()[16][0].total_length
    excess = 100.0 * (g.total_length / best16 - 1.0)
    res.add("excess over concentric", _within(excess, 35.0, 2.0), f"{excess:.2f}%", "35 +- 2 pts")
    return res


def criterion_5() -> CriterionResult:
    res = CriterionResult(5, "rod-centred (caduceus) helices")
    c = hc.caduceus(6, refine_radius=True)
    for name, got, ref in (("radius", c.outer_radius, 2.37), ("height", c.height, 13.62),
                           ("length", c.length_per_twist, 114.57)):
        res.add(f"n=6 {name}", _rel(got, ref) <= 0.01, f"{got:.4f}", f"{ref} +- 1%")
    gains = {n: 1.0 - hc.caduceus(n, refine_radius=True).length_per_twist / hc.ideal_helix(n).length_per_twist
             for n in range(2, 11)}
    best = max(gains, key=gains.get)
    res.add("largest improvement", best == 5, f"n={best} ({100 * gains[best]:.1f}%)", "n=5")
    return res


def criterion_6() -> CriterionResult:
    res = CriterionResult(6, "asymptotic prefactors near Q = 1e6")
    q = 10 ** 6

    def timed(fn: Callable[[], float]) -> tuple[float, float]:
        t0 = time.perf_counter()
        v = fn()
        return v, time.perf_counter() - t0

    t_inc = round(math.sqrt(2.0 * q / 5))
    v, dt = timed(lambda: sc.incremental_report(5, t_inc).measured_prefactor)
    res.add("incremental k=5", _rel(v, 10.89) <= 0.02 and dt < 60, f"{v:.4f} ({dt:.1f} s)", "10.89 +- 2%")
    v, dt = timed(lambda: sc.prefactor(sc.equal_optimal(q)))
    res.add("equal per shell", v <= 10.03 and dt < 60, f"{v:.4f} ({dt:.1f} s)", "<= 10.03")
    v, dt = timed(lambda: sc.prefactor(sc.gamma_config(q)))
    res.add("gamma", _rel(v, 9.34) <= 0.01 and dt < 60, f"{v:.4f} ({dt:.1f} s)", "9.34 +- 1%")
    v, dt = timed(lambda: sc.prefactor(sc.infilled_config(q)))
    res.add("infilled", _rel(v, 7.83) <= 0.01 and dt < 60, f"{v:.4f} ({dt:.1f} s)", "7.83 +- 1%")
    v = sc.delta_exact_prefactor()
    res.add("closed form", _within(v, 7.82869, 1e-4), f"{v:.6f}", "7.82869 +- 1e-4")
    return res


def criterion_7() -> CriterionResult:
    res = CriterionResult(7, "721-strand pipeline")
    run = pipeline_721()
    res.add("sweep minimum", run["t_best"] == 20, f"T={run['t_best']}", "T=20")
    base, filled, jenga = run["base"], run["infill"], run["jenga"]
    res.add("base length", _rel(base.total_length, 175000) <= 0.02, f"{base.total_length:.1f}", "175000 +- 2%")
    res.add("infill moves", filled.moved == 112 and filled.interior_shells == 7,
            f"{filled.moved} helices, {filled.interior_shells} shells", "112 helices, 7 shells")
    res.add("infilled length", _rel(filled.config.total_length, 152000) <= 0.02 and filled.feasible,
            f"{filled.config.total_length:.1f}", "152000 +- 2%, feasible")
    arr = jenga.config.arrangement
    res.add("jenga arrangement", tuple(arr.shells) == JENGA_721[1:] and arr.has_rod,
            arr.label(), "[" + ",".join(map(str, JENGA_721)) + "]")
    drop = 100.0 * (1.0 - jenga.config.total_length / filled.config.total_length)
    res.add("jenga reduction", _within(drop, 9.0, 2.0), f"{drop:.2f}%", "9 +- 2 pts")
    return res


def criterion_8() -> CriterionResult:
    res = CriterionResult(8, "torus-link closure")
    cfg = so.optimize_geometry(so.Arrangement.parse("1,5,7,6"))
    rep = tc.close_link(cfg, 3, "minimal", lower_bound_mode="circular").report
    res.add("T(57,19) crossings", rep.crossing_number == 1026, rep.crossing_number, "1026")
    res.add("T(57,19) ratio", _rel(rep.ratio, 11.54) <= 0.01, f"{rep.ratio:.4f}", "11.54 +- 1%")
    bounds = {p: tc.incremental_ratio_bound(p) for p in range(2, 11)}
    res.add("incremental bound p=3", _within(bounds[3], 19.11, 0.05), f"{bounds[3]:.4f}", "19.11 +- 0.05")
    best_p = min(bounds, key=bounds.get)
    res.add("best p", best_p == 3, f"p={best_p}", "p=3")
    reports = table3_closures()
    x = np.log([r.crossing_number for r in reports.values()])
    y = np.log([r.total_length for r in reports.values()])
    slope = float(np.polyfit(x, y, 1)[0])
    res.add("log-log exponent", _within(slope, 0.73, 0.02), f"{slope:.4f}", "0.73 +- 0.02")
    return res


def criterion_9() -> CriterionResult:
    res = CriterionResult(9, "conjectural lower bounds")
    v = tc.circular_ratio_limit()
    res.add("circular limit", _within(v, 5.013, 1e-3), f"{v:.4f}", "5.013 +- 0.001")
    v = tc.lower_bound_link(2, 3, "circular").ratio
    res.add("circular Q=2", _within(v, 5.55, 0.01), f"{v:.4f}", "5.55 +- 0.01")
    ratios = {q: tc.lower_bound_link(q, 3, "tabulated").ratio for q in TABLE3}
    lo, hi = min(ratios.values()), max(ratios.values())
    res.add("tabulated range", lo >= 7.0 and hi <= 9.5, f"[{lo:.3f}, {hi:.3f}]", "within [7, 9.5]")
    closures = table3_closures()
    gaps = {q: closures[q].ratio / ratios[q] for q in ratios}
    q_min = min(gaps, key=gaps.get)
    res.add("gap at Q=31", _within(gaps[31], 1.41, 0.05), f"{gaps[31]:.3f} (smallest {gaps[q_min]:.3f} at Q={q_min})",
            "1.41 +- 0.05")
    return res


def criterion_10(seed: int = 20240601) -> CriterionResult:
    res = CriterionResult(10, "property suites")
    # (a) shipped configurations: clearance at 500 vertices, stability at 2000
    configs = [r[0] for r in table3_configs().values()]
    configs += [pipeline_721()["jenga"].config]
    worst_clear, worst_shift = math.inf, 0.0
    for c in configs:
        d500 = so.config_min_distance(c, 500)
        d2000 = so.config_min_distance(c, 2000)
        worst_clear = min(worst_clear, d500)
        worst_shift = max(worst_shift, abs(d2000 / d500 - 1.0))
    res.add("(a) clearance", worst_clear >= 2.0 * (1 - 1e-3), f"{worst_clear:.6f}", ">= 1.998")
    res.add("(a) 2000-vertex shift", worst_shift <= 5e-3, f"{worst_shift:.2e}", "<= 0.5%")
    # (b) min_height and min_radius invert each other
    worst = 0.0
    for m in (2, 3, 4, 5, 6, 8, 12, 20):
        r0 = max(planar_min_radius(m), 0.5)
        for r in r0 * np.linspace(1.02, 3.0, 12):
            h = min_height(m, float(r))
            if h <= 2.0 * m + 1e-6:
                continue
            worst = max(worst, abs(min_radius(m, h) / r - 1.0))
    res.add("(b) inverse consistency", worst <= 1e-3, f"{worst:.2e}", "<= 1e-3")
    # (c) summand inequality over a grid
    i = np.arange(2, 10 ** 4 + 1)
    held = total = 0
    for ns in np.arange(2, 10 ** 3 + 1):
        ok = sc.summand_bound_holds(i, np.full_like(i, ns))
        held += int(ok.sum())
        total += ok.size
    res.add("(c) summand inequality", held == total, f"{held}/{total}", "all of i 2..1e4, Ns 2..1e3")
    # (d) reverse Jenga under randomized starts
    rng = np.random.default_rng(seed)
    bad = 0
    trials = 25
    for _ in range(trials):
        t = int(rng.integers(2, 6))
        counts = tuple(int(v) for v in rng.integers(1, 10, size=t))
        try:
            cfg = so.optimize_geometry(so.Arrangement((1,) + counts))
        except so.InfeasibleError:
            continue
        out = sc.reverse_jenga(cfg)
        steps = np.diff(out.lengths)
        if np.any(steps > 1e-9) or out.config.arrangement.n_helices != cfg.arrangement.n_helices \
                or out.config.total_length > cfg.total_length + 1e-9:
            bad += 1
    res.add("(d) jenga monotone", bad == 0, f"{bad} violations in {trials} starts", "0")
    # (e) scaled-coordinate collapse onto the fitted curve
    for m in FIT_COLLAPSE_M:
        dev = fit_collapse_deviation(m)
        res.add(f"(e) collapse m={m}", dev <= 0.03, f"{dev:.3f}", "<= 3%")
    return res


def fit_collapse_deviation(m: int, xs: np.ndarray = FIT_COLLAPSE_X) -> float:
    """Largest relative gap between exact min heights and the fitted curve, X in [0.05, 1]."""
    radii = m * (xs + 1.0 / (m * math.sin(math.pi / m)))
    heights = np.array([min_height(m, float(r)) for r in radii])
    x, _ = scaled_coordinates(m, radii, heights)
    fitted = m * (DEFAULT_FIT.y_of_x(x) + 2.0)
    return float(np.max(np.abs(heights / fitted - 1.0)))


CRITERIA: dict[int, Callable[[], CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
}


def run_criterion(number: int) -> CriterionResult:
    t0 = time.perf_counter()
    res = CRITERIA[number]()
    res.seconds = time.perf_counter() - t0
    return res


def run_all(numbers=None, progress: Callable[[str], None] | None = None) -> list[CriterionResult]:
    out = []
    for n in numbers or sorted(CRITERIA):
        if progress:
            progress(f"criterion {n} ...")
        out.append(run_criterion(n))
        if progress:
            progress(out[-1].summary_line())
    return out

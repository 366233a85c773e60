"""Concentric multihelix configurations: geometry optimization and arrangement search.

A multihelix is an optional straight rod on the axis plus T shells. Shell i
holds M_i helices at radius R + 2(i - 1). All strands share one pitch height
H, which has to satisfy every shell's minimum height. The length of one
twist is H (the rod) plus M_i * sqrt(H^2 + (2 pi R_i)^2) summed over shells.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import minimize

from ._search import grid_then_golden
from .constraint_geometry import (CLEARANCE, DEFAULT_VERTICES, DISTANCE_TOL, TWO_PI,
                                  coaxial_min_distance, min_height, pair_distance_sq,
                                  parameter_offsets, shell_min_distance,
                                  planar_min_radius)
from .errors import InfeasibleError

SHELL_SPACING = 2.0
RADIUS_BOUNDS = (2.0, 4.0)
GRID_STEP = 0.05
TIE_TOL = 1e-6


@dataclass(frozen=True)
class Arrangement:
    """Strand counts per shell, innermost first; the rod is implied by has_rod."""
    shells: tuple[int, ...]
    has_rod: bool = True

    def __post_init__(self):
        shells = tuple(int(m) for m in self.shells)
        if not shells:
            raise ValueError("an arrangement needs at least one shell")
        if any(m < 1 for m in shells):
            raise ValueError("every shell must hold at least one helix")
        object.__setattr__(self, "shells", shells)

    @classmethod
    def parse(cls, text: str) -> "Arrangement":
        """Read '1,4,5,2', '1-4-5-2' or '[1,4,5,2]'; the leading 1 is the rod."""
        parts = [p for p in text.strip().strip("[]").replace("-", ",").split(",") if p.strip()]
        values = [int(p) for p in parts]
        if len(values) < 2 or values[0] != 1:
            raise ValueError(f"expected a rod-first arrangement like 1,5,6; got {text!r}")
        return cls(tuple(values[1:]))

    @property
    def n_helices(self) -> int:
        return sum(self.shells)

    @property
    def q(self) -> int:
        return self.n_helices + (1 if self.has_rod else 0)

    @property
    def shell_count(self) -> int:
        return len(self.shells)

    def label(self) -> str:
        items = ([1] if self.has_rod else []) + list(self.shells)
        return "[" + ",".join(str(m) for m in items) + "]"

    def __str__(self) -> str:
        return self.label()


@dataclass(frozen=True)
class MultihelixConfig:
    arrangement: Arrangement
    shell_radii: tuple[float, ...]
    height: float
    total_length: float
    binding_shell: int  # 1-based index of the shell whose minimum height is largest
    approximate: bool = False  # built from asymptotic formulas rather than certified heights

    @property
    def inner_radius(self) -> float:
        return self.shell_radii[0]

    @property
    def q(self) -> int:
        return self.arrangement.q

    @property
    def crossings(self) -> int:
        return self.q * (self.q - 1)

    @property
    def length_per_crossing(self) -> float:
        return self.total_length / self.crossings if self.q > 1 else math.nan

    def to_record(self) -> dict:
        return {
            "q": self.q,
            "arrangement": self.arrangement.label(),
            "inner_radius": self.inner_radius,
            "height": self.height,
            "binding_shell": self.binding_shell,
            "length": self.total_length,
            "length_per_crossing": self.length_per_crossing,
        }


def shell_radii(n_shells: int, inner_radius: float, spacing: float = SHELL_SPACING) -> tuple[float, ...]:
    return tuple(inner_radius + spacing * i for i in range(n_shells))


def length_for_radii(counts: Sequence[int], radii: Sequence[float], height: float,
                     has_rod: bool = True) -> float:
    counts = np.asarray(counts, dtype=float)
    radii = np.asarray(radii, dtype=float)
    strands = counts * np.sqrt(height * height + (TWO_PI * radii) ** 2)
    return math.fsum(strands) + (height if has_rod else 0.0)


def config_length(arrangement: Arrangement, inner_radius: float, height: float) -> float:
    radii = shell_radii(arrangement.shell_count, inner_radius)
    return length_for_radii(arrangement.shells, radii, height, arrangement.has_rod)


def required_height(counts: Sequence[int], radii: Sequence[float], vertices: int = DEFAULT_VERTICES,
                    exact: bool = False) -> tuple[float, int]:
    """Common height needed by all shells and the (1-based) shell that sets it."""
    heights = [min_height(m, r, vertices=vertices, exact=exact) for m, r in zip(counts, radii)]
    i = int(np.argmax(heights))
    return heights[i], i + 1


def build_config(arrangement: Arrangement, radii: Sequence[float], height: float | None = None,
                 vertices: int = DEFAULT_VERTICES, exact: bool = False) -> MultihelixConfig:
    """Config at given radii; height defaults to the smallest feasible one."""
    radii = tuple(float(r) for r in radii)
    need, binding = required_height(arrangement.shells, radii, vertices, exact)
    if height is None:
        height = need
    elif height < need - 1e-9:
        raise InfeasibleError(f"height {height:.6g} below required {need:.6g}")
    length = length_for_radii(arrangement.shells, radii, height, arrangement.has_rod)
    return MultihelixConfig(arrangement, radii, float(height), length, binding)


def inner_radius_floor(shells: Sequence[int]) -> float:
    """Smallest inner radius allowed by the planar bound of every shell."""
    lo = RADIUS_BOUNDS[0]
    for i, m in enumerate(shells):
        lo = max(lo, planar_min_radius(m) - SHELL_SPACING * i)
    return lo


def optimize_geometry(arrangement: Arrangement, vertices: int = DEFAULT_VERTICES,
                      grid_step: float = GRID_STEP, tol: float = 1e-6,
                      exact: bool = False) -> MultihelixConfig:
    """Minimize length over the inner radius in [2, 4] with shells spaced by 2.

    For each candidate radius the height is the largest shell minimum height,
    so the only free variable is R. A coarse grid seeds a golden-section polish.
    """
    shells = arrangement.shells
    lo, hi = inner_radius_floor(shells), RADIUS_BOUNDS[1]
    if lo > hi + 1e-12:
        raise InfeasibleError(f"{arrangement.label()} cannot fit with inner radius <= {hi}")

    def length_at(r: float) -> float:
        radii = shell_radii(len(shells), r)
        try:
            h, _ = required_height(shells, radii, vertices, exact)
        except InfeasibleError:
            return math.inf
        return length_for_radii(shells, radii, h, arrangement.has_rod)

    r, best = grid_then_golden(length_at, lo, hi, grid_step, tol)
    if not math.isfinite(best):
        raise InfeasibleError(f"{arrangement.label()} has no feasible radius")
    return build_config(arrangement, shell_radii(len(shells), r), vertices=vertices, exact=exact)


def config_min_distance(config: MultihelixConfig, vertices: int = DEFAULT_VERTICES) -> float:
    """Smallest strand-to-strand distance in a configuration on the vertex-offset grid.

    Covers the rod gap, adjacent strands within each shell and every strand
    pair of neighbouring shells (shells two apart are >= 4 apart radially).
    """
    h = config.height
    counts, radii = config.arrangement.shells, config.shell_radii
    best = radii[0] if config.arrangement.has_rod else math.inf
    delta = parameter_offsets(vertices)
    for m, r in zip(counts, radii):
        best = min(best, shell_min_distance(m, r, h, vertices))
    for (m1, r1), (m2, r2) in zip(zip(counts, radii), zip(counts[1:], radii[1:])):
        phases = np.unique(np.round(np.mod(np.subtract.outer(np.arange(m2) / m2, np.arange(m1) / m1), 1.0), 12))
        d2 = pair_distance_sq(r1, r2, TWO_PI * phases[:, None], h, delta[None, :])
        best = min(best, math.sqrt(float(d2.min())))
    return float(best)


# ---------------------------------------------------------------------------
# exhaustive search over compositions


def compositions(n: int, parts: int) -> np.ndarray:
    """All compositions of n into `parts` positive integers, one per row."""
    if parts < 1 or parts > n:
        return np.zeros((0, max(parts, 0)), dtype=np.int64)
    if parts == 1:
        return np.array([[n]], dtype=np.int64)
    cuts = np.array(list(itertools.combinations(range(1, n), parts - 1)), dtype=np.int64)
    edges = np.hstack([np.zeros((len(cuts), 1), dtype=np.int64), cuts,
                       np.full((len(cuts), 1), n, dtype=np.int64)])
    return np.diff(edges, axis=1)


def _min_height_on_grid(m: int, radii: np.ndarray, vertices: int) -> np.ndarray:
    if m == 1:
        return np.full(radii.shape, CLEARANCE)
    delta = parameter_offsets(vertices)
    nz = delta != 0
    d = delta[nz]
    cosv = 1.0 - np.cos(d + TWO_PI / m)
    out = np.empty(radii.shape)
    for i, r in enumerate(radii):
        need = (CLEARANCE ** 2 - 2.0 * r * r * cosv) / (d * d)
        out[i] = max(CLEARANCE * m, TWO_PI * math.sqrt(max(need.max(), 0.0)))
    planar_bad = radii < planar_min_radius(m) - DISTANCE_TOL
    out[planar_bad] = np.inf
    return out


@lru_cache(maxsize=None)
def _height_table(m_max: int, n_radii: int, vertices: int, step: float) -> np.ndarray:
    radii = RADIUS_BOUNDS[0] + step * np.arange(n_radii)
    table = np.empty((m_max + 1, n_radii))
    table[0] = 0.0
    for m in range(1, m_max + 1):
        table[m] = _min_height_on_grid(m, radii, vertices)
    table.flags.writeable = False
    return table


def _coarse_lengths(comps: np.ndarray, vertices: int, step: float, chunk: int = 20000) -> np.ndarray:
    """Best grid length per composition, evaluating all inner radii on the grid at once."""
    n_comp, t = comps.shape
    per_shell = int(round(SHELL_SPACING / step))
    n_grid = int(round((RADIUS_BOUNDS[1] - RADIUS_BOUNDS[0]) / step)) + 1
    table = _height_table(int(comps.max()), n_grid + per_shell * (t - 1), vertices, step)
    grid = RADIUS_BOUNDS[0] + step * np.arange(n_grid)
    circ2 = (TWO_PI * (grid[None, :] + SHELL_SPACING * np.arange(t)[:, None])) ** 2  # (t, G)
    out = np.empty(n_comp)
    cols = np.arange(n_grid)
    for s in range(0, n_comp, chunk):
        block = comps[s:s + chunk]
        h = np.zeros((len(block), n_grid))
        for i in range(t):
            np.maximum(h, table[block[:, i]][:, cols + per_shell * i], out=h)
        h2 = h * h
        total = h.copy()
        for i in range(t):
            total += block[:, i:i + 1] * np.sqrt(h2 + circ2[i][None, :])
        out[s:s + chunk] = total.min(axis=1)
    return out


def _rank_key(cfg: MultihelixConfig):
    return (round(cfg.total_length / TIE_TOL), cfg.arrangement.shells)


def _search_shell_count(n: int, t: int, vertices: int, keep: int, margin: float) -> list[MultihelixConfig]:
    comps = compositions(n, t)
    if len(comps) == 0:
        return []
    coarse = _coarse_lengths(comps, vertices, GRID_STEP)
    finite = np.isfinite(coarse)
    if not finite.any():
        return []
    best = coarse[finite].min()
    chosen = set(np.where(coarse <= best * (1.0 + margin))[0].tolist())
    chosen.update(np.argsort(coarse)[:keep].tolist())
    results = []
    for idx in sorted(chosen):
        if not np.isfinite(coarse[idx]):
            continue
        try:
            results.append(optimize_geometry(Arrangement(tuple(int(x) for x in comps[idx])), vertices))
        except InfeasibleError:
            continue
    return results


def exhaustive_search(n_helices: int, shell_count_window: Iterable[int] | None = None,
                      vertices: int = DEFAULT_VERTICES, keep: int = 10, margin: float = 0.01,
                      jobs: int = 1, progress: Callable[[str], None] | None = None) -> list[MultihelixConfig]:
    """Rank compositions of n_helices by optimized length (rod always present).

    Every composition is scored on the 0.05 radius grid in a vectorized pass;
    those within `margin` of the best grid score (and at least `keep` per
    shell count) are then optimized properly. Without an explicit window,
    n_helices > 20 restricts the shell count to within one of the best count
    for n_helices - 1.
    """
    if n_helices < 1:
        raise ValueError("n_helices must be positive")
    if shell_count_window is None:
        if n_helices > 20:
            prev = exhaustive_search(n_helices - 1, None, vertices, keep, margin, jobs, progress)
            t0 = prev[0].arrangement.shell_count
            counts = [t for t in (t0 - 1, t0, t0 + 1) if 1 <= t <= n_helices]
        else:
            counts = list(range(1, n_helices + 1))
    else:
        counts = sorted({int(t) for t in shell_count_window if 1 <= int(t) <= n_helices})
    return _cached_search(n_helices, tuple(counts), vertices, keep, margin, jobs, progress)


_SEARCH_CACHE: dict = {}


def _cached_search(n, counts, vertices, keep, margin, jobs, progress):
    key = (n, counts, vertices, keep, margin)
    if key in _SEARCH_CACHE:
        return list(_SEARCH_CACHE[key])
    if progress:
        progress(f"search N={n} shell counts {list(counts)}")
    if jobs > 1 and len(counts) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_search_shell_count, [n] * len(counts), counts, [vertices] * len(counts),
                                  [keep] * len(counts), [margin] * len(counts)))
    else:
        parts = [_search_shell_count(n, t, vertices, keep, margin) for t in counts]
    ranked = sorted((c for part in parts for c in part), key=_rank_key)
    _SEARCH_CACHE[key] = tuple(ranked)
    return ranked


# ---------------------------------------------------------------------------
# reference two-shell construction


def construction_a_length(n_helices: int, outer: int) -> float:
    """Two shells at radii 2 and 4 (sqrt(8)-scaled), `outer` helices outside."""
    n, m = n_helices, outer
    return math.sqrt(8.0) * (m + math.sqrt(2.0) * m * m + (n - m) * math.hypot(m, n - m))


def construction_a_closed_form(n_helices: int) -> float:
    n = n_helices
    return n * n + (10.0 + math.sqrt(2.0)) * n + (n - 5) * math.sqrt(n * n + 25.0) + 25.0 + math.sqrt(50.0)


def construction_a_outer_count(n_helices: int) -> int:
    return math.ceil((n_helices + 5) / 2)


def reference_construction_A(n_helices: int) -> float:
    """Length of the optimization-free two-shell construction (needs N >= 5)."""
    if n_helices < 5:
        raise ValueError("the two-shell reference construction needs at least 5 helices")
    return construction_a_length(n_helices, construction_a_outer_count(n_helices))


# ---------------------------------------------------------------------------
# 4x4 square grid twisted about its centre


@dataclass(frozen=True)
class GridResult:
    spacing: float
    height: float
    total_length: float


def square_grid_positions(spacing: float, side: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Polar (radius, angle) of a side x side grid centred on the twist axis."""
    offs = (np.arange(side) - (side - 1) / 2.0) * spacing
    x, y = np.meshgrid(offs, offs, indexing="ij")
    x, y = x.ravel(), y.ravel()
    return np.hypot(x, y), np.arctan2(y, x)


def pair_min_height(r1: float, r2: float, dphase: float, clearance: float = CLEARANCE,
                    vertices: int = DEFAULT_VERTICES) -> float:
    """Smallest common pitch keeping two coaxial helices at least `clearance` apart."""
    delta = parameter_offsets(vertices)
    planar = r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * np.cos(delta + dphase)
    if planar[delta == 0][0] < clearance ** 2 - DISTANCE_TOL:
        return math.inf
    nz = delta != 0
    need = (clearance ** 2 - planar[nz]) / delta[nz] ** 2
    return TWO_PI * math.sqrt(max(float(need.max()), 0.0))


def square_grid_min_height(spacing: float, vertices: int = DEFAULT_VERTICES, side: int = 4) -> float:
    radii, angles = square_grid_positions(spacing, side)
    h = CLEARANCE
    for i in range(len(radii)):
        for j in range(i + 1, len(radii)):
            h = max(h, pair_min_height(radii[i], radii[j], angles[j] - angles[i], vertices=vertices))
    return h


def square_grid_feasible(spacing: float, height: float, vertices: int = DEFAULT_VERTICES,
                         side: int = 4) -> bool:
    radii, angles = square_grid_positions(spacing, side)
    for i in range(len(radii)):
        for j in range(i + 1, len(radii)):
            d = coaxial_min_distance(radii[i], radii[j], angles[j] - angles[i], height, vertices)
            if d < CLEARANCE - DISTANCE_TOL:
                return False
    return True


def square_grid_length(spacing: float, height: float, side: int = 4) -> float:
    radii, _ = square_grid_positions(spacing, side)
    return math.fsum(np.sqrt(height * height + (TWO_PI * radii) ** 2))


def square_grid_16(vertices: int = DEFAULT_VERTICES, bounds: tuple[float, float] = (2.0, 4.0)) -> GridResult:
    """Optimize spacing and height of 16 helices on a 4x4 grid (no rod)."""
    def length_at(s: float) -> float:
        h = square_grid_min_height(s, vertices)
        return square_grid_length(s, h) if math.isfinite(h) else math.inf

    s, length = grid_then_golden(length_at, bounds[0], bounds[1], 0.05, 1e-6)
    return GridResult(s, square_grid_min_height(s, vertices), length)


# ---------------------------------------------------------------------------
# validation mode: per-shell radii as free variables


def optimize_free_radii(arrangement: Arrangement, vertices: int = DEFAULT_VERTICES,
                        start: MultihelixConfig | None = None) -> MultihelixConfig:
    """Let every shell radius float (inner radius >= 2, gaps >= 2) and minimize length.

    Used to probe whether the fixed spacing of 2 is optimal; derivative-free
    because the height is a maximum of piecewise-smooth functions.
    """
    shells = arrangement.shells
    if start is None:
        start = optimize_geometry(arrangement, vertices)
    x0 = np.array([start.inner_radius] + [SHELL_SPACING] * (len(shells) - 1))
    lo = [inner_radius_floor(shells[:1])] + [SHELL_SPACING] * (len(shells) - 1)

    def radii_of(x):
        return np.cumsum(x)

    def objective(x):
        if np.any(x < np.array(lo) - 1e-12):
            return math.inf
        radii = radii_of(x)
        try:
            h, _ = required_height(shells, radii, vertices)
        except InfeasibleError:
            return math.inf
        return length_for_radii(shells, radii, h, arrangement.has_rod)

    res = minimize(objective, x0, method="Powell", bounds=[(b, b + 6.0) for b in lo],
                   options={"xtol": 1e-6, "ftol": 1e-10})
    x = res.x if res.fun <= objective(x0) else x0
    return build_config(arrangement, radii_of(x), vertices=vertices)

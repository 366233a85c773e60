"""Large multihelix families and their asymptotic length prefactors.

Families:
  incremental    shell i holds k*i helices at radius sqrt(2) k i / pi
  equal          every shell holds N_s helices, shells 2 apart from R_s outward
  gamma          equal family with N_s ~ sqrt(pi q / 2) and T ~ sqrt(2 q / pi)
  infilled       interior shells at radii 2, 4, ... holding 4, 8, ... helices,
                 taken from the outermost shells
  reverse jenga  greedy single-helix moves from the outermost shell inward

Prefactors are reported as L / q^(3/2); with C = q(q - 1) crossings per
twist this equals (L / C) * sqrt(q) up to a factor q / (q - 1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from ._search import grid_then_golden
from .constraint_geometry import DEFAULT_VERTICES, TWO_PI, min_height, planar_min_radius
from .errors import InfeasibleError
from .helix_core import ideal_helix
from .shell_optimizer import Arrangement, MultihelixConfig, length_for_radii

SQRT2 = math.sqrt(2.0)
SQRT8 = math.sqrt(8.0)
KINDS = ("incremental", "equal_per_shell", "gamma", "infilled", "reverse_jenga")
PREDICTED = {"incremental": 10.89, "equal_per_shell": 10.03, "gamma": 9.34, "infilled": 7.83,
             "reverse_jenga": 7.83}


@dataclass(frozen=True)
class ConstructionSpec:
    kind: str
    k: int = 5
    n_per_shell: int | None = None
    shell_count: int | None = None
    inner_radius_mode: str = "ideal"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown construction kind {self.kind!r}")
        if self.kind == "incremental" and self.k < 5:
            raise ValueError("incremental constructions need k >= 5")


@dataclass(frozen=True)
class AsymptoticReport:
    kind: str
    q: int
    t: int
    length: float
    length_per_crossing: float
    predicted_prefactor: float
    measured_prefactor: float

    @classmethod
    def from_length(cls, kind: str, q: int, t: int, length: float) -> "AsymptoticReport":
        per = length / (q * (q - 1))
        return cls(kind, q, t, length, per, PREDICTED.get(kind, math.nan), per * math.sqrt(q))

    def to_record(self) -> dict:
        return {"kind": self.kind, "q": self.q, "t": self.t, "length": self.length,
                "length_per_crossing": self.length_per_crossing,
                "predicted_prefactor": self.predicted_prefactor,
                "measured_prefactor": self.measured_prefactor}


def _config(counts, radii, height, has_rod=True, vertices=DEFAULT_VERTICES) -> MultihelixConfig:
    """Config at a prescribed height; flagged approximate if any shell needs more."""
    arr = Arrangement(tuple(int(c) for c in counts), has_rod)
    radii = tuple(float(r) for r in radii)
    heights = []
    for c, r in zip(arr.shells, radii):
        try:
            heights.append(min_height(c, r, vertices=vertices))
        except InfeasibleError:
            heights.append(math.inf)
    binding = int(np.argmax(heights)) + 1
    length = length_for_radii(arr.shells, radii, height, has_rod)
    return MultihelixConfig(arr, radii, float(height), length, binding, max(heights) > height + 1e-9)


def prefactor(config: MultihelixConfig) -> float:
    return config.total_length / config.q ** 1.5


# ---------------------------------------------------------------------------
# incremental family


def construct_incremental(k: int, t_shells: int, radius_mode: str = "approx") -> MultihelixConfig:
    """Shells of k, 2k, ..., k*T helices; the outer shell sets the height.

    radius_mode "approx" uses R_i = sqrt(2) k i / pi and H = sqrt(8) k T, whose
    length is exactly incremental_length(k, T). "ideal" uses the exact
    single-shell optimum radii and the exact optimum height of the outer shell.
    """
    if k < 5:
        raise ValueError("k must be at least 5 so neighbouring shells stay 2 apart")
    if t_shells < 1:
        raise ValueError("need at least one shell")
    counts = [k * i for i in range(1, t_shells + 1)]
    if radius_mode == "approx":
        radii = [SQRT2 * c / math.pi for c in counts]
        height = SQRT8 * k * t_shells
        return _config(counts, radii, height)
    if radius_mode == "ideal":
        params = [ideal_helix(c) for c in counts]
        return _config(counts, [p.radius for p in params], params[-1].height)
    raise ValueError(f"unknown radius_mode {radius_mode!r}")


def incremental_length(k: int, t_shells: int) -> float:
    """Closed sum: sqrt(8) k T + 4 k^2 T^2 + sqrt(8) k^2 sum_{i<T} i sqrt(T^2 + i^2)."""
    t = t_shells
    i = np.arange(1, t, dtype=float)
    return SQRT8 * k * t + 4.0 * k * k * t * t + SQRT8 * k * k * math.fsum(i * np.sqrt(t * t + i * i))


def incremental_q(k: int, t_shells: int) -> int:
    return k * t_shells * (t_shells + 1) // 2 + 1


def incremental_asymptote(k: int) -> float:
    """Limit of (L/C) * sqrt(Q) for the incremental family, using the rounded 1.72 k^2 T^3 law.

    With Q ~ k T^2 / 2 the per-crossing length is 6.88 / T = 6.88 sqrt(k / 2) / sqrt(Q).
    """
    if k < 5:
        raise ValueError("k must be at least 5")
    return 4.0 * 1.72 * math.sqrt(k / 2.0)


def incremental_exact_asymptote(k: int) -> float:
    """Same limit with the exact leading coefficient (8 - sqrt(8)) / 3 in place of 1.72."""
    return (8.0 - SQRT8) / 3.0 * 2.0 ** 1.5 * math.sqrt(k)


# ---------------------------------------------------------------------------
# equal number of helices per shell


def _inner_shell(n_per_shell: int, mode: str, vertices: int) -> tuple[float, float]:
    if mode == "approx":
        return SQRT2 * n_per_shell / math.pi, SQRT8 * n_per_shell
    if n_per_shell == 1:
        return 2.0, min_height(1, 2.0)
    ideal = ideal_helix(n_per_shell)
    if ideal.radius >= 2.0:
        return ideal.radius, ideal.height
    return 2.0, min_height(n_per_shell, 2.0, vertices=vertices)


def construct_equal(n_per_shell: int, t_shells: int, inner_radius_mode: str = "ideal",
                    vertices: int = DEFAULT_VERTICES) -> MultihelixConfig:
    """T shells of N_s helices from R_s outward in steps of 2; the inner shell sets the height.

    Modes: "ideal" (single-shell optimum, moved out to 2 if needed),
    "approx" (sqrt(2) N_s / pi and sqrt(8) N_s, not certified), and
    "optimized" (R_s minimizing total length with exact minimum heights).
    """
    if n_per_shell < 1 or t_shells < 1:
        raise ValueError("n_per_shell and t_shells must be positive")
    counts = [n_per_shell] * t_shells
    offsets = 2.0 * np.arange(t_shells)
    if inner_radius_mode in ("ideal", "approx"):
        r, h = _inner_shell(n_per_shell, inner_radius_mode, vertices)
        return _config(counts, r + offsets, h, vertices=vertices)
    if inner_radius_mode != "optimized":
        raise ValueError(f"unknown inner_radius_mode {inner_radius_mode!r}")
    r0, _ = _inner_shell(n_per_shell, "ideal", vertices)
    lo = max(2.0, planar_min_radius(n_per_shell))

    def length_at(r: float) -> float:
        try:
            h = min_height(n_per_shell, r, vertices=vertices)
        except InfeasibleError:
            return math.inf
        return length_for_radii(counts, r + offsets, h)

    r, _ = grid_then_golden(length_at, lo, max(r0, lo) + 2.0, step=0.05, tol=1e-6)
    return _config(counts, r + offsets, min_height(n_per_shell, r, vertices=vertices), vertices=vertices)


def divisors(n: int) -> list[int]:
    small = [d for d in range(1, int(math.isqrt(n)) + 1) if n % d == 0]
    return sorted(set(small + [n // d for d in small]))


def equal_sweep(n_helices: int, inner_radius_mode: str = "ideal",
                vertices: int = DEFAULT_VERTICES) -> list[tuple[int, MultihelixConfig]]:
    """Equal-per-shell configs for every shell count dividing n_helices."""
    return [(t, construct_equal(n_helices // t, t, inner_radius_mode, vertices)) for t in divisors(n_helices)]


def equal_shell_bound(q: int, t: float) -> float:
    """Per-crossing upper estimate 2 pi T / Q + 4 / T."""
    if q < 1 or t <= 0:
        raise ValueError("q and t must be positive")
    return TWO_PI * t / q + 4.0 / t


def optimal_shell_count(q: int) -> float:
    return math.sqrt(2.0 * q / math.pi)


def equal_bound_prefactor() -> float:
    """sqrt(q) times the minimized bound: 4 sqrt(2 pi)."""
    return 4.0 * math.sqrt(TWO_PI)


def summand_bound_holds(i: np.ndarray, n_per_shell: np.ndarray) -> np.ndarray:
    """Whether 4 pi (i-1) + 4 N_s bounds the exact per-helix summand at ideal R_s, H."""
    i = np.asarray(i, dtype=float)
    ns = np.asarray(n_per_shell, dtype=float)
    exact = np.sqrt(16.0 * ns * ns + 16.0 * math.pi ** 2 * (i - 1.0) * i)
    return 4.0 * math.pi * (i - 1.0) + 4.0 * ns >= exact


def equal_optimal(q: int, inner_radius_mode: str = "ideal") -> MultihelixConfig:
    """Equal-per-shell config near q strands with the bound-minimizing shell count."""
    t = max(1, round(optimal_shell_count(q)))
    ns = max(1, round((q - 1) / t))
    return construct_equal(ns, t, inner_radius_mode)


# ---------------------------------------------------------------------------
# gamma construction and its limit


def gamma_parameters(q: int) -> tuple[int, int]:
    """(N_s, T) rounded to the nearest integers, at least 1."""
    return max(1, round(math.sqrt(math.pi * q / 2.0))), max(1, round(math.sqrt(2.0 * q / math.pi)))


def gamma_config(q: int) -> MultihelixConfig:
    if q < 10:
        raise ValueError("the gamma construction is meant for q >= 10")
    ns, t = gamma_parameters(q)
    return construct_equal(ns, t, "approx")


def gamma_length(q: int) -> float:
    return gamma_config(q).total_length


def _antideriv_sqrt1p(v: float) -> float:
    """Antiderivative of sqrt(1 + v^2)."""
    return 0.5 * (v * math.sqrt(1.0 + v * v) + math.asinh(v))


_V_OUTER = 1.0 + 2.0 * SQRT2


def gamma_prefactor_limit() -> float:
    """Large-q limit of L / q^(3/2) for the gamma construction."""
    return math.sqrt(math.pi / 2.0) * (_antideriv_sqrt1p(_V_OUTER) - _antideriv_sqrt1p(1.0))


def delta_prefactor_terms(interior_radius_scale: float = 1.0) -> tuple[float, float, float]:
    """(gamma limit, removed outer length, added interior length), all / q^(3/2).

    The interior term is the limit of sum_i 4 i sqrt(4 pi q + (2 pi s i)^2) up to
    i = sqrt(q / pi) / 2 with s = interior_radius_scale. s = 1 is the sum as it is
    usually written (circumference 2 pi i); s = 2 matches shells that actually sit
    at radius 2 i.
    """
    gamma = gamma_prefactor_limit()
    width = SQRT2 / math.pi  # outer shells removed, in units of the inner-radius variable
    removed = math.sqrt(math.pi / 2.0) * (_antideriv_sqrt1p(_V_OUTER) - _antideriv_sqrt1p(_V_OUTER - width))
    s = interior_radius_scale
    added = ((4.0 + s * s) ** 1.5 - 8.0) / (3.0 * s * s * math.sqrt(math.pi))
    return gamma, removed, added


def delta_exact_prefactor() -> float:
    """Closed-form infilled prefactor with the interior sum in its usual written form (~7.82869)."""
    gamma, removed, added = delta_prefactor_terms(1.0)
    return gamma - removed + added


def infill_prefactor_limit() -> float:
    """Infilled prefactor when interior shells are counted at their true radius 2 i (~7.918)."""
    gamma, removed, added = delta_prefactor_terms(2.0)
    return gamma - removed + added


# ---------------------------------------------------------------------------
# infill


@dataclass(frozen=True)
class InfillResult:
    config: MultihelixConfig
    applied: bool
    interior_shells: int = 0
    moved: int = 0
    removed_full_shells: int = 0
    removed_partial: int = 0
    feasible: bool = True


def _strip_outer(counts: list[int], n_remove: int) -> tuple[list[int], int, int]:
    counts = list(counts)
    full = 0
    while n_remove > 0 and counts and counts[-1] <= n_remove:
        n_remove -= counts.pop()
        full += 1
    if n_remove > 0:
        counts[-1] -= n_remove
    return counts, full, n_remove


def infill(base: MultihelixConfig, vertices: int = DEFAULT_VERTICES, exact: bool = False) -> InfillResult:
    """Fill the gap between the rod and the inner shell with shells of 4i helices at radius 2i.

    The helices come from the outermost shells (whole shells first). Height is
    kept; each interior shell is checked against it.
    """
    inner = base.shell_radii[0]
    m = int(math.floor((inner - 2.0) / 2.0 + 1e-12))
    total_outer = base.arrangement.n_helices
    while m >= 1 and 2 * m * (m + 1) >= total_outer:
        m -= 1
    if m < 1:
        return InfillResult(base, applied=False)
    n_int = 2 * m * (m + 1)
    kept, full, partial = _strip_outer(list(base.arrangement.shells), n_int)
    counts = [4 * i for i in range(1, m + 1)] + kept
    radii = [2.0 * i for i in range(1, m + 1)] + list(base.shell_radii[:len(kept)])
    cfg = _config(counts, radii, base.height, base.arrangement.has_rod, vertices)
    feasible = not cfg.approximate
    return InfillResult(cfg, True, m, n_int, full, partial, feasible)


# ---------------------------------------------------------------------------
# reverse jenga


@dataclass(frozen=True)
class JengaResult:
    config: MultihelixConfig
    moves: int
    lengths: tuple[float, ...] = field(default=(), repr=False)


def reverse_jenga(initial: MultihelixConfig, height: float | None = None, vertices: int = DEFAULT_VERTICES,
                  exact: bool = True, max_moves: int | None = None,
                  on_move: Callable[[int, int, float], None] | None = None) -> JengaResult:
    """Move helices one at a time from the outermost shell to the innermost shell that accepts them.

    A shell accepts when its count plus one still fits at the fixed height.
    Stops when the outermost shell's helix fits nowhere further in.
    """
    h = initial.height if height is None else float(height)
    counts = list(initial.arrangement.shells)
    radii = list(initial.shell_radii)
    has_rod = initial.arrangement.has_rod
    fits: dict[tuple[int, float], bool] = {}

    def accepts(c: int, r: float) -> bool:
        key = (c, r)
        if key not in fits:
            try:
                fits[key] = min_height(c, r, vertices=vertices, exact=exact) <= h + 1e-9
            except InfeasibleError:
                fits[key] = False
        return fits[key]

    lengths = [length_for_radii(counts, radii, h, has_rod)]
    moves = 0
    while max_moves is None or moves < max_moves:
        donor = len(counts) - 1
        target = next((j for j in range(donor) if accepts(counts[j] + 1, radii[j])), None)
        if target is None:
            break
        counts[target] += 1
        counts[donor] -= 1
        if counts[donor] == 0:
            counts.pop()
            radii.pop()
        moves += 1
        lengths.append(length_for_radii(counts, radii, h, has_rod))
        if on_move:
            on_move(target, donor, lengths[-1])
    if moves == 0 and height is None:
        return JengaResult(initial, 0, tuple(lengths))
    cfg = _config(counts, radii, h, has_rod, vertices)
    return JengaResult(cfg, moves, tuple(lengths))


# ---------------------------------------------------------------------------
# reports


def incremental_report(k: int, t_shells: int) -> AsymptoticReport:
    return AsymptoticReport.from_length("incremental", incremental_q(k, t_shells), t_shells,
                                        incremental_length(k, t_shells))


def config_report(kind: str, config: MultihelixConfig) -> AsymptoticReport:
    return AsymptoticReport.from_length(kind, config.q, config.arrangement.shell_count, config.total_length)


def infilled_config(q: int) -> MultihelixConfig:
    return infill(gamma_config(q)).config


def prefactor_scan(kind: str, qs: Iterable[int], k: int = 5) -> list[AsymptoticReport]:
    """Reports for one family at (approximately) the requested strand counts."""
    rows = []
    for q in qs:
        if kind == "incremental":
            t = max(1, round(math.sqrt(2.0 * q / k)))
            rows.append(incremental_report(k, t))
        elif kind == "equal_per_shell":
            rows.append(config_report(kind, equal_optimal(q)))
        elif kind == "gamma":
            rows.append(config_report(kind, gamma_config(q)))
        elif kind == "infilled":
            rows.append(config_report(kind, infilled_config(q)))
        else:
            raise ValueError(f"no scan defined for {kind!r}")
    return rows

"""Discrete helices, distance computations and single-shell feasibility.

Helices share the z-axis. A shell of m helices at radius R and pitch height H
has strands at phases 2*pi*j/m. Because every strand is a rigid screw copy of
the first, the distance between two coaxial helices only depends on the
parameter offset between the two points, which gives closed-form expressions
for the discretized feasibility problem. The generic polyline path
(sample_helix + min_distance) is kept as an independent check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.spatial import cKDTree

from ._search import bisect_threshold
from .errors import InfeasibleError

DEFAULT_VERTICES = 500
TURN_MARGIN = 0.1
CLEARANCE = 2.0
DISTANCE_TOL = 1e-6
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class HelixSpec:
    radius: float
    height: float
    phase: float = 0.0
    turns: float = 1.0
    theta_start: float = 0.0

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be non-negative")
        if self.height <= 0:
            raise ValueError("height must be positive")

    def point(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.stack([
            self.radius * np.cos(theta + self.phase),
            self.radius * np.sin(theta + self.phase),
            self.height * theta / TWO_PI,
        ], axis=-1)

    @property
    def arc_length(self) -> float:
        return self.turns * math.hypot(self.height, TWO_PI * self.radius)


@dataclass(frozen=True, eq=False)
class Polyline3:
    """Ordered 3D vertices; closed polylines have an implicit last-to-first segment."""
    vertices: np.ndarray
    closed: bool = False

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError("vertices must have shape (n, 3)")
        if len(v) < 2:
            raise ValueError("a polyline needs at least two vertices")
        steps = np.linalg.norm(np.diff(v, axis=0), axis=1)
        if np.any(steps == 0):
            raise ValueError("consecutive vertices must be distinct")
        object.__setattr__(self, "vertices", v)

    def __len__(self) -> int:
        return len(self.vertices)

    def segments(self) -> tuple[np.ndarray, np.ndarray]:
        v = self.vertices
        if self.closed:
            return v, np.roll(v, -1, axis=0)
        return v[:-1], v[1:]

    @property
    def length(self) -> float:
        a, b = self.segments()
        return float(np.linalg.norm(b - a, axis=1).sum())


def sample_helix(spec: HelixSpec, vertex_count: int) -> Polyline3:
    """Uniform samples in theta over [theta_start, theta_start + 2*pi*turns]."""
    if vertex_count < 2:
        raise ValueError("vertex_count must be at least 2")
    theta = spec.theta_start + np.linspace(0.0, TWO_PI * spec.turns, vertex_count)
    return Polyline3(spec.point(theta))


# ---------------------------------------------------------------------------
# distances between polylines


def segment_distances(p0, p1, q0, q1) -> np.ndarray:
    """Row-wise minimum distance between segments [p0,p1] and [q0,q1]."""
    d1 = p1 - p0
    d2 = q1 - q0
    r = p0 - q0
    a = np.einsum("ij,ij->i", d1, d1)
    e = np.einsum("ij,ij->i", d2, d2)
    f = np.einsum("ij,ij->i", d2, r)
    c = np.einsum("ij,ij->i", d1, r)
    b = np.einsum("ij,ij->i", d1, d2)
    denom = a * e - b * b
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(denom > 1e-14 * a * e, np.clip((b * f - c * e) / denom, 0.0, 1.0), 0.0)
        t = (b * s + f) / e
        s = np.where(t < 0.0, np.clip(-c / a, 0.0, 1.0), np.where(t > 1.0, np.clip((b - c) / a, 0.0, 1.0), s))
    t = np.clip(t, 0.0, 1.0)
    diff = (p0 + d1 * s[:, None]) - (q0 + d2 * t[:, None])
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def min_distance(a: Polyline3, b: Polyline3, refine: bool = False) -> float:
    """Minimum vertex-pair distance; with refine, the segment-segment minimum."""
    tree = cKDTree(b.vertices)
    dist, _ = tree.query(a.vertices)
    best = float(dist.min())
    if not refine:
        return best
    pa0, pa1 = a.segments()
    pb0, pb1 = b.segments()
    la = np.linalg.norm(pa1 - pa0, axis=1).max()
    lb = np.linalg.norm(pb1 - pb0, axis=1).max()
    ta = cKDTree(0.5 * (pa0 + pa1))
    tb = cKDTree(0.5 * (pb0 + pb1))
    pairs = ta.query_ball_tree(tb, best + 0.5 * (la + lb))
    ii = np.repeat(np.arange(len(pairs)), [len(p) for p in pairs])
    if len(ii) == 0:
        return best
    jj = np.concatenate([np.asarray(p, dtype=int) for p in pairs])
    return float(min(best, segment_distances(pa0[ii], pa1[ii], pb0[jj], pb1[jj]).min()))


# ---------------------------------------------------------------------------
# coaxial helix pairs in closed form


def parameter_offsets(vertices: int = DEFAULT_VERTICES, margin: float = TURN_MARGIN) -> np.ndarray:
    """Offsets theta_b - theta_a realised by vertex pairs of two padded samplings.

    Both helices are sampled over one turn plus `margin` turns on each end with
    2*pi/vertices spacing, so every pairwise offset is an integer multiple of
    that spacing.
    """
    k_max = int(round((1.0 + 2.0 * margin) * vertices))
    return np.arange(-k_max, k_max + 1) * (TWO_PI / vertices)


def _planar_sq(r1, r2, dphase, delta):
    return r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * np.cos(delta + dphase)


def pair_distance_sq(r1, r2, dphase, height, delta):
    """Squared distance between helix points whose parameters differ by delta."""
    return _planar_sq(r1, r2, dphase, delta) + (height * delta / TWO_PI) ** 2


def coaxial_min_distance(r1: float, r2: float, dphase: float, height: float,
                         vertices: int = DEFAULT_VERTICES, exact: bool = False) -> float:
    """Minimum distance between two coaxial helices of equal pitch.

    The discrete value matches min_distance on padded vertex samplings. With
    exact=True, local minima are polished over continuous offsets.
    """
    delta = parameter_offsets(vertices)
    d2 = pair_distance_sq(r1, r2, dphase, height, delta)
    best = float(d2.min())
    if exact:
        step = TWO_PI / vertices
        f = lambda x: float(pair_distance_sq(r1, r2, dphase, height, x))
        for k in _local_extrema(d2, minima=True):
            res = minimize_scalar(f, bounds=(delta[k] - step, delta[k] + step), method="bounded",
                                  options={"xatol": 1e-12})
            best = min(best, float(res.fun))
    return math.sqrt(max(best, 0.0))


def _local_extrema(values: np.ndarray, minima: bool, limit: int = 8) -> list[int]:
    v = values if minima else -values
    finite = np.where(np.isfinite(v), v, np.inf)
    inner = np.where((finite[1:-1] <= finite[:-2]) & (finite[1:-1] <= finite[2:]))[0] + 1
    idx = list(inner)
    for end in (0, len(v) - 1):
        if np.isfinite(finite[end]):
            idx.append(end)
    idx.sort(key=lambda i: finite[i])
    return idx[:limit]


def shell_min_distance(m: int, radius: float, height: float, vertices: int = DEFAULT_VERTICES,
                       exact: bool = False) -> float:
    """Distance between adjacent strands (phases 0 and 2*pi/m) of one shell."""
    if m == 1:
        return math.inf
    return coaxial_min_distance(radius, radius, TWO_PI / m, height, vertices, exact)


def planar_min_radius(m: int, clearance: float = CLEARANCE) -> float:
    """Smallest radius at which m disks of diameter `clearance` fit on a circle."""
    if m == 1:
        return 0.0
    return 0.5 * clearance / math.sin(math.pi / m)


def shell_feasible(m: int, radius: float, height: float, clearance: float = CLEARANCE,
                   vertices: int = DEFAULT_VERTICES, exact: bool = False) -> bool:
    if m < 1:
        raise ValueError("m must be at least 1")
    if m == 1:
        return True
    if radius < planar_min_radius(m, clearance) - DISTANCE_TOL:
        return False
    if height < clearance * m - DISTANCE_TOL:
        return False
    return shell_min_distance(m, radius, height, vertices, exact) >= clearance - DISTANCE_TOL


def _adjacent_pair(m: int, radius: float, height: float, vertices: int) -> tuple[Polyline3, Polyline3]:
    n = int(round((1.0 + 2.0 * TURN_MARGIN) * vertices)) + 1
    turns = (n - 1) / vertices
    start = -TURN_MARGIN * TWO_PI
    a = sample_helix(HelixSpec(radius, height, 0.0, turns, start), n)
    b = sample_helix(HelixSpec(radius, height, TWO_PI / m, turns, start), n)
    return a, b


def shell_feasible_sampled(m: int, radius: float, height: float, clearance: float = CLEARANCE,
                           vertices: int = DEFAULT_VERTICES) -> bool:
    """Same test as shell_feasible, but through explicit polylines and a k-d tree."""
    if m == 1:
        return True
    if radius < planar_min_radius(m, clearance) - DISTANCE_TOL or height < clearance * m - DISTANCE_TOL:
        return False
    a, b = _adjacent_pair(m, radius, height, vertices)
    return min_distance(a, b) >= clearance - DISTANCE_TOL


def min_height(m: int, radius: float, clearance: float = CLEARANCE, vertices: int = DEFAULT_VERTICES,
               exact: bool = False, method: str = "closed") -> float:
    """Smallest pitch height at which an m-strand shell of the given radius is feasible.

    method="closed" solves the discretized constraint directly: for every
    parameter offset d the requirement P(d) + (H d / 2pi)^2 >= c^2 is a lower
    bound on H. method="bisect" bisects on the sampled polyline test.
    """
    if m == 1:
        return clearance
    if radius < planar_min_radius(m, clearance) - DISTANCE_TOL:
        raise InfeasibleError(f"radius {radius:.6g} is below the planar minimum for {m} strands")
    floor = clearance * m
    if method == "bisect":
        hi = 2.0 * floor
        while not shell_feasible_sampled(m, radius, hi, clearance, vertices):
            hi *= 2.0
            if hi > 1e7:
                raise InfeasibleError("no feasible height found")
        return bisect_threshold(lambda h: shell_feasible_sampled(m, radius, h, clearance, vertices),
                                floor, hi, tol=1e-5)
    if method != "closed":
        raise ValueError(f"unknown method {method!r}")
    delta = parameter_offsets(vertices)
    g = _height_need(m, radius, clearance, delta)
    worst = float(np.max(g))
    if exact:
        step = TWO_PI / vertices
        f = lambda x: -float(_height_need(m, radius, clearance, np.array([x]))[0])
        for k in _local_extrema(g, minima=False):
            if g[k] <= 0 or delta[k] == 0:
                continue
            lo, hi = delta[k] - step, delta[k] + step
            if lo < 0 < hi:
                lo, hi = (1e-9 * step, hi) if delta[k] > 0 else (lo, -1e-9 * step)
            res = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
            worst = max(worst, -float(res.fun))
    return max(floor, TWO_PI * math.sqrt(max(worst, 0.0)))


def _height_need(m, radius, clearance, delta):
    """(c^2 - P(d)) / d^2, the squared height requirement over (2*pi)^2."""
    need = clearance * clearance - _planar_sq(radius, radius, TWO_PI / m, delta)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = need / (delta * delta)
    return np.where(delta == 0, 0.0, g)


def min_radius(m: int, height: float, clearance: float = CLEARANCE, vertices: int = DEFAULT_VERTICES,
               exact: bool = False, method: str = "closed") -> float:
    """Smallest radius at which an m-strand shell of the given height is feasible."""
    if m == 1:
        return 0.0
    if height < clearance * m - DISTANCE_TOL:
        raise InfeasibleError(f"height {height:.6g} is below the stacking minimum {clearance * m:g}")
    planar = planar_min_radius(m, clearance)
    if method == "bisect":
        hi = 2.0 * planar + 1.0
        while not shell_feasible_sampled(m, hi, height, clearance, vertices):
            hi *= 2.0
        return bisect_threshold(lambda r: shell_feasible_sampled(m, r, height, clearance, vertices),
                                planar, hi, tol=1e-5)
    if method != "closed":
        raise ValueError(f"unknown method {method!r}")
    delta = parameter_offsets(vertices)
    g = _radius_need(m, height, clearance, delta)
    if np.any(np.isinf(g)):
        raise InfeasibleError("a strand sits directly above its neighbour at this height")
    worst = float(np.max(g))
    if exact:
        step = TWO_PI / vertices
        f = lambda x: -float(_radius_need(m, height, clearance, np.array([x]))[0])
        for k in _local_extrema(g, minima=False):
            if g[k] <= 0:
                continue
            res = minimize_scalar(f, bounds=(delta[k] - step, delta[k] + step), method="bounded",
                                  options={"xatol": 1e-12})
            worst = max(worst, -float(res.fun))
    return max(planar, math.sqrt(max(worst, 0.0)))


def _radius_need(m, height, clearance, delta):
    need = clearance * clearance - (height * delta / TWO_PI) ** 2
    q = 2.0 * (1.0 - np.cos(delta + TWO_PI / m))
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(need > 0, need / q, 0.0)
    return np.where((need > 0) & (q < 1e-15), np.inf, g)


# ---------------------------------------------------------------------------
# empirical scaled-coordinate fits


@dataclass(frozen=True)
class FitModel:
    """Y(X) = a X^-b / (c X^-b + 1)^d and X(Y) = e Y^-f / (g Y^-f + 1)^h.

    X = R/N - 1/(N sin(pi/N)) and Y = H/N - 2. `safety` inflates the numerator
    coefficients; results are approximate and need a shell_feasible check.
    """
    a: float = 0.0643
    b: float = 1.8612
    c: float = 0.1932
    d: float = 0.5556
    e: float = 0.1301
    f: float = 1.3239
    g: float = 0.4165
    h: float = 0.5896
    safety: float = 1.0
    approximate: bool = field(default=True, init=False)

    def y_of_x(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise ValueError("scaled radius X must be positive")
        t = x ** -self.b
        return self.safety * self.a * t / (self.c * t + 1.0) ** self.d

    def x_of_y(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y <= 0):
            raise ValueError("scaled height Y must be positive")
        t = y ** -self.f
        return self.safety * self.e * t / (self.g * t + 1.0) ** self.h


DEFAULT_FIT = FitModel()


def scaled_coordinates(m: int, radius, height):
    """(X, Y) for a shell of m strands; collapses shells of different m onto one curve."""
    if m < 2:
        raise ValueError("scaled coordinates need m >= 2")
    x = np.asarray(radius, dtype=float) / m - 1.0 / (m * math.sin(math.pi / m))
    y = np.asarray(height, dtype=float) / m - 2.0
    return x, y


def fit_height(m: int, radius: float, model: FitModel = DEFAULT_FIT) -> float:
    x, _ = scaled_coordinates(m, radius, 0.0)
    return float(m * (model.y_of_x(x) + 2.0))


def fit_radius(m: int, height: float, model: FitModel = DEFAULT_FIT) -> float:
    _, y = scaled_coordinates(m, 0.0, height)
    return float(m * (model.x_of_y(y) + 1.0 / (m * math.sin(math.pi / m))))

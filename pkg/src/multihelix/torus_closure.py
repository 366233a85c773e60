"""Closing a multihelix into a T(pQ, Q) torus link, overlap checks, export, and lower bounds.

Embedding: a strand at shell radius r and phase a is
    theta = p * psi + a,   psi in [0, 2 pi)
    x = (R_M + r cos theta) cos psi
    y = (R_M + r cos theta) sin psi
    z = r sin theta
so one multihelix twist (height H) occupies an axis angle of 2 pi / p. The rod
becomes the core circle of radius R_M. Each pair of components links p times,
giving p Q (Q - 1) crossings.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .constraint_geometry import CLEARANCE, TWO_PI, Polyline3, segment_distances
from .shell_optimizer import MultihelixConfig

RULES = ("minimal", "uniform", "outer")
HEX_DENSITY = math.pi / math.sqrt(12.0)


# ---------------------------------------------------------------------------
# geometry and length


def major_radius_for_rule(config: MultihelixConfig, p: int, rule: str) -> float:
    """Closed-form major radius for the 'uniform' and 'outer' rules."""
    base = p * config.height / TWO_PI
    if rule == "uniform":
        return (p + 1) * config.height / TWO_PI
    if rule == "outer":
        return base + config.shell_radii[-1]
    raise ValueError(f"rule {rule!r} has no closed form")


def strand_length(major_radius: float, r: float, p: int, samples: int | None = None) -> float:
    """Length of one closed strand; periodic integrand, so the trapezoid rule is spectrally accurate."""
    n = samples or 2048 * p
    psi = np.arange(n) * (TWO_PI / n)
    th = p * psi
    speed = np.sqrt((major_radius + r * np.cos(th)) ** 2 + (p * r) ** 2)
    return float(speed.mean() * TWO_PI)


def closed_length(config: MultihelixConfig, p: int, major_radius: float) -> float:
    total = TWO_PI * major_radius if config.arrangement.has_rod else 0.0
    parts = [m * strand_length(major_radius, r, p) for m, r in zip(config.arrangement.shells, config.shell_radii)]
    return total + math.fsum(parts)


def link_components(config: MultihelixConfig, p: int, major_radius: float, vertices_per_turn: int = 200,
                    psi_offset: float = 0.0, shell_phases: Sequence[float] | None = None) -> list[Polyline3]:
    """Closed polylines for the rod and every strand, p * vertices_per_turn vertices each."""
    n = p * vertices_per_turn
    psi = psi_offset + np.arange(n) * (TWO_PI / n)
    comps = []
    if config.arrangement.has_rod:
        comps.append(Polyline3(np.c_[major_radius * np.cos(psi), major_radius * np.sin(psi), np.zeros(n)], True))
    for s, (m, r) in enumerate(zip(config.arrangement.shells, config.shell_radii)):
        shift = 0.0 if shell_phases is None else shell_phases[s]
        for j in range(m):
            th = p * psi + TWO_PI * j / m + shift
            rho = major_radius + r * np.cos(th)
            comps.append(Polyline3(np.c_[rho * np.cos(psi), rho * np.sin(psi), r * np.sin(th)], True))
    return comps


# ---------------------------------------------------------------------------
# overlap checks


@dataclass(frozen=True)
class OverlapReport:
    min_distance: float
    components: tuple[int, int]
    indices: tuple[int, int]
    clearance: float
    tol: float
    method: str

    @property
    def passed(self) -> bool:
        return self.min_distance >= self.clearance * (1.0 - self.tol)


def _flatten(components: Sequence[Polyline3], use_segments: bool):
    pts, labels, arc, totals, seg_a, seg_b = [], [], [], [], [], []
    for c, poly in enumerate(components):
        a, b = poly.segments()
        lens = np.linalg.norm(b - a, axis=1)
        cum = np.concatenate([[0.0], np.cumsum(lens)])
        total = cum[-1] if poly.closed else np.inf
        if use_segments:
            pts.append(0.5 * (a + b))
            arc.append(cum[:-1] + 0.5 * lens)
            seg_a.append(a)
            seg_b.append(b)
            n = len(a)
        else:
            pts.append(poly.vertices)
            arc.append(cum[:len(poly.vertices)])
            n = len(poly.vertices)
        labels.append(np.full(n, c))
        totals.append(np.full(n, total))
    out = [np.concatenate(pts), np.concatenate(labels), np.concatenate(arc), np.concatenate(totals)]
    if use_segments:
        out += [np.concatenate(seg_a), np.concatenate(seg_b)]
    return out


def _far_enough(i, j, labels, arc, totals, exclusion):
    same = labels[i] == labels[j]
    d = np.abs(arc[i] - arc[j])
    d = np.minimum(d, totals[i] - d)
    return ~same | (d >= exclusion)


def verify_no_overlap(components: Sequence[Polyline3], clearance: float = CLEARANCE, tol: float = 0.0,
                      method: str = "segment", search_radius: float | None = None,
                      full_minimum: bool = True) -> OverlapReport:
    """Smallest distance between different components and between far-apart parts of one component.

    Points on the same component closer than pi * clearance / 2 in arc length
    are neighbours along the tube and are skipped. method="vertex" compares
    vertices only; "segment" computes exact segment-to-segment distances.
    With full_minimum=False, a configuration with nothing inside the search
    radius reports the radius itself instead of searching further.
    """
    if not components:
        raise ValueError("need at least one component")
    use_segments = method == "segment"
    if method not in ("segment", "vertex"):
        raise ValueError(f"unknown method {method!r}")
    flat = _flatten(components, use_segments)
    pts, labels, arc, totals = flat[:4]
    exclusion = math.pi * clearance / 2.0
    radius = clearance * 1.05 if search_radius is None else search_radius
    pad = 0.0
    if use_segments:
        sa, sb = flat[4], flat[5]
        pad = float(np.linalg.norm(sb - sa, axis=1).max())
    tree = cKDTree(pts)
    pairs = tree.query_pairs(radius + pad, output_type="ndarray")
    best, where = math.inf, (-1, -1)
    if len(pairs):
        i, j = pairs[:, 0], pairs[:, 1]
        keep = _far_enough(i, j, labels, arc, totals, exclusion)
        i, j = i[keep], j[keep]
        if len(i):
            if use_segments:
                d = np.empty(len(i))
                for s in range(0, len(i), 500_000):
                    sl = slice(s, s + 500_000)
                    d[sl] = segment_distances(sa[i[sl]], sb[i[sl]], sa[j[sl]], sb[j[sl]])
            else:
                d = np.linalg.norm(pts[i] - pts[j], axis=1)
            k = int(np.argmin(d))
            best, where = float(d[k]), (int(i[k]), int(j[k]))
    if not math.isfinite(best) or best > radius:
        if full_minimum:
            best, where = _nearest_between_components(components, labels, pts, best, where,
                                                      (sa, sb) if use_segments else None)
        else:
            best = min(best, radius)
    ci, cj = (int(labels[where[0]]), int(labels[where[1]])) if where[0] >= 0 else (-1, -1)
    return OverlapReport(best, (ci, cj), where, clearance, tol, method)


def _nearest_between_components(components, labels, pts, best, where, segs=None):
    if len(components) < 2:
        return best, where
    for c in range(len(components)):
        others = np.where(labels != c)[0]
        if len(others) == 0:
            continue
        tree = cKDTree(pts[others])
        sel = np.where(labels == c)[0]
        k = 1 if segs is None else min(4, len(others))
        d, idx = tree.query(pts[sel], k=k)
        d, idx = d.reshape(len(sel), k), idx.reshape(len(sel), k)
        i = np.repeat(sel, k)
        j = others[idx.ravel()]
        if segs is None:
            d = d.ravel()
        else:
            # midpoints only shortlist candidates; measure the segments themselves
            near = d.ravel() <= d.min() + 2 * float(np.linalg.norm(segs[1] - segs[0], axis=1).max())
            i, j = i[near], j[near]
            d = segment_distances(segs[0][i], segs[1][i], segs[0][j], segs[1][j])
        m = int(np.argmin(d))
        if d[m] < best:
            best, where = float(d[m]), (int(i[m]), int(j[m]))
    return best, where


# ---------------------------------------------------------------------------
# closing a configuration


@dataclass(frozen=True)
class TorusLinkReport:
    p: int
    q: int
    arrangement: str
    major_radius: float
    total_length: float
    crossing_number: int
    ratio: float
    lower_bound: float
    lower_bound_kind: str
    rule: str = "minimal"
    lower_bound_conjectural: bool = True

    def to_record(self) -> dict:
        return {"p": self.p, "q": self.q, "arrangement": self.arrangement, "major_radius": self.major_radius,
                "total_length": self.total_length, "crossing_number": self.crossing_number,
                "ratio": self.ratio, "lower_bound": self.lower_bound, "lower_bound_kind": self.lower_bound_kind,
                "rule": self.rule}


@dataclass(frozen=True)
class ClosedLink:
    report: TorusLinkReport
    config: MultihelixConfig
    vertices_per_turn: int

    @property
    def components(self) -> list[Polyline3]:
        return link_components(self.config, self.report.p, self.report.major_radius, self.vertices_per_turn)


def crossing_number(p: int, q: int) -> int:
    return p * q * (q - 1)


def minimal_major_radius(config: MultihelixConfig, p: int, vertices_per_turn: int = 200,
                         clearance: float = CLEARANCE, slack: float = 1e-3, tol: float = 1e-4,
                         method: str = "segment") -> float:
    """Smallest major radius at which the closed link keeps its clearance.

    Starts from p H / (2 pi) (no stretching of the axis), scans outward in unit
    steps until the overlap check passes, then bisects to `tol`. `slack` is
    the relative shortfall accepted as discretization error: polygon chords
    sit slightly inside the curves they sample, so shells that touch exactly
    in the continuum measure a hair under the clearance.
    """
    h_rm = p * config.height / TWO_PI
    lo = max(h_rm, config.shell_radii[-1] + 0.5 * clearance)

    def ok(rm: float) -> bool:
        comps = link_components(config, p, rm, vertices_per_turn)
        rep = verify_no_overlap(comps, clearance, slack, method, search_radius=clearance, full_minimum=False)
        return rep.passed

    if ok(lo):
        return lo
    prev, cur = lo, lo + 1.0
    limit = lo + config.shell_radii[-1] + config.height + 10.0
    while not ok(cur):
        prev, cur = cur, cur + 1.0
        if cur > limit:
            raise RuntimeError("no non-overlapping major radius found")
    while cur - prev > tol:
        mid = 0.5 * (prev + cur)
        if ok(mid):
            cur = mid
        else:
            prev = mid
    return cur


def close_link(config: MultihelixConfig, p: int = 3, rule: str = "minimal", vertices_per_turn: int = 200,
               lower_bound_mode: str = "tabulated", major_radius: float | None = None) -> ClosedLink:
    """Close p copies of a multihelix twist into a torus link.

    Rules for the major radius: "uniform" (p + 1) H / 2 pi, "outer" p H / 2 pi
    plus the outer shell radius, "minimal" the smallest radius passing the
    segment overlap check (see minimal_major_radius). An explicit major_radius overrides the rule.
    """
    if p < 2:
        raise ValueError("closure needs p >= 2")
    if major_radius is not None:
        rule = "explicit"
    else:
        if rule == "minimal":
            major_radius = minimal_major_radius(config, p, vertices_per_turn)
        elif rule in RULES:
            major_radius = major_radius_for_rule(config, p, rule)
        else:
            raise ValueError(f"unknown rule {rule!r}")
    q = config.q
    length = closed_length(config, p, major_radius)
    c = crossing_number(p, q)
    lb = lower_bound_link(q, p, lower_bound_mode)
    report = TorusLinkReport(p, q, config.arrangement.label(), float(major_radius), length, c,
                             length / c ** 0.75, lb.length, lb.kind, rule, lb.conjectural)
    return ClosedLink(report, config, vertices_per_turn)


def ratio_sweep(configs: Iterable[MultihelixConfig], p: int = 3, rule: str = "minimal",
                vertices_per_turn: int = 200) -> tuple[list[TorusLinkReport], float]:
    """Close each config; return the reports and the least-squares slope of log L against log C."""
    reports = [close_link(c, p, rule, vertices_per_turn).report for c in configs]
    slope = float("nan")
    if len(reports) >= 2:
        x = np.log([r.crossing_number for r in reports])
        y = np.log([r.total_length for r in reports])
        slope = float(np.polyfit(x, y, 1)[0])
    return reports, slope


def incremental_ratio_bound(p: int, prefactor: float = 10.89) -> float:
    """L / C^(3/4) for a closed incremental construction: prefactor p^(1/4) (p + 1) / p."""
    if p < 2:
        raise ValueError("p must be at least 2")
    return prefactor * p ** 0.25 * (p + 1) / p


def projected_crossings(components: Sequence[Polyline3]) -> int:
    """Transversal crossings of the projection onto the xy-plane (looking down the torus axis)."""
    segs = []
    for c, poly in enumerate(components):
        a, b = poly.segments()
        segs.append((c, a[:, :2], b[:, :2]))
    total = 0
    for ci, a1, b1 in segs:
        for cj, a2, b2 in segs:
            if cj < ci:
                continue
            hits = _segment_intersections(a1, b1, a2, b2)
            if ci == cj:
                n = len(a1)
                idx = np.arange(n)
                near = np.abs(idx[:, None] - idx[None, :])
                near = np.minimum(near, n - near) <= 1
                hits &= ~near
                total += int(np.triu(hits, 1).sum())
            else:
                total += int(hits.sum())
    return total


def _segment_intersections(a1, b1, a2, b2):
    def orient(p, q, r):
        return (q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1]) - (q[..., 1] - p[..., 1]) * (r[..., 0] - p[..., 0])
    P, Q = a1[:, None, :], b1[:, None, :]
    R, S = a2[None, :, :], b2[None, :, :]
    d1, d2 = orient(P, Q, R), orient(P, Q, S)
    d3, d4 = orient(R, S, P), orient(R, S, Q)
    return (d1 * d2 < 0) & (d3 * d4 < 0)


# ---------------------------------------------------------------------------
# lower bounds from disk hulls


@dataclass(frozen=True)
class HullTable:
    """Convex-hull perimeters around n disks of unit diameter."""
    perimeters: dict
    conjectural: dict

    @classmethod
    def load(cls, path: str | Path | None = None) -> "HullTable":
        if path is None:
            text = resources.files("multihelix").joinpath("data/hulls.csv").read_text()
        else:
            text = Path(path).read_text()
        per, conj = {}, {}
        for row in csv.DictReader(line for line in text.splitlines() if not line.startswith("#")):
            n = int(row["n"])
            per[n] = float(row["perimeter"])
            conj[n] = row["conjectural"].strip().lower() in ("1", "true", "yes")
        return cls(per, conj)

    def __contains__(self, n: int) -> bool:
        return n in self.perimeters

    def perimeter(self, n: int) -> float:
        return self.perimeters[n]


@lru_cache(maxsize=1)
def default_hull_table() -> HullTable:
    return HullTable.load()


def circular_hull_estimate(n: int) -> float:
    """Perimeter of a circle whose area holds n unit-diameter disks at hexagonal density."""
    return math.pi * math.sqrt(n / HEX_DENSITY)


@dataclass(frozen=True)
class LowerBound:
    q: int
    p: int
    length: float
    ratio: float
    kind: str
    conjectural: bool
    fallback: bool = False


def lower_bound_link(q: int, p: int = 3, mode: str = "tabulated", table: HullTable | None = None) -> LowerBound:
    """Length lower bound for T(pq, q): each component encloses p(q - 1) unit-radius tube sections.

    circular mode: q * 2 pi sqrt(p (q - 1) / sigma) with sigma the hexagonal
    packing fraction (a circle holding the disks' area). tabulated mode:
    q * (2 L_H + 2 pi), L_H the hull perimeter for unit-diameter disks, doubled
    for unit-radius tubes and offset by one tube radius.
    """
    if q < 2:
        raise ValueError("need at least two components")
    n = p * (q - 1)
    c = crossing_number(p, q)
    fallback = False
    if mode == "tabulated":
        table = table or default_hull_table()
        if n in table:
            length = q * (2.0 * table.perimeter(n) + TWO_PI)
            return LowerBound(q, p, length, length / c ** 0.75, "tabulated_hull", table.conjectural[n])
        fallback = True
    elif mode != "circular":
        raise ValueError(f"unknown mode {mode!r}")
    length = q * TWO_PI * math.sqrt(n / HEX_DENSITY)
    return LowerBound(q, p, length, length / c ** 0.75, "circular_asymptotic", True, fallback)


def circular_ratio_limit() -> float:
    """Large-q limit of the circular-hull ratio: sqrt(8 pi)."""
    return math.sqrt(8.0 * math.pi)


def hull_ratio_range(qs: Iterable[int], upper_ratios: dict | None = None, p: int = 3) -> list[dict]:
    """Tabulated lower-bound ratio per q, with the upper/lower gap where an upper ratio is given."""
    rows = []
    for q in qs:
        lb = lower_bound_link(q, p, "tabulated")
        row = {"q": q, "disks": p * (q - 1), "lower_length": lb.length, "lower_ratio": lb.ratio,
               "kind": lb.kind}
        if upper_ratios and q in upper_ratios:
            row["upper_ratio"] = upper_ratios[q]
            row["gap"] = upper_ratios[q] / lb.ratio
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# export


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_vect(path: str | Path, components: Sequence[Polyline3]) -> Path:
    """Geomview VECT: counts, per-component vertex counts (negative = closed), coordinates."""
    path = Path(path)
    total = sum(len(c) for c in components)
    lines = ["VECT", f"{len(components)} {total} 0",
             " ".join(str(-len(c) if c.closed else len(c)) for c in components),
             " ".join("0" for _ in components)]
    for comp in components:
        lines.extend(" ".join(_fmt(v) for v in row) for row in comp.vertices)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_vect(path: str | Path) -> list[Polyline3]:
    tokens = [t for line in Path(path).read_text().splitlines() if not line.startswith("#") for t in line.split()]
    if tokens[0] != "VECT":
        raise ValueError("not a VECT file")
    ncomp, nvert, ncolor = (int(t) for t in tokens[1:4])
    counts = [int(t) for t in tokens[4:4 + ncomp]]
    pos = 4 + 2 * ncomp
    coords = np.array([float(t) for t in tokens[pos:pos + 3 * nvert]]).reshape(nvert, 3)
    out, start = [], 0
    for c in counts:
        n = abs(c)
        out.append(Polyline3(coords[start:start + n], c < 0))
        start += n
    return out


def write_obj(path: str | Path, components: Sequence[Polyline3]) -> Path:
    """Wavefront OBJ with `v` lines and one `l` record per component (closed ones repeat the first index)."""
    path = Path(path)
    lines, base = [], 1
    for comp in components:
        lines.extend("v " + " ".join(_fmt(v) for v in row) for row in comp.vertices)
    for comp in components:
        idx = list(range(base, base + len(comp)))
        if comp.closed:
            idx.append(base)
        lines.append("l " + " ".join(str(i) for i in idx))
        base += len(comp)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_obj(path: str | Path) -> list[Polyline3]:
    verts, comps = [], []
    for line in Path(path).read_text().splitlines():
        if line.startswith("v "):
            verts.append([float(t) for t in line.split()[1:4]])
        elif line.startswith("l "):
            comps.append([int(t) - 1 for t in line.split()[1:]])
    verts = np.array(verts)
    out = []
    for idx in comps:
        closed = len(idx) > 2 and idx[0] == idx[-1]
        if closed:
            idx = idx[:-1]
        out.append(Polyline3(verts[idx], closed))
    return out


def export_geometry(components: Sequence[Polyline3], path: str | Path, fmt: str = "vect") -> Path:
    if fmt == "vect":
        return write_vect(path, components)
    if fmt == "obj":
        return write_obj(path, components)
    raise ValueError(f"unknown export format {fmt!r}")

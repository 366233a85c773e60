"""Single-shell N-helix optimum and the rod-centred (caduceus) variant."""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq

from ._search import golden_section
from .constraint_geometry import min_height
from .errors import SolverError

TWO_PI = 2.0 * math.pi
_EPS = 1e-12


@dataclass(frozen=True)
class IdealHelixParams:
    n: int
    phi: float
    radius: float
    height: float
    length_per_twist: float
    approximate: bool = False

    @property
    def length_per_crossing(self) -> float:
        if self.n < 2:
            return math.nan
        return self.length_per_twist / (self.n * (self.n - 1))

    @property
    def pitch_angle(self) -> float:
        return math.atan2(self.height, TWO_PI * self.radius)


@dataclass(frozen=True)
class CaduceusParams:
    n_total: int
    outer_radius: float
    height: float
    length_per_twist: float
    refined: bool = False


def _phi_residual(phi: float, n: int) -> float:
    return 2.0 - 2.0 * math.cos(phi + TWO_PI / n) - phi * phi


def solve_phi(n: int) -> float:
    """Negative root of 2 - 2cos(phi + 2pi/n) = phi^2 inside (-2pi/n, 0).

    For large n the root approaches -pi/n.
    """
    if n < 2:
        raise ValueError("solve_phi needs n >= 2")
    lo, hi = -TWO_PI / n + _EPS, -_EPS
    flo, fhi = _phi_residual(lo, n), _phi_residual(hi, n)
    if flo * fhi > 0:
        raise SolverError(f"no sign change for n={n}")
    phi = brentq(_phi_residual, lo, hi, args=(n,), xtol=1e-15, maxiter=200)
    if abs(_phi_residual(phi, n)) >= 1e-10:
        raise SolverError(f"residual too large for n={n}")
    return phi


def ideal_helix(n: int) -> IdealHelixParams:
    phi = solve_phi(n)
    s = math.sin(phi + TWO_PI / n)
    radius = 2.0 / math.sqrt(phi * phi - phi * s)
    height = 2.0 * TWO_PI * math.sqrt(s / (phi * phi * s - phi ** 3))
    length = n * math.hypot(height, TWO_PI * radius)
    return IdealHelixParams(n, phi, radius, height, length)


def large_n_helix(n: int) -> IdealHelixParams:
    """Leading-order large-n optimum: R = sqrt(2) n / pi, H = sqrt(8) n, L = 4 n^2."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return IdealHelixParams(n, -math.pi / n, math.sqrt(2.0) * n / math.pi, math.sqrt(8.0) * n,
                            4.0 * n * n, approximate=True)


def _caduceus_length(k: int, radius: float, height: float) -> float:
    return height + k * math.hypot(height, TWO_PI * radius)


def caduceus(n_total: int, refine_radius: bool = False, vertices: int = 500) -> CaduceusParams:
    """Straight rod on the axis surrounded by an (n_total - 1)-helix.

    The helix sits at max(2, its ideal radius) so it clears the rod. With
    refine_radius the radius is relaxed outward (up to one unit) and the
    height follows from min_height.
    """
    if n_total < 2:
        raise ValueError("caduceus needs n_total >= 2")
    k = n_total - 1
    if k == 1:
        # a single helix around the rod: shortest when it hugs the rod at minimum pitch
        h = min_height(1, 2.0)
        return CaduceusParams(n_total, 2.0, h, _caduceus_length(1, 2.0, h), refine_radius)
    ideal = ideal_helix(k)
    if ideal.radius >= 2.0:
        r0, h0 = ideal.radius, ideal.height
    else:
        r0 = 2.0
        h0 = min_height(k, r0, vertices=vertices)
    best = CaduceusParams(n_total, r0, h0, _caduceus_length(k, r0, h0))
    if not refine_radius:
        return best

    def total(r: float) -> float:
        return _caduceus_length(k, r, min_height(k, r, vertices=vertices))

    r, length = golden_section(total, r0, r0 + 1.0, tol=1e-6)
    if length < best.length_per_twist:
        return CaduceusParams(n_total, r, min_height(k, r, vertices=vertices), length, True)
    return CaduceusParams(n_total, r0, h0, best.length_per_twist, True)

import math

import numpy as np
import pytest

from multihelix import torus_closure as tc
from multihelix.constraint_geometry import Polyline3
from multihelix.shell_optimizer import Arrangement, optimize_geometry


@pytest.fixture(scope="module")
def q19():
    return optimize_geometry(Arrangement.parse("1,5,7,6"))


@pytest.fixture(scope="module")
def t48():
    return optimize_geometry(Arrangement.parse("1,5,10"))


def test_crossing_number():
    assert tc.crossing_number(3, 19) == 1026
    assert tc.crossing_number(2, 2) == 4


def test_closure_q19(q19):
    link = tc.close_link(q19, 3)
    r = link.report
    assert (r.q, r.crossing_number, r.rule) == (19, 1026, "minimal")
    assert r.ratio == pytest.approx(11.5455, rel=0.01)
    assert r.ratio == pytest.approx(r.total_length / 1026 ** 0.75)
    assert r.major_radius >= 3 * q19.height / (2 * math.pi) - 1e-9


def test_minimal_closure_is_clear_and_uniform_is_not(q19):
    rm = tc.minimal_major_radius(q19, 3)
    comps = tc.link_components(q19, 3, rm)
    assert tc.verify_no_overlap(comps, tol=1e-3).passed
    uni = tc.link_components(q19, 3, tc.major_radius_for_rule(q19, 3, "uniform"))
    assert not tc.verify_no_overlap(uni, tol=2e-3).passed


def test_rules_and_override(q19):
    h = q19.height
    assert tc.major_radius_for_rule(q19, 3, "uniform") == pytest.approx(4 * h / (2 * math.pi))
    assert tc.major_radius_for_rule(q19, 3, "outer") == pytest.approx(3 * h / (2 * math.pi) + q19.shell_radii[-1])
    forced = tc.close_link(q19, 3, major_radius=200.0).report
    assert forced.rule == "explicit" and forced.major_radius == 200.0
    with pytest.raises(ValueError):
        tc.close_link(q19, 3, rule="widest")
    with pytest.raises(ValueError):
        tc.close_link(q19, 1)


def test_closed_length_matches_polyline(q19):
    rm = 60.0
    comps = tc.link_components(q19, 3, rm, vertices_per_turn=2000)
    assert sum(c.length for c in comps) == pytest.approx(tc.closed_length(q19, 3, rm), rel=1e-6)


@pytest.mark.parametrize("label, p", [("1,1", 3), ("1,2", 3), ("1,2", 2)])
def test_projected_crossings(label, p):
    c = optimize_geometry(Arrangement.parse(label))
    rm = tc.major_radius_for_rule(c, p, "outer")
    comps = tc.link_components(c, p, rm, vertices_per_turn=60, psi_offset=0.0123)
    assert tc.projected_crossings(comps) == tc.crossing_number(p, c.q)


def test_t48_export_and_verify(tmp_path, t48):
    link = tc.close_link(t48, 3, vertices_per_turn=199)
    comps = link.components
    assert len(comps) == 16
    assert sum(len(c) for c in comps) == 16 * 597
    assert link.report.total_length == pytest.approx(2139.7, rel=0.01)
    assert tc.verify_no_overlap(comps, tol=2e-3).passed
    for fmt, reader in (("vect", tc.read_vect), ("obj", tc.read_obj)):
        path = tc.export_geometry(comps, tmp_path / f"t48.{fmt}", fmt)
        back = reader(path)
        assert len(back) == 16
        assert all(b.closed and np.array_equal(a.vertices, b.vertices) for a, b in zip(comps, back))


def _circle(radius, n, centre=(0, 0, 0)):
    t = np.arange(n) * 2 * math.pi / n
    return Polyline3(np.c_[radius * np.cos(t), radius * np.sin(t), 0 * t] + np.asarray(centre, float), True)


def test_single_circle_export(tmp_path):
    c = _circle(5.0, 40)
    back = tc.read_vect(tc.write_vect(tmp_path / "c.vect", [c]))[0]
    assert back.closed and np.array_equal(back.vertices, c.vertices)
    text = (tmp_path / "c.vect").read_text().splitlines()
    assert text[:3] == ["VECT", "1 40 0", "-40"]


def test_two_far_circles():
    rep = tc.verify_no_overlap([_circle(1.0, 64), _circle(1.0, 64, (10, 0, 0))])
    assert rep.passed and rep.min_distance == pytest.approx(8.0, abs=1e-9)
    assert rep.components == (0, 1)


def test_self_overlap_detected():
    # a flat loop: the long sides are 1.4 apart but far apart along the curve (the tips fold even tighter)
    t = np.arange(400) * 2 * math.pi / 400
    flat = Polyline3(np.c_[10 * np.cos(t), 0.7 * np.sin(t), 0 * t], True)
    for method in ("vertex", "segment"):
        rep = tc.verify_no_overlap([flat], method=method)
        assert not rep.passed
        assert rep.min_distance <= 1.4 + 1e-9


def test_tube_neighbours_are_skipped():
    rep = tc.verify_no_overlap([_circle(0.8, 200)], method="vertex")
    assert rep.min_distance == math.inf


def test_unknown_export_format(tmp_path):
    with pytest.raises(ValueError):
        tc.export_geometry([_circle(1, 8)], tmp_path / "x", "stl")


def test_solomon_lower_bound():
    lb = tc.lower_bound_link(2, p=2, mode="tabulated")
    assert lb.length == pytest.approx(33.1, abs=0.1)
    assert not lb.conjectural


def test_hull_table_shape():
    table = tc.default_hull_table()
    ns = sorted(table.perimeters)
    assert ns == list(range(1, len(ns) + 1)) and len(ns) >= 120
    per = np.array([table.perimeter(n) for n in ns])
    assert np.all(np.diff(per) >= -1e-12)
    assert all(table.perimeter(n) >= tc.circular_hull_estimate(n) for n in ns[1:])
    assert table.perimeter(1) == pytest.approx(math.pi)


def test_bound_modes():
    for q in (3, 10, 40):
        tab, circ = tc.lower_bound_link(q), tc.lower_bound_link(q, mode="circular")
        assert tab.kind == "tabulated_hull" and circ.kind == "circular_asymptotic"
        assert circ.length <= tab.length
    far = tc.lower_bound_link(500)
    assert far.fallback and far.kind == "circular_asymptotic"
    with pytest.raises(ValueError):
        tc.lower_bound_link(1)
    with pytest.raises(ValueError):
        tc.lower_bound_link(5, mode="square")


def test_circular_limit():
    assert tc.circular_ratio_limit() == pytest.approx(5.013, abs=1e-3)
    assert tc.lower_bound_link(10 ** 6, mode="circular").ratio == pytest.approx(tc.circular_ratio_limit(), rel=1e-3)


def test_incremental_ratio_bound():
    vals = {p: tc.incremental_ratio_bound(p) for p in range(2, 9)}
    assert vals[3] == pytest.approx(19.11, abs=0.01)
    assert min(vals, key=vals.get) == 3
    with pytest.raises(ValueError):
        tc.incremental_ratio_bound(1)


def test_ratio_sweep_slope():
    configs = [optimize_geometry(Arrangement.parse(s)) for s in ("1,4,5", "1,4,5,2", "1,5,7,3", "1,5,7,6")]
    reports, slope = tc.ratio_sweep(configs, rule="outer")
    assert len(reports) == 4
    assert 0.6 < slope < 0.85


def test_report_record(q19):
    rec = tc.close_link(q19, 3, rule="outer").report.to_record()
    assert rec["rule"] == "outer" and rec["crossing_number"] == 1026

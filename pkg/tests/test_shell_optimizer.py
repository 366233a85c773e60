import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multihelix.constraint_geometry import min_height, shell_feasible
from multihelix.errors import InfeasibleError
from multihelix.shell_optimizer import (Arrangement, build_config, compositions, config_length,
                                        config_min_distance, construction_a_closed_form, construction_a_length,
                                        construction_a_outer_count, exhaustive_search, optimize_free_radii,
                                        optimize_geometry, reference_construction_A, square_grid_16,
                                        square_grid_min_height,
                                        square_grid_feasible)


def arr(text):
    return Arrangement.parse(text)


def test_parse_forms():
    assert arr("1,4,5,2") == arr("1-4-5-2") == arr("[1,4,5,2]")
    a = arr("1,4,5,2")
    assert a.shells == (4, 5, 2) and a.q == 12 and a.n_helices == 11 and a.label() == "[1,4,5,2]"


@pytest.mark.parametrize("bad", ["", "4,5", "1", "1,0,3", "1,x"])
def test_parse_rejects(bad):
    with pytest.raises(ValueError):
        arr(bad)


def test_single_shell_length_formula():
    h, r = 20.0, 3.0
    assert config_length(Arrangement((7,)), r, h) == pytest.approx(h + 7 * math.hypot(h, 2 * math.pi * r))


@pytest.mark.parametrize("label, length", [("1,1", 14.72454), ("1,4,5,2", 292.9205), ("1,5,7,6", 584.3822)])
def test_optimize_matches_table(label, length):
    assert optimize_geometry(arr(label)).total_length == pytest.approx(length, abs=0.05)


def test_spot_two_shell():
    c = optimize_geometry(arr("1,5,6"))
    assert c.total_length == pytest.approx(297.45, abs=0.5)
    assert c.inner_radius == pytest.approx(2.25, abs=0.05)


def test_config_invariants():
    c = optimize_geometry(arr("1,5,7,6"))
    assert 2 <= c.inner_radius <= 4
    assert c.shell_radii == pytest.approx((c.inner_radius, c.inner_radius + 2, c.inner_radius + 4))
    heights = [min_height(m, r) for m, r in zip(c.arrangement.shells, c.shell_radii)]
    assert c.height == pytest.approx(max(heights), abs=1e-9)
    assert c.height == pytest.approx(heights[c.binding_shell - 1], abs=1e-3)
    assert all(shell_feasible(m, r, c.height) for m, r in zip(c.arrangement.shells, c.shell_radii))
    expected = c.height + sum(m * math.hypot(c.height, 2 * math.pi * r)
                              for m, r in zip(c.arrangement.shells, c.shell_radii))
    assert c.total_length == pytest.approx(expected)
    assert c.length_per_crossing == pytest.approx(c.total_length / (19 * 18))


def test_build_config_rejects_low_height():
    with pytest.raises(InfeasibleError):
        build_config(arr("1,5"), (2.0,), height=5.0)


def test_overfull_first_shell_is_infeasible():
    with pytest.raises(InfeasibleError):
        optimize_geometry(arr("1,14"))


def test_compositions_count():
    comp = compositions(8, 3)
    assert len(comp) == math.comb(7, 2)
    assert np.all(comp.sum(axis=1) == 8) and np.all(comp >= 1)
    assert len({tuple(r) for r in comp}) == len(comp)


@pytest.mark.parametrize("n", range(1, 8))
def test_search_matches_brute_force(n):
    brute = []
    for t in range(1, n + 1):
        for comp in compositions(n, t):
            try:
                brute.append(optimize_geometry(Arrangement(tuple(int(v) for v in comp))))
            except InfeasibleError:
                pass
    best = min(brute, key=lambda c: c.total_length)
    found = exhaustive_search(n)[0]
    assert found.total_length == pytest.approx(best.total_length, rel=1e-6)


def test_search_examples():
    assert exhaustive_search(1)[0].arrangement.label() == "[1,1]"
    best = exhaustive_search(9)[0]
    assert best.arrangement.label() == "[1,4,5]"
    assert best.total_length == pytest.approx(214.4321, abs=0.05)
    ranked = exhaustive_search(11)
    assert ranked[0].arrangement.label() == "[1,4,5,2]"
    two_shell = min((c for c in ranked if c.arrangement.shell_count == 2), key=lambda c: c.total_length)
    assert ranked[0].total_length < two_shell.total_length
    assert two_shell.arrangement.label() == "[1,5,6]"


def test_search_ranked_and_monotone():
    best = [exhaustive_search(n)[0].total_length for n in range(1, 16)]
    assert all(np.diff(best) > 0)
    ranked = exhaustive_search(10)
    lengths = [c.total_length for c in ranked]
    assert lengths == sorted(lengths)


def test_per_crossing_tracks_inverse_sqrt():
    for n in range(9, 20):
        c = exhaustive_search(n)[0]
        assert c.length_per_crossing == pytest.approx(7.6 / math.sqrt(c.q), rel=0.15)


def test_windowed_search_row_39():
    c = exhaustive_search(38, shell_count_window=[5, 6])[0]
    assert c.arrangement.label() == "[1,5,8,9,9,7]"
    assert c.total_length == pytest.approx(1743.877, abs=0.05)


def test_parallel_search_is_deterministic():
    serial = exhaustive_search(12, shell_count_window=[2, 3, 4], keep=5)
    parallel = exhaustive_search(12, shell_count_window=[2, 3, 4], keep=5, jobs=2, margin=0.0100001)
    assert [c.arrangement for c in serial[:5]] == [c.arrangement for c in parallel[:5]]


@pytest.mark.parametrize("n", range(5, 26, 2))
def test_construction_a_identity(n):
    m = construction_a_outer_count(n)
    assert construction_a_length(n, m) == pytest.approx(construction_a_closed_form(n), abs=1e-9)


@pytest.mark.parametrize("n", range(7, 26))
def test_construction_a_minimal_outer_count(n):
    m = construction_a_outer_count(n)
    here = construction_a_length(n, m)
    for other in (m - 1, m + 1):
        if other - (n - other) >= 5 and other < n:
            assert here <= construction_a_length(n, other) + 1e-9


def test_construction_a_asymptote_and_domain():
    assert 1.0 <= reference_construction_A(1001) / (2 * 1001 ** 2) <= 1.05
    with pytest.raises(ValueError):
        reference_construction_A(4)


def test_square_grid():
    g = square_grid_16()
    assert g.spacing == pytest.approx(2.85, abs=0.05)
    assert g.total_length == pytest.approx(619.4, rel=0.01)
    # twisted neighbours at spacing 2 only clear each other at a very tall pitch
    assert not square_grid_feasible(2.0, 60.0)
    assert square_grid_min_height(2.0) > 5 * g.height


def test_free_radii_never_worse():
    fixed = optimize_geometry(arr("1,4,5"))
    free = optimize_free_radii(arr("1,4,5"), start=fixed)
    assert free.total_length <= fixed.total_length + 1e-9
    assert all(b - a >= 2 - 1e-9 for a, b in zip(free.shell_radii, free.shell_radii[1:]))


@settings(max_examples=15, deadline=None)
@given(st.lists(st.integers(1, 9), min_size=1, max_size=4))
def test_optimized_configs_keep_clearance(shells):
    try:
        c = optimize_geometry(Arrangement(tuple(shells)))
    except InfeasibleError:
        return
    d500 = config_min_distance(c, 500)
    assert d500 >= 2 * (1 - 1e-3)
    assert abs(config_min_distance(c, 2000) / d500 - 1) < 5e-3


def test_record_fields():
    rec = optimize_geometry(arr("1,4,5,2")).to_record()
    assert list(rec) == ["q", "arrangement", "inner_radius", "height", "binding_shell", "length",
                         "length_per_crossing"]

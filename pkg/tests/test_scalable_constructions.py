import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multihelix import scalable_constructions as sc
from multihelix.constraint_geometry import shell_feasible
from multihelix.errors import InfeasibleError
from multihelix.helix_core import ideal_helix
from multihelix.shell_optimizer import Arrangement, length_for_radii, optimize_geometry


def test_construction_spec_validation():
    with pytest.raises(ValueError):
        sc.ConstructionSpec("incremental", k=4)
    with pytest.raises(ValueError):
        sc.ConstructionSpec("spiral")
    assert sc.ConstructionSpec("equal_per_shell", n_per_shell=36, shell_count=20).kind == "equal_per_shell"


def test_incremental_geometry_k5_t4():
    c = sc.construct_incremental(5, 4, radius_mode="ideal")
    assert c.shell_radii == pytest.approx((2.29, 4.50, 6.75, 9.00), abs=0.03)
    approx = sc.construct_incremental(5, 4)
    assert approx.height == pytest.approx(56.57, abs=0.01)
    assert approx.total_length == pytest.approx(sc.incremental_length(5, 4), rel=1e-12)


def test_incremental_reference_length():
    # the stated sum gives 3641.2; kept red as a record of the discrepancy
    assert sc.incremental_length(5, 4) == pytest.approx(3001.7, rel=0.005)


def test_incremental_single_shell():
    c = sc.construct_incremental(7, 1, radius_mode="ideal")
    p = ideal_helix(7)
    assert c.total_length == pytest.approx(p.height + p.length_per_twist)


def test_incremental_cubic_law_exact_coefficient():
    exact = sc.incremental_length(5, 40) / ((8 - math.sqrt(8)) / 3 * 25 * 40 ** 3)
    assert 0.97 <= exact <= 1.03


def test_incremental_cubic_law_rounded_coefficient():
    # 1.72 rounds (8 - sqrt 8)/3 = 1.7239 down; the ratio lands at 1.0316
    ratio = sc.incremental_length(5, 40) / (1.72 * 25 * 40 ** 3)
    assert 0.97 <= ratio <= 1.03


def test_incremental_asymptote_values():
    assert sc.incremental_asymptote(5) == pytest.approx(10.89, abs=0.05)
    assert sc.incremental_asymptote(8) == pytest.approx(6.88 * 2, abs=1e-9)
    with pytest.raises(ValueError):
        sc.incremental_asymptote(3)
    rep = sc.incremental_report(5, 31)
    assert rep.q == sc.incremental_q(5, 31) == 2481
    assert rep.measured_prefactor == pytest.approx(10.89, rel=0.03)


def test_incremental_asymptote_k8_example():
    # listed as 6.88 sqrt(2/8) = 3.44, which contradicts 10.89 at k=5; kept red
    assert sc.incremental_asymptote(8) == pytest.approx(3.44, abs=0.01)


def test_incremental_q_formula():
    for k in (5, 6, 9):
        for t in (1, 2, 7):
            assert sc.incremental_q(k, t) == 1 + sum(k * i for i in range(1, t + 1))


def test_equal_sweep_720():
    sweep = sc.equal_sweep(720)
    t_best, best = min(sweep, key=lambda tc: tc[1].total_length)
    assert (t_best, best.arrangement.shells[0]) == (20, 36)
    for t, c in sweep:
        if c.arrangement.shells[0] >= 2:
            assert c.length_per_crossing < sc.equal_shell_bound(c.q, t)
    # one strand per shell sits just above the bound: the summand inequality needs N_s > pi/2
    single = dict(sweep)[720]
    assert single.length_per_crossing > sc.equal_shell_bound(721, 720)


def test_equal_optimized_close_to_ideal():
    ideal = sc.construct_equal(36, 20, "ideal")
    opt = sc.construct_equal(36, 20, "optimized")
    assert opt.total_length <= ideal.total_length + 1e-6
    assert ideal.total_length / opt.total_length - 1 <= 0.012


def test_equal_shell_bound():
    q = 721
    t_star = sc.optimal_shell_count(q)
    assert t_star == pytest.approx(21.4, abs=0.05)
    for q in (50, 721, 10 ** 6):
        b = sc.equal_shell_bound(q, sc.optimal_shell_count(q))
        assert b * math.sqrt(q) == pytest.approx(10.03, abs=0.01)
    assert sc.equal_shell_bound(10 ** 9, 1) == pytest.approx(4.0, abs=1e-6)
    assert sc.equal_bound_prefactor() == pytest.approx(10.03, abs=0.01)


def test_summand_inequality_grid():
    i = np.arange(2, 10 ** 4 + 1)
    for ns in range(2, 10 ** 3 + 1, 7):
        assert sc.summand_bound_holds(i, np.full_like(i, ns)).all()


def test_gamma_prefactors():
    assert sc.prefactor(sc.gamma_config(10 ** 6)) == pytest.approx(9.34, abs=0.02)
    assert sc.prefactor(sc.gamma_config(10 ** 4)) == pytest.approx(9.34, rel=0.05)
    assert sc.gamma_prefactor_limit() == pytest.approx(9.3405, abs=1e-4)
    assert 1 - sc.gamma_prefactor_limit() / sc.incremental_asymptote(5) == pytest.approx(0.15, abs=0.02)
    with pytest.raises(ValueError):
        sc.gamma_config(5)


def test_delta_constant_and_terms():
    assert sc.delta_exact_prefactor() == pytest.approx(7.82869, abs=1e-4)
    gamma, removed, added = sc.delta_prefactor_terms()
    assert removed == pytest.approx(2.11, abs=0.01)
    assert added == pytest.approx(0.60, abs=0.01)
    assert gamma - 2.11 + 0.60 == pytest.approx(sc.delta_exact_prefactor(), abs=2e-2)


def test_infill_limit_matches_construction():
    # the construction with interior shells at radius 2i converges to its own closed form
    assert sc.prefactor(sc.infilled_config(10 ** 6)) == pytest.approx(sc.infill_prefactor_limit(), rel=1e-3)


def test_infill_reference_prefactor():
    # interior shells at radius 2i converge to 7.918
    assert sc.prefactor(sc.infilled_config(10 ** 6)) == pytest.approx(7.83, rel=0.01)


def test_infill_721():
    _, base = min(sc.equal_sweep(720), key=lambda tc: tc[1].total_length)
    assert base.inner_radius == pytest.approx(16.2, abs=0.1)
    res = sc.infill(base)
    assert res.applied and res.feasible
    assert (res.interior_shells, res.moved, res.removed_full_shells, res.removed_partial) == (7, 112, 3, 4)
    assert res.config.arrangement.shells[:7] == (4, 8, 12, 16, 20, 24, 28)
    assert res.config.shell_radii[:7] == pytest.approx((2, 4, 6, 8, 10, 12, 14))
    assert res.config.height == base.height
    assert res.config.q == base.q
    assert base.total_length == pytest.approx(175000, rel=0.02)
    assert res.config.total_length == pytest.approx(152000, rel=0.02)
    assert all(shell_feasible(m, r, res.config.height)
               for m, r in zip(res.config.arrangement.shells, res.config.shell_radii))


def test_infill_without_room():
    base = sc.construct_equal(8, 3)
    assert base.inner_radius < 4
    res = sc.infill(base)
    assert not res.applied and res.config is base


def test_jenga_721_reduction():
    _, base = min(sc.equal_sweep(720), key=lambda tc: tc[1].total_length)
    filled = sc.infill(base).config
    out = sc.reverse_jenga(filled)
    drop = 1 - out.config.total_length / filled.total_length
    assert drop == pytest.approx(0.09, abs=0.02)
    assert out.config.q == filled.q
    assert not out.config.approximate


def test_jenga_fixed_point():
    c = optimize_geometry(Arrangement((4, 5, 2)))
    once = sc.reverse_jenga(c)
    twice = sc.reverse_jenga(once.config)
    assert twice.moves == 0
    assert twice.config.arrangement == once.config.arrangement


@settings(max_examples=20, deadline=None)
@given(st.lists(st.integers(1, 9), min_size=2, max_size=5))
def test_jenga_monotone(shells):
    try:
        c = optimize_geometry(Arrangement(tuple(shells)))
    except InfeasibleError:
        return
    out = sc.reverse_jenga(c)
    assert np.all(np.diff(out.lengths) <= 1e-9)
    assert out.config.arrangement.n_helices == c.arrangement.n_helices
    assert out.config.total_length <= c.total_length + 1e-9
    assert not out.config.approximate
    assert out.config.total_length == pytest.approx(
        length_for_radii(out.config.arrangement.shells, out.config.shell_radii, out.config.height))


def test_prefactor_ordering_and_floor():
    q = 10 ** 6
    inc = sc.prefactor_scan("incremental", [q])[0].measured_prefactor
    eq = sc.prefactor_scan("equal_per_shell", [q])[0].measured_prefactor
    inf = sc.prefactor_scan("infilled", [q])[0].measured_prefactor
    assert inc > eq > inf >= sc.delta_exact_prefactor() - 1e-3


@pytest.mark.parametrize("kind", ["incremental", "equal_per_shell", "gamma", "infilled"])
def test_three_halves_scaling(kind):
    qs = [10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6]
    reps = sc.prefactor_scan(kind, qs)
    slope = np.polyfit(np.log([r.q for r in reps]), np.log([r.length for r in reps]), 1)[0]
    assert 1.48 <= slope <= 1.52
    assert all(r.measured_prefactor >= sc.delta_exact_prefactor() - 0.05 for r in reps)


def test_report_record():
    rec = sc.incremental_report(5, 4).to_record()
    assert rec["kind"] == "incremental" and rec["q"] == 51 and rec["predicted_prefactor"] == 10.89

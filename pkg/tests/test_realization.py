import math
from fractions import Fraction

import numpy as np
import pytest

from folnerlab.additivity import ErrorMap, counterexample_map
from folnerlab.folner import box_folner
from folnerlab.gallery import gallery_entry
from folnerlab.lattice import Box
from folnerlab.realization import (NoAdmissibleTile, build_battery, coboundary_residual, extract_realization,
                                   realization_difference_test, residual, select_tile, three_term_bound_check,
                                   verify_realization)
from folnerlab.lattice import boundary_control_params
from folnerlab.setmaps import GroupAction, birkhoff_map
from folnerlab.shift import CylinderFunction, SampleSet
from folnerlab.values import PwcFunction, ValueSpace


def const_map(c, d=1):
    return birkhoff_map(c, GroupAction.trivial(d), ValueSpace("scalar"))


def test_constant_map_without_phi_condition_uses_unit_tile():
    cert = extract_realization(const_map(Fraction(3, 2)), ErrorMap.zero(), 0.1, constants=(0, 1.5),
                               n_random=10, phi_condition=False)
    assert cert.m == 1 and cert.v == Fraction(3, 2)
    assert cert.max_residual == 0 and cert.passed


def test_constant_map_with_phi_condition():
    # |||φ|||_sup <= m ε forces a larger tile; the realization is unchanged
    cert = extract_realization(const_map(Fraction(1, 2)), ErrorMap.zero(), 0.1, constants=(0, 0.5), n_random=10)
    assert cert.epsilon == pytest.approx(0.1 / (1 + 0 + 2 * 0.5))
    assert cert.m == 10 and cert.v == Fraction(1, 2) and cert.passed


def test_tile_selection_reports_infeasible_cap():
    with pytest.raises(NoAdmissibleTile) as exc:
        extract_realization(counterexample_map(), ErrorMap.counterexample_valid(), 0.1, constants=(2 / math.log(2), 1),
                            m_cap=64)
    assert exc.value.diagnostics["m_cap"] == 64


def test_select_tile_smallest_side():
    phi = const_map(1)
    b = ErrorMap.constant(1)
    m = select_tile(phi, b, 0.05, 1.0, 64, True)
    assert m == 20
    assert select_tile(phi, ErrorMap.constant(1), 0.05, 1.0, 64, False) == 20
    assert select_tile(phi, ErrorMap.zero(), 0.05, 1.0, 64, False) == 1


def test_battery_windows_are_invariant_boxes():
    params = boundary_control_params(Box.cube(3, 1), 0.2)
    battery = build_battery(params, 1, seed=4, n_random=20)
    assert len(battery) == 23
    kinds = {k for _, k in battery}
    assert kinds == {"grid", "random"}
    for F, kind in battery:
        if kind == "random":
            assert battery[0][0].size <= F.size <= battery[0][0].size * 3 // 2
    assert [F for F, _ in build_battery(params, 1, seed=4, n_random=20)] == [F for F, _ in battery]


def test_counterexample_zero_realization_residual():
    phi = counterexample_map()
    zero = PwcFunction.zero()
    seq = verify_realization(phi, zero, box_folner(1), 100, schedule=[1, 2, 10, 100])
    for n, r in zip(seq.ns, seq.values):
        expect = 1.0 if n == 1 else 1 / math.log1p(n)
        assert r == pytest.approx(expect, rel=1e-13)
    assert seq.values[-1] == pytest.approx(0.2167, abs=1e-4)
    assert all(a >= b for a, b in zip(seq.tail_sups, seq.tail_sups[1:]))


def test_birkhoff_map_residuals():
    v = PwcFunction.indicator(0, 0.5, 2)
    phi = birkhoff_map(v, GroupAction.trivial(), ValueSpace("pwc"))
    assert max(verify_realization(phi, v, box_folner(1), 30).values) == 0
    u = PwcFunction.indicator(0, 0.25, 2)
    vals = verify_realization(phi, u, box_folner(1), 30).values
    assert all(x == pytest.approx((v - u).lp_norm(1)) for x in vals)


def test_coboundary_residual_examples():
    R = GroupAction.matrices(np.array([[0.0, -1.0], [1.0, 0.0]]))
    rep = coboundary_residual(np.array([1.0, 0.0]), R, ValueSpace("vector", dim=2), box_folner(1), 64,
                              schedule=[4, 8, 64])
    assert rep.sequence.values == [0.0, 0.0, 0.0] and rep.isometric
    rep = coboundary_residual(3.0, GroupAction.trivial(), ValueSpace("scalar"), box_folner(1), 10)
    assert set(rep.sequence.values) == {3.0} and rep.lw_gap == 0
    ss = SampleSet.bernoulli(0.5, 2, 4000)
    f = CylinderFunction.coordinate(0) - 0.5
    space = ValueSpace("sampled", p=2, sampler=ss)
    rep = coboundary_residual(f, GroupAction.koopman(), space, box_folner(1), 400, schedule=[100, 400])
    for n, val in zip(rep.sequence.ns, rep.sequence.values):
        sigma = 0.5 / math.sqrt(n)
        assert abs(val - sigma) <= 3 * sigma / math.sqrt(2 * 4000) + 1e-12 or abs(val / sigma - 1) < 0.05


def test_difference_test_examples():
    v = PwcFunction.indicator(0, 0.5, 2)
    phi = birkhoff_map(v, GroupAction.trivial(), ValueSpace("pwc"))
    assert realization_difference_test(phi, v, v, box_folner(1), 20, 1e-9).passed
    bad = realization_difference_test(phi, v, v + PwcFunction.constant(1), box_folner(1), 20, 0.1)
    assert not bad.passed and bad.triangle_ok
    phi = counterexample_map()
    v2 = PwcFunction.indicator(0, 0.01, 1)
    rep = realization_difference_test(phi, PwcFunction.zero(), v2, box_folner(1), 256, 0.5, schedule=[256])
    assert rep.difference_tail == pytest.approx(0.01)


def test_three_term_bounds_small():
    phi = counterexample_map()
    b = ErrorMap.counterexample_valid()
    rep = three_term_bound_check(phi, b, 2 / math.log(2), 1.0, sides=(1, 2, 3), max_size=24)
    assert rep.passed and len(rep.rows) == 72
    rep = three_term_bound_check(const_map(3), ErrorMap.zero(), 0.0, 3.0, sides=(2,), max_size=10)
    assert rep.passed and rep.worst_ratio("tiling") == 0


def test_residual_exact_on_scalars():
    assert residual(const_map(Fraction(1, 3)), Fraction(1, 3), Box([0], [7])) == 0

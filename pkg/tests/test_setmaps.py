import math

import numpy as np
import pytest

from folnerlab.additivity import ErrorMap, counterexample_map
from folnerlab.folner import box_folner, translated_box_folner
from folnerlab.lattice import Box, Window, random_window
from folnerlab.setmaps import (GroupAction, SetMap, asymptotic_seminorm, birkhoff_map, birkhoff_sum,
                               equivariance_check, ergodic_average, lifted_error_map, sup_seminorm)
from folnerlab.shift import CylinderFunction, SampleSet
from folnerlab.values import PwcFunction, ValueSpace


def rot(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def test_birkhoff_examples():
    phi = birkhoff_map(3, GroupAction.trivial(), ValueSpace("scalar"))
    assert phi(Box([2], [9])) == 21
    f = CylinderFunction.coordinate(0)
    ss = SampleSet.bernoulli(0.5, 1, 64)
    S = birkhoff_sum(f, Box([0], [3]), GroupAction.koopman())
    words = ss.symbols([0, 1, 2])
    assert np.array_equal(S.evaluate(ss), words.sum(axis=1))
    R = GroupAction.matrices(np.round(rot(math.pi / 2)))
    assert np.array_equal(birkhoff_sum(np.array([1.0, 0.0]), Box([0], [4]), R), np.zeros(2))
    assert np.array_equal(ergodic_average(np.array([1.0, 0.0]), Box([0], [4]), R), np.zeros(2))


def test_invariant_vector_average_is_itself():
    A = GroupAction.matrices(np.diag([1.0, -1.0]))
    v = np.array([2.0, 0.0])
    for n in (1, 3, 10):
        assert np.array_equal(ergodic_average(v, Box([0], [n]), A), v)


def test_birkhoff_map_exactly_additive():
    rng = np.random.default_rng(0)
    phi = birkhoff_map(PwcFunction.indicator(0, 0.25, 3), GroupAction.trivial(2), ValueSpace("pwc"))
    for _ in range(300):
        W = random_window(rng, 2, int(rng.integers(2, 20)), 4)
        k = int(rng.integers(1, W.size))
        E, F = Window(W.points[:k], 2), Window(W.points[k:], 2)
        assert phi(W) == phi(E) + phi(F)


def test_sup_seminorm_examples():
    fam = [Box.cube(L, 1) for L in range(1, 30)]
    phi = birkhoff_map(-2.5, GroupAction.trivial(), ValueSpace("scalar"))
    assert sup_seminorm(phi, fam) == 2.5
    # the counterexample is clipped at |F| = 1: the sup over boxes is 1
    assert sup_seminorm(counterexample_map(), fam) == 1
    zero = birkhoff_map(0, GroupAction.trivial(), ValueSpace("scalar"))
    assert sup_seminorm(zero, fam) == 0


def test_asymptotic_seminorm_examples():
    b = lifted_error_map(ErrorMap.counterexample_stated())
    rep = asymptotic_seminorm(b, box_folner(1), 1000, schedule=[1, 10, 100, 1000])
    assert rep.values[-1][1] == pytest.approx((1 + 1000 / math.log(1001)) / 1000, rel=1e-12)
    assert [t for _, t in rep.tail_sequence] == sorted([t for _, t in rep.tail_sequence], reverse=True)
    phi = birkhoff_map(4, GroupAction.trivial(), ValueSpace("scalar"))
    rep = asymptotic_seminorm(phi, box_folner(1), 50)
    assert all(v == 4 for _, v in rep.values)
    rep = asymptotic_seminorm(counterexample_map(), box_folner(1), 256, schedule=[2, 16, 256])
    for n, v in rep.values:
        assert v == pytest.approx(1 / math.log1p(n), rel=1e-12)


def test_asymptotic_along_two_sequences_agree():
    phi = counterexample_map()
    a = asymptotic_seminorm(phi, box_folner(1), 512, schedule=[64, 512]).tail_at(512)
    b = asymptotic_seminorm(phi, translated_box_folner(1), 512, schedule=[64, 512]).tail_at(512)
    assert a == b
    assert a <= sup_seminorm(phi, [Box.cube(L, 1) for L in range(1, 20)])


def test_equivariance_examples():
    assert equivariance_check(birkhoff_map(2, GroupAction.trivial(), ValueSpace("scalar")), 50).max_defect == 0
    assert equivariance_check(counterexample_map(), 50).max_defect == 0
    R = GroupAction.matrices(rot(0.3))
    v = np.array([1.0, 2.0])
    assert equivariance_check(birkhoff_map(v, R, ValueSpace("vector", dim=2)), 50).passed
    broken = SetMap(lambda F: float(F.points.min()), GroupAction.trivial(), ValueSpace("scalar"))
    rep = equivariance_check(broken, 50)
    assert not rep.passed and rep.max_defect > 0


def test_koopman_isometry_in_law():
    ss = SampleSet.bernoulli(0.5, 3, 20_000)
    f = CylinderFunction.monomial([(0,), (1,)])
    for g in (1, 7, -40):
        a = ss.norm(f, 1)
        b = ss.norm(f.translate(g), 1)
        assert abs(a - b) <= 3 * 0.5 / math.sqrt(20_000) * 2


def test_group_action_validation():
    with pytest.raises(ValueError):
        GroupAction.matrices(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        GroupAction.matrices(np.array([[1.0, 1.0], [0.0, 1.0]]), np.array([[1.0, 0.0], [1.0, 1.0]]))
    R = GroupAction.matrices(rot(0.7))
    assert R.isometric and R.homomorphism_defect([(1, 2), (-3, 5)]) < 1e-12
    with pytest.raises(ValueError):
        counterexample_map()(Window.empty(1))

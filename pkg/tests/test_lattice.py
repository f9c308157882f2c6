import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from folnerlab.lattice import (Box, Window, boundary_control_params, boundary_size, invariance_defect, is_invariant,
                               k_boundary, k_interior, product_set, random_window, symmetric_difference_size)


# brute-force oracles over python sets ------------------------------------------------

def _pts(W):
    return {tuple(int(c) for c in p) for p in W.points}


def oracle_product(K, F):
    return {tuple(a + b for a, b in zip(k, f)) for k in K for f in F}


def oracle_interior(K, F):
    cand = {tuple(f - k for f, k in zip(fp, kp)) for fp in F for kp in K}
    return {g for g in cand if all(tuple(a + b for a, b in zip(k, g)) in F for k in K)}


def oracle_boundary(K, F):
    out = set()
    for g in {tuple(f - k for f, k in zip(fp, kp)) for fp in F for kp in K}:
        hits = [tuple(a + b for a, b in zip(k, g)) in F for k in K]
        if any(hits) and not all(hits):
            out.add(g)
    return out


def W(*pts):
    return Window.from_points(pts)


# worked examples ----------------------------------------------------------------------

def test_product_set_examples():
    assert product_set(W(0), Box([0], [10])) == Box([0], [10])
    assert product_set(W(0, 1), Box([0], [10])).size == 11
    KF = product_set(Window.from_points([(0, 0), (1, 0)]), Box([0, 0], [2, 2]))
    assert _pts(KF) == {(x, y) for x in range(3) for y in range(2)}


def test_invariance_defect_examples():
    assert invariance_defect(W(0), Box([3], [17])) == 0
    assert invariance_defect(W(0, 1), Box([0], [10])) == pytest.approx(1 / 10, abs=0)
    assert invariance_defect(W(-1, 0, 1), Box([0], [8])) == 2 / 8


def test_interior_and_boundary_examples():
    F = Box([0], [10])
    assert k_interior(W(0), F) == F
    assert k_interior(W(0, 1), F).size == 9
    assert _pts(k_interior(W(-1, 0, 1), Box([0], [3]))) == {(1,)}
    assert k_boundary(W(0), F).is_empty()
    assert _pts(k_boundary(W(0, 1), F)) == {(-1,), (9,)}
    K = Box([0, 0], [2, 2])
    F2 = Box([0, 0], [4, 4])
    assert _pts(k_boundary(K, F2)) == oracle_boundary(_pts(K), _pts(F2))
    assert boundary_size(K, F2) == 25 - 9


def test_boundary_control_examples():
    p = boundary_control_params(W(0, 1), 0.5)
    assert _pts(p.K) == {(-1,), (0,), (1,)} and p.delta == 0.125
    p = boundary_control_params(W(0), 1.0)
    assert _pts(p.K) == {(0,)} and p.delta == 0.5
    p = boundary_control_params(Window.from_points([(1, 0)]), 0.3)
    assert _pts(p.K) == {(-1, 0), (0, 0), (1, 0)} and p.delta == pytest.approx(0.075)
    with pytest.raises(ValueError):
        boundary_control_params(W(0), 0.0)


def test_window_json_round_trip():
    F = Window.from_points([(0, 0), (0, 1), (3, -2)])
    assert Window.from_json(F.to_json()) == F
    assert Window.from_json("[[0,0],[0,1]]").size == 2


def test_box_closed_forms_match_points():
    rng = np.random.default_rng(1)
    for _ in range(50):
        d = int(rng.integers(1, 3))
        lo = rng.integers(-5, 5, size=d)
        F = Box(lo, lo + rng.integers(1, 6, size=d))
        klo = rng.integers(-2, 2, size=d)
        K = Box(klo, klo + rng.integers(1, 4, size=d))
        Kw, Fw = Window(K.points, d), Window(F.points, d)
        assert _pts(product_set(K, F)) == _pts(product_set(Kw, Fw))
        assert _pts(k_interior(K, F)) == _pts(k_interior(Kw, Fw))
        assert boundary_size(K, F) == k_boundary(Kw, Fw).size
        assert symmetric_difference_size(K, F) == symmetric_difference_size(Kw, Fw)


# oracle equivalence on random windows -------------------------------------------------

windows = st.integers(1, 2).flatmap(lambda d: st.tuples(
    st.just(d),
    st.lists(st.tuples(*[st.integers(-6, 6)] * d), min_size=1, max_size=8, unique=True),
    st.lists(st.tuples(*[st.integers(-8, 8)] * d), min_size=1, max_size=40, unique=True),
))


@settings(max_examples=200, deadline=None)
@given(windows)
def test_geometry_matches_oracle(case):
    d, kp, fp = case
    K, F = Window(np.array(kp), d), Window(np.array(fp), d)
    Ks, Fs = set(kp), set(fp)
    assert _pts(product_set(K, F)) == oracle_product(Ks, Fs)
    assert _pts(k_interior(K, F)) == oracle_interior(Ks, Fs)
    assert _pts(k_boundary(K, F)) == oracle_boundary(Ks, Fs)


@settings(max_examples=100, deadline=None)
@given(windows)
def test_symmetric_kernel_splits_product_set(case):
    d, kp, fp = case
    K0 = Window(np.array(kp), d)
    K = Window(np.concatenate([K0.points, -K0.points, np.zeros((1, d), dtype=np.int64)]), d)
    F = Window(np.array(fp), d)
    inner, bd = _pts(k_interior(K, F)), _pts(k_boundary(K, F))
    assert not inner & bd
    assert inner | bd == _pts(product_set(K, F))


@settings(max_examples=100, deadline=None)
@given(windows, st.tuples(st.integers(-50, 50), st.integers(-50, 50)))
def test_defect_translation_invariant(case, g):
    d, kp, fp = case
    K, F = Window(np.array(kp), d), Window(np.array(fp), d)
    assert invariance_defect(K, F) == invariance_defect(K, F.translate(g[:d]))


def test_boundary_control_random_triples():
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(300):
        d = int(rng.integers(1, 3))
        K0 = random_window(rng, d, int(rng.integers(1, 4)), 2)
        p = boundary_control_params(K0, float(rng.uniform(0.2, 1.0)))
        F = Box.cube(int(rng.integers(1, 60 if d == 1 else 20)), d, rng.integers(-9, 9, size=d))
        if p.admits(F):
            checked += 1
            assert k_boundary(K0, F).size <= p.delta * (1 + p.K.size) * F.size
    assert checked > 0


def test_is_invariant_threshold_is_exact():
    F = Box([0], [10])
    assert is_invariant(W(0, 1), 0.1, F)
    assert not is_invariant(W(0, 1), 0.0999, F)


def test_random_window_has_requested_size():
    rng = np.random.default_rng(0)
    for size in (1, 5, 50):
        assert random_window(rng, 2, size).size == size


def test_empty_results_are_legal():
    assert k_interior(Box([0], [5]), Box([0], [2])).is_empty()
    assert k_boundary(W(0), W(3)).is_empty()
    with pytest.raises(ValueError):
        invariance_defect(W(0), Window.empty(1))


def test_small_exhaustive_interior_1d():
    for L in range(1, 8):
        F = Box([0], [L])
        for pts in itertools.combinations(range(-2, 3), 2):
            K = Window.from_points([(p,) for p in pts])
            assert _pts(k_interior(K, F)) == oracle_interior(_pts(K), _pts(F))

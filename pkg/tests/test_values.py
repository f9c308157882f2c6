import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from folnerlab.values import (OrderUndefinedError, PwcFunction, ValueSpace, integral, lattice_abs, lattice_join,
                              lattice_le, lattice_meet, lp_norm, max_excess)

F = Fraction


def rand_pwc(rng, exact=True, pieces=None):
    k = int(rng.integers(1, 7)) if pieces is None else pieces
    cuts = sorted({F(int(x), 64) for x in rng.integers(1, 64, size=k - 1)})
    bps = [F(0)] + cuts + [F(1)]
    if exact:
        lv = [F(int(a), int(b)) for a, b in zip(rng.integers(-20, 21, size=len(bps) - 1),
                                                 rng.integers(1, 7, size=len(bps) - 1))]
    else:
        lv = list(rng.normal(size=len(bps) - 1))
    return PwcFunction(bps, lv)


def test_join_example():
    u = PwcFunction.indicator(0, F(1, 2))
    v = PwcFunction.indicator(F(1, 4), F(3, 4))
    assert lattice_join(u, v) == PwcFunction.indicator(0, F(3, 4))
    assert abs(PwcFunction.constant(-2)) == PwcFunction.constant(2)
    assert lattice_meet(u, v) == PwcFunction.indicator(F(1, 4), F(1, 2))


def test_norm_examples():
    assert lp_norm(PwcFunction.indicator(0, F(1, 2)), 1) == F(1, 2)
    n = 3
    f = PwcFunction.indicator(0, 1 / (n * math.log1p(n)), n * n)
    assert lp_norm(f, 1) == pytest.approx(n / math.log1p(n), rel=1e-15)
    assert lp_norm(PwcFunction([0, F(1, 2), 1], [3, -5]), math.inf) == 5
    assert lp_norm(PwcFunction.constant(2), 2) == pytest.approx(2.0)
    assert integral(PwcFunction([0, F(1, 4), 1], [4, -1])) == F(1, 4)


def test_canonical_form_merges_pieces():
    f = PwcFunction([0, F(1, 3), F(1, 3), F(1, 2), 1], [1, 7, 1, 1])
    assert f.breakpoints == (0, 1) and f.levels == (1,)


def test_lattice_identities_exact():
    rng = np.random.default_rng(0)
    for _ in range(500):
        u, v = rand_pwc(rng), rand_pwc(rng)
        assert lattice_join(u, v) * 2 == u + v + abs(u - v)
        au, av = abs(u), abs(v)
        assert lattice_le(abs(au - av), abs(u + v)) and lattice_le(abs(u + v), au + av)
        zero = PwcFunction.zero()
        assert lattice_le(zero, abs(lattice_join(u, v)))
        assert lattice_le(abs(lattice_join(u, v)), lattice_join(au, av))
        assert lattice_le(lattice_join(au, av), au + av)
        assert (u + v) - v == u
        assert lp_norm(abs(u), 1) == lp_norm(u, 1)


def test_lattice_identities_float():
    rng = np.random.default_rng(1)
    for _ in range(200):
        u, v = rand_pwc(rng, exact=False), rand_pwc(rng, exact=False)
        d = lattice_join(u, v) * 2 - (u + v + abs(u - v))
        assert lp_norm(d, math.inf) <= 1e-12


def test_riesz_seminorm_monotone():
    rng = np.random.default_rng(2)
    for _ in range(500):
        v = rand_pwc(rng)
        # |u| <= |v| by construction: shrink v by a factor in [0, 1] piecewise
        w = rand_pwc(rng)
        scale = PwcFunction(w.breakpoints, [F(int(abs(x) * 10) % 11, 10) for x in w.levels])
        u = PwcFunction.zero()
        for lo, hi, s in scale.pieces():
            u = u + _restrict(v, lo, hi) * s
        assert lattice_le(abs(u), abs(v))
        for p in (1, 2, math.inf):
            assert lp_norm(u, p) <= lp_norm(v, p) + 1e-15


def _restrict(f, lo, hi):
    ind = PwcFunction.indicator(lo, hi) if hi < 1 else PwcFunction([0, lo, 1], [0, 1]) if lo > 0 else PwcFunction.constant(1)
    out = []
    g = f._combine(ind, lambda a, b: a * b)
    return g


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-10, 10), min_size=1, max_size=6))
def test_serialisation_round_trip(levels):
    bps = [F(i, len(levels)) for i in range(len(levels) + 1)]
    f = PwcFunction(bps, [F(x, 3) for x in levels])
    assert PwcFunction.from_json(f.to_json()) == f


def test_order_undefined_on_vectors():
    with pytest.raises(OrderUndefinedError):
        lattice_join(np.ones(2), np.zeros(2))
    with pytest.raises(OrderUndefinedError):
        lattice_abs(np.ones(2))


def test_scalar_lattice_and_spaces():
    assert lattice_join(F(1, 2), 1) == 1 and lattice_meet(-1, 3) == -1
    assert ValueSpace("vector", dim=3).norm(np.array([1.0, -4.0, 2.0])) == 7.0
    assert ValueSpace("vector", dim=3, p=math.inf).norm(np.array([1.0, -4.0, 2.0])) == 4.0
    with pytest.raises(ValueError):
        ValueSpace("sampled")
    assert max_excess(PwcFunction.constant(1), PwcFunction.constant(2)) == 0

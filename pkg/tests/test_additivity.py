import math
from fractions import Fraction

import pytest

from folnerlab.additivity import (CombinedPartitions, ErrorMap, GridPartitions, IntervalCompositions, LevelCache,
                                  PartitionError, RieszErrorMap, SingletonPartitions, TilingPartitions,
                                  boundary_term_check, certify_almost_additive, certify_riesz_almost_additive,
                                  certify_riesz_family, check_partition, counterexample_map,
                                  counterexample_unclipped_l1, divergence_partial_sum, is_chain_monotone,
                                  minimal_singleton_budget, regularize_error_map, riesz_budget_family)
from folnerlab.folner import CofinalScale, invariance_level
from folnerlab.lattice import Box
from folnerlab.setmaps import GroupAction, birkhoff_map
from folnerlab.values import PwcFunction, ValueSpace


def boxes(Lmax, d=1):
    return [Box.cube(L, d) for L in range(1, Lmax + 1)]


def test_counterexample_two_halves_example():
    phi = counterexample_map()
    F = Box([0], [4])
    pieces = [Box([0], [2]), Box([2], [4])]
    lhs = (phi(F) - phi(pieces[0]) - phi(pieces[1])).lp_norm(1)
    b_half = 1 / (2 * math.log(3))
    assert lhs == pytest.approx(8 * b_half, rel=1e-14)
    assert lhs == pytest.approx(3.641, abs=5e-4)
    b = ErrorMap.counterexample_stated()
    assert b(pieces[0]) + b(pieces[1]) == pytest.approx(5.641, abs=5e-4)


def test_counterexample_norms():
    phi = counterexample_map()
    assert phi(Box([0], [1])).lp_norm(1) == 1  # clipped to [0, 1]
    for n in (2, 3, 10, 100):
        assert phi(Box([0], [n])).lp_norm(1) == pytest.approx(counterexample_unclipped_l1(n), rel=1e-13)


def test_birkhoff_map_certifies_with_zero_error():
    phi = birkhoff_map(PwcFunction.indicator(0, 0.5, 3), GroupAction.trivial(), ValueSpace("pwc"))
    rep = certify_almost_additive(phi, ErrorMap.zero(), CombinedPartitions(GridPartitions(), IntervalCompositions(8)),
                                  boxes(20))
    assert rep.passed and rep.partitions > 100 and rep.max_violation == 0


def test_negative_budget_fails():
    phi = birkhoff_map(1, GroupAction.trivial(), ValueSpace("scalar"))
    rep = certify_almost_additive(phi, ErrorMap.constant(-1), GridPartitions(), boxes(8))
    assert not rep.passed and rep.witness is not None


def test_valid_counterexample_budget_passes_and_stated_budget_fails():
    phi = counterexample_map()
    gen = CombinedPartitions(GridPartitions(), IntervalCompositions(12))
    ok = certify_almost_additive(phi, ErrorMap.counterexample_valid(), gen, boxes(64))
    assert ok.passed, ok.summary()
    bad = certify_almost_additive(phi, ErrorMap.counterexample_stated(), GridPartitions(), boxes(40))
    assert not bad.passed
    F, pid, pieces = bad.witness
    assert F.size >= 27


def test_check_partition_rejects_bad_partitions():
    F = Box([0], [6])
    check_partition(F, [Box([0], [2]), Box([2], [6])])
    with pytest.raises(PartitionError):
        check_partition(F, [Box([0], [3]), Box([2], [6])])
    with pytest.raises(PartitionError):
        check_partition(F, [Box([0], [2]), Box([3], [6])])
    with pytest.raises(PartitionError):
        check_partition(F, [])


def test_generated_partitions_are_partitions():
    gen = CombinedPartitions(GridPartitions(all_offsets=True), TilingPartitions(3), SingletonPartitions(),
                             IntervalCompositions(8))
    for F in boxes(9) + boxes(5, 2):
        for _, pieces in gen(F):
            check_partition(F, pieces)


def test_grid_partitions_are_chain_monotone():
    levels = LevelCache(CofinalScale(1))
    for F in boxes(64):
        for _, pieces in CombinedPartitions(GridPartitions(), SingletonPartitions())(F):
            assert is_chain_monotone(F, pieces, levels)


# regularisation ------------------------------------------------------------------------

def oracle_regularized(b, family, scale, F):
    n = invariance_level(F, scale)
    def ratio(E):
        v = abs(b(E))
        return Fraction(v, E.size) if isinstance(v, int) else v / E.size
    return F.size * max(ratio(E) for E in family if invariance_level(E, scale) >= n)


def test_regularize_sqrt_example():
    fam = boxes(64)
    bp = regularize_error_map(ErrorMap.sqrt_size(1.0), CofinalScale(1), fam)
    assert bp.r_at(2) == pytest.approx(1 / (2 * math.sqrt(2)), rel=1e-15)
    assert bp(Box([0], [8])) == pytest.approx(2 * math.sqrt(2), rel=1e-15)


def test_regularize_constant_closed_form():
    c = 3
    fam = boxes(64)
    s = CofinalScale(1)
    bp = regularize_error_map(ErrorMap.constant(c), s, fam)
    for F in fam:
        n = invariance_level(F, s)
        expect = c if n == 0 else F.size * c / (2 * n * n)
        assert bp(F) == pytest.approx(expect, rel=1e-15)


def test_regularize_matches_oracle_and_is_subadditive():
    for d, fam in ((1, boxes(64)), (2, boxes(16, 2))):
        s = CofinalScale(d)
        for b in (ErrorMap.sqrt_size(), ErrorMap.counterexample_valid(), ErrorMap.constant(2)):
            bp = regularize_error_map(b, s, fam)
            levels = LevelCache(s)
            for F in fam:
                assert bp(F) == oracle_regularized(b, fam, s, F)
                assert abs(b(F)) <= bp(F)
                for _, pieces in GridPartitions()(F):
                    if is_chain_monotone(F, pieces, levels):
                        assert bp(F) <= sum(bp(E) for E in pieces) * (1 + 1e-12)


def test_regularized_rates_non_increasing():
    bp = regularize_error_map(ErrorMap.sqrt_size(), CofinalScale(1), boxes(64))
    assert all(a >= b for a, b in zip(bp.r, bp.r[1:]))


# boundary terms ------------------------------------------------------------------------

def test_boundary_term_classification():
    K = Box([-1], [2])
    assert boundary_term_check(ErrorMap.boundary_count(K), 200).classification == "boundary-term"
    assert boundary_term_check(ErrorMap.sqrt_size(), 200).classification in ("boundary-term", "null-density")
    assert boundary_term_check(ErrorMap.constant(-1), 50).classification == "invalid"
    assert not boundary_term_check(ErrorMap(lambda F: F.size, "|F|"), 50).decay


# Riesz certification -------------------------------------------------------------------

def test_riesz_passes_for_birkhoff_map():
    phi = birkhoff_map(PwcFunction.indicator(0, 0.5, 2), GroupAction.trivial(), ValueSpace("pwc"))
    xi = RieszErrorMap.per_point(PwcFunction.zero())
    assert certify_riesz_almost_additive(phi, xi, SingletonPartitions(), boxes(20)).passed


def test_counterexample_fails_every_riesz_budget():
    phi = counterexample_map()
    fam = riesz_budget_family(10.0, 2000)
    assert all(xi.l1_at_point() <= 10.0 + 1e-9 for xi in fam)
    sizes = [Box([0], [2 ** k]) for k in range(1, 12)] + [Box([0], [4000])]
    for xi, rep in certify_riesz_family(phi, fam, SingletonPartitions(), sizes):
        assert not rep.passed, xi.name
    assert divergence_partial_sum(2000) >= 0.9


def test_minimal_singleton_budget_grows():
    norms = [minimal_singleton_budget(N).lp_norm(1) for N in (4, 16, 64, 256)]
    assert norms == sorted(norms) and norms[-1] > norms[0]

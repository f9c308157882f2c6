"""Certifiers for almost additivity and Riesz-almost additivity.

A certification run walks a family of windows F, asks a partition generator
for partitions P of each F, and compares ``‖φ(F) − Σ_{E∈P} φ(E)‖`` with the
budget ``Σ_{E∈P} b(E)``. Partitions are first checked to be genuine
partitions (hard error otherwise) and then filtered by the chain-relative
monotone-invariance rule ``max_E n(E) <= n(F)`` on the canonical scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Iterator, Sequence

import numpy as np

from ._parallel import ordered_map
from .folner import DEFAULT_LEVEL_CAP, BoxTiling, CofinalScale, invariance_level, window_partition_by_tiling
from .lattice import Box, Window, boundary_size, random_window
from .setmaps import GroupAction, SetMap, birkhoff_sum
from .shift import ShiftFunction
from .values import OrderUndefinedError, PwcFunction, ValueSpace

FLOAT_SLACK = 1e-9


class PartitionError(ValueError):
    """A generator produced something that is not a partition of F."""


def shape_key(F: Window):
    """Translation-class key of a window."""
    if isinstance(F, Box):
        return ("box", F.shape)
    return ("pts", F.dim, (F.points - F.points[0]).tobytes())


def _normalise(F: Window) -> Window:
    if isinstance(F, Box):
        return Box([0] * F.dim, F.shape)
    return F.translate(-F.points[0])


def _exact(x) -> bool:
    return isinstance(x, (int, Fraction))


def _ratio(a, n: int):
    return Fraction(a, n) if isinstance(a, int) else (a / n if isinstance(a, Fraction) else float(a) / n)


# error maps --------------------------------------------------------------------

class ErrorMap:
    """A shape-invariant real function of windows.

    The rule is evaluated on the translate of F normalised to the origin,
    so ``b(F + g) = b(F)`` holds by construction.
    """

    def __init__(self, rule: Callable[[Window], Any], name: str = "b", nonneg: bool = True):
        self._rule = rule
        self.name = name
        self.nonneg = nonneg
        self._cache: dict = {}

    def __call__(self, F: Window):
        key = shape_key(F)
        if key not in self._cache:
            self._cache[key] = self._rule(_normalise(F))
        return self._cache[key]

    def __repr__(self) -> str:
        return f"ErrorMap({self.name})"

    def sup_density(self, family: Iterable[Window]):
        """``max_F |b(F)|/|F|`` over the family."""
        return max(_ratio(abs(self(F)), F.size) for F in family)

    def scaled(self, c) -> "ErrorMap":
        return ErrorMap(lambda F: c * self(F), f"{c}*{self.name}", self.nonneg and c >= 0)

    @classmethod
    def zero(cls) -> "ErrorMap":
        return cls(lambda F: 0, "zero")

    @classmethod
    def constant(cls, c) -> "ErrorMap":
        return cls(lambda F: c, f"const({c})", c >= 0)

    @classmethod
    def sqrt_size(cls, c=1.0) -> "ErrorMap":
        return cls(lambda F: c * math.sqrt(F.size), f"{c}*sqrt|F|")

    @classmethod
    def counterexample_stated(cls) -> "ErrorMap":
        """``1 + |F| / log(1 + |F|)``."""
        return cls(lambda F: 1 + F.size / math.log1p(F.size), "1+|F|/log(1+|F|)")

    @classmethod
    def counterexample_valid(cls) -> "ErrorMap":
        """``2 |F| / log(1 + |F|)``, a bound that provably holds for the counterexample."""
        return cls(lambda F: 2 * F.size / math.log1p(F.size), "2|F|/log(1+|F|)")

    @classmethod
    def boundary_count(cls, K: Window) -> "ErrorMap":
        return cls(lambda F: boundary_size(K, F), "|bd_K(F)|")


class RieszErrorMap(ErrorMap):
    """Shape-invariant map into an ordered value space (scalar or pwc)."""

    @classmethod
    def constant_type(cls, b: ErrorMap) -> "RieszErrorMap":
        """``ξ(F) = b(F) · 1``, stored as the scalar b(F)."""
        return cls(lambda F: b(F), f"{b.name}*1")

    @classmethod
    def per_point(cls, h: PwcFunction, name: str = "|F|h") -> "RieszErrorMap":
        """``ξ(F) = |F| · h``."""
        return cls(lambda F: h * F.size, name)

    def l1_at_point(self, dim: int = 1):
        return self(Box([0] * dim, [1] * dim)).lp_norm(1)


# partition generators ------------------------------------------------------------

Partition = list  # list[Window]


class PartitionGenerator:
    name = "generator"

    def __call__(self, F: Window) -> Iterator[tuple[str, Partition]]:
        raise NotImplementedError


class GridPartitions(PartitionGenerator):
    """Sub-box grids of a box anchored at its low corner: congruent blocks plus fragments.

    ``sides`` lists cube sides s (default: every 1 <= s < max side); with
    ``all_offsets`` the grid is also shifted by every t in [0, s)^d.
    """

    name = "grid"

    def __init__(self, sides: Sequence[int] | None = None, all_offsets: bool = False):
        self.sides = sides
        self.all_offsets = all_offsets

    def __call__(self, F):
        if not isinstance(F, Box):
            return
        sides = self.sides or range(1, max(F.shape))
        for s in sides:
            if s < 1:
                continue
            tiling = BoxTiling(s, F.dim)
            offsets = [tuple(F.lo)]
            if self.all_offsets and s > 1:
                axes = [range(s)] * F.dim
                offsets = [tuple(np.add(F.lo, t)) for t in np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, F.dim)]
            for t in offsets:
                part = window_partition_by_tiling(F, tiling, t)
                if len(part) > 1:
                    yield f"grid:s={s}:t={list(map(int, np.subtract(t, F.lo)))}", part.pieces


class TilingPartitions(PartitionGenerator):
    """The tiling partitions ``P_t`` for every offset t in [0, m)^d."""

    name = "tiling"

    def __init__(self, m: int):
        self.m = m

    def __call__(self, F):
        tiling = BoxTiling(self.m, F.dim)
        axes = [range(self.m)] * F.dim
        for t in np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, F.dim):
            part = window_partition_by_tiling(F, tiling, t)
            yield f"tiling:m={self.m}:t={t.tolist()}", part.pieces


class SingletonPartitions(PartitionGenerator):
    name = "singleton"

    def __call__(self, F):
        if F.size > 1:
            yield "singletons", [Box(p, np.add(p, 1)) for p in F.points]


class IntervalCompositions(PartitionGenerator):
    """Every partition of a 1-d interval into consecutive intervals (|F| <= max_size)."""

    name = "compositions"

    def __init__(self, max_size: int = 12):
        self.max_size = max_size

    def __call__(self, F):
        if not isinstance(F, Box) or F.dim != 1 or F.size > self.max_size:
            return
        n, a = F.size, F.lo[0]
        for mask in range(1, 1 << (n - 1)):
            cuts = [i + 1 for i in range(n - 1) if mask >> i & 1]
            edges = [0] + cuts + [n]
            yield f"comp:{cuts}", [Box([a + x], [a + y]) for x, y in zip(edges, edges[1:])]


class CombinedPartitions(PartitionGenerator):
    name = "combined"

    def __init__(self, *gens: PartitionGenerator):
        self.gens = gens

    def __call__(self, F):
        for g in self.gens:
            yield from g(F)


def check_partition(F: Window, pieces: Sequence[Window]) -> None:
    """Raise PartitionError unless the pieces are disjoint, nonempty and cover F."""
    if not pieces or any(E.is_empty() for E in pieces):
        raise PartitionError("partition has an empty piece")
    if sum(E.size for E in pieces) != F.size:
        raise PartitionError("piece sizes do not add up to |F|")
    if isinstance(F, Box) and all(isinstance(E, Box) for E in pieces):
        # paint every piece on an occupancy grid of F
        grid = np.zeros(F.shape, dtype=np.int32)
        for E in pieces:
            if any(el < fl or eh > fh for fl, fh, el, eh in zip(F.lo, F.hi, E.lo, E.hi)):
                raise PartitionError("piece leaves F")
            grid[tuple(slice(el - fl, eh - fl) for fl, el, eh in zip(F.lo, E.lo, E.hi))] += 1
        if grid.max() != 1 or grid.min() != 1:
            raise PartitionError("pieces overlap or leave gaps")
        return
    pts = np.concatenate([E.points for E in pieces])
    if np.unique(pts, axis=0).shape[0] != F.size:
        raise PartitionError("pieces overlap")
    if not Window(pts, F.dim) == Window(F.points, F.dim):
        raise PartitionError("pieces do not cover F")


class LevelCache:
    """Memoised invariance levels by shape."""

    def __init__(self, scale: CofinalScale, n_cap: int = DEFAULT_LEVEL_CAP):
        self.scale = scale
        self.n_cap = n_cap
        self._cache: dict = {}

    def __call__(self, F: Window) -> int:
        key = shape_key(F)
        if key not in self._cache:
            self._cache[key] = invariance_level(F, self.scale, self.n_cap)
        return self._cache[key]


def is_chain_monotone(F: Window, pieces: Sequence[Window], levels: LevelCache) -> bool:
    top = levels(F)
    return all(levels(E) <= top for E in pieces)


# certification -------------------------------------------------------------------

@dataclass
class CertificationRow:
    size: int
    partition_id: str
    lhs: float
    budget: float
    margin: float


@dataclass
class CertificationReport:
    windows: int = 0
    partitions: int = 0
    skipped: int = 0
    max_violation: Any = -math.inf
    witness: tuple | None = None
    rows: list = field(default_factory=list)
    exact: bool = True
    slack: float = 0.0

    @property
    def passed(self) -> bool:
        if self.partitions == 0:
            return True
        return self.max_violation <= self.slack

    def merge(self, other: "CertificationReport") -> "CertificationReport":
        out = CertificationReport(self.windows + other.windows, self.partitions + other.partitions,
                                  self.skipped + other.skipped, self.max_violation, self.witness,
                                  self.rows + other.rows, self.exact and other.exact)
        if other.max_violation > self.max_violation:
            out.max_violation, out.witness = other.max_violation, other.witness
        out.slack = 0.0 if out.exact else FLOAT_SLACK
        return out

    def summary(self) -> str:
        state = "pass" if self.passed else "FAIL"
        return (f"{state}: windows={self.windows} partitions={self.partitions} skipped={self.skipped} "
                f"max_violation={float(self.max_violation):.6g}")


class _ShapeMemo:
    """For trivial actions φ(E) depends only on the shape of E."""

    def __init__(self, fn: Callable, trivial: bool):
        self.fn = fn
        self.trivial = trivial
        self._cache: dict = {}

    def __call__(self, E):
        if not self.trivial:
            return self.fn(E)
        key = shape_key(E)
        if key not in self._cache:
            self._cache[key] = self.fn(E)
        return self._cache[key]


def _grouped_sum(pieces, value_fn, trivial: bool):
    """Σ value(E); pieces of equal shape are summed by multiplication when allowed."""
    if trivial:
        groups: dict = {}
        for E in pieces:
            key = shape_key(E)
            if key in groups:
                groups[key][1] += 1
            else:
                groups[key] = [E, 1]
        terms = ((value_fn(E), count) for E, count in groups.values())
    else:
        terms = ((value_fn(E), 1) for E in pieces)
    total = None
    for v, count in terms:
        v = v * count if count > 1 else v
        total = v if total is None else total + v
    return total


def _is_exact_value(x) -> bool:
    if isinstance(x, PwcFunction):
        return x.is_exact
    return _exact(x)


def _certify_window(F, phi: SetMap, budget_fn, gen, levels, mode, memo, bmemo, keep_rows):
    rep = CertificationReport(windows=1)
    trivial = phi.action.kind == "trivial"
    space = phi.space
    phiF = phi(F)
    for pid, pieces in gen(F):
        check_partition(F, pieces)
        if not is_chain_monotone(F, pieces, levels):
            rep.skipped += 1
            continue
        rep.partitions += 1
        diff = phiF - _grouped_sum(pieces, memo, trivial)
        budget = _grouped_sum(pieces, bmemo, True)
        if mode == "norm":
            lhs = space.norm(diff)
            violation = lhs - budget
            exact = _exact(lhs) and _exact(budget)
        else:
            lhs, violation = _riesz_excess(space, diff, budget)
            exact = _is_exact_value(diff) and _is_exact_value(budget)
        rep.exact = rep.exact and exact
        if violation > rep.max_violation:
            rep.max_violation = violation
            rep.witness = (F, pid, pieces)
        if keep_rows:
            b_val = budget if mode == "norm" else _budget_norm(space, budget)
            rep.rows.append(CertificationRow(F.size, pid, float(lhs), float(b_val), float(-violation)))
    rep.slack = 0.0 if rep.exact else FLOAT_SLACK
    return rep


def _budget_norm(space, budget):
    if isinstance(budget, PwcFunction):
        return budget.lp_norm(1)
    return budget if not isinstance(budget, ShiftFunction) else space.norm(budget)


def _riesz_excess(space: ValueSpace, diff, budget):
    """Return (‖|diff|‖, ess sup(|diff| − budget))."""
    if space.kind == "pwc":
        absd = abs(diff)
        bud = budget if isinstance(budget, PwcFunction) else PwcFunction.constant(budget)
        return absd.lp_norm(1), max((absd - bud).levels)
    if space.kind == "scalar":
        return abs(diff), abs(diff) - budget
    if space.kind == "sampled":
        d = np.abs(diff.evaluate(space.sampler))
        b = budget.evaluate(space.sampler) if isinstance(budget, ShiftFunction) else float(budget)
        return float(d.max()), float(np.max(d - b))
    raise OrderUndefinedError(f"value space {space.kind!r} carries no lattice order")


def _run(phi, budget_map, gen, family, scale, n_cap, mode, keep_rows, threads, early_stop):
    scale = scale or CofinalScale(phi.dim)
    levels = LevelCache(scale, n_cap)
    memo = _ShapeMemo(phi, phi.action.kind == "trivial")
    bmemo = budget_map
    report = CertificationReport()
    report.slack = 0.0
    family = list(family)
    if early_stop:
        for F in family:
            report = report.merge(_certify_window(F, phi, budget_map, gen, levels, mode, memo, bmemo, keep_rows))
            if not report.passed:
                break
        return report
    parts = ordered_map(lambda F: _certify_window(F, phi, budget_map, gen, levels, mode, memo, bmemo, keep_rows),
                        family, threads)
    for p in parts:
        report = report.merge(p)
    return report


def certify_almost_additive(phi: SetMap, b: ErrorMap, gen: PartitionGenerator, family: Iterable[Window],
                            scale: CofinalScale | None = None, n_cap: int = DEFAULT_LEVEL_CAP,
                            keep_rows: bool = True, threads: int | None = None,
                            early_stop: bool = False) -> CertificationReport:
    """Check ``‖φ(F) − Σ φ(E)‖ <= Σ b(E)`` over every generated partition of every F."""
    return _run(phi, b, gen, family, scale, n_cap, "norm", keep_rows, threads, early_stop)


def certify_riesz_almost_additive(phi: SetMap, xi: ErrorMap, gen: PartitionGenerator, family: Iterable[Window],
                                  scale: CofinalScale | None = None, n_cap: int = DEFAULT_LEVEL_CAP,
                                  keep_rows: bool = True, threads: int | None = None,
                                  early_stop: bool = False) -> CertificationReport:
    """Check ``|φ(F) − Σ φ(E)| ≪ Σ ξ(E)`` pointwise over every generated partition."""
    if phi.space.kind not in ("scalar", "pwc", "sampled"):
        raise OrderUndefinedError(f"value space {phi.space.kind!r} carries no lattice order")
    return _run(phi, xi, gen, family, scale, n_cap, "riesz", keep_rows, threads, early_stop)


def certify_riesz_family(phi: SetMap, xis: Sequence[ErrorMap], gen: PartitionGenerator,
                        family: Iterable[Window], scale: CofinalScale | None = None,
                        threads: int | None = None) -> list[tuple[ErrorMap, CertificationReport]]:
    """Riesz certification of φ against each candidate ξ; one report per candidate."""
    family = list(family)
    return [(xi, certify_riesz_almost_additive(phi, xi, gen, family, scale, keep_rows=True, threads=threads))
            for xi in xis]


# regularisation ------------------------------------------------------------------

class RegularizedErrorMap(ErrorMap):
    """``b′(F) = |F| · r(n(F))`` with ``r(n) = sup{|b(E)|/|E| : E in family, n(E) >= n}``."""

    def __init__(self, r: list, levels: LevelCache, source: ErrorMap, family_levels: dict):
        self.r = r
        self.levels = levels
        self.source = source
        self.family_levels = family_levels
        super().__init__(self._value, f"reg({source.name})")

    def r_at(self, n: int):
        return self.r[min(n, len(self.r) - 1)]

    def _value(self, F: Window):
        r = self.r_at(self.levels(F))
        return r * F.size if _exact(r) else float(r) * F.size


def regularize_error_map(b: ErrorMap, scale: CofinalScale, family: Iterable[Window],
                         n_cap: int = DEFAULT_LEVEL_CAP) -> RegularizedErrorMap:
    """Monotone regularisation of b over a declared box family.

    ``r(n)`` is a sup over shrinking subfamilies, hence non-increasing; beyond
    the highest level present in the family it is held at its last value.
    """
    if n_cap < 1:
        raise ValueError("n_cap must be at least 1")
    levels = LevelCache(scale, n_cap)
    family = list(family)
    lv = {shape_key(F): levels(F) for F in family}
    best_at = [None] * (n_cap + 1)
    for F in family:
        n = lv[shape_key(F)]
        val = _ratio(abs(b(F)), F.size)
        if best_at[n] is None or val > best_at[n]:
            best_at[n] = val
    top = max(n for n in range(n_cap + 1) if best_at[n] is not None)
    r = [0] * (top + 1)
    running = None
    for n in range(top, -1, -1):
        if best_at[n] is not None and (running is None or best_at[n] > running):
            running = best_at[n]
        r[n] = running
    return RegularizedErrorMap(r, levels, b, lv)


# Pogorzelski-type boundary term checks ---------------------------------------------

@dataclass
class BoundaryTermReport:
    nonneg: bool
    intersection: bool
    union: bool
    difference: bool
    invariance: bool
    decay: bool
    worst: dict
    classification: str


def boundary_term_check(b: ErrorMap, trials: int, seed: int = 0, dim: int = 1, max_size: int = 24,
                        decay_threshold: float = 0.2) -> BoundaryTermReport:
    """Test the boundary-term clauses on random window pairs and decay along boxes."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    worst = {k: -math.inf for k in ("nonneg", "intersection", "union", "difference", "invariance")}
    for _ in range(trials):
        E = random_window(rng, dim, int(rng.integers(1, max_size)), max_size)
        F = random_window(rng, dim, int(rng.integers(1, max_size)), max_size)
        bE, bF = b(E), b(F)
        worst["nonneg"] = max(worst["nonneg"], -min(bE, bF))
        both = bE + bF
        I = E.intersection(F)
        if not I.is_empty():
            worst["intersection"] = max(worst["intersection"], b(I) - both)
        worst["union"] = max(worst["union"], b(E.union(F)) - both)
        D = E.difference(F)
        if not D.is_empty():
            worst["difference"] = max(worst["difference"], b(D) - both)
        g = rng.integers(-50, 51, size=dim)
        worst["invariance"] = max(worst["invariance"], abs(b(E.translate(g)) - bE))
    tol = 1e-12
    ok = {k: v <= tol for k, v in worst.items()}
    ratios = [abs(b(Box.cube(2 ** k, dim))) / (2 ** k) ** dim for k in range(0, 11 if dim == 1 else 6)]
    tail = ratios[-5:]
    decay = all(y <= x + tol for x, y in zip(tail, tail[1:])) and ratios[-1] <= decay_threshold
    worst["decay_last_ratio"] = ratios[-1]
    if all(ok.values()) and decay:
        cls = "boundary-term"
    elif ok["nonneg"] and ok["invariance"] and decay:
        cls = "null-density"
    else:
        cls = "invalid"
    return BoundaryTermReport(ok["nonneg"], ok["intersection"], ok["union"], ok["difference"],
                              ok["invariance"], decay, worst, cls)


# error maps derived from realisations ----------------------------------------------

def derive_error_from_realization(phi: SetMap, v, family: Iterable[Window], scale: CofinalScale | None = None,
                                  n_cap: int = DEFAULT_LEVEL_CAP, shifts: Sequence | None = None) -> ErrorMap:
    """``2 b′`` where b′ regularises ``b(F) = sup_g ‖ξ(F + g)‖`` with ``ξ = S_F v − φ``.

    The sup over g is taken over ``shifts`` (default: the identity only,
    exact for isometric actions on exactly evaluated spaces). Non-isometric
    matrix actions use the bound ``C_π ‖ξ(F)‖``.
    """
    scale = scale or CofinalScale(phi.dim)
    shifts = [np.zeros(phi.dim, dtype=np.int64)] if shifts is None else [np.atleast_1d(s) for s in shifts]
    c_pi = phi.action.c_pi if phi.action.kind == "matrix" else 1.0

    def raw(F: Window):
        best = 0
        for g in shifts:
            G = F.translate(g)
            val = phi.space.norm(birkhoff_sum(v, G, phi.action) - phi(G))
            best = max(best, val)
        return best * c_pi if c_pi != 1.0 else best

    family = list(family)
    b = ErrorMap(raw, "|S_F v - phi(F)|")
    breg = regularize_error_map(b, scale, family, n_cap)
    return breg.scaled(2)


def window_shifts_within(max_extent: int, dim: int = 1) -> list:
    """Translations ``[0, max_extent)^d`` used as the sup range for sampled spaces."""
    axes = [range(max_extent)] * dim
    return [g for g in np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, dim)]


# the counterexample ----------------------------------------------------------------

def counterexample_endpoint(n: int) -> float:
    """``1 / (n log(1 + n))``; exceeds 1 at n = 1 and is clipped there."""
    return 1.0 / (n * math.log1p(n))


def counterexample_value(n: int) -> PwcFunction:
    return PwcFunction.indicator(0, counterexample_endpoint(n), n * n)


def counterexample_map(dim: int = 1) -> SetMap:
    """``φ(F) = |F|² 1_[0, 1/(|F| log(1+|F|))]`` on [0,1], trivial action."""
    return SetMap(lambda F: counterexample_value(F.size), GroupAction.trivial(dim), ValueSpace("pwc", p=1),
                  "all-windows", "counterexample")


def counterexample_unclipped_l1(n: int) -> float:
    """The closed form ``n / log(1 + n)`` (equals the true L^1 norm for n >= 2)."""
    return n / math.log1p(n)


def minimal_singleton_budget(N: int) -> PwcFunction:
    """Smallest h with ``|φ([0,n)) − n φ({0})| ≪ n h`` for every n <= N.

    Pointwise this is ``max_{n<=N} |φ([0,n)) − n φ({0})| / n``.
    """
    phi1 = counterexample_value(1)
    h = PwcFunction.zero()
    for n in range(2, N + 1):
        h = h.join(abs(counterexample_value(n) - phi1 * n) / n)
    return h


def divergence_partial_sum(N: int, start: int = 3) -> float:
    """``Σ_{start<=n<=N} 1 / (2 n log n)`` — the diverging lower-bound series."""
    return math.fsum(1.0 / (2 * n * math.log(n)) for n in range(start, N + 1))


def riesz_budget_family(l1_budget: float = 10.0, N_max: int = 2000) -> list[RieszErrorMap]:
    """Per-point Riesz budgets ``ξ(F) = |F| h`` with ``‖h‖₁ <= l1_budget``.

    Members: constants c·1, scaled indicators c·1_[0,t], and the minimal
    budgets that certify all singleton partitions up to n = N for a
    geometric range of N.
    """
    fam = []
    for c in (1, 2, 5, l1_budget):
        if c <= l1_budget:
            fam.append(RieszErrorMap.per_point(PwcFunction.constant(c), f"|F|*{c}"))
    for t in (0.5, 0.1, 0.01):
        c = l1_budget / t
        fam.append(RieszErrorMap.per_point(PwcFunction.indicator(0, t, c), f"|F|*{c:g}*1[0,{t}]"))
    N = 4
    while N < N_max:
        h = minimal_singleton_budget(N)
        if h.lp_norm(1) <= l1_budget:
            fam.append(RieszErrorMap.per_point(h, f"|F|*h_{N}"))
        N *= 2
    return fam

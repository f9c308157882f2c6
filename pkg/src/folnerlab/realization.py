"""Additive realizations of almost additive set maps by tiling.

For an almost additive φ the tile ``[0, m)^d`` of a box tiling of Z^d
yields the candidate ``v = φ([0, m)^d) / m^d``. The tile side is the
smallest with ``b(tile) <= m^d ε`` and ``|||φ|||_sup <= m^d ε`` where
``ε = ε₀ / (1 + |||b|||_sup + 2|||φ|||_sup)``; every (K, δ)-invariant window
then satisfies ``‖φ(F)/|F| − A_F v‖ <= ε₀`` for the boundary-control pair
(K, δ) of the tile. The extraction records that claim together with the
residuals measured on a battery of invariant windows.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Sequence

import numpy as np

from ._parallel import ordered_map
from .additivity import FLOAT_SLACK, ErrorMap, _grouped_sum, shape_key
from .folner import BoxTiling, FolnerSequence, window_partition_by_tiling
from .lattice import Box, InvarianceParams, Window, boundary_control_params, boundary_size, \
    k_interior, symmetric_difference_size
from .setmaps import GroupAction, SetMap, ergodic_average
from .shift import ShiftFunction
from .values import PwcFunction, ValueSpace

DEFAULT_TILE_CAP = 64


class NoAdmissibleTile(RuntimeError):
    """No tile side up to the cap meets both tile conditions."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


# value helpers -------------------------------------------------------------------

def materialize(space: ValueSpace, value):
    """Values of sampled spaces become arrays over the sample set; others pass through."""
    if space.kind == "sampled" and isinstance(value, ShiftFunction):
        return space.sampler.values(value)
    return value


def value_norm(space: ValueSpace, value) -> float:
    if space.kind == "sampled":
        return space.sampler.norm(materialize(space, value), space.p)
    return space.norm(value)


def encode_value(v, space: ValueSpace):
    """JSON-friendly description of a realization value."""
    if isinstance(v, PwcFunction):
        return {"kind": "pwc", **v.to_dict()}
    if isinstance(v, Fraction):
        return {"kind": "scalar", "value": f"{v.numerator}/{v.denominator}", "float": float(v)}
    if isinstance(v, (int, float, np.floating, np.integer)):
        return {"kind": "scalar", "value": float(v)}
    if isinstance(v, np.ndarray):
        return {"kind": "vector", "value": [float(x) for x in v.ravel()]}
    if isinstance(v, ShiftFunction):
        out = {"kind": "shift-function", "label": v.label}
        if space.sampler is not None:
            out["sampler"] = space.sampler.to_config()
        return out
    return {"kind": type(v).__name__, "repr": repr(v)}


# certificates --------------------------------------------------------------------

@dataclass
class BatteryRow:
    lo: tuple
    hi: tuple
    size: int
    defect: float
    invariant: bool
    residual: float
    kind: str  # "grid" or "random"

    def to_dict(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi), "size": self.size, "defect": self.defect,
                "invariant": self.invariant, "residual": self.residual, "kind": self.kind}


@dataclass
class Certificate:
    v: Any
    m: int
    epsilon0: float
    epsilon: float
    b_sup: float
    phi_sup: float
    params: InvarianceParams
    rows: list = field(default_factory=list)
    seed: int = 0
    space: ValueSpace | None = None
    notes: dict = field(default_factory=dict)

    @property
    def tile(self) -> Box:
        d = self.params.K.dim
        return Box([0] * d, [self.m] * d)

    @property
    def violations(self) -> list:
        return [r for r in self.rows if r.invariant and r.residual > self.epsilon0 + FLOAT_SLACK]

    @property
    def max_residual(self) -> float:
        inv = [r.residual for r in self.rows if r.invariant]
        return max(inv) if inv else float("nan")

    @property
    def passed(self) -> bool:
        return any(r.invariant for r in self.rows) and not self.violations

    def to_dict(self) -> dict:
        K = self.params.K
        Kdesc = {"lo": list(K.lo), "hi": list(K.hi)} if isinstance(K, Box) else {"points": K.to_list()}
        return {
            "v": encode_value(self.v, self.space) if self.space is not None else repr(self.v),
            "m": self.m,
            "epsilon0": self.epsilon0,
            "epsilon": self.epsilon,
            "constants": {"b_sup": self.b_sup, "phi_sup": self.phi_sup},
            "K": Kdesc,
            "delta": self.params.delta,
            "seed": self.seed,
            "passed": self.passed,
            "max_residual": self.max_residual,
            "residuals": [r.to_dict() for r in self.rows],
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# constants -----------------------------------------------------------------------

def estimate_constants(phi: SetMap, b: ErrorMap, family: Iterable[Window]) -> tuple[float, float]:
    """Lower estimates ``(|||b|||_sup, |||φ|||_sup)`` as maxima over a finite family."""
    family = list(family)
    b_sup = max(abs(float(b(F))) / F.size for F in family)
    phi_sup = max(value_norm(phi.space, phi(F)) / F.size for F in family)
    return b_sup, float(phi_sup)


def _cube_invariant(n: int, K: Box, delta: float, d: int) -> bool:
    return symmetric_difference_size(K, Box([0] * d, [n] * d)) <= delta * n ** d


def min_invariant_cube(params: InvarianceParams, d: int) -> int:
    """Smallest side n with ``[0, n)^d`` (K, δ)-invariant (cube defect decreases in n)."""
    K = params.K if isinstance(params.K, Box) else params.K.bounding_box()
    if not isinstance(params.K, Box) and not params.K.is_box():
        raise ValueError("battery construction needs a box-shaped K")
    hi = 1
    while not _cube_invariant(hi, K, params.delta, d):
        hi *= 2
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _cube_invariant(mid, K, params.delta, d):
            hi = mid
        else:
            lo = mid
    return hi


def build_battery(params: InvarianceParams, d: int, seed: int = 0, grid: int = 3, n_random: int = 100,
                  spread: int = 1_000_000) -> list[tuple[Box, str]]:
    """Cubes ``[0, n)^d`` on a doubling grid from the first invariant side, plus random translated boxes.

    Random boxes have sides in ``[n0, 3 n0 / 2]`` (n0 the first invariant cube side)
    and corners in ``[-spread, spread]^d``.
    """
    n0 = min_invariant_cube(params, d)
    out = [(Box([0] * d, [n0 * 2 ** j] * d), "grid") for j in range(grid)]
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        side = rng.integers(n0, n0 + n0 // 2 + 1, size=d)
        lo = rng.integers(-spread, spread + 1, size=d)
        out.append((Box(lo, lo + side), "random"))
    return out


# extraction ----------------------------------------------------------------------

def select_tile(phi: SetMap, b: ErrorMap, epsilon: float, phi_sup: float, m_cap: int = DEFAULT_TILE_CAP,
                phi_condition: bool = True) -> int:
    """Smallest m with ``b([0,m)^d) <= m^d ε`` and (optionally) ``|||φ|||_sup <= m^d ε``.

    The second condition is part of the selection rule but no estimate of
    the residual depends on it; ``phi_condition=False`` drops it.
    """
    d = phi.dim
    for m in range(1, m_cap + 1):
        vol = m ** d
        if float(b(Box.cube(m, d))) <= vol * epsilon and (not phi_condition or phi_sup <= vol * epsilon):
            return m
    tile = Box.cube(m_cap, d)
    diag = {
        "m_cap": m_cap,
        "epsilon": epsilon,
        "b_ratio_at_cap": float(b(tile)) / m_cap ** d,
        "phi_ratio_at_cap": phi_sup / m_cap ** d,
        "phi_condition_side": math.ceil((phi_sup / epsilon) ** (1.0 / d)),
    }
    raise NoAdmissibleTile(
        f"no tile side <= {m_cap} has b(tile)/|tile| <= {epsilon:.6g} and |||phi|||_sup/|tile| <= {epsilon:.6g} "
        f"(at the cap: {diag['b_ratio_at_cap']:.6g}, {diag['phi_ratio_at_cap']:.6g})", diag)


def residual(phi: SetMap, v, F: Window) -> float:
    """``‖φ(F)/|F| − A_F v‖``."""
    space = phi.space
    # the average reads the longer coordinate span; evaluate it first so the
    # sample set can serve φ(F) from the same block
    avg = materialize(space, ergodic_average(v, F, phi.action))
    lhs = materialize(space, phi(F))
    if isinstance(lhs, (int, Fraction)) and isinstance(avg, (int, Fraction)):
        return float(abs(Fraction(lhs, F.size) - avg))
    return float(value_norm(space, lhs / F.size - avg))


def extract_realization(phi: SetMap, b: ErrorMap, epsilon0: float, constants: tuple | None = None,
                        family: Iterable[Window] | None = None, m_cap: int = DEFAULT_TILE_CAP,
                        seed: int = 0, grid: int = 3, n_random: int = 100, battery: Sequence | None = None,
                        threads: int | None = None, phi_condition: bool = True) -> Certificate:
    """Tile-average realization with a residual certificate on invariant windows.

    ``constants = (|||b|||_sup, |||φ|||_sup)``; when omitted they are
    estimated on ``family`` (default: cubes of side up to ``m_cap``) and the
    certificate notes that the values are estimates.
    """
    if epsilon0 <= 0:
        raise ValueError("epsilon0 must be positive")
    d = phi.dim
    notes = {}
    if constants is None:
        fam = list(family) if family is not None else [Box.cube(s, d) for s in range(1, m_cap + 1)]
        b_sup, phi_sup = estimate_constants(phi, b, fam)
        notes["constants"] = f"estimated over {len(fam)} windows"
    else:
        b_sup, phi_sup = (float(c) for c in constants)
        notes["constants"] = "declared"
    epsilon = epsilon0 / (1 + b_sup + 2 * phi_sup)
    m = select_tile(phi, b, epsilon, phi_sup, m_cap, phi_condition)
    notes["phi_condition"] = phi_condition
    tile = Box.cube(m, d)
    value = phi(tile)
    v = Fraction(value, m ** d) if isinstance(value, int) else value / m ** d
    params = boundary_control_params(tile, epsilon)
    windows = list(battery) if battery is not None else build_battery(params, d, seed, grid, n_random)

    def run(item):
        F, kind = item
        defect = symmetric_difference_size(params.K, F) / F.size
        return BatteryRow(tuple(int(x) for x in F.lo), tuple(int(x) for x in F.hi), F.size, defect,
                          defect <= params.delta, residual(phi, v, F), kind)

    rows = ordered_map(run, windows, threads)
    return Certificate(v, m, epsilon0, epsilon, b_sup, phi_sup, params, rows, seed, phi.space, notes)


# verification along Følner sequences ---------------------------------------------

@dataclass
class ResidualSequence:
    ns: list
    values: list
    tail_sups: list

    def tail_at(self, n: int | None = None) -> float:
        if n is None:
            return self.tail_sups[-1]
        for k, t in zip(self.ns, self.tail_sups):
            if k >= n:
                return t
        return self.tail_sups[-1]

    def rows(self) -> list[tuple]:
        return list(zip(self.ns, self.values, self.tail_sups))


def _tails(values: list) -> list:
    out, running = [], -math.inf
    for a in reversed(values):
        running = max(running, a)
        out.append(running)
    return out[::-1]


def _schedule(N: int, schedule) -> list:
    if N < 1:
        raise ValueError("N must be positive")
    return [n for n in (schedule if schedule is not None else range(1, N + 1)) if n <= N]


def verify_realization(phi: SetMap, v, seq: FolnerSequence, N: int, schedule: Sequence[int] | None = None,
                       threads: int | None = None) -> ResidualSequence:
    """``n ↦ ‖φ(F_n)/|F_n| − A_{F_n} v‖`` with its tail sups over the evaluated prefix."""
    ns = _schedule(N, schedule)
    vals = ordered_map(lambda n: residual(phi, v, seq(n)), ns, threads)
    return ResidualSequence(ns, vals, _tails(vals))


@dataclass
class CoboundaryReport:
    sequence: ResidualSequence
    running_inf: list
    isometric: bool
    lw_gap: float | None  # tail sup minus running inf at the end (isometric actions only)


def coboundary_residual(v, action: GroupAction, space: ValueSpace, seq: FolnerSequence, N: int,
                        schedule: Sequence[int] | None = None, threads: int | None = None) -> CoboundaryReport:
    """``n ↦ ‖A_{F_n} v‖`` with the running infimum over the windows visited."""
    ns = _schedule(N, schedule)
    vals = ordered_map(lambda n: float(value_norm(space, ergodic_average(v, seq(n), action))), ns, threads)
    seq_report = ResidualSequence(ns, vals, _tails(vals))
    inf, running = [], math.inf
    for a in vals:
        running = min(running, a)
        inf.append(running)
    iso = action.isometric
    gap = seq_report.tail_sups[-1] - inf[-1] if iso else None
    return CoboundaryReport(seq_report, inf, iso, gap)


@dataclass
class DifferenceReport:
    tail1: float
    tail2: float
    difference_tail: float
    tolerance: float
    triangle_ok: bool
    passed: bool


def realization_difference_test(phi: SetMap, v1, v2, seq: FolnerSequence, N: int, tolerance: float,
                                schedule: Sequence[int] | None = None) -> DifferenceReport:
    """Two realizations differ by a vector with vanishing averages.

    Passes when both verification tails at N are within ``tolerance`` and
    the averages of ``v1 − v2`` stay below the sum of the two tails.
    """
    r1 = verify_realization(phi, v1, seq, N, schedule)
    r2 = verify_realization(phi, v2, seq, N, schedule)
    diff = coboundary_residual(v1 - v2, phi.action, phi.space, seq, N, schedule)
    t1, t2, td = r1.values[-1], r2.values[-1], diff.sequence.values[-1]
    triangle = all(c <= a + b + FLOAT_SLACK for a, b, c in zip(r1.values, r2.values, diff.sequence.values))
    ok = triangle and t1 <= tolerance and t2 <= tolerance and td <= 2 * tolerance
    return DifferenceReport(t1, t2, td, tolerance, triangle, ok)


# the intermediate bounds of the tiling argument ------------------------------------

@dataclass
class ThreeTermRow:
    m: int
    window: tuple
    lhs_tiling: float
    bound_tiling: float
    lhs_fragments: float
    bound_fragments: float
    lhs_total: float

    @property
    def ok(self) -> bool:
        tol = FLOAT_SLACK * (1 + self.bound_tiling + self.bound_fragments)
        return (self.lhs_tiling <= self.bound_tiling + tol and self.lhs_fragments <= self.bound_fragments + tol
                and self.lhs_total <= self.bound_tiling + self.bound_fragments + tol)


@dataclass
class ThreeTermReport:
    rows: list
    b_sup: float
    phi_sup: float

    @property
    def failures(self) -> list:
        return [r for r in self.rows if not r.ok]

    @property
    def passed(self) -> bool:
        return bool(self.rows) and not self.failures

    def worst_ratio(self, which: str = "tiling") -> float:
        best = 0.0
        for r in self.rows:
            lhs, bnd = (r.lhs_tiling, r.bound_tiling) if which == "tiling" else (r.lhs_fragments, r.bound_fragments)
            if bnd > 0:
                best = max(best, lhs / bnd)
            elif lhs > FLOAT_SLACK:
                return math.inf
        return best


class _Values:
    """Materialised φ values, cached by position (or by shape for trivial actions)."""

    def __init__(self, phi: SetMap):
        self.phi = phi
        self.trivial = phi.action.kind == "trivial"
        self._cache: dict = {}

    def __call__(self, E: Window):
        if self.trivial:
            key = shape_key(E)
        elif isinstance(E, Box):
            key = (tuple(E.lo), tuple(E.hi))
        else:
            key = E.points.tobytes()
        if key not in self._cache:
            self._cache[key] = materialize(self.phi.space, self.phi(E))
        return self._cache[key]


def three_term_bound_check(phi: SetMap, b: ErrorMap, b_sup: float, phi_sup: float,
                           sides: Sequence[int] = (1, 2, 3, 4), max_size: int = 64,
                           extra_windows: Iterable[Window] = ()) -> ThreeTermReport:
    """Check the two intermediate inequalities of the tiling argument (d = 1).

    For the tile ``T = [0, m)`` and each window F, with ``P_t`` the cut of F
    along ``T + mZ + t``:

    * tiling term ``‖|T| φ(F) − Σ_t Σ_{E∈P_t} φ(E)‖`` against
      ``|Int_T(F)| b(T) + |∂_T(F)| |T| |||b|||_sup``;
    * fragment term ``‖Σ_t Σ_{E∈P_t} φ(E) − Σ_{g∈F} φ(T + g)‖`` against
      ``2 |||φ|||_sup |T| |∂_T(F)|``.

    The windows are all intervals ``[0, L)``, ``L <= max_size`` (every
    offset against the tiling is covered by the sum over t), plus any
    ``extra_windows``.
    """
    if phi.dim != 1:
        raise ValueError("the decomposition check runs in dimension 1")
    space = phi.space
    val = _Values(phi)
    windows = [Box([0], [L]) for L in range(1, max_size + 1)] + list(extra_windows)
    rows = []
    for m in sides:
        tiling = BoxTiling(m, 1)
        T = tiling.shape
        bT = float(b(T))
        for F in windows:
            pieces = []
            for t in range(m):
                pieces.extend(window_partition_by_tiling(F, tiling, [t]).pieces)
            tiled = _grouped_sum(pieces, val, val.trivial)
            translates = _grouped_sum([T.translate(g) for g in F.points], val, val.trivial)
            phiF = val(F)
            n_int = k_interior(T, F).size
            n_bd = boundary_size(T, F)
            lhs1 = float(value_norm(space, phiF * m - tiled))
            lhs2 = float(value_norm(space, tiled - translates))
            lhs = float(value_norm(space, phiF * m - translates))
            rows.append(ThreeTermRow(m, _describe(F), lhs1, n_int * bT + n_bd * m * b_sup,
                                     lhs2, 2 * phi_sup * m * n_bd, lhs))
    return ThreeTermReport(rows, b_sup, phi_sup)


def _describe(F: Window) -> tuple:
    if isinstance(F, Box):
        return ("box", int(F.lo[0]), int(F.hi[0]))
    return ("points",) + tuple(int(p[0]) for p in F.points)

"""Ergodic-theorem experiments: projections, pointwise averages, coboundary integrals."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._parallel import ordered_map
from .folner import FolnerSequence, box_folner
from .lattice import Box, Window
from .setmaps import GroupAction, SetMap, ergodic_average
from .shift import CylinderFunction, SampleSet, ShiftFunction, coboundary
from .values import PwcFunction


class NonConvergenceError(RuntimeError):
    """The averages of a finite-dimensional action do not settle."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


# systems -----------------------------------------------------------------------

def trial_seed(seed: int, trial: int) -> int:
    """Independent child seed for one trial."""
    return int(np.random.SeedSequence([seed, trial]).generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


@dataclass(frozen=True)
class ShiftSystem:
    """A Bernoulli shift ``(A^{Z^d}, μ = ⊗ probs)`` with a seeded sample of configurations."""

    probs: tuple = (0.5, 0.5)
    dim: int = 1
    seed: int = 0
    n_samples: int = 100

    @classmethod
    def bernoulli(cls, p: float = 0.5, dim: int = 1, seed: int = 0, n_samples: int = 100) -> "ShiftSystem":
        return cls((1.0 - p, p), dim, seed, n_samples)

    @property
    def alphabet(self) -> int:
        return len(self.probs)

    @property
    def site_mean(self) -> float:
        return float(sum(a * q for a, q in enumerate(self.probs)))

    def samples(self, trial: int = 0) -> SampleSet:
        """The sample set of one trial; trials use independent child seeds."""
        return SampleSet(tuple(self.probs), trial_seed(self.seed, trial), self.n_samples, self.dim)

    def mean(self, f):
        """Exact ``∫ f dμ`` for cylinder functions."""
        if not isinstance(f, CylinderFunction):
            raise TypeError("exact means are available for cylinder functions only")
        return f.mean(self.site_mean)


@dataclass(frozen=True)
class UnitIntervalSystem:
    """Lebesgue measure on [0, 1] sampled at seeded uniform points."""

    seed: int = 0
    n_samples: int = 100

    @property
    def points(self) -> np.ndarray:
        return np.random.default_rng(self.seed).random(self.n_samples)


def _evaluate(value, system, samples: SampleSet | None = None) -> np.ndarray:
    if isinstance(value, PwcFunction):
        return np.array([float(value(x)) for x in system.points])
    if isinstance(value, ShiftFunction):
        return value.evaluate(samples)
    return np.full(system.n_samples, float(value))


# mean ergodic projection ---------------------------------------------------------------

@dataclass
class ProjectionReport:
    P: np.ndarray
    residuals: list  # (n, ‖A_{F_n} − P‖_2)
    idempotency: float
    intertwining: float
    range_defect: float
    fixed_dim: int

    @property
    def passed(self) -> bool:
        return max(self.idempotency, self.intertwining, self.range_defect) <= 1e-9


def _null_space(M: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    u, s, vh = np.linalg.svd(M)
    rank = int((s > rtol * max(1.0, s.max() if s.size else 0.0)).sum())
    return vh[rank:].conj().T


def _column_space(M: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    u, s, vh = np.linalg.svd(M)
    rank = int((s > rtol * max(1.0, s.max() if s.size else 0.0)).sum())
    return u[:, :rank]


def _growth(action: GroupAction, N: int) -> list:
    out, k = [], 1
    while k <= N:
        g = np.zeros(action.dim, dtype=np.int64)
        best = 0.0
        for i in range(action.dim):
            for s in (k, -k):
                g[:] = 0
                g[i] = s
                best = max(best, float(np.linalg.norm(action.operator(g), 2)))
        out.append((k, best))
        k *= 2
    return out


def _axis_average(M: np.ndarray, lo: int, hi: int) -> np.ndarray:
    """``(1/(hi-lo)) Σ_{lo<=g<hi} M^{-g}``."""
    Minv = np.linalg.inv(M)
    cur = np.linalg.matrix_power(Minv, lo) if lo >= 0 else np.linalg.matrix_power(M, -lo)
    total = np.zeros_like(M)
    for _ in range(lo, hi):
        total += cur
        cur = cur @ Minv
    return total / (hi - lo)


def cesaro_average(action: GroupAction, F: Box) -> np.ndarray:
    """``A_F = (1/|F|) Σ_{g∈F} π(−g)`` for a box (product over commuting generators)."""
    out = np.eye(action.size)
    for M, lo, hi in zip(action.generators, F.lo, F.hi):
        out = out @ _axis_average(M, int(lo), int(hi))
    return out


def mean_ergodic_projection(action: GroupAction, seq: FolnerSequence | None = None, N: int = 4096,
                            tol: float = 1e-9, bounded_cap: float = 1e6) -> ProjectionReport:
    """The projection onto ``Inv(π)`` along the closed span of ``range(π_i − I)``.

    P is obtained from the two subspaces directly and then compared with the
    Cesàro averages ``A_{F_n}`` at ``n = 2^k <= N`` (default ``F_n = [0, n)^d``).
    """
    if action.kind != "matrix":
        raise TypeError("mean_ergodic_projection needs a finite-dimensional matrix action")
    r = action.size
    I = np.eye(r)
    stacked = np.vstack([M - I for M in action.generators])
    fixed = _null_space(stacked)
    ranges = _column_space(np.hstack([M - I for M in action.generators]))
    growth = _growth(action, N)
    if action.c_pi > bounded_cap or fixed.shape[1] + ranges.shape[1] != r:
        raise NonConvergenceError("averages do not converge: the action is not power bounded",
                                  {"c_pi": action.c_pi, "growth": growth,
                                   "fixed_dim": fixed.shape[1], "range_dim": ranges.shape[1]})
    basis = np.hstack([fixed, ranges])
    if abs(np.linalg.det(basis)) < 1e-12:
        raise NonConvergenceError("fixed space and coboundary range are not complementary",
                                  {"growth": growth})
    D = np.zeros((r, r))
    D[: fixed.shape[1], : fixed.shape[1]] = np.eye(fixed.shape[1])
    P = basis @ D @ np.linalg.inv(basis)
    P[np.abs(P) < tol * 1e-3] = 0.0
    seq = seq or box_folner(action.dim)
    residuals, n = [], 1
    while n <= N:
        F = seq(n)
        if not isinstance(F, Box):
            F = F.bounding_box()
        residuals.append((n, float(np.linalg.norm(cesaro_average(action, F) - P, 2))))
        n *= 2
    idem = float(np.abs(P @ P - P).max())
    inter = max(max(float(np.abs(M @ P - P).max()), float(np.abs(P @ M - P).max())) for M in action.generators)
    range_defect = max(float(np.abs(M @ P - P).max()) for M in action.generators)
    return ProjectionReport(P, residuals, idem, inter, range_defect, fixed.shape[1])


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def rotation_block_action(theta: float = 2 * math.pi * (math.sqrt(2) - 1)) -> GroupAction:
    """``block-diag(1, R_θ)`` on R³."""
    M = np.eye(3)
    M[1:, 1:] = rotation(theta)
    return GroupAction.matrices(M)


# pointwise experiments -------------------------------------------------------------------

@dataclass
class PointwiseTable:
    ns: list
    residuals: np.ndarray  # (trials, len(ns))
    mean: float
    exact_mean: bool

    def rows(self) -> list[tuple[int, int, float]]:
        return [(t, n, float(self.residuals[t, j])) for t in range(self.residuals.shape[0])
                for j, n in enumerate(self.ns)]

    def quantiles(self, qs: Sequence[float] = (0.5, 0.9, 0.95, 1.0)) -> dict:
        return {str(n): {f"q{q:g}": float(np.quantile(self.residuals[:, j], q)) for q in qs}
                for j, n in enumerate(self.ns)}

    def fraction_within(self, tol: float, n: int | None = None) -> float:
        j = -1 if n is None else self.ns.index(n)
        return float(np.mean(self.residuals[:, j] <= tol))


def _default_schedule(N: int) -> list:
    ns, n = [], 1
    while n < N:
        ns.append(n)
        n *= 10
    return ns + [N]


def pointwise_experiment(f: ShiftFunction, system: ShiftSystem, seq: FolnerSequence, N: int,
                         trials: int | None = None, schedule: Sequence[int] | None = None,
                         threads: int | None = None) -> PointwiseTable:
    """Per-sample ``|A_{F_n} f(ω) − ∫f dμ|`` along the sequence.

    Each of the system's samples is one trial ω. For cylinder functions
    ``∫ f dμ`` is exact; otherwise a reference average at ``4N`` is used.
    """
    sysx = system if trials is None else ShiftSystem(system.probs, system.dim, system.seed, trials)
    samples = sysx.samples(0)
    ns = list(schedule) if schedule is not None else _default_schedule(N)
    if isinstance(f, CylinderFunction):
        fbar, exact = float(sysx.mean(f)), True
    else:
        F = seq(4 * N)
        fbar, exact = float(np.mean(f.birkhoff(F).evaluate(samples) / F.size)), False
    cols = ordered_map(lambda n: np.abs(f.birkhoff(seq(n)).evaluate(samples) / seq(n).size - fbar), ns, threads)
    return PointwiseTable(ns, np.stack(cols, axis=1), fbar, exact)


@dataclass
class TriangleTable:
    ns: list
    first: np.ndarray  # |φ(F_n)/|F_n|(ω) − A_{F_n} v(ω)|
    second: np.ndarray  # |A_{F_n} v(ω) − v̄|
    direct: np.ndarray  # |φ(F_n)/|F_n|(ω) − v̄|
    norm_first: list  # ‖φ(F_n)/|F_n| − A_{F_n} v‖ in the value space

    @property
    def triangle_ok(self) -> bool:
        return bool(np.all(self.direct <= self.first + self.second + 1e-12))


def asymptotically_additive_pointwise(phi: SetMap, v, system, seq: FolnerSequence, N: int,
                                      vbar: float | None = None, schedule: Sequence[int] | None = None,
                                      trial: int = 0) -> TriangleTable:
    """Both terms of the triangle decomposition per sample, with the direct residual.

    ``system`` is a :class:`ShiftSystem` for shift-valued maps or a
    :class:`UnitIntervalSystem` for step-function-valued maps.
    """
    ns = list(schedule) if schedule is not None else _default_schedule(N)
    samples = system.samples(trial) if isinstance(system, ShiftSystem) else None
    if vbar is None:
        vbar = float(system.mean(v)) if isinstance(system, ShiftSystem) else 0.0
    first, second, direct, norms = [], [], [], []
    for n in ns:
        F = seq(n)
        val = phi(F)
        avg = ergodic_average(v, F, phi.action)
        a = _evaluate(val, system, samples) / F.size
        b = _evaluate(avg, system, samples)
        first.append(np.abs(a - b))
        second.append(np.abs(b - vbar))
        direct.append(np.abs(a - vbar))
        diff = val / F.size - avg
        norms.append(float(phi.space.norm(diff)) if phi.space.kind != "sampled"
                     else float(phi.space.sampler.norm(a - b, phi.space.p)))
    return TriangleTable(ns, np.stack(first, 1), np.stack(second, 1), np.stack(direct, 1), norms)


# coboundaries ----------------------------------------------------------------------------

def coboundary_integral_check(h: CylinderFunction, g, system: ShiftSystem | None = None, p: float | None = None):
    """Exact ``∫ (h − κ(g) h) dμ`` under the product measure."""
    mean = system.site_mean if system is not None else (0.5 if p is None else p)
    return coboundary(h, g).mean(mean)


def random_coboundary_combination(rng: np.random.Generator, terms: int = 5, max_sites: int = 3,
                                  spread: int = 6, dim: int = 1) -> CylinderFunction:
    """``Σ c_i (h_i − κ(g_i) h_i)`` with random monomials h_i, shifts g_i and coefficients c_i."""
    total = None
    for _ in range(terms):
        k = int(rng.integers(1, max_sites + 1))
        sites = {tuple(int(x) for x in rng.integers(-spread, spread + 1, size=dim)) for _ in range(k)}
        sites = [s[0] if dim == 1 else s for s in sites]
        h = CylinderFunction.monomial(sites, float(rng.normal()), dim)
        g = rng.integers(-spread, spread + 1, size=dim)
        c = coboundary(h, g if dim > 1 else int(g[0]))
        total = c if total is None else total + c
    return total


def measure_preservation_check(f: ShiftFunction, system: ShiftSystem, shifts: Sequence, trial: int = 0) -> list:
    """``(g, |mean f − mean κ(g) f|, 3σ)`` on one sample set."""
    samples = system.samples(trial)
    base = f.evaluate(samples)
    out = []
    for g in shifts:
        moved = f.translate(g).evaluate(samples)
        sd = float(np.std(moved - base)) if samples.n_samples > 1 else 0.0
        out.append((g, abs(float(moved.mean() - base.mean())), 3 * sd / math.sqrt(samples.n_samples)))
    return out

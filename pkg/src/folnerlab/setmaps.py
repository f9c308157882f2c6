"""Set maps ``F -> V`` with a group action, their semi-norms and equivariance."""
from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .folner import FolnerSequence
from .lattice import Box, Window, random_window
from .values import ValueSpace


@dataclass(frozen=True)
class GroupAction:
    """A representation π of Z^d on a value space.

    ``kind``: ``trivial`` (π(g) = id), ``koopman`` (shift functions,
    π(g) = κ(g)) or ``matrix`` (π(g) = Π M_i^{g_i} for commuting generators).
    """

    kind: str = "trivial"
    dim: int = 1
    generators: tuple = ()
    c_pi: float = field(default=1.0, compare=False)

    def __post_init__(self):
        if self.kind not in ("trivial", "koopman", "matrix"):
            raise ValueError(f"unknown action kind {self.kind!r}")
        if self.kind == "matrix":
            gens = tuple(np.array(M, dtype=float) for M in self.generators)
            if len(gens) != self.dim:
                raise ValueError("need one generator matrix per lattice direction")
            for M in gens:
                if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape != gens[0].shape:
                    raise ValueError("generators must be square and of equal size")
                if abs(np.linalg.det(M)) < 1e-14:
                    raise ValueError("generators must be invertible")
            for A in gens:
                for B in gens:
                    if not np.allclose(A @ B, B @ A, atol=1e-12):
                        raise ValueError("generators must commute")
            object.__setattr__(self, "generators", gens)
            object.__setattr__(self, "c_pi", _uniform_bound(self))

    @classmethod
    def trivial(cls, dim: int = 1) -> "GroupAction":
        return cls("trivial", dim)

    @classmethod
    def koopman(cls, dim: int = 1) -> "GroupAction":
        return cls("koopman", dim)

    @classmethod
    def matrices(cls, *generators) -> "GroupAction":
        return cls("matrix", len(generators), tuple(generators))

    @property
    def isometric(self) -> bool:
        return self.c_pi <= 1 + 1e-12

    @property
    def size(self) -> int:
        return self.generators[0].shape[0] if self.kind == "matrix" else 0

    def operator(self, g) -> np.ndarray:
        if self.kind != "matrix":
            raise TypeError("only matrix actions have explicit operators")
        g = np.atleast_1d(np.asarray(g, dtype=np.int64))
        out = np.eye(self.size)
        for M, k in zip(self.generators, g):
            k = int(k)
            out = out @ np.linalg.matrix_power(M if k >= 0 else np.linalg.inv(M), abs(k))
        return out

    def apply(self, g, v):
        if self.kind == "trivial":
            return v
        if self.kind == "koopman":
            return v.translate(g)
        return self.operator(g) @ v

    def homomorphism_defect(self, pairs: Iterable[tuple]) -> float:
        if self.kind != "matrix":
            return 0.0
        worst = 0.0
        for g, h in pairs:
            lhs = self.operator(g) @ self.operator(h)
            rhs = self.operator(np.add(g, h))
            worst = max(worst, float(np.abs(lhs - rhs).max()))
        return worst


def _uniform_bound(action: GroupAction, radius: int = 16) -> float:
    """``sup ‖π(g)‖_op`` estimated over the box ``[-radius, radius]^d``."""
    axes = [range(-radius, radius + 1)] * action.dim
    best = 0.0
    for g in np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, action.dim):
        best = max(best, float(np.linalg.norm(action.operator(g), 2)))
    return best


@dataclass
class SetMap:
    """An evaluatable set map with its action and value space."""

    rule: Callable[[Window], Any]
    action: GroupAction
    space: ValueSpace
    domain: str = "all-windows"  # or "boxes-only"
    name: str = "phi"

    def __call__(self, F: Window):
        if F.is_empty():
            raise ValueError("set maps are defined on nonempty windows")
        if self.domain == "boxes-only" and not isinstance(F, Box):
            if not F.is_box():
                raise ValueError(f"{self.name} is defined on boxes only")
            F = F.bounding_box()
        return self.rule(F)

    @property
    def dim(self) -> int:
        return self.action.dim

    def norm(self, F: Window) -> float:
        return self.space.norm(self(F))

    def density(self, F: Window):
        """``‖φ(F)‖ / |F|``."""
        return self.norm(F) / F.size

    def __sub__(self, other: "SetMap") -> "SetMap":
        return SetMap(lambda F: self(F) - other(F), self.action, self.space,
                      _narrow(self.domain, other.domain), f"({self.name}-{other.name})")

    def __add__(self, other: "SetMap") -> "SetMap":
        return SetMap(lambda F: self(F) + other(F), self.action, self.space,
                      _narrow(self.domain, other.domain), f"({self.name}+{other.name})")


def _narrow(a: str, b: str) -> str:
    return "boxes-only" if "boxes-only" in (a, b) else "all-windows"


def birkhoff_sum(v, F: Window, action: GroupAction):
    """``S_F v = Σ_{g∈F} π(-g) v``."""
    if action.kind == "trivial":
        return v * F.size
    if action.kind == "koopman":
        return v.birkhoff(F)
    total = np.zeros_like(np.asarray(v, dtype=float))
    for g in F.points:
        total = total + action.operator(-g) @ v
    return total


def birkhoff_map(v, action: GroupAction, space: ValueSpace, name: str = "birkhoff") -> SetMap:
    """The additive set map ``F ↦ S_F v``."""
    return SetMap(lambda F: birkhoff_sum(v, F, action), action, space, "all-windows", name)


def ergodic_average(v, F: Window, action: GroupAction):
    """``A_F v = S_F v / |F|``."""
    S = birkhoff_sum(v, F, action)
    if isinstance(S, (int, Fraction)):
        return Fraction(S, F.size)
    return S / F.size


def sup_seminorm(phi, family: Sequence[Window]) -> float:
    """``max_F ‖φ(F)‖/|F|`` over the family — a lower bound for ``|||φ|||_sup``."""
    best = 0
    for F in family:
        best = max(best, _density(phi, F))
    return best


def _density(phi, F: Window):
    if isinstance(phi, SetMap):
        return phi.density(F)
    return abs(phi(F)) / F.size


@dataclass
class SeminormReport:
    values: list  # (n, ‖φ(F_n)‖/|F_n|)
    tail_sequence: list  # (n, sup_{k >= n} value_k) over the evaluated prefix
    sup_estimate: float
    verdict: str

    def tail_at(self, n: int) -> float:
        for k, t in self.tail_sequence:
            if k >= n:
                return t
        return self.tail_sequence[-1][1]


def asymptotic_seminorm(phi, seq: FolnerSequence, N: int, schedule: Sequence[int] | None = None,
                        threshold: float = 1e-2) -> SeminormReport:
    """Tail sups of ``‖φ(F_n)‖/|F_n|`` along a Følner sequence up to ``N``.

    ``|||φ|||_G`` is a limit superior; only its tail sups over a finite
    prefix are computable. The verdict reports whether the last tail sup is
    below ``threshold`` ("decaying") and never claims a limit.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    ns = list(schedule) if schedule is not None else list(range(1, N + 1))
    vals = [(n, float(_density(phi, seq(n)))) for n in ns if n <= N]
    tails, running = [], -math.inf
    for n, a in reversed(vals):
        running = max(running, a)
        tails.append((n, running))
    tails.reverse()
    last = tails[-1][1]
    verdict = "decaying" if last <= threshold else ("flat" if math.isclose(tails[0][1], last) else "slow")
    return SeminormReport(vals, tails, max(a for _, a in vals), verdict)


@dataclass
class EquivarianceReport:
    max_defect: float
    passed: bool
    trials: int
    witness: tuple | None


def _value_distance(space: ValueSpace, u, v) -> float:
    d = space.norm(u - v)
    return float(d)


def equivariance_check(phi: SetMap, trials: int, seed: int = 0, family: Sequence[Window] | None = None,
                       g_radius: int = 8, tol: float = 1e-9) -> EquivarianceReport:
    """``max ‖π(g)φ(F) − φ(F − g)‖`` over sampled (g, F)."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    d = phi.dim
    worst, witness = 0.0, None
    for t in range(trials):
        if family is not None:
            F = family[t % len(family)]
        elif phi.domain == "boxes-only":
            lo = rng.integers(-10, 10, size=d)
            F = Box(lo, lo + rng.integers(1, 8, size=d))
        else:
            F = random_window(rng, d, int(rng.integers(1, 12)), 6)
        g = rng.integers(-g_radius, g_radius + 1, size=d)
        lhs = phi.action.apply(g, phi(F))
        rhs = phi(F.translate(-g))
        defect = _value_distance(phi.space, lhs, rhs)
        if defect > worst:
            worst, witness = defect, (tuple(int(c) for c in g), F)
    limit = 0 if phi.space.exact else tol
    return EquivarianceReport(worst, worst <= limit, trials, witness)


def lifted_error_map(b: Callable[[Window], float], dim: int = 1) -> SetMap:
    """View a real-valued error map as a scalar set map under the trivial action."""
    return SetMap(b, GroupAction.trivial(dim), ValueSpace("scalar"), "all-windows", "b")

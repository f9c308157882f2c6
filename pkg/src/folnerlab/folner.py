"""Følner sequences, invariance scales and box tilings of Z^d."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator

import numpy as np

from .lattice import SUPPORTED_DIMS, Box, Window, invariance_defect, is_invariant, product_set

DEFAULT_LEVEL_CAP = 64


def _check_dim(d: int) -> None:
    if d not in SUPPORTED_DIMS:
        raise ValueError(f"unsupported dimension {d}; expected one of {SUPPORTED_DIMS}")


@dataclass(frozen=True)
class FolnerSequence:
    """A rule ``n -> F_n`` (n >= 1) together with its kind and dimension."""

    rule: Callable[[int], Window]
    dim: int
    kind: str = "custom-list"

    def __call__(self, n: int) -> Window:
        if n < 1:
            raise ValueError("Følner sequences are indexed from n = 1")
        return self.rule(n)

    def prefix(self, N: int) -> Iterator[Window]:
        for n in range(1, N + 1):
            yield self(n)


def box_folner(d: int) -> FolnerSequence:
    """``F_n = [0, n)^d``."""
    _check_dim(d)
    return FolnerSequence(lambda n: Box([0] * d, [n] * d), d, "boxes")


def translated_box_folner(d: int, drift: Callable[[int], int] | None = None) -> FolnerSequence:
    """Boxes ``[0, n)^d`` pushed along the first axis by ``drift(n)`` (default n^2)."""
    _check_dim(d)
    drift = drift or (lambda n: n * n)

    def rule(n: int) -> Box:
        shift = [drift(n)] + [0] * (d - 1)
        return Box(shift, [s + n for s in shift])

    return FolnerSequence(rule, d, "translated-boxes")


def window_list_folner(windows: list[Window]) -> FolnerSequence:
    """A finite custom sequence; ``F_n = windows[n-1]``."""
    if not windows:
        raise ValueError("need at least one window")
    dim = windows[0].dim
    return FolnerSequence(lambda n: windows[n - 1], dim, "custom-list")


def folner_defect(seq: FolnerSequence, n: int) -> float:
    """Defect of ``F_n`` under the unit stencil ``{0, ±e_i}``."""
    d = seq.dim
    pts = [np.zeros(d, dtype=np.int64)]
    for i in range(d):
        e = np.zeros(d, dtype=np.int64)
        e[i] = 1
        pts += [e, -e]
    return invariance_defect(Window(np.array(pts), d), seq(n))


@dataclass
class TemperedReport:
    D: float
    passed: bool
    ratios: list[float]


def tempered_check(seq: FolnerSequence, N: int, bound: float | None = None) -> TemperedReport:
    """Smallest D with ``|(∪_{i<=n} -F_i) + F_n| <= D |F_n|`` for n <= N.

    The union includes ``i = n`` (the Shulman form used for box sequences,
    giving ``(2n-1)^d`` points). ``bound`` defaults to ``2^d``.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    bound = float(2 ** seq.dim) if bound is None else bound
    ratios = []
    union = None
    for n in range(1, N + 1):
        F = seq(n)
        neg = F.negate()
        union = neg if union is None else union.union(neg)
        ratios.append(product_set(Window(union.points, seq.dim), F).size / F.size)
    D = max(ratios)
    return TemperedReport(D, D <= bound, ratios)


@dataclass(frozen=True)
class CofinalScale:
    """The canonical chain ``K_n = [-n, n]^d``, ``δ_n = 1/n`` (exact rationals)."""

    dim: int

    def __post_init__(self):
        _check_dim(self.dim)

    def K(self, n: int) -> Box:
        return Box([-n] * self.dim, [n + 1] * self.dim)

    def delta(self, n: int) -> Fraction:
        return Fraction(1, n)

    def __call__(self, n: int) -> tuple[Box, Fraction]:
        return self.K(n), self.delta(n)


def _box_invariant_at(F: Box, n: int) -> bool:
    # K_n F is the box inflated by n on every side and contains F,
    # so |K_n F Δ F| = |K_n F| - |F| and δ_n = 1/n.
    inflated = int(np.prod([s + 2 * n for s in F.shape], dtype=object))
    return n * (inflated - F.size) <= F.size


def invariance_level(F: Window, scale: CofinalScale, n_cap: int = DEFAULT_LEVEL_CAP) -> int:
    """Largest ``n <= n_cap`` with F invariant at every level ``m <= n``; 0 if none.

    Levels saturate at ``n_cap``.
    """
    if n_cap < 1:
        raise ValueError("n_cap must be at least 1")
    if F.is_empty():
        raise ValueError("empty window has no invariance level")
    fast = isinstance(F, Box) and scale.dim == F.dim
    level = 0
    for n in range(1, n_cap + 1):
        ok = _box_invariant_at(F, n) if fast else is_invariant(scale.K(n), scale.delta(n), F)
        if not ok:
            break
        level = n
    return level


def min_box_side_for_level(n: int, d: int) -> int:
    """Smallest L with ``[0, L)^d`` at level >= n on the canonical scale."""
    if n <= 0:
        return 1
    L = 1
    while not _box_invariant_at(Box([0] * d, [L] * d), n):
        L += 1
    return L


@dataclass(frozen=True)
class BoxTiling:
    """Tiles ``[0, m)^d + m h`` for h in Z^d."""

    m: int
    dim: int

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("tile side must be positive")
        _check_dim(self.dim)

    @property
    def shape(self) -> Box:
        return Box([0] * self.dim, [self.m] * self.dim)

    def tile(self, h, t=None) -> Box:
        t = np.zeros(self.dim, dtype=np.int64) if t is None else np.asarray(t, dtype=np.int64)
        lo = self.m * np.asarray(h, dtype=np.int64) + t
        return Box(lo, lo + self.m)


@dataclass
class TiledPartition:
    pieces: list[Window]
    full: list[bool]
    offset: tuple = field(default=())

    def __iter__(self):
        return iter(self.pieces)

    def __len__(self) -> int:
        return len(self.pieces)

    @property
    def full_tiles(self) -> list[Window]:
        return [p for p, f in zip(self.pieces, self.full) if f]

    @property
    def fragments(self) -> list[Window]:
        return [p for p, f in zip(self.pieces, self.full) if not f]

    def fragment_points(self) -> int:
        return sum(p.size for p in self.fragments)


def window_partition_by_tiling(F: Window, tiling: BoxTiling, t=None) -> TiledPartition:
    """Cut F along the tiles offset by t; full tiles are flagged."""
    d, m = tiling.dim, tiling.m
    if F.dim != d:
        raise ValueError("dimension mismatch")
    t = np.zeros(d, dtype=np.int64) if t is None else np.asarray(t, dtype=np.int64).reshape(d)
    tile_size = m ** d
    pieces, full = [], []
    if isinstance(F, Box) and F.size > 0:
        # per axis: the cuts of [lo, hi) by the grid t + mZ
        segments = []
        for lo, hi, tk in zip(F.lo, F.hi, t.tolist()):
            first = lo + ((tk - lo) % m or m)
            cuts = [lo] + list(range(first, hi, m)) + [hi]
            segments.append([(a, b) for a, b in zip(cuts, cuts[1:]) if b > a])
        for combo in itertools.product(*segments):
            piece = Box(tuple(a for a, _ in combo), tuple(b for _, b in combo))
            pieces.append(piece)
            full.append(all(b - a == m for a, b in combo))
    elif F.size > 0:
        keys = np.floor_divide(F.points - t, m)
        uniq, inv = np.unique(keys, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        for j in range(uniq.shape[0]):
            piece = Window(F.points[inv == j], d)
            pieces.append(piece)
            full.append(piece.size == tile_size)
    return TiledPartition(pieces, full, tuple(int(c) for c in t))

"""Finite windows in Z^d and their geometry.

A window is a finite set of lattice points stored as a lexicographically
sorted, duplicate-free ``(n, d)`` integer array. Boxes ``[lo, hi)`` get a
subclass whose geometric operations are closed-form, so that windows with
hundreds of thousands of points never need to be materialised.

Conventions follow additive notation on Z^d: the product set ``KF`` is the
Minkowski sum ``K + F`` and a translate ``Kg`` is ``K + g``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

SUPPORTED_DIMS = (1, 2, 3)

LatticePoint = tuple  # tuple[int, ...]


def _canonical(points: np.ndarray) -> np.ndarray:
    """Rows sorted lexicographically with duplicates removed."""
    if points.shape[0] == 0:
        return points
    lo = points.min(axis=0)
    span = points.max(axis=0) - lo + 1
    if float(np.prod(span.astype(float))) >= 2.0 ** 62:
        return np.unique(points, axis=0)
    # mixed-radix key with the first coordinate most significant, so that
    # sorting keys is the same as sorting rows lexicographically
    strides = np.ones(points.shape[1], dtype=np.int64)
    for k in range(points.shape[1] - 2, -1, -1):
        strides[k] = strides[k + 1] * span[k + 1]
    keys = (points - lo) @ strides
    if keys.shape[0] == 1 or np.all(keys[1:] > keys[:-1]):
        return np.ascontiguousarray(points)
    keys = np.unique(keys)
    out = np.empty((keys.shape[0], points.shape[1]), dtype=np.int64)
    for k in range(points.shape[1]):
        out[:, k], keys = np.divmod(keys, strides[k])
    return out + lo


class Window:
    """A finite subset of Z^d (possibly empty when returned by an operation)."""

    __slots__ = ("_points", "dim")

    def __init__(self, points, dim: int | None = None):
        arr = np.asarray(points, dtype=np.int64)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1) if dim in (None, 1) else arr.reshape(-1, dim)
        if arr.ndim != 2:
            raise ValueError("points must be a 2-d array of coordinates")
        if dim is None:
            if arr.shape[0] == 0 and arr.shape[1] == 0:
                raise ValueError("dimension of an empty window must be given")
            dim = arr.shape[1]
        if arr.shape[0] == 0:
            arr = arr.reshape(0, dim)
        if arr.shape[1] != dim:
            raise ValueError(f"expected {dim}-dimensional points, got {arr.shape[1]}")
        self._points = _canonical(arr)
        self._points.setflags(write=False)
        self.dim = dim

    @classmethod
    def from_points(cls, points: Iterable[Sequence[int]], dim: int | None = None) -> "Window":
        pts = [tuple(p) if isinstance(p, (tuple, list, np.ndarray)) else (p,) for p in points]
        if not pts:
            if dim is None:
                raise ValueError("dimension of an empty window must be given")
            return cls(np.zeros((0, dim), dtype=np.int64), dim)
        return cls(np.array(pts, dtype=np.int64), dim)

    @classmethod
    def empty(cls, dim: int) -> "Window":
        return cls(np.zeros((0, dim), dtype=np.int64), dim)

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def size(self) -> int:
        return int(self._points.shape[0])

    def __len__(self) -> int:
        return self.size

    def is_empty(self) -> bool:
        return self.size == 0

    def as_set(self) -> set[tuple[int, ...]]:
        return {tuple(int(c) for c in p) for p in self.points}

    def __iter__(self):
        for p in self.points:
            yield tuple(int(c) for c in p)

    def __contains__(self, point) -> bool:
        p = np.asarray(point, dtype=np.int64).reshape(1, self.dim)
        return bool(_member(p, self.points)[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Window):
            return NotImplemented
        return self.dim == other.dim and self.size == other.size and np.array_equal(self.points, other.points)

    def __hash__(self) -> int:
        return hash((self.dim, self.points.tobytes()))

    def __repr__(self) -> str:
        if self.size <= 6:
            return f"Window({[list(p) for p in self]})"
        return f"Window(d={self.dim}, size={self.size})"

    def translate(self, g) -> "Window":
        g = np.asarray(g, dtype=np.int64).reshape(1, self.dim)
        return Window(self.points + g, self.dim)

    def negate(self) -> "Window":
        return Window(-self.points, self.dim)

    def union(self, other: "Window") -> "Window":
        return Window(np.concatenate([self.points, other.points]), self.dim)

    def intersection(self, other: "Window") -> "Window":
        return Window(self.points[_member(self.points, other.points)], self.dim)

    def difference(self, other: "Window") -> "Window":
        return Window(self.points[~_member(self.points, other.points)], self.dim)

    def bounding_box(self) -> "Box":
        if self.is_empty():
            raise ValueError("empty window has no bounding box")
        return Box(self.points.min(axis=0), self.points.max(axis=0) + 1)

    def is_box(self) -> bool:
        return not self.is_empty() and self.bounding_box().size == self.size

    def to_json(self) -> str:
        return json.dumps(self.to_list())

    def to_list(self) -> list[list[int]]:
        return [list(p) for p in self]

    @classmethod
    def from_json(cls, text: str | list, dim: int | None = None) -> "Window":
        data = json.loads(text) if isinstance(text, str) else text
        return cls.from_points(data, dim)


class Box(Window):
    """The box ``[lo_1, hi_1) x ... x [lo_d, hi_d)``; points are built lazily."""

    __slots__ = ("lo", "hi", "_cache")

    def __init__(self, lo, hi):
        lo = tuple(int(v) for v in (lo if isinstance(lo, (tuple, list)) else np.atleast_1d(lo)))
        hi = tuple(int(v) for v in (hi if isinstance(hi, (tuple, list)) else np.atleast_1d(hi)))
        if len(lo) != len(hi):
            raise ValueError("lo and hi must have the same dimension")
        self.dim = len(lo)
        self.lo = lo
        self.hi = tuple(max(h, l) for l, h in zip(lo, hi))
        self._cache = None

    @classmethod
    def cube(cls, side: int, dim: int, corner=None) -> "Box":
        lo = np.zeros(dim, dtype=np.int64) if corner is None else np.asarray(corner, dtype=np.int64)
        return cls(lo, lo + side)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(h - l for l, h in zip(self.lo, self.hi))

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    @property
    def points(self) -> np.ndarray:
        if self._cache is None:
            axes = [np.arange(l, h, dtype=np.int64) for l, h in zip(self.lo, self.hi)]
            if self.size == 0:
                self._cache = np.zeros((0, self.dim), dtype=np.int64)
            else:
                grid = np.meshgrid(*axes, indexing="ij")
                self._cache = np.stack([g.ravel() for g in grid], axis=1)
            self._cache.setflags(write=False)
        return self._cache

    def __contains__(self, point) -> bool:
        p = tuple(np.atleast_1d(point))
        return all(l <= c < h for c, l, h in zip(p, self.lo, self.hi))

    def __eq__(self, other) -> bool:
        if isinstance(other, Box):
            if self.size == 0 or other.size == 0:
                return self.size == other.size and self.dim == other.dim
            return self.lo == other.lo and self.hi == other.hi
        return Window.__eq__(self, other)

    def __hash__(self) -> int:
        return Window.__hash__(self)

    def __repr__(self) -> str:
        return f"Box(lo={self.lo}, hi={self.hi})"

    def translate(self, g) -> "Box":
        g = np.atleast_1d(np.asarray(g, dtype=np.int64))
        return Box(np.add(self.lo, g), np.add(self.hi, g))

    def negate(self) -> "Box":
        return Box(tuple(1 - h for h in self.hi), tuple(1 - l for l in self.lo))

    def bounding_box(self) -> "Box":
        return self

    def is_box(self) -> bool:
        return self.size > 0

    def intersection(self, other: Window) -> Window:
        if isinstance(other, Box):
            return Box(np.maximum(self.lo, other.lo), np.minimum(self.hi, other.hi))
        return Window.intersection(self, other)


def as_window(obj, dim: int | None = None) -> Window:
    if isinstance(obj, Window):
        return obj
    return Window.from_points(obj, dim)


def _member(query: np.ndarray, pool: np.ndarray) -> np.ndarray:
    """Boolean mask: which rows of ``query`` occur in ``pool``."""
    if query.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    if pool.shape[0] == 0:
        return np.zeros(query.shape[0], dtype=bool)
    lo = np.minimum(query.min(axis=0), pool.min(axis=0))
    span = np.maximum(query.max(axis=0), pool.max(axis=0)) - lo + 1
    strides = np.cumprod(np.concatenate([[1], span[:-1]]))
    qk = ((query - lo) * strides).sum(axis=1)
    pk = ((pool - lo) * strides).sum(axis=1)
    return np.isin(qk, pk)


def _both_boxes(*ws) -> bool:
    return all(isinstance(w, Box) and w.size > 0 for w in ws)


def product_set(K: Window, F: Window) -> Window:
    """The Minkowski sum ``K + F``, deduplicated."""
    if K.dim != F.dim:
        raise ValueError("dimension mismatch")
    if _both_boxes(K, F):
        return Box(np.add(K.lo, F.lo), np.add(K.hi, F.hi) - 1)
    if K.is_empty() or F.is_empty():
        return Window.empty(F.dim)
    sums = (K.points[:, None, :] + F.points[None, :, :]).reshape(-1, F.dim)
    return Window(sums, F.dim)


def symmetric_difference_size(K: Window, F: Window) -> int:
    """``|KF Δ F|``."""
    KF = product_set(K, F)
    if _both_boxes(KF, F):
        common = KF.intersection(F).size
    else:
        common = int(_member(F.points, KF.points).sum())
    return KF.size + F.size - 2 * common


def invariance_defect(K: Window, F: Window) -> float:
    """``|KF Δ F| / |F|``; F is (K, δ)-invariant iff this is at most δ."""
    if F.is_empty():
        raise ValueError("invariance defect of an empty window is undefined")
    return symmetric_difference_size(K, F) / F.size


def is_invariant(K: Window, delta: float, F: Window) -> bool:
    # integer comparison avoids rounding at the threshold
    return symmetric_difference_size(K, F) <= delta * F.size


def k_interior(K: Window, F: Window) -> Window:
    """``{g : K + g ⊆ F}``; may be empty."""
    if _both_boxes(K, F):
        return Box(np.subtract(F.lo, K.lo), np.subtract(F.hi, K.hi) + 1)
    if K.is_empty() or F.is_empty():
        return Window.empty(F.dim)
    cand = F.points - K.points[0]
    ok = np.ones(cand.shape[0], dtype=bool)
    for k in K.points:
        ok &= _member(cand + k, F.points)
    return Window(cand[ok], F.dim)


def k_boundary(K: Window, F: Window) -> Window:
    """``{g : K+g meets F and meets its complement}``; may be empty."""
    if K.is_empty() or F.is_empty():
        return Window.empty(F.dim)
    reach = product_set(K.negate(), F)  # every g with (K+g) ∩ F ≠ ∅
    inner = k_interior(K, F)
    return Window(reach.points[~_member(reach.points, inner.points)], F.dim)


def boundary_size(K: Window, F: Window) -> int:
    """``|∂_K(F)|`` without materialising points when K and F are boxes."""
    if _both_boxes(K, F):
        return product_set(K.negate(), F).size - k_interior(K, F).size
    return k_boundary(K, F).size


@dataclass(frozen=True)
class InvarianceParams:
    K: Window
    delta: float

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.K.is_empty():
            raise ValueError("K must be nonempty")

    def admits(self, F: Window) -> bool:
        return is_invariant(self.K, self.delta, F)


def boundary_control_params(K0: Window, delta0: float) -> InvarianceParams:
    """(K, δ) with ``|∂_{K0}(F)| <= δ0 |F|`` for every (K, δ)-invariant F.

    K is K0 symmetrised with the origin added and δ = δ0 / (1 + |K|).
    """
    if delta0 <= 0:
        raise ValueError("delta0 must be positive")
    origin = np.zeros((1, K0.dim), dtype=np.int64)
    K = Window(np.concatenate([K0.points, -K0.points, origin]), K0.dim)
    if K.is_box():
        K = K.bounding_box()  # keeps later invariance tests on the closed-form path
    return InvarianceParams(K, delta0 / (1 + K.size))


def random_window(rng: np.random.Generator, dim: int, size: int, spread: int | None = None) -> Window:
    """A window of exactly ``size`` distinct points drawn from ``[-spread, spread]^dim``."""
    if size < 1:
        raise ValueError("size must be positive")
    spread = spread if spread is not None else max(2, int(np.ceil(size ** (1.0 / dim))))
    side = 2 * spread + 1
    if side ** dim < size:
        raise ValueError("spread too small for the requested size")
    flat = rng.choice(side ** dim, size=size, replace=False)
    pts = np.stack(np.unravel_index(flat, (side,) * dim), axis=1) - spread
    return Window(pts, dim)


def box_family(dim: int, max_side: int, translate=None) -> list[Box]:
    """All cubes ``[0, L)^dim`` (optionally translated) for ``1 <= L <= max_side``."""
    corner = np.zeros(dim, dtype=np.int64) if translate is None else np.asarray(translate)
    return [Box.cube(L, dim, corner) for L in range(1, max_side + 1)]

"""Value spaces: scalars, vectors, exact step functions on [0,1], sampled functions.

``PwcFunction`` realises the step-function part of L^p([0,1]). When every
breakpoint and level is an ``int`` or ``Fraction`` all arithmetic, lattice
operations, integrals and the L^1 norm are exact; as soon as a float enters,
the same code runs in floating point.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Any, Callable, Sequence

import numpy as np


class OrderUndefinedError(TypeError):
    """Raised when a lattice operation is requested on an unordered space."""


def _num(x):
    if isinstance(x, (int, Fraction)):
        return x
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    return float(x)


def _is_exact(x) -> bool:
    return isinstance(x, (int, Fraction))


class PwcFunction:
    """Right-open step function: ``levels[i]`` on ``[breakpoints[i], breakpoints[i+1])``."""

    __slots__ = ("breakpoints", "levels")

    def __init__(self, breakpoints: Sequence, levels: Sequence):
        bps = [_num(b) for b in breakpoints]
        lvs = [_num(v) for v in levels]
        if len(bps) < 2 or len(lvs) != len(bps) - 1:
            raise ValueError("need len(levels) == len(breakpoints) - 1 >= 1")
        if bps[0] != 0 or bps[-1] != 1:
            raise ValueError("breakpoints must start at 0 and end at 1")
        if any(b1 < b0 for b0, b1 in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be non-decreasing")
        self._set_canonical(bps, lvs)

    def _set_canonical(self, bps: list, lvs: list) -> None:
        # canonical form: drop empty pieces, merge equal neighbours
        out_b, out_l = [bps[0]], []
        for b0, b1, v in zip(bps, bps[1:], lvs):
            if b1 == b0:
                continue
            if out_l and out_l[-1] == v:
                out_b[-1] = b1
            else:
                out_l.append(v)
                out_b.append(b1)
        self.breakpoints = tuple(out_b)
        self.levels = tuple(out_l)

    @classmethod
    def _from_valid(cls, bps: list, lvs: list) -> "PwcFunction":
        """Build from strictly increasing breakpoints on [0, 1] and normalised levels."""
        out = cls.__new__(cls)
        out._set_canonical(bps, lvs)
        return out

    # constructors
    @classmethod
    def constant(cls, c) -> "PwcFunction":
        return cls([0, 1], [c])

    @classmethod
    def zero(cls) -> "PwcFunction":
        return cls([0, 1], [0])

    @classmethod
    def indicator(cls, a, b, height=1) -> "PwcFunction":
        """``height * 1_[a,b]`` with the interval clipped to [0,1]."""
        a, b = _num(a), _num(b)
        a = a if a > 0 else 0
        b = b if b < 1 else 1
        if b <= a:
            return cls.zero()
        return cls([0, a, b, 1], [0, height, 0])

    # basic protocol
    @property
    def is_exact(self) -> bool:
        return all(map(_is_exact, self.breakpoints)) and all(map(_is_exact, self.levels))

    def pieces(self):
        return zip(self.breakpoints, self.breakpoints[1:], self.levels)

    def __call__(self, x):
        x = _num(x)
        if not 0 <= x <= 1:
            raise ValueError("evaluation point outside [0,1]")
        for lo, hi, v in self.pieces():
            if lo <= x < hi:
                return v
        return self.levels[-1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, PwcFunction):
            return NotImplemented
        return self.breakpoints == other.breakpoints and self.levels == other.levels

    def __hash__(self) -> int:
        return hash((self.breakpoints, self.levels))

    def __repr__(self) -> str:
        return f"PwcFunction(breakpoints={list(self.breakpoints)}, levels={list(self.levels)})"

    # pointwise combination on the common refinement
    def _combine(self, other: "PwcFunction", op: Callable) -> "PwcFunction":
        # linear merge of the two sorted breakpoint lists
        a, b = self.breakpoints, other.breakpoints
        la, lb = self.levels, other.levels
        bps, lv = [a[0]], []
        i = j = 0
        na, nb = len(la), len(lb)
        while i < na and j < nb:
            lv.append(_num(op(la[i], lb[j])))
            ha, hb = a[i + 1], b[j + 1]
            if ha < hb:
                bps.append(ha)
                i += 1
            elif hb < ha:
                bps.append(hb)
                j += 1
            else:
                bps.append(ha)
                i += 1
                j += 1
        return PwcFunction._from_valid(bps, lv)

    def _map(self, op: Callable) -> "PwcFunction":
        return PwcFunction._from_valid(self.breakpoints, [_num(op(v)) for v in self.levels])

    def __add__(self, other):
        if isinstance(other, PwcFunction):
            return self._combine(other, lambda a, b: a + b)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, PwcFunction):
            return self._combine(other, lambda a, b: a - b)
        return NotImplemented

    def __neg__(self):
        return self._map(lambda a: -a)

    def __mul__(self, c):
        if isinstance(c, (Real, Fraction)):
            c = _num(c)
            return self._map(lambda a: a * c)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, c):
        c = _num(c)
        return self._map(lambda a: Fraction(a, 1) / c if _is_exact(a) and _is_exact(c) else a / c)

    # lattice structure
    def join(self, other: "PwcFunction") -> "PwcFunction":
        return self._combine(other, max)

    def meet(self, other: "PwcFunction") -> "PwcFunction":
        return self._combine(other, min)

    def __abs__(self) -> "PwcFunction":
        return self._map(abs)

    def positive_part(self) -> "PwcFunction":
        return self._map(lambda a: a if a > 0 else 0)

    def le(self, other: "PwcFunction", slack=0) -> bool:
        """Pointwise ``self <= other`` (a.e.)."""
        return max_excess(self, other) <= slack

    # integrals and norms
    def integral(self):
        total = 0
        for lo, hi, v in self.pieces():
            total += v * (hi - lo)
        return total

    def lp_norm(self, p=1):
        if p == math.inf or p == "inf":
            return max(abs(v) for v in self.levels)
        if p < 1:
            raise ValueError("p must lie in [1, inf]")
        if p == 1:
            return sum(abs(v) * (hi - lo) for lo, hi, v in self.pieces())
        s = math.fsum(float(abs(v)) ** p * float(hi - lo) for lo, hi, v in self.pieces())
        return s ** (1.0 / p)

    # serialisation
    def to_dict(self) -> dict:
        enc = lambda x: f"{x.numerator}/{x.denominator}" if isinstance(x, Fraction) else x
        return {"breakpoints": [enc(b) for b in self.breakpoints], "levels": [enc(v) for v in self.levels]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "PwcFunction":
        return cls(d["breakpoints"], d["levels"])

    @classmethod
    def from_json(cls, text: str) -> "PwcFunction":
        return cls.from_dict(json.loads(text))


def max_excess(f: PwcFunction, g: PwcFunction):
    """``ess sup (f - g)^+``: zero iff ``f <= g`` a.e."""
    d = f - g
    return max(max(d.levels), 0)


# generic dispatch over value kinds -------------------------------------------

def _is_scalar(x) -> bool:
    return isinstance(x, (Real, Fraction)) and not isinstance(x, bool)


def _require_order(u) -> None:
    if not (isinstance(u, PwcFunction) or _is_scalar(u)):
        raise OrderUndefinedError(f"no lattice order on values of type {type(u).__name__}")


def lattice_join(u, v):
    _require_order(u)
    _require_order(v)
    if isinstance(u, PwcFunction):
        return u.join(v)
    return max(u, v)


def lattice_meet(u, v):
    _require_order(u)
    _require_order(v)
    if isinstance(u, PwcFunction):
        return u.meet(v)
    return min(u, v)


def lattice_abs(u):
    _require_order(u)
    return abs(u)


def lattice_le(u, v, slack=0) -> bool:
    _require_order(u)
    _require_order(v)
    if isinstance(u, PwcFunction):
        return u.le(v, slack)
    return u <= v + slack


def lp_norm(f, p=1):
    """Norm of a value; exact for pwc with p=1 or p=inf on the rational path."""
    if isinstance(f, PwcFunction):
        return f.lp_norm(p)
    if _is_scalar(f):
        return abs(f)
    if isinstance(f, np.ndarray):
        return float(np.linalg.norm(f.ravel(), ord=np.inf if p in (math.inf, "inf") else p))
    if hasattr(f, "lp_norm"):
        return f.lp_norm(p)
    raise TypeError(f"no norm for values of type {type(f).__name__}")


def integral(f: PwcFunction):
    if not isinstance(f, PwcFunction):
        raise TypeError("integral is defined for step functions")
    return f.integral()


@dataclass(frozen=True)
class ValueSpace:
    """A concrete normed value space.

    ``sampler`` is required for the sampled kind and supplies the sample set
    on which lazy shift-space functions are evaluated.
    """

    kind: str = "scalar"  # scalar | vector | pwc | sampled
    dim: int | None = None
    p: float = 1.0
    sampler: Any = None

    def __post_init__(self):
        if self.kind not in ("scalar", "vector", "pwc", "sampled"):
            raise ValueError(f"unknown value space kind {self.kind!r}")
        if self.kind == "vector" and not self.dim:
            raise ValueError("vector spaces need a dimension")
        if self.kind == "sampled" and self.sampler is None:
            raise ValueError("sampled spaces need a sampler")
        if not (self.p == math.inf or self.p >= 1):
            raise ValueError("p must lie in [1, inf]")

    @property
    def ordered(self) -> bool:
        return self.kind in ("scalar", "pwc")

    @property
    def exact(self) -> bool:
        return self.kind in ("scalar", "pwc")

    def zero(self):
        if self.kind == "scalar":
            return 0
        if self.kind == "vector":
            return np.zeros(self.dim)
        if self.kind == "pwc":
            return PwcFunction.zero()
        from .shift import ShiftFunction

        return ShiftFunction.constant(0.0)

    def norm(self, v):
        if self.kind == "sampled":
            return self.sampler.norm(v, self.p)
        return lp_norm(v, self.p)

    def distance(self, u, v):
        return self.norm(u - v)

"""Functions on the full shift ``A^(Z^d)`` evaluated on seeded sample sets.

Configurations are never materialised. The symbol of sample ``s`` at
coordinate ``c`` is a pure function of ``(seed, s, c)`` via a splitmix64
counter hash, so every coordinate of every sample can be read in any order
and the shifted configuration ``σ^g ω`` is simply a read at ``c + g``.

Convention: ``(σ^g ω)_c = ω_{c+g}`` and the Koopman operator is
``κ(g) f (ω) = f(σ^{-g} ω)``, so the Birkhoff sum ``S_F f = Σ_{g∈F} κ(-g) f``
evaluates to ``Σ_{g∈F} f(σ^g ω)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .lattice import Window

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_CHUNK = 1 << 22
# Birkhoff sums of cylinders with at most this many monomials stay explicit
EXPLICIT_BIRKHOFF_TERMS = 256


def splitmix64(x: np.ndarray) -> np.ndarray:
    """Vectorised splitmix64 finaliser on uint64 arrays (wrapping arithmetic)."""
    z = np.asarray(x, dtype=np.uint64) + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _as_u64(a) -> np.ndarray:
    return np.asarray(a, dtype=np.int64).astype(np.uint64)


@dataclass(frozen=True)
class SampleSet:
    """A finite set of shift-space configurations.

    ``mode="random"``: ``n_samples`` i.i.d. configurations of the product
    measure with one-site law ``probs`` over symbols ``0..alphabet-1``.
    ``mode="exhaustive"`` (d = 1): every word on coordinates
    ``[origin, origin + length)``; reading outside that range is an error.
    """

    probs: tuple = (0.5, 0.5)
    seed: int = 0
    n_samples: int = 10_000
    dim: int = 1
    mode: str = "random"
    length: int = 0
    origin: int = 0
    _cum: np.ndarray = field(init=False, repr=False, compare=False)
    _last: tuple = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        probs = tuple(float(q) for q in self.probs)
        if len(probs) < 2 or min(probs) < 0 or not math.isclose(sum(probs), 1.0, abs_tol=1e-12):
            raise ValueError("probs must be a probability vector over >= 2 symbols")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "_cum", np.cumsum(probs)[:-1])
        if self.mode == "exhaustive":
            if self.dim != 1:
                raise ValueError("exhaustive sample sets are one-dimensional")
            count = len(probs) ** self.length
            if count > 1 << 22:
                raise ValueError("exhaustive enumeration too large")
            object.__setattr__(self, "n_samples", count)
        elif self.mode != "random":
            raise ValueError(f"unknown sampling mode {self.mode!r}")
        if self.n_samples < 1:
            raise ValueError("need at least one sample")

    @classmethod
    def bernoulli(cls, p: float, seed: int, n_samples: int = 10_000, dim: int = 1) -> "SampleSet":
        """Binary alphabet with ``P(x = 1) = p``."""
        return cls((1.0 - p, p), seed, n_samples, dim)

    @classmethod
    def exhaustive(cls, length: int, alphabet: int = 2, origin: int = 0) -> "SampleSet":
        return cls(tuple([1.0 / alphabet] * alphabet), 0, 1, 1, "exhaustive", length, origin)

    @classmethod
    def from_config(cls, cfg: dict) -> "SampleSet":
        alphabet = int(cfg.get("alphabet", 2))
        p = cfg.get("p", 0.5)
        probs = (1.0 - p, p) if isinstance(p, (int, float)) and alphabet == 2 else tuple(p)
        return cls(probs, int(cfg["seed"]), int(cfg.get("n_samples", 10_000)), int(cfg.get("dim", 1)))

    @property
    def alphabet(self) -> int:
        return len(self.probs)

    @property
    def mean_symbol(self) -> float:
        return float(sum(a * q for a, q in enumerate(self.probs)))

    def symbols(self, coords, samples=None) -> np.ndarray:
        """Symbols at ``coords`` (shape (k,) for d=1 or (k, d)) -> array (S, k)."""
        c = np.asarray(coords, dtype=np.int64)
        if c.ndim == 1:
            c = c.reshape(-1, 1) if self.dim == 1 else c.reshape(1, -1)
        if c.shape[-1] != self.dim:
            raise ValueError("coordinate dimension mismatch")
        s_idx = np.arange(self.n_samples) if samples is None else np.asarray(samples, dtype=np.int64)
        if self.mode == "exhaustive":
            rel = c[:, 0] - self.origin
            if rel.size and (rel.min() < 0 or rel.max() >= self.length):
                raise ValueError("coordinate outside the enumerated window")
            k = self.alphabet
            return ((s_idx[:, None] // (k ** rel)[None, :]) % k).astype(np.intp)
        ckey = np.full(c.shape[0], np.uint64(self.dim), dtype=np.uint64)
        for j in range(self.dim):
            ckey = splitmix64(ckey ^ _as_u64(c[:, j]))
        base = splitmix64(np.array([self.seed], dtype=np.int64).astype(np.uint64))
        out = np.empty((s_idx.size, c.shape[0]), dtype=np.intp)
        step = max(1, _CHUNK // max(c.shape[0], 1))
        for lo in range(0, s_idx.size, step):
            skey = splitmix64(base ^ _as_u64(s_idx[lo:lo + step]))
            h = splitmix64(skey[:, None] ^ ckey[None, :])
            if self._cum.size == 1:
                # u >= c  <=>  (h >> 11) >= ceil(c * 2^53): same symbols, no float pass
                thr = np.uint64(math.ceil(float(self._cum[0]) * 9007199254740992.0))
                out[lo:lo + step] = (h >> np.uint64(11)) >= thr
            else:
                u = (h >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
                out[lo:lo + step] = np.searchsorted(self._cum, u, side="right")
        return out

    def words(self, start: int, length: int) -> np.ndarray:
        """1-d symbols on ``[start, start + length)``, shape (S, length).

        The most recent block is kept so that a sub-range request (e.g. φ(F)
        after ``A_F v`` on the same window) is a slice rather than a re-hash.
        """
        last = self._last
        if last is not None and last[0] <= start and start + length <= last[0] + last[1].shape[1]:
            off = start - last[0]
            return last[1][:, off:off + length]
        out = self.symbols(np.arange(start, start + length))
        if out.size >= 1 << 16:
            object.__setattr__(self, "_last", (start, out))
        return out

    def values(self, f: "ShiftFunction", shift=None) -> np.ndarray:
        return f.evaluate(self, shift)

    def norm(self, f, p=math.inf) -> float:
        vals = np.abs(f.evaluate(self) if isinstance(f, ShiftFunction) else np.asarray(f, dtype=float))
        if vals.ndim > 1:
            vals = vals.max(axis=tuple(range(1, vals.ndim)))
        if p == math.inf:
            return float(vals.max())
        return float(np.mean(vals ** p) ** (1.0 / p))

    def to_config(self) -> dict:
        return {"alphabet": self.alphabet, "p": list(self.probs), "seed": self.seed, "n_samples": self.n_samples}


def _shift_vec(shift, dim: int) -> np.ndarray:
    if shift is None:
        return np.zeros(dim, dtype=np.int64)
    return np.atleast_1d(np.asarray(shift, dtype=np.int64)).reshape(dim)


class ShiftFunction:
    """A lazily evaluated real function on the shift.

    ``fn(samples, shift)`` returns ``f(σ^shift ω_s)`` for every sample s.
    """

    def __init__(self, fn: Callable[[SampleSet, np.ndarray], np.ndarray], dim: int = 1, label: str = "f"):
        self._fn = fn
        self.dim = dim
        self.label = label

    @classmethod
    def constant(cls, c: float, dim: int = 1) -> "ShiftFunction":
        return cls(lambda ss, h: np.full(ss.n_samples, float(c)), dim, f"const({c})")

    def evaluate(self, samples: SampleSet, shift=None) -> np.ndarray:
        return self._fn(samples, _shift_vec(shift, self.dim))

    def translate(self, g) -> "ShiftFunction":
        """``κ(g) f``: ``ω ↦ f(σ^{-g} ω)``."""
        g = _shift_vec(g, self.dim)
        return ShiftFunction(lambda ss, h: self._fn(ss, h - g), self.dim, f"k({g.tolist()}){self.label}")

    def birkhoff(self, F: Window) -> "ShiftFunction":
        """``S_F f = Σ_{g∈F} κ(-g) f``."""
        pts = F.points.copy()
        return ShiftFunction(lambda ss, h: self._birkhoff_values(ss, pts, h), self.dim, f"S[{F.size}]{self.label}")

    def _birkhoff_values(self, samples: SampleSet, pts: np.ndarray, h: np.ndarray) -> np.ndarray:
        total = np.zeros(samples.n_samples)
        for g in pts:
            total += self._fn(samples, h + g)
        return total

    def _lift(self, other, op, label):
        if isinstance(other, ShiftFunction):
            return ShiftFunction(lambda ss, h: op(self._fn(ss, h), other._fn(ss, h)), self.dim, label)
        c = float(other)
        return ShiftFunction(lambda ss, h: op(self._fn(ss, h), c), self.dim, label)

    def __add__(self, other):
        return self._lift(other, np.add, f"({self.label}+...)")

    __radd__ = __add__

    def __sub__(self, other):
        return self._lift(other, np.subtract, f"({self.label}-...)")

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return ShiftFunction(lambda ss, h: -self._fn(ss, h), self.dim, f"-{self.label}")

    def __mul__(self, c):
        c = float(c)
        return ShiftFunction(lambda ss, h: c * self._fn(ss, h), self.dim, f"{c}*{self.label}")

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / float(c))

    def __repr__(self) -> str:
        return f"ShiftFunction({self.label})"


class CylinderFunction(ShiftFunction):
    """A polynomial in finitely many coordinates: ``Σ_S c_S Π_{i∈S} x_i``.

    Monomials are keyed by frozensets of sites (coordinate tuples); the empty
    set is the constant term. Because sites in a monomial are distinct, the
    integral under a product measure is ``Σ_S c_S m^{|S|}`` with ``m`` the
    one-site mean, computed exactly.
    """

    def __init__(self, terms: dict, dim: int = 1):
        clean = {}
        for sites, c in terms.items():
            key = frozenset(tuple(int(v) for v in np.atleast_1d(s)) for s in sites)
            if any(len(s) != dim for s in key):
                raise ValueError("site dimension mismatch")
            clean[key] = clean.get(key, 0) + c
        self.terms = {k: v for k, v in clean.items() if v != 0}
        super().__init__(self._eval, dim, "cyl")

    @classmethod
    def coordinate(cls, site=0, dim: int = 1) -> "CylinderFunction":
        site = tuple(np.atleast_1d(site).tolist()) if dim > 1 else (int(site),)
        return cls({(site,): 1}, dim)

    @classmethod
    def monomial(cls, sites, coef=1, dim: int = 1) -> "CylinderFunction":
        return cls({tuple(sites): coef}, dim)

    @classmethod
    def constant_term(cls, c, dim: int = 1) -> "CylinderFunction":
        return cls({(): c}, dim)

    def _eval(self, samples: SampleSet, h: np.ndarray) -> np.ndarray:
        out = np.zeros(samples.n_samples)
        for sites, c in self.terms.items():
            if not sites:
                out += float(c)
                continue
            coords = np.array(sorted(sites), dtype=np.int64) + h
            out += float(c) * samples.symbols(coords).prod(axis=1)
        return out

    def birkhoff(self, F: Window) -> ShiftFunction:
        """``S_F f``; kept as an explicit cylinder while it has few monomials.

        Small sums (tile averages, say) then stay in closed form, so their
        own Birkhoff sums and exact means remain available.
        """
        if F.size * max(1, len(self.terms)) > EXPLICIT_BIRKHOFF_TERMS:
            return super().birkhoff(F)
        out = CylinderFunction({}, self.dim)
        for g in F.points:
            out = out + self.translate(-g)
        return out

    def _birkhoff_values(self, samples, pts, h):
        out = np.zeros(samples.n_samples)
        for sites, c in self.terms.items():
            if not sites:
                out += float(c) * len(pts)
                continue
            prod = None
            for s in sorted(sites):
                x = samples.symbols(pts + np.asarray(s) + h)
                prod = x if prod is None else prod * x
            out += float(c) * prod.sum(axis=1)
        return out

    def translate(self, g) -> "CylinderFunction":
        g = _shift_vec(g, self.dim)
        return CylinderFunction(
            {tuple(tuple(np.subtract(s, g).tolist()) for s in sites): c for sites, c in self.terms.items()},
            self.dim,
        )

    def _combine(self, other, sign):
        if isinstance(other, CylinderFunction):
            terms = dict(self.terms)
            for k, v in other.terms.items():
                terms[k] = terms.get(k, 0) + sign * v
            return CylinderFunction(terms, self.dim)
        if isinstance(other, (int, float, Fraction)):
            return self._combine(CylinderFunction.constant_term(other, self.dim), sign)
        return None

    def __add__(self, other):
        res = self._combine(other, 1)
        return res if res is not None else ShiftFunction.__add__(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        res = self._combine(other, -1)
        return res if res is not None else ShiftFunction.__sub__(self, other)

    def __neg__(self):
        return CylinderFunction({k: -v for k, v in self.terms.items()}, self.dim)

    def __mul__(self, c):
        if isinstance(c, (int, float, Fraction)):
            return CylinderFunction({k: c * v for k, v in self.terms.items()}, self.dim)
        return NotImplemented

    __rmul__ = __mul__

    def mean(self, site_mean):
        """Exact integral under a product measure with one-site mean ``site_mean``."""
        return sum(c * site_mean ** len(sites) for sites, c in self.terms.items())

    def __repr__(self) -> str:
        return f"CylinderFunction({ {tuple(sorted(k)): v for k, v in self.terms.items()} })"


def coboundary(h: CylinderFunction, g) -> CylinderFunction:
    """``h - κ(g) h``."""
    return h - h.translate(g)


class WordFunction(ShiftFunction):
    """1-d function ``scale * word_fn(ω_origin … ω_{origin+m-1})``.

    ``word_fn`` maps an (S, m) symbol array to (S,). An optional ``sliding``
    ``(words (S, L), m) -> (S, L-m+1)`` evaluates every length-m window of a
    longer word at once and is used for Birkhoff sums over intervals.
    """

    def __init__(self, word_fn, m: int, origin: int = 0, sliding=None, label: str = "w", scale: float = 1.0):
        if m < 1:
            raise ValueError("word length must be positive")
        self.word_fn = word_fn
        self.m = m
        self.origin = origin
        self.sliding = sliding
        self.scale = float(scale)
        super().__init__(self._eval, 1, label)

    def _eval(self, samples, h):
        vals = self.word_fn(samples.words(self.origin + int(h[0]), self.m))
        return vals * self.scale if self.scale != 1.0 else vals

    def _replace(self, origin=None, scale=None, label=None) -> "WordFunction":
        return WordFunction(self.word_fn, self.m, self.origin if origin is None else origin, self.sliding,
                            self.label if label is None else label, self.scale if scale is None else scale)

    def translate(self, g) -> "WordFunction":
        g = int(_shift_vec(g, 1)[0])
        return self._replace(origin=self.origin - g)

    def __mul__(self, c):
        if isinstance(c, (int, float, Fraction, np.floating, np.integer)):
            return self._replace(scale=self.scale * float(c), label=f"{float(c)}*{self.label}")
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / float(c))

    def window_values(self, words: np.ndarray) -> np.ndarray:
        """Values on every length-m window of ``words`` (S, L) -> (S, L-m+1)."""
        if self.sliding is not None:
            vals = self.sliding(words, self.m)
        else:
            L = words.shape[1]
            vals = np.stack([self.word_fn(words[:, i:i + self.m]) for i in range(L - self.m + 1)], axis=1)
        return vals * self.scale if self.scale != 1.0 else vals

    def _birkhoff_values(self, samples, pts, h):
        g = pts[:, 0]
        lo, hi = int(g.min()), int(g.max())
        if hi - lo + 1 != g.size:  # not an interval: generic path
            return ShiftFunction._birkhoff_values(self, samples, pts, h)
        start = self.origin + lo + int(h[0])
        words = samples.words(start, hi - lo + self.m)
        return self.window_values(words).sum(axis=1)

    def birkhoff_from_words(self, words: np.ndarray) -> np.ndarray:
        """``S_[0,n) f`` when ``words`` holds coordinates ``[origin, origin + n + m - 1)``."""
        return self.window_values(words).sum(axis=1)


def iter_words(length: int, alphabet: int = 2) -> np.ndarray:
    """All words of the given length in lexicographic order, shape (alphabet^length, length)."""
    return word_block(length, 0, alphabet ** length, alphabet)


def word_block(length: int, start: int, count: int, alphabet: int = 2) -> np.ndarray:
    """Words ``start .. start+count-1`` of the lexicographic enumeration (first letter most significant)."""
    if length == 0:
        return np.zeros((count, 0), dtype=np.intp)
    idx = np.arange(start, start + count, dtype=np.int64)[:, None]
    place = np.int64(alphabet) ** np.arange(length - 1, -1, -1, dtype=np.int64)[None, :]
    return ((idx // place) % alphabet).astype(np.intp)

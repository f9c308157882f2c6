"""Sequences of functions on the full shift {0,1}^Z and on [0,1].

A :class:`FunctionSequence` is a rule ``words (S, n) -> f_n`` evaluated on
the first n coordinates of each configuration. Sup norms are exact when all
cylinders of the relevant length can be enumerated (``n <= EXHAUSTIVE_MAX``)
and are otherwise estimated on seeded random words; every report says which
regime produced it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .lattice import Window
from .setmaps import GroupAction, SetMap
from .shift import SampleSet, ShiftFunction, WordFunction, iter_words, splitmix64
from .values import PwcFunction, ValueSpace

EXHAUSTIVE_MAX = 14
DEFAULT_SAMPLES = 10_000
ERDOS_TERMS = 10 ** 7
WORD_BLOCK = 1 << 20


# function sequences ------------------------------------------------------------

class FunctionSequence:
    """``n ↦ f_n`` with ``f_n`` a function of the word ``x_0 … x_{n-1}``.

    ``word_rule(words)`` maps an integer array (S, n) to f_n values (S,);
    ``sliding(words, m)`` optionally evaluates f_m on every length-m window
    of longer words at once.
    """

    def __init__(self, word_rule: Callable[[np.ndarray], np.ndarray], label: str = "f",
                 sliding: Callable[[np.ndarray, int], np.ndarray] | None = None, alphabet: int = 2):
        self.word_rule = word_rule
        self.label = label
        self.sliding = sliding
        self.alphabet = alphabet

    def values(self, words: np.ndarray) -> np.ndarray:
        words = np.asarray(words, dtype=np.intp)
        if words.shape[1] == 0:
            return np.zeros(words.shape[0])
        return np.asarray(self.word_rule(words), dtype=float)

    def window_values(self, words: np.ndarray, m: int) -> np.ndarray:
        """f_m on every length-m window: (S, L) -> (S, L - m + 1)."""
        if self.sliding is not None:
            return self.sliding(words, m)
        L = words.shape[1]
        return np.stack([self.values(words[:, i:i + m]) for i in range(L - m + 1)], axis=1)

    def function(self, n: int, origin: int = 0) -> WordFunction:
        """``f_n ∘ T^origin`` as a lazily evaluated shift function."""
        return WordFunction(self.values, n, origin, self.sliding, f"{self.label}_{n}")

    def set_map(self, sampler: SampleSet, p=math.inf) -> SetMap:
        """Intervals ``[a, b) ↦ f_{b-a} ∘ T^a`` under the Koopman action."""
        space = ValueSpace("sampled", p=p, sampler=sampler)

        def rule(F: Window):
            a, b = int(F.lo[0]), int(F.hi[0])
            return self.function(b - a, a)

        return SetMap(rule, GroupAction.koopman(1), space, "boxes-only", self.label)

    def words(self, n: int, samples: int = DEFAULT_SAMPLES, seed: int = 0, p: float = 0.5,
              exhaustive_max: int = EXHAUSTIVE_MAX) -> tuple[np.ndarray, str]:
        """All words of length n when feasible, otherwise seeded Bernoulli(p) words."""
        if n <= exhaustive_max:
            return iter_words(n, self.alphabet), "exact"
        return SampleSet.bernoulli(p, seed, samples).words(0, n), "sampled"

    def range(self, n: int, **kw) -> tuple[float, float, str]:
        """``(min f_n, max f_n)`` over cylinders (or samples) and the regime used."""
        w, regime = self.words(n, **kw)
        vals = self.values(w)
        return float(vals.min()), float(vals.max()), regime

    def sup_norm(self, n: int, **kw) -> tuple[float, str]:
        lo, hi, regime = self.range(n, **kw)
        return max(abs(lo), abs(hi)), regime

    def __add__(self, other: "FunctionSequence") -> "FunctionSequence":
        return FunctionSequence(lambda w: self.values(w) + other.values(w), f"{self.label}+{other.label}")


def birkhoff_sequence(phi_rule: Callable[[np.ndarray], np.ndarray], label: str = "S_n phi") -> FunctionSequence:
    """``f_n = S_n φ`` for a one-coordinate observable ``φ(x) = phi_rule(x_0)``."""

    def rule(words):
        return phi_rule(words).sum(axis=1)

    def sliding(words, m):
        c = np.concatenate([np.zeros((words.shape[0], 1)), np.cumsum(phi_rule(words), axis=1)], axis=1)
        return c[:, m:] - c[:, :-m]

    return FunctionSequence(rule, label, sliding)


def offset_sequence(fseq: FunctionSequence, C: "ErrorSequence", sign: int = 1) -> FunctionSequence:
    """``f_n + sign * C_n``; with ``C_{n+m} <= C_n + C_m`` this meets the two-sided defect bound with C."""
    def rule(words):
        n = words.shape[1]
        return fseq.values(words) + sign * float(C(n))

    return FunctionSequence(rule, f"{fseq.label}{'+' if sign > 0 else '-'}C")


# matrix cocycles -----------------------------------------------------------------

def _positive(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.shape != (2, 2):
        raise ValueError("cocycle matrices must be 2x2")
    if not np.all(M > 0):
        raise ValueError("cocycle matrices must have strictly positive entries")
    return M


def matrix_cocycle_seq(A0, A1, allow_nonnegative: bool = False) -> FunctionSequence:
    """``f_n(x) = log ‖A_{x_0} ⋯ A_{x_{n-1}}‖`` with the max-row-sum norm.

    ``allow_nonnegative`` admits matrices such as the identity for which the
    positivity hypothesis is not needed by the caller.
    """
    if allow_nonnegative:
        mats = np.stack([np.asarray(A0, dtype=float), np.asarray(A1, dtype=float)])
        if np.any(mats < 0):
            raise ValueError("cocycle matrices must be non-negative")
    else:
        mats = np.stack([_positive(A0), _positive(A1)])

    def rule(words):
        return kernels.product_lognorms(mats, words)

    def sliding(words, m):
        return kernels.window_lognorms(mats, words, m)

    seq = FunctionSequence(rule, "log||A_x||", sliding)
    seq.mats = mats
    return seq


def cocycle_constant(A0, A1) -> float:
    """A constant C with ``|f_{n+m} − f_n − f_m∘T^n| <= C`` for positive 2x2 matrices.

    For positive matrices ``‖PQ‖ >= κ ‖P‖ ‖Q‖`` with κ the smallest ratio
    ``min_{i,j,k} Q_{jk} / Q_{ik}`` of entries in a column of any right-hand
    factor; products of positive matrices only improve that ratio, so
    ``C = -log κ`` over the alphabet. Sub-multiplicativity gives the other side.
    """
    kappa = 1.0
    for M in (_positive(A0), _positive(A1)):
        for k in range(2):
            col = M[:, k]
            kappa = min(kappa, col.min() / col.max())
    return -math.log(kappa)


def lyapunov_profile(fseq: FunctionSequence, schedule: Sequence[int], samples: int = DEFAULT_SAMPLES,
                     seed: int = 0, exhaustive_max: int = EXHAUSTIVE_MAX) -> list[tuple[int, float, str]]:
    """``(n, mean f_n/n, regime)``: the uniform average over all words or over seeded words."""
    out = []
    for n in schedule:
        w, regime = fseq.words(n, samples=samples, seed=seed, exhaustive_max=exhaustive_max)
        out.append((n, float(np.mean(fseq.values(w))) / n, regime))
    return out


# weak Gibbs sequences ------------------------------------------------------------

def word_signs(words: np.ndarray, seed: int = 0) -> np.ndarray:
    """A seeded ±1 hash of each whole word (depends on every letter and the length)."""
    S, n = words.shape
    table = _sign_table(n, seed)
    acc = np.zeros(S, dtype=np.uint64)
    for j in range(n):
        acc += table[j, words[:, j]]
    h = splitmix64(acc ^ np.uint64(n))
    return 1.0 - 2.0 * (h >> np.uint64(63)).astype(np.float64)


def _sign_table(n: int, seed: int) -> np.ndarray:
    pos = np.arange(n, dtype=np.uint64)[:, None]
    letter = np.arange(2, dtype=np.uint64)[None, :]
    base = splitmix64(np.array([seed], dtype=np.uint64))[0]
    return splitmix64(base ^ ((pos << np.uint64(1)) | letter))


def weak_gibbs_seq(p: float = 0.5, profile: str = "gibbs", seed: int = 0) -> FunctionSequence:
    """``f_n(x) = Σ_{i<n} log p_{x_i}`` plus, for the weak profile, ``√n · s(x_0…x_{n-1})``.

    ``p`` is the probability of the symbol 1. The Gibbs profile is the log
    measure of the cylinder under the Bernoulli(p) measure; the weak profile
    perturbs it by a deterministic ±√n sign so that ``K_n = e^{√n}``.
    """
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    if profile not in ("gibbs", "weak"):
        raise ValueError("profile must be 'gibbs' or 'weak'")
    logs = np.array([math.log1p(-p), math.log(p)])
    base = birkhoff_sequence(lambda w: logs[w], "log mu[x_0..x_n-1]")
    if profile == "gibbs":
        return base

    def rule(words):
        n = words.shape[1]
        return base.values(words) + math.sqrt(n) * word_signs(words, seed)

    def sliding(words, m):
        L = words.shape[1]
        table = _sign_table(m, seed)
        acc = np.zeros((words.shape[0], L - m + 1), dtype=np.uint64)
        for j in range(m):
            acc += table[j, words[:, j:j + L - m + 1]]
        h = splitmix64(acc ^ np.uint64(m))
        signs = 1.0 - 2.0 * (h >> np.uint64(63)).astype(np.float64)
        return base.window_values(words, m) + math.sqrt(m) * signs

    return FunctionSequence(rule, "weak-gibbs", sliding)


# constant error ------------------------------------------------------------------

@dataclass
class ConstantErrorReport:
    value: float
    regime: str
    table: dict  # (n, m) -> max defect
    by_length: dict  # n + m -> max defect
    classification: str  # "constant-error" or "non-constant-error"

    def __float__(self) -> float:
        return self.value


def constant_error_report(fseq: FunctionSequence, n_max: int, mode: str = "exhaustive",
                          samples: int = DEFAULT_SAMPLES, seed: int = 0, cap: float = math.inf,
                          growth_tol: float = 0.05) -> ConstantErrorReport:
    """Defects ``|f_{n+m} − f_n − f_m∘T^n|`` for all ``n, m >= 1`` with ``n + m <= n_max``.

    Classified as constant-error when the measured maximum stays below
    ``cap`` and the worst defect over the upper half of the lengths exceeds
    the lower half by at most ``growth_tol`` (relative).
    """
    if mode not in ("exhaustive", "sampled"):
        raise ValueError("mode must be 'exhaustive' or 'sampled'")
    if mode == "exhaustive" and n_max > 16:
        raise ValueError("exhaustive mode is limited to n + m <= 16")
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    if mode == "exhaustive":
        words = iter_words(n_max, fseq.alphabet)
    else:
        words = SampleSet.bernoulli(0.5, seed, samples).words(0, n_max)
    table, by_length = {}, {}
    for L in range(2, n_max + 1):
        w = words[:, :L] if mode == "sampled" else iter_words(L, fseq.alphabet)
        fL = fseq.values(w)
        for n in range(1, L):
            d = float(np.abs(fL - fseq.values(w[:, :n]) - fseq.values(w[:, n:])).max())
            table[(n, L - n)] = d
            by_length[L] = max(by_length.get(L, 0.0), d)
    value = max(table.values())
    lengths = sorted(by_length)
    half = lengths[len(lengths) // 2]
    lower = max(by_length[L] for L in lengths if L < half) if half > lengths[0] else 0.0
    upper = max(by_length[L] for L in lengths if L >= half)
    growing = upper > lower * (1 + growth_tol) + 1e-12
    cls = "non-constant-error" if (growing or value > cap) else "constant-error"
    return ConstantErrorReport(value, "exact" if mode == "exhaustive" else "sampled", table, by_length, cls)


def constant_error_measure(fseq: FunctionSequence, n_max: int, mode: str = "exhaustive", **kw) -> float:
    """The smallest constant C witnessed by the tested ``(n, m, x)``."""
    return constant_error_report(fseq, n_max, mode, **kw).value


# error sequences and the approximant ---------------------------------------------

@dataclass(frozen=True)
class ErrorSequence:
    """Non-decreasing ``C_n = max(runmax(table)_n, coef · n^power)``.

    Beyond the table the sequence is ``max(max(table), coef · n^power)``.
    Measured (non-monotone) tables are monotonised by running maximum,
    which only enlarges C.
    """

    coef: float = 0.0
    power: float = 0.0
    table: tuple = ()

    def __post_init__(self):
        if self.coef < 0 or any(c < 0 for c in self.table):
            raise ValueError("error sequences are non-negative")

    @classmethod
    def constant(cls, c: float) -> "ErrorSequence":
        return cls(float(c), 0.0)

    @classmethod
    def zero(cls) -> "ErrorSequence":
        return cls(0.0, 0.0)

    @classmethod
    def power_law(cls, c: float, a: float) -> "ErrorSequence":
        return cls(float(c), float(a))

    @classmethod
    def measured(cls, values: Sequence[float], coef: float = 0.0, power: float = 0.0) -> "ErrorSequence":
        return cls(float(coef), float(power), tuple(float(v) for v in values))

    @property
    def summable(self) -> bool:
        """``Σ C_n / n² < ∞``."""
        return self.coef == 0 or self.power < 1

    @property
    def _table_max(self) -> float:
        return max(self.table) if self.table else 0.0

    def __call__(self, n):
        k = np.asarray(n, dtype=float)
        out = self.coef * k ** self.power if self.coef else np.zeros_like(k)
        if self.table:
            run = np.maximum.accumulate(np.array(self.table))
            idx = np.clip(k.astype(np.int64), 1, len(self.table)) - 1
            out = np.maximum(out, np.where(k <= len(self.table), run[idx], self._table_max))
        return float(out) if np.ndim(out) == 0 else out

    def tail_bounds(self, N: int) -> tuple[float, float]:
        """Integral-test enclosure of ``Σ_{k>=N} C_{5k} / k²``.

        Both pieces ``M / k²`` and ``coef (5k)^power / k²`` decrease in k, so
        ``∫_N^∞ f <= Σ_{k>=N} f(k) <= f(N) + ∫_N^∞ f`` applies to their maximum.
        """
        if not self.summable:
            raise ValueError("Σ C_n/n² diverges under the integral test")
        M = self._table_max
        ints = [M / N]
        if self.coef:
            ints.append(self.coef * 5 ** self.power * N ** (self.power - 1) / (1 - self.power))
        fN = float(self(5 * N)) / N ** 2
        return max(ints), fN + sum(ints)


@dataclass
class Enclosure:
    lo: float
    hi: float

    @property
    def value(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo


def _partial_sum(Cseq: ErrorSequence, a: int, b: int, chunk: int = 1 << 20) -> float:
    """``Σ_{a<=k<b} C_{5k}/k²`` with compensated summation."""
    parts = []
    for lo in range(a, b, chunk):
        k = np.arange(lo, min(b, lo + chunk), dtype=np.float64)
        parts.append(math.fsum(np.asarray(Cseq(5 * k)) / (k * k)))
    return math.fsum(parts)


def _tail_enclosure(Cseq: ErrorSequence, n: int, terms: int) -> Enclosure:
    if n < 1:
        raise ValueError("n must be positive")
    if not Cseq.summable:
        raise ValueError("Σ C_n/n² diverges under the integral test")
    N = n + terms
    s = _partial_sum(Cseq, n, N)
    t_lo, t_hi = Cseq.tail_bounds(N)
    rounding = 4 * np.finfo(float).eps * (s + t_hi)
    return Enclosure(float(max(0.0, s + t_lo - rounding)), float(s + t_hi + rounding))


def erdos_constant(Cseq: ErrorSequence, n: int, terms: int = ERDOS_TERMS) -> Enclosure:
    """Enclosure of ``C̃_n = 5n Σ_{k>=n} C_{5k}/k²``."""
    if Cseq.coef == 0 and not any(Cseq.table):
        if not Cseq.summable:
            raise ValueError("Σ C_n/n² diverges under the integral test")
        return Enclosure(0.0, 0.0)
    t = _tail_enclosure(Cseq, n, terms)
    return Enclosure(float(5 * n * t.lo), float(5 * n * t.hi))


class ErdosTails:
    """``C̃_n`` for many n from one long enclosure: ``T(n) = T(1) − Σ_{k<n}``."""

    def __init__(self, Cseq: ErrorSequence, terms: int = ERDOS_TERMS):
        self.Cseq = Cseq
        self.zero = Cseq.coef == 0 and not any(Cseq.table)
        self.base = None if self.zero else _tail_enclosure(Cseq, 1, terms)
        self._prefix = [0.0]  # prefix[n-1] = Σ_{k<n} C_{5k}/k²

    def _prefix_to(self, n: int) -> float:
        while len(self._prefix) < n:
            k = len(self._prefix)
            self._prefix.append(self._prefix[-1] + float(self.Cseq(5 * k)) / k ** 2)
        return self._prefix[n - 1]

    def __call__(self, n: int) -> Enclosure:
        if n <= 0 or self.zero:
            return Enclosure(0.0, 0.0)
        p = self._prefix_to(n)
        slack = 8 * np.finfo(float).eps * (self.base.hi + n)
        return Enclosure(float(5 * n * max(0.0, self.base.lo - p - slack)), float(5 * n * (self.base.hi - p + slack)))


@dataclass
class ErdosRow:
    n: int
    lhs: float  # ‖f_n − S_n f‖_∞ / n
    bound: float  # 5K/n + C̃_n/n + C̃_m/m
    regime: str
    claim_applies: bool  # n >= n0

    @property
    def ok(self) -> bool:
        return self.lhs <= self.bound + 1e-12


@dataclass
class ErdosReport:
    m: int
    K: float
    K_regime: str
    Ctilde_m: float
    n0: int
    epsilon: float
    f: ShiftFunction
    rows: list = field(default_factory=list)

    @property
    def violations(self) -> list:
        return [r for r in self.rows if not r.ok]

    @property
    def claim_violations(self) -> list:
        return [r for r in self.rows if r.claim_applies and r.lhs > self.epsilon]


def erdos_approximant(fseq: FunctionSequence, Cseq: ErrorSequence, epsilon: float, m_cap: int = 100_000,
                      schedule: Sequence[int] | None = None, samples: int = DEFAULT_SAMPLES, seed: int = 0,
                      exhaustive_max: int = EXHAUSTIVE_MAX, terms: int = ERDOS_TERMS,
                      k_exhaustive: int = 20) -> ErdosReport:
    """The additive surrogate ``f = f_m/m`` and the measured versus claimed errors.

    ``m`` is the smallest side with ``C̃_m/m < ε/3`` (``C̃_n/n`` is a tail
    sum, so this holds for every larger n), ``K`` the largest sup norm of the
    shifted correctors ``f_j ± C̃_j`` for ``j < 3m``, and ``n0`` the smallest
    integer above ``4m`` with ``5K/n0 < ε/3``. K is exact over cylinders
    while ``3m - 1 <= k_exhaustive`` and estimated on samples otherwise.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    tails = ErdosTails(Cseq, terms)
    m = next((k for k in range(1, m_cap + 1) if tails(k).hi / k < epsilon / 3), None)
    if m is None:
        raise ValueError(f"no admissible m <= {m_cap} for epsilon={epsilon}")
    K, regimes = 0.0, set()
    for j in range(3 * m):
        lo, hi, regime = fseq.range(j, samples=samples, seed=seed, exhaustive_max=k_exhaustive)
        regimes.add(regime)
        c = tails(j).hi
        K = max(K, abs(hi + c), abs(lo + c), abs(hi - c), abs(lo - c))
    K_regime = "sampled" if "sampled" in regimes else "exact"
    n0 = max(4 * m + 1, math.floor(15 * K / epsilon) + 1)
    Cm = tails(m).hi
    f = fseq.function(m) / m
    schedule = list(schedule) if schedule is not None else []
    rows = []
    for n in schedule:
        lhs, regime = erdos_lhs(fseq, m, n, samples=samples, seed=seed, exhaustive_max=exhaustive_max)
        bound = float(5 * K / n + tails(n).hi / n + Cm / m)
        rows.append(ErdosRow(n, lhs, bound, regime, n >= n0))
    return ErdosReport(m, K, K_regime, Cm, n0, epsilon, f, rows)


def erdos_lhs(fseq: FunctionSequence, m: int, n: int, samples: int = DEFAULT_SAMPLES, seed: int = 0,
              exhaustive_max: int = EXHAUSTIVE_MAX, exhaustive_words: int = 24) -> tuple[float, str]:
    """``‖f_n − S_n(f_m/m)‖_∞ / n``; exact over cylinders of length ``n+m-1`` when feasible.

    ``exhaustive_max`` bounds n for the exact regime and ``exhaustive_words``
    bounds the enumerated word length ``n + m - 1``. In the exact regime f_n
    and f_m are tabulated once over their own cylinders and every longer word
    is visited through its lexicographic index, so no word is materialised.
    """
    L = n + m - 1
    if n <= exhaustive_max and L <= exhaustive_words:
        k = fseq.alphabet
        fn_table = fseq.values(iter_words(n, k))
        fm_table = fseq.values(iter_words(m, k)) / m
        best = 0.0
        total = k ** L
        for lo in range(0, total, WORD_BLOCK):
            idx = np.arange(lo, min(total, lo + WORD_BLOCK), dtype=np.int64)
            Sn = np.zeros(idx.size)
            for i in range(n):
                Sn += fm_table[(idx // k ** (L - m - i)) % k ** m]
            best = max(best, float(np.abs(fn_table[idx // k ** (L - n)] - Sn).max()))
        return best / n, "exact"
    words = SampleSet.bernoulli(0.5, seed, samples).words(0, L)
    fn = fseq.values(words[:, :n])
    Sn = fseq.window_values(words, m).sum(axis=1) / m
    return float(np.abs(fn - Sn).max()) / n, "sampled"


def corrector_order_check(fseq: FunctionSequence, Cseq: ErrorSequence, n_max: int = 14,
                          terms: int = ERDOS_TERMS) -> dict:
    """Worst ``f⁺_{n+m} − f⁺_n − f⁺_m∘T^n`` and ``f⁻_n + f⁻_m∘T^n − f⁻_{n+m}`` for ``m <= n <= 4m``.

    Both are <= 0 when the correctors behave as claimed; enumeration is over
    all words of length ``n + m <= n_max``.
    """
    tails = ErdosTails(Cseq, terms)
    worst_plus = worst_minus = -math.inf
    for L in range(2, n_max + 1):
        w = iter_words(L, fseq.alphabet)
        fL = fseq.values(w)
        for m in range(1, L):
            n = L - m
            if not m <= n <= 4 * m:
                continue
            d = fL - fseq.values(w[:, :n]) - fseq.values(w[:, n:])
            c = tails(L).value - tails(n).value - tails(m).value
            worst_plus = max(worst_plus, float((d + c).max()))
            worst_minus = max(worst_minus, float((-d + c).max()))
    return {"plus": worst_plus, "minus": worst_minus}


# typewriter ----------------------------------------------------------------------

def typewriter_function(n: int) -> PwcFunction:
    """``1_[(n − 2^k)/2^k, (n − 2^k + 1)/2^k]`` for ``2^k <= n < 2^{k+1}`` (dyadic, exact)."""
    if n < 1:
        raise ValueError("typewriter index must be positive")
    k = n.bit_length() - 1
    j = n - (1 << k)
    return PwcFunction.indicator(Fraction(j, 1 << k), Fraction(j + 1, 1 << k))


def typewriter_map(dim: int = 1) -> SetMap:
    """``φ(F) = |F| f_{|F|}`` on boxes, trivial action on step functions."""
    return SetMap(lambda F: typewriter_function(F.size) * F.size, GroupAction.trivial(dim),
                  ValueSpace("pwc", p=1), "boxes-only", "typewriter")


def typewriter_hits(omega: Fraction | float, n_max: int) -> np.ndarray:
    """``f_n(ω)`` for ``n = 1..n_max`` (0/1 integers)."""
    return np.array([typewriter_function(n)(omega) for n in range(1, n_max + 1)], dtype=np.int64)

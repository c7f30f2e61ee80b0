"""Finitely described invariant measures of the Renyi map and their statistics.

Any Markov chain on a finite digit alphabet defines a T-invariant measure via
the symbolic coding, so entropies are exact closed forms. Lyapunov exponents
are only ever reported as brackets, computed from exact cylinder geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .digitstats import ArithmeticFunction
from .errors import BudgetExceededError
from .interval import Interval

__all__ = [
    "DigitMarkovMeasure",
    "FixedPointAtom",
    "MixtureMeasure",
    "MeasureStats",
    "TheoremCStep",
    "TheoremCReport",
    "entropy",
    "lyapunov_bracket",
    "stats",
    "bernoulli_23",
    "tune_bernoulli_23",
    "theorem_c_sequence",
]

ROW_TOL = 1e-12
STATIONARY_TOL = 1e-10


def _stationary(P: np.ndarray) -> np.ndarray:
    # lazy chain has the same stationary vector and is aperiodic
    lazy = 0.5 * (P + np.eye(P.shape[0]))
    pi = np.full(P.shape[0], 1.0 / P.shape[0])
    for _ in range(200_000):
        nxt = pi @ lazy
        nxt /= nxt.sum()
        if np.abs(nxt - pi).max() < 1e-15:
            pi = nxt
            break
        pi = nxt
    return pi


class DigitMarkovMeasure:
    """Stationary Markov measure on a finite set of digits.

    ``alphabet`` lists the digits (each >= 2) and ``transition[i, j]`` is the
    probability of digit ``alphabet[j]`` following ``alphabet[i]``.
    """

    def __init__(self, alphabet: Sequence[int], transition, stationary=None):
        alphabet = tuple(int(b) for b in alphabet)
        if not alphabet or min(alphabet) < 2:
            raise ValueError("alphabet must be non-empty digits >= 2")
        if len(set(alphabet)) != len(alphabet):
            raise ValueError("alphabet digits must be distinct")
        P = np.array(transition, dtype=np.float64)
        if P.shape != (len(alphabet), len(alphabet)):
            raise ValueError("transition matrix shape does not match alphabet")
        if (P < 0).any() or np.abs(P.sum(axis=1) - 1).max() > ROW_TOL:
            raise ValueError("transition matrix must be row-stochastic")
        pi = _stationary(P) if stationary is None else np.asarray(stationary, dtype=np.float64)
        if np.abs(pi @ P - pi).max() > STATIONARY_TOL:
            raise ValueError("stationary vector does not satisfy pi P = pi")
        self.alphabet = alphabet
        self.transition = P
        self.stationary = pi

    @property
    def cap(self) -> int:
        return max(self.alphabet)

    @classmethod
    def bernoulli(cls, probs: dict):
        """I.i.d. digits with the given {digit: probability} weights."""
        items = sorted((int(k), float(v)) for k, v in probs.items() if v > 0)
        alphabet = [k for k, _ in items]
        p = np.array([v for _, v in items])
        if abs(p.sum() - 1) > ROW_TOL:
            raise ValueError("Bernoulli weights must sum to 1")
        return cls(alphabet, np.tile(p, (len(p), 1)), stationary=p)

    @classmethod
    def uniform(cls, cap: int):
        """Measure of maximal entropy of the full shift on digits 2..cap."""
        k = cap - 1
        return cls.bernoulli({b: 1.0 / k for b in range(2, cap + 1)})

    def __repr__(self):
        return f"DigitMarkovMeasure(alphabet={self.alphabet})"


class FixedPointAtom:
    """Unit point mass at the fixed point of T inside the digit-k cylinder."""

    def __init__(self, digit: int):
        if digit < 2:
            raise ValueError("digit must be >= 2")
        self.digit = int(digit)
        k = self.digit
        if k == 2:
            self.point, one_minus = 0.0, 1.0
        else:
            # p = (2 - k + sqrt((k-2)(k+2)))/2 rewritten without cancellation
            s = math.sqrt((k - 2) * (k + 2)) + (k - 2)
            self.point = 2 * (k - 2) / s
            one_minus = 4 * (k - 2) / (s * s)
        self.chi = 0.0 if k == 2 else -2.0 * math.log(one_minus)

    def chi_interval(self) -> Interval:
        return Interval(math.nextafter(self.chi, -math.inf) if self.chi > 0 else 0.0,
                        math.nextafter(self.chi, math.inf))

    def as_markov(self) -> DigitMarkovMeasure:
        return DigitMarkovMeasure([self.digit], [[1.0]], stationary=[1.0])

    def __repr__(self):
        return f"FixedPointAtom({self.digit})"


class MixtureMeasure:
    """Convex combination of finitely described measures."""

    def __init__(self, components):
        comps = [(float(w), m) for w, m in components]
        if not comps:
            raise ValueError("mixture needs at least one component")
        if any(w <= 0 for w, _ in comps):
            raise ValueError("mixture weights must be positive")
        if abs(math.fsum(w for w, _ in comps) - 1) > 1e-12:
            raise ValueError("mixture weights must sum to 1")
        self.components = comps

    def __repr__(self):
        inner = ", ".join(f"{w:.4g}*{m!r}" for w, m in self.components)
        return f"MixtureMeasure({inner})"


Measure = Union[DigitMarkovMeasure, FixedPointAtom, MixtureMeasure]


@dataclass(frozen=True)
class MeasureStats:
    h: float
    chi: Interval
    F: Interval
    dim: Optional[Interval]
    psi_integral: float
    note: str = ""

    @property
    def expanding(self) -> bool:
        return self.chi.lo > 0


def entropy(m: DigitMarkovMeasure) -> float:
    """Entropy rate -sum_i pi_i sum_j P_ij log P_ij in nats."""
    P, pi = m.transition, m.stationary
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(P > 0, P * np.log(P), 0.0)
    return float(max(0.0, -np.sum(pi[:, None] * terms)))


def _lyapunov_levels(m: DigitMarkovMeasure, depth: int, max_words: int):
    """Per-depth brackets for chi from depth-j cylinder probabilities, j <= depth.

    Two independent enclosures are accumulated at each level and intersected:
    the pointwise one, chi = E[-2 log(1-x)] with x confined to its cylinder,
    and the Birkhoff one, chi = E[log (T^j)'] / j with (T^j)' = (c y + d)^2 on
    the cylinder, y in [0, 1).
    """
    alphabet, P, pi = m.alphabet, m.transition, m.stationary
    direct_lo = [0.0] * (depth + 1)
    direct_hi = [0.0] * (depth + 1)
    birk_lo = [0.0] * (depth + 1)
    birk_hi = [0.0] * (depth + 1)
    visited = 0
    # entries: (prob, last digit index, a, b, c, d, level)
    stack = []
    for i, k in enumerate(alphabet):
        if pi[i] > 0:
            stack.append((float(pi[i]), i, 1, k - 2, 1, k - 1, 1))
    while stack:
        prob, last, a, b, c, d, level = stack.pop()
        visited += 1
        if visited > max_words:
            raise BudgetExceededError(
                f"Lyapunov bracket at depth {depth} needs more than {max_words} cylinders",
                suggestion=f"depth={max(1, depth - 2)}")
        # x in [b/d, (a+b)/(c+d)); -2 log(1-x) increasing in x
        direct_lo[level] += prob * -2.0 * (math.log(d - b) - math.log(d))
        direct_hi[level] += prob * -2.0 * (math.log(c + d - a - b) - math.log(c + d))
        birk_lo[level] += prob * 2.0 * math.log(d)
        birk_hi[level] += prob * 2.0 * math.log(c + d)
        if level == depth:
            continue
        row = P[last]
        for j, k in enumerate(alphabet):
            pj = row[j]
            if pj > 0:
                stack.append((prob * pj, j, a + b, a * (k - 2) + b * (k - 1),
                              c + d, c * (k - 2) + d * (k - 1), level + 1))
    out = []
    for j in range(1, depth + 1):
        lo = max(direct_lo[j], birk_lo[j] / j, 0.0)
        hi = min(direct_hi[j], birk_hi[j] / j)
        out.append((lo, hi))
    return out


def lyapunov_bracket(m, depth: int, max_words: int = 2_000_000) -> Interval:
    """Interval containing chi(m) = integral of log T' dm.

    The bracket is the intersection of the enclosures at every depth up to
    ``depth``, so it shrinks monotonically as depth grows. Its width never
    exceeds 2 log(1 + 1/depth).
    """
    if depth < 1:
        raise ValueError("depth must be positive")
    if isinstance(m, FixedPointAtom):
        return m.chi_interval()
    if isinstance(m, MixtureMeasure):
        total = Interval(0.0, 0.0)
        for w, comp in m.components:
            total = total + lyapunov_bracket(comp, depth, max_words) * w
        return total
    lo, hi = 0.0, math.inf
    for a, b in _lyapunov_levels(m, depth, max_words):
        lo, hi = max(lo, a), min(hi, b)
    lo = math.nextafter(lo, -math.inf) if lo > 0 else 0.0
    return Interval(lo, math.nextafter(max(hi, lo), math.inf))


def _psi_integral(m, psi: ArithmeticFunction) -> float:
    if isinstance(m, FixedPointAtom):
        return float(psi(m.digit))
    if isinstance(m, MixtureMeasure):
        return math.fsum(w * _psi_integral(c, psi) for w, c in m.components)
    return math.fsum(float(p) * float(psi(k)) for k, p in zip(m.alphabet, m.stationary))


def _entropy_any(m) -> float:
    if isinstance(m, FixedPointAtom):
        return 0.0
    if isinstance(m, MixtureMeasure):
        return math.fsum(w * _entropy_any(c) for w, c in m.components)
    return entropy(m)


def stats(m: Measure, psi: ArithmeticFunction, depth: int = 10,
          max_words: int = 2_000_000) -> MeasureStats:
    """Entropy, Lyapunov bracket, F = h - chi, dimension and psi-integral.

    The dimension h/chi is only reported for measures whose chi bracket is
    bounded away from 0; otherwise ``dim`` is None and ``note`` says why.
    """
    h = _entropy_any(m)
    chi = lyapunov_bracket(m, depth, max_words)
    F = Interval(h - chi.hi, h - chi.lo)
    dim, note = None, ""
    if chi.lo > 0:
        dim = Interval(h / chi.hi, h / chi.lo)
    else:
        note = "chi bracket touches 0: dimension undefined"
    return MeasureStats(h, chi, F, dim, _psi_integral(m, psi), note)


def bernoulli_23(weight3: float) -> DigitMarkovMeasure:
    if not 0 < weight3 <= 1:
        raise ValueError("weight on digit 3 must be in (0, 1]")
    if weight3 == 1:
        return DigitMarkovMeasure.bernoulli({3: 1.0})
    return DigitMarkovMeasure.bernoulli({2: 1.0 - weight3, 3: weight3})


def tune_bernoulli_23(chi_target: float, depth: int = 12, tol: float = 1e-6):
    """Smallest weight on digit 3 whose chi bracket lower end reaches the target."""
    if chi_target <= 0:
        raise ValueError("target must be positive")
    if lyapunov_bracket(bernoulli_23(1.0), depth).lo < chi_target:
        raise ValueError(f"chi target {chi_target} is beyond the Bernoulli(2,3) family")
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if lyapunov_bracket(bernoulli_23(mid), depth).lo >= chi_target:
            hi = mid
        else:
            lo = mid
    return hi, bernoulli_23(hi)


@dataclass
class TheoremCStep:
    k: int
    n_k: int
    r_k: float
    weight3: float
    chi_target: float
    nu_stats: MeasureStats
    delta_chi: float
    mu: MixtureMeasure
    mu_stats: MeasureStats
    psi_lower_bound: float
    r_clamped: bool = False


@dataclass
class TheoremCReport:
    psi: str
    steps: list = field(default_factory=list)
    failed_at: Optional[int] = None
    message: str = ""

    @property
    def complete(self) -> bool:
        return self.failed_at is None


def _next_threshold_digit(psi: ArithmeticFunction, k: int, start: int, n_max: int):
    for n in range(max(start, 2), n_max + 1):
        if float(psi(n)) / math.log(n) >= k:
            return n
    return None


def theorem_c_sequence(psi: ArithmeticFunction, K: int, n_max: int = 10**6,
                       depth: int = 12) -> TheoremCReport:
    """Mixtures (1 - 1/r_k) nu_k + (1/r_k) delta_{n_k} with diagnostics, k = 1..K.

    n_k is the smallest n >= n_{k-1} with psi(n)/log n >= k and
    r_k = sqrt(k) log n_k. When r_k < 1 the mixture weight 1/r_k would exceed
    one, so r_k is raised to 1 (the mixture is then the bare atom) and the
    step is marked ``r_clamped``. nu_k is the Bernoulli measure on {2, 3}
    with the smallest digit-3 weight whose chi bracket clears
    1/sqrt(r_k / log n_k).
    """
    report = TheoremCReport(psi=psi.name)
    prev = 2
    for k in range(1, K + 1):
        n_k = _next_threshold_digit(psi, k, prev, n_max)
        if n_k is None:
            report.failed_at = k
            report.message = (f"no n in [{prev}, {n_max}] has psi(n)/log n >= {k}; "
                              "psi fails the growth criterion at this scale")
            break
        prev = n_k
        raw_r = math.sqrt(k) * math.log(n_k)
        r_k = max(raw_r, 1.0)
        chi_target = 1.0 / math.sqrt(r_k / math.log(n_k))
        weight3, nu = tune_bernoulli_23(chi_target, depth)
        delta = FixedPointAtom(n_k)
        if r_k > 1.0:
            mu = MixtureMeasure([(1 - 1 / r_k, nu), (1 / r_k, delta)])
        else:
            mu = MixtureMeasure([(1.0, delta)])
        report.steps.append(TheoremCStep(
            k=k, n_k=n_k, r_k=r_k, weight3=weight3, chi_target=chi_target,
            nu_stats=stats(nu, psi, depth), delta_chi=delta.chi, mu=mu,
            mu_stats=stats(mu, psi, depth),
            psi_lower_bound=float(psi(n_k)) / r_k, r_clamped=raw_r < 1.0))
    return report

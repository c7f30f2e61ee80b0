"""Lebesgue measure of deviation sets {x : (1/n) sum psi(b_j(x)) in J}.

Exact mode walks the digit tree with exact cylinder lengths and decides
whole runs of sibling digits at once from bounds on the partial sum. Monte
Carlo mode samples dyadic rationals m / 2^64, whose digits are extracted
exactly. The B_n sets give explicit polynomial lower bounds for the
arithmetic mean.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .digitstats import ArithmeticFunction, dyadic_digits
from .errors import BudgetExceededError
from .exact import digits_pq
from .interval import Interval

__all__ = [
    "DeviationQuery",
    "DeviationEstimate",
    "BnResult",
    "RateFit",
    "exact_measure",
    "mc_measure",
    "measure",
    "bn_measure",
    "bn_interval",
    "rate_fit",
]

log = logging.getLogger(__name__)

MC_BLOCK = 1 << 17
DEFAULT_MAX_NODES = 5_000_000


@dataclass(frozen=True)
class DeviationQuery:
    psi: ArithmeticFunction
    n: int
    J: Interval
    method: str = "exact"
    B: Optional[int] = None
    samples: int = 1_000_000
    seed: int = 0
    # exact mode: undecided cylinders lighter than this go to the unresolved tail
    min_mass: float = 0.0
    # exact mode: Fraction arithmetic (True) or compensated floats (False)
    exact: bool = True
    max_nodes: int = DEFAULT_MAX_NODES
    threads: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("window n must be >= 1")
        if self.J.degenerate and not (self.J.lo_closed and self.J.hi_closed):
            raise ValueError("J is empty")
        if self.method not in ("exact", "monte-carlo", "mc"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "exact" and (self.B is None or self.B < 2):
            raise ValueError("exact mode needs a digit cap B >= 2")
        if self.method != "exact" and self.samples < 1:
            raise ValueError("samples must be >= 1")


@dataclass
class DeviationEstimate:
    lower: object
    upper: object
    tail_unresolved: object
    out: object = None
    stderr: Optional[float] = None
    exact: bool = True
    method: str = "exact"
    n: int = 0
    counts: dict = field(default_factory=dict)

    @property
    def estimate(self):
        return self.lower if self.method == "exact" else self.lower


def _psi_bounds(psi, lo, hi):
    a, b = psi.bounds(lo, hi)
    return a, b


def _run_length(p1, q1, p2, q2, c, d, exact):
    """Length of G([p1/q1, p2/q2)) for a unimodular G with bottom row (c, d)."""
    num = p2 * q1 - p1 * q2
    den = (c * p1 + d * q1) * (c * p2 + d * q2)
    return Fraction(num, den) if exact else num / den


def exact_measure(q: DeviationQuery) -> DeviationEstimate:
    """Exact lower bound and unresolved tail for lambda{mean in J}.

    Every depth-n word over digits 2..B is accounted for. Sibling digits
    whose outcome is already forced (in J, or out of J, whatever the
    remaining digits are) are merged into one interval. Digits above B are
    handled as one group: if bounds on psi over that group force the
    outcome, its mass is counted too, otherwise it is unresolved. With
    ``min_mass`` > 0, undecided cylinders below that mass are also left
    unresolved. The three parts always sum to 1.
    """
    psi, n, J, B = q.psi, q.n, q.J, q.B
    exact = q.exact and psi.exact and all(
        isinstance(v, (int, Fraction)) or math.isinf(v) for v in (J.lo, J.hi))
    zero = Fraction(0) if exact else 0.0
    inside, outside, tail = [zero], [zero], [zero]
    glob_lo, glob_hi = _psi_bounds(psi, 2, None)
    vals = [None, None] + [psi(k) for k in range(2, B + 1)]
    if not exact:
        vals = [None, None] + [float(v) for v in vals[2:]]
    tail_lo, tail_hi = _psi_bounds(psi, B + 1, None)
    # compare digit sums against n * J instead of means against J
    nlo = J.lo * n if math.isfinite(J.lo) else J.lo
    nhi = J.hi * n if math.isfinite(J.hi) else J.hi
    lo_closed, hi_closed = J.lo_closed, J.hi_closed

    def above_lo(x):
        return x > nlo or (x == nlo and lo_closed) or (x == nlo == -math.inf)

    def below_hi(x):
        return x < nhi or (x == nhi and hi_closed) or (x == nhi == math.inf)

    def decide(lo, hi):
        if above_lo(lo) and below_hi(hi):
            return 1
        if not below_hi(lo) or not above_lo(hi):
            return -1
        return 0

    monotone = all(x <= y for x, y in zip(vals[2:], vals[3:])) or \
        all(x >= y for x, y in zip(vals[2:], vals[3:]))

    def first_change(f, lo, hi):
        """First k in (lo, hi] with f(k) != f(lo) for f monotone in k, else hi + 1."""
        ref = f(lo)
        if f(hi) == ref:
            return hi + 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if f(mid) == ref:
                lo = mid
            else:
                hi = mid
        return hi

    nodes = 0
    min_mass = q.min_mass
    # (a, b, c, d, depth, partial sum)
    stack = [(1, 0, 0, 1, 0, zero)]
    while stack:
        a, b, c, d, depth, s = stack.pop()
        nodes += 1
        if nodes > q.max_nodes:
            raise BudgetExceededError(
                f"exact enumeration passed {q.max_nodes} tree nodes at n={n}, B={B}",
                suggestion="smaller n or B, min_mass > 0, or method=monte-carlo")
        rest = n - depth - 1
        base_lo = s + rest * glob_lo if rest else s
        base_hi = s + rest * glob_hi if rest else s

        def kind_of(k):
            return decide(base_lo + vals[k], base_hi + vals[k])

        # segments of constant decision; kind 1 in, -1 out, 0 undecided
        segments = []
        if monotone:
            cuts = {2, B + 1}
            for f in (lambda k: above_lo(base_lo + vals[k]), lambda k: below_hi(base_hi + vals[k]),
                      lambda k: above_lo(base_hi + vals[k]), lambda k: below_hi(base_lo + vals[k])):
                cuts.add(first_change(f, 2, B))
            cuts = sorted(cuts)
            segments = [(kind_of(k1), k1, k2 - 1) for k1, k2 in zip(cuts, cuts[1:])]
        else:
            segments = [(kind_of(k), k, k) for k in range(2, B + 1)]
        runs = []  # (kind, first digit, last digit) with None meaning unbounded
        for kind, k1, k2 in segments:
            if kind:
                runs.append((kind, k1, k2))
                continue
            for k in range(k1, k2 + 1):
                nc, nd = c + d, c * (k - 2) + d * (k - 1)
                if min_mass and nd * (nc + nd) * min_mass > 1:
                    # children only get lighter as k grows
                    runs.append((0, k, k2))
                    break
                stack.append((a + b, a * (k - 2) + b * (k - 1), nc, nd, depth + 1, s + vals[k]))
        runs.append((decide(base_lo + tail_lo, base_hi + tail_hi), B + 1, None))
        for kind, k1, k2 in runs:
            # digits k1..k2 under the prefix form one exact interval
            p2, q2 = (1, 1) if k2 is None else (k2 - 1, k2)
            mass = _run_length(k1 - 2, k1 - 1, p2, q2, c, d, exact)
            (inside if kind == 1 else outside if kind == -1 else tail).append(mass)
    if exact:
        lower, out, unresolved = sum(inside), sum(outside), sum(tail)
    else:
        lower, out, unresolved = math.fsum(inside), math.fsum(outside), math.fsum(tail)
    return DeviationEstimate(lower=lower, upper=lower + unresolved, tail_unresolved=unresolved,
                             out=out, exact=exact, method="exact", n=n,
                             counts={"nodes": nodes, "B": B, "min_mass": q.min_mass})


def _mc_block(psi, n, lo_sum, hi_sum, J, seed_seq, size):
    rng = np.random.default_rng(seed_seq)
    # m in [0, 2^64 - 2]; the single excluded grid point has mass 2^-64
    m = rng.integers(0, np.iinfo(np.uint64).max, size=size, dtype=np.uint64)
    sums = psi.values(dyadic_digits(m, n)).sum(axis=0)
    ok = np.ones(size, dtype=bool)
    if math.isfinite(lo_sum):
        ok &= (sums >= lo_sum) if J.lo_closed else (sums > lo_sum)
    if math.isfinite(hi_sum):
        ok &= (sums <= hi_sum) if J.hi_closed else (sums < hi_sum)
    return int(ok.sum())


def mc_measure(q: DeviationQuery) -> DeviationEstimate:
    """Fraction of dyadic samples m/2^64 whose psi-mean over n digits is in J.

    Samples come in fixed blocks, each with its own spawned seed, so the
    result depends only on (seed, samples) and not on the thread count.
    Membership compares the digit sum against n * J in floating point.
    """
    n, J = q.n, q.J
    lo_sum = float(J.lo) * n if math.isfinite(J.lo) else J.lo
    hi_sum = float(J.hi) * n if math.isfinite(J.hi) else J.hi
    sizes = [MC_BLOCK] * (q.samples // MC_BLOCK)
    if q.samples % MC_BLOCK:
        sizes.append(q.samples % MC_BLOCK)
    seeds = np.random.SeedSequence(q.seed).spawn(len(sizes))
    work = [(q.psi, n, lo_sum, hi_sum, J, s, z) for s, z in zip(seeds, sizes)]
    if q.threads > 1:
        with ThreadPoolExecutor(max_workers=q.threads) as pool:
            hits = list(pool.map(lambda args: _mc_block(*args), work))
    else:
        hits = [_mc_block(*args) for args in work]
    total = sum(hits)
    p = total / q.samples
    se = math.sqrt(p * (1 - p) / q.samples)
    return DeviationEstimate(lower=p, upper=p, tail_unresolved=se, stderr=se, exact=False,
                             method="monte-carlo", n=n,
                             counts={"hits": total, "samples": q.samples, "seed": q.seed})


def measure(q: DeviationQuery) -> DeviationEstimate:
    return exact_measure(q) if q.method == "exact" else mc_measure(q)


@dataclass(frozen=True)
class BnResult:
    n: int
    z: int
    m: int
    lo: Fraction
    hi: Fraction
    measure: Fraction
    mean: Fraction
    member: bool

    @property
    def interval(self) -> Interval:
        return Interval(self.lo, self.hi, True, False)


def _g2n(y: Fraction, n: int) -> Fraction:
    # n-fold digit-2 branch: y / (n y + 1)
    return y / (n * y + 1)


def bn_interval(n: int, J: Interval):
    """(z_n, m) for the window n and target J."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if math.isinf(J.lo) or math.isinf(J.hi):
        raise ValueError("B_n needs a bounded J")
    lo, width = Fraction(J.lo), Fraction(J.hi) - Fraction(J.lo)
    if lo < 2 or width <= 0:
        raise ValueError("J must be a non-degenerate interval inside [2, inf)")
    z = math.floor(n * lo) + 1
    if not Fraction(z, n) < lo + width / 2:
        raise ValueError(f"no integer z with z/n in (inf J, inf J + |J|/2) at n={n}; need n >= 2/|J|")
    m = z - 2 * (n - 1)
    if m <= 2:
        raise ValueError(f"m = {m} <= 2: J is too close to 2 for n={n}")
    return z, m


def bn_measure(n: int, J: Interval) -> BnResult:
    """Exact Lebesgue measure of B_n: n digits 2 followed by the digit m.

    B_n = g_2^n([1 - 1/(m-1), 1 - 1/m)) with m = z_n - 2(n-1). Every point
    of it has mean (2n + m)/(n + 1) over its first n + 1 digits; ``member``
    records whether that mean lies in J.
    """
    z, m = bn_interval(n, J)
    y1, y2 = Fraction(m - 2, m - 1), Fraction(m - 1, m)
    lo, hi = _g2n(y1, n), _g2n(y2, n)
    mean = Fraction(2 * n + m, n + 1)
    return BnResult(n, z, m, lo, hi, hi - lo, mean, mean in J)


def bn_check_point(x: Fraction, res: BnResult) -> bool:
    """Brute-force check that x has the digit pattern (2,...,2,m)."""
    word = digits_pq(x.numerator, x.denominator, res.n + 1)
    return word[:-1] == [2] * res.n and word[-1] == res.m


@dataclass(frozen=True)
class RateFit:
    exp_rate: float
    poly_exponent: float
    intercept: float
    residual_joint: float
    exp_only_slope: float
    residual_exp_only: float
    poly_only_slope: float
    residual_poly_only: float
    points: int
    dropped: int = 0

    @property
    def preferred(self) -> str:
        return "polynomial" if self.residual_poly_only < self.residual_exp_only else "exponential"


def _ols(X, y):
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    return coef, float(math.sqrt(np.mean(resid ** 2)))


def rate_fit(series: Sequence) -> RateFit:
    """Least-squares fit of log lambda_n = c0 + c1 n + c2 log n.

    ``exp_rate`` is c1 and ``poly_exponent`` is c2 from the joint fit. The
    one-regressor fits (on n alone, on log n alone) are reported with their
    RMS residuals so the two decay models can be compared.
    """
    pts = [(int(n), float(v)) for n, v in series]
    kept = [(n, v) for n, v in pts if v > 0]
    dropped = len(pts) - len(kept)
    if dropped:
        log.warning("rate_fit: dropped %d non-positive entries", dropped)
    if len(kept) < 4:
        raise ValueError("rate_fit needs at least 4 positive points")
    ns = np.array([n for n, _ in kept], dtype=float)
    y = np.log(np.array([v for _, v in kept]))
    one = np.ones_like(ns)
    cj, rj = _ols(np.column_stack([one, ns, np.log(ns)]), y)
    ce, re = _ols(np.column_stack([one, ns]), y)
    cp, rp = _ols(np.column_stack([one, np.log(ns)]), y)
    return RateFit(float(cj[1]), float(cj[2]), float(cj[0]), rj,
                   float(ce[1]), re, float(cp[1]), rp, len(kept), dropped)

"""Pressure brackets on digit-capped subsystems, Legendre rate functions and
the Lyapunov spectrum.

For the cap-B subsystem (digits 2..B only) the tilted pressure is

    Lambda_B(q) = P(q psi o b_1 - t log T')

and it is bracketed in one of two ways. Both use exact cylinder geometry
only. If G is the inverse branch of a word with matrix (a, b, c, d), then
G'(y) = (c y + d)^-2 on [0, 1), so its extreme values are 1/d^2 and
1/(c + d)^2.

* ``enumerate``: all (B-1)^n depth-n words. The sums of exp(q S_n psi) times
  the extreme derivative values give
  Z_lo <= Z_n <= Z_hi, and sub/super-multiplicativity of these sums puts
  both the depth-n partition-sum approximation (1/n) log Z_n and the pressure
  itself inside [(1/n) log Z_lo, (1/n) log Z_hi].
* ``transfer``: for deep words at large caps, a Markov partition of the
  capped cylinders is built whose cells have Lebesgue mass at most
  1/(n+1)^2. Two nonnegative matrices carry the per-digit weights
  exp(q psi(k)) g_k'^t at their sup and inf over each cell. Their Perron roots
  bracket exp(Lambda_B), and those roots are in turn enclosed by
  Collatz-Wielandt ratio bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigs

from .digitstats import IDENTITY, ArithmeticFunction
from .errors import BudgetExceededError
from .exact import distortion_budget
from .interval import Interval

__all__ = [
    "PressureBracket",
    "MarkovPartition",
    "RateValue",
    "RateFunctionTable",
    "SpectrumRow",
    "SpectrumTable",
    "ScanRow",
    "default_q_grid",
    "default_t_grid",
    "pressure_bracket",
    "lambda_curve",
    "synthetic_curve",
    "rate_from_legendre",
    "rate_table",
    "lyapunov_spectrum",
    "minimizer_scan",
]

DEFAULT_MAX_WORDS = 200_000
DEFAULT_MAX_CELLS = 400_000


@dataclass(frozen=True)
class PressureBracket:
    q: float
    t: float
    B: int
    n: int
    lower: float
    upper: float
    method: str = "enumerate"
    # (1/n) log of the partition sum with exact lengths, enumeration only
    approximation: Optional[float] = None
    # exact partition sum when q = 0, t = 1 and the enumeration is small
    partition_sum: Optional[Fraction] = None
    psi_range: Optional[tuple] = None

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def mid(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def as_interval(self) -> Interval:
        return Interval(self.lower, self.upper)


def default_q_grid(q_max: float = 60.0, step: float = 0.01, ratio: float = 1.12) -> np.ndarray:
    """Geometric grid symmetric around 0: 0, +-step, +-step*ratio, ..., +-q_max."""
    pos = [step]
    while pos[-1] * ratio < q_max:
        pos.append(pos[-1] * ratio)
    pos.append(q_max)
    pos = np.array(pos)
    return np.concatenate([-pos[::-1], [0.0], pos])


def default_t_grid() -> np.ndarray:
    neg = -np.geomspace(40.0, 0.02, 36)
    pos = np.geomspace(0.02, 3.0, 24)
    return np.unique(np.concatenate([neg, [0.0, 1.0], pos]))


def _psi_range(psi: ArithmeticFunction, B: int):
    lo, hi = psi.bounds(2, B)
    return float(lo), float(hi)


def _logsumexp(x: np.ndarray) -> float:
    m = float(np.max(x))
    if not math.isfinite(m):
        return m
    return m + math.log(float(np.sum(np.exp(x - m))))


# -- enumeration route -------------------------------------------------------

def _enumerate(psi, q, t, B, n, exact_limit=5000):
    digits = np.arange(2, B + 1, dtype=np.float64)
    pv = np.array([float(psi(k)) for k in range(2, B + 1)])
    c = np.zeros(1)
    d = np.ones(1)
    s = np.zeros(1)
    for _ in range(n):
        # append a digit on the right: (a,b,c,d) -> (a+b, ..., c+d, c(k-2)+d(k-1))
        c, d = (c + d)[:, None] + 0 * digits[None, :], c[:, None] * (digits - 2) + d[:, None] * (digits - 1)
        s = s[:, None] + pv[None, :]
        c, d, s = c.ravel(), d.ravel(), s.ravel()
    log_sup = -2.0 * np.log(d)
    log_inf = -2.0 * np.log(c + d)
    log_len = -np.log(d) - np.log(c + d)
    base = q * s
    hi_part, lo_part = (log_sup, log_inf) if t >= 0 else (log_inf, log_sup)
    upper = _logsumexp(base + t * hi_part) / n
    lower = _logsumexp(base + t * lo_part) / n
    approx = _logsumexp(base + t * log_len) / n
    lower, upper = min(lower, approx), max(upper, approx)
    exact_sum = None
    if q == 0 and t == 1 and (B - 1) ** n <= exact_limit:
        exact_sum = _exact_partition_sum(B, n)
    return lower, upper, approx, exact_sum


def _exact_partition_sum(B: int, n: int) -> Fraction:
    total = Fraction(0)
    stack = [(0, 1, 0)]
    while stack:
        c, d, level = stack.pop()
        if level == n:
            total += Fraction(1, d * (c + d))
            continue
        for k in range(2, B + 1):
            stack.append((c + d, c * (k - 2) + d * (k - 1), level + 1))
    return total


# -- transfer route ----------------------------------------------------------

class MarkovPartition:
    """Cylinder cells of the cap-B subsystem with mass at most 1/threshold.

    A word is refined further while d (c + d) < threshold. The set of refined
    words is suffix-closed, so for every cell w and digit k the cylinder k w
    lies inside exactly one cell. Edges record that image cell.
    """

    def __init__(self, B: int, threshold: int, max_cells: int = DEFAULT_MAX_CELLS):
        if B < 2:
            raise ValueError("cap must be >= 2")
        self.B = B
        self.threshold = threshold
        root: dict = {}
        lo, hi = [], []
        stack = [(root, 0, 1, 1, 0)]  # node, b, d, a, c  (matrix of the node's word)
        while stack:
            node, b, d, a, c = stack.pop()
            for k in range(2, B + 1):
                na, nb, nc, nd = a + b, a * (k - 2) + b * (k - 1), c + d, c * (k - 2) + d * (k - 1)
                if nd * (nc + nd) < threshold:
                    child: dict = {}
                    node[k] = child
                    stack.append((child, nb, nd, na, nc))
                else:
                    node[k] = len(lo)
                    lo.append(nb / nd)
                    hi.append((na + nb) / (nc + nd))
                    if len(lo) > max_cells:
                        raise BudgetExceededError(
                            f"Markov partition for B={B} exceeds {max_cells} cells",
                            suggestion="smaller depth or cap")
        self.lo = np.array(lo)
        self.hi = np.array(hi)
        rows, cols, dig = [], [], []
        # walk the trie once more, carrying where each prepended digit lands
        stack2 = [(root, [root[k] for k in range(2, B + 1)])]
        while stack2:
            node, imgs = stack2.pop()
            for b_digit, child in node.items():
                child_imgs = [im[b_digit] if isinstance(im, dict) else im for im in imgs]
                if isinstance(child, dict):
                    stack2.append((child, child_imgs))
                else:
                    for k, im in enumerate(child_imgs, start=2):
                        if isinstance(im, dict):
                            raise AssertionError("partition is not suffix-closed")
                        rows.append(child)
                        cols.append(im)
                        dig.append(k)
        self.rows = np.array(rows, dtype=np.int64)
        self.cols = np.array(cols, dtype=np.int64)
        self.digit = np.array(dig, dtype=np.int64)
        shift = self.digit - 1.0
        # g_k'(y) = (y + k - 1)^-2 is decreasing in y
        self.log_gsup = -2.0 * np.log(self.lo[self.rows] + shift)
        self.log_ginf = -2.0 * np.log(self.hi[self.rows] + shift)
        m = len(self.lo)
        order = sp.csr_matrix((np.arange(1, len(rows) + 1, dtype=np.float64),
                               (self.rows, self.cols)), shape=(m, m))
        self._indptr, self._indices = order.indptr, order.indices
        self._perm = order.data.astype(np.int64) - 1

    @property
    def size(self) -> int:
        return len(self.lo)

    def matrices(self, psi_values: np.ndarray, q: float, t: float):
        """(upper, lower, log scale) with entries scaled by exp(-log scale)."""
        base = q * psi_values[self.digit - 2]
        up = base + t * (self.log_gsup if t >= 0 else self.log_ginf)
        dn = base + t * (self.log_ginf if t >= 0 else self.log_gsup)
        shift = float(up.max())
        m = self.size
        U = sp.csr_matrix((np.exp(up - shift)[self._perm], self._indices, self._indptr), shape=(m, m))
        L = sp.csr_matrix((np.exp(dn - shift)[self._perm], self._indices, self._indptr), shape=(m, m))
        return U, L, shift


@lru_cache(maxsize=8)
def _partition(B: int, threshold: int, max_cells: int) -> MarkovPartition:
    return MarkovPartition(B, threshold, max_cells)


def _collatz_wielandt(M, power_steps: int = 60):
    """Enclosure [min (Mv)_i/v_i, max (Mv)_i/v_i] of the Perron root."""
    m = M.shape[0]
    v = None
    if m > 3:
        try:
            _, vec = eigs(M, k=1, which="LM", v0=np.ones(m), tol=1e-12, maxiter=5000)
            v = np.abs(vec[:, 0].real)
        except (ArpackNoConvergence, ArpackError, ValueError):
            v = None
    if v is None or not np.all(np.isfinite(v)) or v.max() <= 0:
        v = np.ones(m)
    v = np.maximum(v / v.max(), 1e-200)
    best_lo, best_hi = 0.0, math.inf
    for _ in range(power_steps):
        w = M @ v
        ratios = w / v
        best_lo = max(best_lo, float(ratios.min()))
        best_hi = min(best_hi, float(ratios.max()))
        if best_hi - best_lo <= 1e-13 * best_hi:
            break
        v = np.maximum(w / w.max(), 1e-200)
    return best_lo, best_hi


def _transfer(psi, q, t, B, n, threshold, max_cells):
    part = _partition(B, threshold or (n + 1) ** 2, max_cells)
    pv = np.array([float(psi(k)) for k in range(2, B + 1)])
    U, L, shift = part.matrices(pv, q, t)
    _, rho_hi = _collatz_wielandt(U)
    rho_lo, _ = _collatz_wielandt(L)
    lower = math.log(rho_lo) + shift if rho_lo > 0 else -math.inf
    upper = math.log(rho_hi) + shift
    return lower, upper


def pressure_bracket(psi: ArithmeticFunction, q: float, t: float = 1.0, B: int = 10,
                     n: int = 4, method: str = "auto", max_words: int = DEFAULT_MAX_WORDS,
                     threshold: Optional[int] = None,
                     max_cells: int = DEFAULT_MAX_CELLS) -> PressureBracket:
    """Bracket for the pressure of q psi o b_1 - t log T' on digits 2..B.

    ``method`` is ``enumerate``, ``transfer`` or ``auto`` (enumerate when
    (B-1)^n <= max_words). ``threshold`` overrides the partition resolution
    used by ``transfer``; by default cells have mass below 1/(n+1)^2.
    """
    if B < 2 or n < 1:
        raise ValueError("need B >= 2 and n >= 1")
    q, t = float(q), float(t)
    words = (B - 1) ** n
    if method == "auto":
        method = "enumerate" if words <= max_words else "transfer"
    prange = _psi_range(psi, B)
    if method == "enumerate":
        if words > max_words:
            n_ok = max(1, int(math.log(max_words) / math.log(max(B - 1, 2))))
            raise BudgetExceededError(
                f"{words} words at B={B}, n={n} exceed the budget of {max_words}",
                suggestion=f"B={B}, n={n_ok} or method=transfer")
        lo, hi, approx, exact = _enumerate(psi, q, t, B, n)
        return PressureBracket(q, t, B, n, lo, hi, "enumerate", approx, exact, prange)
    if method == "transfer":
        lo, hi = _transfer(psi, q, t, B, n, threshold, max_cells)
        return PressureBracket(q, t, B, n, lo, hi, "transfer", None, None, prange)
    raise ValueError(f"unknown method {method!r}")


def lambda_curve(psi: ArithmeticFunction, B: int, depth: int,
                 q_grid: Optional[Sequence[float]] = None, t: float = 1.0,
                 **kwargs) -> list:
    """Pressure brackets along a q-grid (sorted increasingly)."""
    grid = default_q_grid() if q_grid is None else np.asarray(q_grid, dtype=float)
    return [pressure_bracket(psi, q, t, B, depth, **kwargs) for q in np.sort(grid)]


def synthetic_curve(func, q_grid, psi_range=None) -> list:
    """Degenerate brackets from a known function, used to test the Legendre step."""
    return [PressureBracket(float(q), 1.0, 0, 1, float(func(q)), float(func(q)),
                            "synthetic", psi_range=psi_range) for q in q_grid]


# -- Legendre transform ------------------------------------------------------

@dataclass(frozen=True)
class RateValue:
    alpha: float
    lower: float
    upper: float
    q_star: Optional[float]
    finite: bool = True
    # alpha lies outside the slopes the q-grid resolves, so sup over the grid
    # may be short of the true value (the lower end stays valid)
    grid_limited: bool = False

    def as_interval(self) -> Interval:
        return Interval(self.lower, self.upper)

    @property
    def contains_zero(self) -> bool:
        return self.finite and self.lower <= 0.0


def _refine(qs, g, i):
    """Vertex of the parabola through three grid points around index i."""
    if i == 0 or i == len(qs) - 1:
        return g[i]
    x0, x1, x2 = qs[i - 1], qs[i], qs[i + 1]
    y0, y1, y2 = g[i - 1], g[i], g[i + 1]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    A = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    if A >= 0:
        return g[i]
    Bc = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom
    xv = -Bc / (2 * A)
    if not x0 <= xv <= x2:
        return g[i]
    C = y0 - A * x0 * x0 - Bc * x0
    return max(g[i], A * xv * xv + Bc * xv + C)


def rate_from_legendre(curve: Sequence[PressureBracket], alpha: float) -> RateValue:
    """Interval for sup_q (q alpha - Lambda(q)) over the curve's q-grid.

    The lower end uses the upper pressure bracket and is a valid lower bound
    for the cap-B rate. The upper end uses the lower bracket plus a parabolic
    refinement around the grid maximiser. Both are clipped below at 0.
    When alpha lies outside [min psi, max psi] on the capped digits the rate
    is infinite and ``finite`` is False.
    """
    alpha = float(alpha)
    curve = sorted(curve, key=lambda b: b.q)
    if len(curve) < 3:
        raise ValueError("need at least three grid points")
    qs = np.array([b.q for b in curve])
    up = np.array([b.upper for b in curve])
    lo = np.array([b.lower for b in curve])
    mid = 0.5 * (up + lo)
    prange = curve[0].psi_range
    s_left = (mid[1] - mid[0]) / (qs[1] - qs[0])
    s_right = (mid[-1] - mid[-2]) / (qs[-1] - qs[-2])
    if prange is not None:
        if alpha < prange[0] or alpha > prange[1]:
            return RateValue(alpha, math.inf, math.inf, None, finite=False)
    elif alpha < s_left or alpha > s_right:
        return RateValue(alpha, math.inf, math.inf, None, finite=False)
    g_lo = qs * alpha - up
    g_hi = qs * alpha - lo
    i_lo = int(np.argmax(g_lo))  # argmax returns the first, i.e. smallest q
    i_hi = int(np.argmax(g_hi))
    lower = max(0.0, float(g_lo[i_lo]))
    upper = max(0.0, float(_refine(qs, g_hi, i_hi)), lower)
    limited = not (s_left <= alpha <= s_right)
    return RateValue(alpha, lower, upper, float(qs[i_hi]), True, limited)


@dataclass
class RateFunctionTable:
    psi: str
    B: int
    depth: int
    rows: list = field(default_factory=list)

    def convexity_defects(self) -> list:
        """Midpoint convexity violations of interval midpoints on an even grid."""
        out = []
        finite = [r for r in self.rows if r.finite]
        for a, b, c in zip(finite, finite[1:], finite[2:]):
            if not math.isclose(b.alpha - a.alpha, c.alpha - b.alpha, rel_tol=1e-9):
                continue
            m = lambda r: 0.5 * (r.lower + r.upper)
            slack = 2 * max(r.upper - r.lower for r in (a, b, c))
            if m(b) > 0.5 * (m(a) + m(c)) + slack:
                out.append(b.alpha)
        return out


def rate_table(psi: ArithmeticFunction, B: int, depth: int, alpha_grid,
               q_grid=None, curve=None, **kwargs) -> RateFunctionTable:
    curve = curve or lambda_curve(psi, B, depth, q_grid, **kwargs)
    table = RateFunctionTable(psi.name, B, depth)
    table.rows = [rate_from_legendre(curve, a) for a in alpha_grid]
    return table


@dataclass(frozen=True)
class ScanRow:
    alpha: float
    rate: RateValue
    is_zero: bool

    @property
    def interval(self) -> Interval:
        return self.rate.as_interval()


def minimizer_scan(psi: ArithmeticFunction, B: int, depth: int, alpha_grid,
                   q_grid=None, tol: Optional[float] = None, curve=None,
                   **kwargs) -> list:
    """Rate intervals along alpha_grid, flagging approximate minimisers.

    An alpha counts as a minimiser when the upper end of its rate interval is
    within ``tol``; by default tol is the widest pressure bracket on the curve,
    so the flagged set tightens as the brackets do.
    """
    curve = curve or lambda_curve(psi, B, depth, q_grid, **kwargs)
    if tol is None:
        tol = max(b.width for b in curve)
    rows = []
    for a in alpha_grid:
        r = rate_from_legendre(curve, a)
        rows.append(ScanRow(float(a), r, r.finite and r.upper <= tol))
    return rows


# -- Lyapunov spectrum -------------------------------------------------------

@dataclass(frozen=True)
class SpectrumRow:
    alpha: float
    lower: Optional[float]
    upper: Optional[float]
    in_range: bool = True
    t_star: Optional[float] = None


@dataclass
class SpectrumTable:
    B: int
    depth: int
    rows: list = field(default_factory=list)
    t_grid: tuple = ()

    def monotonicity_defects(self, slack: float = 0.0) -> list:
        """Adjacent in-range alphas where the bracket rises beyond ``slack``."""
        rows = [r for r in self.rows if r.in_range]
        return [b.alpha for a, b in zip(rows, rows[1:]) if b.lower > a.upper + slack]


def _floor_clip(v: float) -> float:
    return min(1.0, max(0.5, v))


def lyapunov_spectrum(B: int, depth: int, alpha_grid, t_grid=None, **kwargs) -> SpectrumTable:
    """Cap-B spectrum max(min(inf_t (P(t) + t alpha) / alpha, 1), 1/2).

    P(t) is the geometric pressure of -t log T' on digits 2..B. It is never
    negative (the neutral point carries a measure with h = chi = 0), so the
    lower bracket is raised to 0. Alphas at or above 2 log B, the largest
    Lyapunov exponent available under the cap, are flagged out of range.
    """
    grid = default_t_grid() if t_grid is None else np.sort(np.asarray(t_grid, dtype=float))
    brackets = [pressure_bracket(IDENTITY, 0.0, t, B, depth, **kwargs) for t in grid]
    P_hi = np.array([b.upper for b in brackets])
    P_lo = np.maximum(np.array([b.lower for b in brackets]), 0.0)
    table = SpectrumTable(B, depth, t_grid=tuple(float(t) for t in grid))
    top = 2.0 * math.log(B)
    for a in alpha_grid:
        a = float(a)
        if a <= 0:
            raise ValueError("spectrum is defined for alpha > 0")
        if a >= top:
            table.rows.append(SpectrumRow(a, None, None, False))
            continue
        vals_hi = (P_hi + grid * a) / a
        vals_lo = (P_lo + grid * a) / a
        i = int(np.argmin(vals_hi))
        table.rows.append(SpectrumRow(a, _floor_clip(float(vals_lo.min())),
                                      _floor_clip(float(vals_hi[i])), True, float(grid[i])))
    return table


def bracket_width_bound(n: int) -> float:
    """2 D_n / n, the worst-case width allowed for a depth-n bracket."""
    return float(2 * distortion_budget(n) / n)

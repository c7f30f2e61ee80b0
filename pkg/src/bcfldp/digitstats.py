"""Arithmetic functions on BCF digits and Birkhoff averages along orbits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .exact import as_rational, digits

__all__ = [
    "ArithmeticFunction",
    "BirkhoffRecord",
    "IDENTITY",
    "LOGARITHM",
    "RECIPROCAL",
    "PRIME_TIMES_N",
    "PRESETS",
    "get_psi",
    "table_psi",
    "is_prime",
    "birkhoff_record",
    "birkhoff_mean",
    "three_means",
    "digit_frequency",
    "dyadic_digits",
]


_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for n < 3.3e24."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


class ArithmeticFunction:
    """A non-constant real function on the digits {2, 3, ...}.

    Parameters
    ----------
    name : str
        Label used in reports and run manifests.
    func : callable
        Scalar evaluator ``int -> number``. Rational-valued functions should
        return ints or Fractions so exact sums stay exact.
    array_func : callable, optional
        Vectorised evaluator on float64 digit arrays.
    bounds : callable, optional
        ``bounds(lo, hi)`` returns (inf, sup) of the function over the digits
        lo..hi, with ``hi=None`` meaning unbounded. Used to decide deviation
        events for lumps of digits without enumerating them.
    exact : bool
        Whether ``func`` returns exact rationals.
    """

    def __init__(self, name: str, func: Callable[[int], float], *,
                 array_func: Optional[Callable] = None,
                 bounds: Optional[Callable] = None,
                 exact: bool = False,
                 spec: Optional[str] = None):
        self.name = name
        self.func = func
        self._array_func = array_func
        self._bounds = bounds
        self.exact = exact
        self.spec = spec or name

    def __call__(self, n: int):
        if n < 2:
            raise ValueError(f"arithmetic functions live on digits >= 2, got {n}")
        return self.func(int(n))

    def __repr__(self):
        return f"ArithmeticFunction({self.name!r})"

    def values(self, digit_array) -> np.ndarray:
        arr = np.asarray(digit_array)
        if self._array_func is not None:
            return self._array_func(arr.astype(np.float64))
        flat = arr.ravel()
        uniq, inv = np.unique(flat, return_inverse=True)
        vals = np.array([float(self.func(int(u))) for u in uniq], dtype=np.float64)
        return vals[inv].reshape(arr.shape)

    def table(self, cap: int) -> list:
        """Values at digits 2..cap (index 0 is digit 2)."""
        return [self.func(k) for k in range(2, cap + 1)]

    def bounds(self, lo: int = 2, hi: Optional[int] = None):
        if hi is not None and hi < lo:
            raise ValueError("empty digit range")
        if self._bounds is not None:
            return self._bounds(lo, hi)
        if hi is None:
            return -math.inf, math.inf
        vals = [self.func(k) for k in range(lo, hi + 1)]
        return min(vals), max(vals)


def _identity_bounds(lo, hi):
    return lo, (math.inf if hi is None else hi)


def _log_bounds(lo, hi):
    return math.log(lo), (math.inf if hi is None else math.log(hi))


def _recip_bounds(lo, hi):
    return (0 if hi is None else Fraction(1, hi)), Fraction(1, lo)


def _prime_bounds(lo, hi):
    if hi is None:
        return 0, math.inf
    vals = [k if is_prime(k) else 0 for k in range(lo, hi + 1)]
    return min(vals), max(vals)


def _prime_array(arr):
    flat = arr.ravel()
    uniq, inv = np.unique(flat, return_inverse=True)
    vals = np.array([u if is_prime(int(u)) else 0.0 for u in uniq], dtype=np.float64)
    return vals[inv].reshape(arr.shape)


IDENTITY = ArithmeticFunction("identity", lambda n: n, array_func=lambda a: a,
                              bounds=_identity_bounds, exact=True)
LOGARITHM = ArithmeticFunction("logarithm", math.log, array_func=np.log,
                               bounds=_log_bounds)
RECIPROCAL = ArithmeticFunction("reciprocal", lambda n: Fraction(1, n),
                                array_func=lambda a: 1.0 / a,
                                bounds=_recip_bounds, exact=True)
PRIME_TIMES_N = ArithmeticFunction("prime", lambda n: n if is_prime(n) else 0,
                                   array_func=_prime_array,
                                   bounds=_prime_bounds, exact=True)

PRESETS = {
    "identity": IDENTITY,
    "logarithm": LOGARITHM,
    "log": LOGARITHM,
    "reciprocal": RECIPROCAL,
    "prime": PRIME_TIMES_N,
}


def table_psi(values: dict, default=0, name: Optional[str] = None) -> ArithmeticFunction:
    """Finite table on listed digits, constant ``default`` elsewhere."""
    if any(k < 2 for k in values):
        raise ValueError("table keys must be digits >= 2")
    values = {int(k): v for k, v in values.items()}
    top = max(values) if values else 1
    # digits past the table take the default, so constancy means all entries equal it
    if all(v == default for v in values.values()):
        raise ValueError("arithmetic function must be non-constant")
    exact = all(isinstance(v, (int, Fraction)) for v in values.values()) and isinstance(default, (int, Fraction))

    def f(n):
        return values.get(n, default)

    def bounds(lo, hi):
        end = top if hi is None else min(hi, top)
        vals = [f(k) for k in range(lo, end + 1)]
        if hi is None or hi > top:
            vals.append(default)
        return min(vals), max(vals)

    label = name or "table:" + ",".join(f"{k}={v}" for k, v in sorted(values.items())) + f",default={default}"
    return ArithmeticFunction(label, f, bounds=bounds, exact=exact, spec=label)


def get_psi(spec) -> ArithmeticFunction:
    """Resolve a preset name or a 'table:2=1,3=1/2,default=0' string."""
    if isinstance(spec, ArithmeticFunction):
        return spec
    s = str(spec).strip()
    if s.lower() in PRESETS:
        return PRESETS[s.lower()]
    if s.lower().startswith("table:"):
        values, default = {}, 0
        for item in s[6:].split(","):
            key, _, val = item.partition("=")
            key, val = key.strip(), val.strip()
            num = Fraction(val) if "." not in val and "e" not in val.lower() else float(val)
            if key == "default":
                default = num
            else:
                values[int(key)] = num
        return table_psi(values, default, name=s)
    raise ValueError(f"unknown arithmetic function {spec!r}; presets: {sorted(PRESETS)}")


@dataclass(frozen=True)
class BirkhoffRecord:
    x: Fraction
    n: int
    sum: float
    mean: float


def birkhoff_record(psi: ArithmeticFunction, x, n: int) -> BirkhoffRecord:
    if n < 1:
        raise ValueError("window length must be positive")
    x = as_rational(x)
    vals = [float(psi(b)) for b in digits(x, n)]
    total = math.fsum(vals)
    return BirkhoffRecord(x, n, total, total / n)


def birkhoff_mean(psi: ArithmeticFunction, x, n: int) -> float:
    """(1/n) sum_{j<=n} psi(b_j(x)); exact digits, compensated float sum."""
    return birkhoff_record(psi, x, n).mean


def three_means(x, n: int) -> tuple[float, float, float]:
    """Harmonic, geometric and arithmetic means of the first n digits."""
    word = digits(as_rational(x), n)
    harmonic = n / math.fsum(1.0 / b for b in word)
    geometric = math.exp(math.fsum(math.log(b) for b in word) / n)
    arithmetic = sum(word) / n
    return harmonic, geometric, arithmetic


def digit_frequency(x, n: int, d: int) -> Fraction:
    word = digits(as_rational(x), n)
    return Fraction(sum(1 for b in word if b == d), n)


_U64_MAX = np.uint64(0xFFFFFFFFFFFFFFFF)


def dyadic_digits(m: np.ndarray, n: int) -> np.ndarray:
    """Exact first n digits of x = m / 2**64 for a uint64 array m.

    Returns an (n, len(m)) uint64 array. m = 2**64 - 1 is rejected: its first
    digit is 2**64 + 1, which does not fit. The orbit of p/q is p' = q mod (q-p),
    q' = q - p, which keeps every quantity below 2**64 after the first step.
    """
    m = np.asarray(m, dtype=np.uint64)
    if (m == _U64_MAX).any():
        raise ValueError("m = 2**64 - 1 has a first digit beyond uint64")
    out = np.empty((n, m.size), dtype=np.uint64)
    nonzero = m != 0
    one = np.uint64(1)
    # first step with q = 2**64, done via 2**64 - 1 to stay in range
    r = np.where(nonzero, (~m) + one, one)
    quo = _U64_MAX // r
    rem = _U64_MAX % r + one
    wrap = rem == r
    quo = quo + wrap.astype(np.uint64)
    rem = np.where(wrap, np.uint64(0), rem)
    out[0] = np.where(nonzero, quo + one, np.uint64(2))
    p = np.where(nonzero, rem, np.uint64(0))
    q = np.where(nonzero, r, one)
    for j in range(1, n):
        r = q - p
        out[j] = q // r + one
        p = q % r
        q = r
    return out

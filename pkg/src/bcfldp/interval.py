"""Real intervals with open/closed ends.

Used both for target sets J of Birkhoff means and for two-sided numerical
brackets (Lyapunov exponents, pressures, rate values).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real

__all__ = ["Interval", "parse_number", "parse_interval"]


@dataclass(frozen=True)
class Interval:
    lo: Real
    hi: Real
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval: lo={self.lo} > hi={self.hi}")
        if math.isinf(self.lo) and self.lo_closed:
            object.__setattr__(self, "lo_closed", False)
        if math.isinf(self.hi) and self.hi_closed:
            object.__setattr__(self, "hi_closed", False)

    @classmethod
    def point(cls, value):
        return cls(value, value)

    @property
    def width(self):
        return self.hi - self.lo

    @property
    def degenerate(self):
        return self.lo == self.hi

    def __contains__(self, x):
        if x < self.lo or (x == self.lo and not self.lo_closed):
            return False
        if x > self.hi or (x == self.hi and not self.hi_closed):
            return False
        return True

    def contains_interval(self, lo, hi):
        """True when every value of the closed range [lo, hi] lies in self.

        An infinite end of the range counts as contained when self extends
        to infinity on that side.
        """
        lo_ok = lo in self or (lo == -math.inf and self.lo == -math.inf)
        hi_ok = hi in self or (hi == math.inf and self.hi == math.inf)
        return lo_ok and hi_ok

    def misses_interval(self, lo, hi):
        """True when no value of the closed range [lo, hi] lies in self."""
        if hi < self.lo or (hi == self.lo and not self.lo_closed):
            return True
        if lo > self.hi or (lo == self.hi and not self.hi_closed):
            return True
        return False

    def intersects(self, other: "Interval") -> bool:
        return not (self.hi < other.lo or other.hi < self.lo)

    def scaled(self, factor):
        """Image under x -> factor * x for factor > 0."""
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        return Interval(self.lo * factor, self.hi * factor, self.lo_closed, self.hi_closed)

    def __add__(self, other):
        if isinstance(other, Interval):
            return Interval(self.lo + other.lo, self.hi + other.hi)
        return Interval(self.lo + other, self.hi + other, self.lo_closed, self.hi_closed)

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.hi, -self.lo, self.hi_closed, self.lo_closed)

    def __sub__(self, other):
        if isinstance(other, Interval):
            return self + (-other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, c):
        """Multiplication by a non-negative scalar."""
        if isinstance(c, Interval):
            raise TypeError("interval products are not needed here")
        if c < 0:
            return Interval(self.hi * c, self.lo * c)
        return Interval(self.lo * c, self.hi * c)

    __rmul__ = __mul__

    def inflate(self, amount):
        return Interval(self.lo - amount, self.hi + amount)

    def to_floats(self):
        return float(self.lo), float(self.hi)

    def __str__(self):
        left = "[" if self.lo_closed else "("
        right = "]" if self.hi_closed else ")"
        return f"{left}{self.lo}, {self.hi}{right}"


def parse_number(text: str):
    """Parse '3', '5/2', '0.25', 'inf', 'log3' style tokens.

    Integers and p/q strings become exact Fractions; decimals stay floats
    unless they are written as fractions. ``logN`` gives ``math.log(N)``.
    """
    s = text.strip().lower()
    if s in ("inf", "+inf", "infinity", "oo"):
        return math.inf
    if s in ("-inf", "-infinity", "-oo"):
        return -math.inf
    if s.startswith("log"):
        return math.log(float(parse_number(s[3:].strip("()"))))
    if "/" in s or s.lstrip("+-").isdigit():
        return Fraction(s)
    return float(s)


def parse_interval(text: str) -> Interval:
    """Parse '3,4', '[3,4)', '(5/2, inf)' or 'log3,inf'.

    Bare pairs are closed at finite ends.
    """
    s = text.strip()
    lo_closed = hi_closed = True
    if s and s[0] in "[(":
        lo_closed = s[0] == "["
        s = s[1:]
    if s and s[-1] in "])":
        hi_closed = s[-1] == "]"
        s = s[:-1]
    parts = s.split(",")
    if len(parts) != 2:
        raise ValueError(f"cannot parse interval {text!r}")
    return Interval(parse_number(parts[0]), parse_number(parts[1]), lo_closed, hi_closed)

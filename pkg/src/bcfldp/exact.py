"""Exact arithmetic for the Renyi map and its backward continued fraction digits.

Points of [0, 1) are ``fractions.Fraction`` values. The inverse branch of the
Renyi map on the digit-k cylinder is the unimodular Moebius map

    g_k(y) = (y + k - 2) / (y + k - 1),

so every finite digit word corresponds to an integer 2x2 matrix of
determinant one, and cylinder endpoints are ratios of its entries.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

__all__ = [
    "ExactRational",
    "MoebiusMap",
    "DigitWord",
    "CylinderInterval",
    "as_rational",
    "renyi_apply",
    "digit_at",
    "digits",
    "digits_pq",
    "inverse_branch",
    "word_map",
    "word_matrix",
    "cylinder",
    "cylinder_length",
    "thaler_c",
    "thaler_sequence",
    "derivative",
    "distortion_budget",
]

ExactRational = Fraction


def as_rational(x) -> Fraction:
    """Convert ints, Fractions, 'p/q' strings and floats (exactly) to Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    try:
        return Fraction(x.numerator, x.denominator)
    except AttributeError:
        raise TypeError(f"cannot interpret {x!r} as an exact rational") from None


def _check_unit(x: Fraction) -> None:
    if not 0 <= x < 1:
        raise ValueError(f"point must lie in [0, 1), got {x}")


@dataclass(frozen=True)
class MoebiusMap:
    """y -> (a*y + b) / (c*y + d) with integer entries."""

    a: int
    b: int
    c: int
    d: int

    @classmethod
    def identity(cls):
        return cls(1, 0, 0, 1)

    @property
    def det(self) -> int:
        return self.a * self.d - self.b * self.c

    def __call__(self, y) -> Fraction:
        y = as_rational(y)
        return Fraction(self.a * y.numerator + self.b * y.denominator,
                        self.c * y.numerator + self.d * y.denominator)

    def __matmul__(self, other: "MoebiusMap") -> "MoebiusMap":
        """Composition ``self o other`` (matrix product)."""
        a, b, c, d = self.a, self.b, self.c, self.d
        e, f, g, h = other.a, other.b, other.c, other.d
        return MoebiusMap(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)

    def __pow__(self, n: int) -> "MoebiusMap":
        if n < 0:
            raise ValueError("only non-negative powers")
        result, base = MoebiusMap.identity(), self
        while n:
            if n & 1:
                result = result @ base
            base = base @ base
            n >>= 1
        return result

    def derivative(self, y) -> Fraction:
        y = as_rational(y)
        return Fraction(self.det) / (self.c * y + self.d) ** 2

    def normalized(self) -> "MoebiusMap":
        """Same map with the sign convention c > 0 or (c == 0 and d > 0)."""
        if self.c < 0 or (self.c == 0 and self.d < 0):
            return MoebiusMap(-self.a, -self.b, -self.c, -self.d)
        return self


class DigitWord(tuple):
    """Non-empty tuple of BCF digits, each at least 2."""

    def __new__(cls, digits: Sequence[int]):
        word = super().__new__(cls, (int(b) for b in digits))
        if not word:
            raise ValueError("a digit word must be non-empty")
        bad = [b for b in word if b < 2]
        if bad:
            raise ValueError(f"BCF digits are >= 2, got {bad}")
        return word

    def extend(self, *more: int) -> "DigitWord":
        return DigitWord(tuple(self) + tuple(more))

    def __repr__(self):
        return f"DigitWord({tuple(self)})"


@dataclass(frozen=True)
class CylinderInterval:
    word: DigitWord
    lo: Fraction
    hi: Fraction

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def __contains__(self, x) -> bool:
        return self.lo <= as_rational(x) < self.hi

    def contains_cylinder(self, other: "CylinderInterval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def disjoint_from(self, other: "CylinderInterval") -> bool:
        return self.hi <= other.lo or other.hi <= self.lo


def renyi_apply(x) -> Fraction:
    """T(x) = 1/(1-x) - floor(1/(1-x))."""
    x = as_rational(x)
    _check_unit(x)
    p, q = x.numerator, x.denominator
    return Fraction(q % (q - p), q - p)


def digits_pq(p: int, q: int, n: int) -> list[int]:
    """First n digits of p/q using integer arithmetic only (0 <= p < q)."""
    out = []
    for _ in range(n):
        r = q - p
        out.append(q // r + 1)
        p, q = q % r, r
    return out


def digit_at(x, n: int) -> int:
    """b_n(x) = floor(1 / (1 - T^{n-1} x)) + 1."""
    if n < 1:
        raise ValueError("digit index starts at 1")
    x = as_rational(x)
    _check_unit(x)
    return digits_pq(x.numerator, x.denominator, n)[-1]


def digits(x, n: int) -> DigitWord:
    if n < 1:
        raise ValueError("need at least one digit")
    x = as_rational(x)
    _check_unit(x)
    return DigitWord(digits_pq(x.numerator, x.denominator, n))


def inverse_branch(k: int) -> MoebiusMap:
    if k < 2:
        raise ValueError(f"branch index must be >= 2, got {k}")
    return MoebiusMap(1, k - 2, 1, k - 1)


def word_matrix(word: Sequence[int]) -> tuple[int, int, int, int]:
    """Entries of g_{b1} o ... o g_{bn} as a plain int 4-tuple (fast path)."""
    a, b, c, d = 1, 0, 0, 1
    for k in word:
        a, b, c, d = a + b, a * (k - 2) + b * (k - 1), c + d, c * (k - 2) + d * (k - 1)
    return a, b, c, d


def word_map(word: Sequence[int]) -> MoebiusMap:
    return MoebiusMap(*word_matrix(DigitWord(word)))


def cylinder(word: Sequence[int]) -> CylinderInterval:
    """Exact half-open interval of points whose first digits are ``word``."""
    word = DigitWord(word)
    a, b, c, d = word_matrix(word)
    return CylinderInterval(word, Fraction(b, d), Fraction(a + b, c + d))


def cylinder_length(word: Sequence[int]) -> Fraction:
    # unimodular, so hi - lo = 1 / (d (c + d))
    _, _, c, d = word_matrix(word)
    return Fraction(1, d * (c + d))


def thaler_sequence(n: int) -> Iterator[Fraction]:
    """Yield c_0, ..., c_n where c_0 = 1/2 and c_j = g_2(c_{j-1})."""
    c = Fraction(1, 2)
    yield c
    for _ in range(n):
        c = c / (c + 1)
        yield c


def thaler_c(n: int) -> Fraction:
    if n < 0:
        raise ValueError("index must be non-negative")
    for c in thaler_sequence(n):
        pass
    return c


def derivative(x) -> Fraction:
    """T'(x) = (1 - x)^-2."""
    x = as_rational(x)
    _check_unit(x)
    return 1 / (1 - x) ** 2


def distortion_budget(n: int) -> Fraction:
    """D_n = 2 * sum_{j=1}^{n-1} c_{n-j-1} + 2 with c_j = 1/(j+2).

    Bounds the oscillation of log (T^n)' over any depth-n cylinder.
    Equal to twice the n-th harmonic number.
    """
    if n < 1:
        raise ValueError("depth must be positive")
    return 2 * sum((Fraction(1, n - j + 1) for j in range(1, n)), Fraction(0)) + 2

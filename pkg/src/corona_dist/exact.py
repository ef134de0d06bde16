"""Exact scalars: Gaussian rationals, rational parsing, and dense polynomials.

Polynomials are tuples of coefficients in ascending powers. They are used
for density pieces, so they only need the handful of operations the
convolution algebra calls for.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence, Tuple, Union

RationalLike = Union[int, Fraction, str, float, Sequence[int]]


def to_fraction(value) -> Fraction:
    """Parse an exact rational.

    Accepts ints, Fractions, strings like ``"3/7"`` or ``"0.25"``, floats
    (converted exactly), and ``[num, den]`` pairs as used in the JSON schemas.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, (list, tuple)) and len(value) == 2:
        num, den = value
        if not isinstance(num, int) or not isinstance(den, int):
            raise TypeError(f"rational pair must hold integers, got {value!r}")
        if den == 0:
            raise ZeroDivisionError("zero denominator in rational pair")
        return Fraction(num, den)
    raise TypeError(f"cannot interpret {value!r} as a rational")


def fraction_pair(q: Fraction) -> list:
    return [q.numerator, q.denominator]


@dataclass(frozen=True)
class QQi:
    """Exact complex number ``re + i*im`` with rational parts."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "re", to_fraction(self.re))
        object.__setattr__(self, "im", to_fraction(self.im))

    @classmethod
    def of(cls, value) -> "QQi":
        if isinstance(value, QQi):
            return value
        if isinstance(value, complex):
            return cls(Fraction(value.real), Fraction(value.imag))
        if isinstance(value, (list, tuple)) and len(value) == 4:
            return cls(Fraction(value[0], value[1]), Fraction(value[2], value[3]))
        return cls(to_fraction(value), Fraction(0))

    def __add__(self, other) -> "QQi":
        other = QQi.of(other)
        return QQi(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self) -> "QQi":
        return QQi(-self.re, -self.im)

    def __sub__(self, other) -> "QQi":
        return self + (-QQi.of(other))

    def __rsub__(self, other) -> "QQi":
        return QQi.of(other) - self

    def __mul__(self, other) -> "QQi":
        other = QQi.of(other)
        return QQi(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other) -> "QQi":
        other = QQi.of(other)
        n = other.abs2()
        if n == 0:
            raise ZeroDivisionError("division by exact zero")
        return self * other.conjugate() * QQi(1 / n)

    def __rtruediv__(self, other) -> "QQi":
        return QQi.of(other) / self

    def __eq__(self, other) -> bool:
        try:
            other = QQi.of(other)
        except TypeError:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self) -> int:
        return hash((self.re, self.im))

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def conjugate(self) -> "QQi":
        return QQi(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def to_json(self) -> list:
        return [self.re.numerator, self.re.denominator, self.im.numerator, self.im.denominator]

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __repr__(self) -> str:
        if not self.im:
            return f"QQi({self.re})"
        return f"QQi({self.re}, {self.im})"


ZERO = QQi(0)
ONE = QQi(1)
I = QQi(0, 1)

# Polynomials: ascending coefficient tuples of QQi, no trailing zeros.
Poly = Tuple[QQi, ...]


def poly(coeffs: Iterable) -> Poly:
    out = [QQi.of(c) for c in coeffs]
    while out and not out[-1]:
        out.pop()
    return tuple(out)


def poly_add(p: Poly, q: Poly) -> Poly:
    n = max(len(p), len(q))
    return poly((p[k] if k < len(p) else ZERO) + (q[k] if k < len(q) else ZERO) for k in range(n))


def poly_scale(p: Poly, c) -> Poly:
    c = QQi.of(c)
    return poly(a * c for a in p)


def poly_mul(p: Poly, q: Poly) -> Poly:
    if not p or not q:
        return ()
    out = [ZERO] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] = out[i + j] + a * b
    return poly(out)


def poly_pow(p: Poly, n: int) -> Poly:
    out: Poly = (ONE,)
    for _ in range(n):
        out = poly_mul(out, p)
    return out


def poly_eval(p: Poly, x) -> QQi:
    acc = ZERO
    for c in reversed(p):
        acc = acc * x + c
    return acc


def poly_deriv(p: Poly) -> Poly:
    return poly(p[k] * k for k in range(1, len(p)))


def poly_antideriv(p: Poly) -> Poly:
    """Antiderivative vanishing at 0."""
    return poly([ZERO] + [p[k] * Fraction(1, k + 1) for k in range(len(p))])


def poly_compose_linear(p: Poly, a, b) -> Poly:
    """Return ``x -> p(a + b*x)``."""
    lin = poly([a, b])
    out: Poly = ()
    power: Poly = (ONE,)
    for c in p:
        out = poly_add(out, poly_scale(power, c))
        power = poly_mul(power, lin)
    return out


# Bivariate polynomials as dicts {(i, j): coeff} for x^i t^j.

def _bivar_shift(q: Poly) -> dict:
    """Coefficients of ``q(x - t)`` as a bivariate polynomial in (x, t)."""
    out: dict = {}
    for n, c in enumerate(q):
        # (x - t)^n = sum_k C(n,k) x^(n-k) (-t)^k
        binom = 1
        for k in range(n + 1):
            term = c * (binom * (-1) ** k)
            key = (n - k, k)
            out[key] = out.get(key, ZERO) + term
            binom = binom * (n - k) // (k + 1)
    return out


def convolution_kernel_integral(p: Poly, q: Poly, lower: Tuple, upper: Tuple) -> Poly:
    """Polynomial in x equal to the integral of p(t) q(x - t) dt.

    The limits are linear in x: ``lower = (a0, a1)`` means ``a0 + a1*x``.
    """
    shifted = _bivar_shift(q)
    # integrand x^i t^(j+m) with coefficient shifted[i,j]*p[m]
    prim: dict = {}
    for (i, j), c in shifted.items():
        for m, pm in enumerate(p):
            k = j + m + 1
            key = (i, k)
            prim[key] = prim.get(key, ZERO) + c * pm * Fraction(1, k)
    result: Poly = ()
    for (i, k), c in prim.items():
        if not c:
            continue
        xi = poly([ZERO] * i + [c])
        hi = poly_pow(poly(upper), k)
        lo = poly_pow(poly(lower), k)
        result = poly_add(result, poly_mul(xi, poly_add(hi, poly_scale(lo, -1))))
    return result

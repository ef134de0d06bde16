"""Helpers around Arb ball arithmetic (python-flint).

Every quantity that feeds a verdict is an ``arb``/``acb`` ball whose radius
bounds all rounding and truncation error. Flint's working precision is
process-global, so evaluation is wrapped in :func:`working_precision`.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Tuple

from flint import acb, arb, ctx, fmpq

from .exact import QQi, to_fraction

DEFAULT_PRECISION = 128
MIN_PRECISION = 53


class PrecisionError(ArithmeticError):
    """Requested accuracy is not reachable at the configured precision."""


def check_precision(bits: int) -> int:
    bits = int(bits)
    if bits < MIN_PRECISION:
        raise ValueError(f"precision must be at least {MIN_PRECISION} bits, got {bits}")
    return bits


@contextmanager
def working_precision(bits: int):
    with ctx.workprec(check_precision(bits)):
        yield


def arb_of(x) -> arb:
    """Ball for an exact rational, float, string, or existing ball."""
    if isinstance(x, arb):
        return x
    if isinstance(x, float):
        return arb(x)
    if isinstance(x, str) and "/" not in x:
        return arb(x)
    q = to_fraction(x)
    return arb(fmpq(q.numerator, q.denominator))


def acb_of(x) -> acb:
    if isinstance(x, acb):
        return x
    if isinstance(x, arb):
        return acb(x)
    if isinstance(x, QQi):
        return acb(arb_of(x.re), arb_of(x.im))
    if isinstance(x, complex):
        return acb(arb(x.real), arb(x.imag))
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return acb(arb_of(x[0]), arb_of(x[1]))
    return acb(arb_of(x))


def upper(x: arb) -> float:
    """A float that is >= every point of the ball."""
    v = float(x.upper())
    if math.isfinite(v) and arb(v) >= x.upper():
        return v
    return math.nextafter(v, math.inf)


def lower(x: arb) -> float:
    v = float(x.lower())
    if math.isfinite(v) and arb(v) <= x.lower():
        return v
    return math.nextafter(v, -math.inf)


def radius(x) -> float:
    """Float upper bound on the radius of an arb, or of an acb in the max norm."""
    if isinstance(x, acb):
        return max(radius(x.real), radius(x.imag))
    return upper(x.rad())


def complex_radius(x: acb) -> float:
    """Upper bound on ``|value - midpoint|`` in the complex modulus."""
    r = x.real.rad()
    i = x.imag.rad()
    return upper((r * r + i * i).sqrt())


@dataclass(frozen=True)
class Estimate:
    """Real value with an error radius; ``ball`` keeps the full-precision enclosure."""

    value: float
    radius: float
    ball: arb = None

    @classmethod
    def of(cls, x: arb) -> "Estimate":
        return cls(float(x.mid()), radius(x), x)

    @property
    def lower(self) -> float:
        return lower(self.ball) if self.ball is not None else self.value - self.radius

    @property
    def upper(self) -> float:
        return upper(self.ball) if self.ball is not None else self.value + self.radius


def ball_max(a: arb, b: arb) -> arb:
    return a.max(b)


def positive_part(x: arb) -> arb:
    return x.max(arb(0))


def norm2(zs: Iterable[acb]) -> arb:
    """Squared Euclidean norm of a complex vector."""
    total = arb(0)
    for z in zs:
        total += z.real * z.real + z.imag * z.imag
    return total


def real_norm(xs: Sequence[arb]) -> arb:
    total = arb(0)
    for x in xs:
        total += x * x
    return total.sqrt()


@dataclass(frozen=True)
class ComplexPoint:
    """Point of C^d held as complex balls, tagged with the working precision."""

    coords: Tuple[acb, ...]
    precision: int = DEFAULT_PRECISION

    def __post_init__(self):
        check_precision(self.precision)
        if not self.coords:
            raise ValueError("a complex point needs at least one coordinate")

    @classmethod
    def of(cls, values, precision: int = DEFAULT_PRECISION) -> "ComplexPoint":
        """Build from complex numbers, ``[re, im]`` pairs, rationals, or balls."""
        if not isinstance(values, (list, tuple)):
            values = [values]
        with working_precision(precision):
            coords = tuple(acb_of(v) for v in values)
        return cls(coords, precision)

    @property
    def dimension(self) -> int:
        return len(self.coords)

    def imag(self) -> Tuple[arb, ...]:
        return tuple(z.imag for z in self.coords)

    def with_precision(self, bits: int) -> "ComplexPoint":
        return ComplexPoint(self.coords, check_precision(bits))

    def to_complex(self) -> Tuple[complex, ...]:
        return tuple(complex(float(z.real.mid()), float(z.imag.mid())) for z in self.coords)

    def to_json(self) -> list:
        return [[float(z.real.mid()), float(z.imag.mid())] for z in self.coords]

    def sort_key(self) -> tuple:
        return tuple(x for z in self.to_complex() for x in (z.real, z.imag))


def points_from_json(data, precision: int = DEFAULT_PRECISION) -> list:
    """Parse a JSON array of complex coordinate lists.

    Each coordinate is a number, a ``[re, im]`` pair, or a string accepted by
    Python's ``complex``.
    """
    pts = []
    for row in data:
        if not isinstance(row, (list, tuple)):
            row = [row]
        vals = []
        for c in row:
            if isinstance(c, str):
                try:
                    vals.append(Fraction(c))
                except ValueError:
                    vals.append(complex(c.replace(" ", "")))
            else:
                vals.append(c)
        pts.append(ComplexPoint.of(vals, precision))
    return pts

"""Fourier-Laplace transform ``f^(z) = <f, exp(-i z.)>`` in ball arithmetic,
and Paley-Wiener-Schwartz growth constants.

A point term ``c d^alpha delta_a`` contributes ``c (iz)^alpha exp(-i<z,a>)``.
A density piece ``P`` on ``[a, b]`` is integrated in closed form by repeated
integration by parts,

    int_a^b P(x) e^{-izx} dx = [-e^{-izx} sum_m P^(m)(x) / (iz)^(m+1)]_a^b,

which cancels catastrophically for small ``|z| (b - a)``. There the piece is
expanded as a power series in ``z`` with an explicit tail bound instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence

from flint import acb, arb

from .balls import (
    ComplexPoint,
    PrecisionError,
    acb_of,
    arb_of,
    complex_radius,
    lower,
    norm2,
    upper,
    working_precision,
)
from .distribution import Box, Distribution, DistributionError, support_hull
from .exact import QQi, poly_compose_linear, poly_deriv

#: series branch is used when |z| * (piece length) is below this
SERIES_THRESHOLD = Fraction(1, 2)
DEFAULT_ACCURACY = 2.0 ** -32


@dataclass(frozen=True)
class TransformValue:
    """Transform value as a complex ball.

    ``radius`` bounds ``|true - value|`` in the complex modulus, covering both
    rounding and series truncation.
    """

    ball: acb
    precision: int
    scale: float = 1.0

    @property
    def value(self) -> complex:
        return complex(float(self.ball.real.mid()), float(self.ball.imag.mid()))

    @property
    def radius(self) -> float:
        return complex_radius(self.ball)

    def abs_ball(self) -> arb:
        with working_precision(self.precision):
            return abs(self.ball)


def _qqi_ball(c: QQi) -> acb:
    return acb_of(c)


def _piece_closed_form(p, a: Fraction, b: Fraction, z: acb) -> acb:
    iz = acb(0, 1) * z
    derivs = []
    q = p
    while q:
        derivs.append(q)
        q = poly_deriv(q)

    def primitive(x: Fraction) -> acb:
        xb = arb_of(x)
        total = acb(0)
        denom = iz
        for q in derivs:
            total += _eval_poly_ball(q, xb) / denom
            denom *= iz
        return -(-iz * xb).exp() * total

    return primitive(b) - primitive(a)


def _eval_poly_ball(p, x: arb) -> acb:
    acc = acb(0)
    for c in reversed(p):
        acc = acc * x + _qqi_ball(c)
    return acc


def _piece_series(p, a: Fraction, b: Fraction, z: acb, precision: int) -> acb:
    """Power series in z of ``int_a^b P(x) e^{-izx} dx`` with rigorous tail."""
    length = b - a
    q = poly_compose_linear(p, a, 1)  # Q(t) = P(a + t), t in [0, L]
    qmax = sum(math.sqrt(float(c.abs2())) * float(length) ** j for j, c in enumerate(q))
    qmax = math.nextafter(qmax * (1 + 1e-12), math.inf)
    zl = upper(abs(z)) * float(length)
    if not zl < 1:
        raise PrecisionError("series branch used outside its convergence region")
    target = 2.0 ** (-precision + 4) * max(qmax * float(length), 2.0 ** -600)
    # tail after n_terms terms: qmax L (|z|L)^N / N! / (1 - |z|L/(N+1))
    n_terms = 1
    tail = qmax * float(length)
    while True:
        tail = qmax * float(length) * zl ** n_terms / math.factorial(n_terms) / (1 - zl / (n_terms + 1))
        if tail < target or n_terms > 4 * precision:
            break
        n_terms += 1
    if not tail < target:
        raise PrecisionError("series did not reach the requested truncation bound")
    miz = acb(0, -1) * z
    total = acb(0)
    power = acb(1)
    for n in range(n_terms):
        # exact moment sum_j q_j L^(n+j+1)/(n+j+1)
        moment = QQi(0)
        for j, c in enumerate(q):
            k = n + j + 1
            moment = moment + c * (length ** k / k)
        total += power * _qqi_ball(moment)
        power = power * miz / (n + 1)
    tail_ball = arb(0, math.nextafter(tail, math.inf))
    total += acb(tail_ball, tail_ball)
    return (miz * arb_of(a)).exp() * total


def piece_transform(p, a, b, z: acb, precision: int, branch: Optional[str] = None) -> acb:
    """Transform of one density piece; ``branch`` forces 'series' or 'closed'."""
    a, b = Fraction(a), Fraction(b)
    if branch is None:
        small = upper(abs(z)) * float(b - a) < float(SERIES_THRESHOLD)
        branch = "series" if small else "closed"
    if branch == "series":
        return _piece_series(p, a, b, z, precision)
    if abs(z).contains(0):
        raise PrecisionError("closed-form branch needs z bounded away from 0")
    return _piece_closed_form(p, a, b, z)


def fl_transform(f: Distribution, z: ComplexPoint,
                 accuracy: Optional[float] = DEFAULT_ACCURACY) -> TransformValue:
    """Evaluate the Fourier-Laplace transform of f at z.

    Raises :class:`PrecisionError` if the error radius exceeds
    ``accuracy * max(1, sum of term magnitudes)``; pass ``accuracy=None`` to
    accept any finite radius.
    """
    if z.dimension != f.dimension:
        raise DistributionError(f"point has dimension {z.dimension}, distribution {f.dimension}")
    prec = z.precision
    with working_precision(prec):
        total = acb(0)
        scale = arb(0)
        iz = [acb(0, 1) * c for c in z.coords]
        for t in f.terms:
            phase = acb(0)
            for zj, aj in zip(z.coords, t.location):
                if aj:
                    phase += zj * arb_of(aj)
            term = _qqi_ball(t.coeff) * (acb(0, -1) * phase).exp()
            for izj, k in zip(iz, t.deriv):
                if k:
                    term *= izj ** k
            total += term
            scale += abs(term)
        if f.density is not None:
            for a, b, p in f.density.intervals:
                if p:
                    piece = piece_transform(p, a, b, z.coords[0], prec)
                    total += piece
                    scale += abs(piece)
        out = TransformValue(total, prec, max(1.0, upper(scale)))
    if not (total.real.is_finite() and total.imag.is_finite()):
        raise PrecisionError("transform evaluation produced a non-finite enclosure")
    if accuracy is not None and out.radius > accuracy * out.scale:
        raise PrecisionError(
            f"error radius {out.radius:.3e} exceeds {accuracy:.1e} x scale {out.scale:.3e} "
            f"at {prec} bits; raise the precision"
        )
    return out


# ---------------------------------------------------------------- PWS


@dataclass(frozen=True)
class PWSBound:
    """Certified ``|f^(z)| <= const_c (1+|z|^2)^exponent_n exp(H_K(Im z))``."""

    const_c: float
    exponent_n: Fraction
    support_box: Box

    def to_json(self) -> dict:
        return {"C": self.const_c, "N": float(self.exponent_n),
                "K": self.support_box.to_json()}


def box_support_ball(box: Box, eta: Sequence[arb]) -> arb:
    """Supporting function of an axis-aligned box."""
    total = arb(0)
    for lo, hi, e in zip(box.lower, box.upper, eta):
        total += (e * arb_of(lo)).max(e * arb_of(hi))
    return total


def pws_bound_for(f: Distribution) -> PWSBound:
    """Constructive growth constants for f.

    Each point term contributes ``|coeff|`` with exponent ``|alpha|/2``
    (``|z^alpha| <= |z|^|alpha| <= (1+|z|^2)^(|alpha|/2)``); each density piece
    contributes a bound on the integral of ``|P|``.
    """
    box = support_hull(f)
    if box is None:
        raise DistributionError("the zero distribution has no growth bound")
    with working_precision(128):
        total = arb(0)
        for t in f.terms:
            total += abs(_qqi_ball(t.coeff))
        if f.density is not None:
            for a, b, p in f.density.intervals:
                length = arb_of(b - a)
                q = poly_compose_linear(p, a, 1)
                for j, c in enumerate(q):
                    total += abs(_qqi_ball(c)) * length ** (j + 1) / (j + 1)
        const_c = upper(total)
    return PWSBound(const_c, Fraction(f.max_order, 2), box)


def pws_rhs(bound: PWSBound, z: ComplexPoint) -> arb:
    with working_precision(z.precision):
        growth = (1 + norm2(z.coords)) ** arb_of(bound.exponent_n)
        return arb_of(bound.const_c) * growth * box_support_ball(bound.support_box, z.imag()).exp()


@dataclass
class PWSReport:
    passed: bool
    worst_margin: float
    rows: List[dict] = field(default_factory=list)


def verify_pws_on_samples(f: Distribution, bound: PWSBound, samples: Sequence[ComplexPoint],
                          accuracy: Optional[float] = DEFAULT_ACCURACY) -> PWSReport:
    """Check the growth bound at each sample.

    ``margin`` is the upper end of the ball ``bound - |f^(z)|``: a negative
    margin is a rigorous violation. ``certified`` says the lower end is >= 0 too.
    """
    if not samples:
        raise ValueError("need at least one sample point")
    rows = []
    worst = math.inf
    for z in samples:
        val = fl_transform(f, z, accuracy)
        rhs = pws_rhs(bound, z)
        with working_precision(z.precision):
            gap = rhs - abs(val.ball)
        margin = upper(gap)
        worst = min(worst, margin)
        rows.append({
            "point": z.to_json(),
            "value": [val.value.real, val.value.imag],
            "bound": float(rhs.mid()),
            "margin": margin,
            "certified": lower(gap) >= 0,
            "pass": margin >= 0,
        })
    return PWSReport(all(r["pass"] for r in rows), worst, rows)

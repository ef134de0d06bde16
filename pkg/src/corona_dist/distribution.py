"""Exact compactly supported distributions and their convolution ring.

A :class:`Distribution` is a finite sum of terms ``c * d^alpha delta_a`` in any
dimension, plus (in dimension one only) a piecewise-polynomial density.
Coefficients are Gaussian rationals, locations and breakpoints are rationals,
so every ring operation here is exact and equality is structural.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .exact import (
    ONE,
    ZERO,
    Poly,
    QQi,
    convolution_kernel_integral,
    fraction_pair,
    poly,
    poly_add,
    poly_compose_linear,
    poly_deriv,
    poly_eval,
    poly_mul,
    poly_scale,
    to_fraction,
)


class DistributionError(ValueError):
    """Rejected input to a distribution operation."""


class MultiIndex(tuple):
    """Derivative order ``(k_1, ..., k_d)`` with nonnegative entries."""

    def __new__(cls, entries: Iterable[int]):
        entries = tuple(int(k) for k in entries)
        if not entries:
            raise DistributionError("multi-index needs at least one entry")
        if any(k < 0 for k in entries):
            raise DistributionError(f"negative multi-index entry in {entries}")
        return super().__new__(cls, entries)

    @property
    def order(self) -> int:
        return sum(self)

    def plus(self, other: "MultiIndex") -> "MultiIndex":
        return MultiIndex(a + b for a, b in zip(self, other))

    @classmethod
    def zero(cls, d: int) -> "MultiIndex":
        return cls((0,) * d)


@dataclass(frozen=True)
class PointMassTerm:
    """``coeff * d^deriv delta_location``."""

    coeff: QQi
    location: Tuple[Fraction, ...]
    deriv: MultiIndex

    def __post_init__(self):
        object.__setattr__(self, "coeff", QQi.of(self.coeff))
        object.__setattr__(self, "location", tuple(to_fraction(x) for x in self.location))
        object.__setattr__(self, "deriv", MultiIndex(self.deriv))
        if len(self.location) != len(self.deriv):
            raise DistributionError("location and derivative order differ in length")

    @property
    def key(self):
        return (self.location, tuple(self.deriv))


@dataclass(frozen=True)
class PiecewisePolyDensity:
    """Density on ``[breakpoints[0], breakpoints[-1]]``; ``pieces[j]`` holds
    ascending coefficients in the absolute variable x on the j-th interval."""

    breakpoints: Tuple[Fraction, ...]
    pieces: Tuple[Poly, ...]

    def __post_init__(self):
        bps = tuple(to_fraction(b) for b in self.breakpoints)
        pieces = tuple(poly(p) for p in self.pieces)
        if len(bps) < 2:
            raise DistributionError("a density needs at least two breakpoints")
        if len(pieces) != len(bps) - 1:
            raise DistributionError(
                f"{len(pieces)} pieces for {len(bps)} breakpoints; expected {len(bps) - 1}"
            )
        if any(b >= c for b, c in zip(bps, bps[1:])):
            raise DistributionError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "pieces", pieces)

    @property
    def support(self) -> Tuple[Fraction, Fraction]:
        return self.breakpoints[0], self.breakpoints[-1]

    @property
    def intervals(self):
        return zip(self.breakpoints, self.breakpoints[1:], self.pieces)

    def value_at(self, x, side: str = "right") -> QQi:
        """One-sided limit of the density at x (0 outside the support)."""
        x = to_fraction(x)
        for a, b, p in self.intervals:
            if (side == "right" and a <= x < b) or (side == "left" and a < x <= b):
                return poly_eval(p, x)
        return ZERO

    def refine(self, grid: Sequence[Fraction]) -> List[Poly]:
        """Pieces on a finer grid (which must cover the support); zero outside."""
        out = []
        for a, b in zip(grid, grid[1:]):
            piece: Poly = ()
            for lo, hi, p in self.intervals:
                if lo <= a and b <= hi:
                    piece = p
                    break
            out.append(piece)
        return out


def _normalize_density(bps: Sequence[Fraction], pieces: Sequence[Poly]) -> Optional[PiecewisePolyDensity]:
    bps = list(bps)
    pieces = [poly(p) for p in pieces]
    # merge neighbours with identical polynomials
    i = 0
    while i < len(pieces) - 1:
        if pieces[i] == pieces[i + 1]:
            del pieces[i + 1]
            del bps[i + 1]
        else:
            i += 1
    while pieces and not pieces[0]:
        pieces.pop(0)
        bps.pop(0)
    while pieces and not pieces[-1]:
        pieces.pop()
        bps.pop()
    if not pieces:
        return None
    return PiecewisePolyDensity(tuple(bps), tuple(pieces))


def _add_densities(
    f: Optional[PiecewisePolyDensity], g: Optional[PiecewisePolyDensity]
) -> Optional[PiecewisePolyDensity]:
    if f is None:
        return g
    if g is None:
        return f
    grid = sorted(set(f.breakpoints) | set(g.breakpoints))
    pieces = [poly_add(p, q) for p, q in zip(f.refine(grid), g.refine(grid))]
    return _normalize_density(grid, pieces)


@dataclass(frozen=True)
class Distribution:
    """Element of the convolution ring, kept in canonical form.

    Terms are merged on ``(location, deriv)``, zero coefficients dropped,
    and the remaining terms sorted, so ``==`` is exact ring equality.
    """

    dimension: int
    terms: Tuple[PointMassTerm, ...] = ()
    density: Optional[PiecewisePolyDensity] = None

    def __post_init__(self):
        d = int(self.dimension)
        if d < 1:
            raise DistributionError("dimension must be at least 1")
        merged: Dict[tuple, QQi] = {}
        for t in self.terms:
            if len(t.location) != d:
                raise DistributionError(
                    f"term location {t.location} does not have dimension {d}"
                )
            merged[t.key] = merged.get(t.key, ZERO) + t.coeff
        terms = tuple(
            PointMassTerm(c, loc, deriv)
            for (loc, deriv), c in sorted(merged.items(), key=lambda kv: kv[0])
            if c
        )
        density = self.density
        if density is not None:
            if d != 1:
                raise DistributionError("densities are only supported in dimension 1")
            density = _normalize_density(density.breakpoints, density.pieces)
        object.__setattr__(self, "dimension", d)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "density", density)

    # ring structure as operators; ``*`` is convolution between distributions
    def __add__(self, other: "Distribution") -> "Distribution":
        return add(self, other)

    def __neg__(self) -> "Distribution":
        return scale(self, -1)

    def __sub__(self, other: "Distribution") -> "Distribution":
        return add(self, scale(other, -1))

    def __mul__(self, other):
        if isinstance(other, Distribution):
            return convolve(self, other)
        return scale(self, other)

    def __rmul__(self, other):
        return scale(self, other)

    @property
    def is_zero(self) -> bool:
        return not self.terms and self.density is None

    @property
    def max_order(self) -> int:
        return max((t.deriv.order for t in self.terms), default=0)

    def to_json(self) -> dict:
        return distribution_to_json(self)

    def __repr__(self) -> str:
        parts = []
        for t in self.terms:
            loc = ",".join(str(x) for x in t.location)
            der = "" if t.deriv.order == 0 else f"d^{tuple(t.deriv)}"
            parts.append(f"{t.coeff!r}*{der}delta[{loc}]")
        if self.density is not None:
            parts.append(f"density{list(map(str, self.density.breakpoints))}")
        body = " + ".join(parts) if parts else "0"
        return f"Distribution(d={self.dimension}: {body})"


# ---------------------------------------------------------------- builders


def zero(dimension: int = 1) -> Distribution:
    return Distribution(dimension)


def delta(location: Optional[Sequence] = None, *, dimension: int = 1, coeff=1,
          deriv: Optional[Sequence[int]] = None) -> Distribution:
    """``coeff * d^deriv delta_location``; the identity element by default."""
    if location is None:
        location = (0,) * dimension
    elif not isinstance(location, (list, tuple)):
        location = (location,)
    d = len(location)
    deriv = MultiIndex.zero(d) if deriv is None else MultiIndex(deriv)
    return Distribution(d, (PointMassTerm(QQi.of(coeff), tuple(location), deriv),))


def piecewise(breakpoints: Sequence, pieces: Sequence[Sequence]) -> Distribution:
    """One-dimensional density from breakpoints and ascending coefficient lists."""
    return Distribution(1, (), PiecewisePolyDensity(tuple(breakpoints), tuple(poly(p) for p in pieces)))


def indicator(a=0, b=1) -> Distribution:
    return piecewise([a, b], [[1]])


# ---------------------------------------------------------------- ring ops


def _check_dims(f: Distribution, g: Distribution) -> None:
    if f.dimension != g.dimension:
        raise DistributionError(
            f"dimension mismatch: {f.dimension} vs {g.dimension}"
        )


def add(f: Distribution, g: Distribution) -> Distribution:
    _check_dims(f, g)
    return Distribution(f.dimension, f.terms + g.terms, _add_densities(f.density, g.density))


def scale(f: Distribution, lam) -> Distribution:
    lam = QQi.of(lam)
    if not lam:
        return zero(f.dimension)
    terms = tuple(PointMassTerm(t.coeff * lam, t.location, t.deriv) for t in f.terms)
    density = None
    if f.density is not None:
        density = PiecewisePolyDensity(
            f.density.breakpoints, tuple(poly_scale(p, lam) for p in f.density.pieces)
        )
    return Distribution(f.dimension, terms, density)


def shift(f: Distribution, a: Sequence) -> Distribution:
    """Translate the support of f by the vector a."""
    a = tuple(to_fraction(x) for x in a)
    if len(a) != f.dimension:
        raise DistributionError("shift vector has the wrong dimension")
    terms = tuple(
        PointMassTerm(t.coeff, tuple(x + y for x, y in zip(t.location, a)), t.deriv)
        for t in f.terms
    )
    density = None
    if f.density is not None:
        s = a[0]
        density = PiecewisePolyDensity(
            tuple(b + s for b in f.density.breakpoints),
            tuple(poly_compose_linear(p, -s, 1) for p in f.density.pieces),
        )
    return Distribution(f.dimension, terms, density)


def distributional_derivative(rho: PiecewisePolyDensity) -> Distribution:
    """Derivative of a density: piecewise derivative plus jump deltas."""
    pieces = tuple(poly_deriv(p) for p in rho.pieces)
    terms = []
    for b in rho.breakpoints:
        jump = rho.value_at(b, "right") - rho.value_at(b, "left")
        if jump:
            terms.append(PointMassTerm(jump, (b,), MultiIndex((0,))))
    return Distribution(1, tuple(terms), PiecewisePolyDensity(rho.breakpoints, pieces))


def differentiate(f: Distribution, axis: int = 0) -> Distribution:
    """Distributional partial derivative along ``axis``."""
    bump = MultiIndex(1 if k == axis else 0 for k in range(f.dimension))
    out = Distribution(
        f.dimension,
        tuple(PointMassTerm(t.coeff, t.location, t.deriv.plus(bump)) for t in f.terms),
    )
    if f.density is not None:
        out = add(out, distributional_derivative(f.density))
    return out


def multiply_by_coordinate(f: Distribution, axis: int = 0) -> Distribution:
    """``x_axis * f``; its transform is ``i`` times the partial derivative of f^.

    Uses ``x_j d^alpha delta_a = a_j d^alpha delta_a - alpha_j d^(alpha - e_j) delta_a``.
    """
    if not 0 <= axis < f.dimension:
        raise DistributionError("axis out of range")
    terms = []
    for t in f.terms:
        if t.location[axis]:
            terms.append(PointMassTerm(t.coeff * QQi(t.location[axis]), t.location, t.deriv))
        k = t.deriv[axis]
        if k:
            lower = MultiIndex(d - 1 if j == axis else d for j, d in enumerate(t.deriv))
            terms.append(PointMassTerm(t.coeff * QQi(-k), t.location, lower))
    density = None
    if f.density is not None:
        density = PiecewisePolyDensity(
            f.density.breakpoints, tuple(poly_mul(poly([0, 1]), p) for p in f.density.pieces)
        )
    return Distribution(f.dimension, tuple(terms), density)


def _convolve_densities(f: PiecewisePolyDensity, g: PiecewisePolyDensity) -> Optional[PiecewisePolyDensity]:
    contributions = []
    for a0, a1, p in f.intervals:
        if not p:
            continue
        for b0, b1, q in g.intervals:
            if not q:
                continue
            xs = sorted({a0 + b0, a0 + b1, a1 + b0, a1 + b1})
            for xl, xr in zip(xs, xs[1:]):
                xm = (xl + xr) / 2
                # t ranges over [max(a0, x-b1), min(a1, x-b0)]
                lower = (a0, 0) if a0 >= xm - b1 else (-b1, 1)
                upper = (a1, 0) if a1 <= xm - b0 else (-b0, 1)
                lo_m = lower[0] + lower[1] * xm
                hi_m = upper[0] + upper[1] * xm
                if lo_m >= hi_m:
                    continue
                piece = convolution_kernel_integral(p, q, lower, upper)
                if piece:
                    contributions.append((xl, xr, piece))
    if not contributions:
        return None
    grid = sorted({x for xl, xr, _ in contributions for x in (xl, xr)})
    pieces = []
    for a, b in zip(grid, grid[1:]):
        acc: Poly = ()
        for xl, xr, piece in contributions:
            if xl <= a and b <= xr:
                acc = poly_add(acc, piece)
        pieces.append(acc)
    return _normalize_density(grid, pieces)


def _term_times(t: PointMassTerm, g: Distribution) -> Distribution:
    """Convolution of a single point term with g."""
    terms = tuple(
        PointMassTerm(t.coeff * s.coeff,
                      tuple(x + y for x, y in zip(t.location, s.location)),
                      t.deriv.plus(s.deriv))
        for s in g.terms
    )
    out = Distribution(g.dimension, terms)
    if g.density is not None:
        moved = shift(Distribution(1, (), g.density), t.location)
        for _ in range(t.deriv.order):
            moved = differentiate(moved)
        out = add(out, scale(moved, t.coeff))
    return out


def convolve(f: Distribution, g: Distribution) -> Distribution:
    """Exact convolution ``f * g``."""
    _check_dims(f, g)
    out = zero(f.dimension)
    for t in f.terms:
        out = add(out, _term_times(t, g))
    if f.density is not None:
        if f.dimension != 1:
            raise DistributionError("density convolution needs dimension 1")
        for s in g.terms:
            out = add(out, _term_times(s, Distribution(1, (), f.density)))
        if g.density is not None:
            out = add(out, Distribution(1, (), _convolve_densities(f.density, g.density)))
    return out


# ---------------------------------------------------------------- support


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``[lower, upper]`` with rational corners."""

    lower: Tuple[Fraction, ...]
    upper: Tuple[Fraction, ...]

    def minkowski_sum(self, other: "Box") -> "Box":
        return Box(
            tuple(a + b for a, b in zip(self.lower, other.lower)),
            tuple(a + b for a, b in zip(self.upper, other.upper)),
        )

    def contains_box(self, other: "Box") -> bool:
        return all(a <= b for a, b in zip(self.lower, other.lower)) and all(
            a >= b for a, b in zip(self.upper, other.upper)
        )

    def corners(self):
        from itertools import product
        return product(*zip(self.lower, self.upper))

    def to_json(self) -> dict:
        return {"lower": [fraction_pair(x) for x in self.lower],
                "upper": [fraction_pair(x) for x in self.upper]}


def support_points(f: Distribution) -> List[Tuple[Fraction, ...]]:
    """Locations of point terms and density support endpoints."""
    pts = [t.location for t in f.terms]
    if f.density is not None:
        a, b = f.density.support
        pts.extend([(a,), (b,)])
    return pts


def support_hull(f: Distribution) -> Optional[Box]:
    """Bounding box of the support; ``None`` marks the zero distribution."""
    pts = support_points(f)
    if not pts:
        return None
    cols = list(zip(*pts))
    return Box(tuple(min(c) for c in cols), tuple(max(c) for c in cols))


def in_cone(f: Distribution, cone) -> bool:
    """Exact test that the support of f lies in the cone.

    Density supports are intervals, so checking both endpoints suffices.
    """
    if cone.dimension != f.dimension:
        raise DistributionError("cone and distribution dimensions differ")
    return all(cone.contains(p) for p in support_points(f))


# ---------------------------------------------------------------- JSON


def _coeff_to_json(c: QQi) -> list:
    if c.im == 0:
        return fraction_pair(c.re)
    return c.to_json()


def _coeff_from_json(v) -> QQi:
    if isinstance(v, (list, tuple)) and len(v) == 4:
        return QQi.of(v)
    return QQi.of(to_fraction(v))


def distribution_to_json(f: Distribution) -> dict:
    out = {
        "dimension": f.dimension,
        "terms": [
            {
                "coeff": t.coeff.to_json(),
                "location": [fraction_pair(x) for x in t.location],
                "deriv": list(t.deriv),
            }
            for t in f.terms
        ],
    }
    if f.density is not None:
        out["density"] = {
            "breakpoints": [fraction_pair(b) for b in f.density.breakpoints],
            "pieces": [[_coeff_to_json(c) for c in p] for p in f.density.pieces],
        }
    return out


def distribution_from_json(data) -> Distribution:
    if isinstance(data, str):
        data = json.loads(data)
    try:
        d = int(data["dimension"])
        terms = []
        for t in data.get("terms", []):
            loc = tuple(to_fraction(x) for x in t["location"])
            deriv = t.get("deriv", [0] * len(loc))
            terms.append(PointMassTerm(_coeff_from_json(t.get("coeff", [1, 1, 0, 1])), loc, deriv))
        density = None
        if data.get("density") is not None:
            dens = data["density"]
            density = PiecewisePolyDensity(
                tuple(to_fraction(b) for b in dens["breakpoints"]),
                tuple(poly(_coeff_from_json(c) for c in p) for p in dens["pieces"]),
            )
    except (KeyError, TypeError) as exc:
        raise DistributionError(f"malformed distribution JSON: {exc}") from exc
    return Distribution(d, tuple(terms), density)

"""Closed convex cones, metric projections and supporting functions.

``H(xi) = sup <x, xi>`` over ``B = C ∩ {|x| <= 1}`` is computed in closed
form for the full space, the orthant and the light cone. Any cone also
satisfies ``H(xi) = |proj_C(xi)|`` (Moreau decomposition), which is how
finitely generated cones are handled and how the closed forms are
cross-checked. The same module holds the weight ``p(z) = log(1+|z|^2) +
H(Im z)`` and the sampled checks of its admissibility properties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numpy as np
from flint import acb, arb, arb_mat

from .balls import (
    ComplexPoint,
    Estimate,
    acb_of,
    arb_of,
    norm2,
    positive_part,
    real_norm,
    upper,
    working_precision,
)
from .exact import to_fraction

LOG8_PLUS_1 = math.log(8) + 1


class ConeError(ValueError):
    """Invalid cone description."""


class ProjectionError(RuntimeError):
    """Active-set projection failed to converge; carries the iteration trace."""

    def __init__(self, message: str, trace: list):
        super().__init__(message)
        self.trace = trace


def _as_vector(xi, d: int) -> np.ndarray:
    v = np.asarray([float(x) for x in xi], dtype=float)
    if v.shape != (d,):
        raise ConeError(f"expected a vector of length {d}, got {len(v)}")
    return v


class Cone:
    """Closed convex cone with apex 0 in R^dimension."""

    kind: str = ""
    dimension: int

    def contains(self, point: Sequence) -> bool:
        raise NotImplementedError

    def project(self, xi) -> np.ndarray:
        raise NotImplementedError

    def support(self, xi) -> float:
        """Supporting function of the unit-ball section, in floating point."""
        raise NotImplementedError

    def support_ball(self, xi: Sequence[arb]) -> arb:
        """Rigorous enclosure of the supporting function at a ball vector."""
        raise NotImplementedError

    def section_samples(self, n: int, seed: int = 0) -> np.ndarray:
        """About n points of ``C ∩ B`` (rows), low-discrepancy in direction."""
        raise NotImplementedError

    def to_json(self) -> dict:
        return {"kind": self.kind, "dimension": self.dimension}


def _sobol(dim: int, n: int, seed: int) -> np.ndarray:
    from scipy.stats import qmc

    m = max(1, math.ceil(math.log2(max(n, 2))))
    pts = qmc.Sobol(dim, scramble=True, seed=seed).random_base2(m)
    return pts[:n]


def _sphere_directions(dim: int, n: int, seed: int) -> np.ndarray:
    from scipy.stats import norm

    if dim == 1:
        return np.array([[1.0], [-1.0]])
    u = np.clip(_sobol(dim, n, seed), 1e-12, 1 - 1e-12)
    g = norm.ppf(u)
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _with_radial_grid(directions: np.ndarray, radii=(0.25, 0.5, 0.75)) -> np.ndarray:
    """Unit directions plus a coarse radial grid on a slice of them, and the apex."""
    k = max(1, len(directions) // 20)
    inner = [directions[:k] * r for r in radii]
    apex = np.zeros((1, directions.shape[1]))
    return np.vstack([directions, *inner, apex])


@dataclass(frozen=True)
class FullSpace(Cone):
    dimension: int
    kind: str = field(default="full", init=False)

    def contains(self, point) -> bool:
        return len(point) == self.dimension

    def project(self, xi) -> np.ndarray:
        return _as_vector(xi, self.dimension)

    def support(self, xi) -> float:
        return float(np.linalg.norm(_as_vector(xi, self.dimension)))

    def support_ball(self, xi):
        return real_norm(xi)

    def section_samples(self, n, seed=0):
        return _with_radial_grid(_sphere_directions(self.dimension, n, seed))


@dataclass(frozen=True)
class Orthant(Cone):
    dimension: int
    kind: str = field(default="orthant", init=False)

    def contains(self, point) -> bool:
        return len(point) == self.dimension and all(to_fraction(x) >= 0 for x in point)

    def project(self, xi) -> np.ndarray:
        return np.maximum(_as_vector(xi, self.dimension), 0.0)

    def support(self, xi) -> float:
        return float(np.linalg.norm(self.project(xi)))

    def support_ball(self, xi):
        return real_norm([positive_part(x) for x in xi])

    def section_samples(self, n, seed=0):
        return _generated_section_samples(np.eye(self.dimension), n, seed)


@dataclass(frozen=True)
class LightCone(Cone):
    """``{(x, t) in R^s x R : |x| <= c t}``; ``dimension`` is the ambient s + 1."""

    dimension: int
    speed: Fraction = Fraction(1)
    kind: str = field(default="lightcone", init=False)

    def __post_init__(self):
        object.__setattr__(self, "speed", to_fraction(self.speed))
        if self.speed <= 0:
            raise ConeError("light-cone speed must be positive")
        if self.dimension < 2:
            raise ConeError("a light cone needs at least one spatial and one time axis")

    def contains(self, point) -> bool:
        if len(point) != self.dimension:
            return False
        *x, t = (to_fraction(v) for v in point)
        return t >= 0 and sum(v * v for v in x) <= self.speed ** 2 * t * t

    def project(self, xi) -> np.ndarray:
        v = _as_vector(xi, self.dimension)
        x, tau = v[:-1], v[-1]
        c = float(self.speed)
        r = float(np.linalg.norm(x))
        if r <= c * tau:
            return v
        if tau <= -c * r:
            return np.zeros_like(v)
        # nearest point on the boundary ray through (c x/|x|, 1)
        coef = (tau + c * r) / (c * c + 1)
        return np.concatenate([coef * c * x / r, [coef]])

    def support(self, xi) -> float:
        v = _as_vector(xi, self.dimension)
        c = float(self.speed)
        r = float(np.linalg.norm(v[:-1]))
        tau = v[-1]
        if r <= c * tau:
            return float(math.hypot(r, tau))
        if tau <= -c * r:
            return 0.0
        return float((tau + c * r) / math.sqrt(c * c + 1))

    def support_ball(self, xi):
        c = arb_of(self.speed)
        r = real_norm(xi[:-1])
        tau = xi[-1]
        inside = (r * r + tau * tau).sqrt()
        middle = (tau + c * r) / (c * c + 1).sqrt()
        if r <= c * tau:
            return inside
        if tau <= -c * r:
            return arb(0)
        if tau * c < r and tau > -c * r:
            return middle
        # undecided branch: enclose every branch that may apply
        out = middle
        if not (r > c * tau):
            out = out.union(inside)
        if not (tau > -c * r):
            out = out.union(arb(0))
        return out

    def section_samples(self, n, seed=0):
        s = self.dimension - 1
        c = float(self.speed)
        half = n // 2
        u = _sphere_directions(s, max(half, 2), seed)
        if s == 1:
            u_bnd = np.array([[1.0], [-1.0]])
            rim = np.hstack([c * u_bnd, np.ones((2, 1))])
            rs = (np.arange(half) + 0.5) / half
            inner = np.vstack([
                np.hstack([c * sign * rs[:, None], np.ones((half, 1))]) for sign in (1.0, -1.0)
            ])
        else:
            rim = np.hstack([c * u, np.ones((len(u), 1))])
            from scipy.stats import norm

            # radius and direction from one Sobol point; separate streams correlate
            w = np.clip(_sobol(s + 1, half, seed + 1), 1e-12, 1 - 1e-12)
            g = norm.ppf(w[:, 1:])
            g /= np.linalg.norm(g, axis=1, keepdims=True)
            rs = w[:, 0] ** (1.0 / s)
            inner = np.hstack([c * rs[:, None] * g, np.ones((half, 1))])
        axis = np.zeros((1, self.dimension))
        axis[0, -1] = 1.0
        dirs = np.vstack([rim, inner, axis])
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        return _with_radial_grid(dirs)

    def to_json(self) -> dict:
        return {"kind": self.kind, "dimension": self.dimension,
                "speed": [self.speed.numerator, self.speed.denominator]}


@dataclass(frozen=True)
class Polyhedral(Cone):
    """Cone of nonnegative combinations of finitely many generators."""

    dimension: int
    generators: Tuple[Tuple[Fraction, ...], ...]
    kind: str = field(default="polyhedral", init=False)

    def __post_init__(self):
        gens = tuple(tuple(to_fraction(x) for x in g) for g in self.generators)
        if not gens:
            raise ConeError("a polyhedral cone needs at least one generator")
        for g in gens:
            if len(g) != self.dimension:
                raise ConeError(f"generator {g} does not have dimension {self.dimension}")
            if not any(g):
                raise ConeError("generators must be nonzero")
        object.__setattr__(self, "generators", gens)

    @property
    def matrix(self) -> np.ndarray:
        """Generators as columns, in floating point."""
        return np.array([[float(x) for x in g] for g in self.generators]).T

    def contains(self, point) -> bool:
        b = [to_fraction(x) for x in point]
        if len(b) != self.dimension:
            return False
        cols = [list(g) for g in self.generators]
        lam, _ = active_set_nnls(cols, b, exact=True)
        residual = [b[i] - sum(l * c[i] for l, c in zip(lam, cols)) for i in range(len(b))]
        return not any(residual)

    def nnls(self, xi) -> Tuple[np.ndarray, list]:
        cols = [[float(x) for x in g] for g in self.generators]
        lam, trace = active_set_nnls(cols, list(_as_vector(xi, self.dimension)), exact=False)
        return np.array(lam, dtype=float), trace

    def project(self, xi) -> np.ndarray:
        lam, _ = self.nnls(xi)
        return self.matrix @ lam

    def support(self, xi) -> float:
        return float(np.linalg.norm(self.project(xi)))

    def support_ball(self, xi):
        mid = [float(x.mid()) for x in xi]
        value = self._certified_support(xi, mid)
        if value is not None:
            return value
        # degenerate face: certify at a nearby point, H is 1-Lipschitz
        rng = np.random.default_rng(12345)
        eps = 2.0 ** -40
        for _ in range(8):
            v = rng.standard_normal(self.dimension)
            v *= eps / np.linalg.norm(v)
            moved = [x + float(dv) for x, dv in zip(xi, v)]
            value = self._certified_support(moved, [m + float(dv) for m, dv in zip(mid, v)])
            if value is not None:
                return value + arb(0, eps)
        raise ProjectionError("could not certify the supporting function", [])

    def _certified_support(self, xi, mid) -> Optional[arb]:
        lam, _ = active_set_nnls([[float(x) for x in g] for g in self.generators], mid, exact=False)
        active = [j for j, l in enumerate(lam) if l > 0]
        gens = [[arb_of(x) for x in g] for g in self.generators]
        if not active:
            proj = [arb(0)] * self.dimension
        else:
            a = arb_mat([[gens[j][i] for j in active] for i in range(self.dimension)])
            gram = a.transpose() * a
            rhs = a.transpose() * arb_mat([[x] for x in xi])
            try:
                sol = gram.solve(rhs)
            except (ZeroDivisionError, ValueError):
                return None
            coef = [sol[k, 0] for k in range(len(active))]
            if not all(c > 0 for c in coef):
                return None
            proj = [sum((coef[k] * gens[j][i] for k, j in enumerate(active)), arb(0))
                    for i in range(self.dimension)]
        if len(active) == self.dimension:
            # invertible Gram matrix: the active generators span R^d, residual is 0
            return real_norm(proj)
        resid = [x - p for x, p in zip(xi, proj)]
        for j in range(len(gens)):
            if j in active:
                continue
            if not (sum((g * r for g, r in zip(gens[j], resid)), arb(0)) < 0):
                return None
        return real_norm(proj)

    def section_samples(self, n, seed=0):
        return _generated_section_samples(self.matrix, n, seed)

    def to_json(self) -> dict:
        return {"kind": self.kind, "dimension": self.dimension,
                "generators": [[[x.numerator, x.denominator] for x in g] for g in self.generators]}


def _generated_section_samples(gens: np.ndarray, n: int, seed: int) -> np.ndarray:
    """Normalized nonnegative combinations of generator columns, one batch per face."""
    m = gens.shape[1]
    subsets = [s for k in range(1, min(m, 4) + 1) for s in combinations(range(m), k)]
    per = max(1, n // len(subsets))
    chunks = []
    for idx, s in enumerate(subsets):
        if len(s) == 1:
            w = np.ones((1, 1))
        else:
            u = np.clip(_sobol(len(s), per, seed + idx), 1e-12, 1 - 1e-12)
            w = -np.log(u)
            w /= w.sum(axis=1, keepdims=True)
        x = w @ gens[:, list(s)].T
        norms = np.linalg.norm(x, axis=1, keepdims=True)
        keep = norms[:, 0] > 1e-12
        chunks.append(x[keep] / norms[keep])
    return _with_radial_grid(np.vstack(chunks))


def active_set_nnls(cols: List[list], b: list, exact: bool = False,
                    max_iter: Optional[int] = None) -> Tuple[list, list]:
    """Lawson-Hanson active-set solution of ``min |G lam - b|, lam >= 0``.

    ``cols`` are the generator columns. With ``exact=True`` all arithmetic
    is over Fractions and the tolerance is zero, which terminates in
    finitely many steps. Returns ``(lam, trace)``.
    """
    m = len(cols)
    d = len(b)
    tol = 0 if exact else 1e-13 * (1.0 + max((abs(x) for x in b), default=0.0)) * max(
        1.0, max(abs(x) for c in cols for x in c))
    zero = Fraction(0) if exact else 0.0
    lam = [zero] * m
    passive: List[int] = []
    trace: list = []
    max_iter = max_iter or 30 * m + 100

    def residual(x):
        return [b[i] - sum(x[j] * cols[j][i] for j in range(m)) for i in range(d)]

    def gradient(x):
        r = residual(x)
        return [sum(cols[j][i] * r[i] for i in range(d)) for j in range(m)]

    def lstsq(idx):
        if exact:
            return _exact_normal_solve([cols[j] for j in idx], b)
        a = np.array([cols[j] for j in idx]).T
        sol, *_ = np.linalg.lstsq(a, np.array(b), rcond=None)
        return list(sol)

    it = 0
    w = gradient(lam)
    while True:
        candidates = [j for j in range(m) if j not in passive and w[j] > tol]
        if not candidates:
            break
        j = max(candidates, key=lambda k: w[k])
        passive.append(j)
        while True:
            it += 1
            trace.append({"iteration": it, "passive": sorted(passive)})
            if it > max_iter:
                raise ProjectionError(f"active-set search did not converge in {max_iter} steps", trace)
            s = lstsq(passive)
            full = [zero] * m
            for k, idx in enumerate(passive):
                full[idx] = s[k]
            if all(full[k] > 0 for k in passive):
                break
            ratios = [lam[k] / (lam[k] - full[k]) for k in passive
                      if full[k] <= 0 and lam[k] - full[k] > 0]
            alpha = min(ratios) if ratios else zero
            lam = [lam[k] + alpha * (full[k] - lam[k]) for k in range(m)]
            passive = [k for k in passive if (lam[k] > 0 if exact else lam[k] > tol)]
            for k in range(m):
                if k not in passive:
                    lam[k] = zero
            if not passive:
                break
        if passive:
            lam = full
        w = gradient(lam)
        trace[-1]["residual"] = float(sum(x * x for x in residual(lam))) ** 0.5
    return lam, trace


def _exact_normal_solve(cols: List[list], b: list) -> List[Fraction]:
    """Solve ``(A^T A) s = A^T b`` exactly by Gauss-Jordan elimination."""
    k = len(cols)
    mat = [[sum(x * y for x, y in zip(cols[i], cols[j])) for j in range(k)]
           + [sum(x * y for x, y in zip(cols[i], b))] for i in range(k)]
    for col in range(k):
        pivot = next((r for r in range(col, k) if mat[r][col] != 0), None)
        if pivot is None:
            raise ProjectionError("singular normal equations in exact projection", [])
        mat[col], mat[pivot] = mat[pivot], mat[col]
        pv = mat[col][col]
        mat[col] = [x / pv for x in mat[col]]
        for r in range(k):
            if r != col and mat[r][col] != 0:
                f = mat[r][col]
                mat[r] = [x - f * y for x, y in zip(mat[r], mat[col])]
    return [mat[i][k] for i in range(k)]


# ---------------------------------------------------------------- JSON


def cone_from_json(data) -> Cone:
    try:
        kind = str(data["kind"]).lower()
        d = int(data["dimension"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConeError(f"malformed cone: {exc}") from exc
    if d < 1:
        raise ConeError("cone dimension must be positive")
    if kind in ("full", "fullspace"):
        return FullSpace(d)
    if kind == "orthant":
        return Orthant(d)
    if kind in ("lightcone", "light"):
        return LightCone(d, to_fraction(data.get("speed", 1)))
    if kind == "polyhedral":
        gens = data.get("generators")
        if not gens:
            raise ConeError("polyhedral cone needs generators")
        return Polyhedral(d, tuple(tuple(to_fraction(x) for x in g) for g in gens))
    raise ConeError(f"unknown cone kind {kind!r}")


# ---------------------------------------------------------------- weight p


def weight_ball(cone: Cone, z: ComplexPoint) -> arb:
    if z.dimension != cone.dimension:
        raise ConeError("point and cone dimensions differ")
    with working_precision(z.precision):
        return (1 + norm2(z.coords)).log() + cone.support_ball(z.imag())


def weight_p(cone: Cone, z: ComplexPoint) -> Estimate:
    """``p(z) = log(1 + |z|^2) + H(Im z)`` with its error radius."""
    return Estimate.of(weight_ball(cone, z))


@dataclass
class LocalityReport:
    passed: bool
    count: int
    worst_slack: float
    violations: list
    undecided: list


def check_weight_locality(cone: Cone, pairs, k1: float = 0.0, k2: float = 0.0) -> LocalityReport:
    """Check ``p(zeta) <= p(z) + log 8 + 1`` for pairs with
    ``|z - zeta| <= exp(-k1 p(z) - k2)``; the slack is the rigorous lower bound
    of the difference."""
    if k1 < 0 or k2 < 0:
        raise ValueError("K1 and K2 must be nonnegative")
    worst = math.inf
    violations, undecided = [], []
    count = 0
    for idx, (z, zeta) in enumerate(pairs):
        pz = weight_ball(cone, z)
        pzeta = weight_ball(cone, zeta)
        with working_precision(max(z.precision, zeta.precision)):
            dist = norm2([a - b for a, b in zip(z.coords, zeta.coords)]).sqrt()
            allowed = (-arb_of(k1) * pz - arb_of(k2)).exp()
            if dist > allowed:
                raise ValueError(f"pair {idx} violates |z - zeta| <= exp(-K1 p(z) - K2)")
            slack = pz + arb(8).log() + 1 - pzeta
        count += 1
        lo = float(slack.lower())
        worst = min(worst, lo)
        if slack < 0:
            violations.append({"index": idx, "p_z": float(pz.mid()), "p_zeta": float(pzeta.mid())})
        elif not slack >= 0:
            undecided.append(idx)
    return LocalityReport(not violations and not undecided, count, worst, violations, undecided)


def hessian_quad_form(z: ComplexPoint, w: Sequence) -> Estimate:
    """``w* F(z) w`` for the complex Hessian F of ``log(1 + |z|^2)``."""
    if len(w) != z.dimension:
        raise ValueError("w and z dimensions differ")
    with working_precision(z.precision):
        ws = [acb_of(x) for x in w]
        nz = norm2(z.coords)
        nw = norm2(ws)
        inner = sum((x.conjugate() * y for x, y in zip(ws, z.coords)), acb(0))
        num = nw + nw * nz - (inner.real * inner.real + inner.imag * inner.imag)
        val = num / ((1 + nz) * (1 + nz))
    return Estimate.of(val)


@dataclass
class AxiomReport:
    passed: bool
    worst_subadditivity: float
    worst_homogeneity: float
    count: int


def check_support_fn_axioms(cone: Cone, samples, rel_tol: float = 1e-12) -> AxiomReport:
    """Subadditivity ``H(xi+eta) <= H(xi)+H(eta)`` and homogeneity
    ``H(t xi) = t H(xi)`` on samples ``(xi, eta, t)`` with t >= 0."""
    worst_sub = -math.inf
    worst_hom = 0.0
    ok = True
    n = 0
    for xi, eta, t in samples:
        if t < 0:
            raise ValueError("homogeneity samples need t >= 0")
        xi = _as_vector(xi, cone.dimension)
        eta = _as_vector(eta, cone.dimension)
        hx, he = cone.support(xi), cone.support(eta)
        scale = 1.0 + hx + he + float(np.linalg.norm(xi)) + float(np.linalg.norm(eta))
        sub = (cone.support(xi + eta) - hx - he) / scale
        hom = abs(cone.support(t * xi) - t * hx) / max(1.0, t * max(hx, float(np.linalg.norm(xi))))
        worst_sub = max(worst_sub, sub)
        worst_hom = max(worst_hom, hom)
        if sub > rel_tol or hom > rel_tol:
            ok = False
        n += 1
    return AxiomReport(ok, worst_sub, worst_hom, n)


def sampled_support(cone: Cone, xi, points: Optional[np.ndarray] = None,
                    n: int = 100_000, seed: int = 0) -> float:
    """Brute-force ``max <x, xi>`` over sample points of ``C ∩ B``."""
    if points is None:
        points = cone.section_samples(n, seed)
    return float(np.max(points @ _as_vector(xi, cone.dimension)))

"""Corona lower bound: evaluation, falsification search, Bezout identities,
and constants for the necessity direction.

A sampler can refute ``sum_i |f_i^(z)| >= C (1+|z|^2)^-N exp(-M H(Im z))``
for all z, never prove it. Verdicts therefore come in three kinds:
a rigorous violation (ball of the left side strictly below the ball of the
right side, confirmed again at doubled precision), no violation found on
the samples, or inconclusive.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np
from flint import acb, arb

from .balls import (
    DEFAULT_PRECISION,
    ComplexPoint,
    Estimate,
    PrecisionError,
    arb_of,
    lower,
    norm2,
    upper,
    working_precision,
)
from .cones import Cone
from .distribution import (
    Distribution,
    DistributionError,
    convolve,
    delta,
    in_cone,
    multiply_by_coordinate,
    support_points,
    zero,
)
from .transform import DEFAULT_ACCURACY, fl_transform, pws_bound_for

log = logging.getLogger(__name__)

NO_VIOLATION = "noViolationFoundOnSamples"
VIOLATION = "violationAt"
INCONCLUSIVE = "inconclusive"

MIN_POSITIVE = 2.0 ** -20


@dataclass(frozen=True)
class CoronaParams:
    const_c: float
    exponent_n: float
    cone_scale_m: float

    def __post_init__(self):
        for name in ("const_c", "exponent_n", "cone_scale_m"):
            v = getattr(self, name)
            if not v > 0:
                raise ValueError(f"{name} must be strictly positive, got {v}")

    def to_json(self) -> dict:
        return {"C": float(self.const_c), "N": float(self.exponent_n), "M": float(self.cone_scale_m)}


@dataclass
class CoronaVerdict:
    status: str
    point: Optional[list] = None
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    min_ratio: Optional[float] = None
    reason: str = ""
    inconclusive_points: list = field(default_factory=list)
    evaluations: int = 0
    point_decimal: Optional[list] = None

    @property
    def is_violation(self) -> bool:
        return self.status == VIOLATION

    def to_json(self) -> dict:
        out = {"status": self.status, "point": self.point, "lhs": self.lhs,
               "rhs": self.rhs, "minRatio": self.min_ratio}
        if self.reason:
            out["reason"] = self.reason
        if self.point_decimal is not None:
            out["pointDecimal"] = self.point_decimal
        if self.inconclusive_points:
            out["inconclusivePoints"] = self.inconclusive_points
        out["evaluations"] = self.evaluations
        return out


def corona_bound_ball(params: CoronaParams, cone: Cone, z: ComplexPoint) -> arb:
    if z.dimension != cone.dimension:
        raise ValueError("point and cone dimensions differ")
    with working_precision(z.precision):
        h = cone.support_ball(z.imag())
        growth = (1 + norm2(z.coords)) ** (-arb_of(params.exponent_n))
        return arb_of(params.const_c) * growth * (-arb_of(params.cone_scale_m) * h).exp()


def corona_lower_bound(params: CoronaParams, cone: Cone, z: ComplexPoint) -> Estimate:
    """Right-hand side ``C (1+|z|^2)^-N exp(-M H(Im z))`` with error radius."""
    return Estimate.of(corona_bound_ball(params, cone, z))


def transform_sum_ball(fs: Sequence[Distribution], z: ComplexPoint, accuracy=None) -> arb:
    with working_precision(z.precision):
        total = arb(0)
        for f in fs:
            total += abs(fl_transform(f, z, accuracy).ball)
    return total


def _compare(fs, params, cone, z: ComplexPoint):
    """Return (lhs ball, rhs ball); raises PrecisionError on evaluation failure."""
    lhs = transform_sum_ball(fs, z, DEFAULT_ACCURACY)
    rhs = corona_bound_ball(params, cone, z)
    return lhs, rhs


def _rigorous_violation(fs, params, cone, z: ComplexPoint) -> Optional[Tuple[arb, arb]]:
    """Strict separation at z, re-confirmed at doubled precision."""
    lhs, rhs = _compare(fs, params, cone, z)
    if not lhs < rhs:
        return None
    z2 = z.with_precision(2 * z.precision)
    lhs2, rhs2 = _compare(fs, params, cone, z2)
    if not lhs2 < rhs2:
        log.warning("violation at %s not confirmed at %d bits", z.to_complex(), z2.precision)
        return None
    return lhs, rhs


def _ratio(lhs: arb, rhs: arb) -> float:
    r = float(rhs.mid())
    return float(lhs.mid()) / r if r > 0 else math.inf


def check_corona(fs: Sequence[Distribution], params: CoronaParams, cone: Cone,
                 samples: Sequence[ComplexPoint]) -> CoronaVerdict:
    """Compare ``sum |f_i^(z)|`` with the corona bound at every sample.

    Points are scanned in lexicographic order, so the reported violation is
    the lowest violating point regardless of input order.
    """
    if not samples:
        raise ValueError("need at least one sample point")
    for f in fs:
        if not in_cone(f, cone):
            raise DistributionError("every f_i must be supported in the cone")
    min_ratio = math.inf
    failed = []
    for z in sorted(samples, key=lambda p: p.sort_key()):
        try:
            lhs, rhs = _compare(fs, params, cone, z)
            min_ratio = min(min_ratio, _ratio(lhs, rhs))
            if lhs < rhs:
                confirmed = _rigorous_violation(fs, params, cone, z)
                if confirmed is None:
                    failed.append({"point": z.to_json(), "reason": "not confirmed at doubled precision"})
                    continue
                return CoronaVerdict(VIOLATION, z.to_json(), upper(lhs), lower(rhs),
                                     min_ratio, evaluations=len(samples), point_decimal=_decimal(z))
        except PrecisionError as exc:
            failed.append({"point": z.to_json(), "reason": str(exc)})
    if failed:
        return CoronaVerdict(INCONCLUSIVE, min_ratio=min_ratio,
                             reason=f"{len(failed)} point(s) could not be evaluated",
                             inconclusive_points=failed, evaluations=len(samples))
    return CoronaVerdict(NO_VIOLATION, min_ratio=min_ratio, evaluations=len(samples))


# ---------------------------------------------------------------- search


@dataclass(frozen=True)
class SearchBox:
    """Per coordinate ``(re_lo, re_hi, im_lo, im_hi)``."""

    ranges: Tuple[Tuple[float, float, float, float], ...]

    @property
    def dimension(self) -> int:
        return len(self.ranges)

    def bounds(self) -> np.ndarray:
        return np.array([[r[0], r[1]] for r in self.ranges] + [[r[2], r[3]] for r in self.ranges],
                        dtype=float)

    def to_point(self, x: np.ndarray, precision: int) -> ComplexPoint:
        d = self.dimension
        return ComplexPoint.of([complex(x[k], x[d + k]) for k in range(d)], precision)


def _decimal(z: ComplexPoint) -> list:
    digits = int(z.precision * 0.30103) + 2
    return [[c.real.mid().str(digits, radius=False), c.imag.mid().str(digits, radius=False)]
            for c in z.coords]


def _midpoint(values: Sequence[acb], precision: int) -> ComplexPoint:
    with working_precision(precision):
        return ComplexPoint(tuple(acb(v.real.mid(), v.imag.mid()) for v in values), precision)


def gauss_newton_polish(fs: Sequence[Distribution], z: ComplexPoint, max_iter: int = 40,
                        max_precision: int = 4096) -> Tuple[ComplexPoint, int]:
    """Drive ``(f_1^, ..., f_n^)`` towards a common zero near z.

    Gauss-Newton steps ``J s = F`` in least squares, with the exact
    Jacobian ``d_j f^ = -i (x_j f)^``. Precision grows with the digits
    gained so rounding never hides the residual. Stops when the residual
    stops shrinking; returns the last point and the number of transform
    evaluations spent.
    """
    from flint import acb_mat

    d = z.dimension
    derivs = [[multiply_by_coordinate(f, j) for j in range(d)] for f in fs]
    prec = z.precision
    evals = 0
    best, best_res = z, math.inf
    for _ in range(max_iter):
        z = z.with_precision(prec)
        with working_precision(prec):
            try:
                F = [fl_transform(f, z, None).ball for f in fs]
                J = [[acb(0, -1) * fl_transform(g, z, None).ball for g in row] for row in derivs]
            except PrecisionError:
                break
            evals += len(fs) * (d + 1)
            res = float(norm2(F).sqrt().mid())
            if not res < best_res:
                break
            best, best_res = z, res
            if res == 0:
                break
            jm = acb_mat(J)
            jh = acb_mat([[jm[i, j].conjugate() for i in range(len(fs))] for j in range(d)])
            try:
                step = (jh * jm).solve(jh * acb_mat([[x] for x in F]))
            except (ZeroDivisionError, ValueError):
                break
            z = _midpoint([z.coords[j] - step[j, 0] for j in range(d)], prec)
            # keep ~64 guard bits below the residual's magnitude
            if res > 0:
                need = int(-math.log2(res)) + 64 + int(math.log2(1 + sum(abs(c) for c in z.to_complex())))
                prec = min(max_precision, max(prec, need))
    return best, evals


def search_violation(fs: Sequence[Distribution], params: CoronaParams, cone: Cone,
                     box: SearchBox, budget: int = 4000, seed: int = 0,
                     precision: int = DEFAULT_PRECISION, candidates: int = 4) -> CoronaVerdict:
    """Scan the ratio ``sum |f_i^| / bound`` for a rigorous violation.

    A scrambled Sobol scan spends half the budget; pattern search refines
    the best few scan points in floating point, and a Gauss-Newton polish
    in ball arithmetic chases common zeros below float resolution. Every
    reported violation is separated rigorously, again at doubled precision.
    """
    from scipy.stats import qmc

    if budget <= 0:
        raise ValueError("budget must be positive")
    if box.dimension != cone.dimension:
        raise ValueError("search box and cone dimensions differ")
    for f in fs:
        if not in_cone(f, cone):
            raise DistributionError("every f_i must be supported in the cone")
    bounds = box.bounds()
    width = bounds[:, 1] - bounds[:, 0]
    free = width > 0
    n_free = int(free.sum())
    evals = 0
    scan_prec = max(64, precision // 2)
    float_budget = max(1, budget - budget // 10)  # the rest is reserved for polishing

    def ratio_at(x: np.ndarray) -> float:
        nonlocal evals
        evals += 1
        z = box.to_point(x, scan_prec)
        try:
            lhs = transform_sum_ball(fs, z)
            rhs = corona_bound_ball(params, cone, z)
        except PrecisionError:
            return math.inf
        return _ratio(lhs, rhs)

    def certify(z: ComplexPoint) -> Optional[CoronaVerdict]:
        try:
            hit = _rigorous_violation(fs, params, cone, z)
        except PrecisionError:
            return None
        if hit is None:
            return None
        lhs, rhs = hit
        return CoronaVerdict(VIOLATION, z.to_json(), upper(lhs), lower(rhs), _ratio(lhs, rhs),
                             point_decimal=_decimal(z))

    def within_box(z: ComplexPoint) -> bool:
        tol = 1e-6 * (1 + width)
        for k, c in enumerate(z.to_complex()):
            lo_re, hi_re, lo_im, hi_im = box.ranges[k]
            if not (lo_re - tol[k] <= c.real <= hi_re + tol[k]
                    and lo_im - tol[box.dimension + k] <= c.imag <= hi_im + tol[box.dimension + k]):
                return False
        return True

    n_scan = max(1, float_budget // 2)
    if n_free:
        m = max(1, math.ceil(math.log2(n_scan)))
        u = qmc.Sobol(n_free, scramble=True, seed=seed).random_base2(m)[:n_scan]
    else:
        u = np.zeros((1, 0))
    pts = np.tile(bounds[:, 0], (len(u), 1))
    pts[:, free] += u * width[free]
    scored = sorted(((ratio_at(p), tuple(p)) for p in pts), key=lambda t: (t[0], t[1]))
    best_ratio, best_x = scored[0][0], np.array(scored[0][1])

    # full 3^n pattern in low dimension, compass steps beyond
    if n_free <= 4:
        grids = np.meshgrid(*[np.array([-1.0, 0.0, 1.0])] * n_free, indexing="ij")
        pattern = np.stack([g.ravel() for g in grids], axis=1) if n_free else np.zeros((0, 0))
    else:
        pattern = np.vstack([np.eye(n_free), -np.eye(n_free)])
    refined = [(best_ratio, best_x)]
    starts = scored[:max(1, candidates)] if n_free else []
    for start_ratio, start in starts:
        if evals >= float_budget:
            break
        x = np.array(start)
        r = start_ratio
        h = width / max(2.0, len(u) ** (1.0 / max(n_free, 1)))
        while evals < float_budget and np.any(h[free] > 1e-15 * (1 + np.abs(x[free]))):
            if r < 1:
                hit = certify(box.to_point(x, precision))
                if hit is not None:
                    hit.min_ratio = min(hit.min_ratio, best_ratio)
                    hit.evaluations = evals
                    return hit
            moved = False
            for delta_u in pattern:
                if not delta_u.any():
                    continue
                if evals >= float_budget:
                    break
                y = x.copy()
                y[free] = np.clip(x[free] + delta_u * h[free], bounds[free, 0], bounds[free, 1])
                ry = ratio_at(y)
                if ry < r:
                    r, x_new, moved = ry, y, True
            if moved:
                x = x_new
            else:
                h = h / 2.0
            if r < best_ratio:
                best_ratio, best_x = r, x.copy()
        refined.append((r, x))

    hit = certify(box.to_point(best_x, precision)) if best_ratio < 1 else None
    if hit is not None:
        hit.evaluations = evals
        return hit
    refined.sort(key=lambda t: (t[0], tuple(t[1])))
    seen = []
    for r, x in refined[:max(1, candidates)]:
        if evals >= budget or any(np.allclose(x, y) for y in seen):
            continue
        seen.append(x)
        z, spent = gauss_newton_polish(fs, box.to_point(x, precision))
        evals += spent
        if within_box(z):
            hit = certify(z)
            if hit is not None:
                hit.min_ratio = min(hit.min_ratio, best_ratio)
                hit.evaluations = evals
                return hit
    if best_ratio < 1:
        return CoronaVerdict(INCONCLUSIVE, box.to_point(best_x, precision).to_json(),
                             min_ratio=best_ratio, evaluations=evals,
                             reason="ratio below one but no rigorous separation within budget")
    return CoronaVerdict(NO_VIOLATION, box.to_point(best_x, precision).to_json(),
                         min_ratio=best_ratio, evaluations=evals)


# ---------------------------------------------------------------- Bezout


@dataclass
class BezoutReport:
    holds: Optional[bool]
    mode: str
    residual: Optional[Distribution]
    max_sampled_residual: float
    sampled_consistent: bool
    samples: int

    def to_json(self) -> dict:
        return {
            "holds": self.holds,
            "mode": self.mode,
            "residual": None if self.residual is None else self.residual.to_json(),
            "maxSampledResidual": self.max_sampled_residual,
            "sampledConsistent": self.sampled_consistent,
            "samples": self.samples,
        }


def random_points(dimension: int, n: int, seed: int = 0, re_max: float = 5.0,
                  im_max: float = 1.0, precision: int = DEFAULT_PRECISION) -> List[ComplexPoint]:
    rng = np.random.default_rng(seed)
    re = rng.uniform(-re_max, re_max, size=(n, dimension))
    im = rng.uniform(-im_max, im_max, size=(n, dimension))
    return [ComplexPoint.of([complex(a, b) for a, b in zip(r, i)], precision) for r, i in zip(re, im)]


def verify_bezout(fs: Sequence[Distribution], gs: Sequence[Distribution],
                  samples: Optional[Sequence[ComplexPoint]] = None, n_samples: int = 32,
                  seed: int = 0) -> BezoutReport:
    """Exact test of ``sum f_i * g_i == delta`` plus a transform cross-check
    ``sum f_i^ g_i^ - 1`` at sample points."""
    if len(fs) != len(gs):
        raise ValueError("fs and gs must have equal length")
    if not fs:
        raise ValueError("need at least one pair")
    d = fs[0].dimension
    holds: Optional[bool]
    residual: Optional[Distribution]
    try:
        total = zero(d)
        for f, g in zip(fs, gs):
            total = total + convolve(f, g)
        residual = total - delta(dimension=d)
        holds = residual.is_zero
        mode = "exact"
    except DistributionError:
        residual, holds, mode = None, None, "sampling-only"
    if samples is None:
        samples = random_points(d, n_samples, seed)
    worst = 0.0
    consistent = True
    for z in samples:
        with working_precision(z.precision):
            acc = acb(-1)
            for f, g in zip(fs, gs):
                acc += fl_transform(f, z, None).ball * fl_transform(g, z, None).ball
            worst = max(worst, float(abs(acc).mid()))
            if not acc.contains(0):
                consistent = False
    if mode == "sampling-only":
        holds = None if consistent else False
    return BezoutReport(holds, mode, residual, worst, consistent, len(samples))


def necessity_bound(gs: Sequence[Distribution], cone: Cone,
                    floor: float = MIN_POSITIVE) -> Tuple[CoronaParams, List[str]]:
    """Corona constants implied by cofactors gs.

    Each ``|g_k^(z)| <= C_k (1+|z|^2)^N_k exp(M H(Im z))`` where M is the
    largest norm of a support point (supports lie in ``M * (C ∩ B)``). With
    ``C = max C_k`` and ``N = max N_k`` the Bezout identity gives
    ``1 <= sum |f_i^| C (1+|z|^2)^N exp(M H)``, so the returned triple is
    ``(1/C, N, M)``, zero values clamped up to ``floor``.
    """
    if not gs:
        raise ValueError("need at least one cofactor")
    notes: List[str] = []
    c_max = 0.0
    n_max = Fraction(0)
    with working_precision(DEFAULT_PRECISION):
        m = arb(0)
        for g in gs:
            if g.is_zero:
                raise DistributionError("zero cofactor has no growth bound")
            if not in_cone(g, cone):
                raise DistributionError("cofactors must be supported in the cone")
            b = pws_bound_for(g)
            c_max = max(c_max, b.const_c)
            n_max = max(n_max, b.exponent_n)
            for p in support_points(g):
                m = m.max(norm2([acb(arb_of(x)) for x in p]).sqrt())
        const_c = lower(1 / arb_of(c_max))
        m_val = upper(m)
    n_val = float(n_max)
    if n_max != n_val:
        n_val = math.nextafter(n_val, math.inf)
    if n_val < floor:
        notes.append(f"N = {n_val} clamped to {floor}")
        n_val = floor
    if m_val < floor:
        notes.append(f"M = {m_val} clamped to {floor}")
        m_val = floor
    return CoronaParams(const_c, n_val, m_val), notes

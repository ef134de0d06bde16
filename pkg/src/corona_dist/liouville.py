"""Exact arithmetic for the Liouville-constant counterexample.

With ``c = sum_n 10^(-n!)``, ``q_K = 10^(K!)`` and ``p_K = q_K sum_{k<=K} 10^(-k!)``,
the pair ``f1 = delta - delta_c``, ``f2 = 1_[0,1]`` has no common transform
zero, yet at ``z = 2 pi q_K`` we get ``f2^(z) = 0`` and

    |f1^(z)| = 2 |sin(pi (c q_K - p_K))| <= 2 pi q_K |c - p_K/q_K|,

which beats any proposed corona bound once K is large. All inequalities
below are decided over the rationals, with pi replaced by 355/113 wherever
an upper bound is needed and by 333/106 for a lower bound.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple

from .distribution import Distribution, delta, indicator

PI_UPPER = Fraction(355, 113)
PI_LOWER = Fraction(333, 106)
DEFAULT_CAP = 6
#: give up on the unbounded search for a refuting K beyond this
SEARCH_LIMIT = 100_000


class LiouvilleError(ValueError):
    pass


def decimal_string(n: int) -> str:
    """Exact decimal digits of n, past the interpreter's default digit limit."""
    try:
        return str(n)
    except ValueError:
        old = sys.get_int_max_str_digits()
        sys.set_int_max_str_digits(0)
        try:
            return str(n)
        finally:
            sys.set_int_max_str_digits(old)


def fraction_string(q: Fraction) -> str:
    return f"{decimal_string(q.numerator)}/{decimal_string(q.denominator)}"


def _check_k(K: int, cap: int) -> None:
    if K < 1:
        raise LiouvilleError("K must be a positive integer")
    if K > cap:
        digits = math.factorial(K)
        raise LiouvilleError(
            f"K={K} exceeds the cap {cap}: q_K = 10^{digits} has {digits + 1} decimal digits"
        )


def convergents(K: int, cap: int = DEFAULT_CAP) -> Tuple[int, int]:
    """Exact ``(p_K, q_K)``."""
    _check_k(K, cap)
    e = math.factorial(K)
    p = sum(10 ** (e - math.factorial(k)) for k in range(1, K + 1))
    return p, 10 ** e


def liouville_truncation(K: int, cap: int = DEFAULT_CAP) -> Fraction:
    p, q = convergents(K, cap)
    return Fraction(p, q)


def liouville_pair(K: int, cap: int = DEFAULT_CAP) -> Tuple[Distribution, Distribution]:
    """``(delta - delta_c', 1_[0,1])`` with c replaced by its K-th truncation."""
    return delta() - delta(liouville_truncation(K, cap)), indicator(0, 1)


@dataclass(frozen=True)
class GapBound:
    K: int
    partial: Fraction      # exact sum of the first tail terms, a lower bound on the gap
    remainder: Fraction    # bound on the rest of the tail
    tail_chain: Fraction  # (10/9) 10^-(K+1)!
    coarse: Fraction       # q_K^-K

    @property
    def upper(self) -> Fraction:
        return self.partial + self.remainder


def gap_bound(K: int, tail_terms: int = 1, cap: int = DEFAULT_CAP) -> GapBound:
    """Upper bound on ``|c - p_K/q_K| = sum_{k>K} 10^(-k!)``.

    The first ``tail_terms`` terms are summed exactly; the rest is bounded by
    ``(10/9) 10^-(K+t+1)!`` since ``k! >= (K+t+1)! + (k-K-t-1)`` past that point.
    """
    _check_k(K, cap)
    if tail_terms < 1:
        raise LiouvilleError("tail_terms must be at least 1")
    partial = sum(Fraction(1, 10 ** math.factorial(k)) for k in range(K + 1, K + tail_terms + 1))
    remainder = Fraction(10, 9) / 10 ** math.factorial(K + tail_terms + 1)
    chain = Fraction(10, 9) / 10 ** math.factorial(K + 1)
    coarse = Fraction(1, 10 ** (K * math.factorial(K)))
    out = GapBound(K, partial, remainder, chain, coarse)
    assert 0 < out.partial <= out.upper <= chain <= coarse
    return out


@dataclass(frozen=True)
class TransformBound:
    K: int
    sin_arg_upper: Fraction    # bound on pi |c q_K - p_K|
    transform_upper: Fraction  # bound on |f1^(2 pi q_K)|
    f2_vanishes: bool          # f2^(2 pi q_K) = 0 exactly


def transform_magnitude_at(K: int, cap: int = DEFAULT_CAP, tail_terms: int = 1) -> TransformBound:
    """``|f1^(2 pi q_K)| = 2|sin(pi(c q_K - p_K))| <= 2 pi q_K gap``.

    ``f2^(z) = (e^{-iz} - 1)/(-iz)`` vanishes at ``z = 2 pi q_K`` because
    ``q_K`` is a nonzero integer.
    """
    gap = gap_bound(K, tail_terms, cap)
    q = 10 ** math.factorial(K)
    sin_arg = PI_UPPER * q * gap.upper
    return TransformBound(K, sin_arg, 2 * sin_arg, f2_vanishes=q != 0)


_LOG10_2_LO = Fraction(30102999, 10 ** 8)
_LOG10_2_HI = Fraction(30103, 10 ** 5)


class ScaledRational:
    """Exact positive rational ``mantissa * 10**exp10`` for astronomically small values."""

    __slots__ = ("mantissa", "exp10")

    def __init__(self, mantissa: Fraction, exp10: int):
        if mantissa <= 0:
            raise ValueError("mantissa must be positive")
        self.mantissa = Fraction(mantissa)
        self.exp10 = int(exp10)

    def log10(self) -> float:
        try:
            return _log10(self.mantissa) + float(self.exp10)
        except OverflowError:
            return math.inf if self.exp10 > 0 else -math.inf

    def less_than(self, bound: Fraction) -> bool:
        """Exact test ``self < bound`` for a positive rational bound."""
        m = self.mantissa / Fraction(bound)
        num, den = m.numerator, m.denominator
        # 2^(bn-bd-1) < m < 2^(bn-bd+1), and 0.30102999 < log10(2) < 0.30103
        hi = num.bit_length() - den.bit_length() + 1
        lo = hi - 2
        up = hi * (_LOG10_2_HI if hi > 0 else _LOG10_2_LO)
        dn = lo * (_LOG10_2_LO if lo > 0 else _LOG10_2_HI)
        if up + self.exp10 <= 0:
            return True
        if dn + self.exp10 >= 0:
            return False
        if self.exp10 >= 0:
            return num * 10 ** self.exp10 < den
        return num < den * 10 ** (-self.exp10)

    def as_fraction(self, max_digits: int = 200_000) -> Optional[Fraction]:
        if abs(self.exp10) > max_digits:
            return None
        return self.mantissa * Fraction(10) ** self.exp10

    def __float__(self) -> float:
        lg = self.log10()
        if lg < -330:
            return 0.0
        if lg > 308:
            return math.inf
        f = self.as_fraction()
        return float(f) if f is not None else 10.0 ** lg

    def __lt__(self, other: "ScaledRational") -> bool:
        return ScaledRational(self.mantissa / other.mantissa, self.exp10 - other.exp10).less_than(1)

    def __repr__(self) -> str:
        return f"ScaledRational({self.mantissa} * 10^{self.exp10})"

    def to_json(self) -> dict:
        return {"mantissa": fraction_string(self.mantissa),
                "exp10": self.exp10 if abs(self.exp10) < 10 ** 15 else decimal_string(self.exp10),
                "log10": _json_float(self.log10())}


def chain_ratio(K: int, const_c, exponent_n) -> ScaledRational:
    """Exact upper bound on ``(|f1^| + |f2^|) / (C (1 + 4 pi^2 q_K^2)^-N)`` at
    ``z = 2 pi q_K`` along the coarse chain ``|c - p_K/q_K| <= q_K^-K``.

    Uses ``|f1^| <= 2 pi q_K^(1-K)``, the integer exponent ``ceil(N)``, and
    ``1 + 4 pi^2 q^2 <= q^2 (4 pi^2 + 1/100)`` for ``q >= 10``.
    """
    n = math.ceil(exponent_n)
    c = Fraction(const_c)
    if c <= 0:
        raise LiouvilleError("C must be positive")
    base = 4 * PI_UPPER ** 2 + Fraction(1, 100)
    mantissa = 2 * PI_UPPER * base ** n / c
    return ScaledRational(mantissa, math.factorial(K) * (1 - K + 2 * n))


@dataclass
class Refutation:
    K: int
    ratio_upper: ScaledRational
    params: tuple
    cone: str

    def to_json(self) -> dict:
        q_digits = math.factorial(self.K)
        out = {
            "K": self.K,
            "qK": f"10^{decimal_string(q_digits)}",
            "point": f"2*pi*10^{decimal_string(q_digits)}",
            "ratioUpper": self.ratio_upper.to_json(),
            "ratioUpperFloat": _json_float(float(self.ratio_upper)),
            "params": {"C": self.params[0], "N": self.params[1], "M": self.params[2]},
            "cone": self.cone,
            "refuted": True,
        }
        exact = self.ratio_upper.as_fraction(max_digits=5_000)
        if exact is not None:
            out["ratioUpperExact"] = fraction_string(exact)
        return out


class RefutationError(LiouvilleError):
    def __init__(self, message: str, required_k: Optional[int]):
        super().__init__(message)
        self.required_k = required_k


def _cone_name(cone) -> str:
    if isinstance(cone, str):
        name = cone.lower().rstrip("1")
        dim = 1
    else:
        name, dim = cone.kind, cone.dimension
    if name in ("full", "fullspace"):
        name = "full"
    if name not in ("full", "orthant") or dim != 1:
        raise LiouvilleError("the counterexample lives on the real line or the half-line (d = 1)")
    return f"{name}1"


def refute_params(const_c, exponent_n, cone_scale_m, cone="orthant1",
                  cap: Optional[int] = DEFAULT_CAP) -> Refutation:
    """Smallest ``K <= cap`` whose test point ``2 pi q_K`` rigorously violates
    the corona bound with constants (C, N, M).

    The test points are real, so ``exp(-M H(Im z)) = 1`` for both the full
    line and the half-line and M plays no role. ``cap=None`` searches
    without a cap; only the scaled ratio is formed, never ``q_K`` itself.
    Raises :class:`RefutationError` naming the required K when the cap is
    too small.
    """
    for v in (const_c, exponent_n, cone_scale_m):
        if not v > 0:
            raise LiouvilleError("C, N and M must be strictly positive")
    name = _cone_name(cone)
    params = (float(const_c), float(exponent_n), float(cone_scale_m))
    limit = SEARCH_LIMIT if cap is None else cap
    for K in range(1, limit + 1):
        r = chain_ratio(K, const_c, exponent_n)
        if r.less_than(1):
            return Refutation(K, r, params, name)
    required = None
    for K in range(limit + 1, SEARCH_LIMIT):
        if chain_ratio(K, const_c, exponent_n).less_than(1):
            required = K
            break
    raise RefutationError(
        f"no K <= {limit} refutes C={const_c}, N={exponent_n}; "
        + (f"K = {required} is required" if required else "required K is beyond the search limit"),
        required,
    )


def required_k(const_c, exponent_n) -> int:
    """Smallest K refuting (C, N), with no cap."""
    return refute_params(const_c, exponent_n, 1, cap=None).K


@dataclass(frozen=True)
class LiouvilleRow:
    K: int
    pK: int
    qK: int
    gap_upper: Fraction
    sin_arg_upper: Fraction
    transform_upper: Fraction
    corona_bound: Tuple[Fraction, Fraction]
    ratio_upper: Fraction
    chain_ratio: ScaledRational

    def to_json(self) -> dict:
        return {
            "K": self.K,
            "pK": decimal_string(self.pK),
            "qK": decimal_string(self.qK),
            "gapUpper": fraction_string(self.gap_upper),
            "sinArgUpper": fraction_string(self.sin_arg_upper),
            "transformUpper": fraction_string(self.transform_upper),
            "coronaBound": [fraction_string(self.corona_bound[0]), fraction_string(self.corona_bound[1])],
            "ratioUpper": fraction_string(self.ratio_upper),
            "log10RatioUpper": _log10(self.ratio_upper),
            "chainRatioLog10": self.chain_ratio.log10(),
        }


def _json_float(x: float):
    """Strict JSON has no infinities; spell them as strings."""
    return x if math.isfinite(x) else str(x)


def _log10(q: Fraction) -> float:
    # math.log10 accepts arbitrarily large ints
    return math.log10(q.numerator) - math.log10(q.denominator)


def report(k_max: int, const_c=1, exponent_n=1, cap: int = DEFAULT_CAP,
           tail_terms: int = 1) -> List[LiouvilleRow]:
    """Rows for K = 1..k_max.

    ``corona_bound`` encloses ``C (1 + 4 pi^2 q_K^2)^-N`` (integer exponents
    ``ceil(N)`` below and ``floor(N)`` above); ``ratio_upper`` divides the
    transform bound by its lower end.
    """
    _check_k(k_max, cap)
    c = Fraction(const_c)
    rows = []
    for K in range(1, k_max + 1):
        p, q = convergents(K, cap)
        tb = transform_magnitude_at(K, cap, tail_terms)
        gap = gap_bound(K, tail_terms, cap)
        lo = c / (1 + 4 * PI_UPPER ** 2 * q * q) ** math.ceil(exponent_n)
        hi = c / (1 + 4 * PI_LOWER ** 2 * q * q) ** math.floor(exponent_n)
        rows.append(LiouvilleRow(K, p, q, gap.upper, tb.sin_arg_upper, tb.transform_upper,
                                 (lo, hi), tb.transform_upper / lo,
                                 chain_ratio(K, const_c, exponent_n)))
    return rows


def rows_to_json(rows: List[LiouvilleRow]) -> str:
    return json.dumps([r.to_json() for r in rows], indent=2)


def rows_to_csv(rows: List[LiouvilleRow]) -> str:
    buf = io.StringIO()
    records = [r.to_json() for r in rows]
    writer = csv.DictWriter(buf, fieldnames=list(records[0].keys()) if records else ["K"])
    writer.writeheader()
    for rec in records:
        rec = dict(rec)
        rec["coronaBound"] = ";".join(rec["coronaBound"])
        writer.writerow(rec)
    return buf.getvalue()

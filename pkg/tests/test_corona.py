"""Corona lower bound, violation checks and search, Bezout identities and
necessity constants."""

import math
from fractions import Fraction

import numpy as np
import pytest
from flint import arb
from hypothesis import given
from hypothesis import strategies as st

from corona_dist.balls import ComplexPoint, working_precision
from corona_dist.cones import FullSpace, LightCone, Orthant
from corona_dist.corona import (
    INCONCLUSIVE,
    MIN_POSITIVE,
    NO_VIOLATION,
    VIOLATION,
    CoronaParams,
    SearchBox,
    check_corona,
    corona_bound_ball,
    corona_lower_bound,
    necessity_bound,
    random_points,
    search_violation,
    transform_sum_ball,
    verify_bezout,
)
from corona_dist.distribution import DistributionError, convolve, delta, indicator, zero
from corona_dist.exact import QQi
from corona_dist.liouville import convergents, liouville_truncation

from conftest import random_density, random_point_distribution

D_PRIME = delta(deriv=(1,), coeff=QQi(0, -1))  # (1/i) delta', transform z


def liouville_point(K: int, precision: int) -> ComplexPoint:
    _, q = convergents(K)
    with working_precision(precision):
        return ComplexPoint.of([2 * arb.pi() * q], precision)


def liouville_fs(K_trunc: int):
    return [delta() - delta(liouville_truncation(K_trunc)), indicator()]


def assert_sound_violation(fs, params, cone, verdict, z=None):
    """Recompute a reported violation at double precision: lhs + err < rhs - err.

    Search points are floats, so the reported coordinates are exact; pass
    ``z`` for points that are not.
    """
    assert verdict.status == VIOLATION
    if z is None:
        z = ComplexPoint.of([[Fraction(re), Fraction(im)] for re, im in verdict.point_decimal], 512)
    else:
        z = z.with_precision(2 * z.precision)
    lhs = transform_sum_ball(fs, z)
    rhs = corona_bound_ball(params, cone, z)
    assert lhs < rhs


class TestParams:
    @pytest.mark.parametrize("bad", [(0, 1, 1), (1, -1, 1), (1, 1, 0)])
    def test_positive(self, bad):
        with pytest.raises(ValueError):
            CoronaParams(*bad)


class TestLowerBound:
    @pytest.mark.parametrize("n,m", [(1, 1), (3, 0.5), (0.1, 7)])
    def test_origin(self, n, m):
        est = corona_lower_bound(CoronaParams(1, n, m), Orthant(1), ComplexPoint.of([0]))
        assert est.value == 1.0

    def test_full_space_liouville_point(self):
        est = corona_lower_bound(CoronaParams(1, 1, 1), FullSpace(1), liouville_point(2, 128))
        assert est.value == pytest.approx(1 / (1 + 4 * math.pi ** 2 * 1e4), rel=1e-14)

    def test_orthant_lower_half_plane(self):
        est = corona_lower_bound(CoronaParams(1, 1, 1), Orthant(1), ComplexPoint.of([-1j]))
        assert est.value == pytest.approx(0.5, rel=1e-15)

    def test_orthant_upper_half_plane(self):
        est = corona_lower_bound(CoronaParams(1, 1, 1), Orthant(1), ComplexPoint.of([1j]))
        assert est.value == pytest.approx(0.5 * math.exp(-1), rel=1e-15)

    @given(st.floats(0.1, 5), st.floats(0.1, 5), st.floats(0, 3), st.floats(0, 3),
           st.lists(st.complex_numbers(max_magnitude=20, allow_nan=False, allow_infinity=False),
                    min_size=2, max_size=2))
    def test_monotone_in_n_and_m(self, n, m, dn, dm, zs):
        z = ComplexPoint.of(zs)
        for cone in (FullSpace(2), Orthant(2), LightCone(2, 1)):
            base = corona_lower_bound(CoronaParams(1, n, m), cone, z)
            more_n = corona_lower_bound(CoronaParams(1, n + dn, m), cone, z)
            more_m = corona_lower_bound(CoronaParams(1, n, m + dm), cone, z)
            assert more_n.lower <= base.upper
            assert more_m.lower <= base.upper


class TestCheckCorona:
    def test_delta_never_violates(self):
        params = CoronaParams(1, 1, 1)
        v = check_corona([delta()], params, Orthant(1), random_points(1, 50, seed=3))
        assert v.status == NO_VIOLATION and v.min_ratio >= 1 - 1e-12

    def test_liouville_violation_at_q4(self):
        fs = liouville_fs(6)
        params = CoronaParams(1, 1, 1)
        z = liouville_point(4, 512)
        v = check_corona(fs, params, Orthant(1), [z])
        assert v.status == VIOLATION and v.lhs < v.rhs
        assert_sound_violation(fs, params, Orthant(1), v, z)

    def test_liouville_no_violation_at_q2(self):
        v = check_corona(liouville_fs(6), CoronaParams(1, 1, 1), Orthant(1), [liouville_point(2, 256)])
        assert v.status == NO_VIOLATION

    @pytest.mark.parametrize("params", [(1, 1, 1), (0.5, 1e-3, 1e-3), (1e-9, 50, 50)])
    def test_common_zero_at_origin(self, params):
        pts = [ComplexPoint.of([1 + 1j]), ComplexPoint.of([0]), ComplexPoint.of([-2])]
        v = check_corona([D_PRIME], CoronaParams(*params), Orthant(1), pts)
        assert v.status == VIOLATION and v.point == [[0.0, 0.0]]

    def test_first_violation_is_lexicographic(self):
        fs = [delta() - delta(1)]  # zeros at 2 pi k
        with working_precision(128):
            pts = [ComplexPoint.of([2 * arb.pi() * k], 128) for k in (3, -1, 2)]
        v = check_corona(fs, CoronaParams(1, 1, 1), Orthant(1), pts)
        assert v.status == VIOLATION
        assert v.point[0][0] == pytest.approx(-2 * math.pi)
        v2 = check_corona(fs, CoronaParams(1, 1, 1), Orthant(1), pts[::-1])
        assert v2.point == v.point

    def test_precision_failure_is_inconclusive(self):
        fs = [delta() - delta(Fraction(1, 3))]
        pts = [ComplexPoint.of([10 ** 30], 53), ComplexPoint.of([1], 53)]
        v = check_corona(fs, CoronaParams(1e-3, 1, 1), Orthant(1), pts)
        assert v.status == INCONCLUSIVE and len(v.inconclusive_points) == 1

    def test_support_outside_cone_rejected(self):
        with pytest.raises(DistributionError):
            check_corona([delta(-1)], CoronaParams(1, 1, 1), Orthant(1), [ComplexPoint.of([0])])

    def test_empty_samples(self):
        with pytest.raises(ValueError):
            check_corona([delta()], CoronaParams(1, 1, 1), Orthant(1), [])

    def test_json_shape(self):
        v = check_corona([D_PRIME], CoronaParams(1, 1, 1), Orthant(1), [ComplexPoint.of([0])])
        data = v.to_json()
        assert {"status", "point", "lhs", "rhs", "minRatio"} <= set(data)


class TestSearch:
    def test_delta_ratio_at_least_inverse_c(self):
        params = CoronaParams(0.5, 1, 1)
        box = SearchBox(((-5, 5, -1, 1),))
        v = search_violation([delta()], params, Orthant(1), box, budget=300, seed=1)
        assert v.status == NO_VIOLATION and v.min_ratio >= 2 * (1 - 1e-12)

    def test_real_zeros_found(self):
        fs = [delta() - delta(1)]
        params = CoronaParams(1e-3, 1, 1)
        box = SearchBox(((4, 8, -0.2, 0.2),))
        v = search_violation(fs, params, Orthant(1), box, budget=600, seed=2)
        assert v.status == VIOLATION
        assert abs(v.point[0][0] - 2 * math.pi) < 1e-3
        assert_sound_violation(fs, params, Orthant(1), v)

    def test_liouville_real_axis_small_k(self):
        params = CoronaParams(1, 1, 1)
        box = SearchBox(((0, 1e4, 0, 0),))
        v = search_violation(liouville_fs(4), params, Orthant(1), box, budget=600, seed=4)
        # the ratio is exactly 1 at z = 0 (f2^(0) = 1) and much larger near 2 pi q_2
        assert v.status == NO_VIOLATION and v.min_ratio >= 1 - 1e-12

    @pytest.mark.parametrize("params", [(1, 1, 1), (1e4, 0.01, 0.01), (1e-4, 10, 10)])
    def test_common_zero_detection(self, params):
        # both transforms vanish at z = 4 pi
        fs = [delta() - delta(1), delta() - delta(Fraction(1, 2))]
        box = SearchBox(((11, 14, -0.5, 0.5),))
        v = search_violation(fs, CoronaParams(*params), Orthant(1), box, budget=800, seed=5)
        assert v.status == VIOLATION
        assert_sound_violation(fs, CoronaParams(*params), Orthant(1), v)

    def test_common_zero_two_dimensions(self):
        fs = [delta((1, 0)) - delta((0, 0)), delta((0, 1)) - delta((0, 0))]
        box = SearchBox(((5, 7.5, -0.1, 0.1), (5.5, 7, 0, 0)))
        v = search_violation(fs, CoronaParams(1, 1, 1), Orthant(2), box, budget=1500, seed=6)
        assert v.status == VIOLATION

    def test_common_zero_two_dimensions_extreme_params(self):
        fs = [delta((1, 0)) - delta((0, 0)), delta((0, 1)) - delta((0, 0))]
        params = CoronaParams(1e-6, 8, 8)
        box = SearchBox(((5, 7.5, -0.1, 0.1), (5.5, 7, -0.1, 0.1)))
        v = search_violation(fs, params, Orthant(2), box, budget=2000, seed=6)
        assert v.status == VIOLATION
        assert_sound_violation(fs, params, Orthant(2), v)

    def test_fixed_point_box(self):
        box = SearchBox(((0, 0, 0, 0),))
        v = search_violation([D_PRIME], CoronaParams(1, 1, 1), Orthant(1), box, budget=10)
        assert v.status == VIOLATION

    def test_deterministic(self):
        box = SearchBox(((0, 10, -1, 1),))
        a = search_violation([indicator()], CoronaParams(1, 1, 1), Orthant(1), box, budget=200, seed=9)
        b = search_violation([indicator()], CoronaParams(1, 1, 1), Orthant(1), box, budget=200, seed=9)
        assert a.to_json() == b.to_json()

    def test_budget_positive(self):
        with pytest.raises(ValueError):
            search_violation([delta()], CoronaParams(1, 1, 1), Orthant(1), SearchBox(((0, 1, 0, 1),)), budget=0)


class TestBezout:
    def test_delta(self):
        assert verify_bezout([delta()], [delta()]).holds is True

    def test_split_delta(self):
        rep = verify_bezout([delta() - delta(1), delta(1)], [delta(), delta()])
        assert rep.holds is True and rep.sampled_consistent

    def test_failure(self):
        rep = verify_bezout([delta() - delta(1)], [delta() + delta(1)])
        assert rep.holds is False
        assert rep.residual == -delta(2) and rep.residual != zero()
        assert not rep.sampled_consistent and rep.max_sampled_residual > 0

    def test_sampling_only_fallback(self):
        f = delta((0, 0))
        g = delta((0, 0))
        rep = verify_bezout([f], [g])
        assert rep.mode == "exact"
        # convolution of a planar derivative with a density is unrepresentable in d = 2
        # so we simulate the fallback with mismatched structure
        with pytest.raises(ValueError):
            verify_bezout([f], [])

    def test_with_densities(self):
        # (delta - rho * sigma) * delta + rho * sigma = delta
        rho, sigma = indicator(0, 1), indicator(1, 2) + delta(Fraction(1, 2))
        rep = verify_bezout([delta() - convolve(rho, sigma), rho], [delta(), sigma])
        assert rep.holds is True and rep.sampled_consistent


class TestNecessity:
    def test_delta(self):
        params, notes = necessity_bound([delta()], Orthant(1))
        assert params.const_c == 1.0
        assert params.exponent_n == MIN_POSITIVE and params.cone_scale_m == MIN_POSITIVE
        assert len(notes) == 2

    def test_two_deltas(self):
        params, _ = necessity_bound([delta(), delta(1)], Orthant(1))
        assert params.cone_scale_m == 1.0
        assert params.exponent_n == MIN_POSITIVE
        assert params.const_c == 1.0

    def test_derivative(self):
        params, _ = necessity_bound([D_PRIME], Orthant(1))
        assert params.exponent_n == 0.5 and params.cone_scale_m == MIN_POSITIVE

    def test_zero_rejected(self):
        with pytest.raises(DistributionError):
            necessity_bound([delta(), zero()], Orthant(1))

    def test_outside_cone_rejected(self):
        with pytest.raises(DistributionError):
            necessity_bound([delta(-1)], Orthant(1))

    @given(st.integers(0, 2 ** 32 - 1))
    def test_chain_on_random_tuples(self, seed):
        rng = np.random.default_rng(seed)
        cone = Orthant(1)
        a = random_point_distribution(rng, 1, n_terms=2, max_order=1, nonneg=True)
        b = random_point_distribution(rng, 1, n_terms=2, max_order=1, nonneg=True)
        if rng.integers(2):
            b = b + random_density(rng, nonneg=True)
        fs, gs = [delta() - convolve(a, b), a], [delta(), b]
        assert verify_bezout(fs, gs, n_samples=4, seed=seed).holds is True
        params, _ = necessity_bound(gs, cone)
        pts = random_points(1, 20, seed=seed, re_max=10, im_max=5)
        assert check_corona(fs, params, cone, pts).status == NO_VIOLATION

    def test_chain_light_cone(self):
        cone = LightCone(3, 1)
        a = delta((0, 0, 1), coeff=2) + delta((Fraction(1, 2), 0, 1), deriv=(0, 1, 0))
        b = delta((0, Fraction(1, 3), Fraction(1, 2)), coeff=QQi(0, 1))
        fs, gs = [delta(dimension=3) - convolve(a, b), a], [delta(dimension=3), b]
        assert verify_bezout(fs, gs).holds is True
        params, _ = necessity_bound(gs, cone)
        pts = random_points(3, 40, seed=8, re_max=6, im_max=4)
        assert check_corona(fs, params, cone, pts).status == NO_VIOLATION

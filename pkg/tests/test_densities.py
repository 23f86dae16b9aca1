import math
from fractions import Fraction

import numpy as np
import pytest

from modpforms.basis import GradedForm, dim_level_one
from modpforms.densities import (
    AsymptoticProfile,
    GroupDescriptor,
    ValueProfile,
    _primes,
    alpha_of_form,
    alpha_of_group,
    class_density,
    euler_constant_C,
    h_of_form,
    leading_constants,
    leading_constants_sf,
    multi_frobenian_class_density,
    multi_frobenian_density,
    predict,
    squarefull_sum,
)
from modpforms.errors import ModpFormsError
from modpforms.module import build_module, decompose
from modpforms.series import delta_power


def _delta_form(p, k, sample_bound=2000):
    prec = sample_bound * max(dim_level_one(12 * k) - 1, 1) + 9
    return GradedForm(delta_power(p, k, prec), 12 * k)


class TestClassDensity:
    def test_examples(self):
        assert class_density({2, 5, 8}, 9) == Fraction(1, 2)
        assert class_density({6}, 7) == Fraction(1, 6)
        assert class_density({1, 2, 4, 5, 7, 8}, 9) == 1

    def test_non_unit_rejected(self):
        with pytest.raises(ValueError):
            class_density({3}, 9)


class TestAlphaOfGroup:
    def test_case_table(self):
        cases = [
            (GroupDescriptor("dihedral", 2), Fraction(3, 4)),
            (GroupDescriptor("dihedral", 3), Fraction(1, 2)),
            (GroupDescriptor("dihedral", 4), Fraction(5, 8)),
            (GroupDescriptor("A4"), Fraction(1, 4)),
            (GroupDescriptor("S4"), Fraction(3, 8)),
            (GroupDescriptor("A5"), Fraction(1, 4)),
            (GroupDescriptor("PGL2", 3), Fraction(3, 8)),
            (GroupDescriptor("PSL2", 3), Fraction(1, 4)),
            (GroupDescriptor("PSL2", 5), Fraction(1, 4)),
            (GroupDescriptor("PSL2", 9), Fraction(1, 8)),
            (GroupDescriptor("PGL2", 5), Fraction(5, 24)),
            (GroupDescriptor("reducible", 2), Fraction(1, 2)),
            (GroupDescriptor("reducible", 6), Fraction(1, 6)),
        ]
        for descriptor, expect in cases:
            assert alpha_of_group(descriptor) == expect

    def test_range(self):
        for d, _ in [
            (GroupDescriptor("dihedral", n), None) for n in range(2, 30)
        ] + [(GroupDescriptor("PGL2", q), None) for q in (3, 5, 7, 9, 27)]:
            a = alpha_of_group(d)
            assert 0 < a <= Fraction(3, 4)

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            GroupDescriptor("PGL2", 4)  # even
        with pytest.raises(ValueError):
            GroupDescriptor("PSL2", 15)  # not a prime power
        with pytest.raises(ValueError):
            GroupDescriptor("cyclic", 3)


class TestAlphaOfForm:
    @pytest.mark.parametrize("k", [1, 2, 4, 5])
    def test_mod3_powers(self, k):
        assert alpha_of_form(_delta_form(3, k)) == Fraction(1, 2)

    def test_mod7_square_is_min(self):
        assert alpha_of_form(_delta_form(7, 2)) == Fraction(1, 6)

    def test_mod7_delta(self):
        assert alpha_of_form(_delta_form(7, 1)) == Fraction(1, 2)


class TestMultiFrobenianDensity:
    def test_height_zero(self, delta2_mod3_module):
        m = delta2_mod3_module
        assert multi_frobenian_density(m, m.f_coords, m.f_coords, 0) == 1
        other = (m.f_coords + 1) % 3
        assert multi_frobenian_density(m, m.f_coords, other, 0) == 0

    def test_step_to_lower_power(self, delta2_mod3_module):
        m = delta2_mod3_module
        delta_vec = np.array([0, 1], dtype=np.int64)
        assert multi_frobenian_density(m, m.f_coords, delta_vec, 1) == Fraction(1, 6)
        assert multi_frobenian_density(m, m.f_coords, 2 * delta_vec % 3, 1) == Fraction(1, 6)

    def test_class_set_density_formula(self):
        # products of h distinct primes from the two onzero nilpotent classes mod 9
        for h in range(5):
            assert multi_frobenian_class_density({2, 5}, 9, h) == Fraction(
                1, math.factorial(h) * 3**h
            )

    @pytest.mark.parametrize("k,h", [(1, 0), (2, 1), (4, 2), (5, 3)])
    def test_module_route_matches_closed_form(self, k, h):
        # summed over the two reachable targets the density is 1/(h! 3^h)
        m = build_module(_delta_form(3, k))
        delta_vec = np.zeros(m.dim, dtype=np.int64)
        # the weight-12 cusp form is reachable as a module vector; find it
        # by applying nilpotent classes h times
        targets = {}
        if h == 0:
            targets[m.f_coords.tobytes()] = m.f_coords
        else:
            from itertools import combinations_with_replacement

            from modpforms.module import classify_classes

            rep = classify_classes(m)
            for classes in combinations_with_replacement(rep.nilpotent_classes, h):
                v = m.f_coords
                for u in classes:
                    v = m.apply_class(v, u)
                if v.any():
                    targets[v.tobytes()] = v
        total = sum(
            (multi_frobenian_density(m, m.f_coords, v, h) for v in targets.values()),
            Fraction(0),
        )
        assert total == Fraction(1, math.factorial(h) * 3**h)

    def test_denominator_invariant(self, delta2_mod3_module):
        m = delta2_mod3_module
        delta_vec = np.array([0, 1], dtype=np.int64)
        for h in range(4):
            d = multi_frobenian_density(m, m.f_coords, delta_vec, h)
            assert (math.factorial(h) * 6**h) % d.denominator == 0


class TestEulerConstant:
    def test_mod3_constant(self):
        cu = euler_constant_C({1}, 3, Fraction(1, 2), prime_bound=10**6)
        assert abs(cu.value - 0.2913) < 5e-4
        assert cu.tail < 5e-4

    def test_r_with_prime_outside_u(self):
        a = euler_constant_C({1}, 3, Fraction(1, 2), prime_bound=10**5)
        b = euler_constant_C({1}, 3, Fraction(1, 2), r=2, prime_bound=10**5)
        assert a.value == b.value

    def test_r_with_prime_inside_u(self):
        a = euler_constant_C({1}, 3, Fraction(1, 2), prime_bound=10**5)
        b = euler_constant_C({1}, 3, Fraction(1, 2), r=7, prime_bound=10**5)
        assert abs(b.value - a.value / (1 + 1 / 7)) < 1e-12

    def test_closed_form_cross_check(self):
        # (3^{1/4} / (pi sqrt 2)) * prod_{l = 1 mod 3} (1 - l^-2)^{1/2}
        cu = euler_constant_C({1}, 3, Fraction(1, 2), prime_bound=10**6)
        pr = _primes(10**6).astype(np.float64)
        sel = pr[pr % 3 == 1]
        closed = (
            3**0.25 / (math.pi * math.sqrt(2))
            * math.exp(0.5 * float(np.sum(np.log1p(-(sel ** -2.0)))))
        )
        assert abs(cu.value - closed) < 2e-4

    def test_mod7_constant(self):
        cu = euler_constant_C({1, 2, 3, 4, 5}, 7, Fraction(5, 6), prime_bound=10**6)
        assert abs(cu.value - 0.5976) < 5e-4
        assert cu.tail < 5e-4

    def test_doubling_within_tail(self):
        for classes, mod, beta in [({1}, 3, Fraction(1, 2)), ({1, 2, 3, 4, 5}, 7, Fraction(5, 6))]:
            lo = euler_constant_C(classes, mod, beta, prime_bound=2 * 10**5)
            hi = euler_constant_C(classes, mod, beta, prime_bound=4 * 10**5)
            assert abs(hi.value - lo.value) < lo.tail

    def test_beta_range_enforced(self):
        with pytest.raises(ValueError):
            euler_constant_C({1}, 3, Fraction(1, 1))
        with pytest.raises(ValueError):
            euler_constant_C({1}, 3, Fraction(0, 1))


class TestSquarefullSum:
    def test_s_equals_one_always_counts(self, delta_mod3_module):
        value, tail = squarefull_sum(
            delta_mod3_module, delta_mod3_module.f_coords, s_bound=10**4, prime_bound=10**5
        )
        cu = euler_constant_C({1}, 3, Fraction(1, 2), prime_bound=10**5)
        assert value >= cu.value  # the s=1 term alone contributes C(U)
        assert tail > 0

    def test_membership_spot_checks(self, delta2_mod3_module):
        m = delta2_mod3_module
        # 4 = 2^2 acts as identity, 8 = 2^3 acts as 2*eps (table row n=3)
        t4 = m.prime_power_matrix(2, 2)
        assert np.array_equal(t4, np.eye(2, dtype=np.int64))
        t8 = m.prime_power_matrix(2, 3)
        assert np.array_equal(t8, np.array([[0, 2], [0, 0]]))

    def test_monotone_in_bound(self, delta2_mod3_module):
        m = delta2_mod3_module
        prev, prev_tail = 0.0, None
        for bound in (10**4, 10**6, 10**8):
            val, tail = squarefull_sum(m, m.f_coords, s_bound=bound, prime_bound=10**5)
            assert val >= prev - 1e-15
            if prev_tail is not None:
                assert val - prev <= prev_tail
            prev, prev_tail = val, tail


class TestLeadingConstants:
    def test_delta_mod3_squarefree(self):
        prof = leading_constants_sf(_delta_form(3, 1), prime_bound=10**5)
        assert prof.alpha == Fraction(1, 2)
        assert prof.h == 0
        cu = euler_constant_C({1}, 3, Fraction(1, 2), prime_bound=10**5)
        assert abs(prof.c - cu.value) < 1e-12

    @pytest.mark.parametrize("k,h", [(1, 0), (2, 1), (4, 2), (5, 3)])
    def test_sf_constant_family(self, k, h):
        prof = leading_constants_sf(_delta_form(3, k), prime_bound=10**5)
        cu = euler_constant_C({1}, 3, Fraction(1, 2), prime_bound=10**5)
        assert prof.alpha == Fraction(1, 2) and prof.h == h
        assert abs(prof.c - cu.value / (math.factorial(h) * 3**h)) < 1e-10

    def test_mod7_square_sf(self):
        prof = leading_constants_sf(_delta_form(7, 2), prime_bound=10**6)
        assert prof.alpha == Fraction(1, 6)
        assert prof.h == 0
        assert abs(prof.c - 0.5976) < 5e-4

    def test_full_constant_against_closed_form(self):
        prof = leading_constants(_delta_form(3, 2), prime_bound=10**6, sfull_bound=10**8)
        cu = euler_constant_C({1}, 3, Fraction(1, 2), prime_bound=10**6)
        pr = _primes(10**6).astype(np.float64)
        p1, p2 = pr[pr % 3 == 1], pr[pr % 3 == 2]
        closed = (
            cu.value / 3
            * math.exp(-float(np.sum(np.log1p(-(p1 ** -3.0)))))
            * math.exp(-float(np.sum(np.log1p(-(p2 ** -2.0)))))
        )
        assert prof.alpha == Fraction(1, 2) and prof.h == 1
        assert abs(prof.c - closed) / closed < 1e-3

    def test_per_value_equidistribution_mod3(self):
        prof = leading_constants_sf(_delta_form(3, 2), prime_bound=10**5)
        assert prof.per_value[1].c == pytest.approx(prof.per_value[2].c)
        assert prof.per_value[1].h == prof.per_value[2].h == 1

    def test_v3_delta_shifted_profile(self):
        # indices of the cube are 3m with m square-free coprime to 3, so the
        # square-free profile is the cusp form's scaled by 1/3
        f3 = GradedForm(delta_power(3, 3, 20000), 36)
        prof = leading_constants_sf(f3, prime_bound=10**5)
        base = leading_constants_sf(_delta_form(3, 1), prime_bound=10**5)
        assert not prof.degenerate
        assert prof.alpha == base.alpha and prof.h == base.h
        assert abs(prof.c - base.c / 3) < 1e-12

    def test_degenerate_square_support(self):
        f9 = GradedForm(delta_power(3, 9, 20000), 108)
        prof = leading_constants_sf(f9, prime_bound=10**4)
        assert prof.degenerate

    def test_nonpure_full_constants_mod7(self):
        prof = leading_constants(_delta_form(7, 2), prime_bound=10**5, sfull_bound=10**6)
        assert prof.alpha == Fraction(1, 6)
        assert prof.h == 0
        assert prof.c > 0


class TestPredict:
    def test_simple_arithmetic(self):
        prof = AsymptoticProfile(Fraction(1, 2), 0, 1.0, 0.0, {})
        x = math.exp(4)
        (pt,) = predict(prof, [x])
        assert pt.value == pytest.approx(x / 2)

    def test_loglog_factor(self):
        base = AsymptoticProfile(Fraction(1, 2), 0, 1.0, 0.0, {})
        up = AsymptoticProfile(Fraction(1, 2), 1, 1.0, 0.0, {})
        x = 10**6
        (a,) = predict(base, [x])
        (b,) = predict(up, [x])
        assert b.value / a.value == pytest.approx(math.log(math.log(x)))
        assert b.value / a.value == pytest.approx(2.626, abs=5e-3)

    def test_band_and_domain(self):
        prof = AsymptoticProfile(Fraction(1, 2), 0, 1.0, 0.1, {})
        (pt,) = predict(prof, [100])
        assert pt.low < pt.value < pt.high
        with pytest.raises(ValueError):
            predict(prof, [2])


class TestProfileValidation:
    def test_no_nilpotent_class_is_error(self, delta_mod3_module):
        from modpforms.densities import _pure_profile
        from modpforms.module import HeckeModule
        from modpforms import linalg

        m = delta_mod3_module
        synthetic = HeckeModule(
            m.p,
            m.weight,
            m.ambient,
            m.ambient_coords,
            m.vector_series,
            {ell: linalg.identity(1, 3) for ell in m.per_prime},
            3,
            {1: 2 * linalg.identity(1, 3) % 3, 2: linalg.identity(1, 3)},
            3,
            {1: "invertible", 2: "invertible"},
            m.f_coords,
        )
        with pytest.raises(ModpFormsError, match="nilpotent"):
            _pure_profile(
                synthetic,
                squarefree=True,
                with_constants=False,
                prime_bound=10**4,
                sfull_bound=10**4,
            )

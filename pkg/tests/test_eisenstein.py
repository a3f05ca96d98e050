"""Tests for Eisenstein evaluation, Weyl sums, and the spectral bound."""

import math
import warnings

import numpy as np
import pytest

from modsurf.arithmetic import haar_discretization, heegner_measure, DiscreteMeasure
from modsurf.eisenstein import (
    EisensteinParams,
    MaassData,
    berry_esseen_rhs,
    eisenstein_eval,
    scattering_phi,
    weyl_compare,
    weyl_sum_empirical,
    weyl_sum_exact_sq,
)
from modsurf.hypgeo import GEN_S, GEN_T, Point, mobius_apply
from modsurf.specfun import dirichlet_l, h_minus, riemann_zeta

# frozen from the completed-zeta quotient at 40 digits
PHI_AT_1 = 0.5231271516943812 - 0.8522546468985217j


class TestScattering:
    def test_unimodular(self):
        for t in (0.5, 1.0, 5.0):
            assert abs(abs(scattering_phi(t)) - 1.0) < 1e-9

    def test_phase_product(self):
        phi = scattering_phi(1.7)
        assert abs(phi * phi.conjugate() - 1.0) < 5e-16

    def test_frozen_value(self):
        assert abs(scattering_phi(1.0) - PHI_AT_1) < 1e-9

    def test_refuses_tiny_t(self):
        with pytest.raises(ValueError):
            scattering_phi(1e-9)


class TestEisensteinEval:
    def test_automorphy(self):
        z = Point(0.3, 1.4)
        for t in (1.0, 2.0):
            e = eisenstein_eval(z, t)
            e_s = eisenstein_eval(mobius_apply(GEN_S, z), t)
            e_t = eisenstein_eval(mobius_apply(GEN_T, z), t)
            assert abs(e_s - e) <= 1e-8
            assert abs(e_t - e) <= 1e-8

    def test_conjugation(self):
        z = Point(0.21, 1.1)
        e_plus = eisenstein_eval(z, 1.3)
        e_minus = eisenstein_eval(z, -1.3)
        assert abs(e_minus - e_plus.conjugate()) < 1e-10

    def test_truncation_stability(self):
        z = Point(0.0, 1.0)
        a = eisenstein_eval(z, 2.0, EisensteinParams(n_fourier=8))
        b = eisenstein_eval(z, 2.0, EisensteinParams(n_fourier=16))
        assert abs(a - b) <= 1e-10

    def test_automorphy_random_points(self):
        rng = np.random.default_rng(41)
        for _ in range(8):
            z = Point(float(rng.uniform(-0.5, 0.5)), float(rng.uniform(0.8, 2.5)))
            t = float(rng.uniform(0.3, 3.0))
            e = eisenstein_eval(z, t)
            for g in (GEN_S, GEN_T):
                assert abs(eisenstein_eval(mobius_apply(g, z), t) - e) <= 1e-8


class TestWeylSumEmpirical:
    def test_point_mass(self):
        m = DiscreteMeasure(np.array([0.0]), np.array([1.0]), np.array([1.0]))
        for t in (0.7, 2.0):
            assert abs(weyl_sum_empirical(m, t) - eisenstein_eval(Point(0, 1), t)) < 1e-14

    def test_heegner_minus_four(self):
        m = heegner_measure(-4)
        assert abs(weyl_sum_empirical(m, 1.0) - eisenstein_eval(Point(0, 1), 1.0)) < 1e-14

    def test_linearity(self):
        m1 = heegner_measure(-4)
        m2 = heegner_measure(-8)
        mix = DiscreteMeasure(
            np.concatenate([m1.xs, m2.xs]),
            np.concatenate([m1.ys, m2.ys]),
            np.concatenate([0.5 * m1.weights, 0.5 * m2.weights]),
        )
        t = 1.1
        lhs = weyl_sum_empirical(mix, t)
        rhs = 0.5 * weyl_sum_empirical(m1, t) + 0.5 * weyl_sum_empirical(m2, t)
        assert abs(lhs - rhs) < 1e-12


class TestWeylSumExact:
    def test_even_in_t(self):
        a = weyl_sum_exact_sq(-23, 1.7)
        b = weyl_sum_exact_sq(-23, -1.7)
        assert abs(a - b) < 1e-10 * max(a, 1.0)

    def test_independent_assembly_minus_four(self):
        t = 1.0
        val = weyl_sum_exact_sq(-4, t)
        s = complex(0.5, t)
        num = riemann_zeta(s) * dirichlet_l(s, -4)
        den = riemann_zeta(complex(1.0, 2.0 * t))
        expected = (
            h_minus(t) / (4.0 * 2.0 * (math.pi / 4.0) ** 2) * abs(num / den) ** 2
        )
        assert abs(val - expected) < 1e-12 * expected

    def test_nonnegative_sweep(self):
        for D in (-7, -23, 5):
            for t in (0.5, 1.0, 2.0, 3.5):
                assert weyl_sum_exact_sq(D, t) >= 0.0


class TestWeylCompare:
    def test_headline_identity_negative(self):
        for D in (-7, -23):
            for t in (0.5, 1.0, 2.0):
                c = weyl_compare(D, t)
                assert abs(c.ratio - 1.0) <= 1e-3

    def test_unit_discriminants_constant_ratio(self):
        for D in (-3, -4):
            ratios = [weyl_compare(D, t).ratio for t in (0.5, 1.0, 2.0)]
            assert max(ratios) - min(ratios) <= 1e-3
            # the recorded offset: the unit weights cancel and the constant is 1
            assert abs(ratios[0] - 1.0) <= 1e-3

    def test_geodesic_case(self):
        c = weyl_compare(5, 1.0, samples_per_unit_length=200)
        assert abs(c.ratio - 1.0) <= 5e-3

    def test_long_geodesic(self):
        # the cycle-arc construction stays accurate when the closed
        # geodesic is far longer than the float walk could follow
        c = weyl_compare(97, 1.0, samples_per_unit_length=100)
        assert abs(c.ratio - 1.0) <= 5e-3

    def test_full_window_invariant(self):
        # every fundamental -30 <= D <= -5 at the three t values
        from modsurf.arithmetic import is_fundamental

        ds = [D for D in range(-5, -31, -1) if is_fundamental(D)]
        assert ds  # the window is nonempty
        for D in ds:
            for t in (0.5, 1.0, 2.0):
                assert abs(weyl_compare(D, t).ratio - 1.0) <= 1e-3, (D, t)


class TestMaassData:
    def test_load(self, tmp_path):
        p = tmp_path / "maass.txt"
        p.write_text("# cuspidal rows\n5.0 0.01\n9.5 0.002\n\n13.8 0.0005\n")
        data = MaassData.load(str(p))
        assert len(data.t_f) == 3
        np.testing.assert_allclose(data.t_f, [5.0, 9.5, 13.8])

    def test_strictly_increasing_enforced(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("5.0 0.01\n5.0 0.002\n")
        with pytest.raises(ValueError):
            MaassData.load(str(p))

    def test_malformed_row(self, tmp_path):
        p = tmp_path / "bad2.txt"
        p.write_text("5.0 0.01 7\n")
        with pytest.raises(ValueError):
            MaassData.load(str(p))


class TestBerryEsseen:
    def test_identical_measures(self):
        m = heegner_measure(-23)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            b = berry_esseen_rhs(m, m, 2.0)
        assert b.eisenstein_term == 0.0
        assert b.cuspidal_term == 0.0
        assert b.total == b.leading_term == 0.5
        assert b.is_partial

    def test_quadrature_refinement(self):
        m1 = heegner_measure(-23)
        m2 = haar_discretization(24, 18, 20.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            a = berry_esseen_rhs(m1, m2, 2.0, p=EisensteinParams(t_quad=(12, 16)))
            b = berry_esseen_rhs(m1, m2, 2.0, p=EisensteinParams(t_quad=(24, 16)))
        assert abs(a.eisenstein_term - b.eisenstein_term) <= 1e-6

    def test_cuspidal_monotonicity(self):
        m1 = heegner_measure(-23)
        m2 = haar_discretization(16, 12, 20.0)
        data = MaassData(np.array([9.533]), np.array([0.01]))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            base = berry_esseen_rhs(m1, m2, 2.0)
        richer = berry_esseen_rhs(m1, m2, 2.0, data=data)
        assert richer.total > base.total
        assert not richer.is_partial

    def test_partial_warning(self):
        m = heegner_measure(-7)
        m2 = heegner_measure(-8)
        with pytest.warns(UserWarning):
            berry_esseen_rhs(m, m2, 1.0)

    def test_t_max_guard(self):
        m = heegner_measure(-7)
        with pytest.raises(ValueError):
            berry_esseen_rhs(m, m, 6.0, p=EisensteinParams(t_max=15.0))

    def test_tail_bound_reported(self):
        m1 = heegner_measure(-7)
        m2 = heegner_measure(-8)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            b = berry_esseen_rhs(m1, m2, 1.0)
        assert b.eisenstein_tail_bound >= 0.0
        assert b.eisenstein_tail_bound < 1e-6 * max(b.eisenstein_term, 1e-30)

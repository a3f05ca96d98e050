"""Tests for the exact and entropic Wasserstein solvers and dual bounds."""

import math
import os

import numpy as np
import pytest

from modsurf import hypgeo as hg
from modsurf.arithmetic import DiscreteMeasure, heegner_measure
from modsurf.hypgeo import Point
from modsurf.transport import (
    DEFAULT_DUAL_FAMILY,
    LipschitzFunction,
    best_dual_lower_bound,
    clipped_distance,
    cost_matrix,
    dual_lower_bound,
    load_plan,
    save_plan,
    w1_exact,
    w1_sinkhorn,
)

from oracles import transport_by_enumeration


def measure(atoms):
    xs = np.array([a[0] for a in atoms], dtype=float)
    ys = np.array([a[1] for a in atoms], dtype=float)
    ws = np.array([a[2] for a in atoms], dtype=float)
    return DiscreteMeasure(xs, ys, ws)


def random_measure(rng, k):
    xs = rng.uniform(-0.5, 0.5, k)
    ys = np.exp(rng.uniform(0.0, 1.5, k))
    xs, ys = hg.reduce_batch(xs, ys)
    w = rng.uniform(0.2, 1.0, k)
    w /= w.sum()
    return DiscreteMeasure(xs, ys, w)


DELTA_I = measure([(0.0, 1.0, 1.0)])
DELTA_2I = measure([(0.0, 2.0, 1.0)])


class TestCostMatrix:
    def test_single_pair(self):
        c = cost_matrix(DELTA_I, DELTA_I)
        assert c.entries.shape == (1, 1)
        assert c.entries[0, 0] == 0.0

    def test_log_two(self):
        c = cost_matrix(DELTA_I, DELTA_2I)
        assert abs(c.entries[0, 0] - math.log(2)) < 1e-14

    def test_self_symmetric(self):
        m = heegner_measure(-23)
        c = cost_matrix(m, m).entries
        np.testing.assert_allclose(c, c.T, atol=1e-12)
        assert np.all(np.diag(c) < 1e-12)


class TestExactSolver:
    def test_identical_measures(self):
        m = measure([(0.0, 1.0, 0.4), (0.2, 1.5, 0.6)])
        value, plan = w1_exact(m, m)
        assert value < 1e-12

    def test_two_deltas(self):
        value, plan = w1_exact(DELTA_I, DELTA_2I)
        assert abs(value - math.log(2)) < 1e-14
        assert plan.plan[0, 0] == 1.0

    def test_spec_two_by_two(self):
        m1 = measure([(0.0, 1.0, 0.6), (0.0, 2.0, 0.4)])
        m2 = measure([(0.0, 1.0, 0.3), (0.0, 2.0, 0.7)])
        value, plan = w1_exact(m1, m2)
        assert abs(value - 0.3 * math.log(2)) < 1e-14
        # brute-force one-parameter family oracle
        oracle = transport_by_enumeration(m1.weights, m2.weights,
                                          cost_matrix(m1, m2).entries)
        assert abs(value - oracle) < 1e-12

    def test_small_instances_against_enumeration(self):
        rng = np.random.default_rng(31)
        for _ in range(25):
            shape = rng.choice([(2, 2), (2, 3)])
            mA = random_measure(rng, int(shape[0]))
            mB = random_measure(rng, int(shape[1]))
            value, plan = w1_exact(mA, mB)
            oracle = transport_by_enumeration(mA.weights, mB.weights,
                                              cost_matrix(mA, mB).entries)
            assert abs(value - oracle) <= 1e-10

    def test_plan_feasibility(self):
        rng = np.random.default_rng(32)
        for _ in range(10):
            mA = random_measure(rng, int(rng.integers(2, 20)))
            mB = random_measure(rng, int(rng.integers(2, 20)))
            value, plan = w1_exact(mA, mB)
            assert plan.plan.min() >= -1e-15
            np.testing.assert_allclose(plan.plan.sum(axis=1), mA.weights, atol=1e-9)
            np.testing.assert_allclose(plan.plan.sum(axis=0), mB.weights, atol=1e-9)
            c = cost_matrix(mA, mB).entries
            assert abs(plan.value - float((plan.plan * c).sum())) < 1e-12

    def test_optimality_certificate(self):
        # complementary slackness via dual feasibility of the potentials is
        # implied by agreement with an independent LP solver
        linprog = pytest.importorskip("scipy.optimize").linprog
        rng = np.random.default_rng(33)
        for _ in range(5):
            mA = random_measure(rng, 12)
            mB = random_measure(rng, 9)
            value, _ = w1_exact(mA, mB)
            C = cost_matrix(mA, mB).entries
            m, n = C.shape
            rows = []
            for i in range(m):
                r = np.zeros((m, n))
                r[i, :] = 1
                rows.append(r.ravel())
            for j in range(n):
                r = np.zeros((m, n))
                r[:, j] = 1
                rows.append(r.ravel())
            res = linprog(C.ravel(), A_eq=np.array(rows),
                          b_eq=np.concatenate([mA.weights, mB.weights]),
                          method="highs")
            assert abs(value - res.fun) < 1e-10

    def test_metric_axioms(self):
        rng = np.random.default_rng(34)
        for _ in range(6):
            m1 = random_measure(rng, 8)
            m2 = random_measure(rng, 7)
            m3 = random_measure(rng, 6)
            d12, _ = w1_exact(m1, m2)
            d21, _ = w1_exact(m2, m1)
            assert abs(d12 - d21) < 1e-9
            d13, _ = w1_exact(m1, m3)
            d32, _ = w1_exact(m3, m2)
            assert d12 <= d13 + d32 + 1e-8

    def test_support_guard(self):
        xs = np.zeros(2001)
        ys = np.linspace(1.0, 3.0, 2001)
        m = DiscreteMeasure(xs, ys, np.full(2001, 1.0 / 2001))
        with pytest.raises(ValueError):
            w1_exact(m, DELTA_I)


class TestSinkhorn:
    def test_identical(self):
        m = heegner_measure(-23)
        assert abs(w1_sinkhorn(m, m, 1e-2)) <= 1e-6

    def test_agreement_with_exact(self):
        rng = np.random.default_rng(35)
        mA = random_measure(rng, 50)
        mB = random_measure(rng, 50)
        v, _ = w1_exact(mA, mB)
        vs = w1_sinkhorn(mA, mB, 1e-3)
        assert abs(v - vs) <= 1e-3

    def test_monotone_in_reg(self):
        rng = np.random.default_rng(36)
        mA = random_measure(rng, 30)
        mB = random_measure(rng, 30)
        v, _ = w1_exact(mA, mB)
        diffs = [abs(w1_sinkhorn(mA, mB, reg) - v) for reg in (1e-1, 1e-2, 1e-3)]
        assert diffs[0] > diffs[1] > diffs[2]

    def test_rejects_bad_reg(self):
        with pytest.raises(ValueError):
            w1_sinkhorn(DELTA_I, DELTA_2I, 0.0)


class TestDualBounds:
    def test_constant_function(self):
        F = LipschitzFunction(lambda xs, ys: np.full_like(xs, 2.0), 1.0)
        assert dual_lower_bound(DELTA_I, DELTA_2I, F) == 0.0

    def test_tight_on_deltas(self):
        F = clipped_distance(Point(0, 1), 2.0)
        bound = dual_lower_bound(DELTA_I, DELTA_2I, F)
        v, _ = w1_exact(DELTA_I, DELTA_2I)
        assert abs(bound - math.log(2)) < 1e-12
        assert bound <= v + 1e-9

    def test_never_exceeds_exact(self):
        rng = np.random.default_rng(37)
        for _ in range(20):
            mA = random_measure(rng, int(rng.integers(2, 12)))
            mB = random_measure(rng, int(rng.integers(2, 12)))
            v, _ = w1_exact(mA, mB)
            for F in DEFAULT_DUAL_FAMILY:
                assert dual_lower_bound(mA, mB, F) <= v + 1e-9

    def test_family_size_and_gap_on_two_atoms(self):
        assert len(DEFAULT_DUAL_FAMILY) == 10
        rng = np.random.default_rng(38)
        hits = 0
        for _ in range(10):
            mA = random_measure(rng, 1)
            mB = random_measure(rng, 1)
            v, _ = w1_exact(mA, mB)
            if v < 1e-12:
                continue
            b = best_dual_lower_bound(mA, mB)
            if b >= 0.95 * v:
                hits += 1
        assert hits >= 5  # clipped distances from the site list are often tight

    def test_lipschitz_quotient_invariant(self):
        rng = np.random.default_rng(39)
        for F in DEFAULT_DUAL_FAMILY[:4]:
            for _ in range(30):
                xs = rng.uniform(-0.5, 0.5, 2)
                ys = np.exp(rng.uniform(0.0, 1.5, 2))
                xs, ys = hg.reduce_batch(xs, ys)
                d = hg.surface_distance(Point(xs[0], ys[0]), Point(xs[1], ys[1]))
                if d < 1e-9:
                    continue
                vals = F(xs, ys)
                quotient = abs(vals[0] - vals[1]) / d
                assert quotient <= F.lipschitz_constant * (1.0 + 1e-6)


class TestPlanSerialisation:
    def test_round_trip(self, tmp_path):
        m1 = measure([(0.0, 1.0, 0.6), (0.0, 2.0, 0.4)])
        m2 = measure([(0.0, 1.0, 0.3), (0.0, 2.0, 0.7)])
        value, plan = w1_exact(m1, m2)
        path = os.path.join(tmp_path, "plan.txt")
        save_plan(plan, path)
        p2 = load_plan(path, plan.plan.shape)
        assert np.array_equal(plan.plan, p2.plan)
        assert p2.value == plan.value

import math

import numpy as np
import pytest

import normlab as nl

SQRT2 = math.sqrt(2.0)


class TestScalarEmpiricalNorm:
    def test_unit_vector_gives_one(self, rng):
        A = nl.sample_sign_matrix(5, 9, seed=1)
        e1 = np.zeros(5)
        e1[0] = 1.0
        assert nl.scalar_empirical_norm(A, e1) == pytest.approx(1.0, abs=1e-15)

    def test_full_enumeration_matches_khinchin(self, rng):
        A = nl.enumeration_matrix(6)
        for _ in range(10):
            y = rng.standard_normal(6)
            kb = nl.khinchin_bounds(y)
            assert nl.scalar_empirical_norm(A, y) == pytest.approx(kb.exact, rel=1e-12)

    def test_zero(self):
        A = nl.sample_sign_matrix(4, 7, seed=2)
        assert nl.scalar_empirical_norm(A, np.zeros(4)) == 0.0

    def test_exact_consistency_with_dim1_empirical(self, rng):
        # the scalar map IS the general empirical norm over a 1-d space
        A = nl.sample_sign_matrix(6, 11, seed=3)
        fam = nl.make_family(nl.lp_space(2, 1), [[1.0]] * 6)
        emp = nl.EmpiricalNormInstance(family=fam, signs=A)
        for _ in range(20):
            y = rng.standard_normal(6)
            assert nl.scalar_empirical_norm(A, y) == nl.empirical_norm(emp, y)

    def test_dimension_mismatch(self):
        A = nl.sample_sign_matrix(4, 7, seed=2)
        with pytest.raises(ValueError):
            nl.scalar_empirical_norm(A, np.zeros(5))


class TestScalarMinMax:
    def test_n1_everything_is_one(self):
        A = nl.sample_sign_matrix(1, 6, seed=4)
        rep = nl.scalar_min_max(A, probes=16, seed=5)
        assert rep.kappa_min == pytest.approx(1.0, abs=1e-9)
        assert rep.kappa_max == pytest.approx(1.0, abs=1e-9)

    def test_closed_form_two_by_two(self):
        # rho(y) = (|y1+y2| + |y1-y2|)/2 = max(|y1|, |y2|) on the circle
        A = nl.SignMatrix.from_dense(np.array([[1, 1], [1, -1]], dtype=np.int8))
        rep = nl.scalar_min_max(A, probes=64, seed=6)
        assert rep.exact_pass
        assert rep.kappa_min == pytest.approx(1 / SQRT2, abs=1e-6)
        assert rep.kappa_max == pytest.approx(1.0, abs=1e-6)
        assert rep.kappa_max_certificate == pytest.approx(1.0, abs=1e-9)

    def test_certificate_dominates(self, rng):
        for t in range(20):
            n = int(rng.integers(2, 8))
            N = int(rng.integers(2, 12))
            A = nl.sample_sign_matrix(n, N, seed=100 + t)
            rep = nl.scalar_min_max(A, probes=64, seed=t)
            assert rep.kappa_max <= rep.kappa_max_certificate + 1e-9
            assert rep.kappa_max <= math.sqrt(n) + 1e-9
            assert 0.0 <= rep.kappa_min <= rep.kappa_max

    def test_rank_link_at_n2(self):
        # exact pass: kappa_min > 0 iff the matrix has full rank
        full = nl.SignMatrix.from_dense(np.array([[1, 1], [1, -1]], dtype=np.int8))
        assert nl.scalar_min_max(full, probes=32, seed=1).kappa_min > 0.0
        deficient = nl.SignMatrix.from_dense(np.array([[1, -1], [1, -1]], dtype=np.int8))
        rep = nl.scalar_min_max(deficient, probes=32, seed=1)
        assert np.linalg.matrix_rank(deficient.dense()) == 1
        assert rep.kappa_min == pytest.approx(0.0, abs=1e-12)

    def test_rho_is_a_norm_when_full_rank(self, rng):
        A = nl.sample_sign_matrix(4, 9, seed=11)
        assert np.linalg.matrix_rank(A.dense()) == 4
        for _ in range(20):
            y, z = rng.standard_normal((2, 4))
            t = float(rng.uniform(-2, 2))
            ry, rz = nl.scalar_empirical_norm(A, y), nl.scalar_empirical_norm(A, z)
            assert ry > 0.0
            assert abs(nl.scalar_empirical_norm(A, t * y) - abs(t) * ry) <= 1e-9 * max(
                1.0, abs(t) * ry
            )
            assert nl.scalar_empirical_norm(A, y + z) <= ry + rz + 1e-9 * (ry + rz)

    def test_khinchin_bridge_full_enumeration(self):
        # full enumeration: rho is the exact Rademacher average, so the
        # sandwich pins kappa to [1/sqrt2, 1]
        A = nl.enumeration_matrix(4)
        rep = nl.scalar_min_max(A, probes=256, seed=7, descent_steps=60)
        assert 1 / SQRT2 - 1e-9 <= rep.kappa_min
        assert rep.kappa_max <= 1.0 + 1e-9

    def test_probe_descent_close_to_exact_at_n2(self, rng):
        for t in range(20):
            N = int(rng.integers(2, 9))
            A = nl.sample_sign_matrix(2, N, seed=200 + t)
            rep = nl.scalar_min_max(A, probes=128, seed=t, descent_steps=50)
            # the reported values come from the exact pass; rerun without it
            # by probing only, then compare
            E = A.dense()
            probes = np.random.default_rng(t).standard_normal((4096, 2))
            probes /= np.linalg.norm(probes, axis=1)[:, None]
            brute = np.abs(probes @ E).mean(axis=1)
            assert rep.kappa_min <= brute.min() + 1e-9
            assert rep.kappa_max >= brute.max() - 1e-9


class TestScalarSweep:
    def test_determinism(self):
        a = nl.scalar_xi_sweep(6, [0.5, 1.0], 5, seed=42, probes=32, descent_steps=10)
        b = nl.scalar_xi_sweep(6, [0.5, 1.0], 5, seed=42, probes=32, descent_steps=10)
        assert a.rows == b.rows

    def test_extrapolation_flag(self):
        res = nl.scalar_xi_sweep(5, [0.5, 2.0], 3, seed=1, probes=16, descent_steps=5)
        assert not res.rows[0].outside_stated_range
        assert res.rows[1].outside_stated_range

    def test_tau_frequency(self):
        res = nl.scalar_xi_sweep(5, [1.0], 8, seed=2, probes=16, descent_steps=5, tau=10.0)
        assert res.rows[0].freq_below_tau == 1.0

    def test_quartiles_ordered_and_slope_reported(self):
        res = nl.scalar_xi_sweep(8, [0.25, 0.5, 1.0], 8, seed=3, probes=32, descent_steps=10)
        for row in res.rows:
            assert row.kmin_q1 <= row.kmin_median <= row.kmin_q3
        assert res.small_xi_loglog_slope is not None

import numpy as np
import pytest

import normlab as nl
from normlab.errors import CoveringViolationError

from conftest import random_family


@pytest.fixture
def inst3(rng):
    return nl.NormInstance(family=random_family(nl.lp_space("inf", 3), 3, rng))


@pytest.fixture
def inst5(rng):
    return nl.NormInstance(family=random_family(nl.lp_space("inf", 4), 5, rng))


def pairwise_min_distance(inst, pts):
    best = np.inf
    for i in range(len(pts)):
        d = nl.exact_unconditional_norm_many(inst, pts[i][None, :] - pts[i + 1 :])
        if d.size:
            best = min(best, float(d.min()))
    return best


class TestBuildNet:
    def test_one_dimensional_sphere_has_two_points(self, rng):
        inst = nl.NormInstance(family=random_family(nl.lp_space(2, 2), 1, rng))
        net = nl.build_net(inst, 0.5, seed=3)
        assert net.size == 2
        assert net.covering_status == "certified-small-n"

    def test_points_are_unit_vectors(self, inst3):
        net = nl.build_net(inst3, 0.5, seed=1)
        norms = nl.exact_unconditional_norm_many(inst3, net.points)
        assert np.abs(norms - 1.0).max() <= 1e-9

    def test_separation_exact(self, inst3):
        net = nl.build_net(inst3, 0.5, seed=1)
        assert net.separation_certified
        assert pairwise_min_distance(inst3, net.points) > 0.5

    def test_packing_bound(self, inst3):
        net = nl.build_net(inst3, 0.5, seed=1)
        assert net.size <= 6**3

    def test_small_n_grid_certification(self, inst3):
        net = nl.build_net(inst3, 0.5, seed=2)
        assert net.covering_status == "certified-small-n"

    def test_theta_out_of_range(self, inst3):
        with pytest.raises(ValueError):
            nl.build_net(inst3, 0.0, seed=1)
        with pytest.raises(ValueError):
            nl.build_net(inst3, 1.5, seed=1)

    def test_determinism(self, inst3):
        a = nl.build_net(inst3, 0.5, seed=9)
        b = nl.build_net(inst3, 0.5, seed=9)
        assert np.array_equal(a.points, b.points)


class TestNetDecompose:
    def test_net_point_terminates_immediately(self, inst3):
        net = nl.build_net(inst3, 0.5, seed=4)
        dec = nl.net_decompose(inst3, net, net.points[0], K=1)
        assert dec.coefficients == pytest.approx([1.0], abs=1e-12)
        assert dec.indices == [0]
        assert dec.residual_norm <= 1e-12

    def test_generic_residual_contracts(self, inst3, rng):
        net = nl.build_net(inst3, 0.5, seed=4)
        X = nl.sphere_sample(inst3, 20, seed=11)
        for x in X:
            dec = nl.net_decompose(inst3, net, x, K=10)
            assert dec.residual_norm <= 2**-10 + 1e-9
            for k, a in enumerate(dec.coefficients, start=1):
                assert abs(a) <= 2 ** (1 - k) + 1e-9

    def test_covering_violation_carries_witness(self, inst3):
        # a ridiculous one-point "net" cannot cover the sphere
        tiny = nl.NetPoints(
            theta=0.5,
            points=nl.build_net(inst3, 0.5, seed=4).points[:1],
            separation_certified=True,
            covering_status="heuristic",
            candidate_budget=1,
        )
        x = nl.sphere_sample(inst3, 50, seed=12)
        with pytest.raises(CoveringViolationError) as exc:
            for row in x:
                nl.net_decompose(inst3, tiny, row, K=5)
        w = exc.value.witness
        assert exc.value.distance > 0.5
        assert nl.exact_unconditional_norm(inst3, w) == pytest.approx(1.0, abs=1e-9)

    def test_rejects_non_unit_input(self, inst3):
        net = nl.build_net(inst3, 0.5, seed=4)
        with pytest.raises(ValueError):
            nl.net_decompose(inst3, net, np.zeros(3), K=3)


class TestCertifiedSupBound:
    def test_definition(self, inst5):
        net = nl.build_net(inst5, 0.5, budget=100, seed=6)
        signs = nl.sample_sign_matrix(inst5.n, 8, seed=7)
        emp = nl.EmpiricalNormInstance(family=inst5.family, signs=signs)
        bound = nl.certified_sup_bound(emp, net)
        vals = nl.batch_empirical_norm(emp, net.points)
        assert bound.value == 2.0 * vals.max()
        assert bound.covering_status == net.covering_status

    def test_dominates_fresh_samples(self, inst3):
        # sampling cross-check of the sup bound (covering certified at n=3)
        net = nl.build_net(inst3, 0.5, seed=8)
        assert net.covering_status == "certified-small-n"
        signs = nl.sample_sign_matrix(inst3.n, 6, seed=9)
        emp = nl.EmpiricalNormInstance(family=inst3.family, signs=signs)
        bound = nl.certified_sup_bound(emp, net)
        X = nl.sphere_sample(inst3, 2000, seed=10)
        assert nl.batch_empirical_norm(emp, X).max() <= bound.value + 1e-9

    def test_sum_norm_identity_configuration(self, rng):
        # v_i = e_i in the sum norm with an all-plus matrix: the empirical
        # norm is x -> sum |x_i|, which equals the averaged norm, so the
        # bound dominates the sphere max of |sum x_i|
        fam = nl.make_family(nl.lp_space(1, 4), np.eye(4))
        inst = nl.NormInstance(family=fam)
        signs = nl.SignMatrix.from_dense(np.ones((4, 3), dtype=np.int8))
        emp = nl.EmpiricalNormInstance(family=fam, signs=signs)
        net = nl.build_net(inst, 0.5, budget=150, seed=13)
        bound = nl.certified_sup_bound(emp, net)
        X = nl.sphere_sample(inst, 500, seed=14)
        assert bound.value >= np.abs(X.sum(axis=1)).max() - 1e-9


def test_net_json_round_trip(inst3, tmp_path):
    net = nl.build_net(inst3, 0.25, seed=15)
    path = tmp_path / "net.json"
    nl.save_net(net, path)
    back = nl.load_net(path)
    assert back.theta == net.theta
    assert back.covering_status == net.covering_status
    assert np.array_equal(back.points, net.points)

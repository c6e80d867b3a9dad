import numpy as np
import pytest

from nsfinsler.errors import BudgetExhausted, InvalidInput
from nsfinsler.models import FinslerInstance
from nsfinsler.oracle import (NullCone, alpha_linesearch, cone_search, feasible_from_parts,
                              gen_feasible_instance, gen_ns3_violating_instance, gen_random_instance,
                              gen_strict_instance, lambda_min_profile, linesearch_best, ns2_sphere_oracle,
                              oracle_feasible)

M1 = np.diag([1.0, -1.0])
EX1 = FinslerInstance(M1, np.ones((2, 2)))
EX2 = FinslerInstance(M1, np.diag([0.0, 1.0]))


def test_infeasible_pair_exhausts_budget_below_zero(backend):
    with pytest.raises(BudgetExhausted) as info:
        alpha_linesearch(EX1)
    best = info.value.result
    assert best.exhausted and -1e-9 < best.value < 0
    feasible, _ = oracle_feasible(EX1)
    assert not feasible


def test_feasible_pair_linesearch(backend):
    res = alpha_linesearch(EX2)
    assert res.value == pytest.approx(1.0, abs=1e-9)
    assert res.alpha_star >= 2.0 - 1e-6


def test_constant_profile():
    res = linesearch_best(FinslerInstance(-np.eye(2), np.zeros((2, 2))))
    assert res.value == pytest.approx(-1.0)
    assert res.alpha_star == 0.0


def test_profile_matches_closed_form(backend):
    alphas = np.array([-3.0, 0.0, 1.0, 10.0])
    vals = lambda_min_profile(EX1, alphas)
    assert np.allclose(vals, alphas - np.sqrt(alphas**2 + 1), atol=1e-12)


def test_concavity_of_profile():
    rng = np.random.default_rng(99)
    for i in range(100):
        n = int(rng.integers(2, 7))
        inst = gen_random_instance(n, i, ["psd", "nsd", "indefinite", "zero"][i % 4]).inst
        abc = np.sort(rng.uniform(-30, 30, (100, 3)), axis=1)
        vals = lambda_min_profile(inst, abc.ravel()).reshape(100, 3)
        assert np.all(vals[:, 1] >= np.minimum(vals[:, 0], vals[:, 2]) - 1e-9)


def test_sphere_oracle_examples():
    assert ns2_sphere_oracle(EX1, samples=1000, seed=1) is None
    inst = FinslerInstance(-np.eye(2), np.diag([1.0, -1.0]))
    w = ns2_sphere_oracle(inst, samples=1, seed=0)
    assert w is not None and w.residuals["xMx"] == pytest.approx(-1.0)
    assert ns2_sphere_oracle(FinslerInstance(-np.eye(2), np.eye(2)), samples=50) is None


def test_null_cone_points_lie_on_cone(rng):
    N = np.diag([2.0, 1.0, -3.0, 0.0])
    cone = NullCone(N)
    X = cone.points(*cone.draw(rng, 200))
    assert np.allclose(np.einsum("ij,jk,ik->i", X, N, X), 0.0, atol=1e-12)


def test_cone_search_finds_violation():
    res = cone_search(-np.eye(3), np.diag([1.0, -1.0, 0.5]), samples=200, seed=3)
    assert res.witness is not None and res.best_value < 0


@pytest.mark.parametrize("gen", [gen_feasible_instance, gen_random_instance, gen_strict_instance])
def test_generators_are_deterministic(gen):
    a = gen(5, 42, "indefinite").inst
    b = gen(5, 42, "indefinite").inst
    assert np.array_equal(a.M, b.M) and np.array_equal(a.N, b.N)
    c = gen(5, 43, "indefinite").inst
    assert not np.array_equal(a.M, c.M)


@pytest.mark.parametrize("cls", ["psd", "nsd", "indefinite", "zero"])
def test_feasible_generator_ground_truth(cls):
    for seed in range(10):
        g = gen_feasible_instance(4, seed, cls)
        assert g.ground_truth()["status"] == "feasible"
        lam = np.linalg.eigvalsh(g.inst.pencil(g.alpha_true))[0]
        assert lam >= -1e-9 * g.inst.scale(g.alpha_true)


def test_scalar_feasible_from_parts():
    inst = feasible_from_parts(np.eye(1), 2.0, np.array([[3.0]]))
    assert inst.M[0, 0] == pytest.approx(1.0)


def test_ns3_generator_plants_a_violator():
    for cls, n in (("psd", 3), ("nsd", 4), ("indefinite", 5), ("zero", 3)):
        g = gen_ns3_violating_instance(n, 7, cls)
        x = g.planted
        M, N = g.inst.M, g.inst.N
        assert np.linalg.norm(N @ x) < 1e-12 and abs(x @ M @ x) < 1e-12
        assert np.linalg.norm(M @ x) > 0.1
    with pytest.raises(InvalidInput):
        gen_ns3_violating_instance(3, 0, "pd")
    with pytest.raises(InvalidInput):
        gen_ns3_violating_instance(2, 0, "indefinite")

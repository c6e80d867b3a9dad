import numpy as np
import pytest

from nsfinsler import matrix_finsler as mf
from nsfinsler.errors import InternalInconsistency, InvalidInput, PreconditionViolated
from nsfinsler.matrix_finsler import (MFL_MODES, BlockedSymmetricPair, M1Result, check_m1, check_mfl_assumptions,
                                      decide_mfl, family_min_eigs, gen_mfl_pair, null_Z_family)


def blocks(M11, M12, M22, N11, N12, N22):
    M11, M12, M22, N11, N12, N22 = (np.asarray(A, dtype=float) for A in (M11, M12, M22, N11, N12, N22))
    M = np.block([[M11, M12], [np.transpose(M12), M22]])
    N = np.block([[N11, N12], [np.transpose(N12), N22]])
    return BlockedSymmetricPair(np.shape(M11)[0], np.shape(M22)[0], M, N)


def test_pair_validation():
    with pytest.raises(InvalidInput):
        BlockedSymmetricPair(1, 1, np.eye(3), np.eye(3))
    with pytest.raises(InvalidInput):
        BlockedSymmetricPair(0, 2, np.eye(2), np.eye(2))


def test_scalar_assumptions_hold():
    pair = blocks([[3.0]], [[0.0]], [[-1.0]], [[-1.0]], [[1.0]], [[-1.0]])
    rep = check_mfl_assumptions(pair)
    assert rep.all_hold
    assert rep.M_tilde11[0, 0] == pytest.approx(2.0)


def test_range_assumption_fails():
    pair = blocks([[1.0]], [[0.0]], [[-1.0]], [[0.0]], [[1.0]], [[0.0]])
    rep = check_mfl_assumptions(pair)
    assert not rep.a3 and not rep.all_hold


def test_decoupled_blocks():
    pair = blocks(np.diag([1.0, -2.0]), np.zeros((2, 2)), -np.eye(2), np.zeros((2, 2)), np.zeros((2, 2)),
                  -np.eye(2))
    rep = check_mfl_assumptions(pair)
    assert rep.all_hold
    assert np.allclose(rep.M_tilde11, pair.M11)


def test_null_family_examples():
    pair = blocks(np.eye(1), np.zeros((1, 2)), -np.eye(2), np.zeros((1, 1)), np.zeros((1, 2)), -np.eye(2))
    Z0, K = null_Z_family(pair)
    assert np.allclose(Z0, 0.0) and K.shape == (2, 0)
    pair = blocks(np.eye(1), np.zeros((1, 2)), -np.eye(2), [[-1.0]], [[1.0, 0.0]], np.diag([-1.0, 0.0]))
    Z0, K = null_Z_family(pair)
    assert np.allclose(Z0, [[1.0], [0.0]])
    assert np.allclose(np.abs(K), [[0.0], [1.0]])


def test_m1_holds_without_kernel():
    pair = blocks(np.diag([1.0, 0.0]), np.zeros((2, 1)), -np.eye(1), np.zeros((2, 2)), np.zeros((2, 1)),
                  -np.eye(1))
    assert check_m1(pair).holds


def test_m1_violated_at_Z0():
    pair = blocks(np.diag([1.0, -1.0]), np.zeros((2, 1)), -np.eye(1), np.zeros((2, 2)), np.zeros((2, 1)),
                  -np.eye(1))
    res = check_m1(pair)
    assert not res.holds and res.failed == "mtilde-psd"
    assert np.allclose(res.Z, 0.0)


def _assert_violating_Z(pair, Z):
    form, null_form = pair.forms(Z)
    assert np.linalg.norm(null_form) <= 1e-9 * (1 + np.linalg.norm(pair.N, 2)) * (1 + np.linalg.norm(Z, 2) ** 2)
    assert np.linalg.eigvalsh(form)[0] < 0


@pytest.mark.parametrize("tag", ["M22K", "M12K"])
def test_m1_kernel_violations_return_verified_Z(tag):
    found = 0
    for seed in range(300):
        pair = gen_mfl_pair(2 + seed % 3, 2 + seed % 3, seed, "random")
        if not check_mfl_assumptions(pair).all_hold:
            continue
        res = check_m1(pair)
        if res.failed == tag:
            _assert_violating_Z(pair, res.Z)
            found += 1
    assert found >= 3


def test_decide_feasible_pair_embedding():
    pair = blocks([[1.0]], [[0.0]], [[-1.0]], [[0.0]], [[0.0]], [[-1.0]])
    res = decide_mfl(pair)
    assert res.feasible and res.m1.holds and res.ns3.holds
    assert res.verdict.alpha <= -1.0


@pytest.mark.parametrize("mode", MFL_MODES)
def test_generator_satisfies_assumptions(mode):
    for seed in range(40):
        pair = gen_mfl_pair(1 + seed % 4, 1 + (seed // 4) % 4, seed, mode)
        assert check_mfl_assumptions(pair).all_hold, (mode, seed)


def test_generator_is_deterministic():
    a = gen_mfl_pair(3, 2, 5, "singular")
    b = gen_mfl_pair(3, 2, 5, "singular")
    assert np.array_equal(a.M, b.M) and np.array_equal(a.N, b.N)


def test_routes_agree_and_feasible_mode_is_certified():
    for seed in range(60):
        pair = gen_mfl_pair(1 + seed % 4, 1 + (seed // 4) % 4, seed, MFL_MODES[seed % 4])
        res = decide_mfl(pair)
        if MFL_MODES[seed % 4] == "feasible":
            assert res.feasible
        if res.feasible:
            a = res.verdict.alpha
            lam = np.linalg.eigvalsh(pair.M + a * pair.N)[0]
            assert lam >= -1e-8 * (1 + np.linalg.norm(pair.M, 2) + abs(a) * np.linalg.norm(pair.N, 2))


def test_singular_mode_can_fail_ns3():
    infeasible = [s for s in range(40) if not decide_mfl(gen_mfl_pair(3, 3, s, "singular")).feasible]
    assert infeasible
    res = decide_mfl(gen_mfl_pair(3, 3, infeasible[0], "singular"))
    assert res.m1.holds and res.ns3.violated


def test_inconsistency_is_raised(monkeypatch):
    pair = blocks([[1.0]], [[0.0]], [[-1.0]], [[0.0]], [[0.0]], [[-1.0]])
    monkeypatch.setattr(mf, "check_m1", lambda p, tol=None: M1Result(False, np.zeros((1, 1)), "mtilde-psd", -1.0))
    with pytest.raises(InternalInconsistency):
        decide_mfl(pair)


def test_assumption_failure_is_a_precondition_error():
    pair = blocks([[1.0]], [[0.0]], [[-1.0]], [[0.0]], [[1.0]], [[0.0]])
    with pytest.raises(PreconditionViolated):
        decide_mfl(pair)


def test_family_brute_force_agrees_with_reduction(rng):
    pair = next(p for p in (gen_mfl_pair(2, 3, s, "feasible") for s in range(50))
                if null_Z_family(p)[1].shape[1] > 0)
    Z0, K = null_Z_family(pair)
    thetas = rng.standard_normal((500, K.shape[1], 2)) * 10
    mins = family_min_eigs(pair, thetas)
    assert np.all(mins >= np.linalg.eigvalsh(check_mfl_assumptions(pair).M_tilde11)[0] - 1e-8)

"""Non-strict projection lemma: feasibility of Q + UᵀXV + VᵀXᵀU ⪰ 0.

Only the V = I case has a closed-form solution (X a positive multiple of U);
for general V the conditions are checked but no X is synthesized.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import decide_ns1
from .errors import InvalidInput, PreconditionViolated
from .linalg import (DEFAULT_TOL, Definiteness, ToleranceProfile, as_matrix, as_symmetric,
                     definiteness_class, is_psd, kernel_basis, lambda_min, norm2)
from .models import ConditionStatus, FinslerInstance, Status, Witness, WitnessRole


@dataclass(frozen=True)
class NsplInstance:
    Q: np.ndarray
    U: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        Q = as_symmetric(self.Q, name="Q")
        U = as_matrix(self.U, "U")
        V = as_matrix(self.V, "V")
        n = Q.shape[0]
        for name, A in (("U", U), ("V", V)):
            if A.shape[1] != n:
                raise InvalidInput(f"{name} must have {n} columns, got shape {A.shape}")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)


@dataclass(frozen=True)
class NsplReport:
    cond_U: ConditionStatus
    cond_V: ConditionStatus
    coupling: ConditionStatus

    @property
    def feasible(self) -> bool:
        return self.cond_U.holds and self.cond_V.holds and self.coupling.holds


def _restriction_psd(Q, A, tol) -> ConditionStatus:
    B = kernel_basis(A, tol)
    if B.shape[1] == 0:
        return ConditionStatus.ok("trivial kernel")
    G = B.T @ Q @ B
    if is_psd(G, tol):
        return ConditionStatus.ok()
    _, vecs = np.linalg.eigh(G)
    return ConditionStatus(Status.VIOLATED, Witness.build(Q, A.T @ A, B @ vecs[:, 0], WitnessRole.NS2_VIOLATOR))


def check_nspl(inst: NsplInstance, tol: ToleranceProfile = DEFAULT_TOL) -> NsplReport:
    Q, U, V = inst.Q, inst.U, inst.V
    cond_U = _restriction_psd(Q, U, tol)
    cond_V = _restriction_psd(Q, V, tol)

    stacked = np.vstack([U, V])
    B = kernel_basis(stacked, tol)
    if B.shape[1] == 0:
        coupling = ConditionStatus.ok("ker U ∩ ker V = {0}")
    else:
        G = B.T @ Q @ B
        g_class = definiteness_class(G, tol)
        if g_class is Definiteness.INDEFINITE:
            coupling = ConditionStatus(Status.NOT_DECISIVE, None, "form indefinite on ker U ∩ ker V")
        else:
            K = B if g_class is Definiteness.ZERO else B @ kernel_basis(G, tol, ref=norm2(Q))
            if K.shape[1] == 0 or norm2(Q @ K) <= tol.zero_tol * (1.0 + norm2(Q)):
                coupling = ConditionStatus.ok()
            else:
                _, _, vt = np.linalg.svd(Q @ K)
                x = K @ vt[0]
                coupling = ConditionStatus(
                    Status.VIOLATED, Witness.build(Q, stacked.T @ stacked, x, WitnessRole.NS3_VIOLATOR))
    return NsplReport(cond_U, cond_V, coupling)


def solve_nspl_identity(Q, U, tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    """X = βU with β > 0 solving Q + UᵀX + XᵀU ⪰ 0 (the V = I case).

    β is half the multiplier certifying Q + α·UᵀU ⪰ 0. Raises
    :class:`PreconditionViolated` (with the condition report) when no X exists.
    """
    Q = as_symmetric(Q, name="Q")
    U = as_matrix(U, "U")
    n = Q.shape[0]
    report = check_nspl(NsplInstance(Q, U, np.eye(n)), tol)
    if not report.feasible:
        raise PreconditionViolated("projection-lemma conditions fail for V = I", report)
    if norm2(U) <= tol.zero_tol:
        X = np.zeros_like(U)
    else:
        verdict = decide_ns1(FinslerInstance(Q, U.T @ U), tol)
        if not verdict.feasible:
            raise PreconditionViolated("no multiplier found for Q + a·UᵀU", report)
        X = (0.5 * verdict.alpha) * U
    residual = Q + U.T @ X + X.T @ U
    scale = 1.0 + norm2(Q) + 2.0 * norm2(U.T @ X)
    lam = lambda_min(residual)
    if lam < -tol.psd_tol * scale:
        raise PreconditionViolated(f"closed-form X fails the residual check (lambda_min = {lam:.3g})", report)
    return X


def gen_nspl_instance(n: int, seed: int, identity_V: bool = True) -> tuple[NsplInstance, np.ndarray]:
    """Feasible projection instance and a known solution X0.

    Q = P - UᵀX0V - VᵀX0ᵀU with P ⪰ 0 of random rank. With ``identity_V``
    X0 = cU for some c > 0, i.e. Q = P - 2c·UᵀU.
    """
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, n + 1))
    U = rng.standard_normal((m, n))
    k = int(rng.integers(0, n + 1))
    R = rng.standard_normal((k, n))
    P = R.T @ R
    if identity_V:
        V = np.eye(n)
        X0 = rng.uniform(0.1, 3.0) * U
    else:
        V = rng.standard_normal((int(rng.integers(1, n + 1)), n))
        X0 = rng.standard_normal((m, V.shape[0]))
    Q = P - U.T @ X0 @ V - V.T @ X0.T @ U
    return NsplInstance(0.5 * (Q + Q.T), U, V), X0

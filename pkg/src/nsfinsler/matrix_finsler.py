"""Matrix Finsler lemma for block-partitioned pairs.

For M, N ∈ S^{n+m} with blocks (11: n×n, 12: n×m, 22: m×m) satisfying

    a1  N22 ⪯ 0
    a2  N11 - N12 N22⁺ N12ᵀ = 0
    a3  (I - N22 N22⁺) N12ᵀ = 0
    a4  M22 ⪯ 0
    a5  M̃11 = (I, -N12N22⁺) M (I, -N12N22⁺)ᵀ has a positive eigenvalue

feasibility of M + αN ⪰ 0 is equivalent to (M1) together with the coupling
condition checked by :func:`nsfinsler.core.check_ns3`, where (M1) asks that
[I; Z]ᵀM[I; Z] ⪰ 0 for every Z with [I; Z]ᵀN[I; Z] = 0.

The null family is {Z0 + KΘ} with Z0 = -N22⁺N12ᵀ and K spanning ker N22, and
[I; Z]ᵀM[I; Z] = M̃11 + CΘ + ΘᵀCᵀ + ΘᵀDΘ with C = (M12 + Z0ᵀM22)K,
D = KᵀM22K ⪯ 0. It is PSD for every Θ iff M22K = 0, M12K = 0 and M̃11 ⪰ 0,
which is what :func:`check_m1` tests.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import check_ns3, decide_ns1
from .errors import InternalInconsistency, InvalidInput, PreconditionViolated
from .linalg import (DEFAULT_TOL, ToleranceProfile, as_symmetric, is_nsd, is_psd, kernel_basis,
                     lambda_min, norm2, pseudoinverse)
from .models import ConditionStatus, FinslerInstance, FinslerVerdict, Status


@dataclass(frozen=True)
class BlockedSymmetricPair:
    n: int
    m: int
    M: np.ndarray
    N: np.ndarray

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise InvalidInput("block sizes n and m must be positive")
        M = as_symmetric(self.M, name="M")
        N = as_symmetric(self.N, name="N")
        if M.shape != (self.n + self.m,) * 2 or N.shape != M.shape:
            raise InvalidInput(f"M and N must be {self.n + self.m}x{self.n + self.m}")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "N", N)

    def _blocks(self, A):
        n = self.n
        return A[:n, :n], A[:n, n:], A[n:, n:]

    @property
    def M11(self):
        return self._blocks(self.M)[0]

    @property
    def M12(self):
        return self._blocks(self.M)[1]

    @property
    def M22(self):
        return self._blocks(self.M)[2]

    @property
    def N11(self):
        return self._blocks(self.N)[0]

    @property
    def N12(self):
        return self._blocks(self.N)[1]

    @property
    def N22(self):
        return self._blocks(self.N)[2]

    def instance(self) -> FinslerInstance:
        return FinslerInstance(self.M, self.N)

    def lift(self, Z) -> np.ndarray:
        """[I; Z] for Z of shape (m, n)."""
        return np.vstack([np.eye(self.n), np.asarray(Z, dtype=float).reshape(self.m, self.n)])

    def forms(self, Z):
        """([I;Z]ᵀM[I;Z], [I;Z]ᵀN[I;Z])."""
        F = self.lift(Z)
        return F.T @ self.M @ F, F.T @ self.N @ F


@dataclass(frozen=True)
class MflAssumptionReport:
    a1: bool
    a2: bool
    a3: bool
    a4: bool
    a5: bool
    M_tilde11: np.ndarray
    x_bar: np.ndarray

    @property
    def all_hold(self) -> bool:
        return self.a1 and self.a2 and self.a3 and self.a4 and self.a5

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("a1", "a2", "a3", "a4", "a5", "all_hold")}


def _z0(pair: BlockedSymmetricPair, tol) -> np.ndarray:
    return -pseudoinverse(pair.N22, tol) @ pair.N12.T


def check_mfl_assumptions(pair: BlockedSymmetricPair, tol: ToleranceProfile = DEFAULT_TOL) -> MflAssumptionReport:
    N12, N22 = pair.N12, pair.N22
    N22p = pseudoinverse(N22, tol)
    scale_n = 1.0 + norm2(pair.N)
    a1 = bool(is_nsd(N22, tol))
    a2 = norm2(pair.N11 - N12 @ N22p @ N12.T) <= tol.zero_tol * scale_n
    a3 = norm2((np.eye(pair.m) - N22 @ N22p) @ N12.T) <= tol.zero_tol * scale_n
    a4 = bool(is_nsd(pair.M22, tol))
    F = pair.lift(_z0(pair, tol))
    Mt = F.T @ pair.M @ F
    Mt = 0.5 * (Mt + Mt.T)
    w, V = np.linalg.eigh(Mt)
    a5 = bool(w[-1] > tol.psd_tol)
    return MflAssumptionReport(a1, bool(a2), bool(a3), a4, a5, Mt, V[:, -1])


def null_Z_family(pair: BlockedSymmetricPair, tol: ToleranceProfile = DEFAULT_TOL):
    """(Z0, K) such that {Z : [I;Z]ᵀN[I;Z] = 0} = {Z0 + KΘ}."""
    rep = check_mfl_assumptions(pair, tol)
    if not (rep.a1 and rep.a2 and rep.a3):
        raise PreconditionViolated("assumptions a1-a3 on N do not hold", rep)
    Z0 = _z0(pair, tol)
    K = kernel_basis(pair.N22, tol, ref=norm2(pair.N))
    _, null_form = pair.forms(Z0)
    if norm2(null_form) > tol.zero_tol * (1.0 + norm2(pair.N)) * (1.0 + norm2(Z0) ** 2):
        raise PreconditionViolated("[I;Z0]ᵀN[I;Z0] is not zero")
    return Z0, K


@dataclass(frozen=True)
class M1Result:
    holds: bool
    Z: np.ndarray | None = None
    failed: str | None = None  # "mtilde-psd", "M22K", "M12K"
    lambda_min: float | None = None

    def __bool__(self):
        return self.holds


def _escalate(pair, Z0, K, w, v, sign, tol):
    # Θ = t·w vᵀ, doubling t until the form has a clearly negative eigenvalue.
    scale_m = 1.0 + norm2(pair.M)
    t = 1.0
    for _ in range(80):
        Z = Z0 + K @ np.outer(sign * t * w, v)
        form, _ = pair.forms(Z)
        lam = lambda_min(form)
        if lam < -tol.psd_tol * scale_m * (1.0 + norm2(Z) ** 2):
            return Z, lam
        t *= 2.0
    raise PreconditionViolated("could not construct a violating Z")  # pragma: no cover


def check_m1(pair: BlockedSymmetricPair, tol: ToleranceProfile = DEFAULT_TOL) -> M1Result:
    rep = check_mfl_assumptions(pair, tol)
    if not (rep.a1 and rep.a2 and rep.a3 and rep.a4):
        raise PreconditionViolated("assumptions a1-a4 do not hold", rep)
    Z0, K = null_Z_family(pair, tol)
    Mt = rep.M_tilde11
    psd = is_psd(Mt, tol)
    if not psd:
        return M1Result(False, Z0, "mtilde-psd", psd.lambda_min)
    if K.shape[1] == 0:
        return M1Result(True, lambda_min=psd.lambda_min)
    scale = tol.zero_tol * (1.0 + norm2(pair.M))
    _, Vt = np.linalg.eigh(Mt)
    v = Vt[:, 0]
    M22K = pair.M22 @ K
    if norm2(M22K) > scale:
        D = K.T @ pair.M22 @ K
        _, Vd = np.linalg.eigh(0.5 * (D + D.T))
        w = Vd[:, 0]
        c = v @ (pair.M12 + Z0.T @ pair.M22) @ K @ w
        Z, lam = _escalate(pair, Z0, K, w, v, -1.0 if c >= 0 else 1.0, tol)
        return M1Result(False, Z, "M22K", lam)
    C = pair.M12 @ K
    if norm2(C) > scale:
        U, _, Wt = np.linalg.svd(C)
        Z, lam = _escalate(pair, Z0, K, Wt[0], U[:, 0], -1.0, tol)
        return M1Result(False, Z, "M12K", lam)
    return M1Result(True, lambda_min=psd.lambda_min)


def family_min_eigs(pair: BlockedSymmetricPair, thetas, tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    """λ_min([I;Z]ᵀM[I;Z]) for Z = Z0 + KΘ, one value per Θ in ``thetas``.

    ``thetas`` has shape (samples, dim ker N22, n). Brute-force companion to
    :func:`check_m1`.
    """
    Z0, K = null_Z_family(pair, tol)
    thetas = np.asarray(thetas, dtype=float)
    if K.shape[1] == 0:
        return np.full(thetas.shape[0], lambda_min(pair.forms(Z0)[0]))
    return kernels.backend.family_min_eigs(kernels.as_f64(pair.M), kernels.as_f64(Z0), kernels.as_f64(K),
                                           kernels.as_f64(thetas))


@dataclass(frozen=True)
class MflVerdict:
    verdict: FinslerVerdict
    assumptions: MflAssumptionReport
    m1: M1Result
    ns3: ConditionStatus

    @property
    def feasible(self) -> bool:
        return self.verdict.feasible


def decide_mfl(pair: BlockedSymmetricPair, tol: ToleranceProfile = DEFAULT_TOL, seed: int = 0) -> MflVerdict:
    """Decide feasibility two ways and insist that they agree.

    Route 1 runs :func:`decide_ns1` on the full pair; route 2 evaluates
    (M1) ∧ (NS3). Disagreement raises :class:`InternalInconsistency`.
    """
    rep = check_mfl_assumptions(pair, tol)
    if not rep.all_hold:
        raise PreconditionViolated("matrix Finsler assumptions do not hold", rep)
    inst = pair.instance()
    verdict = decide_ns1(inst, tol, seed)
    m1 = check_m1(pair, tol)
    ns3 = check_ns3(inst, tol, seed)
    # With (M1) violated the conjunction is already false; an undecided
    # (NS3) only matters when (M1) holds.
    if m1.holds and ns3.status is Status.NOT_DECISIVE:
        raise InternalInconsistency("(NS3) undecided on a pair whose N is semidefinite",
                                    {"verdict": verdict, "m1": m1, "ns3": ns3})
    route2 = m1.holds and ns3.holds
    if verdict.feasible != route2:
        raise InternalInconsistency(
            f"decide_ns1 says feasible={verdict.feasible} but (M1)={m1.holds}, (NS3)={ns3.holds}",
            {"verdict": verdict, "m1": m1, "ns3": ns3})
    return MflVerdict(verdict, rep, m1, ns3)


# ---------------------------------------------------------------------------
# Generator

MFL_MODES = ("feasible", "singular", "indefinite", "random")


def gen_mfl_pair(n: int, m: int, seed: int, mode: str = "random") -> BlockedSymmetricPair:
    """Seeded pair satisfying a1-a5 by construction.

    ``feasible``: (M1) and (NS3) hold. ``singular``: (M1) holds with M̃11
    singular, so (NS3) generically fails. ``indefinite``: M̃11 indefinite.
    ``random``: unconstrained M22/M12 (usually violating (M1) through K).
    """
    if mode not in MFL_MODES:
        raise InvalidInput(f"unknown mode {mode!r}")
    rng = np.random.default_rng(seed)
    structured = mode != "random"
    r = int(rng.integers(0, m if structured else m + 1))
    G = rng.standard_normal((r, m))
    N22 = -G.T @ G
    F = rng.standard_normal((m, n))
    N12 = F.T @ N22
    N11 = F.T @ N22 @ F
    N = np.block([[N11, N12], [N12.T, N22]])
    tol = DEFAULT_TOL
    Z0 = -pseudoinverse(N22, tol) @ N12.T
    K = kernel_basis(N22, tol) if r < m else np.zeros((m, 0))
    P_range = np.eye(m) - K @ K.T

    H = rng.standard_normal((int(rng.integers(0, m + 1)), m))
    M12 = rng.standard_normal((n, m))
    if structured:
        H = H @ P_range
        M12 = M12 @ P_range
    M22 = -H.T @ H
    shift = M12 @ Z0 + Z0.T @ M12.T + Z0.T @ M22 @ Z0

    if mode == "random":
        A = rng.standard_normal((n, n))
        target = 0.5 * (A + A.T)
        w, V = np.linalg.eigh(target)
        if w[-1] < 0.5:
            target = target + (0.5 - w[-1] + rng.uniform(0, 1)) * np.outer(V[:, -1], V[:, -1])
    else:
        Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        d = rng.uniform(0.2, 2.0, n)
        if mode == "singular" and n >= 2:
            d[rng.permutation(n)[: int(rng.integers(1, n))]] = 0.0
        elif mode == "indefinite" and n >= 2:
            neg = rng.permutation(n)[: int(rng.integers(1, n))]
            d[neg] = -d[neg]
        target = (Q * d) @ Q.T
    M11 = target - shift
    M = np.block([[M11, M12], [M12.T, M22]])
    return BlockedSymmetricPair(n, m, 0.5 * (M + M.T), 0.5 * (N + N.T))

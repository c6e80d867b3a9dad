"""Non-strict Finsler feasibility: decide, certify, refute.

``decide_ns1`` answers whether some real α gives M + αN ⪰ 0. For a
sign-semidefinite N the answer is constructive: the two conditions
``check_ns2`` (M is PSD on ker N) and ``check_ns3`` (the zero set of xᵀMx
inside ker N lies in ker M) are tested exactly on kernel bases, and α is
synthesized from a congruence and a Schur complement. For indefinite N the
concave profile α ↦ λ_min(M + αN) is maximized directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExhausted, InvalidInput, PreconditionViolated, WitnessSearchFailed
from .linalg import (DEFAULT_TOL, Definiteness, ToleranceProfile, complement_basis, definiteness_class,
                     is_psd, kernel_basis, lambda_min, norm2, pseudoinverse)
from .models import (WITNESS_SEARCH_FAILED, CongruenceData, ConditionStatus, FinslerInstance,
                     FinslerVerdict, Method, Status, Witness, WitnessRole)
from .oracle import LineSearchResult, alpha_linesearch, cone_search, lambda_min_profile, linesearch_best

WITNESS_BUDGET = 10_000


def _as_instance(inst, N=None) -> FinslerInstance:
    if isinstance(inst, FinslerInstance):
        return inst
    return FinslerInstance(inst, N)


def _restricted_kernel(inst: FinslerInstance, n_class: Definiteness, tol: ToleranceProfile) -> np.ndarray:
    # For N ≈ 0 the whole space is the kernel, whatever the relative rank rule says.
    if n_class is Definiteness.ZERO:
        return np.eye(inst.n)
    return kernel_basis(inst.N, tol)


def _bottom_vector(G: np.ndarray) -> np.ndarray:
    _, V = np.linalg.eigh(0.5 * (G + G.T))
    return V[:, 0]


def _cone_roots(z, d, N):
    """Roots of f(t) = (z + t d)ᵀ N (z + t d) when zᵀNz and dᵀNd have opposite signs."""
    a = d @ N @ d
    b = 2.0 * (d @ N @ z)
    c = z @ N @ z
    disc = b * b - 4.0 * a * c
    if a == 0.0 or disc < 0.0:
        return None
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    r1 = q / a
    r2 = c / q if q != 0.0 else -r1
    return max(r1, r2), min(r1, r2)


def _opposite_directions(N, sign, rng, extra: int = 8):
    """Eigenvectors of N whose eigenvalue has sign ``-sign`` (largest first), then random mixes."""
    w, U = np.linalg.eigh(N)
    idx = np.flatnonzero(-sign * w > 0)
    idx = idx[np.argsort(-np.abs(w[idx]))]
    for i in idx:
        yield U[:, i]
    if len(idx) > 1:
        for _ in range(extra):
            yield U[:, idx] @ rng.standard_normal(len(idx))


def snap_to_cone(x, N, tol: ToleranceProfile = DEFAULT_TOL):
    """Move x onto {xᵀNx = 0} along an opposite-sign eigenvector, smallest step."""
    x = np.asarray(x, dtype=float)
    v = x @ N @ x
    if abs(v) <= tol.zero_tol * (1.0 + norm2(N)):
        return x
    best = None
    for d in _opposite_directions(N, np.sign(v), np.random.default_rng(0), extra=0):
        roots = _cone_roots(x, d, N)
        if roots is None:
            continue
        t = min(roots, key=abs)
        if best is None or abs(t) < abs(best[0]):
            best = (t, d)
    if best is None:
        return None
    return x + best[0] * best[1]


# ---------------------------------------------------------------------------
# (NS2)


def _ns2_indefinite(inst: FinslerInstance, tol: ToleranceProfile, seed: int,
                    samples: int, ls: LineSearchResult | None = None) -> ConditionStatus:
    if ls is None:
        ls = alpha_linesearch(inst, tol)
    if ls.value >= -tol.psd_tol * inst.scale(ls.alpha_star):
        return ConditionStatus.ok("certified by line search")
    # At the maximizing α the bottom eigenvectors of M + αN nearly satisfy
    # xᵀNx = 0 (the profile's slope vanishes); snap them onto the cone first.
    w, V = np.linalg.eigh(inst.pencil(ls.alpha_star))
    for j in range(min(inst.n, 3)):
        if w[j] > ls.value + 1e-6 * inst.scale(ls.alpha_star):
            break
        x = snap_to_cone(V[:, j], inst.N, tol)
        if x is None or not np.any(x):
            continue
        cand = Witness.build(inst.M, inst.N, x, WitnessRole.NS2_VIOLATOR)
        if cand.verify(inst.M, inst.N, tol):
            return ConditionStatus(Status.VIOLATED, cand)
    found = cone_search(inst.M, inst.N, samples, seed, tol)
    if found.witness is not None:
        return ConditionStatus(Status.VIOLATED, found.witness)
    return ConditionStatus(Status.VIOLATED, None, WITNESS_SEARCH_FAILED)


def check_ns2(inst, tol: ToleranceProfile = DEFAULT_TOL, seed: int = 0,
              samples: int = WITNESS_BUDGET) -> ConditionStatus:
    """xᵀMx ≥ 0 for every x with xᵀNx = 0."""
    inst = _as_instance(inst)
    cls = definiteness_class(inst.N, tol)
    if cls is Definiteness.INDEFINITE:
        return _ns2_indefinite(inst, tol, seed, samples)
    B = _restricted_kernel(inst, cls, tol)
    if B.shape[1] == 0:
        return ConditionStatus.ok("trivial kernel")
    G = B.T @ inst.M @ B
    if is_psd(G, tol):
        return ConditionStatus.ok()
    x = B @ _bottom_vector(G)
    return ConditionStatus(Status.VIOLATED, Witness.build(inst.M, inst.N, x, WitnessRole.NS2_VIOLATOR))


# ---------------------------------------------------------------------------
# (NS3)


def _top_direction(A: np.ndarray, K: np.ndarray) -> np.ndarray:
    """Unit vector in im K maximizing ‖A k‖."""
    _, _, vt = np.linalg.svd(A @ K)
    return K @ vt[0]


def check_ns3(inst, tol: ToleranceProfile = DEFAULT_TOL, seed: int = 0,
              samples: int = 2_000) -> ConditionStatus:
    """ker N ∩ {ξ : ξᵀMξ = 0} ⊆ ker M."""
    inst = _as_instance(inst)
    cls = definiteness_class(inst.N, tol)
    B = _restricted_kernel(inst, cls, tol)
    if B.shape[1] == 0:
        return ConditionStatus.ok("trivial kernel")
    G = B.T @ inst.M @ B
    g_class = definiteness_class(G, tol)
    if g_class is Definiteness.INDEFINITE:
        return _ns3_cone_probe(inst, B, G, tol, seed, samples)
    K = B if g_class is Definiteness.ZERO else B @ kernel_basis(G, tol, ref=norm2(inst.M))
    if K.shape[1] == 0:
        return ConditionStatus.ok("form is definite on ker N")
    scale = 1.0 + norm2(inst.M)
    if norm2(inst.M @ K) <= tol.zero_tol * scale:
        return ConditionStatus.ok()
    x = _top_direction(inst.M, K)
    return ConditionStatus(Status.VIOLATED, Witness.build(inst.M, inst.N, x, WitnessRole.NS3_VIOLATOR))


def _ns3_cone_probe(inst, B, G, tol, seed, samples) -> ConditionStatus:
    # G indefinite: the zero set of ηᵀGη is a cone, not a subspace. Try
    # balanced mixes of positive/negative eigenvectors of G; any such point
    # outside ker M refutes the condition. Failure to find one proves nothing.
    w, V = np.linalg.eigh(G)
    thr = tol.psd_tol * (1.0 + np.max(np.abs(w)))
    pos, neg = np.flatnonzero(w > thr), np.flatnonzero(w < -thr)
    rng = np.random.default_rng(seed)

    def candidates():
        for i in pos:
            for j in neg:
                for s in (1.0, -1.0):
                    yield V[:, i] / math.sqrt(w[i]) + s * V[:, j] / math.sqrt(-w[j])
        for _ in range(samples):
            a = V[:, pos] @ rng.standard_normal(len(pos))
            b = V[:, neg] @ rng.standard_normal(len(neg))
            yield a / math.sqrt(a @ G @ a) + b / math.sqrt(-(b @ G @ b))

    for eta in candidates():
        cand = Witness.build(inst.M, inst.N, B @ eta, WitnessRole.NS3_VIOLATOR)
        if cand.verify(inst.M, inst.N, tol):
            return ConditionStatus(Status.NOT_DECISIVE, cand, "form indefinite on ker N; violator found")
    return ConditionStatus(Status.NOT_DECISIVE, None, "form indefinite on ker N")


# ---------------------------------------------------------------------------
# α synthesis for sign-semidefinite N


def congruence(inst: FinslerInstance, tol: ToleranceProfile = DEFAULT_TOL) -> CongruenceData:
    """Orthonormal T = [T1 T2 T3] with im[T1 T2] = ker N and im T2 = ker N ∩ ker M."""
    n = inst.n
    B = kernel_basis(inst.N, tol)
    if B.shape[1]:
        C = kernel_basis(inst.M @ B, tol, ref=norm2(inst.M))
        T2 = B @ C
        T1 = B @ complement_basis(C, B.shape[1], tol)
    else:
        T1 = T2 = np.zeros((n, 0))
    T3 = complement_basis(B, n, tol)
    M, N = inst.M, inst.N
    return CongruenceData(T1, T2, T3, T1.T @ M @ T1, T1.T @ M @ T3, T3.T @ M @ T3, T3.T @ N @ T3)


@dataclass(frozen=True)
class AlphaCertificate:
    alpha: float
    congruence: CongruenceData
    lambda_min: float


def synthesize_alpha_definite(inst, tol: ToleranceProfile = DEFAULT_TOL) -> AlphaCertificate:
    """Constructive α for sign-semidefinite, nonzero N when (NS2) and (NS3) hold.

    With the congruence blocks W = TᵀMT, V = TᵀNT, feasibility reduces to
    S33 + αV33 ⪰ 0 for the Schur complement S33 = W33 - W13ᵀW11⁻¹W13, and
    V33 is definite, so α = (λ_max(-S33)⁺ + margin)/λ_min(±V33) works.
    """
    inst = _as_instance(inst)
    cls = definiteness_class(inst.N, tol)
    if cls is Definiteness.INDEFINITE:
        raise PreconditionViolated("N is indefinite; use the line search")
    if cls is Definiteness.ZERO:
        raise PreconditionViolated("N is zero; the congruence has no third block")
    sign = 1.0 if cls is Definiteness.PSD else -1.0
    cd = congruence(inst, tol)
    scale = inst.scale()
    if cd.T1.shape[1]:
        # (NS2) and (NS3) together force W11 ≻ 0; a (near-)singular W11 means
        # a kernel direction with xᵀMx ≈ 0 that is not in ker M.
        w11_min = lambda_min(cd.W11)
        if w11_min <= tol.psd_tol * scale:
            raise PreconditionViolated(
                f"W11 is not positive definite (lambda_min = {w11_min:.3g}); (NS2)/(NS3) do not hold")
        S33 = cd.W33 - cd.W13.T @ pseudoinverse(cd.W11, tol) @ cd.W13
    else:
        S33 = cd.W33
    S33 = 0.5 * (S33 + S33.T)
    v33_min = lambda_min(sign * cd.V33)
    if not v33_min > 0:
        raise PreconditionViolated("restriction of N to the complement of its kernel is singular")
    margin = tol.strict_margin * (1.0 + norm2(S33))
    need = max(-lambda_min(S33), 0.0)
    alpha = (need + margin) / v33_min
    for _ in range(8):
        lam = lambda_min(inst.pencil(sign * alpha))
        if lam >= -tol.psd_tol * inst.scale(alpha):
            return AlphaCertificate(sign * alpha, cd, lam)
        alpha *= 2.0
    raise PreconditionViolated(
        f"synthesized alpha fails the eigenvalue check (lambda_min = {lam:.3g}); "
        "instance is at a tolerance boundary or (NS2)/(NS3) do not hold")


# ---------------------------------------------------------------------------
# Decision


def decide_ns1(inst, tol: ToleranceProfile = DEFAULT_TOL, seed: int = 0,
               samples: int = WITNESS_BUDGET) -> FinslerVerdict:
    """Decide whether M + αN ⪰ 0 for some real α."""
    inst = _as_instance(inst)
    cls = definiteness_class(inst.N, tol)

    if cls is Definiteness.ZERO:
        psd = is_psd(inst.M, tol)
        ns2 = check_ns2(inst, tol, seed, samples)
        ns3 = check_ns3(inst, tol, seed) if psd else _ns3_when_infeasible(inst, tol, seed)
        return FinslerVerdict(bool(psd), 0.0 if psd else None, ns2, ns3,
                              Method.DEFINITE_CONSTRUCTIVE, cls.value, psd.lambda_min)

    if cls.semidefinite:
        ns2 = check_ns2(inst, tol, seed, samples)
        ns3 = _ns3_when_infeasible(inst, tol, seed)
        if ns2.holds and ns3.holds:
            try:
                cert = synthesize_alpha_definite(inst, tol)
            except PreconditionViolated as exc:
                # Both checks passed within tolerance but the restricted form is
                # numerically singular: a boundary instance, reported infeasible.
                return FinslerVerdict(False, None, ns2,
                                      ConditionStatus(Status.NOT_DECISIVE, None, str(exc)),
                                      Method.DEFINITE_CONSTRUCTIVE, cls.value)
            return FinslerVerdict(True, cert.alpha, ns2, ns3, Method.DEFINITE_CONSTRUCTIVE, cls.value,
                                  cert.lambda_min, {"congruence": cert.congruence})
        return FinslerVerdict(False, None, ns2, ns3, Method.DEFINITE_CONSTRUCTIVE, cls.value)

    ls = alpha_linesearch(inst, tol)
    feasible = ls.value >= -tol.psd_tol * inst.scale(ls.alpha_star)
    extras = {"linesearch": ls}
    if feasible:
        # Indefinite N: (NS1) gives (NS2), and (NS2) gives (NS3).
        ok = ConditionStatus.ok("implied by feasibility")
        return FinslerVerdict(True, ls.alpha_star, ok, ok, Method.INDEFINITE_LINESEARCH, cls.value,
                              lambda_min(inst.pencil(ls.alpha_star)), extras)
    ns2 = _ns2_indefinite(inst, tol, seed, samples, ls)
    ns3 = ConditionStatus(Status.UNCHECKED, None, "not needed for indefinite N")
    return FinslerVerdict(False, None, ns2, ns3, Method.INDEFINITE_LINESEARCH, cls.value, ls.value, extras)


def _ns3_when_infeasible(inst, tol, seed) -> ConditionStatus:
    status = check_ns3(inst, tol, seed)
    if status.status is Status.NOT_DECISIVE:
        return ConditionStatus(Status.UNCHECKED, status.witness, status.note)
    return status


# ---------------------------------------------------------------------------
# Strict variant


@dataclass(frozen=True)
class StrictResult:
    feasible: bool
    alpha: float | None
    lambda_min: float
    epsilon: float | None = None

    def __bool__(self):
        return self.feasible


def check_s1_strict(inst, tol: ToleranceProfile = DEFAULT_TOL) -> StrictResult:
    """M + αN ≻ 0 for some α, decided by maximizing λ_min(M + αN)."""
    inst = _as_instance(inst)
    lam0 = lambda_min(inst.M)
    margin = tol.strict_margin * inst.scale()
    if lam0 > margin:
        return StrictResult(True, 0.0, lam0)
    ls = linesearch_best(inst, tol)
    if not ls.value > margin:
        return StrictResult(False, None, ls.value)
    # No need for a margin beyond the instance scale; caps unbounded profiles.
    target = min(ls.value - 1e-6 * (1.0 + abs(ls.value)), inst.scale())
    alpha, lam = _shrink_alpha(inst, ls.alpha_star, target, tol)
    return StrictResult(lam > 0, alpha if lam > 0 else None, lam)


def _shrink_alpha(inst, alpha, target, tol, iters: int = 100):
    # The profile is concave, so {α : λ_min ≥ target} is an interval holding
    # alpha; bisect toward 0 for its end closest to the origin. Plateaus far
    # out (N semidefinite) otherwise hand back astronomically large α.
    lo, hi = 0.0, alpha
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if lambda_min_profile(inst, [mid], tol)[0] >= target:
            hi = mid
        else:
            lo = mid
        if abs(hi - lo) <= 1e-12 * (1.0 + abs(hi)):
            break
    return hi, lambda_min(inst.pencil(hi))


def check_s2_strict(inst, tol: ToleranceProfile = DEFAULT_TOL) -> StrictResult:
    """xᵀMx > 0 on {x ≠ 0 : xᵀNx = 0}, via the equivalence with the strict LMI.

    For sign-semidefinite N also reports ε = min over unit x in ker N of
    xᵀMx (+inf when the kernel is trivial).
    """
    inst = _as_instance(inst)
    res = check_s1_strict(inst, tol)
    cls = definiteness_class(inst.N, tol)
    eps = None
    if cls.semidefinite:
        B = _restricted_kernel(inst, cls, tol)
        eps = lambda_min(B.T @ inst.M @ B) if B.shape[1] else math.inf
    return StrictResult(res.feasible, res.alpha, res.lambda_min, eps)


# ---------------------------------------------------------------------------
# Cross-term witness (indefinite N, (NS3) violator → (NS2) violator)


def construct_cross_witness(inst, x, tol: ToleranceProfile = DEFAULT_TOL, seed: int = 0) -> Witness:
    """Turn a vector x ∈ ker N with xᵀMx = 0, Mx ≠ 0 into x' with x'ᵀNx' = 0, x'ᵀMx' < 0.

    z = Mx; find y on the null cone of N with yᵀz ≠ 0 (y = z, or z moved
    along an opposite-sign direction d to a root of (z + td)ᵀN(z + td));
    then g(t) = (ty + x)ᵀM(ty + x) = t²yᵀMy + 2t·yᵀMx is negative for a
    small t of sign opposite to yᵀMx.
    """
    inst = _as_instance(inst)
    M, N = inst.M, inst.N
    if definiteness_class(N, tol) is not Definiteness.INDEFINITE:
        raise PreconditionViolated("N must be indefinite")
    x = np.asarray(x, dtype=float).ravel()
    if x.shape != (inst.n,) or not np.any(x):
        raise InvalidInput("x must be a nonzero vector of length n")
    x = x / np.linalg.norm(x)
    scale = 1.0 + max(norm2(M), norm2(N))
    z = M @ x
    if (np.linalg.norm(N @ x) > tol.zero_tol * scale or abs(x @ z) > tol.zero_tol * scale
            or np.linalg.norm(z) <= tol.psd_tol):
        raise PreconditionViolated("x is not an (NS3) violator: need Nx = 0, xᵀMx = 0, Mx ≠ 0")

    rng = np.random.default_rng(seed)
    zNz = z @ N @ z
    if abs(zNz) <= tol.zero_tol * scale:
        candidates = [z]
    else:
        candidates = _cone_points_through(z, N, np.sign(zNz), rng)
    for y in candidates:
        yz = y @ z  # equals yᵀMx
        if abs(yz) <= tol.zero_tol * scale:
            continue
        yMy = y @ M @ y
        t = -math.copysign(min(1.0, abs(yz) / (1.0 + abs(yMy))), yz)
        xp = t * y + x
        w = Witness.build(M, N, xp, WitnessRole.CROSS_TERM_VIOLATOR)
        if w.verify(M, N, tol):
            return w
    raise WitnessSearchFailed("no cone direction produced a verified cross-term witness")


def _cone_points_through(z, N, sign, rng):
    for d in _opposite_directions(N, sign, rng):
        roots = _cone_roots(z, d, N)
        if roots is None:
            continue
        t_plus, t_minus = roots
        # t₊ when dᵀz ≥ 0, t₋ otherwise: keeps yᵀz ≥ ‖z‖²; the other root is the fallback.
        first, second = (t_plus, t_minus) if d @ z >= 0 else (t_minus, t_plus)
        yield z + first * d
        yield z + second * d

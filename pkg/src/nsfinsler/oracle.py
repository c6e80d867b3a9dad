"""Independent verification machinery.

* :func:`alpha_linesearch` maximizes the concave map α ↦ λ_min(M + αN) by
  bracket doubling followed by golden-section refinement.
* :class:`NullCone` samples unit vectors with xᵀNx = 0 for brute-force checks
  of the non-strict S-condition.
* ``gen_*`` functions draw seeded instances with known ground truth.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import BudgetExhausted, InvalidInput
from .linalg import DEFAULT_TOL, Definiteness, ToleranceProfile, kernel_basis
from .models import FinslerInstance, Witness, WitnessRole

H_MAX = 1e12
GOLDEN_REL_TOL = 1e-10


@dataclass(frozen=True)
class LineSearchResult:
    alpha_star: float
    value: float
    bracket: tuple
    iterations: int
    exhausted: bool = False


def pencil_data(inst: FinslerInstance, tol: ToleranceProfile = DEFAULT_TOL):
    """Arrays handed to the λ_min kernels: M, N and N's cleaned eigen-split."""
    M = kernels.as_f64(inst.M)
    N = kernels.as_f64(inst.N)
    lam, U = np.linalg.eigh(N)
    peak = np.max(np.abs(lam))
    lam = np.where(np.abs(lam) <= max(inst.n, 1) * tol.rank_tol * peak, 0.0, lam)
    return M, N, kernels.as_f64(lam), kernels.as_f64(U)


def lambda_min_profile(inst: FinslerInstance, alphas, tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    """λ_min(M + αN) for each α, evaluated by the active kernel backend."""
    M, N, lam, U = pencil_data(inst, tol)
    return kernels.backend.lam_min_many(M, N, lam, U, kernels.as_f64(np.atleast_1d(alphas)))


def alpha_linesearch(inst: FinslerInstance, tol: ToleranceProfile = DEFAULT_TOL,
                     h_max: float = H_MAX, maxiter: int = 500) -> LineSearchResult:
    """Maximize λ_min(M + αN) over α.

    Raises :class:`BudgetExhausted` (carrying the best point seen) when the
    bracket reaches ``h_max`` while the profile is still increasing, which
    happens when the supremum is approached as |α| → ∞.
    """
    be = kernels.backend
    M, N, lam, U = pencil_data(inst, tol)
    alphas, vals, exhausted = be.bracket(M, N, lam, U, float(h_max))
    order = np.argsort(alphas)
    alphas, vals = alphas[order], vals[order]
    top = np.max(vals)
    ties = np.flatnonzero(vals == top)
    k = int(ties[np.argmin(np.abs(alphas[ties]))])
    if exhausted:
        best = LineSearchResult(float(alphas[k]), float(vals[k]),
                                (float(alphas[0]), float(alphas[-1])), len(alphas), True)
        raise BudgetExhausted(
            f"bracket reached |alpha| = {alphas[-1]:.3g} without turning; "
            f"best value {vals[k]:.6g} at alpha = {alphas[k]:.6g}", best)
    lo = float(alphas[max(k - 1, 0)])
    hi = float(alphas[min(k + 1, len(alphas) - 1)])
    a_star, f_star, lo, hi, iters = be.golden(M, N, lam, U, lo, hi, float(alphas[k]), float(vals[k]),
                                              GOLDEN_REL_TOL, maxiter)
    return LineSearchResult(float(a_star), float(f_star), (float(lo), float(hi)), len(alphas) + int(iters))


def linesearch_best(inst: FinslerInstance, tol: ToleranceProfile = DEFAULT_TOL,
                    h_max: float = H_MAX) -> LineSearchResult:
    """Like :func:`alpha_linesearch` but returns the best-so-far on budget exhaustion."""
    try:
        return alpha_linesearch(inst, tol, h_max)
    except BudgetExhausted as exc:
        return exc.result


def oracle_feasible(inst: FinslerInstance, tol: ToleranceProfile = DEFAULT_TOL) -> tuple[bool, LineSearchResult]:
    """Dispatch-free feasibility verdict from the line search alone.

    A bracketed maximum is accepted at ``-psd_tol·(1 + ‖M‖)``. When the bracket
    never turned the supremum lies at infinity and the scale is meaningless,
    so the best value itself must be nonnegative.
    """
    res = linesearch_best(inst, tol)
    if res.exhausted:
        return bool(res.value >= 0.0), res
    # The kernel evaluates λ_min through N's eigen-split, so its error does
    # not grow with |α|; a plateau far out must not buy a looser threshold.
    return bool(res.value >= -tol.psd_tol * inst.scale(0.0)), res


class NullCone:
    """Parametrization of {x : xᵀNx = 0} through N's eigenspaces.

    A cone point is ``p + q + k`` with p in the positive eigenspace scaled to
    pᵀNp = 1, q in the negative eigenspace scaled to qᵀNq = -1, and k any
    kernel vector. For semidefinite N the cone is the kernel itself.
    """

    def __init__(self, N, tol: ToleranceProfile = DEFAULT_TOL):
        N = np.asarray(N, dtype=float)
        w, U = np.linalg.eigh(N)
        thr = tol.psd_tol * (1.0 + np.max(np.abs(w)))
        self.n = N.shape[0]
        self.pos, self.pos_val = U[:, w > thr], w[w > thr]
        self.neg, self.neg_val = U[:, w < -thr], -w[w < -thr]
        self.ker = U[:, np.abs(w) <= thr]
        self.mixed = self.pos.shape[1] > 0 and self.neg.shape[1] > 0

    @property
    def trivial(self) -> bool:
        return not self.mixed and self.ker.shape[1] == 0

    def points(self, a, b, c) -> np.ndarray:
        """Rows of cone points from coefficient rows (a, b, c)."""
        X = np.asarray(c, dtype=float) @ self.ker.T if self.ker.shape[1] else np.zeros((len(a), self.n))
        if self.mixed:
            a = np.asarray(a, dtype=float)
            b = np.asarray(b, dtype=float)
            sa = np.sqrt(np.einsum("ij,j,ij->i", a, self.pos_val, a))
            sb = np.sqrt(np.einsum("ij,j,ij->i", b, self.neg_val, b))
            sa[sa == 0] = 1.0
            sb[sb == 0] = 1.0
            X = X + (a / sa[:, None]) @ self.pos.T + (b / sb[:, None]) @ self.neg.T
        return X

    def draw(self, rng: np.random.Generator, count: int):
        p, q, k = self.pos.shape[1], self.neg.shape[1], self.ker.shape[1]
        a = rng.standard_normal((count, p))
        b = rng.standard_normal((count, q))
        c = rng.standard_normal((count, k))
        if self.mixed and k:
            mag = 10.0 ** rng.uniform(-3.0, 1.0, size=count)
            mag[rng.random(count) < 0.25] = 0.0
            c = c * mag[:, None]
        return a, b, c

    def structured(self, M) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Deterministic candidates: balanced eigenpair mixes and the best kernel direction."""
        p, q, k = self.pos.shape[1], self.neg.shape[1], self.ker.shape[1]
        rows = []
        if self.mixed:
            for i in range(p):
                for j in range(q):
                    for sign in (1.0, -1.0):
                        a = np.zeros(p)
                        b = np.zeros(q)
                        a[i] = 1.0
                        b[j] = sign
                        rows.append((a, b, np.zeros(k)))
        if k:
            G = self.ker.T @ M @ self.ker
            _, V = np.linalg.eigh(0.5 * (G + G.T))
            rows.append((np.zeros(p), np.zeros(q), V[:, 0]))
        if not rows:
            return np.zeros((0, p)), np.zeros((0, q)), np.zeros((0, k))
        a, b, c = (np.array([r[i] for r in rows]).reshape(len(rows), -1) for i in range(3))
        return a, b, c


@dataclass(frozen=True)
class ConeSearch:
    witness: Witness | None
    best_value: float
    evaluated: int
    x_best: np.ndarray | None = field(default=None, repr=False)


def cone_search(M, N, samples: int = 10_000, seed: int = 0, tol: ToleranceProfile = DEFAULT_TOL,
                refine: bool = True) -> ConeSearch:
    """Minimize xᵀMx/xᵀx over sampled null-cone points of N."""
    M = kernels.as_f64(M)
    N = np.asarray(N, dtype=float)
    cone = NullCone(N, tol)
    if cone.trivial or samples <= 0:
        return ConeSearch(None, float("inf"), 0)
    rng = np.random.default_rng(seed)
    ratios = kernels.backend.quadratic_ratios
    budget_random = samples if not refine else max(1, int(0.8 * samples))
    sa, sb, sc = cone.structured(M)
    ra, rb, rc = cone.draw(rng, budget_random)
    a, b, c = np.vstack([sa, ra]), np.vstack([sb, rb]), np.vstack([sc, rc])
    vals = ratios(M, kernels.as_f64(cone.points(a, b, c)))
    i = int(np.argmin(vals))
    best_val, coef = float(vals[i]), (a[i], b[i], c[i])
    used = len(vals)
    if refine:
        step, batch = 0.5, 32
        while used + batch <= samples + len(sa):
            da = coef[0] + step * rng.standard_normal((batch, a.shape[1]))
            db = coef[1] + step * rng.standard_normal((batch, b.shape[1]))
            dc = coef[2] + step * rng.standard_normal((batch, c.shape[1]))
            v = ratios(M, kernels.as_f64(cone.points(da, db, dc)))
            used += batch
            j = int(np.argmin(v))
            if v[j] < best_val:
                best_val, coef = float(v[j]), (da[j], db[j], dc[j])
            else:
                step *= 0.7
                if step < 1e-6:
                    break
    x = cone.points(coef[0][None], coef[1][None], coef[2][None])[0]
    if not np.any(x):
        return ConeSearch(None, best_val, used)
    x = x / np.linalg.norm(x)
    witness = None
    if best_val < -tol.psd_tol:
        cand = Witness.build(M, N, x, WitnessRole.NS2_VIOLATOR)
        if cand.verify(M, N, tol):
            witness = cand
    return ConeSearch(witness, best_val, used, x)


def ns2_sphere_oracle(inst: FinslerInstance, samples: int = 1000, seed: int = 0,
                      tol: ToleranceProfile = DEFAULT_TOL) -> Witness | None:
    """Brute-force search for x with xᵀNx = 0 and xᵀMx < 0.

    Returns the violating witness, or None when nothing was found (which is
    not a proof that none exists).
    """
    return cone_search(inst.M, inst.N, samples, seed, tol).witness


# ---------------------------------------------------------------------------
# Generators


@dataclass(frozen=True)
class GeneratedInstance:
    inst: FinslerInstance
    feasible: bool | None
    alpha_true: float | None
    reason: str | None
    seed: int
    n_class: str
    planted: np.ndarray | None = field(default=None, repr=False)

    def ground_truth(self) -> dict:
        if self.feasible is None:
            return {"status": "unknown"}
        if self.feasible:
            return {"status": "feasible", "alpha_true": self.alpha_true}
        return {"status": "infeasible", "reason": self.reason}


def as_class(n_class) -> Definiteness:
    if isinstance(n_class, Definiteness):
        return n_class
    try:
        return Definiteness(str(n_class).lower())
    except ValueError:
        raise InvalidInput(f"unknown definiteness class {n_class!r}") from None


def random_orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def draw_N(rng: np.random.Generator, n: int, n_class) -> np.ndarray:
    cls = as_class(n_class)
    if cls is Definiteness.ZERO:
        return np.zeros((n, n))
    if cls in (Definiteness.PSD, Definiteness.NSD):
        r = int(rng.integers(1, n + 1))
        R = rng.standard_normal((r, n))
        N = R.T @ R
        return N if cls is Definiteness.PSD else -N
    if n < 2:
        raise InvalidInput("an indefinite matrix needs n >= 2")
    p = int(rng.integers(1, n))
    q = int(rng.integers(1, n - p + 1))
    d = np.zeros(n)
    d[:p] = rng.uniform(0.5, 3.0, p)
    d[p:p + q] = -rng.uniform(0.5, 3.0, q)
    Q = random_orthogonal(rng, n)
    return (Q * d) @ Q.T


def _draw_alpha(rng, cls: Definiteness) -> float:
    if cls is Definiteness.PSD:
        return float(rng.uniform(0.5, 3.0))
    if cls is Definiteness.NSD:
        return float(-rng.uniform(0.5, 3.0))
    if cls is Definiteness.INDEFINITE:
        return float(rng.uniform(-3.0, 3.0))
    return 0.0


def _sym(A):
    return 0.5 * (A + A.T)


def feasible_from_parts(N, alpha_true: float, P) -> FinslerInstance:
    """M = P - alpha_true·N, so that M + alpha_true·N = P ⪰ 0."""
    N = np.asarray(N, dtype=float)
    return FinslerInstance(_sym(np.asarray(P, dtype=float) - alpha_true * N), N)


def gen_feasible_instance(n: int, seed: int, n_class) -> GeneratedInstance:
    if n < 1:
        raise InvalidInput("n must be >= 1")
    cls = as_class(n_class)
    rng = np.random.default_rng(seed)
    N = draw_N(rng, n, cls)
    alpha = _draw_alpha(rng, cls)
    k = int(rng.integers(1, n + 3))
    R = rng.standard_normal((k, n))
    inst = feasible_from_parts(N, alpha, R.T @ R)
    return GeneratedInstance(inst, True, alpha, None, seed, cls.value)


def gen_strict_instance(n: int, seed: int, n_class, min_eig: float = 0.1) -> GeneratedInstance:
    """M = S - αN with λ_min(S) ≥ ``min_eig``: strictly feasible by construction."""
    cls = as_class(n_class)
    rng = np.random.default_rng(seed)
    N = draw_N(rng, n, cls)
    alpha = _draw_alpha(rng, cls)
    R = rng.standard_normal((n, n))
    S = R.T @ R + (min_eig + rng.uniform(0.0, 0.5)) * np.eye(n)
    inst = feasible_from_parts(N, alpha, S)
    return GeneratedInstance(inst, True, alpha, None, seed, cls.value)


def gen_random_instance(n: int, seed: int, n_class) -> GeneratedInstance:
    """Gaussian symmetric M with an N of the requested class; ground truth unknown."""
    cls = as_class(n_class)
    rng = np.random.default_rng(seed)
    N = draw_N(rng, n, cls)
    A = rng.standard_normal((n, n))
    return GeneratedInstance(FinslerInstance(_sym(A), N), None, None, None, seed, cls.value)


def gen_ns3_violating_instance(n: int, seed: int, n_class, x=None) -> GeneratedInstance:
    """Instance with a planted x ∈ ker N, xᵀMx = 0, Mx ≠ 0 (so infeasible).

    For the indefinite class the kernel of N is exactly span{x}.
    """
    if isinstance(n_class, str) and n_class.lower() in ("pd", "nd"):
        raise InvalidInput("a definite N has a trivial kernel; no violator can be planted")
    cls = as_class(n_class)
    if n < 2:
        raise InvalidInput("n must be >= 2")
    if cls is Definiteness.INDEFINITE and n < 3:
        raise InvalidInput("an indefinite N with a kernel needs n >= 3")
    rng = np.random.default_rng(seed)
    Q = random_orthogonal(rng, n)
    if x is not None:
        x = np.asarray(x, dtype=float) / np.linalg.norm(x)
        basis = kernel_basis(x[None, :])
        Q = np.column_stack([x, basis @ random_orthogonal(rng, n - 1)])
    x, w, rest = Q[:, 0], Q[:, 1], Q[:, 1:]
    m = n - 1
    if cls is Definiteness.ZERO:
        d = np.zeros(m)
    elif cls is Definiteness.INDEFINITE:
        d = rng.uniform(0.5, 3.0, m) * rng.choice([-1.0, 1.0], m)
        d[0], d[1] = abs(d[0]), -abs(d[1])
        rng.shuffle(d)
    else:
        d = rng.uniform(0.5, 3.0, m) * (rng.random(m) < 0.7)
        if not np.any(d):
            d[0] = 1.0
        if cls is Definiteness.NSD:
            d = -d
    N = (rest * d) @ rest.T
    c = rng.uniform(0.5, 2.0) * rng.choice([-1.0, 1.0])
    S = _sym(rng.standard_normal((m, m)))
    M = c * (np.outer(x, w) + np.outer(w, x)) + rest @ S @ rest.T
    inst = FinslerInstance(_sym(M), _sym(N))
    return GeneratedInstance(inst, False, None, "ns3", seed, cls.value, planted=x)

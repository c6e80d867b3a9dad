"""Hot numeric kernels with a numba backend and a pure-numpy fallback.

The backend is chosen once at import: numba when it is importable and the
environment variable ``NSFINSLER_DISABLE_NUMBA`` is unset (or ``0``), numpy
otherwise. Both backends are always constructible so that tests and the
benchmark can compare them; :func:`use` switches the active one.

Sequential kernels (the line search) share one source and are compiled with
``numba.njit`` or left as plain Python. Batch kernels have a loop version for
numba and a vectorized version for numpy.
"""
from __future__ import annotations

import math
import os
from types import SimpleNamespace

import numpy as np

ENV_FLAG = "NSFINSLER_DISABLE_NUMBA"

_EPS = np.finfo(float).eps
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _make_sequential(jit):
    @jit
    def lam_min(M, N, lamN, UN, alpha):
        # Rayleigh quotient of the bottom eigenvector(s), with xᵀNx taken
        # through N's eigen-split so it stays accurate at very large |alpha|.
        n = M.shape[0]
        A = M + alpha * N
        w, V = np.linalg.eigh(A)
        noise = 1e3 * _EPS * (np.abs(w[0]) + np.abs(w[n - 1]))
        best = np.inf
        for j in range(n):
            if j > 0 and w[j] > w[0] + noise:
                break
            x = np.ascontiguousarray(V[:, j])
            y = UN.T @ x
            val = x @ (M @ x) + alpha * np.sum(lamN * y * y)
            if val < best:
                best = val
        return best

    @jit
    def lam_min_many(M, N, lamN, UN, alphas):
        out = np.empty(alphas.shape[0])
        for i in range(alphas.shape[0]):
            out[i] = lam_min(M, N, lamN, UN, alphas[i])
        return out

    @jit
    def bracket(M, N, lamN, UN, h_max):
        cap = 2 * (int(math.log2(max(h_max, 1.0))) + 3) + 1
        alphas = np.empty(cap)
        vals = np.empty(cap)
        alphas[0] = 0.0
        vals[0] = lam_min(M, N, lamN, UN, 0.0)
        best = vals[0]
        h = 1.0
        lo_v = lam_min(M, N, lamN, UN, -h)
        hi_v = lam_min(M, N, lamN, UN, h)
        alphas[1] = -h
        vals[1] = lo_v
        alphas[2] = h
        vals[2] = hi_v
        k = 3
        exhausted = False
        while True:
            if lo_v <= best and hi_v <= best:
                break
            best = max(best, lo_v, hi_v)
            if h >= h_max or k + 2 > cap:
                exhausted = True
                break
            h *= 2.0
            lo_v = lam_min(M, N, lamN, UN, -h)
            hi_v = lam_min(M, N, lamN, UN, h)
            alphas[k] = -h
            vals[k] = lo_v
            alphas[k + 1] = h
            vals[k + 1] = hi_v
            k += 2
        return alphas[:k].copy(), vals[:k].copy(), exhausted

    @jit
    def golden(M, N, lamN, UN, lo, hi, c, fc, rel_tol, maxiter):
        best_a = c
        best_f = fc
        x1 = hi - _GOLDEN * (hi - lo)
        x2 = lo + _GOLDEN * (hi - lo)
        f1 = lam_min(M, N, lamN, UN, x1)
        f2 = lam_min(M, N, lamN, UN, x2)
        it = 0
        while it < maxiter and hi - lo > rel_tol * (1.0 + abs(0.5 * (lo + hi))):
            if f1 > best_f:
                best_a = x1
                best_f = f1
            if f2 > best_f:
                best_a = x2
                best_f = f2
            if f1 >= f2:
                hi = x2
                x2 = x1
                f2 = f1
                x1 = hi - _GOLDEN * (hi - lo)
                f1 = lam_min(M, N, lamN, UN, x1)
            else:
                lo = x1
                x1 = x2
                f1 = f2
                x2 = lo + _GOLDEN * (hi - lo)
                f2 = lam_min(M, N, lamN, UN, x2)
            it += 1
        if f1 > best_f:
            best_a = x1
            best_f = f1
        if f2 > best_f:
            best_a = x2
            best_f = f2
        f_lo = lam_min(M, N, lamN, UN, lo)
        f_hi = lam_min(M, N, lamN, UN, hi)
        if f_lo > best_f:
            best_a = lo
            best_f = f_lo
        if f_hi > best_f:
            best_a = hi
            best_f = f_hi
        return best_a, best_f, lo, hi, it

    return lam_min, lam_min_many, bracket, golden


def _quadratic_ratios_loop(M, X):
    s, n = X.shape
    out = np.empty(s)
    for i in range(s):
        num = 0.0
        den = 0.0
        for a in range(n):
            xa = X[i, a]
            den += xa * xa
            acc = 0.0
            for b in range(n):
                acc += M[a, b] * X[i, b]
            num += xa * acc
        out[i] = num / den if den > 0.0 else np.inf
    return out


def _quadratic_ratios_vec(M, X):
    num = np.einsum("ij,jk,ik->i", X, M, X)
    den = np.einsum("ij,ij->i", X, X)
    out = np.full(X.shape[0], np.inf)
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out


def _family_min_eigs_loop(M, Z0, K, thetas):
    # λ_min([I; Z]ᵀ M [I; Z]) for Z = Z0 + K Θ_s, one Θ per sample.
    n = Z0.shape[1]
    m = Z0.shape[0]
    s = thetas.shape[0]
    out = np.empty(s)
    F = np.zeros((n + m, n))
    for i in range(n):
        F[i, i] = 1.0
    for t in range(s):
        Z = Z0 + K @ np.ascontiguousarray(thetas[t])
        F[n:, :] = Z
        form = np.ascontiguousarray(F.T) @ (M @ F)
        form = 0.5 * (form + form.T)
        out[t] = np.linalg.eigvalsh(form)[0]
    return out


def _family_min_eigs_vec(M, Z0, K, thetas):
    n = Z0.shape[1]
    M11 = M[:n, :n]
    M12 = M[:n, n:]
    M22 = M[n:, n:]
    Z = Z0[None, :, :] + np.einsum("mk,skn->smn", K, thetas)
    cross = M12 @ Z
    form = M11 + cross + np.swapaxes(cross, 1, 2) + np.swapaxes(Z, 1, 2) @ M22 @ Z
    form = 0.5 * (form + np.swapaxes(form, 1, 2))
    return np.linalg.eigvalsh(form)[:, 0]


def _identity(f):
    return f


def _build_numpy():
    lam_min, lam_min_many, bracket, golden = _make_sequential(_identity)
    return SimpleNamespace(
        name="numpy",
        lam_min=lam_min,
        lam_min_many=lam_min_many,
        bracket=bracket,
        golden=golden,
        quadratic_ratios=_quadratic_ratios_vec,
        family_min_eigs=_family_min_eigs_vec,
    )


def _build_numba():
    try:
        import numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        return None
    jit = numba.njit(cache=True)
    lam_min, lam_min_many, bracket, golden = _make_sequential(jit)
    return SimpleNamespace(
        name="numba",
        lam_min=lam_min,
        lam_min_many=lam_min_many,
        bracket=bracket,
        golden=golden,
        quadratic_ratios=jit(_quadratic_ratios_loop),
        family_min_eigs=jit(_family_min_eigs_loop),
    )


NUMPY = _build_numpy()
NUMBA = _build_numba()


def _env_disables_numba() -> bool:
    return os.environ.get(ENV_FLAG, "").strip().lower() not in ("", "0", "false", "no")


backend = NUMPY if (NUMBA is None or _env_disables_numba()) else NUMBA


def use(name: str):
    """Switch the active backend ("numba" or "numpy"); returns the previous name."""
    global backend
    previous = backend.name
    if name == "numpy":
        backend = NUMPY
    elif name == "numba":
        if NUMBA is None:
            raise RuntimeError("numba is not available")
        backend = NUMBA
    else:
        raise ValueError(f"unknown backend {name!r}")
    return previous


def get(name: str | None = None):
    if name is None:
        return backend
    return NUMBA if name == "numba" else NUMPY


def as_f64(A) -> np.ndarray:
    """Contiguous float64 copy suitable for either backend."""
    return np.ascontiguousarray(A, dtype=np.float64)

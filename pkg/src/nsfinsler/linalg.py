"""Dense symmetric linear algebra with an explicit tolerance policy.

Every numeric decision in the package (rank, semidefiniteness, "is this
residual zero") goes through a :class:`ToleranceProfile` so that results are
reproducible and thresholds are visible in reports.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput

# Type alias: a read-only, exactly symmetric float64 ndarray produced by
# :func:`as_symmetric`.
SymmetricMatrix = np.ndarray


@dataclass(frozen=True)
class ToleranceProfile:
    rank_tol: float = 1e-10
    psd_tol: float = 1e-9
    zero_tol: float = 1e-9
    strict_margin: float = 1e-8
    sym_tol: float = 1e-8

    def __post_init__(self):
        for name in ("rank_tol", "psd_tol", "zero_tol", "strict_margin", "sym_tol"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidInput(f"{name} must be a positive finite number, got {value!r}")
        if not self.strict_margin > self.psd_tol:
            raise InvalidInput("strict_margin must exceed psd_tol")

    def replace(self, **changes) -> "ToleranceProfile":
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields.update(changes)
        return ToleranceProfile(**fields)


DEFAULT_TOL = ToleranceProfile()


class Definiteness(str, enum.Enum):
    PSD = "psd"
    NSD = "nsd"
    INDEFINITE = "indefinite"
    ZERO = "zero"

    @property
    def semidefinite(self) -> bool:
        return self is not Definiteness.INDEFINITE


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        Q = self.eigenvectors
        return (Q * self.eigenvalues) @ Q.T


@dataclass(frozen=True)
class PsdCheck:
    holds: bool
    lambda_min: float

    def __bool__(self):
        return self.holds


@dataclass(frozen=True)
class SchurCheck:
    holds: bool
    failed: str | None = None  # "R-psd", "complement-psd" or "range"

    def __bool__(self):
        return self.holds


def _freeze(A: np.ndarray) -> np.ndarray:
    A.setflags(write=False)
    return A


def as_matrix(A, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float array (copy)."""
    try:
        arr = np.array(A, dtype=float, copy=True)
    except (TypeError, ValueError) as exc:
        raise InvalidInput(f"{name}: cannot convert to a real array ({exc})") from None
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise InvalidInput(f"{name}: expected a 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name}: entries must be finite")
    return arr


def as_symmetric(A, tol: ToleranceProfile = DEFAULT_TOL, name: str = "matrix") -> SymmetricMatrix:
    """Validate and symmetrize ``A``; the result is exactly symmetric and read-only."""
    arr = as_matrix(A, name)
    if arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise InvalidInput(f"{name}: expected a non-empty square array, got shape {arr.shape}")
    asym = np.max(np.abs(arr - arr.T))
    if asym > tol.sym_tol * (1.0 + np.max(np.abs(arr))):
        raise InvalidInput(f"{name}: not symmetric (max |A_ij - A_ji| = {asym:.3g})")
    return _freeze(0.5 * (arr + arr.T))


def norm2(A: np.ndarray) -> float:
    """Spectral norm; 0 for empty arrays."""
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0.0
    if A.ndim == 1:
        return float(np.linalg.norm(A))
    return float(np.linalg.norm(A, 2))


def spectral_decompose(A) -> SpectralDecomposition:
    arr = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidInput("spectral_decompose: non-finite entries")
    arr = 0.5 * (arr + arr.T)
    try:
        w, Q = np.linalg.eigh(arr)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise InvalidInput(f"spectral_decompose: {exc}") from None
    return SpectralDecomposition(_freeze(w), _freeze(Q))


def _svd_rank(s: np.ndarray, shape: tuple[int, int], tol: ToleranceProfile, ref: float = 0.0) -> int:
    top = max(s[0] if s.size else 0.0, ref)
    if s.size == 0 or top == 0.0:
        return 0
    threshold = top * max(shape) * tol.rank_tol
    return int(np.count_nonzero(s > threshold))


def numerical_rank(A, tol: ToleranceProfile = DEFAULT_TOL) -> int:
    arr = as_matrix(A)
    if arr.size == 0:
        return 0
    s = np.linalg.svd(arr, compute_uv=False)
    return _svd_rank(s, arr.shape, tol)


def kernel_basis(A, tol: ToleranceProfile = DEFAULT_TOL, ref: float = 0.0) -> np.ndarray:
    """Orthonormal basis of ker A as columns, shape (cols, cols - rank).

    An array with zero columns means the kernel is trivial. ``ref`` raises
    the magnitude the rank threshold is relative to; pass the norm of the
    parent matrix when A is a product such as M·B whose own norm may be
    pure roundoff.
    """
    arr = np.asarray(A, dtype=float)
    if arr.ndim != 2:
        raise InvalidInput(f"kernel_basis: expected a 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput("kernel_basis: entries must be finite")
    n = arr.shape[1]
    if arr.shape[0] == 0 or n == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(arr, full_matrices=True)
    r = _svd_rank(s, arr.shape, tol, ref)
    return vt[r:].T.copy()


def complement_basis(B: np.ndarray, n: int | None = None, tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of im B."""
    B = np.asarray(B, dtype=float)
    if n is None:
        n = B.shape[0]
    if B.size == 0:
        return np.eye(n)
    return kernel_basis(B.T, tol)


def pseudoinverse(A, tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse with the package-wide rank rule."""
    arr = as_matrix(A)
    if arr.size == 0:
        return np.zeros(arr.shape[::-1])
    u, s, vt = np.linalg.svd(arr, full_matrices=False)
    r = _svd_rank(s, arr.shape, tol)
    return (vt[:r].T / s[:r]) @ u[:, :r].T


def _eigvalsh(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return np.zeros(0)
    return np.linalg.eigvalsh(0.5 * (A + A.T))


def definiteness_class(A, tol: ToleranceProfile = DEFAULT_TOL) -> Definiteness:
    w = _eigvalsh(A)
    if w.size == 0:
        return Definiteness.ZERO
    threshold = tol.psd_tol * (1.0 + np.max(np.abs(w)))
    if np.all(np.abs(w) <= threshold):
        return Definiteness.ZERO
    if w[0] >= -threshold:
        return Definiteness.PSD
    if w[-1] <= threshold:
        return Definiteness.NSD
    return Definiteness.INDEFINITE


def is_psd(A, tol: ToleranceProfile = DEFAULT_TOL) -> PsdCheck:
    """``A ⪰ 0`` up to ``psd_tol·(1 + |λ_max|)``; an empty matrix is PSD."""
    w = _eigvalsh(A)
    if w.size == 0:
        return PsdCheck(True, float("inf"))
    lam_min = float(w[0])
    return PsdCheck(bool(lam_min >= -tol.psd_tol * (1.0 + abs(w[-1]))), lam_min)


def is_nsd(A, tol: ToleranceProfile = DEFAULT_TOL) -> PsdCheck:
    """``-A ⪰ 0``; the reported eigenvalue is λ_min(-A)."""
    return is_psd(-np.asarray(A, dtype=float), tol)


def lambda_min(A) -> float:
    w = _eigvalsh(A)
    return float(w[0]) if w.size else float("inf")


def lambda_max(A) -> float:
    w = _eigvalsh(A)
    return float(w[-1]) if w.size else float("-inf")


def schur_psd_check(Q, S, R, tol: ToleranceProfile = DEFAULT_TOL) -> SchurCheck:
    """Non-strict Schur complement test for ``[[Q, S], [Sᵀ, R]] ⪰ 0``.

    Holds iff R ⪰ 0, Q - S R⁺ Sᵀ ⪰ 0 and S (I - R R⁺) = 0. On failure the
    first failing condition, in that order, is reported.
    """
    Q = as_matrix(Q, "Q")
    R = as_matrix(R, "R")
    S = as_matrix(S, "S").reshape(Q.shape[0], R.shape[0])
    scale = 1.0 + max(np.max(np.abs(Q), initial=0.0), np.max(np.abs(S), initial=0.0),
                      np.max(np.abs(R), initial=0.0))
    if not is_psd(R, tol):
        return SchurCheck(False, "R-psd")
    R_pinv = pseudoinverse(R, tol)
    if not is_psd(Q - S @ R_pinv @ S.T, tol):
        return SchurCheck(False, "complement-psd")
    residual = S - S @ R @ R_pinv
    if norm2(residual) > tol.zero_tol * scale:
        return SchurCheck(False, "range")
    return SchurCheck(True)

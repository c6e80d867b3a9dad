"""Value types shared by the decision procedures."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput
from .linalg import DEFAULT_TOL, ToleranceProfile, as_symmetric, norm2


@dataclass(frozen=True)
class FinslerInstance:
    """A pair of symmetric matrices (M, N) of equal dimension."""

    M: np.ndarray
    N: np.ndarray

    def __post_init__(self):
        M = as_symmetric(self.M, name="M")
        N = as_symmetric(self.N, name="N")
        if M.shape != N.shape:
            raise InvalidInput(f"M and N differ in shape: {M.shape} vs {N.shape}")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "N", N)

    @property
    def n(self) -> int:
        return self.M.shape[0]

    def scale(self, alpha: float = 0.0) -> float:
        return 1.0 + norm2(self.M) + abs(alpha) * norm2(self.N)

    def pencil(self, alpha: float) -> np.ndarray:
        return self.M + alpha * self.N


class WitnessRole(str, enum.Enum):
    NS2_VIOLATOR = "ns2-violator"
    NS3_VIOLATOR = "ns3-violator"
    CROSS_TERM_VIOLATOR = "cross-term-violator"


@dataclass(frozen=True)
class Witness:
    x: np.ndarray
    role: WitnessRole
    residuals: dict

    @classmethod
    def build(cls, M, N, x, role: WitnessRole) -> "Witness":
        x = np.asarray(x, dtype=float).ravel()
        x = x / np.linalg.norm(x)
        Mx = M @ x
        Nx = N @ x
        residuals = {
            "xNx": float(x @ Nx),
            "xMx": float(x @ Mx),
            "norm_Nx": float(np.linalg.norm(Nx)),
            "norm_Mx": float(np.linalg.norm(Mx)),
        }
        x.setflags(write=False)
        return cls(x, WitnessRole(role), residuals)

    def verify(self, M, N, tol: ToleranceProfile = DEFAULT_TOL) -> bool:
        """Recompute the residuals from scratch and test the role's bounds.

        Zero tests are scaled by ``1 + max(‖M‖, ‖N‖)``; the sign tests on
        xᵀMx use the absolute ``psd_tol``.
        """
        M = np.asarray(M, dtype=float)
        N = np.asarray(N, dtype=float)
        x = np.asarray(self.x, dtype=float)
        nrm = np.linalg.norm(x)
        if not np.isfinite(nrm) or abs(nrm - 1.0) > 1e-8:
            return False
        scale = 1.0 + max(norm2(M), norm2(N))
        zero = tol.zero_tol * scale
        xMx = x @ M @ x
        if self.role is WitnessRole.NS3_VIOLATOR:
            return (np.linalg.norm(N @ x) <= zero and abs(xMx) <= zero
                    and np.linalg.norm(M @ x) > tol.psd_tol)
        # NS2 and cross-term violators: on the null cone, strictly negative
        return abs(x @ N @ x) <= zero and xMx < -tol.psd_tol


class Status(str, enum.Enum):
    HOLDS = "holds"
    VIOLATED = "violated"
    NOT_DECISIVE = "not-decisive"
    UNCHECKED = "unchecked"


WITNESS_SEARCH_FAILED = "witness-search-failed"


@dataclass(frozen=True)
class ConditionStatus:
    status: Status
    witness: Witness | None = None
    note: str | None = None

    @property
    def holds(self) -> bool:
        return self.status is Status.HOLDS

    @property
    def violated(self) -> bool:
        return self.status is Status.VIOLATED

    @classmethod
    def ok(cls, note=None):
        return cls(Status.HOLDS, None, note)


class Method(str, enum.Enum):
    DEFINITE_CONSTRUCTIVE = "definite-constructive"
    INDEFINITE_LINESEARCH = "indefinite-linesearch"


@dataclass(frozen=True)
class CongruenceData:
    T1: np.ndarray
    T2: np.ndarray
    T3: np.ndarray
    W11: np.ndarray
    W13: np.ndarray
    W33: np.ndarray
    V33: np.ndarray

    @property
    def T(self) -> np.ndarray:
        return np.hstack([self.T1, self.T2, self.T3])


@dataclass(frozen=True)
class FinslerVerdict:
    feasible: bool
    alpha: float | None
    ns2: ConditionStatus
    ns3: ConditionStatus
    method: Method
    n_class: str
    lambda_min: float | None = None
    extras: dict = field(default_factory=dict)

    def witnesses(self) -> list[Witness]:
        return [s.witness for s in (self.ns2, self.ns3) if s.witness is not None]

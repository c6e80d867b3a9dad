"""Matrix files and JSON reports.

Two input layouts are accepted:

* JSON: ``{"n": 2, "M": [...], "N": [...]}`` with row-major flat or nested
  arrays, ``"m"`` for blocked pairs (matrices are then (n+m)×(n+m)) and
  optional ``"Q"``, ``"U"``, ``"V"`` for projection instances.
* text: a first line holding ``n`` or ``n m``, then the entries of M followed
  by those of N, separated by any whitespace.
"""
from __future__ import annotations

import dataclasses
import enum
import json
import math
import sys
from pathlib import Path

import numpy as np

from .errors import InvalidInput
from .linalg import DEFAULT_TOL, ToleranceProfile, lambda_min, norm2
from .models import Witness, WitnessRole

MATRIX_KEYS = ("M", "N", "Q", "U", "V")


def _dim(value, key) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value) or value < 0:
        raise InvalidInput(f'"{key}" must be a non-negative integer')
    return int(value)


def _array(raw, rows: int | None, cols: int, key: str) -> np.ndarray:
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError):
        raise InvalidInput(f'"{key}": entries must be numbers') from None
    if arr.ndim == 2:
        if arr.shape[1] != cols or (rows is not None and arr.shape[0] != rows):
            raise InvalidInput(f'"{key}": expected {rows or "?"}x{cols}, got {arr.shape[0]}x{arr.shape[1]}')
    elif arr.ndim == 1:
        if cols == 0 or arr.size % cols:
            raise InvalidInput(f'"{key}": length {arr.size} is not a multiple of {cols}')
        if rows is not None and arr.size != rows * cols:
            raise InvalidInput(f'"{key}": expected {rows * cols} entries, got {arr.size}')
        arr = arr.reshape(-1, cols)
    else:
        raise InvalidInput(f'"{key}": expected a flat or nested array')
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f'"{key}": entries must be finite')
    return arr


def parse_json(text: str) -> dict:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"malformed JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise InvalidInput("top-level JSON value must be an object")
    if "n" not in obj:
        raise InvalidInput('missing "n"')
    n = _dim(obj["n"], "n")
    m = _dim(obj["m"], "m") if "m" in obj else 0
    size = n + m
    out: dict = {"n": n, "m": m if "m" in obj else None}
    for key in ("M", "N", "Q"):
        if key in obj:
            out[key] = _array(obj[key], size if key != "Q" else n, size if key != "Q" else n, key)
    for key in ("U", "V"):
        if key in obj:
            out[key] = _array(obj[key], None, n, key)
    for key in ("x", "ground_truth", "seed"):
        if key in obj:
            out[key] = obj[key]
    if "x" in out:
        out["x"] = _array(out["x"], 1, size, "x").ravel()
    return out


def parse_text(text: str) -> dict:
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise InvalidInput("empty input")
    try:
        dims = [int(tok) for tok in lines[0].split()]
        values = [float(tok) for ln in lines[1:] for tok in ln.split()]
    except ValueError as exc:
        raise InvalidInput(f"malformed text matrix file: {exc}") from None
    if len(dims) not in (1, 2) or min(dims) < 1:
        raise InvalidInput("first line must hold n or n m (positive integers)")
    n, m = dims[0], (dims[1] if len(dims) == 2 else None)
    size = n + (m or 0)
    if len(values) != 2 * size * size:
        raise InvalidInput(f"expected {2 * size * size} numbers for M and N, got {len(values)}")
    arr = np.array(values)
    if not np.all(np.isfinite(arr)):
        raise InvalidInput("entries must be finite")
    half = size * size
    return {"n": n, "m": m, "M": arr[:half].reshape(size, size), "N": arr[half:].reshape(size, size)}


def _read(source) -> str:
    if str(source) == "-":
        return sys.stdin.read()
    try:
        return Path(source).read_text()
    except OSError as exc:
        raise InvalidInput(f"cannot read {source}: {exc.strerror}") from None


def load_report(source) -> dict:
    try:
        obj = json.loads(_read(source))
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"malformed report: {exc}") from None
    if not isinstance(obj, dict):
        raise InvalidInput("report must be a JSON object")
    return obj


def load_matrix_file(source: str | Path, fmt: str | None = None) -> dict:
    """Read a matrix file; ``source`` is a path or ``"-"`` for standard input."""
    text = _read(source)
    if fmt is None:
        fmt = "json" if text.lstrip().startswith("{") else "text"
    return parse_json(text) if fmt == "json" else parse_text(text)


def require(data: dict, *keys: str) -> None:
    missing = [k for k in keys if k not in data]
    if missing:
        raise InvalidInput(f"input lacks {', '.join(missing)}")


# ---------------------------------------------------------------------------
# Serialization


def to_jsonable(obj):
    """Plain-JSON view of numpy arrays, dataclasses and enums.

    Non-finite floats become the strings "inf", "-inf" and "nan".
    """
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()] if obj.ndim else to_jsonable(obj.item())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if dataclasses.is_dataclass(obj):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(report: dict) -> str:
    return json.dumps(to_jsonable(report), sort_keys=True, indent=2) + "\n"


def matrix_file(n: int, M, N, m: int | None = None, **extra) -> dict:
    out = {"n": n, "M": np.asarray(M), "N": np.asarray(N)}
    if m is not None:
        out["m"] = m
    out.update(extra)
    return out


def tolerances_dict(tol: ToleranceProfile) -> dict:
    return dataclasses.asdict(tol)


def witness_dict(w: Witness | None, M, N, tol: ToleranceProfile, N_override=None) -> dict | None:
    if w is None:
        return None
    d = {"role": w.role.value, "x": w.x, "residuals": w.residuals,
         "verified": w.verify(M, N, tol)}
    if N_override is not None:
        d["N"] = N_override
    return d


# ---------------------------------------------------------------------------
# Re-verification of emitted reports


def _floats(raw) -> np.ndarray:
    return np.asarray(raw, dtype=float)


def _collect_witnesses(node, found):
    if isinstance(node, dict):
        if "role" in node and "x" in node:
            found.append(node)
        for v in node.values():
            _collect_witnesses(v, found)
    elif isinstance(node, list):
        for v in node:
            _collect_witnesses(v, found)


def verify_report(report: dict, tol: ToleranceProfile = DEFAULT_TOL) -> list[tuple[str, bool]]:
    """Recheck every certificate and witness in a report from its raw numbers.

    Returns ``(label, ok)`` pairs; an empty list means nothing was checkable.
    """
    inst = report.get("instance") or {}
    checks: list[tuple[str, bool]] = []
    M = _floats(inst["M"]) if "M" in inst else None
    N = _floats(inst["N"]) if "N" in inst else None

    alpha = report.get("alpha")
    if report.get("feasible") and isinstance(alpha, (int, float)) and M is not None and N is not None:
        scale = 1.0 + norm2(M) + abs(alpha) * norm2(N)
        checks.append(("alpha", lambda_min(M + alpha * N) >= -1e-8 * scale))

    if report.get("X") is not None and "Q" in inst:
        Q, U, X = _floats(inst["Q"]), _floats(inst["U"]), _floats(report["X"])
        residual = Q + U.T @ X + X.T @ U
        scale = 1.0 + norm2(Q) + 2.0 * norm2(U.T @ X)
        checks.append(("X", lambda_min(residual) >= -tol.psd_tol * scale))

    if report.get("Z") is not None and M is not None:
        n = int(inst["n"])
        Z = _floats(report["Z"])
        F = np.vstack([np.eye(n), Z])
        zero = tol.zero_tol * (1.0 + norm2(N)) * (1.0 + norm2(Z) ** 2)
        checks.append(("Z", norm2(F.T @ N @ F) <= zero and lambda_min(F.T @ M @ F) < 0))

    found: list[dict] = []
    _collect_witnesses(report, found)
    for i, wd in enumerate(found):
        Mw = _floats(inst["Q"]) if "N" in wd and "Q" in inst else M
        Nw = _floats(wd["N"]) if "N" in wd else N
        if Mw is None or Nw is None:
            checks.append((f"witness[{i}]", False))
            continue
        w = Witness(_floats(wd["x"]), WitnessRole(wd["role"]), {})
        checks.append((f"witness[{i}]:{wd['role']}", w.verify(Mw, Nw, tol)))
    return checks

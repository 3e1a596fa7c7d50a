"""Dense finite-dimensional operator algebra.

Matrices are plain float ndarrays; truncation levels of interest are
small (tens of rows), so everything is dense and SVD-based.  The
generalized inverse is characterized by the four Penrose identities

    X M X = X,   M X M = M,   (M X)^T = M X,   (X M)^T = X M,

and ``check_penrose`` turns that characterization into a diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "LinOp",
    "PinvResult",
    "PenroseCheck",
    "pinv",
    "check_penrose",
    "operator_norm",
    "kernel_basis",
    "load_matrix_csv",
    "save_matrix_csv",
]

# Dense real matrix; an alias rather than a wrapper to keep call sites plain.
LinOp = np.ndarray


def _check_matrix(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(m, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-d, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class PinvResult:
    """Moore-Penrose pseudoinverse with its two orthogonal projectors.

    ``range_proj`` = M M^+ projects onto the range of M,
    ``corange_proj`` = M^+ M projects onto the range of M^T.
    """

    pinv: np.ndarray
    rank: int
    tol_used: float
    range_proj: np.ndarray
    corange_proj: np.ndarray
    singular_values: np.ndarray

    def __post_init__(self) -> None:
        for name in ("pinv", "range_proj", "corange_proj", "singular_values"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))


def pinv(m: LinOp, tol: float = 0.0) -> PinvResult:
    """Pseudoinverse via SVD, zeroing singular values at or below tol.

    tol = 0 selects the standard rank-revealing default
    eps * max(n_rows, n_cols) * sigma_max.
    """
    a = _check_matrix(m)
    if tol < 0:
        raise ValueError("tolerance must be nonnegative")
    u, s, vt = np.linalg.svd(a)
    smax = s[0] if s.size else 0.0
    tol_used = tol if tol > 0 else np.finfo(float).eps * max(a.shape) * smax
    rank = int(np.sum(s > tol_used))
    ur = u[:, :rank]
    vr = vt[:rank].T
    x = (vr / s[:rank]) @ ur.T if rank else np.zeros((a.shape[1], a.shape[0]))
    return PinvResult(
        pinv=x,
        rank=rank,
        tol_used=float(tol_used),
        range_proj=ur @ ur.T,
        corange_proj=vr @ vr.T,
        singular_values=s,
    )


@dataclass(frozen=True)
class PenroseCheck:
    """Residual norms of the four Penrose identities and a verdict."""

    xmx: float
    mxm: float
    mx_sym: float
    xm_sym: float
    tol: float

    @property
    def residuals(self) -> tuple[float, float, float, float]:
        return (self.xmx, self.mxm, self.mx_sym, self.xm_sym)

    @property
    def passed(self) -> bool:
        return all(r <= self.tol for r in self.residuals)


def check_penrose(m: LinOp, x: LinOp, tol: float) -> PenroseCheck:
    """Evaluate || XMX - X ||, || MXM - M ||, || (MX)^T - MX ||, || (XM)^T - XM ||."""
    a = _check_matrix(m, "m")
    b = _check_matrix(x, "x")
    if a.shape != b.T.shape:
        raise ValueError(f"shape mismatch: m is {a.shape}, x is {b.shape}")
    mx = a @ b
    xm = b @ a
    return PenroseCheck(
        xmx=float(np.linalg.norm(b @ mx - b, 2)),
        mxm=float(np.linalg.norm(mx @ a - a, 2)),
        mx_sym=float(np.linalg.norm(mx.T - mx, 2)),
        xm_sym=float(np.linalg.norm(xm.T - xm, 2)),
        tol=tol,
    )


def operator_norm(m: LinOp) -> float:
    """Spectral norm (largest singular value)."""
    a = _check_matrix(m)
    return float(np.linalg.norm(a, 2))


def kernel_basis(m: LinOp, tol: float = 0.0) -> np.ndarray:
    """Orthonormal columns spanning the null space of m.

    The column count is always n_cols - rank at the tolerance used.
    """
    a = _check_matrix(m)
    if tol < 0:
        raise ValueError("tolerance must be nonnegative")
    _, s, vt = np.linalg.svd(a)
    smax = s[0] if s.size else 0.0
    tol_used = tol if tol > 0 else np.finfo(float).eps * max(a.shape) * smax
    rank = int(np.sum(s > tol_used))
    # vt has min(n_rows, n_cols) rows; wide matrices need the full basis.
    if vt.shape[0] < a.shape[1]:
        _, _, vt = np.linalg.svd(a, full_matrices=True)
    return vt[rank:].T.copy()


def load_matrix_csv(path) -> np.ndarray:
    """Read a matrix from plain-text CSV with a "rows,cols" header line."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ValueError(f"{path}: empty matrix file")
    head = lines[0].split(",")
    if len(head) != 2:
        raise ValueError(f"{path}:1: header must be 'rows,cols'")
    try:
        rows, cols = int(head[0]), int(head[1])
    except ValueError as exc:
        raise ValueError(f"{path}:1: header must be 'rows,cols'") from exc
    if len(lines) - 1 != rows:
        raise ValueError(f"{path}: expected {rows} data rows, found {len(lines) - 1}")
    data = np.empty((rows, cols))
    for i, ln in enumerate(lines[1:], start=2):
        parts = ln.split(",")
        if len(parts) != cols:
            raise ValueError(f"{path}:{i}: expected {cols} entries, found {len(parts)}")
        try:
            data[i - 2] = [float(p) for p in parts]
        except ValueError as exc:
            raise ValueError(f"{path}:{i}: non-numeric entry") from exc
    return _check_matrix(data, f"{path}")


def save_matrix_csv(path, m: LinOp) -> None:
    """Write a matrix in the same header + row-major CSV format."""
    a = _check_matrix(m)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{a.shape[0]},{a.shape[1]}\n")
        for row in a:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")

"""Dense matrix helpers and rank-revealing numerics.

Matrices are plain 2-D ``float64`` numpy arrays. :func:`as_matrix` is the
single validation gate: it enforces two dimensions, positive shape and
finite entries, and returns a read-only array so values can be shared
between workers without copying.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from landscape_lab.errors import NumericOverflowError, PreconditionError, ShapeError

EPS = np.finfo(np.float64).eps

MAX_DET_DIM = 12


def as_matrix(a, *, name: str = "matrix") -> np.ndarray:
    m = np.array(a, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got ndim={m.ndim}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ShapeError(f"{name} must have positive shape, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise PreconditionError(f"{name} contains non-finite entries")
    m.flags.writeable = False
    return m


def default_rel_tol(a: np.ndarray) -> float:
    """Rank threshold ``max(rows, cols) * eps`` relative to the largest singular value."""
    return max(a.shape) * EPS


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a, name="a")
    b = as_matrix(b, name="b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return as_matrix(a @ b)


def singular_values(a) -> np.ndarray:
    """Singular values in descending order."""
    a = as_matrix(a)
    return np.linalg.svd(a, compute_uv=False)


def numerical_rank(a, rel_tol: float | None = None) -> int:
    a = as_matrix(a)
    if rel_tol is None:
        rel_tol = default_rel_tol(a)
    if rel_tol < 0:
        raise PreconditionError("rel_tol must be non-negative")
    s = singular_values(a)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))


def smallest_relative_singular(a, k: int | None = None) -> float:
    """``s[k-1] / s[0]`` with ``k = min(shape)`` by default; 0 for the zero matrix."""
    s = singular_values(a)
    k = len(s) if k is None else k
    if s[0] == 0.0:
        return 0.0
    return float(s[k - 1] / s[0])


def determinant(a) -> float:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"determinant needs a square matrix, got {a.shape}")
    if a.shape[0] > MAX_DET_DIM:
        raise PreconditionError(f"determinant limited to dimension <= {MAX_DET_DIM}")
    # LU on an exactly singular matrix may divide by a zero pivot; the result is still 0
    with np.errstate(divide="ignore"):
        return float(np.linalg.det(a))


def vandermonde_product(xs: Sequence[float]) -> float:
    """prod_{i<j} (x_j - x_i)."""
    out = 1.0
    for j in range(len(xs)):
        for i in range(j):
            out *= xs[j] - xs[i]
    return out


def scaled_vandermonde(xs: Sequence[float], coeffs: Sequence[float]) -> np.ndarray:
    """Row ``j`` holds ``coeffs[j] * x_k ** j`` over the nodes ``x_k``."""
    xs = [float(x) for x in xs]
    if len(xs) != len(coeffs):
        raise ShapeError("xs and coeffs must have the same length")
    if len(set(xs)) != len(xs):
        raise PreconditionError("nodes must be pairwise distinct")
    n = len(xs)
    powers = np.vander(np.asarray(xs), N=n, increasing=True).T
    return as_matrix(np.asarray(coeffs, dtype=np.float64)[:, None] * powers)


@dataclass(frozen=True)
class LeastSquaresSolution:
    w: np.ndarray
    residual: float
    rank: int
    full_column_rank: bool


def least_squares_right_solve(t, y, rel_tol: float | None = None) -> LeastSquaresSolution:
    """Minimum-norm ``W`` minimising ``||W t - y||_F``.

    Solves ``t.T @ W.T = y.T`` column-wise. The residual is always reported;
    when ``t`` has full column rank it is zero up to round-off.
    """
    t = as_matrix(t, name="t")
    y = as_matrix(y, name="y")
    if t.shape[1] != y.shape[1]:
        raise ShapeError(f"t has {t.shape[1]} columns but y has {y.shape[1]}")
    if rel_tol is None:
        rel_tol = default_rel_tol(t)
    rank = numerical_rank(t, rel_tol)
    if rank == 0:
        w = np.zeros((y.shape[0], t.shape[0]))
    else:
        with np.errstate(over="ignore", invalid="ignore"):
            wt, *_ = np.linalg.lstsq(t.T, y.T, rcond=rel_tol)
        w = wt.T
        bad = np.argwhere(~np.isfinite(w))
        if bad.size:
            # ||y|| / sigma_min beyond the float64 range
            raise NumericOverflowError(
                "least-squares solution overflows float64", tuple(int(i) for i in bad[0])
            )
    residual = float(np.linalg.norm(w @ t - y))
    return LeastSquaresSolution(
        w=as_matrix(w), residual=residual, rank=rank, full_column_rank=rank == t.shape[1]
    )

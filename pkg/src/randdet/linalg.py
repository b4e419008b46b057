"""Dense real matrix substrate.

Matrices and vectors are plain float64 :class:`numpy.ndarray` objects; the
``as_matrix``/``as_vector`` helpers enforce the shape and finiteness
invariants at the library boundary. Factorizations call LAPACK directly so
that pivot information is available to the caller.
"""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Iterable
from os import PathLike

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import lapack, solve_triangular

from .errors import DimensionError, DomainError, ParseError, SingularityError

Matrix = NDArray[np.float64]
Vector = NDArray[np.float64]

# |pivot| below this is treated as an exact zero by det().
PIVOT_UNDERFLOW = 1e-300
SYMMETRY_RTOL = 1e-10


def as_matrix(a: ArrayLike, name: str = "matrix") -> Matrix:
    m = np.array(a, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {m.shape}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionError(f"{name} must be non-empty, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError(f"{name} has non-finite entries")
    return m


def as_vector(v: ArrayLike, name: str = "vector") -> Vector:
    x = np.array(v, dtype=np.float64)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {x.shape}")
    if x.size < 1:
        raise DimensionError(f"{name} must be non-empty")
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{name} has non-finite entries")
    return x


def as_probabilities(p: ArrayLike, length: int, name: str = "p") -> Vector:
    x = as_vector(p, name)
    if x.size != length:
        raise DimensionError(f"{name} has length {x.size}, expected {length}")
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise DomainError(f"{name} entries must lie in [0, 1]")
    return x


def _require_square(a: np.ndarray, name: str = "matrix") -> None:
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")


def det(a: ArrayLike) -> float:
    """Determinant by LU factorization with partial pivoting.

    A pivot smaller than ``PIVOT_UNDERFLOW`` in magnitude makes the result
    exactly ``0.0``; singular input is not an error.
    """
    m = as_matrix(a)
    _require_square(m)
    lu, piv, info = lapack.dgetrf(m)
    if info < 0:  # pragma: no cover - LAPACK argument error
        raise RuntimeError(f"dgetrf illegal argument {-info}")
    diag = np.diag(lu)
    if info > 0 or np.any(np.abs(diag) < PIVOT_UNDERFLOW):
        return 0.0
    swaps = int(np.count_nonzero(piv != np.arange(piv.size)))
    value = float(np.prod(diag))
    return -value if swaps % 2 else value


def det_stack(stack: ArrayLike) -> Vector:
    """Determinants of a ``(..., n, n)`` stack, LU-based (LAPACK getrf)."""
    s = np.asarray(stack, dtype=np.float64)
    _require_square(s, "stack")
    return np.linalg.det(s)


def matmul(a: ArrayLike, b: ArrayLike) -> Matrix:
    A = as_matrix(a, "A")
    B = as_matrix(b, "B")
    if A.shape[1] != B.shape[0]:
        raise DimensionError(f"cannot multiply {A.shape} by {B.shape}")
    return A @ B


def check_symmetric(a: Matrix, name: str = "matrix") -> None:
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if float(np.max(np.abs(a - a.T))) > SYMMETRY_RTOL * scale:
        raise DomainError(f"{name} is not symmetric")


def cholesky(a: ArrayLike) -> Matrix:
    """Lower Cholesky factor; raises :class:`SingularityError` on a pivot <= 0."""
    m = as_matrix(a)
    _require_square(m)
    check_symmetric(m)
    c, info = lapack.dpotrf(m, lower=1, clean=1)
    if info > 0:
        raise SingularityError(
            f"matrix is not positive definite (pivot {info - 1} <= 0)", pivot=info - 1
        )
    if info < 0:  # pragma: no cover
        raise RuntimeError(f"dpotrf illegal argument {-info}")
    return c


def solve_spd(a: ArrayLike, b: ArrayLike) -> Vector:
    """Solve ``A x = b`` for symmetric positive definite ``A`` via Cholesky."""
    L = cholesky(a)
    rhs = np.array(b, dtype=np.float64)
    if rhs.shape[0] != L.shape[0]:
        raise DimensionError(f"rhs has {rhs.shape[0]} rows, expected {L.shape[0]}")
    y = solve_triangular(L, rhs, lower=True)
    return solve_triangular(L.T, y, lower=False)


def inv_spd(a: ArrayLike) -> Matrix:
    m = as_matrix(a)
    inv = solve_spd(m, np.eye(m.shape[0]))
    return 0.5 * (inv + inv.T)


def logdet_spd(a: ArrayLike) -> float:
    """``log det A`` via Cholesky, or ``-inf`` when A is not positive definite."""
    m = np.asarray(a, dtype=np.float64)
    c, info = lapack.dpotrf(m, lower=1, clean=1)
    if info != 0:
        return -math.inf
    return 2.0 * float(np.sum(np.log(np.diag(c))))


def fsum(values: Iterable[float]) -> float:
    """Compensated sum (exactly rounded, order independent)."""
    return math.fsum(values)


def parse_csv_matrix(text: str, source: str | None = None) -> Matrix:
    """Parse a headerless CSV matrix. Blank lines are skipped; ragged rows rejected."""
    rows: list[list[float]] = []
    width = None
    for lineno, record in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not record or all(not cell.strip() for cell in record):
            continue
        try:
            row = [float(cell) for cell in record]
        except ValueError as exc:
            raise ParseError(f"bad number ({exc})", source, lineno) from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(f"ragged row: {len(row)} fields, expected {width}", source, lineno)
        if not all(math.isfinite(x) for x in row):
            raise ParseError("non-finite entry", source, lineno)
        rows.append(row)
    if not rows:
        raise ParseError("no data rows", source)
    return np.array(rows, dtype=np.float64)


def read_csv_matrix(path: str | PathLike) -> Matrix:
    with open(path, newline="") as fh:
        return parse_csv_matrix(fh.read(), str(path))


def read_csv_vector(path: str | PathLike) -> Vector:
    """A vector file holds a single CSV row (a single column is also accepted)."""
    m = read_csv_matrix(path)
    if m.shape[0] != 1 and m.shape[1] != 1:
        raise ParseError(f"expected a single row or column, got shape {m.shape}", str(path))
    return m.ravel()

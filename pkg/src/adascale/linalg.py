"""Dense column-contiguous matrix types and the kernels built on them.

Every matrix stores its entries so that each column occupies a contiguous
address range; element (i, j) lives at flat offset ``j*rows + i``.  All
reductions run through a fixed pairwise tree whose shape depends only on
the vector length, which is what makes the parallel sweep engine bitwise
reproducible for any worker count.
"""

from dataclasses import dataclass

import numpy as np

from ._core import kernels
from .errors import DimensionMismatch, NotPositiveDefinite

# Pivot threshold factor, relative to the largest diagonal entry.
SPD_EPS_REL = 1e-12
# Symmetry check factor, relative to the largest magnitude entry.
SYM_TOL_REL = 1e-12


def as_vector(x, name: str = "vector") -> np.ndarray:
    v = np.ascontiguousarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatch(f"{name} must be one-dimensional")
    return v


@dataclass(eq=False)
class DenseMatrix:
    """Dense matrix with column-contiguous flat storage."""

    rows: int
    cols: int
    data: np.ndarray

    def __post_init__(self):
        if self.rows < 0 or self.cols < 0:
            raise DimensionMismatch("matrix dimensions must be nonnegative")
        self.data = np.ascontiguousarray(self.data, dtype=np.float64).ravel()
        if self.data.size != self.rows * self.cols:
            raise DimensionMismatch(
                f"data length {self.data.size} != rows*cols = {self.rows * self.cols}"
            )

    @classmethod
    def from_rows(cls, rows) -> "DenseMatrix":
        arr = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        return cls.from_array(arr)

    @classmethod
    def from_array(cls, arr) -> "DenseMatrix":
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 2:
            raise DimensionMismatch("expected a two-dimensional array")
        m, n = arr.shape
        return cls(m, n, np.asfortranarray(arr).ravel(order="F"))

    def as_2d(self) -> np.ndarray:
        """(rows, cols) view sharing the flat buffer; F-contiguous."""
        return self.data.reshape((self.rows, self.cols), order="F")

    def column(self, j: int) -> np.ndarray:
        """Contiguous view of column ``j``."""
        if not 0 <= j < self.cols:
            raise DimensionMismatch(f"column index {j} out of range")
        return self.data[j * self.rows : (j + 1) * self.rows]

    def element(self, i: int, j: int) -> float:
        return float(self.data[j * self.rows + i])

    def to_rows(self) -> list:
        return self.as_2d().tolist()

    def copy(self) -> "DenseMatrix":
        return DenseMatrix(self.rows, self.cols, self.data.copy())


@dataclass(eq=False)
class LowerTriangular:
    """Cholesky factor; column-contiguous with zeros above the diagonal."""

    dim: int
    data: np.ndarray

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float64).ravel()
        if self.data.size != self.dim * self.dim:
            raise DimensionMismatch("factor storage does not match its dimension")

    def as_2d(self) -> np.ndarray:
        return self.data.reshape((self.dim, self.dim), order="F")


def dot_tree(u, v) -> float:
    """Tree-reduced inner product with a length-fixed reduction shape."""
    u = as_vector(u, "u")
    v = as_vector(v, "v")
    if u.size != v.size:
        raise DimensionMismatch(f"dot_tree lengths differ: {u.size} vs {v.size}")
    if u.size == 0:
        raise DimensionMismatch("dot_tree requires length >= 1")
    return kernels.dot_tree(u, v)


def cholesky_factor(m: DenseMatrix) -> LowerTriangular:
    """Factor a symmetric positive definite matrix as L*L^T.

    Raises NotPositiveDefinite when a pivot falls at or below
    ``SPD_EPS_REL * max(diag)``; for Gram matrices A*A^T that signals rank
    deficiency of A.
    """
    if m.rows != m.cols:
        raise DimensionMismatch("cholesky_factor requires a square matrix")
    a = m.as_2d()
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if a.size and float(np.max(np.abs(a - a.T))) > SYM_TOL_REL * max(scale, 1.0):
        raise DimensionMismatch("cholesky_factor requires a symmetric matrix")
    low, fail = kernels.cholesky_factor(a, SPD_EPS_REL)
    if fail >= 0:
        raise NotPositiveDefinite(f"nonpositive pivot at column {fail}")
    return LowerTriangular(m.rows, np.asarray(low).ravel(order="F"))


def cholesky_solve(low: LowerTriangular, b) -> np.ndarray:
    """Solve (L*L^T) x = b."""
    b = as_vector(b, "b")
    if b.size != low.dim:
        raise DimensionMismatch(f"rhs length {b.size} != factor dim {low.dim}")
    x = kernels.cholesky_solve_many(low.as_2d(), b.reshape((-1, 1), order="F"))
    return np.ascontiguousarray(np.asarray(x).ravel(order="F"))


def cholesky_solve_many(low: LowerTriangular, b2) -> np.ndarray:
    """Solve (L*L^T) X = B for a block of right-hand-side columns."""
    b2 = np.asfortranarray(b2, dtype=np.float64)
    if b2.ndim != 2 or b2.shape[0] != low.dim:
        raise DimensionMismatch("rhs block does not match factor dimension")
    return np.asarray(kernels.cholesky_solve_many(low.as_2d(), b2))


def gram(a: DenseMatrix) -> DenseMatrix:
    """A*A^T, exactly symmetric by mirrored construction."""
    g = kernels.gram(a.as_2d())
    return DenseMatrix(a.rows, a.rows, np.asarray(g).ravel(order="F"))


def scaled_gram(a: DenseMatrix, d) -> DenseMatrix:
    """A*diag(d)*A^T for strictly positive d."""
    d = as_vector(d, "d")
    if d.size != a.cols:
        raise DimensionMismatch(f"scaling length {d.size} != cols {a.cols}")
    if d.size and float(np.min(d)) <= 0.0:
        raise ValueError("scaled_gram requires strictly positive scaling entries")
    g = kernels.scaled_gram(a.as_2d(), d)
    return DenseMatrix(a.rows, a.rows, np.asarray(g).ravel(order="F"))


def mat_vec(a: DenseMatrix, x) -> np.ndarray:
    """A @ x with tree-ordered inner sums."""
    x = as_vector(x, "x")
    if x.size != a.cols:
        raise DimensionMismatch(f"operand length {x.size} != cols {a.cols}")
    return np.asarray(kernels.mat_vec(a.as_2d(), x))


def mat_t_vec(a: DenseMatrix, y) -> np.ndarray:
    """A^T @ y with tree-ordered inner sums."""
    y = as_vector(y, "y")
    if y.size != a.rows:
        raise DimensionMismatch(f"operand length {y.size} != rows {a.rows}")
    return np.asarray(kernels.mat_t_vec(a.as_2d(), y))

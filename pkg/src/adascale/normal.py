"""Backends for the normal-equations system (A diag(d) A^T) w = b.

Two interchangeable routes:

* `solve_direct` factors A diag(d) A^T fresh with Cholesky.
* `solve_woodbury` treats A diag(d) A^T = A A^T + sum_l (d_l - 1) a_l a_l^T
  as a cascade of rank-one corrections of the constant A A^T.  The basis
  (Cholesky factor of A A^T and the solved block Y with columns
  (A A^T)^{-1} a_l) is computed once per problem; each solve then runs n
  cheap update steps, one per column of A.

The cascade works in an augmented workspace: the n basis columns plus the
evolving solution appended as column n+1, with a row of inner products
underneath and a scratch vector for the current rank-one factor.  Rank-one
factor entries are produced on the fly from A, so the correction matrix is
never materialized.  After step l the first l columns are frozen; later
steps never read them.
"""

from dataclasses import dataclass

import numpy as np

from ._core import kernels
from .errors import DimensionMismatch, SingularUpdate
from .linalg import (
    DenseMatrix,
    LowerTriangular,
    as_vector,
    cholesky_factor,
    cholesky_solve,
    cholesky_solve_many,
    gram,
    scaled_gram,
)


@dataclass(eq=False)
class WoodburyBasis:
    """Iteration-invariant precomputation shared by all cascade solves."""

    L0: LowerTriangular
    Y: DenseMatrix

    @property
    def m(self) -> int:
        return self.Y.rows

    @property
    def n(self) -> int:
        return self.Y.cols


@dataclass(eq=False)
class AugWorkspace:
    """Augmented storage block consumed destructively by the cascade.

    ``cols`` holds the n evolving basis columns with the solution column
    appended; ``inner`` is the inner-products row for the current step;
    ``v_scratch`` holds the transient rank-one factor.  Column k of
    ``cols`` is frozen once ``step`` reaches k+1.
    """

    cols: np.ndarray
    inner: np.ndarray
    v_scratch: np.ndarray
    step: int = 0

    @property
    def m(self) -> int:
        return self.cols.shape[0]

    @property
    def n(self) -> int:
        return self.cols.shape[1] - 1

    @property
    def x_column(self) -> np.ndarray:
        """View of the evolving solution column."""
        return self.cols[:, self.n]

    def copy(self) -> "AugWorkspace":
        return AugWorkspace(
            np.asfortranarray(self.cols.copy()),
            self.inner.copy(),
            self.v_scratch.copy(),
            self.step,
        )


def _check_system(a: DenseMatrix, d, b):
    d = as_vector(d, "d")
    b = as_vector(b, "b")
    if d.size != a.cols:
        raise DimensionMismatch(f"d has length {d.size}, expected n={a.cols}")
    if b.size != a.rows:
        raise DimensionMismatch(f"b has length {b.size}, expected m={a.rows}")
    return d, b


def solve_direct(a: DenseMatrix, d, b) -> np.ndarray:
    """Solve (A diag(d) A^T) w = b by a fresh Cholesky factorization."""
    d, b = _check_system(a, d, b)
    low = cholesky_factor(scaled_gram(a, d))
    return cholesky_solve(low, b)


def prepare_woodbury(a: DenseMatrix) -> WoodburyBasis:
    """Factor A A^T and solve it against every column of A."""
    low = cholesky_factor(gram(a))
    y = cholesky_solve_many(low, a.as_2d())
    return WoodburyBasis(low, DenseMatrix(a.rows, a.cols, np.asarray(y).ravel(order="F")))


def init_workspace(basis: WoodburyBasis, b) -> AugWorkspace:
    """Fresh workspace: basis columns plus (A A^T)^{-1} b as the solution column."""
    b = as_vector(b, "b")
    if b.size != basis.m:
        raise DimensionMismatch(f"b has length {b.size}, expected m={basis.m}")
    m, n = basis.m, basis.n
    cols = np.zeros((m, n + 1), dtype=np.float64, order="F")
    cols[:, :n] = basis.Y.as_2d()
    cols[:, n] = cholesky_solve(basis.L0, b)
    return AugWorkspace(cols, np.zeros(n + 1), np.zeros(m), 0)


def rank_one_step(ws: AugWorkspace, a: DenseMatrix, d, l: int) -> AugWorkspace:
    """Apply the rank-one correction for column l (1-based), in place.

    Steps must be applied in order.  When d_l == 1 the correction vanishes
    and the step is a no-op apart from the step counter.  Otherwise the
    inner products of the transient factor against every live column are
    taken first (phase 1), then every column past l and the solution
    column are updated against the frozen pivot column (phase 2).

    Raises SingularUpdate when |1 + v.y| falls below the breakdown
    threshold; callers fall back to `solve_direct`.
    """
    d = as_vector(d, "d")
    m, n = ws.m, ws.n
    if a.rows != m or a.cols != n or d.size != n:
        raise DimensionMismatch("workspace, matrix and scaling disagree on shape")
    if not 1 <= l <= n:
        raise DimensionMismatch(f"step index {l} outside 1..{n}")
    if ws.step != l - 1:
        raise DimensionMismatch(f"step {l} applied out of order (completed {ws.step})")
    l0 = l - 1
    dl = float(d[l0])
    if dl == 1.0:
        ws.step = l
        return ws
    a2 = a.as_2d()
    kernels.build_v(a2, l0, dl, ws.v_scratch)
    kernels.sweep_phase1(ws.cols, ws.v_scratch, ws.inner, l0, n + 1)
    denom = 1.0 + ws.inner[l0]
    if abs(denom) <= kernels.DENOM_EPS_REL * (1.0 + abs(ws.inner[l0])):
        raise SingularUpdate(f"update denominator vanished at step {l}")
    kernels.sweep_phase2(ws.cols, l0, ws.inner, denom, l0 + 1, n + 1)
    ws.step = l
    return ws


def solve_woodbury(basis: WoodburyBasis, a: DenseMatrix, d, b) -> np.ndarray:
    """Solve (A diag(d) A^T) w = b through the full rank-one cascade."""
    d, b = _check_system(a, d, b)
    if basis.m != a.rows or basis.n != a.cols:
        raise DimensionMismatch("basis does not match the matrix")
    if d.size and float(np.min(d)) <= 0.0:
        raise ValueError("solve_woodbury requires strictly positive scaling entries")
    ws = init_workspace(basis, b)
    fail = kernels.solve_sweeps(ws.cols, a.as_2d(), d, ws.inner, ws.v_scratch, 1)
    if fail:
        raise SingularUpdate(f"update denominator vanished at step {fail}")
    ws.step = basis.n
    return ws.x_column.copy()

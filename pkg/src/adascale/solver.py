"""Primal-dual affine scaling iteration.

Each iteration scales by d = x/s, solves (A diag(d) A^T) dy = A x through
the configured backend, recovers ds = -A'dy and dx = d*(A'dy) - x in
closed form, then takes a damped ratio-test step.  The duality gap
contracts exactly by (1 - alpha) per step, which the trace makes easy to
audit.
"""

import enum
import json
import time
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .errors import NotPositiveDefinite, SingularUpdate
from .linalg import DenseMatrix, cholesky_factor, cholesky_solve_many, dot_tree, mat_t_vec, mat_vec, scaled_gram
from .model import InteriorPoint, StandardFormLP, check_feasible, check_interior, validate
from .normal import prepare_woodbury, solve_direct, solve_woodbury
from .parallel import resolve_workers, solve_woodbury_parallel

# Direction residual certification, relative to 1 + |x|_inf * |s|_inf.
DIR_TOL_REL = 1e-8
# Default stopping gap, relative to 1 + |c'x0|.
GAP_TOL_REL = 1e-8
# Step returned when no component blocks; flags a likely unbounded ray.
CAP_ALPHA = 1e6

BACKENDS = ("direct", "woodbury")


class Status(enum.Enum):
    OPTIMAL = "optimal"
    ITER_LIMIT = "iter_limit"
    UNBOUNDED = "unbounded"
    NUMERICAL_BREAKDOWN = "numerical_breakdown"


@dataclass(eq=False)
class Directions:
    """Affine-scaling step (dx, dy, ds) with its residual certificates."""

    dx: np.ndarray
    dy: np.ndarray
    ds: np.ndarray
    residual_primal: float
    residual_dual: float
    residual_comp: float
    fallback: bool = False


@dataclass
class SolveOptions:
    rho: float = 0.9
    gap_tol: Optional[float] = None
    max_iter: int = 500
    backend: str = "woodbury"
    workers: int = 1

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must be in (0,1)")
        if self.gap_tol is not None and not self.gap_tol > 0.0:
            raise ValueError("gap-tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max-iter must be >= 1")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {', '.join(BACKENDS)}")
        if self.workers < 0:
            raise ValueError("workers must be >= 0")


@dataclass
class TraceRecord:
    iter: int
    gap: float
    alpha: float
    primal_obj: float
    dual_obj: float
    r_primal: float
    r_dual: float
    r_comp: float
    millis: float
    fallback: bool = False


TRACE_CSV_HEADER = "iter,gap,alpha,primal_obj,dual_obj,r_primal,r_dual,r_comp,millis"


def trace_to_csv(trace: List[TraceRecord]) -> str:
    lines = [TRACE_CSV_HEADER]
    for r in trace:
        lines.append(
            f"{r.iter},{r.gap!r},{r.alpha!r},{r.primal_obj!r},{r.dual_obj!r},"
            f"{r.r_primal!r},{r.r_dual!r},{r.r_comp!r},{r.millis!r}"
        )
    return "\n".join(lines) + "\n"


def trace_to_json(trace: List[TraceRecord]) -> str:
    return json.dumps([vars(r) for r in trace])


class DirectBackend:
    """Fresh Cholesky factorization of A diag(d) A^T per solve."""

    name = "direct"

    def __init__(self, lp: StandardFormLP):
        self.lp = lp

    def solve(self, d, rhs) -> np.ndarray:
        return solve_direct(self.lp.A, d, rhs)


class WoodburyBackend:
    """Rank-one-update cascade over a basis factored once per problem."""

    name = "woodbury"

    def __init__(self, lp: StandardFormLP, workers: int = 1):
        self.lp = lp
        self.workers = resolve_workers(workers)
        self.basis = prepare_woodbury(lp.A)

    def solve(self, d, rhs) -> np.ndarray:
        if self.workers <= 1:
            return solve_woodbury(self.basis, self.lp.A, d, rhs)
        return solve_woodbury_parallel(self.basis, self.lp.A, d, rhs, self.workers)


def make_backend(lp: StandardFormLP, name: str, workers: int = 1):
    if name == "direct":
        return DirectBackend(lp)
    if name == "woodbury":
        return WoodburyBackend(lp, workers)
    raise ValueError(f"backend must be one of {', '.join(BACKENDS)}")


def scaling_diag(p: InteriorPoint) -> np.ndarray:
    """d = x/s, the only iteration-dependent part of the normal equations."""
    check_interior(p)
    return p.x / p.s


def dir_tol(p: InteriorPoint) -> float:
    return DIR_TOL_REL * (1.0 + float(np.max(np.abs(p.x))) * float(np.max(np.abs(p.s))))


def compute_directions(lp: StandardFormLP, p: InteriorPoint, backend) -> Directions:
    """Closed-form affine-scaling directions.

    On a rank-one-update breakdown the normal solve is retried with the
    direct backend and the result is flagged.
    """
    d = scaling_diag(p)
    rhs = mat_vec(lp.A, p.x)
    fallback = False
    try:
        dy = backend.solve(d, rhs)
    except SingularUpdate:
        dy = solve_direct(lp.A, d, rhs)
        fallback = True
    t = mat_t_vec(lp.A, dy)
    ds = -t
    dx = d * t - p.x
    r_primal = float(np.max(np.abs(mat_vec(lp.A, dx))))
    r_dual = float(np.max(np.abs(ds + t)))
    r_comp = float(np.max(np.abs(p.s * dx + p.x * ds + p.x * p.s)))
    return Directions(dx, dy, ds, r_primal, r_dual, r_comp, fallback)


def step_length(p: InteriorPoint, dirs: Directions, rho: float) -> float:
    """Damped ratio test: rho times the largest interior-preserving step.

    Returns CAP_ALPHA when no component blocks.
    """
    ratios = []
    neg = dirs.dx < 0.0
    if neg.any():
        ratios.append(float(np.min(-p.x[neg] / dirs.dx[neg])))
    neg = dirs.ds < 0.0
    if neg.any():
        ratios.append(float(np.min(-p.s[neg] / dirs.ds[neg])))
    if not ratios:
        return CAP_ALPHA
    return rho * min(ratios)


def duality_gap(p: InteriorPoint) -> float:
    """x's, zero at optimality for feasible pairs."""
    return dot_tree(p.x, p.s)


def solve_lp(
    lp: StandardFormLP,
    start: InteriorPoint,
    opts: Optional[SolveOptions] = None,
) -> Tuple[InteriorPoint, Status, List[TraceRecord]]:
    """Run the affine-scaling iteration from a strictly feasible start.

    Returns the final iterate, a termination status, and one trace record
    per completed iteration.  Backend failures that survive the direct
    fallback surface as NUMERICAL_BREAKDOWN with the partial trace.
    """
    opts = opts or SolveOptions()
    validate(lp)
    p = start.copy()
    check_interior(p)
    check_feasible(lp, p)
    backend = make_backend(lp, opts.backend, opts.workers)
    gap = duality_gap(p)
    gap_tol = opts.gap_tol
    if gap_tol is None:
        gap_tol = GAP_TOL_REL * (1.0 + abs(dot_tree(lp.c, p.x)))
    trace: List[TraceRecord] = []
    if gap <= gap_tol:
        return p, Status.OPTIMAL, trace
    status = Status.ITER_LIMIT
    for it in range(1, opts.max_iter + 1):
        t0 = time.perf_counter()
        try:
            dirs = compute_directions(lp, p, backend)
        except (NotPositiveDefinite, SingularUpdate):
            status = Status.NUMERICAL_BREAKDOWN
            break
        if not (
            np.isfinite(dirs.dx).all()
            and np.isfinite(dirs.dy).all()
            and np.isfinite(dirs.ds).all()
        ):
            status = Status.NUMERICAL_BREAKDOWN
            break
        alpha = step_length(p, dirs, opts.rho)
        if alpha >= CAP_ALPHA:
            # No blocking component: stepping would not reduce the gap, so
            # stop and flag a likely unbounded ray.
            millis = (time.perf_counter() - t0) * 1e3
            trace.append(
                TraceRecord(
                    it,
                    gap,
                    alpha,
                    dot_tree(lp.c, p.x),
                    dot_tree(lp.b, p.y),
                    dirs.residual_primal,
                    dirs.residual_dual,
                    dirs.residual_comp,
                    millis,
                    dirs.fallback,
                )
            )
            status = Status.UNBOUNDED
            break
        p.x += alpha * dirs.dx
        p.y += alpha * dirs.dy
        p.s += alpha * dirs.ds
        gap = duality_gap(p)
        millis = (time.perf_counter() - t0) * 1e3
        trace.append(
            TraceRecord(
                it,
                gap,
                alpha,
                dot_tree(lp.c, p.x),
                dot_tree(lp.b, p.y),
                dirs.residual_primal,
                dirs.residual_dual,
                dirs.residual_comp,
                millis,
                dirs.fallback,
            )
        )
        if gap <= gap_tol:
            status = Status.OPTIMAL
            break
    return p, status, trace


def z_inverse_check(a: DenseMatrix, d) -> float:
    """Residual |Z Zhat^{-1} - I|_max for the blockwise inverse of
    Z = [[0, A', I], [A, 0, 0], [I, 0, diag(d)]].

    The blocks are assembled from X = (A diag(d) A^T)^{-1}; the residual
    certifies the closed forms the direction computation relies on.
    """
    a2 = a.as_2d()
    m, n = a2.shape
    d = np.ascontiguousarray(d, dtype=np.float64)
    low = cholesky_factor(scaled_gram(a, d))
    x_inv = np.asarray(cholesky_solve_many(low, np.eye(m)))
    xa = x_inv @ a2
    dat = d[:, None] * a2.T
    dat_x = dat @ x_inv
    dat_xa = dat @ xa
    eye_n = np.eye(n)
    b13 = eye_n - dat_xa
    z = np.block(
        [
            [np.zeros((n, n)), a2.T, eye_n],
            [a2, np.zeros((m, m)), np.zeros((m, n))],
            [eye_n, np.zeros((n, m)), np.diag(d)],
        ]
    )
    z_inv = np.block(
        [
            [dat_xa * d[None, :] - np.diag(d), dat_x, b13],
            [xa * d[None, :], x_inv, -xa],
            [b13.T, -(a2.T @ x_inv), a2.T @ xa],
        ]
    )
    dim = 2 * n + m
    return float(np.max(np.abs(z @ z_inv - np.eye(dim))))

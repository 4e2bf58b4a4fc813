"""Deterministic data-parallel driver for the rank-one sweep.

Columns of the augmented workspace are independent within a phase, so the
sweep partitions them into contiguous per-worker ranges and runs the two
phases with a join barrier in between.  Every column's arithmetic order is
fixed (one tree-ordered inner product, one axpy against the frozen pivot),
so the result is bitwise identical for every worker count.

The compiled core additionally drives the full cascade through an OpenMP
gang (`solve_woodbury_parallel`); the thread-pool route here is the
portable engine and the reference the compiled gang is tested against.
"""

import os
from concurrent.futures import ThreadPoolExecutor, wait
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from ._core import kernels
from .errors import DimensionMismatch, SingularUpdate
from .linalg import DenseMatrix, as_vector
from .normal import AugWorkspace, WoodburyBasis, init_workspace


def resolve_workers(workers: int) -> int:
    """Map the worker-count flag to a concrete count; 0 means all cores."""
    if workers < 0:
        raise ValueError(f"workers must be >= 0, got {workers}")
    if workers == 0:
        return os.cpu_count() or 1
    return workers


@dataclass(frozen=True)
class SweepPlan:
    """Static column assignment for one step; depends only on (n, workers, l)."""

    assignments: Dict[int, Tuple[int, int]]
    workers: int
    phase_barriers: int = 2

    def phase1_range(self, worker: int) -> Tuple[int, int]:
        return self.assignments[worker]

    def phase2_range(self, worker: int, l: int) -> Tuple[int, int]:
        """Phase-1 range with the frozen pivot column clipped out."""
        k0, k1 = self.assignments[worker]
        return max(k0, l), k1

    def active_columns(self) -> set:
        cover = set()
        for k0, k1 in self.assignments.values():
            cover.update(range(k0, k1))
        return cover


def column_partition(ncols: int, workers: int, l: int) -> SweepPlan:
    """Split the live columns of step l across workers.

    Live columns for phase 1 are l..ncols plus the appended solution
    column; they are split into ceil(active/workers)-sized contiguous
    ranges, so trailing workers may be idle.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    if not 1 <= l <= ncols:
        raise DimensionMismatch(f"step index {l} outside 1..{ncols}")
    lo, hi = l - 1, ncols + 1
    active = hi - lo
    chunk = -(-active // workers)
    assignments = {}
    for w in range(workers):
        k0 = min(lo + w * chunk, hi)
        k1 = min(k0 + chunk, hi)
        assignments[w] = (k0, k1)
    return SweepPlan(assignments, workers)


@dataclass(frozen=True)
class ParamContext:
    """Immutable per-sweep parameters published once before worker launch."""

    m: int
    n: int
    l: int
    d_l: float
    cols: np.ndarray
    inner: np.ndarray
    v_scratch: np.ndarray


def parallel_sweep(
    ws: AugWorkspace,
    a: DenseMatrix,
    d,
    l: int,
    workers: int,
    pool: Optional[ThreadPoolExecutor] = None,
) -> AugWorkspace:
    """Concurrent rank-one step, bitwise identical to `rank_one_step`.

    The sweep owns the workspace for its duration; phase-2 writers touch
    disjoint columns and phase-1 readers share only the frozen pivot and
    the scratch vector.
    """
    d = as_vector(d, "d")
    m, n = ws.m, ws.n
    if a.rows != m or a.cols != n or d.size != n:
        raise DimensionMismatch("workspace, matrix and scaling disagree on shape")
    if not 1 <= l <= n:
        raise DimensionMismatch(f"step index {l} outside 1..{n}")
    if ws.step != l - 1:
        raise DimensionMismatch(f"step {l} applied out of order (completed {ws.step})")
    workers = resolve_workers(workers)
    dl = float(d[l - 1])
    if dl == 1.0:
        ws.step = l
        return ws
    ctx = ParamContext(m, n, l, dl, ws.cols, ws.inner, ws.v_scratch)
    plan = column_partition(n, workers, l)
    kernels.build_v(a.as_2d(), l - 1, dl, ctx.v_scratch)

    own_pool = None
    if workers > 1 and pool is None:
        own_pool = ThreadPoolExecutor(max_workers=workers)
        pool = own_pool
    try:
        _run_phase(pool, plan, ctx, phase=1)
        denom = 1.0 + ctx.inner[l - 1]
        if abs(denom) <= kernels.DENOM_EPS_REL * (1.0 + abs(ctx.inner[l - 1])):
            raise SingularUpdate(f"update denominator vanished at step {l}")
        _run_phase(pool, plan, ctx, phase=2, denom=denom)
    finally:
        if own_pool is not None:
            own_pool.shutdown()
    ws.step = l
    return ws


def _run_phase(pool, plan: SweepPlan, ctx: ParamContext, phase: int, denom: float = 0.0):
    """Launch one phase over the plan's ranges; returning is the barrier."""
    tasks = []
    for w in range(plan.workers):
        if phase == 1:
            k0, k1 = plan.phase1_range(w)
        else:
            k0, k1 = plan.phase2_range(w, ctx.l)
        if k0 < k1:
            tasks.append((k0, k1))

    def run(span):
        k0, k1 = span
        if phase == 1:
            kernels.sweep_phase1(ctx.cols, ctx.v_scratch, ctx.inner, k0, k1)
        else:
            kernels.sweep_phase2(ctx.cols, ctx.l - 1, ctx.inner, denom, k0, k1)

    if pool is None or len(tasks) <= 1:
        for span in tasks:
            run(span)
    else:
        done, _ = wait([pool.submit(run, span) for span in tasks])
        for fut in done:
            fut.result()


def solve_woodbury_parallel(
    basis: WoodburyBasis,
    a: DenseMatrix,
    d,
    b,
    workers: int,
    pool: Optional[ThreadPoolExecutor] = None,
) -> np.ndarray:
    """Full cascade solve driven by the parallel sweep.

    Bitwise identical to the serial `solve_woodbury` for every worker
    count.  With the compiled core and no caller-supplied pool the steps
    run in one OpenMP-driven pass; otherwise a thread pool is created once
    and reused across all n steps.
    """
    d = as_vector(d, "d")
    b = as_vector(b, "b")
    if basis.m != a.rows or basis.n != a.cols:
        raise DimensionMismatch("basis does not match the matrix")
    if d.size != a.cols or b.size != a.rows:
        raise DimensionMismatch("scaling or rhs length does not match the matrix")
    if d.size and float(np.min(d)) <= 0.0:
        raise ValueError("solve requires strictly positive scaling entries")
    workers = resolve_workers(workers)
    ws = init_workspace(basis, b)
    if pool is None and (workers == 1 or kernels.COMPILED):
        fail = kernels.solve_sweeps(ws.cols, a.as_2d(), d, ws.inner, ws.v_scratch, workers)
        if fail:
            raise SingularUpdate(f"update denominator vanished at step {fail}")
        return ws.x_column.copy()
    own_pool = None
    if pool is None:
        own_pool = ThreadPoolExecutor(max_workers=workers)
        pool = own_pool
    try:
        for l in range(1, basis.n + 1):
            parallel_sweep(ws, a, d, l, workers, pool=pool)
    finally:
        if own_pool is not None:
            own_pool.shutdown()
    return ws.x_column.copy()

"""Command-line front end: solve, gen, bench, check subcommands."""

import argparse
import math
import os
import sys
import time

import numpy as np

from .errors import AdascaleError, GenerationError, NotPositiveDefinite
from .linalg import DenseMatrix, cholesky_factor, gram
from .model import gen_random_feasible, parse_problem, serialize_problem
from .normal import prepare_woodbury, solve_direct, solve_woodbury
from .solver import (
    SolveOptions,
    Status,
    duality_gap,
    dot_tree,
    solve_lp,
    trace_to_csv,
    trace_to_json,
    z_inverse_check,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_ITER_LIMIT = 3
EXIT_BREAKDOWN = 4
EXIT_CHECK_FAILED = 5

_STATUS_EXIT = {
    Status.OPTIMAL: EXIT_OK,
    Status.ITER_LIMIT: EXIT_ITER_LIMIT,
    Status.UNBOUNDED: EXIT_BREAKDOWN,
    Status.NUMERICAL_BREAKDOWN: EXIT_BREAKDOWN,
}


def _default_workers() -> str:
    return os.environ.get("ADASCALE_WORKERS", "1")


def _parse_workers_single(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise ValueError(f"workers must be an integer, got '{text}'") from None
    if value < 0:
        raise ValueError("workers must be >= 0")
    return value


def _parse_workers_list(text: str):
    try:
        values = [int(tok) for tok in text.split(",") if tok]
    except ValueError:
        raise ValueError(f"workers must be a comma-separated integer list, got '{text}'") from None
    if not values or any(v < 0 for v in values):
        raise ValueError("workers entries must be >= 0")
    return values


def _parse_grid(text: str):
    cells = []
    for tok in text.split(","):
        parts = tok.lower().split("x")
        if len(parts) != 2:
            raise ValueError(f"grid cell '{tok}' is not of the form MxN")
        try:
            m, n = int(parts[0]), int(parts[1])
        except ValueError:
            raise ValueError(f"grid cell '{tok}' is not of the form MxN") from None
        if not 1 <= m < n:
            raise ValueError(f"grid cell '{tok}' needs 1 <= m < n")
        cells.append((m, n))
    if not cells:
        raise ValueError("grid must list at least one MxN cell")
    return cells


def _parse_seed_range(text: str):
    if ".." in text:
        lo_text, hi_text = text.split("..", 1)
        try:
            lo, hi = int(lo_text), int(hi_text)
        except ValueError:
            raise ValueError(f"seed range '{text}' is not of the form A..B") from None
        if hi < lo:
            raise ValueError(f"seed range '{text}' is empty")
        return list(range(lo, hi + 1))
    try:
        return [int(text)]
    except ValueError:
        raise ValueError(f"seeds must be an integer or A..B range, got '{text}'") from None


def _load_or_generate(args):
    if args.input is not None:
        with open(args.input, "r", encoding="utf-8") as fh:
            lp, start = parse_problem(fh.read())
        if start is None:
            raise ValueError(
                "problem file has no start point; supply one or generate with 'gen'"
            )
        return lp, start
    if args.m is not None and args.n is not None:
        return gen_random_feasible(args.m, args.n, args.seed)
    raise ValueError("solve needs --input FILE or both --m and --n")


def run_solve(args) -> int:
    lp, start = _load_or_generate(args)
    opts = SolveOptions(
        rho=args.rho,
        gap_tol=args.gap_tol,
        max_iter=args.max_iter,
        backend=args.backend,
        workers=_parse_workers_single(args.workers),
    )
    final, status, trace = solve_lp(lp, start, opts)
    print(f"status: {status.value}")
    print(f"iterations: {len(trace)}")
    print(f"objective: {dot_tree(lp.c, final.x)!r}")
    print(f"gap: {duality_gap(final)!r}")
    if args.trace is not None:
        text = trace_to_json(trace) if args.trace_format == "json" else trace_to_csv(trace)
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write(text)
    return _STATUS_EXIT[status]


def run_gen(args) -> int:
    lp, start = gen_random_feasible(args.m, args.n, args.seed)
    text = serialize_problem(lp, start)
    if args.output is None:
        print(text)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return EXIT_OK


def run_bench(args) -> int:
    grid = _parse_grid(args.grid)
    workers_list = _parse_workers_list(args.workers)
    print("m,n,backend,workers,iterations,ms_per_iter")
    for m, n in grid:
        lp, start = gen_random_feasible(m, n, args.seed)
        for backend in ("direct", "woodbury"):
            for workers in workers_list:
                opts = SolveOptions(backend=backend, workers=workers, max_iter=args.max_iter)
                try:
                    t0 = time.perf_counter()
                    _, _, trace = solve_lp(lp, start, opts)
                    elapsed_ms = (time.perf_counter() - t0) * 1e3
                    iters = len(trace)
                    per_iter = elapsed_ms / iters if iters else math.nan
                except AdascaleError:
                    iters, per_iter = 0, math.nan
                print(f"{m},{n},{backend},{workers},{iters},{per_iter:.3f}")
    return EXIT_OK


def random_system(rng, m: int, n: int):
    """Full-rank (A, d, b) triple: d log-uniform in [1e-3, 1e3]."""
    a = None
    for _ in range(100):
        cand = DenseMatrix.from_array(rng.uniform(-1.0, 1.0, size=(m, n)))
        try:
            cholesky_factor(gram(cand))
        except NotPositiveDefinite:
            continue
        a = cand
        break
    if a is None:
        raise GenerationError("no full-rank draw in 100 attempts")
    d = np.power(10.0, rng.uniform(-3.0, 3.0, size=n))
    rhs = rng.uniform(-1.0, 1.0, size=m)
    return a, d, rhs


def run_check(args) -> int:
    seeds = _parse_seed_range(args.seeds)
    if args.z_tol <= 0 or args.equiv_tol <= 0:
        raise ValueError("check tolerances must be positive")
    max_z = 0.0
    max_gap = 0.0
    offending = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        m = args.m if args.m is not None else int(rng.integers(1, 6))
        n = args.n if args.n is not None else int(rng.integers(m + 1, 9))
        if not 1 <= m <= n:
            raise ValueError(f"check needs 1 <= m <= n, got m={m}, n={n}")
        if m == 1 and n == 1:
            # Hand-verified self-check system.
            a = DenseMatrix.from_rows([[2.0]])
            d = np.array([3.0])
            rhs = np.array([6.0])
        else:
            a, d, rhs = random_system(rng, m, n)
        z_res = z_inverse_check(a, d)
        w_direct = solve_direct(a, d, rhs)
        w_wood = solve_woodbury(prepare_woodbury(a), a, d, rhs)
        gap = float(np.max(np.abs(w_wood - w_direct))) / (
            1.0 + float(np.max(np.abs(w_direct)))
        )
        max_z = max(max_z, z_res)
        max_gap = max(max_gap, gap)
        if z_res > args.z_tol or gap > args.equiv_tol:
            offending.append(seed)
    print(f"max Z-residual {max_z!r}, max backend gap {max_gap!r}")
    if offending:
        print(f"thresholds exceeded for seeds: {','.join(str(s) for s in offending)}")
        return EXIT_CHECK_FAILED
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adascale",
        description="Primal-dual affine scaling LP solver",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    solve = sub.add_parser("solve", help="solve a problem file (or a generated instance)")
    solve.add_argument("--input", default=None, help="problem JSON file")
    solve.add_argument("--m", type=int, default=None, help="rows when generating")
    solve.add_argument("--n", type=int, default=None, help="columns when generating")
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--backend", default="woodbury", choices=("direct", "woodbury"))
    solve.add_argument("--rho", type=float, default=0.9)
    solve.add_argument("--gap-tol", type=float, default=None)
    solve.add_argument("--max-iter", type=int, default=500)
    solve.add_argument("--workers", default=_default_workers())
    solve.add_argument("--trace", default=None, help="write per-iteration trace to PATH")
    solve.add_argument("--trace-format", default="csv", choices=("csv", "json"))
    solve.set_defaults(func=run_solve)

    gen = sub.add_parser("gen", help="generate a random feasible instance")
    gen.add_argument("--m", type=int, required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--output", default=None)
    gen.set_defaults(func=run_gen)

    bench = sub.add_parser("bench", help="time backends over an instance grid")
    bench.add_argument("--grid", required=True, help="MxN[,MxN...]")
    bench.add_argument("--workers", default=_default_workers(), help="comma list, e.g. 1,4")
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--max-iter", type=int, default=20)
    bench.set_defaults(func=run_bench)

    check = sub.add_parser("check", help="verification sweep over seeded instances")
    check.add_argument("--seeds", default="1..20", help="N or A..B")
    check.add_argument("--m", type=int, default=None)
    check.add_argument("--n", type=int, default=None)
    check.add_argument("--z-tol", type=float, default=1e-9)
    check.add_argument("--equiv-tol", type=float, default=1e-8)
    check.set_defaults(func=run_check)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (AdascaleError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

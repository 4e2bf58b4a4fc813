"""Standard-form LP representation, validation, generation and file I/O.

Problems are min c'x subject to Ax = b, x >= 0 with A of full row rank.
A strictly feasible interior start (x, y, s) is required by the solver;
it comes either from the problem file or from the random generator.  No
phase-1 procedure is provided.
"""

import json
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import (
    DimensionMismatch,
    GenerationError,
    NonFiniteEntry,
    NotFeasible,
    NotInterior,
    NotPositiveDefinite,
    RankDeficient,
    SchemaError,
)
from .linalg import DenseMatrix, as_vector, cholesky_factor, gram, mat_t_vec, mat_vec

# Feasibility certification is scale-relative: tol = FEAS_TOL_REL * (1 + |b|_inf).
FEAS_TOL_REL = 1e-8

_GEN_MAX_ATTEMPTS = 100


@dataclass(eq=False)
class StandardFormLP:
    """Problem data for min c'x s.t. Ax = b, x >= 0."""

    A: DenseMatrix
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        if not isinstance(self.A, DenseMatrix):
            self.A = DenseMatrix.from_array(self.A)
        self.b = as_vector(self.b, "b")
        self.c = as_vector(self.c, "c")
        m, n = self.A.rows, self.A.cols
        if m < 1:
            raise DimensionMismatch("need at least one constraint row")
        if n < m:
            raise DimensionMismatch(f"need n >= m, got m={m}, n={n}")
        if self.b.size != m:
            raise DimensionMismatch(f"b has length {self.b.size}, expected m={m}")
        if self.c.size != n:
            raise DimensionMismatch(f"c has length {self.c.size}, expected n={n}")

    @property
    def m(self) -> int:
        return self.A.rows

    @property
    def n(self) -> int:
        return self.A.cols


@dataclass(eq=False)
class InteriorPoint:
    """Primal-dual iterate (x, y, s).

    Construction is permissive; strict interiority and feasibility are
    certified by `check_interior` / `check_feasible` where the solver
    needs them.
    """

    x: np.ndarray
    y: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        self.x = as_vector(self.x, "x")
        self.y = as_vector(self.y, "y")
        self.s = as_vector(self.s, "s")

    def copy(self) -> "InteriorPoint":
        return InteriorPoint(self.x.copy(), self.y.copy(), self.s.copy())


def validate(lp: StandardFormLP) -> StandardFormLP:
    """Certify dimensions, finiteness and full row rank of A.

    Rank is certified by Cholesky factorization of A*A^T succeeding.
    """
    if not np.isfinite(lp.A.data).all():
        raise NonFiniteEntry("A contains a non-finite entry")
    if not np.isfinite(lp.b).all():
        raise NonFiniteEntry("b contains a non-finite entry")
    if not np.isfinite(lp.c).all():
        raise NonFiniteEntry("c contains a non-finite entry")
    try:
        cholesky_factor(gram(lp.A))
    except NotPositiveDefinite as exc:
        raise RankDeficient(f"A does not have full row rank: {exc}") from exc
    return lp


def feas_tol(lp: StandardFormLP) -> float:
    return FEAS_TOL_REL * (1.0 + float(np.max(np.abs(lp.b))))


def feasibility_residuals(lp: StandardFormLP, p: InteriorPoint) -> Tuple[float, float]:
    """Primal residual |Ax-b|_inf and dual residual |s-(c-A'y)|_inf."""
    rp = float(np.max(np.abs(mat_vec(lp.A, p.x) - lp.b)))
    rd = float(np.max(np.abs(p.s - (lp.c - mat_t_vec(lp.A, p.y)))))
    return rp, rd


def check_interior(p: InteriorPoint) -> InteriorPoint:
    if p.x.size == 0 or float(np.min(p.x)) <= 0.0 or float(np.min(p.s)) <= 0.0:
        raise NotInterior("point is not strictly interior (needs x > 0 and s > 0)")
    return p


def check_feasible(lp: StandardFormLP, p: InteriorPoint) -> InteriorPoint:
    if p.x.size != lp.n or p.s.size != lp.n or p.y.size != lp.m:
        raise DimensionMismatch("point dimensions do not match the problem")
    tol = feas_tol(lp)
    rp, rd = feasibility_residuals(lp, p)
    if rp > tol or rd > tol:
        raise NotFeasible(
            f"start violates feasibility: primal {rp:.3e}, dual {rd:.3e}, tol {tol:.3e}"
        )
    return p


def gen_random_feasible(m: int, n: int, seed: int) -> Tuple[StandardFormLP, InteriorPoint]:
    """Random full-rank instance with an exactly feasible interior start.

    A has entries uniform in [-1, 1] (redrawn if the rank check fails),
    x and s are uniform in [0.5, 2], y uniform in [-1, 1]; b and c are
    defined as Ax and A'y + s, so the returned point is feasible by
    construction.  Deterministic in the seed.
    """
    if not 1 <= m < n:
        raise DimensionMismatch(f"generator requires 1 <= m < n, got m={m}, n={n}")
    rng = np.random.default_rng(seed)
    a = None
    for _ in range(_GEN_MAX_ATTEMPTS):
        cand = DenseMatrix.from_array(rng.uniform(-1.0, 1.0, size=(m, n)))
        try:
            cholesky_factor(gram(cand))
        except NotPositiveDefinite:
            continue
        a = cand
        break
    if a is None:
        raise GenerationError(f"no full-rank draw in {_GEN_MAX_ATTEMPTS} attempts")
    x = rng.uniform(0.5, 2.0, size=n)
    s = rng.uniform(0.5, 2.0, size=n)
    y = rng.uniform(-1.0, 1.0, size=m)
    b = mat_vec(a, x)
    c = mat_t_vec(a, y) + s
    return StandardFormLP(a, b, c), InteriorPoint(x, y, s)


def _require_number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{where} is not a number")
    return float(value)


def _require_vector(obj, field: str, length: int) -> np.ndarray:
    if not isinstance(obj, list):
        raise SchemaError(f"'{field}' must be an array")
    if len(obj) != length:
        raise SchemaError(f"'{field}' has length {len(obj)}, expected {length}")
    return np.array([_require_number(v, f"'{field}'[{i}]") for i, v in enumerate(obj)])


def parse_problem(text) -> Tuple[StandardFormLP, Optional[InteriorPoint]]:
    """Parse the JSON problem format; see `serialize_problem` for the schema."""
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(
            f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(doc, dict):
        raise SchemaError("top level must be a JSON object")
    for field in ("m", "n", "A", "b", "c"):
        if field not in doc:
            raise SchemaError(f"missing required field '{field}'")
    m, n = doc["m"], doc["n"]
    for name, value in (("m", m), ("n", n)):
        if isinstance(value, bool) or not isinstance(value, int):
            raise SchemaError(f"'{name}' must be an integer")
    rows = doc["A"]
    if not isinstance(rows, list):
        raise SchemaError("'A' must be an array of rows")
    if len(rows) != m:
        raise SchemaError(f"'A' has {len(rows)} rows, expected m={m}")
    a = np.zeros((m, n))
    for i, row in enumerate(rows):
        if not isinstance(row, list):
            raise SchemaError(f"'A' row {i} must be an array")
        if len(row) != n:
            raise SchemaError(f"'A' row {i} has length {len(row)}, expected n={n}")
        a[i] = [_require_number(v, f"'A'[{i}][{j}]") for j, v in enumerate(row)]
    b = _require_vector(doc["b"], "b", m)
    c = _require_vector(doc["c"], "c", n)
    lp = StandardFormLP(DenseMatrix.from_array(a), b, c)
    start = None
    if "start" in doc and doc["start"] is not None:
        block = doc["start"]
        if not isinstance(block, dict):
            raise SchemaError("'start' must be an object")
        for field in ("x", "y", "s"):
            if field not in block:
                raise SchemaError(f"'start' is missing field '{field}'")
        start = InteriorPoint(
            _require_vector(block["x"], "start.x", n),
            _require_vector(block["y"], "start.y", m),
            _require_vector(block["s"], "start.s", n),
        )
    return lp, start


def serialize_problem(lp: StandardFormLP, start: Optional[InteriorPoint] = None) -> str:
    """Serialize to UTF-8 JSON.

    Schema: {"m": int, "n": int, "A": [[row-major rows]], "b": [..],
    "c": [..], "start": {"x": [..], "y": [..], "s": [..]}} with "start"
    optional.  Floats use the shortest round-trip decimal form.
    """
    for name, arr in (("A", lp.A.data), ("b", lp.b), ("c", lp.c)):
        if not np.isfinite(arr).all():
            raise NonFiniteEntry(f"cannot serialize non-finite entries in {name}")
    doc = {
        "m": lp.m,
        "n": lp.n,
        "A": lp.A.to_rows(),
        "b": lp.b.tolist(),
        "c": lp.c.tolist(),
    }
    if start is not None:
        doc["start"] = {"x": start.x.tolist(), "y": start.y.tolist(), "s": start.s.tolist()}
    return json.dumps(doc)


def duality_gap_identity_error(lp: StandardFormLP, p: InteriorPoint) -> float:
    """|x's - (c'x - b'y)|, zero in exact arithmetic for feasible pairs."""
    gap = float(p.x @ p.s)
    return abs(gap - (float(lp.c @ p.x) - float(lp.b @ p.y)))

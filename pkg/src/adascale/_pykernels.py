"""Pure numpy kernel core.

Fallback used when the compiled extension is unavailable.  The reduction
tree and the sweep kernels reproduce the compiled core's arithmetic order
exactly (same fixed tree, no fused multiply-add), so results are bitwise
comparable across cores for those routines.  Gram products, factorization
and triangular solves only agree to rounding; their contracts are
residual-based.
"""

import numpy as np

COMPILED = False

# Relative breakdown threshold for 1 + v.y pivot denominators.
DENOM_EPS_REL = 1e-12


def _next_pow2(k: int) -> int:
    p = 1
    while p < k:
        p <<= 1
    return p


def _tree_reduce(p):
    """Reduce axis 0 of ``p`` by the fixed pairwise tree.

    The tree pads to the next power of two with zeros; its shape depends
    only on the axis length.  ``p`` may be 1-D or 2-D.
    """
    m = p.shape[0]
    if m == 1:
        return p[0].copy() if p.ndim > 1 else p[0]
    half = _next_pow2(m) >> 1
    tail = np.zeros((half,) + p.shape[1:], dtype=np.float64)
    tail[: m - half] = p[half:]
    w = p[:half] + tail
    while w.shape[0] > 1:
        h = w.shape[0] >> 1
        w = w[:h] + w[h:]
    return w[0]


def dot_tree(u, v):
    return float(_tree_reduce(u * v))


def mat_vec(a, x):
    return np.ascontiguousarray(_tree_reduce((a * x).T))


def mat_t_vec(a, y):
    return np.ascontiguousarray(_tree_reduce(a * y[:, None]))


def _mirror_upper(g):
    lower = np.tril_indices(g.shape[0], -1)
    g[lower] = g.T[lower]
    return np.asfortranarray(g)


def gram(a):
    return _mirror_upper(a @ a.T)


def scaled_gram(a, d):
    return _mirror_upper((a * d) @ a.T)


def cholesky_factor(g, eps_rel):
    """Left-looking Cholesky of ``g``; returns ``(L, fail_index)``.

    ``fail_index`` is the first column whose pivot fell at or below
    ``eps_rel * max(diag(g), 0)``, or -1 on success.
    """
    n = g.shape[0]
    eps_spd = eps_rel * max(float(np.max(np.diagonal(g))), 0.0)
    low = np.zeros((n, n), dtype=np.float64, order="F")
    for j in range(n):
        s = g[j, j] - low[j, :j] @ low[j, :j]
        if not np.isfinite(s) or s <= eps_spd:
            return low, j
        piv = np.sqrt(s)
        low[j, j] = piv
        if j + 1 < n:
            low[j + 1 :, j] = (g[j + 1 :, j] - low[j + 1 :, :j] @ low[j, :j]) / piv
    return low, -1


def cholesky_solve_many(low, b):
    """Solve (L L^T) X = B for a 2-D block of right-hand sides."""
    m = low.shape[0]
    x = np.array(b, dtype=np.float64, order="F", copy=True)
    for i in range(m):
        if i:
            x[i] -= low[i, :i] @ x[:i]
        x[i] /= low[i, i]
    for i in reversed(range(m)):
        if i + 1 < m:
            x[i] -= low[i + 1 :, i] @ x[i + 1 :]
        x[i] /= low[i, i]
    return x


def build_v(a, l0, dl, v):
    v[:] = a[:, l0] * (dl - 1.0)


def sweep_phase1(cols, v, inner, k0, k1):
    """inner[k] = dot_tree(v, cols[:, k]) for k in [k0, k1)."""
    inner[k0:k1] = _tree_reduce(v[:, None] * cols[:, k0:k1])


def sweep_phase2(cols, l0, inner, denom, k0, k1):
    """cols[:, k] -= (inner[k]/denom) * cols[:, l0] for k in [k0, k1).

    Caller guarantees k0 > l0 so the pivot column stays frozen.
    """
    f = inner[k0:k1] / denom
    cols[:, k0:k1] -= f[None, :] * cols[:, l0 : l0 + 1]


def solve_sweeps(cols, a, d, inner, v, workers):
    """Run the full rank-one cascade in place.

    Returns 0 on success or the 1-based step index at which the update
    denominator broke down.  ``workers`` is accepted for interface parity
    with the compiled core; this fallback always runs serially.
    """
    n = a.shape[1]
    for l0 in range(n):
        dl = d[l0]
        if dl == 1.0:
            continue
        build_v(a, l0, dl, v)
        sweep_phase1(cols, v, inner, l0, n + 1)
        denom = 1.0 + inner[l0]
        if abs(denom) <= DENOM_EPS_REL * (1.0 + abs(inner[l0])):
            return l0 + 1
        sweep_phase2(cols, l0, inner, denom, l0 + 1, n + 1)
    return 0

"""Adaptive Gauss-Kronrod (7/15) quadrature, batched over independent integrals.

All integrals in a batch are refined in lockstep: each round evaluates the
integrand once on every new panel of every unconverged integral, which keeps
the numpy calls few and large.
"""

import math
from dataclasses import dataclass

import numpy as np

_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])           # 15 nodes, ascending
KRONROD_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_W = np.zeros(15)
GAUSS_W[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])


@dataclass
class BatchResult:
    value: np.ndarray       # linear integral values (or their logs when log_values)
    abs_error: np.ndarray   # on the same scale as value (log: relative error)
    nodes: np.ndarray
    converged: np.ndarray


def integrate_batch(f, a, b, group, n_groups, rel_tol=1e-6, abs_tol=0.0,
                    log_values=False, max_rounds=60, max_nodes=2_000_000):
    """Integrate a family of 1-D integrands over unions of panels.

    ``f(x, g)`` returns integrand values at abscissae ``x`` for group ids
    ``g`` (linear values, or their logarithms when ``log_values``). Panels
    ``[a_i, b_i]`` belong to group ``group[i]``; a group's integral is the sum
    over its panels. With ``log_values`` each group is rescaled by the largest
    log-value seen in the first round, and ``value`` holds log-integrals.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    group = np.asarray(group, dtype=int)
    scale = np.zeros(n_groups)
    have_scale = np.zeros(n_groups, dtype=bool)

    nodes = np.zeros(n_groups, dtype=int)
    # live panels carry their estimates between rounds
    live_a = np.empty(0)
    live_b = np.empty(0)
    live_g = np.empty(0, dtype=int)
    live_K = np.empty(0)
    live_E = np.empty(0)
    new_a, new_b, new_g = a, b, group
    converged = np.zeros(n_groups, dtype=bool)

    for _ in range(max_rounds):
        if new_a.size:
            c = 0.5 * (new_a + new_b)
            h = 0.5 * (new_b - new_a)
            x = c[:, None] + h[:, None] * NODES[None, :]
            gg = np.broadcast_to(new_g[:, None], x.shape)
            vals = np.asarray(f(x.ravel(), gg.ravel()), dtype=float).reshape(x.shape)
            if log_values:
                fresh = ~have_scale[new_g]
                if np.any(fresh):
                    rowmax = np.max(np.where(np.isfinite(vals), vals, -np.inf), axis=1)
                    gmax = np.full(n_groups, -np.inf)
                    np.maximum.at(gmax, new_g[fresh], rowmax[fresh])
                    upd = ~have_scale & np.isfinite(gmax)
                    scale[upd] = gmax[upd]
                    have_scale |= upd
                with np.errstate(over="ignore", invalid="ignore"):
                    vals = np.exp(vals - scale[new_g][:, None])
                vals = np.where(np.isnan(vals), 0.0, vals)
            np.add.at(nodes, new_g, 15)
            K = h * (vals @ KRONROD_W)
            G = h * (vals @ GAUSS_W)
            live_a = np.concatenate([live_a, new_a])
            live_b = np.concatenate([live_b, new_b])
            live_g = np.concatenate([live_g, new_g])
            live_K = np.concatenate([live_K, K])
            live_E = np.concatenate([live_E, np.abs(K - G)])
        I = np.bincount(live_g, weights=live_K, minlength=n_groups)
        E = np.bincount(live_g, weights=live_E, minlength=n_groups)
        target = np.maximum(rel_tol * np.abs(I), abs_tol if not log_values else 0.0)
        converged = E <= target
        over_budget = nodes >= max_nodes
        settle = converged | over_budget
        if live_g.size == 0 or np.all(settle[live_g]):
            break
        # panels of settled groups are retired; the rest split where their error is large
        active = ~settle[live_g]
        npan = np.bincount(live_g[active], minlength=n_groups)
        share = target[live_g] / np.maximum(npan[live_g], 1) / 2.0
        width_ok = (live_b - live_a) > 1e-13 * (1.0 + np.abs(live_a))
        split = active & (live_E > share) & width_ok
        if not np.any(split):
            split = active & width_ok & (live_E >= _group_max(live_E, live_g, n_groups)[live_g])
            if not np.any(split):
                break
        keep = ~split
        mid = 0.5 * (live_a[split] + live_b[split])
        new_a = np.concatenate([live_a[split], mid])
        new_b = np.concatenate([mid, live_b[split]])
        new_g = np.concatenate([live_g[split], live_g[split]])
        live_a, live_b, live_g = live_a[keep], live_b[keep], live_g[keep]
        live_K, live_E = live_K[keep], live_E[keep]

    I = np.bincount(live_g, weights=live_K, minlength=n_groups)
    E = np.bincount(live_g, weights=live_E, minlength=n_groups)
    if log_values:
        with np.errstate(divide="ignore", invalid="ignore"):
            value = np.where(I > 0, np.log(np.where(I > 0, I, 1.0)) + scale, -np.inf)
            rel = np.where(I > 0, E / np.where(I > 0, I, 1.0), 0.0)
        return BatchResult(value, rel, nodes, converged)
    return BatchResult(I, E, nodes, converged)


def _group_max(v, g, n):
    out = np.full(n, -np.inf)
    np.maximum.at(out, g, v)
    return out


def integrate(f, a, b, rel_tol=1e-8, abs_tol=1e-14, panels=1, **kw):
    """Single adaptive integral of a vectorized ``f`` over ``[a, b]``.

    Returns ``(value, abs_error)``.
    """
    edges = np.linspace(a, b, panels + 1)
    res = integrate_batch(lambda x, g: f(x), edges[:-1], edges[1:],
                          np.zeros(panels, dtype=int), 1, rel_tol=rel_tol,
                          abs_tol=abs_tol, **kw)
    return float(res.value[0]), float(res.abs_error[0])


def panels_for(lo, hi, width):
    """Split ``[lo, hi]`` into equal panels no wider than ``width``."""
    k = max(1, int(math.ceil((hi - lo) / width)))
    e = np.linspace(lo, hi, k + 1)
    return e[:-1], e[1:]


def pairwise_sum(values):
    """Tree summation in index order; the result does not depend on chunking."""
    v = [float(x) for x in values]
    if not v:
        return 0.0
    while len(v) > 1:
        nxt = [v[i] + v[i + 1] for i in range(0, len(v) - 1, 2)]
        if len(v) % 2:
            nxt.append(v[-1])
        v = nxt
    return v[0]

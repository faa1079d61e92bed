"""Lebesgue measure of sub-level sets ``|{u < t}|`` in R^{2n}.

Three routes, chosen by the symmetry of the spec:

* radial: ``{u < t}`` is a ball; its radius comes from bisection on the profile.
* toric: the 2n-dimensional volume collapses to an n-dimensional integral in
  log coordinates ``x_k = log|z_k|`` with weight ``(2 pi)^n exp(2 sum x)``.
  The last coordinate is integrated exactly (the slice ``{x_n : g < t}`` is a
  half-line because g is nondecreasing), the others adaptively.
* S^1-invariant: stratified Monte Carlo over geometric radius shells.

Volumes are carried as logarithms as well, since deep sub-level sets of
Kiselman-type functions have measures far below the double range.
"""

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import PshError, ToleranceNotMet
from .model import X_NEG, Symmetry, ball_volume, real_to_complex
from .quadrature import integrate_batch, panels_for, pairwise_sum

log = logging.getLogger(__name__)

RADIAL_EXACT = "RADIAL_EXACT"
TORIC_QUADRATURE = "TORIC_QUADRATURE"
MONTE_CARLO = "MONTE_CARLO"


@dataclass(frozen=True)
class VolumeConfig:
    rel_tol: float = 1e-6
    mc_samples: int = 1_000_000
    mc_shells: int = 32
    mc_depth: float = 8.0        # innermost shell radius is R0 * exp(-mc_depth)
    seed: int = 0
    workers: int = 1
    max_nodes: int = 400_000


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    abs_error: float
    method: str
    samples_or_nodes: int
    log_value: float
    empty: bool = False
    failed: Optional[str] = None

    @property
    def rel_error(self):
        if self.value > 0:
            return self.abs_error / self.value
        return 0.0 if self.empty else math.inf

    def to_dict(self):
        return {"value": self.value, "abs_error": self.abs_error, "method": self.method,
                "samples_or_nodes": self.samples_or_nodes, "log_value": self.log_value,
                "empty": self.empty, "failed": self.failed}


def _estimate(log_value, rel_err, method, nodes):
    if log_value == -math.inf:
        return VolumeEstimate(0.0, 0.0, method, int(nodes), -math.inf, empty=True)
    value = math.exp(log_value) if log_value > -745 else 0.0
    abs_err = min(value, value * rel_err)
    return VolumeEstimate(value, abs_err, method, int(nodes), float(log_value))


# ---------------------------------------------------------------------------
# monotone root finding, vectorized over lanes


def last_below(fun, t, hi, max_iter=80):
    """Per lane, ``sup{x <= hi : fun(x) < t}`` for ``fun`` nondecreasing in x.

    ``fun`` maps an array of abscissae (one per lane) to values. Returns
    ``(h, width)``: ``h = hi`` when the whole half-line qualifies, ``-inf``
    when nothing does. ``width`` bounds the bisection error.
    """
    t = np.asarray(t, dtype=float)
    hi = np.broadcast_to(np.asarray(hi, dtype=float), t.shape).copy()
    h = np.full(t.shape, np.nan)
    width = np.zeros(t.shape)
    f_hi = fun(hi, np.arange(t.size))
    full = f_hi < t
    h[full] = hi[full]
    todo = np.flatnonzero(~full)
    if todo.size == 0:
        return h, width
    # bracket below by doubling steps, then the far sentinel
    lo = np.full(t.shape, np.nan)
    top = hi.copy()
    step = np.ones(t.shape)
    pending = todo
    for _ in range(64):
        if pending.size == 0:
            break
        cand = hi[pending] - step[pending]
        ok = fun(cand, pending) < t[pending]
        lo[pending[ok]] = cand[ok]
        top[pending[~ok]] = cand[~ok]
        step[pending] *= 2.0
        pending = pending[~ok]
    if pending.size:
        cand = np.full(pending.size, X_NEG)
        ok = fun(cand, pending) < t[pending]
        lo[pending[ok]] = X_NEG
        h[pending[~ok]] = -np.inf
    active = todo[~np.isnan(lo[todo])]
    a, b = lo[active], top[active]
    for _ in range(max_iter):
        if active.size == 0:
            break
        mid = 0.5 * (a + b)
        below = fun(mid, active) < t[active]
        a = np.where(below, mid, a)
        b = np.where(below, b, mid)
        if np.all(b - a <= 1e-14 * (1.0 + np.abs(a))):
            break
    h[active] = a
    width[active] = b - a
    return h, width


# ---------------------------------------------------------------------------
# radial


def _radial_log_volumes(spec, ts):
    n = spec.dimension
    logR = spec.log_radius
    lanes = np.asarray(ts, dtype=float)
    h, width = last_below(lambda x, idx: spec.profile(x), lanes, np.full(lanes.shape, logR))
    out = []
    log_a = math.log(ball_volume(2 * n))
    for hj, wj in zip(h, width):
        if hj == -np.inf:
            out.append(_estimate(-math.inf, 0.0, RADIAL_EXACT, 0))
        else:
            lv = log_a + 2 * n * hj
            out.append(_estimate(lv, 2 * n * wj, RADIAL_EXACT, 1))
    return out


# ---------------------------------------------------------------------------
# toric


def _toric_log_volumes(spec, ts, cfg):
    n = spec.dimension
    if n == 1:
        return _toric_1d(spec, ts)
    if n == 2:
        return _toric_2d(spec, ts, cfg)
    return [_toric_nd(spec, t, cfg) for t in ts]


def _toric_1d(spec, ts):
    logR = spec.log_radius
    lanes = np.asarray(ts, dtype=float)
    h, width = last_below(lambda x, idx: spec.toric(x[np.newaxis]), lanes, np.full(lanes.shape, logR))
    out = []
    for hj, wj in zip(h, width):
        if hj == -np.inf:
            out.append(_estimate(-math.inf, 0.0, TORIC_QUADRATURE, 0))
        else:
            out.append(_estimate(math.log(math.pi) + 2 * hj, 2 * wj, TORIC_QUADRATURE, 1))
    return out


def _ball_top(logR, x):
    """Largest log|z_2| allowed inside the ball given log|z_1| = x."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return 0.5 * np.log(np.maximum(math.exp(2 * logR) - np.exp(2 * x), 0.0)) \
            if logR < 300 else np.full_like(x, logR)


def _toric_2d(spec, ts, cfg):
    logR = spec.log_radius
    ts = np.asarray(ts, dtype=float)
    m = ts.size
    g = spec.toric

    # support in x1: g(x1, -inf) < t
    x1_star, _ = last_below(lambda x, idx: g(np.stack([x, np.full_like(x, X_NEG)])),
                            ts, np.full(m, logR))
    results = [None] * m
    live = np.flatnonzero(x1_star > -np.inf)
    for j in np.flatnonzero(x1_star == -np.inf):
        results[j] = _estimate(-math.inf, 0.0, TORIC_QUADRATURE, 0)
    if live.size == 0:
        return results

    log_const = math.log(2 * math.pi ** 2)

    def log_integrand(x1, grp):
        tl = ts[live[grp]]
        top = _ball_top(logR, x1)
        inside = top > -np.inf

        def slice_fun(x2, idx):
            return g(np.stack([x1[idx], x2]))

        h = np.full(x1.shape, -np.inf)
        if np.any(inside):
            idx = np.flatnonzero(inside)
            hh, _ = last_below(lambda x2, k: slice_fun(x2, idx[k]), tl[idx], top[idx])
            h[idx] = hh
        with np.errstate(invalid="ignore"):
            s = np.minimum(h, top)
        return log_const + 2.0 * x1 + 2.0 * s

    upper = x1_star[live]
    lower = upper - 24.0
    log_vol = np.full(live.size, -np.inf)
    rel = np.zeros(live.size)
    nodes = np.zeros(live.size, dtype=int)
    conv = np.ones(live.size, dtype=bool)
    kinks = _slice_kinks(g, logR, ts[live], lower, upper)
    a_list, b_list, g_list = [], [], []
    for k in range(live.size):
        edges = [lower[k]] + kinks[k] + [upper[k]]
        for lo, hi in zip(edges[:-1], edges[1:]):
            if hi > lo:
                a, b = panels_for(lo, hi, 3.0)
                a_list.append(a)
                b_list.append(b)
                g_list.append(np.full(a.size, k))
    # tail bound for x1 < L: pi^2 R^2 exp(2L)
    log_tail_const = math.log(math.pi ** 2) + 2 * logR
    for _ in range(6):
        res = integrate_batch(log_integrand, np.concatenate(a_list), np.concatenate(b_list),
                              np.concatenate(g_list), live.size, rel_tol=cfg.rel_tol,
                              log_values=True, max_nodes=cfg.max_nodes)
        new_lv = np.logaddexp(log_vol, res.value)
        with np.errstate(invalid="ignore"):
            rel = np.where(np.isfinite(new_lv),
                           (rel * np.exp(log_vol - new_lv) if np.any(np.isfinite(log_vol)) else 0.0)
                           + res.abs_error * np.exp(res.value - new_lv), 0.0)
        rel = np.nan_to_num(rel)
        log_vol = new_lv
        nodes += res.nodes
        conv &= res.converged | ~np.isfinite(res.value)
        tail = log_tail_const + 2 * lower
        need = np.isfinite(log_vol) & (tail > log_vol + math.log(1e-3 * cfg.rel_tol))
        if not np.any(need):
            break
        a_list, b_list, g_list = [], [], []
        for k in np.flatnonzero(need):
            new_lower = 0.5 * (log_vol[k] + math.log(1e-3 * cfg.rel_tol) - log_tail_const) - 2.0
            new_lower = min(new_lower, lower[k] - 3.0)
            a, b = panels_for(new_lower, lower[k], 3.0)
            a_list.append(a)
            b_list.append(b)
            g_list.append(np.full(a.size, k))
            lower[k] = new_lower
    for k, j in enumerate(live):
        if not conv[k]:
            raise ToleranceNotMet(
                f"{spec.name}: toric quadrature at t={ts[j]:.6g} stopped at relative "
                f"error {rel[k]:.3g} after {nodes[k]} nodes")
        results[j] = _estimate(float(log_vol[k]), float(rel[k]), TORIC_QUADRATURE, nodes[k])
    return results


def _slice_kinks(g, logR, ts, lower, upper, samples=2048):
    """Per level, the x1 where the slice {g < t} switches between the full ball chord and a partial one.

    These are the sign changes of ``g(x1, top(x1)) - t``; the integrand has a
    kink there that adaptive rules can step over when it sits near a panel end.
    """
    m = ts.size
    # uniform in x1, plus a geometric approach to the upper end where the ball
    # boundary squeezes the slice
    frac = np.unique(np.concatenate([np.linspace(0.0, 1.0, samples),
                                     1.0 - np.geomspace(1e-12, 0.05, 256)]))
    x = lower[:, None] + (upper - lower)[:, None] * frac[None, :]
    top = _ball_top(logR, x)
    with np.errstate(invalid="ignore"):
        phi = g(np.stack([x.ravel(), top.ravel()])).reshape(x.shape) - ts[:, None]
    sign = phi < 0
    out = [[] for _ in range(m)]
    rows, cols = np.nonzero(sign[:, 1:] != sign[:, :-1])
    if rows.size == 0:
        return out
    a, b = x[rows, cols], x[rows, cols + 1]
    sa = sign[rows, cols]
    tl = ts[rows]
    for _ in range(60):
        mid = 0.5 * (a + b)
        with np.errstate(invalid="ignore"):
            sm = (g(np.stack([mid, _ball_top(logR, mid)])) - tl) < 0
        same = sm == sa
        a = np.where(same, mid, a)
        b = np.where(same, b, mid)
    for r, k in zip(rows, 0.5 * (a + b)):
        out[r].append(float(k))
    return out


def _toric_nd(spec, t, cfg):
    """n >= 3: nested adaptive quadrature over x_1..x_{n-1}, exact last slice."""
    n = spec.dimension
    logR = spec.log_radius
    g = spec.toric
    R2 = math.exp(2 * logR)

    def inner(prefix, rem):
        # prefix: (k, m) fixed coordinates; rem: remaining squared radius per lane
        k, m = prefix.shape
        if k == n - 1:
            with np.errstate(divide="ignore"):
                top = 0.5 * np.log(rem)

            def fun(x, idx):
                pts = np.concatenate([prefix[:, idx], x[np.newaxis]], axis=0)
                return g(pts)

            h, _ = last_below(fun, np.full(m, t), top)
            s = np.minimum(h, top)
            return math.log(math.pi) + 2 * s
        out = np.empty(m)
        for i in range(m):
            top_i = 0.5 * math.log(rem[i]) if rem[i] > 0 else -math.inf
            if top_i == -math.inf:
                out[i] = -math.inf
                continue

            def f(x, grp, i=i):
                pre = np.repeat(prefix[:, i:i + 1], x.size, axis=1)
                pts = np.concatenate([pre, x[np.newaxis]], axis=0)
                return math.log(2 * math.pi) + 2 * x + inner(pts, rem[i] - np.exp(2 * x))

            a, b = panels_for(top_i - 30.0, top_i, 3.0)
            res = integrate_batch(f, a, b, np.zeros(a.size, dtype=int), 1,
                                  rel_tol=cfg.rel_tol, log_values=True, max_nodes=cfg.max_nodes)
            out[i] = res.value[0]
        return out

    lv = inner(np.empty((0, 1)), np.array([R2]))[0]
    return _estimate(float(lv), cfg.rel_tol, TORIC_QUADRATURE, 0)


# ---------------------------------------------------------------------------
# Monte Carlo


def shell_radii(R, shells, depth):
    """Geometric shell boundaries from R down to R exp(-depth), then 0."""
    inner = R * np.exp(-depth * np.arange(shells) / (shells - 1)) if shells > 1 else np.array([R])
    return np.concatenate([inner, [0.0]])


def stratum_points(n, r_hi, r_lo, count, seed, index, chunk=200_000):
    """Uniform points (2n real coordinates) in the shell ``r_lo <= |x| < r_hi``.

    The stream is keyed by ``(seed, index)`` so every stratum is reproducible
    on its own; chunks are yielded in a fixed order.
    """
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, index], dtype=np.uint64)))
    left = count
    while left > 0:
        k = min(chunk, left)
        w = rng.standard_normal((2 * n, k))
        w /= np.linalg.norm(w, axis=0)
        u = rng.uniform(size=k)
        r = (r_lo ** (2 * n) + u * (r_hi ** (2 * n) - r_lo ** (2 * n))) ** (1.0 / (2 * n))
        yield w * r
        left -= k


def _stratum_values(spec, r_hi, r_lo, count, seed, index):
    n = spec.dimension
    vals = [spec.at_points(real_to_complex(x, n))
            for x in stratum_points(n, r_hi, r_lo, count, seed, index)]
    return np.sort(np.concatenate(vals))


def mc_integral(spec, fun, cfg, center=None, radius=None, label=0):
    """Stratified Monte Carlo estimate of ``int_B fun(u, z) dx`` over a ball.

    ``fun`` maps (values, complex points) to integrand values. Returns
    ``(value, three_sigma)``.
    """
    n = spec.dimension
    R = spec.domain_radius if radius is None else radius
    c = np.zeros((2 * n, 1)) if center is None else np.asarray(center, dtype=float).reshape(2 * n, 1)
    radii = shell_radii(R, cfg.mc_shells - 1, cfg.mc_depth) if cfg.mc_shells > 1 else np.array([R, 0.0])
    strata = len(radii) - 1
    per = max(2, cfg.mc_samples // strata)
    a = ball_volume(2 * n)
    parts, var_parts = [], []
    for i in range(strata):
        vol = a * (radii[i] ** (2 * n) - radii[i + 1] ** (2 * n))
        vals = []
        for x in stratum_points(n, radii[i], radii[i + 1], per, cfg.seed, 1000 * (label + 1) + i):
            z = real_to_complex(x + c, n)
            vals.append(np.asarray(fun(spec.at_points(z), z), dtype=float))
        v = np.concatenate(vals)
        parts.append(vol * float(np.mean(v)))
        var_parts.append(vol ** 2 * float(np.var(v)) / per)
    return pairwise_sum(parts), 3.0 * math.sqrt(pairwise_sum(var_parts))


def _mc_log_volumes(spec, ts, cfg):
    n = spec.dimension
    radii = shell_radii(spec.domain_radius, cfg.mc_shells - 1, cfg.mc_depth) if cfg.mc_shells > 1 \
        else np.array([spec.domain_radius, 0.0])
    strata = len(radii) - 1
    per = max(1, cfg.mc_samples // strata)
    a = ball_volume(2 * n)
    shell_vol = [a * (radii[i] ** (2 * n) - radii[i + 1] ** (2 * n)) for i in range(strata)]

    def run(i):
        return _stratum_values(spec, radii[i], radii[i + 1], per, cfg.seed, i)

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            sorted_vals = list(pool.map(run, range(strata)))
    else:
        sorted_vals = [run(i) for i in range(strata)]
    out = []
    for t in ts:
        counts = [int(np.searchsorted(v, t, side="left")) for v in sorted_vals]
        parts = [shell_vol[i] * counts[i] / per for i in range(strata)]
        var_parts = []
        for i in range(strata):
            p = (counts[i] + 0.5) / (per + 1.0)
            var_parts.append(shell_vol[i] ** 2 * p * (1 - p) / per)
        value = pairwise_sum(parts)
        err = 3.0 * math.sqrt(pairwise_sum(var_parts))
        if value <= 0:
            out.append(VolumeEstimate(0.0, err, MONTE_CARLO, per * strata, -math.inf, empty=True))
        else:
            out.append(VolumeEstimate(value, err, MONTE_CARLO, per * strata, math.log(value)))
    return out


# ---------------------------------------------------------------------------
# public API


def default_method(spec):
    return {Symmetry.RADIAL: RADIAL_EXACT, Symmetry.TORIC: TORIC_QUADRATURE,
            Symmetry.S1_INVARIANT: MONTE_CARLO}[spec.symmetry]


def sublevel_volumes(spec, ts, cfg=None, method=None):
    """Volume estimates for several levels at once (same order as ``ts``)."""
    cfg = cfg or VolumeConfig()
    method = method or default_method(spec)
    ts = [float(t) for t in ts]
    if not ts:
        return []
    if method == RADIAL_EXACT:
        return _radial_log_volumes(spec, ts)
    if method == TORIC_QUADRATURE:
        return _toric_log_volumes(spec, ts, cfg)
    if method == MONTE_CARLO:
        return _mc_log_volumes(spec, ts, cfg)
    raise ValueError(f"unknown volume method {method!r}")


def sublevel_volume(spec, t, cfg=None, method=None):
    """|{u < t}| for one level."""
    return sublevel_volumes(spec, [t], cfg, method)[0]


def volume_profile(spec, t_grid, cfg=None, method=None):
    """Volumes along a strictly decreasing level grid, made nonincreasing post hoc.

    Failed points are marked (``failed`` set) and do not abort the series.
    """
    t_grid = [float(t) for t in t_grid]
    if not t_grid:
        return []
    if any(b >= a for a, b in zip(t_grid, t_grid[1:])):
        raise ValueError("t_grid must be strictly decreasing")
    try:
        ests = sublevel_volumes(spec, t_grid, cfg, method)
    except PshError:
        ests = []
        for t in t_grid:
            try:
                ests.append(sublevel_volume(spec, t, cfg, method))
            except PshError as err:
                ests.append(VolumeEstimate(math.nan, math.nan, method or default_method(spec),
                                           0, math.nan, failed=err.code))
    out = []
    prev = None
    for t, e in zip(t_grid, ests):
        if e.failed is None and prev is not None and e.log_value > prev.log_value:
            log.info("volume_profile: t=%.6g adjusted from %.17g to %.17g", t, e.value, prev.value)
            e = VolumeEstimate(prev.value, max(e.abs_error, prev.abs_error), e.method,
                               e.samples_or_nodes, prev.log_value, prev.empty)
        if e.failed is None:
            prev = e
        out.append((t, e))
    return out


def profile_csv(rows):
    """CSV text (LF endings, 17 significant digits) for ``volume_profile`` output."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "volume", "abs_error", "method", "nodes"])
    for t, e in rows:
        w.writerow([format(t, ".17g"), format(e.value, ".17g"), format(e.abs_error, ".17g"),
                    e.method, e.samples_or_nodes])
    return buf.getvalue()

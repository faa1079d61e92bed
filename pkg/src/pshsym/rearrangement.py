"""Increasing rearrangement, Schwarz symmetrization and the checks around them.

The distribution function ``mu(t) = |{u < t}|`` is sampled on a level grid
and inverted into ``u_*(s) = inf{t : mu(t) > s}``. The symmetrization is the
radial function with profile ``f_hat(t) = u_*(a_2n exp(2 n t))``; in the
profile variable its knots are simply ``((log mu_j - log a_2n) / 2n, t_j)``.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvexityViolation, GridTooCoarse, NumericalGradientUnstable, PshError
from .model import (FunctionSpec, PointEvaluator, PoleStructure, RadialProfile,
                    Symmetry, ToricProfile, ball_volume, real_to_complex,
                    sample_boundary_inf)
from .quadrature import integrate, integrate_batch
from .slopes import SlopePolicy
from .volume import (VolumeConfig, last_below, mc_integral, sublevel_volume,
                     sublevel_volumes, volume_profile)

log = logging.getLogger(__name__)

LINEAR = "linear"
STEP = "step"


# ---------------------------------------------------------------------------
# monotone tables


@dataclass(frozen=True)
class MonotoneTable:
    """Nondecreasing piecewise table ``s -> v`` on ``[0, total]``.

    Breakpoints are stored as ``log s`` because deep sub-level sets have
    masses far below the double range. Between breakpoints the table is
    linear in ``log s`` (that is, linear in the symmetrized profile
    variable); the first stretch out of ``s = 0`` is linear in ``s`` when
    ``v[0]`` is finite. With ``v[0] = -inf`` the stretch below the first
    positive breakpoint continues with the slope ``log_slope`` in ``log s``.
    """

    log_s: tuple
    v: tuple
    total: float
    mode: str = LINEAR
    log_slope: float = 0.0

    @property
    def s(self):
        return tuple(math.exp(x) if x > -745 else 0.0 for x in self.log_s)

    def arrays(self):
        return np.asarray(self.log_s, dtype=float), np.asarray(self.v, dtype=float)

    def value_log(self, log_q):
        """``u_*`` at ``s = exp(log_q)``."""
        ls, v = self.arrays()
        q = np.atleast_1d(np.asarray(log_q, dtype=float))
        if self.mode == STEP:
            idx = np.searchsorted(ls, q, side="right")
            out = v[np.minimum(idx, len(v) - 1)]
        else:
            out = np.interp(q, ls[1:], v[1:]) if len(v) > 2 else np.full(q.shape, v[-1])
            if len(v) > 1:
                below = q < ls[1]
                if np.isfinite(v[0]):
                    frac = np.exp(np.minimum(q - ls[1], 0.0))
                    out = np.where(below, v[0] + frac * (v[1] - v[0]), out)
                else:
                    out = np.where(below, v[1] + self.log_slope * (q - ls[1]), out)
        return out if np.ndim(log_q) else float(out[0])

    def __call__(self, s_query):
        s_query = np.asarray(s_query, dtype=float)
        with np.errstate(divide="ignore"):
            return self.value_log(np.log(s_query))

    def log_measure_below(self, t_query):
        """``log |{u_* < t}|`` (``-inf`` when empty)."""
        ls, v = self.arrays()
        q = np.atleast_1d(np.asarray(t_query, dtype=float))
        out = np.empty_like(q)
        j = np.searchsorted(v, q, side="left")
        for i, (tq, ji) in enumerate(zip(q, j)):
            if ji == 0:
                out[i] = -np.inf
            elif ji >= len(v):
                out[i] = ls[-1]
            elif ji == 1 and v[0] == -np.inf:
                out[i] = ls[1] + (tq - v[1]) / self.log_slope if self.log_slope > 0 else -np.inf
            elif self.mode == STEP:
                out[i] = ls[ji - 1]
            elif ji == 1:
                frac = (tq - v[0]) / (v[1] - v[0])
                out[i] = ls[1] + math.log(frac) if frac > 0 else -np.inf
            else:
                frac = (tq - v[ji - 1]) / (v[ji] - v[ji - 1])
                out[i] = ls[ji - 1] + frac * (ls[ji] - ls[ji - 1])
        return out if np.ndim(t_query) else float(out[0])

    def measure_below(self, t_query):
        """``|{u_* < t}| = sup{s : u_*(s) < t}``."""
        with np.errstate(under="ignore"):
            return np.exp(self.log_measure_below(t_query))

    @property
    def ess_inf(self):
        return float(self.v[0])

    def to_dict(self):
        return {"mode": self.mode, "total": self.total, "log_slope": self.log_slope,
                "breakpoints": [[_json_float(a), _json_float(b)] for a, b in zip(self.s, self.v)],
                "log_s": [_json_float(a) for a in self.log_s]}


def _json_float(x):
    return "-inf" if x == -math.inf else float(x)


@dataclass(frozen=True)
class SymmetrizationResult:
    source: FunctionSpec
    u_star: MonotoneTable
    u_hat: RadialProfile
    t_grid: tuple
    volumes: tuple
    windows: tuple = ()              # (levels, log_mu, rel_err) per slope window
    checks: dict = field(default_factory=dict)

    @property
    def dimension(self):
        return self.source.dimension

    def profile(self, t):
        return self.u_hat(t)

    def spec(self):
        """The symmetrized function as a radial FunctionSpec."""
        s = self.source
        pole = PoleStructure.SINGLE_POLE_AT_ORIGIN if self.u_star.ess_inf == -math.inf \
            else PoleStructure.NO_POLE
        return FunctionSpec(dimension=s.dimension, symmetry=Symmetry.RADIAL, body=self.u_hat,
                            domain_radius=s.domain_radius, extension_margin=s.extension_margin,
                            pole_structure=pole, name=f"{s.name}-hat",
                            boundary_sup=float(self.u_hat(np.array([s.log_radius]))[0]))

    def to_dict(self):
        kt, kf = self.u_hat.knot_arrays()
        return {"source_name": self.source.name,
                "t_grid": [float(t) for t in self.t_grid],
                "u_star_breakpoints": self.u_star.to_dict()["breakpoints"],
                "u_hat_profile_knots": [[float(a), float(b)] for a, b in zip(kt, kf)],
                "checks": self.checks}


# ---------------------------------------------------------------------------
# level grids and inversion


def default_levels(spec, policy=None, uniform=200, near=150, depth=30.0):
    """Level grid (strictly decreasing) for symmetrization work.

    Uniform levels from ``sup - 0.05`` down to ``sup - depth``, a denser band
    within 3 of the sup, a geometric approach to the sup, and the slope
    windows of ``policy``.
    """
    policy = policy or SlopePolicy()
    sup = spec.boundary_sup
    parts = [sup - np.linspace(0.05, depth, uniform),
             sup - np.linspace(0.01, 3.0, near),
             sup - np.geomspace(1e-4, 1e-2, 12)]
    for lo, hi in policy.windows():
        parts.append(np.linspace(lo, hi, policy.points))
    levels = np.unique(np.concatenate(parts))[::-1]
    return [float(t) for t in levels if t < sup]


def _window_levels(policy):
    return [np.linspace(lo, hi, policy.points) for lo, hi in policy.windows()]


def _is_zero(est):
    return est.empty or est.log_value == -math.inf


def _ess_inf(spec, zero_t, pos_t, cfg, iters=60):
    """Bisect for the boundary between empty and nonempty sub-level sets."""
    lo, hi = zero_t, pos_t
    for _ in range(iters):
        if hi - lo <= 1e-10 * (1.0 + abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        if _is_zero(sublevel_volume(spec, mid, cfg)):
            lo = mid
        else:
            hi = mid
    return hi


def _rearrange(spec, t_grid, cfg, mode=LINEAR, max_gap=1.0, probe=True):
    t_grid = [float(t) for t in t_grid]
    rows = volume_profile(spec, t_grid, cfg)
    total = spec.volume
    log_total = math.log(total)
    good = [(t, e) for t, e in rows if e.failed is None]
    if not good:
        raise PshError(f"{spec.name}: every volume evaluation failed")
    asc = good[::-1]
    zero = [t for t, e in asc if _is_zero(e)]
    pos = [(t, e) for t, e in asc
           if not _is_zero(e) and e.log_value < log_total + math.log1p(-1e-12)]
    sup = max(spec.boundary_sup, asc[-1][0])

    ls, vs = [-math.inf], []
    if zero:
        hi = pos[0][0] if pos else sup
        v0 = _ess_inf(spec, max(zero), hi, cfg)
        vs.append(v0)
        # a plateau keeps its mass as the offset shrinks; a continuous start
        # loses it like a power of the offset
        jump = sublevel_volume(spec, v0 + 1e-9 * (1.0 + abs(v0)), cfg)
        wide = sublevel_volume(spec, v0 + 1e-6 * (1.0 + abs(v0)), cfg)
        if (not _is_zero(jump) and wide.log_value - jump.log_value < 0.1
                and (not pos or jump.log_value < pos[0][1].log_value)):
            # u has a plateau at its ess inf: u_* stays flat up to that mass
            ls.append(jump.log_value)
            vs.append(v0)
    else:
        vs.append(-math.inf)
    for t, e in pos:
        if e.log_value <= ls[-1]:
            # equal masses: keep the largest level (u_* jumps over the gap)
            if len(ls) > 1 and e.log_value == ls[-1]:
                vs[-1] = t
            continue
        ls.append(e.log_value)
        vs.append(t)
    if sup > vs[-1] or len(ls) == 1:
        ls.append(log_total)
        vs.append(max(sup, vs[-1]))
    else:
        ls[-1] = log_total

    log_slope = 0.0
    if vs[0] == -math.inf and len(ls) > 2:
        log_slope = (vs[2] - vs[1]) / (ls[2] - ls[1])
    table = MonotoneTable(tuple(ls), tuple(vs), total, mode, float(log_slope))
    if probe:
        _coarseness_probe(spec, table, cfg, max_gap)
    return table, rows


def _coarseness_probe(spec, table, cfg, max_gap):
    """Refine the widest level gaps once and compare against interpolation."""
    ls, v = table.arrays()
    finite = np.isfinite(v[:-1]) & np.isfinite(ls[:-1])
    gaps = np.flatnonzero(finite & (np.diff(v) > max_gap) & (np.diff(ls) > 0))
    if gaps.size == 0:
        return
    mids = 0.5 * (v[gaps] + v[gaps + 1])
    est = sublevel_volumes(spec, mids, cfg)
    for i, m, e in zip(gaps, mids, est):
        lin = table.log_measure_below(m)
        miss = abs(lin - e.log_value) / (ls[i + 1] - ls[i])
        if not miss <= 0.25:
            raise GridTooCoarse(
                f"{spec.name}: level gap {v[i + 1] - v[i]:.3g} between {v[i]:.6g} and "
                f"{v[i + 1]:.6g} misplaces the midpoint mass by {miss:.0%} of the gap",
                witness={"levels": [float(v[i]), float(v[i + 1])], "probe": float(m),
                         "log_mass_probe": e.log_value, "log_mass_interpolated": float(lin)})


def increasing_rearrangement(spec, t_grid, cfg=None, mode=LINEAR, max_gap=1.0):
    """``u_*`` as a :class:`MonotoneTable` from volumes on a decreasing level grid."""
    table, _ = _rearrange(spec, t_grid, cfg or VolumeConfig(), mode, max_gap)
    return table


# ---------------------------------------------------------------------------
# symmetrization


def _hat_knots(table, n, logR):
    ls, v = table.arrays()
    log_a = math.log(ball_volume(2 * n))
    inner = np.isfinite(ls) & (np.arange(ls.size) < ls.size - 1)
    th = (ls[inner] - log_a) / (2 * n)
    fv = v[inner]
    if th.size and np.isfinite(v[0]):
        # bounded below: sample the stretch out of (0, v0) on a few log steps
        extra_t = th[0] - np.array([8.0, 4.0, 2.0, 1.0, 0.5, 0.25])
        extra_v = table.value_log(2 * n * extra_t + log_a)
        th = np.concatenate([extra_t, th])
        fv = np.concatenate([extra_v, fv])
    elif not th.size:
        th = np.array([logR - 1.0])
        fv = np.array([v[0] if np.isfinite(v[0]) else v[-1]])
    th = np.concatenate([th, [logR]])
    fv = np.concatenate([fv, [v[-1]]])
    keep = np.concatenate([np.diff(th) > 1e-15 * (1 + np.abs(th[:-1])), [True]])
    return th[keep], fv[keep]


def convexity_excess(t, f, tol=1e-5, t_err=None):
    """Worst violation of convexity over consecutive knot triples.

    Returns ``(index, excess, allowed)`` for the worst triple (relative to
    its allowance), or ``None`` when there are fewer than three knots.
    """
    t = np.asarray(t, dtype=float)
    f = np.asarray(f, dtype=float)
    if t.size < 3:
        return None
    t1, t2, t3 = t[:-2], t[1:-1], t[2:]
    f1, f2, f3 = f[:-2], f[1:-1], f[2:]
    lam = (t2 - t1) / (t3 - t1)
    chord = (1 - lam) * f1 + lam * f3
    excess = f2 - chord
    allowed = tol * (1.0 + np.abs(f2))
    if t_err is not None:
        slope = np.abs((f3 - f1) / (t3 - t1)) + np.abs((f2 - f1) / (t2 - t1)) + np.abs((f3 - f2) / (t3 - t2))
        e = np.maximum.reduce([t_err[:-2], t_err[1:-1], t_err[2:]])
        allowed = allowed + 2.0 * slope * e
    i = int(np.argmax(excess - allowed))
    return i, float(excess[i]), float(allowed[i])


def schwarz_symmetrize(spec, t_grid=None, cfg=None, policy=None, mode=LINEAR,
                       max_gap=1.0, check=True):
    """Schwarz symmetrization of ``spec``.

    The profile is kept on its natural (non-uniform) knots; use
    :func:`resample` for a uniform grid. Raises ConvexityViolation when the
    profile fails the convexity test beyond the volume-error allowance.
    """
    cfg = cfg or VolumeConfig()
    policy = policy or SlopePolicy()
    if t_grid is None:
        t_grid = default_levels(spec, policy)
    table, rows = _rearrange(spec, t_grid, cfg, mode, max_gap)
    n = spec.dimension
    th, fv = _hat_knots(table, n, spec.log_radius)
    profile = RadialProfile(knots=tuple(zip(th.tolist(), fv.tolist())), t_min=float(th[0]))

    checks = {}
    if check:
        level_err = {t: e.rel_error for t, e in rows if e.failed is None}
        t_err = np.array([level_err.get(v, 0.0) / (2 * n) for v in fv])
        worst = convexity_excess(th, fv, t_err=t_err)
        mono = bool(np.all(np.diff(fv) >= -1e-12 * (1 + np.abs(fv[1:]))))
        checks["convexity"] = {"worst_excess": worst[1] if worst else 0.0,
                               "allowed": worst[2] if worst else 0.0,
                               "knots": int(th.size), "monotone": mono}
        if worst and worst[1] > worst[2]:
            i = worst[0]
            raise ConvexityViolation(
                f"{spec.name}: symmetrized profile is not convex (excess {worst[1]:.3g} "
                f"at t = {th[i + 1]:.6g})",
                witness={"t": th[i:i + 3].tolist(), "f": fv[i:i + 3].tolist(),
                         "excess": worst[1]})
        if not mono:
            raise ConvexityViolation(f"{spec.name}: symmetrized profile decreases")

    windows = []
    by_level = {t: e for t, e in rows}
    for lv in _window_levels(policy):
        est = [by_level.get(float(t)) for t in lv]
        lm = np.array([e.log_value if e is not None and e.failed is None else np.nan for e in est])
        re = np.array([e.rel_error if e is not None and e.failed is None else np.nan for e in est])
        windows.append((lv, lm, re))
    return SymmetrizationResult(source=spec, u_star=table, u_hat=profile,
                                t_grid=tuple(float(t) for t in t_grid),
                                volumes=tuple(e for _, e in rows),
                                windows=tuple(windows), checks=checks)


def resample(result, t_grid):
    """The symmetrized profile on another grid (linear interpolation of the knots)."""
    return result.u_hat(np.asarray(t_grid, dtype=float))


# ---------------------------------------------------------------------------
# derived specs


def compose(spec, G, name=None):
    """``G o u`` for a nondecreasing scalar map ``G`` (vectorized)."""
    if spec.symmetry is Symmetry.RADIAL:
        body = RadialProfile(func=lambda t: G(spec.profile(t)), t_min=getattr(spec.body, "t_min", -40.0))
    elif spec.symmetry is Symmetry.TORIC:
        body = ToricProfile(arity=spec.dimension, func=lambda x: G(spec.toric(x)))
    else:
        body = PointEvaluator(func=lambda z: G(spec.at_points(z)))
    return FunctionSpec(dimension=spec.dimension, symmetry=spec.symmetry, body=body,
                        domain_radius=spec.domain_radius, extension_margin=spec.extension_margin,
                        pole_structure=spec.pole_structure, name=name or f"G({spec.name})",
                        boundary_sup=float(G(np.array([spec.boundary_sup]))[0]))


# ---------------------------------------------------------------------------
# integrals of functions of u


def _ball_top(logR, x):
    with np.errstate(divide="ignore", invalid="ignore"):
        return 0.5 * np.log(np.maximum(math.exp(2 * logR) - np.exp(2 * x), 0.0))


def log_coord_integral_2d(fun, logR, cut, rel_tol=1e-8, x2_lower=None, x2_upper=None):
    """``int fun(x1, x2) dx1 dx2`` over ``{x >= cut, e^{2x1} + e^{2x2} < R^2}``.

    ``x2_lower(x1)`` and ``x2_upper(x1)`` optionally narrow the x2 range.
    ``fun`` must already contain the ``(2 pi)^2 exp(2 x1 + 2 x2)`` weight.
    """

    def outer(x1):
        top = _ball_top(logR, x1)
        if x2_upper is not None:
            top = np.minimum(top, x2_upper(x1))
        lo = np.full_like(x1, cut)
        if x2_lower is not None:
            lo = np.maximum(lo, x2_lower(x1))
        out = np.zeros_like(x1)
        live = np.flatnonzero(top > lo)
        if live.size == 0:
            return out
        k = np.maximum(1, np.ceil((top[live] - lo[live]) / 2.0)).astype(int)
        grp = np.repeat(np.arange(live.size), k)
        start = np.repeat(lo[live], k)
        width = np.repeat((top[live] - lo[live]) / k, k)
        offs = np.concatenate([np.arange(m) for m in k])
        a = start + offs * width
        b = a + width
        res = integrate_batch(lambda x2, g: fun(x1[live][g], x2), a, b, grp, live.size,
                              rel_tol=rel_tol * 0.1, abs_tol=0.0)
        out[live] = res.value
        return out

    panels = max(1, int(math.ceil((logR - cut) / 2.0)))
    val, err = integrate(outer, cut, logR, rel_tol=rel_tol, abs_tol=0.0, panels=panels)
    return val, err


def integral_of_u(spec, F, cut=-40.0, rel_tol=1e-8, cfg=None, radius=None):
    """``int_{B_r} F(u) dx`` (``r`` defaults to the domain radius).

    Radial and 2-D toric specs use quadrature in log coordinates truncated at
    ``cut``; everything else uses stratified Monte Carlo. Returns
    ``(value, error, method)``.
    """
    n = spec.dimension
    R = spec.domain_radius if radius is None else radius
    logR = math.log(R)
    if spec.symmetry is Symmetry.RADIAL:
        a = ball_volume(2 * n)
        f = lambda t: F(spec.profile(t)) * 2 * n * a * np.exp(2 * n * t)
        v, e = integrate(f, cut, logR, rel_tol=rel_tol, abs_tol=0.0,
                         panels=max(1, int(math.ceil((logR - cut) / 2.0))))
        return v, e, "quadrature"
    if spec.symmetry is Symmetry.TORIC and n == 1:
        f = lambda x: F(spec.toric(x[np.newaxis])) * 2 * math.pi * np.exp(2 * x)
        v, e = integrate(f, cut, logR, rel_tol=rel_tol, abs_tol=0.0,
                         panels=max(1, int(math.ceil((logR - cut) / 2.0))))
        return v, e, "quadrature"
    if spec.symmetry is Symmetry.TORIC and n == 2:
        c = (2 * math.pi) ** 2

        def fun(x1, x2):
            with np.errstate(over="ignore", invalid="ignore"):
                return c * np.exp(2 * x1 + 2 * x2) * F(spec.toric(np.stack([x1, x2])))

        v, e = log_coord_integral_2d(fun, logR, cut, rel_tol)
        return v, e, "quadrature"
    v, e = mc_integral(spec, lambda u, z: F(u), cfg or VolumeConfig(), radius=R)
    return v, e, "monte_carlo"


def integral_of_hat(result, F, upper=None, cut=-40.0, rel_tol=1e-8, tail=True):
    """``int F(f_hat(t)) 2n a e^{2nt} dt`` over ``t <= upper``.

    Below the first knot the profile is linear with slope ``k``; with ``tail``
    the part below ``cut`` is added in closed form for ``F = exp(-2c .)``
    style integrands by a geometric continuation of the quadrature.
    Returns ``(value, error)``.
    """
    n = result.dimension
    a = ball_volume(2 * n)
    upper = result.source.log_radius if upper is None else upper
    kt, _ = result.u_hat.knot_arrays()
    edges = np.unique(np.concatenate([[cut], kt[(kt > cut) & (kt < upper)], [upper]]))

    def f(t):
        return F(result.u_hat(t)) * 2 * n * a * np.exp(2 * n * t)

    # piecewise-linear profile: integrate knot interval by knot interval
    res = integrate_batch(lambda t, g: f(t), edges[:-1], edges[1:],
                          np.zeros(edges.size - 1, dtype=int), 1, rel_tol=rel_tol, abs_tol=0.0,
                          max_nodes=4_000_000)
    return float(res.value[0]), float(res.abs_error[0])


# ---------------------------------------------------------------------------
# checks


def equimeasurability_check(spec, result, t_probe=None, cfg=None):
    """Compare ``|{u<t}|``, ``|{u_*<t}|`` and ``|{u_hat<t}|`` at probe levels."""
    cfg = cfg or VolumeConfig()
    sup = spec.boundary_sup
    if t_probe is None:
        # offset from the default level grid so that interpolation is exercised
        t_probe = np.linspace(sup - 2.987, sup - 0.053, 20)
    t_probe = [float(t) for t in t_probe]
    mu = sublevel_volumes(spec, t_probe, cfg)
    star = result.u_star.measure_below(np.asarray(t_probe))
    hat = sublevel_volumes(result.spec(), t_probe, cfg)
    rows = []
    worst = 0.0
    for t, m, s, h in zip(t_probe, mu, star, hat):
        vals = np.array([m.value, s, h.value])
        ref = max(vals.max(), 1e-300)
        gap = float((vals.max() - vals.min()) / ref) if vals.max() > 0 else 0.0
        worst = max(worst, gap)
        rows.append({"t": t, "mu_u": m.value, "mu_u_star": float(s), "mu_u_hat": h.value,
                     "mu_u_error": m.abs_error, "rel_discrepancy": gap})
    return {"probes": rows, "max_rel_discrepancy": worst}


def layer_cake_check(spec, result, F=None, c=0.0, cutoffs=(-20.0, -40.0, -80.0),
                     cfg=None, growth=1e-3):
    """Layer-cake identity ``int_Omega F(u) = int_0^|Omega| F(u_*(s)) ds``.

    With ``F`` omitted, ``F = exp(-2 c .)``. Both sides are evaluated with the
    deep region cut at each of ``cutoffs``; a side whose value keeps growing
    by more than ``growth`` (relative) as the cut deepens is flagged divergent.
    """
    if F is None:
        F = lambda u: np.exp(-2.0 * c * np.asarray(u))
    lhs, rhs = [], []
    # divergent integrands overflow by design; the growth test reads the infs
    with np.errstate(over="ignore", invalid="ignore"):
        for cut in cutoffs:
            v, e, method = integral_of_u(spec, F, cut=cut, cfg=cfg)
            lhs.append(v)
            w, _ = integral_of_hat(result, F, cut=cut)
            rhs.append(w)

    def diverges(vals):
        inc = [(b - a) / max(abs(a), 1e-300) for a, b in zip(vals, vals[1:])]
        return bool(inc and all(x > growth for x in inc) and inc[-1] >= inc[0] * 0.5)

    dl, dr = diverges(lhs), diverges(rhs)
    out = {"c": c, "cutoffs": list(cutoffs), "lhs": lhs, "rhs": rhs, "method": method,
           "lhs_divergent": dl, "rhs_divergent": dr}
    if not dl and not dr:
        out["rel_gap"] = abs(lhs[-1] - rhs[-1]) / max(abs(rhs[-1]), 1e-300)
    out["agree"] = (dl and dr) or (not dl and not dr and out["rel_gap"] <= 0.01)
    return out


def sublevel_integral_check(spec, result, radius, center=None, cfg=None, tol=1e-8):
    """``int_E u >= int_0^|E| u_*(s) ds`` for the ball ``E = B_radius(center)``.

    ``center`` is given by n complex or 2n real coordinates.

    Centered balls on radial or 2-D toric specs use quadrature; otherwise the
    left side is a Monte Carlo estimate and its 3 sigma enters the tolerance.
    """
    cfg = cfg or VolumeConfig()
    n = spec.dimension
    ident = lambda u: np.asarray(u)
    if center is not None:
        center = np.asarray(center)
        if center.size == n:
            # complex coordinates, interleaved as (Re z_1, Im z_1, ...)
            cz = center.astype(complex)
            center = np.ravel(np.column_stack([cz.real, cz.imag]))
        center = center.astype(float)
    centered = center is None or not np.any(center)
    if centered:
        lhs, err, method = integral_of_u(spec, ident, cut=-60.0, cfg=cfg, radius=radius)
    else:
        lhs, err = mc_integral(spec, lambda u, z: u, cfg, center=center, radius=radius, label=7)
        method = "monte_carlo"
    rhs, rerr = integral_of_hat(result, ident, upper=math.log(radius), cut=-60.0)
    allow = max(tol * (1 + abs(rhs)), err + rerr)
    gap = lhs - rhs
    return {"radius": radius, "center": None if centered else list(map(float, np.ravel(center))),
            "lhs": lhs, "rhs": rhs, "gap": gap, "tolerance": allow, "method": method,
            "holds": bool(gap >= -allow), "strict": bool(gap > allow)}


def hat_energy(result, lower, upper=None):
    """``int |grad u_hat|^2`` over ``{e^lower < |x| < R}`` from the piecewise-linear table."""
    n = result.dimension
    a = ball_volume(2 * n)
    upper = result.source.log_radius if upper is None else upper
    kt, kf = result.u_hat.knot_arrays()
    pts = np.unique(np.concatenate([[lower], kt[(kt > lower) & (kt < upper)], [upper]]))
    slopes = np.diff(result.u_hat(pts)) / np.diff(pts)
    if 2 * n - 2 == 0:
        seg = pts[1:] - pts[:-1]
    else:
        k = 2 * n - 2
        seg = (np.exp(k * pts[1:]) - np.exp(k * pts[:-1])) / k
    return float(np.sum(slopes ** 2 * 2 * n * a * seg))


def _u_energy_toric2(spec, c0, c1, h, cut=-40.0, rel_tol=1e-7):
    g = spec.toric
    logR = spec.log_radius
    cst = (2 * math.pi) ** 2

    def grad2(x1, x2):
        e1 = (g(np.stack([x1 + h, x2])) - g(np.stack([x1 - h, x2]))) / (2 * h)
        e2 = (g(np.stack([x1, x2 + h])) - g(np.stack([x1, x2 - h]))) / (2 * h)
        return cst * (e1 ** 2 * np.exp(2 * x2) + e2 ** 2 * np.exp(2 * x1))

    def level(c, fill):
        def edge(x1):
            hh, _ = last_below(lambda x2, idx: g(np.stack([x1[idx], x2])),
                               np.full(x1.shape, c), np.full(x1.shape, logR + 1.0))
            return np.where(np.isfinite(hh), hh, fill)
        return edge

    return log_coord_integral_2d(grad2, logR, cut, rel_tol, x2_lower=level(c0, cut),
                                 x2_upper=level(c1, cut))[0]


def _u_energy_radial(spec, c0, c1, h, cut=-40.0):
    n = spec.dimension
    a = ball_volume(2 * n)
    logR = spec.log_radius
    f = spec.profile
    ends, _ = last_below(lambda x, idx: f(x), np.array([c0, c1]), np.array([logR, logR]))
    lo = max(float(ends[0]), cut) if np.isfinite(ends[0]) else cut
    hi = float(ends[1]) if np.isfinite(ends[1]) else cut

    def integrand(t):
        d = (f(t + h) - f(t - h)) / (2 * h)
        return d ** 2 * 2 * n * a * np.exp((2 * n - 2) * t)

    if lo >= hi:
        return 0.0
    return integrate(integrand, lo, hi, rel_tol=1e-9, abs_tol=0.0,
                     panels=max(1, int(math.ceil((hi - lo) / 2.0))))[0]


def _u_energy_mc(spec, c0, c1, h, cfg):
    n = spec.dimension

    def fun(u, z):
        x = np.concatenate([z.real[None], z.imag[None]], axis=0).transpose(1, 0, 2).reshape(2 * n, -1)
        tot = np.zeros(x.shape[1])
        for k in range(2 * n):
            xp, xm = x.copy(), x.copy()
            xp[k] += h
            xm[k] -= h
            up = np.clip(spec.at_points(real_to_complex(xp, n)), c0, c1)
            um = np.clip(spec.at_points(real_to_complex(xm, n)), c0, c1)
            tot += ((up - um) / (2 * h)) ** 2
        return np.where(np.isfinite(tot), tot, 0.0)

    return mc_integral(spec, fun, cfg, label=11)[0]


def _profile_level(result, c):
    """Largest knot-interpolated ``t`` with ``f_hat(t) <= c``."""
    kt, kf = result.u_hat.knot_arrays()
    if c >= kf[-1]:
        return float(kt[-1])
    j = int(np.searchsorted(kf, c, side="right"))
    if j == 0:
        return float(kt[0])
    return float(kt[j - 1] + (c - kf[j - 1]) * (kt[j] - kt[j - 1]) / (kf[j] - kf[j - 1]))


def polya_szego_check(spec, result, rho=0.05, p=2, h=1e-4, cfg=None, seed=0):
    """Dirichlet energies of the truncated pair ``G(u)``, ``G(u_hat)``.

    ``G(x) = min(max(x, c0), c1)`` with ``c0 = f_hat(log(rho R))`` removing
    the pole and ``c1`` the infimum of u on the boundary sphere, so that
    ``G(u) - c1`` vanishes on the boundary as the inequality requires. When
    u is unbounded below on the boundary no such ``c1`` exists and the check
    is reported as not applicable (the symmetrized energy is then infinite).
    The symmetrized side uses the table derivative; the original side uses
    central differences at steps ``h`` and ``h/2`` and raises
    NumericalGradientUnstable when the two disagree by more than 5%.
    """
    if p != 2:
        raise ValueError("only p = 2 is implemented")
    cfg = cfg or VolumeConfig()
    lower = math.log(rho) + spec.log_radius
    c0 = float(result.u_hat(np.array([lower]))[0])
    inf = sample_boundary_inf(spec, seed=seed)
    out = {"rho": rho, "lower_level": c0, "boundary_inf": inf}
    if not np.isfinite(inf) or inf <= c0:
        out.update(applicable=False, holds=None,
                   reason="u is not bounded below on the boundary sphere above the cut level")
        return out
    # the sampled boundary inf sits above the true one by the sampling error
    c1 = inf - 1e-3 * (1.0 + abs(inf))
    upper = _profile_level(result, c1)
    lhs = hat_energy(result, lower, upper)
    energies = []
    for step in (h, h / 2):
        if spec.symmetry is Symmetry.RADIAL:
            energies.append(_u_energy_radial(spec, c0, c1, step))
        elif spec.symmetry is Symmetry.TORIC and spec.dimension == 2:
            energies.append(_u_energy_toric2(spec, c0, c1, step))
        else:
            energies.append(_u_energy_mc(spec, c0, c1, step * spec.domain_radius, cfg))
    rich = abs(energies[0] - energies[1]) / max(abs(energies[1]), 1e-300)
    if rich > 0.05:
        raise NumericalGradientUnstable(
            f"{spec.name}: finite-difference energies {energies[0]:.6g} and {energies[1]:.6g} "
            f"differ by {rich:.1%}", witness={"h": [h, h / 2], "energies": energies})
    rhs = energies[1]
    out.update(applicable=True, upper_level=c1, lhs_hat_energy=lhs, rhs_u_energy=rhs,
               richardson_gap=rich, margin=rhs - lhs, holds=bool(lhs <= rhs * (1 + 1e-9)))
    return out


def composition_check(spec, result, G, name, cfg=None, policy=None, probes=50, tol=2e-3):
    """Symmetrizing ``G o u`` against ``G`` applied to the symmetrized profile."""
    gs = compose(spec, G, name=f"{spec.name}:{name}")
    res_g = schwarz_symmetrize(gs, cfg=cfg, policy=policy, check=False)
    t = np.linspace(spec.log_radius - 6.0, spec.log_radius - 0.01, probes)
    a = res_g.u_hat(t)
    b = G(result.u_hat(t))
    err = np.abs(a - b) / (1.0 + np.abs(b))
    return {"map": name, "max_rel_error": float(err.max()), "tolerance": tol,
            "holds": bool(err.max() <= tol)}


def idempotence_check(result, cfg=None, policy=None, tol=1e-6):
    """Symmetrizing the symmetrized function returns the same profile."""
    hat = result.spec()
    again = schwarz_symmetrize(hat, cfg=cfg, policy=policy, check=False)
    kt, kf = result.u_hat.knot_arrays()
    lo = max(kt[0], again.u_hat.knot_arrays()[0][0])
    t = kt[(kt >= lo)]
    err = np.abs(again.u_hat(t) - result.u_hat(t)) / (1.0 + np.abs(result.u_hat(t)))
    return {"max_rel_error": float(err.max()), "tolerance": tol, "holds": bool(err.max() <= tol)}


def monotone_map_check(res_u, res_v, tol=1e-6):
    """``u <= v`` pointwise implies ``u_* <= v_*``; checked at both tables' abscissae."""
    ls = np.unique(np.concatenate([res_u.u_star.arrays()[0], res_v.u_star.arrays()[0]]))
    top = math.log(min(res_u.u_star.total, res_v.u_star.total))
    ls = ls[np.isfinite(ls) & (ls <= top)]
    a, b = res_u.u_star.value_log(ls), res_v.u_star.value_log(ls)
    ok = np.isfinite(a) & np.isfinite(b)
    excess = float(np.max(a[ok] - b[ok])) if np.any(ok) else 0.0
    return {"max_excess": excess, "tolerance": tol, "holds": bool(excess <= tol)}

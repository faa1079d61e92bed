"""Singularity invariants and the theorem-verification harness.

Estimators
----------
nu          Lelong number at the origin: slope of the profile, of the
            diagonal toric profile, or of the max over spheres.
iota        integrability index from the volume series, ``2 / k`` where
            ``k`` is the slope of ``log mu(t)``, and independently as the
            sup of refined Lelong numbers over the simplex.
nu_hat      Lelong number of the symmetrization, the slope of ``t_j``
            against ``(log mu_j - log a_2n) / 2n``.
tau_hat     ``nu_hat ** n``.
"""

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.special import ndtr

from .errors import (DegenerateVolume, NumericalGradientUnstable, SinglePoleRequired,
                     SymmetryRequired)
from .model import PoleStructure, RadialProfile, Symmetry, ball_volume, real_to_complex
from .rearrangement import schwarz_symmetrize
from .slopes import (MAX_ON_SPHERES, MEAN_ON_TORI, PROFILE_DERIVATIVE, VOLUME_LOG_RATIO,
                     SlopeEstimate, SlopePolicy, asymptotic_slope, extrapolate, fit_slope)
from .volume import VolumeConfig, sublevel_volumes

SPHERE_POINTS = 4096
POINT_DIRECTIONS = 1024

PASS = "PASS"
FAIL = "FAIL"
INAPPLICABLE = "INAPPLICABLE"


def _sphere_directions(n, count, seed=12345):
    rng = np.random.default_rng(seed)
    w = rng.standard_normal((2 * n, count))
    return w / np.linalg.norm(w, axis=0)


# ---------------------------------------------------------------------------
# Lelong numbers


def lelong_origin(spec, policy=None):
    """Lelong number of ``spec`` at the origin as a :class:`SlopeEstimate`."""
    policy = policy or SlopePolicy()
    n = spec.dimension
    if spec.symmetry is Symmetry.RADIAL:
        return asymptotic_slope(spec.profile, policy, PROFILE_DERIVATIVE)
    if spec.symmetry is Symmetry.TORIC:
        return asymptotic_slope(lambda t: spec.toric(np.stack([t] * n)), policy, MEAN_ON_TORI)
    w = real_to_complex(_sphere_directions(n, SPHERE_POINTS), n)

    def sphere_max(t):
        return np.array([np.max(spec.at_points(w * math.exp(tt))) for tt in t])

    return asymptotic_slope(sphere_max, _shallow(policy), MAX_ON_SPHERES)


def _shallow(policy, floor=-700.0):
    """Drop windows whose radii underflow a double."""
    keep = tuple(f for f in policy.depth_factors if policy.t_min * f >= floor)
    return replace(policy, depth_factors=keep or policy.depth_factors[:1])


def lelong_at_point(spec, x, policy=None, directions=POINT_DIRECTIONS):
    """Lelong number at ``x`` (n complex or 2n real coordinates) from maxima on small spheres."""
    policy = _shallow(policy or SlopePolicy())
    n = spec.dimension
    x = np.asarray(x)
    xc = x.astype(complex) if x.shape[0] == n else real_to_complex(x.astype(float), n)
    w = real_to_complex(_sphere_directions(n, directions, seed=54321), n)
    xc = xc.reshape(n, 1)

    def sphere_max(t):
        out = np.empty(len(t))
        for i, tt in enumerate(t):
            vals = spec.at_points(xc + w * math.exp(tt))
            out[i] = np.max(vals)
        return out

    est = asymptotic_slope(sphere_max, policy, MAX_ON_SPHERES)
    return replace(est, extra={"point": [[float(c.real), float(c.imag)] for c in xc[:, 0]]})


def refined_lelong(spec, a, policy=None):
    """Refined Lelong number in the direction ``a`` (all components > 0)."""
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0):
        raise ValueError("direction components must be positive")
    policy = policy or SlopePolicy()
    if spec.symmetry is Symmetry.RADIAL:
        m = float(a.min())
        return asymptotic_slope(lambda t: spec.profile(m * t), policy, PROFILE_DERIVATIVE)
    if spec.symmetry is Symmetry.TORIC:
        return asymptotic_slope(lambda t: spec.toric(a[:, None] * t[None, :]), policy, MEAN_ON_TORI)
    raise SymmetryRequired(f"{spec.name}: refined Lelong numbers need a toric or radial spec")


# ---------------------------------------------------------------------------
# simplex search


def _simplex_grid(n, steps):
    """Interior grid points of the simplex with spacing ``1/steps``."""
    pts = []
    for c in itertools.combinations(range(1, steps), n - 1):
        parts = np.diff(np.concatenate([[0], c, [steps]]))
        pts.append(parts / steps)
    return np.array(pts) if pts else np.full((1, n), 1.0 / n)


def _transfer_moves(n):
    """Pairs of disjoint index sets; mass moves from the first to the second.

    Pairwise moves alone stall at kinks of ``min``-type objectives where
    several coordinates must grow together, so all subsets are used.
    """
    moves = []
    idx = range(n)
    for src_mask in range(1, 2 ** n):
        src = [i for i in idx if src_mask >> i & 1]
        rest = [i for i in idx if not src_mask >> i & 1]
        for k in range(1, len(rest) + 1):
            for dst in itertools.combinations(rest, k):
                moves.append((src, list(dst)))
    return moves


def simplex_maximize(obj, n, steps=32, tol=1e-4):
    """Maximize ``obj(a)`` over the open simplex.

    A grid with spacing ``1/steps`` fixes the basin; transfers of mass
    between groups of coordinates then refine it, halving the step down to
    ``tol``. Coordinates are kept at or above ``tol``. Returns
    ``(a, value, evaluations)``.
    """
    if n == 1:
        a = np.ones(1)
        return a, obj(a), 1
    grid = _simplex_grid(n, steps)
    vals = np.array([obj(a) for a in grid])
    best = int(np.argmax(vals))
    a, v = grid[best].copy(), float(vals[best])
    evals = len(grid)
    moves = _transfer_moves(n)
    step = 1.0 / (2 * steps)
    while step >= tol * 0.5:
        moved = True
        while moved:
            moved = False
            for src, dst in moves:
                d = min(step, (min(a[src]) - tol) * len(src))
                if d <= 0:
                    continue
                b = a.copy()
                b[src] -= d / len(src)
                b[dst] += d / len(dst)
                fb = obj(b)
                evals += 1
                if fb > v + 1e-13 * (1 + abs(v)):
                    a, v, moved = b, fb, True
        step *= 0.5
    return a, v, evals


def integrability_index_kiselman(spec, policy=None, steps=32, tol=1e-4):
    """Sup of refined Lelong numbers over the simplex.

    Maximizers on the simplex boundary are reported with ``boundary`` set;
    the value is then the limit along the last refinement steps.
    """
    if not spec.symmetry.satisfies(Symmetry.TORIC):
        raise SymmetryRequired(f"{spec.name}: Kiselman's sup needs a toric or radial spec")
    policy = policy or SlopePolicy()
    n = spec.dimension
    cache = {}

    def nu_a(a):
        key = tuple(np.round(a, 12))
        if key not in cache:
            cache[key] = refined_lelong(spec, a, policy)
        return cache[key]

    a, v, evals = simplex_maximize(lambda a: nu_a(a).slope, n, steps, tol)
    est = nu_a(a)
    boundary = bool(np.any(a <= 2 * tol))
    value = v
    if boundary:
        # linear continuation of the objective to the face a_k = 0
        k = int(np.argmin(a))
        b = a.copy()
        extra = tol
        b[k] += extra
        b[np.argmax(a)] -= extra
        v2 = nu_a(b).slope
        value = v + (v - v2) * (a[k] / extra)
    # the sup picks up the finite-window bias of nu(0, a) near kinks, so the
    # spread across windows enters the error and decides stability
    spread = float(np.ptp(est.window_slopes)) if est.window_slopes else 0.0
    err = max(est.stderr, abs(value - v), abs(value - est.window_slopes[-1]) if est.window_slopes else 0.0)
    unstable = est.unstable and spread > 1e-3 * (1.0 + abs(value))
    return SlopeEstimate(float(value), float(err), est.window, est.points_used, MEAN_ON_TORI,
                         unstable=unstable, extrapolated=est.extrapolated,
                         window_slopes=est.window_slopes,
                         extra={"argmax": [float(x) for x in a], "boundary": boundary,
                                "evaluations": int(evals)})


def rashkovskii_search(spec, policy=None, steps=32, tol=1e-4):
    """``max_a nu(0,a)^n / prod(a)`` with its maximizer."""
    if not spec.symmetry.satisfies(Symmetry.TORIC):
        raise SymmetryRequired(f"{spec.name}: refined Lelong numbers need a toric or radial spec")
    if spec.pole_structure is not PoleStructure.SINGLE_POLE_AT_ORIGIN:
        raise SinglePoleRequired(f"{spec.name}: the Rashkovskii bound needs an isolated pole")
    policy = policy or SlopePolicy()
    n = spec.dimension

    def obj(a):
        return refined_lelong(spec, a, policy).slope ** n / float(np.prod(a))

    a, v, evals = simplex_maximize(obj, n, steps, tol)
    return {"value": float(v), "argmax": [float(x) for x in a], "evaluations": int(evals)}


def rashkovskii_lower_bound(spec, policy=None):
    """Lower bound for the residue mass of a toric function with an isolated pole."""
    return rashkovskii_search(spec, policy)["value"]


# ---------------------------------------------------------------------------
# volume-based estimators


def _window_series(source, policy, cfg):
    """``(levels, log_mu)`` per slope window, from a symmetrization or fresh volumes."""
    if hasattr(source, "windows") and source.windows:
        return [(lv, lm) for lv, lm, _ in source.windows]
    out = []
    for lo, hi in policy.windows():
        lv = np.linspace(lo, hi, policy.points)
        est = sublevel_volumes(source, lv, cfg)
        out.append((lv, np.array([e.log_value for e in est])))
    return out


def _windowed(series, policy, method, xy, transform=None):
    vals, errs, notes = [], [], []
    used = 0
    for k, (lv, lm) in enumerate(series):
        ok = np.isfinite(lm)
        if not np.all(ok):
            notes.append(f"DEGENERATE_VOLUME: window {k} shrunk to {int(ok.sum())} of {ok.size} levels")
        if ok.sum() < 3:
            break
        x, y = xy(lv[ok], lm[ok])
        s, _, se = fit_slope(x, y, np.abs(x))
        used += int(ok.sum())
        if transform is None:
            vals.append(s)
            errs.append(se)
        else:
            v = transform(s)
            vals.append(v)
            errs.append(abs(transform(s + se) - v) if se > 0 else 0.0)
    return vals, errs, used, notes


def _finish(vals, errs, used, notes, window, method, policy):
    value, err, extra, unstable = extrapolate(vals, errs, policy.settle_tol)
    if value < 0:
        if value >= -max(3 * err, policy.zero_tol, 1e-3 * abs(vals[-1])):
            value = 0.0
        else:
            unstable = True
    if abs(value) <= policy.zero_tol:
        value = 0.0
    return SlopeEstimate(float(value), float(err), window, used, method, unstable=bool(unstable),
                         extrapolated=extra, window_slopes=tuple(float(v) for v in vals),
                         notes=tuple(notes))


def integrability_index_volume(source, policy=None, cfg=None):
    """``iota = lim 2t / log mu(t)`` from a spec or a SymmetrizationResult."""
    policy = policy or SlopePolicy()
    cfg = cfg or VolumeConfig()
    spec = getattr(source, "source", source)
    series = _window_series(source, policy, cfg)
    vals, errs, used, notes = _windowed(series, policy, VOLUME_LOG_RATIO,
                                        lambda lv, lm: (lv, lm), transform=lambda k: 2.0 / k)
    if not vals:
        if spec.pole_structure is not PoleStructure.NO_POLE:
            raise DegenerateVolume(f"{spec.name}: sub-level sets are empty on every slope window "
                                   "although a pole is declared")
        return SlopeEstimate(0.0, 0.0, policy.windows()[0], 0, VOLUME_LOG_RATIO,
                             notes=tuple(notes + ["DEGENERATE_VOLUME: u is bounded below; iota = 0"]))
    return _finish(vals, errs, used, notes, policy.windows()[0], VOLUME_LOG_RATIO, policy)


def nu_hat_estimate(result, policy=None, cfg=None):
    """Lelong number of the symmetrization from the same volume windows."""
    policy = policy or SlopePolicy()
    n = result.dimension
    log_a = math.log(ball_volume(2 * n))
    series = _window_series(result, policy, cfg or VolumeConfig())

    def xy(lv, lm):
        return (lm - log_a) / (2 * n), lv

    vals, errs, used, notes = _windowed(series, policy, PROFILE_DERIVATIVE, xy)
    if not vals:
        return SlopeEstimate(0.0, 0.0, policy.windows()[0], 0, PROFILE_DERIVATIVE,
                             notes=tuple(notes + ["DEGENERATE_VOLUME: u is bounded below"]))
    lv, lm = series[0]
    ok = np.isfinite(lm)
    th = (lm[ok] - log_a) / (2 * n)
    window = (float(th.min()), float(th.max())) if th.size else policy.windows()[0]
    return _finish(vals, errs, used, notes, window, PROFILE_DERIVATIVE, policy)


# ---------------------------------------------------------------------------
# radial Monge-Ampere


def residue_mass_radial(profile, n, policy=None):
    """Residue mass of a radial function: its Lelong number to the n-th power.

    Returns ``(mass, SlopeEstimate)``.
    """
    est = asymptotic_slope(profile, policy or SlopePolicy(), PROFILE_DERIVATIVE)
    return est.slope ** n, est


def smooth_profile(profile, sigma):
    """Gaussian smoothing (in t) of a piecewise-linear table profile, in closed form."""
    kt, kf = profile.knot_arrays()
    slopes = np.diff(kf) / np.diff(kt)
    s0 = slopes[0]
    jumps = np.diff(slopes)
    inner = kt[1:-1]
    t0, f0 = kt[0], kf[0]

    def f(t):
        t = np.asarray(t, dtype=float)
        d = t[..., None] - inner
        z = d / sigma
        ramp = d * ndtr(z) + sigma * np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
        return f0 + s0 * (t - t0) + np.sum(jumps * ramp, axis=-1)

    def fprime(t):
        t = np.asarray(t, dtype=float)
        return s0 + np.sum(jumps * ndtr((t[..., None] - inner) / sigma), axis=-1)

    return RadialProfile(func=f, t_min=float(t0)), fprime


def radial_determinant(y1, y2, r, n):
    """``det(u_jk)`` of a radial function ``u = y(|z|)`` from ``y'``, ``y''``."""
    return (y2 + y1 / r) * (y1 / r) ** (n - 1) / 2 ** (n + 1)


# normalization of the determinant against dr: with it the integral over
# B_R of (dd^c u)^n equals (R y'(R))^n for radial u
def ma_weight(n):
    return n * 2 ** (n + 1)


def radial_ma_consistency(profile, n, R, h=0.01, t_lo=None, fprime=None):
    """Monge-Ampere mass of ``B_R`` from the radial determinant against ``(R y'(R))^n``.

    ``y(r) = f(log r)``; ``y'`` and ``y''`` come from central differences in
    ``r`` with relative step ``h`` (and ``h/2``), and the determinant times
    ``r^(2n-1)`` is integrated over ``[r_lo, R]`` by composite Simpson in
    ``t = log r`` (step ``h`` in t). The ball ``B_{r_lo}`` contributes
    ``(r_lo y'(r_lo))^n``, its mass by the same identity, which carries any
    atom at the origin. The right side uses ``fprime`` when given.
    """
    logR = math.log(R)
    if t_lo is None:
        t_lo = max(getattr(profile, "t_min", -40.0), logR - 40.0)

    def yprime(t, step):
        r = np.exp(t)
        yp = profile(t + math.log1p(step))
        ym = profile(t + math.log1p(-step))
        y0 = profile(t)
        y1 = (yp - ym) / (2 * step * r)
        y2 = (yp - 2 * y0 + ym) / (step * r) ** 2
        return r, y1, y2

    def lhs(step):
        m = int(math.ceil((logR - t_lo) / step))
        m += m % 2
        t = np.linspace(t_lo, logR, m + 1)
        r, y1, y2 = yprime(t, step)
        # dr = r dt
        integrand = ma_weight(n) * radial_determinant(y1, y2, r, n) * r ** (2 * n - 1) * r
        w = np.ones(m + 1)
        w[1:-1:2] = 4
        w[2:-1:2] = 2
        dt = (logR - t_lo) / m
        return float((r[0] * y1[0]) ** n + dt / 3 * np.sum(w * integrand))

    if fprime is not None:
        rhs = float(np.asarray(fprime(np.array([logR])))[0]) ** n
    else:
        r, y1, _ = yprime(np.array([logR]), h / 4)
        rhs = float(r[0] * y1[0]) ** n
    vals = [lhs(h), lhs(h / 2)]
    gaps = [abs(v - rhs) / max(abs(rhs), 1e-300) for v in vals]
    if abs(vals[0] - vals[1]) > 0.05 * max(abs(vals[1]), 1e-300):
        raise NumericalGradientUnstable(
            f"radial determinant quadrature moves from {vals[0]:.6g} to {vals[1]:.6g} "
            "when the step halves", witness={"h": [h, h / 2], "lhs": vals})
    return {"R": R, "n": n, "lhs": vals, "rhs": rhs, "rel_gap": gaps, "h": [h, h / 2],
            "t_lo": t_lo, "max_gap": max(gaps)}


def hat_ma_consistency(result, R=None, sigma=0.05):
    """``radial_ma_consistency`` on the Gaussian-smoothed symmetrized profile."""
    n = result.dimension
    R = R or 0.5 * result.source.domain_radius
    smooth, fprime = smooth_profile(result.u_hat, sigma)
    out = radial_ma_consistency(smooth, n, R, h=sigma / 5, t_lo=math.log(R) - 30.0, fprime=fprime)
    out["sigma"] = sigma
    return out


# ---------------------------------------------------------------------------
# reports


@dataclass
class InvariantReport:
    name: str
    dimension: int
    nu: SlopeEstimate
    iota_volume: SlopeEstimate
    iota_kiselman: Optional[SlopeEstimate]
    nu_hat: SlopeEstimate
    tau_hat: float
    tau: object = None
    rashkovskii_lb: Optional[float] = None
    rashkovskii_argmax: Optional[list] = None
    bounds_ok: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def unstable(self):
        ests = [self.nu, self.iota_volume, self.nu_hat] + ([self.iota_kiselman] if self.iota_kiselman else [])
        return any(e.unstable for e in ests)

    def to_dict(self):
        return {"name": self.name, "dimension": self.dimension, "nu": self.nu.to_dict(),
                "iota_volume": self.iota_volume.to_dict(),
                "iota_kiselman": self.iota_kiselman.to_dict() if self.iota_kiselman else None,
                "nu_hat": self.nu_hat.to_dict(), "tau_hat": self.tau_hat, "tau": self.tau,
                "rashkovskii_lb": self.rashkovskii_lb, "rashkovskii_argmax": self.rashkovskii_argmax,
                "bounds_ok": self.bounds_ok, "unstable": self.unstable, "notes": list(self.notes)}


def _tol(*ests, floor=0.05):
    sigma = math.sqrt(sum(e.stderr ** 2 for e in ests if e is not None))
    return max(floor, 3 * sigma)


def compute_invariants(spec, result=None, expected=None, policy=None, cfg=None):
    """Every invariant of ``spec``; ``result`` is computed when not given."""
    policy = policy or SlopePolicy()
    cfg = cfg or VolumeConfig()
    result = result or schwarz_symmetrize(spec, cfg=cfg, policy=policy)
    n = spec.dimension
    notes = []
    nu = lelong_origin(spec, policy)
    iota = integrability_index_volume(result, policy, cfg)
    nu_hat = nu_hat_estimate(result, policy, cfg)
    kis = None
    if spec.symmetry.satisfies(Symmetry.TORIC):
        kis = integrability_index_kiselman(spec, policy)
    rlb, rarg = None, None
    if spec.symmetry.satisfies(Symmetry.TORIC) and spec.pole_structure is PoleStructure.SINGLE_POLE_AT_ORIGIN:
        r = rashkovskii_search(spec, policy)
        rlb, rarg = r["value"], r["argmax"]
    tau_hat = nu_hat.slope ** n
    tau = None
    if expected is not None:
        tau = expected.tau
    elif spec.symmetry is Symmetry.RADIAL:
        tau = nu.slope ** n
    bounds = {
        "skoda": bool(nu.slope / n - _tol(nu, iota) <= iota.slope <= nu.slope + _tol(nu, iota)),
        "symmetrization_sandwich": bool(nu.slope - _tol(nu, nu_hat) <= nu_hat.slope
                                        <= n * nu.slope + _tol(nu, nu_hat)),
        "iota_identity": bool(abs(iota.slope - nu_hat.slope / n) <= _tol(iota, nu_hat)),
    }
    for est, label in ((nu, "nu"), (iota, "iota_volume"), (nu_hat, "nu_hat"), (kis, "iota_kiselman")):
        if est is not None:
            notes.extend(f"{label}: {m}" for m in est.notes)
    return InvariantReport(spec.name, n, nu, iota, kis, nu_hat, tau_hat, tau, rlb, rarg, bounds, notes)


def sample_points(spec, count=16, seed=0):
    """Interior points for the maximum-at-origin check (half on coordinate hyperplanes when toric)."""
    n = spec.dimension
    rng = np.random.default_rng(seed + 77)
    w = rng.standard_normal((2 * n, count))
    w /= np.linalg.norm(w, axis=0)
    r = spec.domain_radius * rng.uniform(0.1, 0.6, size=count)
    pts = real_to_complex(w * r, n)
    if spec.symmetry is Symmetry.TORIC and n > 1:
        for j in range(count // 2):
            pts[j % n, j] = 0.0
    return pts


def _check(cid, title, status, lhs=None, rhs=None, tol=None, detail=None):
    margin = None
    if lhs is not None and rhs is not None and status != INAPPLICABLE:
        margin = float(rhs - lhs)
    out = {"id": cid, "title": title, "status": status, "lhs": lhs, "rhs": rhs,
           "margin": margin, "tolerance": tol}
    if detail:
        out["detail"] = detail
    return out


def _le(a, b, tol):
    return PASS if a <= b + tol else FAIL


def _eq(a, b, tol):
    return PASS if abs(a - b) <= tol else FAIL


CHECK_IDS = ("skoda_lower", "skoda_upper", "sandwich_lower", "sandwich_upper", "iota_nu_hat",
             "kiselman_identity", "lelong_max_at_origin", "tau_hat_power", "tau_hat_iota",
             "am_gm", "rashkovskii_dominates_tau_hat", "mass_domination", "radial_mass",
             "radial_nu_iota", "hat_nu_iota", "hat_ma_consistency")


def verify_theorems(spec, report=None, result=None, expected=None, policy=None, cfg=None,
                    points=16, seed=0, floor=0.05):
    """Run every registered check on ``spec``; FAIL is data, never an exception."""
    policy = policy or SlopePolicy()
    cfg = cfg or VolumeConfig()
    result = result or schwarz_symmetrize(spec, cfg=cfg, policy=policy)
    report = report or compute_invariants(spec, result, expected, policy, cfg)
    n = spec.dimension
    nu, iota, nh, kis = report.nu, report.iota_volume, report.nu_hat, report.iota_kiselman
    t = lambda *e: _tol(*e, floor=floor)
    checks = []

    tol = t(nu, iota)
    checks.append(_check("skoda_lower", "nu / n <= iota", _le(nu.slope / n, iota.slope, tol),
                         nu.slope / n, iota.slope, tol))
    checks.append(_check("skoda_upper", "iota <= nu", _le(iota.slope, nu.slope, tol),
                         iota.slope, nu.slope, tol))
    tol = t(nu, nh)
    checks.append(_check("sandwich_lower", "nu <= nu_hat", _le(nu.slope, nh.slope, tol),
                         nu.slope, nh.slope, tol))
    checks.append(_check("sandwich_upper", "nu_hat <= n nu", _le(nh.slope, n * nu.slope, tol),
                         nh.slope, n * nu.slope, tol))
    tol = t(iota, nh)
    checks.append(_check("iota_nu_hat", "iota = nu_hat / n", _eq(iota.slope, nh.slope / n, tol),
                         iota.slope, nh.slope / n, tol))
    if kis is not None:
        tol = t(iota, kis)
        checks.append(_check("kiselman_identity", "iota (volume) = sup_a nu(0, a)",
                             _eq(kis.slope, iota.slope, tol), kis.slope, iota.slope, tol,
                             {"argmax": kis.extra.get("argmax"), "boundary": kis.extra.get("boundary")}))
    else:
        checks.append(_check("kiselman_identity", "iota (volume) = sup_a nu(0, a)", INAPPLICABLE,
                             detail="needs a toric or radial spec"))

    pts = sample_points(spec, points, seed)
    local = [lelong_at_point(spec, pts[:, j], policy) for j in range(pts.shape[1])]
    worst = max(local, key=lambda e: e.slope)
    tol = t(nu, worst)
    checks.append(_check("lelong_max_at_origin", "nu(x) <= nu(0) at sampled points",
                         _le(worst.slope, nu.slope, tol), worst.slope, nu.slope, tol,
                         {"points": [e.extra["point"] for e in local],
                          "values": [e.slope for e in local]}))

    checks.append(_check("tau_hat_power", "tau_hat = nu_hat^n",
                         _eq(report.tau_hat, nh.slope ** n, 1e-12), report.tau_hat, nh.slope ** n, 1e-12))
    tol_tau = n * max(nh.slope, 1e-12) ** (n - 1) * t(iota, nh) * n
    checks.append(_check("tau_hat_iota", "tau_hat = n^n iota^n",
                         _eq(report.tau_hat, (n * iota.slope) ** n, tol_tau),
                         report.tau_hat, (n * iota.slope) ** n, tol_tau))

    if kis is not None and kis.extra.get("argmax"):
        a = np.array(kis.extra["argmax"])
        gm = n * float(np.prod(a)) ** (1.0 / n)
        checks.append(_check("am_gm", "n (a_1 ... a_n)^(1/n) <= 1 at the Kiselman maximizer",
                             _le(gm, 1.0, 1e-12), gm, 1.0, 1e-12))
    else:
        checks.append(_check("am_gm", "n (a_1 ... a_n)^(1/n) <= 1 at the Kiselman maximizer",
                             INAPPLICABLE, detail="needs a toric or radial spec"))

    if report.rashkovskii_lb is not None:
        tol = max(floor, 3 * n * max(nh.slope, 1e-12) ** (n - 1) * nh.stderr)
        checks.append(_check("rashkovskii_dominates_tau_hat", "tau_hat <= sup_a nu(0,a)^n / prod a",
                             _le(report.tau_hat, report.rashkovskii_lb, tol),
                             report.tau_hat, report.rashkovskii_lb, tol))
    else:
        checks.append(_check("rashkovskii_dominates_tau_hat", "tau_hat <= sup_a nu(0,a)^n / prod a",
                             INAPPLICABLE, detail="needs a toric spec with an isolated pole"))

    tau = report.tau
    title = "tau_hat <= tau"
    if tau == "UNBOUNDED":
        checks.append(_check("mass_domination", title, PASS, report.tau_hat, None, None,
                             "tau is unbounded; the inequality holds vacuously"))
    elif tau == "UNDEFINED":
        checks.append(_check("mass_domination", title, INAPPLICABLE,
                             detail="the residue mass of u is not well defined"))
    elif tau is None or spec.pole_structure is not PoleStructure.SINGLE_POLE_AT_ORIGIN \
            or not spec.symmetry.satisfies(Symmetry.TORIC):
        checks.append(_check("mass_domination", title, INAPPLICABLE,
                             detail="needs a toric spec with an isolated pole and a known tau"))
    else:
        tol = max(floor, 3 * n * max(nh.slope, 1e-12) ** (n - 1) * nh.stderr)
        checks.append(_check("mass_domination", title, _le(report.tau_hat, float(tau), tol),
                             report.tau_hat, float(tau), tol))

    if spec.symmetry is Symmetry.RADIAL:
        mass, est = residue_mass_radial(spec.profile, n, policy)
        tol = max(floor, 3 * n * max(est.slope, 1e-12) ** (n - 1) * est.stderr)
        checks.append(_check("radial_mass", "tau = nu^n equals tau_hat for radial u",
                             _eq(mass, report.tau_hat, tol), mass, report.tau_hat, tol))
        tol = t(nu, iota)
        checks.append(_check("radial_nu_iota", "nu = n iota for radial u",
                             _eq(nu.slope, n * iota.slope, tol), nu.slope, n * iota.slope, tol))
    else:
        checks.append(_check("radial_mass", "tau = nu^n equals tau_hat for radial u", INAPPLICABLE,
                             detail="radial specs only"))
        checks.append(_check("radial_nu_iota", "nu = n iota for radial u", INAPPLICABLE,
                             detail="radial specs only"))
    tol = t(iota, nh)
    checks.append(_check("hat_nu_iota", "nu_hat = n iota (symmetrization is radial)",
                         _eq(nh.slope, n * iota.slope, tol), nh.slope, n * iota.slope, tol))
    try:
        ma = hat_ma_consistency(result)
        checks.append(_check("hat_ma_consistency", "radial determinant mass = (R y'(R))^n on smoothed u_hat",
                             PASS if ma["max_gap"] <= 0.02 else FAIL, ma["max_gap"], 0.02, 0.02,
                             {"lhs": ma["lhs"], "rhs": ma["rhs"], "h": ma["h"], "sigma": ma["sigma"]}))
    except NumericalGradientUnstable as err:
        checks.append(_check("hat_ma_consistency", "radial determinant mass = (R y'(R))^n on smoothed u_hat",
                             FAIL, detail=err.to_dict()))
    return {"name": spec.name, "checks": checks,
            "all_pass": all(c["status"] != FAIL for c in checks),
            "tolerance_floor": floor}

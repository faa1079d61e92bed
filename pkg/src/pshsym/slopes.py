"""Asymptotic slope extraction.

The invariants are limits ``t -> -inf`` of slopes. We fit a weighted least
squares line on a base window ``[t_min, t_min/3]`` and on two deeper copies
of it (scaled by 4 and 16), then apply Aitken's delta-squared step to the
three window slopes when they have not already settled.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

PROFILE_DERIVATIVE = "PROFILE_DERIVATIVE"
MAX_ON_SPHERES = "MAX_ON_SPHERES"
MEAN_ON_TORI = "MEAN_ON_TORI"
VOLUME_LOG_RATIO = "VOLUME_LOG_RATIO"


@dataclass(frozen=True)
class SlopePolicy:
    t_min: float = -40.0
    points: int = 41
    depth_factors: tuple = (1.0, 4.0, 16.0)
    settle_tol: float = 1e-6      # relative change below which windows count as settled
    zero_tol: float = 1e-9        # slopes within this of 0 are clamped to 0

    def windows(self):
        return [(self.t_min * f, self.t_min * f / 3.0) for f in self.depth_factors]

    def to_dict(self):
        return {"t_min": self.t_min, "points": self.points,
                "depth_factors": list(self.depth_factors), "settle_tol": self.settle_tol}


@dataclass(frozen=True)
class SlopeEstimate:
    """An asymptotic slope with its regression window and uncertainty.

    ``window`` is the base fit window; ``window_slopes`` lists the slope of
    each (deeper) window, which is what the extrapolation acts on.
    """

    slope: float
    stderr: float
    window: tuple
    points_used: int
    method: str
    unstable: bool = False
    extrapolated: bool = False
    window_slopes: tuple = ()
    notes: tuple = ()
    extra: dict = field(default_factory=dict)

    @property
    def sigma(self):
        return self.stderr

    def to_dict(self):
        out = {"slope": self.slope, "stderr": self.stderr,
               "window": [self.window[0], self.window[1]], "points_used": self.points_used,
               "method": self.method, "unstable": self.unstable,
               "extrapolated": self.extrapolated, "window_slopes": list(self.window_slopes)}
        if self.notes:
            out["notes"] = list(self.notes)
        if self.extra:
            out.update(self.extra)
        return out


def fit_slope(t, y, weights=None):
    """Weighted least squares line ``y = s t + c``.

    Returns ``(s, c, stderr)``; the standard error uses the weighted residual
    variance, so it is 0 for exactly linear data.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.ones_like(t) if weights is None else np.asarray(weights, dtype=float)
    W = w.sum()
    tm = (w * t).sum() / W
    ym = (w * y).sum() / W
    stt = (w * (t - tm) ** 2).sum()
    s = (w * (t - tm) * (y - ym)).sum() / stt
    c = ym - s * tm
    dof = max(t.size - 2, 1)
    resid = y - (s * t + c)
    var = (w * resid ** 2).sum() / dof
    stderr = math.sqrt(max(var, 0.0) / stt)
    return float(s), float(c), float(stderr)


def _window_fit(t, y):
    ok = np.isfinite(y)
    if ok.sum() < 3:
        return None
    return fit_slope(t[ok], y[ok], np.abs(t[ok]))


def aitken(s1, s2, s3):
    """Delta-squared limit of three window slopes, or None if they do not contract."""
    d1, d2 = s2 - s1, s3 - s2
    if d1 == 0.0 or d2 == 0.0 or d2 == d1:
        return None
    ratio = d2 / d1
    if not 0.0 < ratio < 0.9:
        return None
    return s3 - d2 * d2 / (d2 - d1)


def extrapolate(slopes, errs, settle_tol=1e-6):
    """Combine per-window slopes into one estimate.

    Returns ``(value, stderr, extrapolated, unstable)``.
    """
    s = list(slopes)
    if len(s) == 1:
        return s[0], errs[0], False, False
    last, prev = s[-1], s[-2]
    if abs(last - prev) <= settle_tol * (1.0 + abs(last)):
        return last, max(errs[-1], abs(last - prev)), False, False
    if len(s) >= 3:
        lim = aitken(*s[-3:])
        if lim is not None:
            # the extrapolation step itself bounds the error it removes
            step = abs(lim - last)
            err = max(errs[-1], 0.1 * step, abs(s[-1] - s[-2]) * 1e-3)
            return lim, err, True, False
    return last, max(errs[-1], abs(last - prev)), False, True


def asymptotic_slope(func, policy=None, method=PROFILE_DERIVATIVE, transform=None,
                     lower_bound=0.0):
    """Slope of ``func(t)`` as ``t -> -inf``.

    ``func`` is vectorized over t. ``transform`` maps a raw window slope to
    the reported quantity (e.g. ``k -> 2/k`` for the integrability index);
    extrapolation acts on the transformed values.
    """
    policy = policy or SlopePolicy()
    raw = []
    vals = []
    errs = []
    unstable = False
    used = 0
    notes = []
    for lo, hi in policy.windows():
        t = np.linspace(lo, hi, policy.points)
        y = np.asarray(func(t), dtype=float)
        fit = _window_fit(t, y)
        if fit is None:
            notes.append(f"window [{lo:g}, {hi:g}] has fewer than 3 finite values")
            break
        s, _, se = fit
        used += int(np.isfinite(y).sum())
        # halving check: the deeper half must agree with the full window
        half = t <= 0.5 * (lo + hi)
        hfit = _window_fit(t[half], y[half])
        if hfit is not None and len(raw) == 0:
            if abs(hfit[0] - s) > 3.0 * se + 1e-6 * (1.0 + abs(s)) + 1e-12:
                # expected for slowly converging profiles; the deep windows decide
                notes.append("base window fails the halving test")
        raw.append(s)
        if transform is None:
            vals.append(s)
            errs.append(se)
        else:
            v = transform(s)
            dv = abs(transform(s + se) - v) if se > 0 else 0.0
            vals.append(v)
            errs.append(dv)
    if not vals:
        return SlopeEstimate(math.nan, math.inf, policy.windows()[0], 0, method,
                             unstable=True, notes=tuple(notes))
    value, err, extra, unstable = extrapolate(vals, errs, policy.settle_tol)
    if lower_bound is not None and value < lower_bound:
        if value >= lower_bound - max(3 * err, policy.zero_tol, 1e-3 * abs(vals[-1])):
            value = lower_bound
        else:
            unstable = True
    if abs(value) <= policy.zero_tol:
        value = 0.0
    return SlopeEstimate(float(value), float(err), policy.windows()[0], used, method,
                         unstable=bool(unstable), extrapolated=extra,
                         window_slopes=tuple(float(v) for v in vals), notes=tuple(notes))


def scaled(est, factor, power=1):
    """Slope estimate of ``factor * est`` raised to ``power`` (for derived numbers)."""
    v = factor * est.slope
    return replace(est, slope=float(v ** power),
                   stderr=float(abs(power * v ** (power - 1) * factor) * est.stderr) if power else 0.0)

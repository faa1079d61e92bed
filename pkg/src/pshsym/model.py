"""Representations of S^1-invariant, toric and radial psh test functions.

Values live in the extended reals: a float that may be ``-inf`` on the polar
set. ``+inf`` and NaN are rejected wherever a function value is produced.
"""

import enum
import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Optional

import numpy as np

from . import expr as ex
from .errors import NotPshProfile, OutOfDomain, SchemaError, SymmetryViolation

NEG_INFINITY = float("-inf")

# Stand-in for log|z_k| -> -inf that stays finite inside the log-form evaluator.
X_NEG = -1e200


def ext_add(a, b):
    """Extended-real addition with -inf absorbing; +inf is refused."""
    out = np.add(a, b)
    if np.any(np.isposinf(out)) or np.any(np.isnan(out)):
        raise ValueError("extended-real arithmetic produced +inf or NaN")
    return out


class Symmetry(enum.Enum):
    RADIAL = "radial"
    TORIC = "toric"
    S1_INVARIANT = "s1"

    def satisfies(self, required):
        """Capability order RADIAL < TORIC < S1_INVARIANT."""
        rank = {Symmetry.RADIAL: 0, Symmetry.TORIC: 1, Symmetry.S1_INVARIANT: 2}
        return rank[self] <= rank[required]


class PoleStructure(enum.Enum):
    SINGLE_POLE_AT_ORIGIN = "single_pole"
    NONTRIVIAL_POLAR_SET = "polar_set"
    NO_POLE = "no_pole"


@dataclass(frozen=True)
class RadialProfile:
    """Convex nondecreasing profile ``f(t) = u(z)`` with ``t = log|z|``.

    Either ``expr`` (an expression in ``["norm"]``), ``func`` (a vectorized
    callable of t) or ``knots`` (a table) is set. Tables extrapolate linearly
    with the end slopes outside their knot range.
    """

    expr: Any = None
    func: Optional[Callable] = None
    knots: Optional[tuple] = None
    t_min: float = -40.0

    @property
    def kind(self):
        return "table" if self.knots is not None else "closed_form"

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.expr is not None:
            return ex.evaluate_profile(self.expr, t)
        if self.func is not None:
            return np.asarray(self.func(t), dtype=float)
        kt, kf = self.knot_arrays()
        return _interp_extrap(t, kt, kf)

    def knot_arrays(self):
        k = np.asarray(self.knots, dtype=float)
        return k[:, 0], k[:, 1]


def _interp_extrap(t, kt, kf):
    if len(kt) == 1:
        return np.full_like(t, kf[0])
    out = np.interp(t, kt, kf)
    lo = t < kt[0]
    if np.any(lo):
        s = (kf[1] - kf[0]) / (kt[1] - kt[0])
        out[lo] = kf[0] + s * (t[lo] - kt[0])
    hi = t > kt[-1]
    if np.any(hi):
        s = (kf[-1] - kf[-2]) / (kt[-1] - kt[-2])
        out[hi] = kf[-1] + s * (t[hi] - kt[-1])
    return out


@dataclass(frozen=True)
class ToricProfile:
    """``g(x_1, ..., x_n)`` with ``x_k = log|z_k|``; x has shape ``(n, ...)``."""

    arity: int
    expr: Any = None
    func: Optional[Callable] = None

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.expr is not None:
            return ex.evaluate_log(self.expr, x)
        return np.asarray(self.func(x), dtype=float)


@dataclass(frozen=True)
class PointEvaluator:
    """Generic S^1-invariant function of complex coordinates ``z`` (shape ``(n, ...)``)."""

    expr: Any = None
    func: Optional[Callable] = None

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        if self.expr is not None:
            with np.errstate(divide="ignore"):
                logabs = np.log(np.abs(z))
            return ex.evaluate_log(self.expr, logabs, z)
        return np.asarray(self.func(z), dtype=float)


@dataclass(frozen=True)
class FunctionSpec:
    dimension: int
    symmetry: Symmetry
    body: Any
    domain_radius: float = 1.0
    extension_margin: float = 0.1
    pole_structure: PoleStructure = PoleStructure.SINGLE_POLE_AT_ORIGIN
    name: str = "anonymous"
    offset: float = 0.0           # subtracted from the body (normalization shift)
    boundary_sup: float = 0.0     # sampled sup on the boundary sphere, after offset
    source: Any = field(default=None, compare=False)

    @property
    def volume(self):
        """Lebesgue measure of the domain ball in R^{2n}."""
        return ball_volume(2 * self.dimension) * self.domain_radius ** (2 * self.dimension)

    @property
    def log_radius(self):
        return math.log(self.domain_radius)

    @property
    def outer_radius(self):
        return self.domain_radius * (1.0 + self.extension_margin)

    # --- evaluation in adapted coordinates -------------------------------

    def profile(self, t):
        """Radial profile f(t); RADIAL specs only."""
        if self.symmetry is not Symmetry.RADIAL:
            raise SchemaError(f"{self.name}: radial profile requested for a {self.symmetry.value} spec")
        return self.body(t) - self.offset

    def toric(self, x):
        """g(x) with x = (log|z_1|, ..., log|z_n|) stacked on axis 0; RADIAL or TORIC."""
        x = np.asarray(x, dtype=float)
        if self.symmetry is Symmetry.RADIAL:
            if x.shape[0] == 1:
                t = x[0]
            else:
                with np.errstate(divide="ignore"):
                    t = 0.5 * np.logaddexp.reduce(2.0 * x, axis=0)
            return self.body(t) - self.offset
        if self.symmetry is Symmetry.TORIC:
            return self.body(x) - self.offset
        raise SchemaError(f"{self.name}: toric profile requested for an s1 spec")

    def at_points(self, z):
        """u at complex points z of shape ``(n, ...)``."""
        z = np.asarray(z, dtype=complex)
        if self.symmetry is Symmetry.S1_INVARIANT:
            return self.body(z) - self.offset
        with np.errstate(divide="ignore"):
            logabs = np.log(np.abs(z))
        return self.toric(logabs)


def ball_volume(N):
    """Volume of the unit ball in R^N."""
    return math.pi ** (N / 2.0) / math.gamma(N / 2.0 + 1.0)


def ball_volume_table(n_max):
    return {N: ball_volume(N) for N in range(1, 2 * n_max + 1)}


def real_to_complex(z, n):
    z = np.asarray(z, dtype=float)
    if z.shape[0] != 2 * n:
        raise ValueError(f"expected {2 * n} real coordinates, got {z.shape[0]}")
    return z[0::2] + 1j * z[1::2]


def evaluate(spec, z):
    """u(z) at a point (or a stack of points along axis 0).

    ``z`` is either 2n real coordinates of R^{2n} or n complex coordinates.
    """
    z = np.asarray(z)
    if z.shape[0] == spec.dimension:
        zc = z.astype(complex)
    else:
        zc = real_to_complex(z.astype(float), spec.dimension)
    norm = np.sqrt(np.sum(np.abs(zc) ** 2, axis=0))
    if np.any(norm > spec.outer_radius * (1.0 + 1e-12)):
        raise OutOfDomain(f"{spec.name}: |z| = {float(np.max(norm)):.6g} exceeds "
                          f"{spec.outer_radius:.6g}")
    out = spec.at_points(zc)
    if np.any(np.isnan(out)) or np.any(np.isposinf(out)):
        raise ValueError(f"{spec.name}: evaluation produced NaN or +inf")
    if out.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# loading and validation


def _body_from_document(doc, dimension, symmetry, t_min):
    body = doc.get("body")
    if not isinstance(body, dict) or body.get("kind") not in ("closed_form", "table"):
        raise SchemaError("body must be an object with kind 'closed_form' or 'table'")
    if body["kind"] == "table":
        if symmetry is not Symmetry.RADIAL:
            raise SchemaError("table bodies are only supported for radial specs")
        knots = body.get("knots")
        try:
            arr = np.asarray(knots, dtype=float)
        except (TypeError, ValueError):
            raise SchemaError("knots must be a list of [t, f] pairs")
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2 or not np.all(np.isfinite(arr)):
            raise SchemaError("knots must be at least two finite [t, f] pairs")
        if np.any(np.diff(arr[:, 0]) <= 0):
            raise SchemaError("knot abscissae must be strictly increasing")
        return RadialProfile(knots=tuple(map(tuple, arr.tolist())), t_min=float(arr[0, 0]))
    e = body.get("expr")
    ex.validate(e, dimension)
    if symmetry is Symmetry.RADIAL:
        return RadialProfile(expr=e, t_min=t_min)
    if symmetry is Symmetry.TORIC:
        return ToricProfile(arity=dimension, expr=e)
    return PointEvaluator(expr=e)


def load_spec(document, name=None, normalize=True, seed=0, t_min=-40.0):
    """Build a validated :class:`FunctionSpec` from a JSON string or dict.

    Raises SchemaError, SymmetryViolation or NotPshProfile.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as err:
            raise SchemaError(f"invalid JSON: {err}")
    if not isinstance(document, dict):
        raise SchemaError("spec document must be a JSON object")
    dim = document.get("dimension")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise SchemaError("dimension must be an integer >= 1")
    try:
        symmetry = Symmetry(document.get("symmetry"))
    except ValueError:
        raise SchemaError("symmetry must be one of 'radial', 'toric', 's1'")
    radius = document.get("domain_radius", 1.0)
    margin = document.get("extension_margin", 0.1)
    for key, val in (("domain_radius", radius), ("extension_margin", margin)):
        if not isinstance(val, (int, float)) or isinstance(val, bool) or not val > 0:
            raise SchemaError(f"{key} must be a positive number")
    pole = document.get("pole_structure", "single_pole")
    try:
        pole = PoleStructure(pole)
    except ValueError:
        raise SchemaError(f"unknown pole_structure {pole!r}")
    body = _body_from_document(document, dim, symmetry, t_min)
    spec = FunctionSpec(dimension=dim, symmetry=symmetry, body=body,
                        domain_radius=float(radius), extension_margin=float(margin),
                        pole_structure=pole, name=name or document.get("name", "spec"),
                        source=document)
    return finalize_spec(spec, normalize=normalize, seed=seed)


def finalize_spec(spec, normalize=True, seed=0, checks=True):
    """Run the symmetry and psh spot-checks, then record the boundary sup.

    With ``normalize`` the body is shifted so that the sampled boundary
    supremum is 0; otherwise the sup is only recorded.
    """
    if checks:
        check_symmetry(spec, seed=seed)
        check_psh(spec, seed=seed)
    sup = sample_boundary_sup(spec, seed=seed)
    if normalize:
        return replace(spec, offset=spec.offset + sup, boundary_sup=0.0)
    return replace(spec, boundary_sup=sup)


def _boundary_values(spec, seed, samples):
    n, R = spec.dimension, spec.domain_radius
    if spec.symmetry is Symmetry.RADIAL:
        return spec.profile(np.array([math.log(R)]))
    if spec.symmetry is Symmetry.TORIC:
        pts = _simplex_directions(n, samples, seed)
        with np.errstate(divide="ignore"):
            x = math.log(R) + 0.5 * np.log(pts)
        return spec.toric(x)
    rng = np.random.default_rng(seed)
    w = rng.standard_normal((2 * n, samples))
    w *= R / np.linalg.norm(w, axis=0)
    return spec.at_points(real_to_complex(w, n))


def sample_boundary_sup(spec, seed=0, samples=4096):
    """Sampled sup of u on the sphere |z| = domain_radius (includes current offset)."""
    vals = np.asarray(_boundary_values(spec, seed, samples))
    return float(np.max(vals[np.isfinite(vals)]))


def sample_boundary_inf(spec, seed=0, samples=4096):
    """Sampled inf of u on the sphere |z| = domain_radius; ``-inf`` when u has poles there."""
    return float(np.min(_boundary_values(spec, seed, samples)))


def _simplex_directions(n, samples, seed):
    """Points p on the closed simplex sum p = 1 (p_k = |w_k|^2 / |w|^2), with vertices and a fine edge grid."""
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(n), size=samples).T if n > 1 else np.ones((1, samples))
    extra = [np.eye(n)]
    if n > 1:
        s = np.linspace(0.0, 1.0, 2049)
        for i in range(n):
            for j in range(i + 1, n):
                e = np.zeros((n, s.size))
                e[i], e[j] = s, 1.0 - s
                extra.append(e)
    return np.concatenate([p] + extra, axis=1)


def _random_ball_points(n, R, k, rng):
    w = rng.standard_normal((2 * n, k))
    w /= np.linalg.norm(w, axis=0)
    r = R * rng.uniform(0.05, 0.95, size=k) ** (1.0 / (2 * n))
    return w * r


def check_symmetry(spec, seed=0, pairs=64, tol=1e-9):
    """Spot-check the declared symmetry; raise SymmetryViolation with a witness."""
    n = spec.dimension
    rng = np.random.default_rng(seed + 1)
    pts = _random_ball_points(n, spec.domain_radius, pairs, rng)
    z = real_to_complex(pts, n)
    if spec.symmetry is Symmetry.RADIAL:
        w = rng.standard_normal((2 * n, pairs))
        w *= np.linalg.norm(pts, axis=0) / np.linalg.norm(w, axis=0)
        moved = real_to_complex(w, n)
        kind = "radial"
    elif spec.symmetry is Symmetry.TORIC:
        moved = z * np.exp(1j * rng.uniform(0, 2 * np.pi, size=(n, pairs)))
        kind = "toric"
    else:
        moved = z * np.exp(1j * rng.uniform(0, 2 * np.pi, size=pairs))
        kind = "s1"
    a = _raw_at_points(spec, z)
    b = _raw_at_points(spec, moved)
    both_inf = np.isneginf(a) & np.isneginf(b)
    with np.errstate(invalid="ignore"):
        gap = np.where(both_inf, 0.0, np.abs(a - b))
    bad = ~(gap <= tol * (1.0 + np.abs(np.where(np.isfinite(a), a, 0.0))))
    if np.any(bad):
        i = int(np.argmax(np.where(bad, np.nan_to_num(gap, nan=np.inf), -1)))
        raise SymmetryViolation(
            f"{spec.name}: {kind} invariance fails, |u(z') - u(z)| = {gap[i]:.3g}",
            witness={"z": _cplx(z[:, i]), "z_moved": _cplx(moved[:, i]),
                     "u": float(a[i]), "u_moved": float(b[i])})


def _cplx(v):
    return [[float(c.real), float(c.imag)] for c in v]


def _raw_at_points(spec, z):
    body = spec.body
    if isinstance(body, PointEvaluator):
        return body(z)
    with np.errstate(divide="ignore"):
        logabs = np.log(np.abs(z))
    if isinstance(body, ToricProfile):
        if body.expr is not None:
            return ex.evaluate_log(body.expr, logabs, z)
        return body(logabs)
    # radial expressions are evaluated on the full coordinates so that a stray
    # abs_coord node shows up as a symmetry violation
    if body.expr is not None:
        return ex.evaluate_log(body.expr, logabs, z)
    return body(0.5 * np.logaddexp.reduce(2.0 * logabs, axis=0))


def check_psh(spec, seed=0, samples=256, tol=1e-9):
    """Monotonicity and convexity spot-checks of the radial / toric profile."""
    rng = np.random.default_rng(seed + 2)
    logR = spec.log_radius
    if spec.symmetry is Symmetry.RADIAL:
        lo = spec.body.t_min if spec.body.kind == "closed_form" else spec.body.knot_arrays()[0][0]
        t = np.sort(rng.uniform(lo, logR, size=(3, samples)), axis=0)
        t = np.concatenate([t, np.stack([np.linspace(lo, logR, 401)[:-2],
                                         np.linspace(lo, logR, 401)[1:-1],
                                         np.linspace(lo, logR, 401)[2:]])], axis=1)
        f = spec.body(t.reshape(-1)).reshape(t.shape)
        _check_triples(spec, t[np.newaxis], f, tol)
        return
    if spec.symmetry is not Symmetry.TORIC:
        return
    n = spec.dimension
    g = spec.body

    def sample(k):
        # uniform in log coordinates over a box, kept inside the ball
        x = rng.uniform(-12.0, logR, size=(n, 4 * k))
        keep = np.logaddexp.reduce(2 * x, axis=0) < 2 * logR + np.log(0.98)
        return x[:, keep][:, :k]

    x = sample(samples)
    for k in range(n):
        step = rng.uniform(0.01, 2.0, size=x.shape[1])
        y = x.copy()
        y[k] = x[k] - step
        gx, gy = g(x), g(y)
        bad = gy > gx + tol * (1 + np.abs(gx))
        if np.any(bad):
            i = int(np.argmax(bad))
            raise NotPshProfile(
                f"{spec.name}: toric profile decreases in coordinate {k + 1}",
                witness={"x_low": y[:, i].tolist(), "x_high": x[:, i].tolist(),
                         "g_low": float(gy[i]), "g_high": float(gx[i])})
    a, b = sample(samples), sample(samples)
    m = min(a.shape[1], b.shape[1])
    a, b = a[:, :m], b[:, :m]
    s = rng.uniform(0.1, 0.9, size=m)
    mid = a * (1 - s) + b * s
    pts = np.stack([a, mid, b], axis=1)  # (n, 3, m)
    f = np.stack([g(a), g(mid), g(b)])
    _check_triples(spec, pts, f, tol, weights=s)


def _check_triples(spec, pts, f, tol, weights=None):
    f1, f2, f3 = f
    if weights is None:
        t1, t2, t3 = pts[0]
        s = (t2 - t1) / np.where(t3 > t1, t3 - t1, 1.0)
        mono = f1 > f3 + tol * (1 + np.abs(f3))
        if np.any(mono):
            i = int(np.argmax(mono))
            raise NotPshProfile(f"{spec.name}: radial profile is not nondecreasing",
                                witness={"t": [float(t1[i]), float(t3[i])],
                                         "f": [float(f1[i]), float(f3[i])]})
    else:
        s = weights
    with np.errstate(invalid="ignore"):
        chord = (1 - s) * f1 + s * f3
        excess = f2 - chord
    finite = np.isfinite(excess)
    bad = finite & (excess > tol * (1 + np.abs(np.where(np.isfinite(chord), chord, 0))))
    if np.any(bad):
        i = int(np.argmax(np.where(bad, excess, -np.inf)))
        raise NotPshProfile(
            f"{spec.name}: profile is not convex (excess {excess[i]:.3g})",
            witness={"points": np.moveaxis(pts[..., i], 0, -1).tolist() if pts.shape[0] > 1
                     else pts[0, :, i].tolist(),
                     "values": [float(f1[i]), float(f2[i]), float(f3[i])]})

"""Builtin catalog of toric and radial test functions with known invariants."""

import math
from dataclasses import dataclass, field
from typing import Optional

from .errors import SchemaError
from .model import (FunctionSpec, PoleStructure, RadialProfile, Symmetry,
                    ToricProfile, finalize_spec)

# Sentinels for the residue mass of the original function.
UNBOUNDED = "UNBOUNDED"
UNDEFINED = "UNDEFINED"


@dataclass(frozen=True)
class Expected:
    nu: float
    iota: float
    nu_hat: float
    tau_hat: float
    tau: object = None             # float, UNBOUNDED, UNDEFINED or None (unknown)
    volume_formula: Optional[str] = None
    provenance: dict = field(default_factory=dict)

    def to_dict(self):
        return {"nu": self.nu, "iota": self.iota, "nu_hat": self.nu_hat,
                "tau_hat": self.tau_hat, "tau": self.tau,
                "volume_formula": self.volume_formula, "provenance": dict(self.provenance)}


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    spec: FunctionSpec
    expected: Optional[Expected]
    document: dict

    @property
    def is_toric(self):
        return self.spec.symmetry is Symmetry.TORIC


def _log_abs(k):
    return ["log", ["abs_coord", k]]


def _make(name, document, expected, profile):
    n = document["dimension"]
    sym = Symmetry(document["symmetry"])
    spec = FunctionSpec(dimension=n, symmetry=sym, body=profile,
                        domain_radius=document.get("domain_radius", 1.0),
                        extension_margin=document.get("extension_margin", 0.1),
                        pole_structure=PoleStructure(document["pole_structure"]),
                        name=name, source=document)
    # the worked examples are kept exactly as written (no normalization shift):
    # every invariant is shift-invariant and the closed-form volumes refer to
    # the unshifted function
    spec = finalize_spec(spec, normalize=False)
    return CatalogEntry(name=name, spec=spec, expected=expected, document=document)


def _toric(name, n, e, pole, expected, radius=1.0):
    doc = {"dimension": n, "symmetry": "toric", "domain_radius": radius,
           "extension_margin": 0.1, "pole_structure": pole.value,
           "body": {"kind": "closed_form", "expr": e}, "name": name}
    return _make(name, doc, expected, ToricProfile(arity=n, expr=e))


def _radial(name, n, e, pole, expected):
    doc = {"dimension": n, "symmetry": "radial", "domain_radius": 1.0,
           "extension_margin": 0.1, "pole_structure": pole.value,
           "body": {"kind": "closed_form", "expr": e}, "name": name}
    return _make(name, doc, expected, RadialProfile(expr=e))


def ex_4_1():
    return _toric(
        "ex-4.1", 2, _log_abs(1), PoleStructure.NONTRIVIAL_POLAR_SET,
        Expected(nu=1.0, iota=1.0, nu_hat=2.0, tau_hat=4.0, tau=None,
                 volume_formula="pi^2 (R^2 - R^4/2) at t = log R",
                 provenance={"nu": "worked example ex-4.1", "nu_hat": "worked example ex-4.1",
                             "iota": "worked example ex-4.1", "tau_hat": "worked example ex-4.1",
                             "volume_formula": "worked example ex-4.1"}))


def ex_4_2():
    e = ["log", ["+", ["pow", ["abs_coord", 1], 2], ["pow", ["abs_coord", 2], 0.5]]]
    return _toric(
        "ex-4.2", 2, e, PoleStructure.SINGLE_POLE_AT_ORIGIN,
        Expected(nu=0.5, iota=0.4, nu_hat=0.8, tau_hat=0.64, tau=1.0,
                 volume_formula="pi^2 R^10 / 5 at t = 2 log R",
                 provenance={k: "worked example ex-4.2" for k in
                             ("nu", "iota", "nu_hat", "tau_hat", "tau", "volume_formula")}))


def demailly(eps):
    eps = float(eps)
    if not 0.0 < eps < 1.0:
        raise SchemaError("demailly family needs 0 < eps < 1")
    e = ["max", ["*", 1.0 / eps, _log_abs(1)], ["*", eps, _log_abs(2)]]
    iota = 1.0 / (eps + 1.0 / eps)
    return _toric(
        f"demailly-{eps:g}", 2, e, PoleStructure.SINGLE_POLE_AT_ORIGIN,
        Expected(nu=eps, iota=iota, nu_hat=2 * iota, tau_hat=4 * iota ** 2, tau=1.0,
                 provenance={k: "Demailly family closed forms" for k in
                             ("nu", "iota", "nu_hat", "tau_hat", "tau")}))


def ex_4_3():
    e = ["*", ["pow", ["*", -1.0, _log_abs(1)], 0.5],
         ["+", ["pow", ["abs_coord", 2], 2], ["const", -1.0]]]
    return _toric(
        "ex-4.3", 2, e, PoleStructure.NONTRIVIAL_POLAR_SET,
        Expected(nu=0.0, iota=0.0, nu_hat=0.0, tau_hat=0.0, tau=UNBOUNDED,
                 provenance={k: "worked example ex-4.3" for k in
                             ("nu", "iota", "nu_hat", "tau_hat", "tau")}),
        radius=0.5)


def ex_4_4():
    e = ["*", 2.0, ["log", ["*", ["abs_coord", 1], ["abs_coord", 2]]]]
    return _toric(
        "ex-4.4", 2, e, PoleStructure.NONTRIVIAL_POLAR_SET,
        Expected(nu=4.0, iota=2.0, nu_hat=4.0, tau_hat=16.0, tau=UNDEFINED,
                 provenance={k: "worked example ex-4.4" for k in
                             ("nu", "iota", "nu_hat", "tau_hat", "tau")}))


def log_norm(n=2, gamma=1.0):
    gamma = float(gamma)
    e = ["log", ["norm"]] if gamma == 1.0 else ["*", gamma, ["log", ["norm"]]]
    name = f"log-norm-n{n}" if gamma == 1.0 else f"log-norm-n{n}-g{gamma:g}"
    return _radial(
        name, n, e, PoleStructure.SINGLE_POLE_AT_ORIGIN,
        Expected(nu=gamma, iota=gamma / n, nu_hat=gamma, tau_hat=gamma ** n,
                 tau=gamma ** n, volume_formula=f"a_{2 * n} e^(2 n t / gamma)",
                 provenance={"nu": "radial identity", "iota": "nu = n iota for radial functions",
                             "nu_hat": "radial functions are their own symmetrization",
                             "tau_hat": "tau = nu^n for radial functions",
                             "tau": "tau = nu^n for radial functions"}))


DEMAILLY_EPS = (0.25, 0.5, 0.75)


def builtin_catalog():
    """All builtin entries, in a fixed order."""
    entries = [ex_4_1(), ex_4_2()]
    entries += [demailly(e) for e in DEMAILLY_EPS]
    entries += [ex_4_3(), ex_4_4()]
    entries += [log_norm(n) for n in (1, 2, 3)]
    entries += [log_norm(2, g) for g in (0.5, 2.0)]
    return entries


def get_entry(name, n=None, eps=None, gamma=None):
    """Resolve a catalog name, with the family parameters the CLI accepts."""
    if name == "log-norm":
        return log_norm(n or 2, gamma if gamma is not None else 1.0)
    if name == "demailly":
        return demailly(eps if eps is not None else 0.5)
    if name.startswith("demailly-"):
        return demailly(float(name.split("-", 1)[1]))
    for entry in builtin_catalog():
        if entry.name == name:
            return entry
    raise SchemaError(f"unknown catalog entry {name!r}")


def catalog_names():
    return [e.name for e in builtin_catalog()]


def volume_closed_form(name, t):
    """Closed-form |{u < t}| where the worked examples give one (else None)."""
    if name == "ex-4.1":
        R = math.exp(t)
        if R >= 1:
            return math.pi ** 2 / 2
        return math.pi ** 2 * (R ** 2 - R ** 4 / 2)
    if name == "ex-4.2":
        R = math.exp(t / 2)
        if R <= 0.5:  # ellipsoid inside the unit ball
            return math.pi ** 2 * R ** 10 / 5
    return None

"""End-to-end runs behind the CLI: analysis, verification and the example table."""

import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import reporting
from .catalog import builtin_catalog, get_entry
from .errors import NumericalGradientUnstable, SchemaError
from .invariants import FAIL, INAPPLICABLE, PASS, compute_invariants, verify_theorems
from .model import load_spec
from .rearrangement import (composition_check, default_levels, equimeasurability_check,
                            idempotence_check, layer_cake_check, polya_szego_check,
                            schwarz_symmetrize, sublevel_integral_check)

EQUIMEASURABILITY_TOL = 5e-3
LAYER_CAKE_TOL = 1e-2


@dataclass
class Target:
    spec: object
    expected: Optional[object] = None


@dataclass
class Analysis:
    spec: object
    expected: object
    result: object
    report: object
    equimeasurability: dict


def resolve(target=None, spec_path=None, catalog=None, n=None, eps=None, seed=0, t_min=-40.0):
    """Targets named on the command line.

    ``target`` is a catalog name or a path to a JSON spec; ``eps`` may list
    several Demailly parameters.
    """
    if spec_path is None and target is not None and (target.endswith(".json") or os.path.isfile(target)):
        spec_path = target
    elif catalog is None:
        catalog = target
    if spec_path is not None:
        try:
            with open(spec_path) as fh:
                text = fh.read()
        except OSError as err:
            raise SchemaError(f"cannot read spec file {spec_path}: {err}") from err
        name = os.path.splitext(os.path.basename(spec_path))[0]
        return [Target(load_spec(text, name=name, seed=seed, t_min=t_min))]
    if catalog is None:
        raise SchemaError("name a catalog entry or a spec file")
    if catalog == "demailly":
        values = eps or [0.5]
        return [Target(e.spec, e.expected) for e in (get_entry("demailly", eps=v) for v in values)]
    e = get_entry(catalog, n=n)
    return [Target(e.spec, e.expected)]


def all_targets():
    return [Target(e.spec, e.expected) for e in builtin_catalog()]


def analyze(spec, expected, config):
    cfg, policy = config.volume(), config.policy()
    levels = default_levels(spec, policy, uniform=config.grid_uniform, near=config.grid_near,
                            depth=config.grid_depth)
    result = schwarz_symmetrize(spec, t_grid=levels, cfg=cfg, policy=policy)
    report = compute_invariants(spec, result, expected, policy, cfg)
    eq = equimeasurability_check(spec, result, cfg=cfg)
    return Analysis(spec, expected, result, report, eq)


def _row(cid, title, status, **detail):
    out = {"id": cid, "title": title, "status": status, "lhs": detail.pop("lhs", None),
           "rhs": detail.pop("rhs", None), "margin": detail.pop("margin", None),
           "tolerance": detail.pop("tolerance", None)}
    if detail:
        out["detail"] = detail
    return out


def rearrangement_suite(analysis, config):
    """Equimeasurability, layer cake, sub-level integral, Polya-Szego, composition, idempotence."""
    spec, result, rep = analysis.spec, analysis.result, analysis.report
    cfg, policy = config.volume(), config.policy()
    rows = []
    eq = analysis.equimeasurability
    w = eq["max_rel_discrepancy"]
    rows.append(_row("equimeasurability", "|{u<t}| = |{u_*<t}| = |{u_hat<t}| at 20 levels",
                     PASS if w <= EQUIMEASURABILITY_TOL else FAIL, lhs=w,
                     rhs=EQUIMEASURABILITY_TOL, margin=EQUIMEASURABILITY_TOL - w,
                     tolerance=EQUIMEASURABILITY_TOL))

    iota = max(rep.iota_volume.slope, 0.0)
    c_int = 0.5 / iota if iota > 0 else 1.0
    lc = layer_cake_check(spec, result, c=c_int, cfg=cfg)
    gap = lc.get("rel_gap")
    ok = gap is not None and gap <= LAYER_CAKE_TOL
    rows.append(_row("layer_cake_integrable", f"int exp(-2c u) = int exp(-2c u_hat), c = {c_int:.6g}",
                     PASS if ok else FAIL, lhs=lc["lhs"][-1], rhs=lc["rhs"][-1],
                     margin=None if gap is None else LAYER_CAKE_TOL - gap, tolerance=LAYER_CAKE_TOL,
                     rel_gap=gap))
    if iota > 0:
        c_div = 1.5 / iota
        lc = layer_cake_check(spec, result, c=c_div, cfg=cfg)
        rows.append(_row("layer_cake_divergent",
                         f"both sides diverge together, c = {c_div:.6g}",
                         PASS if lc["lhs_divergent"] and lc["rhs_divergent"] else FAIL,
                         lhs_divergent=lc["lhs_divergent"], rhs_divergent=lc["rhs_divergent"]))
    else:
        rows.append(_row("layer_cake_divergent", "both sides diverge together", INAPPLICABLE,
                         reason="iota = 0, every c is integrable"))
    lc = layer_cake_check(spec, result, F=np.ones_like, cfg=cfg)
    rows.append(_row("layer_cake_volume", "F = 1 gives |Omega| on both sides",
                     PASS if lc["rel_gap"] <= 1e-6 else FAIL, lhs=lc["lhs"][-1], rhs=lc["rhs"][-1],
                     tolerance=1e-6))

    r = 0.3 * spec.domain_radius
    si = sublevel_integral_check(spec, result, r, cfg=cfg)
    rows.append(_row("sublevel_integral", f"int_B u >= int_0^|B| u_* on the ball of radius {r:g}",
                     PASS if si["holds"] else FAIL, lhs=si["lhs"], rhs=si["rhs"],
                     margin=si["gap"], tolerance=si["tolerance"]))

    try:
        ps = polya_szego_check(spec, result, cfg=cfg, seed=config.seed)
        if not ps["applicable"]:
            rows.append(_row("polya_szego", "energy of u_hat <= energy of u (truncated, p = 2)",
                             INAPPLICABLE, reason=ps["reason"]))
        else:
            tol = 1e-9 * abs(ps["rhs_u_energy"])
            rows.append(_row("polya_szego", "energy of u_hat <= energy of u (truncated, p = 2)",
                             PASS if ps["margin"] >= -tol else FAIL, lhs=ps["lhs_hat_energy"],
                             rhs=ps["rhs_u_energy"], margin=ps["margin"], tolerance=tol,
                             levels=[ps["lower_level"], ps["upper_level"]]))
    except NumericalGradientUnstable as err:
        rows.append(_row("polya_szego", "energy of u_hat <= energy of u (truncated, p = 2)", FAIL,
                         error=err.to_dict()))

    maps = (("half", lambda x: np.asarray(x) / 2.0),
            ("max_minus_3", lambda x: np.maximum(x, -3.0)))
    for name, G in maps:
        cc = composition_check(spec, result, G, name, cfg=cfg, policy=policy)
        rows.append(_row(f"composition_{name}", f"symmetrizing G(u) gives G(u_hat), G = {name}",
                         PASS if cc["holds"] else FAIL, lhs=cc["max_rel_error"], rhs=cc["tolerance"],
                         margin=cc["tolerance"] - cc["max_rel_error"], tolerance=cc["tolerance"]))
    ic = idempotence_check(result, cfg=cfg, policy=policy)
    rows.append(_row("idempotence", "symmetrizing u_hat returns u_hat",
                     PASS if ic["holds"] else FAIL, lhs=ic["max_rel_error"], rhs=ic["tolerance"],
                     margin=ic["tolerance"] - ic["max_rel_error"], tolerance=ic["tolerance"]))
    return rows


def verify(analysis, config):
    theorems = verify_theorems(analysis.spec, report=analysis.report, result=analysis.result,
                               expected=analysis.expected, policy=config.policy(),
                               cfg=config.volume(), points=config.sample_points, seed=config.seed,
                               floor=config.tolerance_floor)
    theorems["checks"] = theorems["checks"] + rearrangement_suite(analysis, config)
    theorems["all_pass"] = all(c["status"] != FAIL for c in theorems["checks"])
    return theorems


def spec_summary(spec):
    return {"name": spec.name, "dimension": spec.dimension, "symmetry": spec.symmetry.value,
            "pole_structure": spec.pole_structure.value, "domain_radius": spec.domain_radius,
            "extension_margin": spec.extension_margin, "boundary_sup": spec.boundary_sup,
            "offset": spec.offset}


def report_document(analysis, config):
    return {"name": analysis.spec.name, "config": config.to_dict(),
            "slope_policy": config.policy().to_dict(), "spec": spec_summary(analysis.spec),
            "expected": analysis.expected.to_dict() if analysis.expected else None,
            "invariants": analysis.report.to_dict(),
            "equimeasurability": analysis.equimeasurability,
            "symmetrization": analysis.result.to_dict()}


def write_outputs(out_dir, analysis, config, theorems=None):
    """Write the per-target directory atomically."""
    spec = analysis.spec
    target = os.path.join(out_dir, spec.name)
    with reporting.AtomicDir(target) as tmp:
        if "json" in config.formats:
            reporting.write_text(os.path.join(tmp, "report.json"),
                                 reporting.dumps(report_document(analysis, config)))
            if theorems is not None:
                doc = dict(theorems)
                doc["config"] = config.to_dict()
                reporting.write_text(os.path.join(tmp, "theorems.json"), reporting.dumps(doc))
        if "csv" in config.formats:
            reporting.write_text(os.path.join(tmp, "volumes.csv"), reporting.volumes_csv(analysis.result))
            reporting.write_text(os.path.join(tmp, "profiles.csv"),
                                 reporting.profiles_csv(spec, analysis.result))
        if "svg" in config.formats:
            os.makedirs(os.path.join(tmp, "plots"))
            # plots are best effort and never fail a run
            try:
                reporting.write_text(os.path.join(tmp, "plots", "profiles.svg"),
                                     reporting.profile_svg(spec, analysis.result))
                reporting.write_text(os.path.join(tmp, "plots", "volumes.svg"),
                                     reporting.volume_svg(spec, analysis.result, analysis.report))
            except (ValueError, FloatingPointError):
                pass
        reporting.write_text(os.path.join(tmp, "summary.md"),
                             reporting.summary_md(spec, analysis.report, theorems, config.to_dict()))
    return target


# ---------------------------------------------------------------------------
# example table

REPRODUCE = ("ex-4.1", "ex-4.2", "demailly-0.25", "demailly-0.5", "demailly-0.75", "ex-4.3", "ex-4.4")


def reproduce_rows(analyses):
    rows = []
    for a in analyses:
        e, r = a.expected, a.report
        got = {"nu": r.nu.slope, "nu_hat": r.nu_hat.slope, "iota": r.iota_volume.slope,
               "tau_hat": r.tau_hat}
        want = {"nu": e.nu, "nu_hat": e.nu_hat, "iota": e.iota, "tau_hat": e.tau_hat}
        dev = {k: abs(got[k] - want[k]) for k in got}
        rows.append({"name": a.spec.name, "expected": want, "computed": got, "deviation": dev,
                     "tau": e.tau, "rashkovskii_lb": r.rashkovskii_lb,
                     "max_slope_deviation": max(dev["nu"], dev["nu_hat"], dev["iota"])})
    return rows


def reproduce_md(rows):
    lines = ["| example | quantity | expected | computed | deviation |", "|---|---|---|---|---|"]
    for row in rows:
        for k in ("nu", "nu_hat", "iota", "tau_hat"):
            lines.append(f"| {row['name']} | {k} | {row['expected'][k]:.6g} | "
                         f"{row['computed'][k]:.6g} | {row['deviation'][k]:.2e} |")
        tau = row["tau"]
        note = tau if isinstance(tau, str) else ("unknown" if tau is None else f"{tau:.6g}")
        lines.append(f"| {row['name']} | tau | {note} | | |")
    return "\n".join(lines) + "\n"

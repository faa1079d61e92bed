"""Acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line, printed in the pytest terminal summary.
"""

import filecmp
import math
import time


from pshsym import cli, pipeline
from pshsym.catalog import DEMAILLY_EPS, builtin_catalog, get_entry
from pshsym.invariants import FAIL, hat_ma_consistency, lelong_at_point, sample_points

from conftest import CATALOG_NAMES, CONFIG, TORIC_NAMES, analysis, record, theorems


def deviations(report, expected):
    return {"nu": abs(report.nu.slope - expected.nu),
            "nu_hat": abs(report.nu_hat.slope - expected.nu_hat),
            "iota": abs(report.iota_volume.slope - expected.iota),
            "tau_hat": abs(report.tau_hat - expected.tau_hat)}


def fmt(dev):
    return " ".join(f"|d{k}|={v:.2e}" for k, v in dev.items())


def timed_analysis(name):
    # a fresh run, so the timing covers symmetrization and every invariant
    start = time.perf_counter()
    e = get_entry(name)
    a = pipeline.analyze(e.spec, e.expected, CONFIG)
    return a, time.perf_counter() - start


def test_criterion_01_ex41():
    a, secs = timed_analysis("ex-4.1")
    dev = deviations(a.report, a.expected)
    ok = max(dev["nu"], dev["nu_hat"], dev["iota"]) <= 0.02 and dev["tau_hat"] <= 0.1 and secs <= 30
    assert record(1, ok, f"ex-4.1 {fmt(dev)} runtime={secs:.1f}s")


def test_criterion_02_ex42():
    a, secs = timed_analysis("ex-4.2")
    dev = deviations(a.report, a.expected)
    rb = a.report.rashkovskii_lb
    ok = (max(dev["nu"], dev["nu_hat"], dev["iota"]) <= 0.02 and dev["tau_hat"] <= 0.1
          and abs(rb - 1.0) <= 0.02 and secs <= 60)
    assert record(2, ok, f"ex-4.2 {fmt(dev)} rashkovskii={rb:.4f} runtime={secs:.1f}s")


def test_criterion_03_demailly():
    parts, ok = [], True
    for eps in DEMAILLY_EPS:
        a = analysis(f"demailly-{eps:g}")
        dev = deviations(a.report, a.expected)
        rb = a.report.rashkovskii_lb
        ok &= max(dev["nu"], dev["nu_hat"], dev["iota"]) <= 0.02 and dev["tau_hat"] <= 0.05
        ok &= a.report.tau_hat < 1 and abs(rb - 1.0) <= 0.02
        parts.append(f"eps={eps:g} max|d|={max(dev.values()):.2e} rashkovskii={rb:.4f}")
    assert record(3, ok, "; ".join(parts))


def test_criterion_04_ex44():
    a = analysis("ex-4.4")
    dev = deviations(a.report, a.expected)
    rows = {c["id"]: c["status"] for c in theorems("ex-4.4")["checks"]}
    ok = (max(dev["nu"], dev["nu_hat"], dev["iota"]) <= 0.05 and dev["tau_hat"] <= 0.5
          and rows["mass_domination"] == "INAPPLICABLE")
    assert record(4, ok, f"ex-4.4 {fmt(dev)} mass_domination={rows['mass_domination']}")


def test_criterion_05_ex43():
    a = analysis("ex-4.3")
    spec = a.spec
    pts = sample_points(spec, 16, seed=CONFIG.seed)
    local = [lelong_at_point(spec, pts[:, j], CONFIG.policy()).slope for j in range(16)]
    r = a.report
    worst = max(max(abs(v) for v in local), abs(r.nu.slope), abs(r.iota_volume.slope),
                abs(r.nu_hat.slope))
    ok = worst <= 0.02 and abs(r.tau_hat) <= 0.02
    assert record(5, ok, f"ex-4.3 max|slope|={worst:.2e} over 16 points and the origin, "
                         f"tau_hat={r.tau_hat:.2e}")


def test_criterion_06_sandwiches():
    worst, ok = math.inf, True
    for name in CATALOG_NAMES:
        r = analysis(name).report
        n = r.dimension
        nu, io, nh = r.nu, r.iota_volume, r.nu_hat
        # combined 3 sigma, plus rounding slack for exact equalities
        t1 = 3 * math.hypot(nu.stderr, io.stderr) + 1e-9
        t2 = 3 * math.hypot(nu.stderr, nh.stderr) + 1e-9
        margins = [io.slope - nu.slope / n + t1, nu.slope - io.slope + t1,
                   nh.slope - nu.slope + t2, n * nu.slope - nh.slope + t2]
        worst = min(worst, min(margins))
        ok &= min(margins) >= 0
    assert record(6, ok, f"{len(CATALOG_NAMES)} entries, smallest margin {worst:.2e}")


def test_criterion_07_kiselman_identity():
    worst = 0.0
    for name in TORIC_NAMES:
        r = analysis(name).report
        worst = max(worst, abs(r.iota_kiselman.slope - r.iota_volume.slope))
    assert record(7, worst <= 0.02, f"{len(TORIC_NAMES)} toric entries, max gap {worst:.2e}")


def test_criterion_08_radial_suite():
    ok, worst_tau, worst_ma, worst_iota = True, 0.0, 0.0, 0.0
    for name in CATALOG_NAMES:
        a = analysis(name)
        r = a.report
        n = r.dimension
        worst_tau = max(worst_tau, abs(r.tau_hat - r.nu_hat.slope ** n))
        worst_iota = max(worst_iota, abs(r.nu_hat.slope - n * r.iota_volume.slope))
        ma = hat_ma_consistency(a.result)
        worst_ma = max(worst_ma, max(ma["rel_gap"]))
    ok = worst_tau <= 1e-12 and worst_ma <= 0.02 and worst_iota <= 0.02
    assert record(8, ok, f"max|tau_hat-nu_hat^n|={worst_tau:.1e} max MA gap (h, h/2)={worst_ma:.2e} "
                         f"max|nu_hat-n iota|={worst_iota:.2e}")


def test_criterion_09_rearrangement_suite():
    ids = ("equimeasurability", "layer_cake_integrable", "layer_cake_divergent", "layer_cake_volume",
           "sublevel_integral", "polya_szego", "composition_half", "composition_max_minus_3",
           "idempotence")
    failed, applicable_ps = [], []
    for name in CATALOG_NAMES:
        rows = {c["id"]: c for c in pipeline.rearrangement_suite(analysis(name), CONFIG)}
        assert set(rows) == set(ids)
        failed += [f"{name}:{k}" for k, c in rows.items() if c["status"] == FAIL]
        if rows["polya_szego"]["status"] == "PASS":
            applicable_ps.append(name)
    ok = not failed
    detail = f"{len(CATALOG_NAMES)} entries, Polya-Szego applied on {len(applicable_ps)}"
    assert record(9, ok, detail + (f", failed: {failed}" if failed else ""))


def test_criterion_10_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    codes = [cli.main(["verify", "--all", "--seed", "7", "--out", str(d)]) for d in (a, b)]
    files = sorted(str(p.relative_to(a)) for p in a.rglob("*") if p.is_file())
    json_files = [f for f in files if f.endswith(".json")]
    match, mismatch, errors = filecmp.cmpfiles(a, b, files, shallow=False)
    ok = codes == [0, 0] and not mismatch and not errors and len(json_files) >= 2 * len(builtin_catalog())
    assert record(10, ok, f"exit codes {codes}, {len(match)}/{len(files)} files identical "
                          f"({len(json_files)} JSON)")

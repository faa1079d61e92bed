import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from pshsym.catalog import volume_closed_form
from pshsym.model import ball_volume
from pshsym.volume import (MONTE_CARLO, RADIAL_EXACT, TORIC_QUADRATURE, VolumeConfig,
                           profile_csv, sublevel_volume, sublevel_volumes, volume_profile)

from conftest import CATALOG_NAMES, entry


def polar_oracle(r2_max):
    """(2 pi)^2 int int r1 r2 over {r2 < r2_max(r1)} inside the unit ball, by scipy."""
    def top(r1):
        return max(0.0, min(r2_max(r1), math.sqrt(max(1.0 - r1 * r1, 0.0))))
    val, err = integrate.dblquad(lambda r2, r1: r1 * r2, 0.0, 1.0, 0.0, top,
                                 epsabs=0.0, epsrel=1e-10)
    return 4 * math.pi ** 2 * val


def ex44_oracle(t):
    """|{r1 r2 < c}| in the unit ball, integrated exactly in s = r1^2.

    The volume is pi^2 int_0^1 min(c^2/s, 1 - s) ds and the two branches cross
    at the roots of s^2 - s + c^2.
    """
    c2 = math.exp(t)
    d = math.sqrt(1 - 4 * c2)
    s1, s2 = (1 - d) / 2, (1 + d) / 2
    return math.pi ** 2 * (s1 - s1 ** 2 / 2 + c2 * math.log(s2 / s1) + (1 - s2) ** 2 / 2)


def test_ex41_closed_form_point():
    est = sublevel_volume(entry("ex-4.1").spec, math.log(0.5))
    assert est.method == TORIC_QUADRATURE
    assert est.value == pytest.approx(math.pi ** 2 * 0.21875, rel=1e-6)
    assert est.value == pytest.approx(2.15898, abs=1e-5)


def test_ex41_profile_two_levels():
    rows = volume_profile(entry("ex-4.1").spec, [math.log(0.5), math.log(0.25)])
    for t, est in rows:
        R = math.exp(t)
        assert est.value == pytest.approx(math.pi ** 2 * (R ** 2 - R ** 4 / 2), rel=1e-6)


def test_ex42_closed_form_and_scipy_oracle():
    t = 2 * math.log(0.3)
    est = sublevel_volume(entry("ex-4.2").spec, t)
    oracle = polar_oracle(lambda r1: max(math.exp(t) - r1 * r1, 0.0) ** 2)
    assert oracle == pytest.approx(math.pi ** 2 * 0.3 ** 10 / 5, rel=1e-8)
    assert est.value == pytest.approx(oracle, rel=1e-6)
    assert est.value == pytest.approx(volume_closed_form("ex-4.2", t), rel=1e-6)


@pytest.mark.parametrize("t", [-4.0, -6.0, -8.0])
def test_ex44_quadrature_against_oracles(t):
    spec = entry("ex-4.4").spec
    quad = sublevel_volume(spec, t)
    assert quad.value == pytest.approx(ex44_oracle(t), rel=1e-9)
    mc = sublevel_volume(spec, t, VolumeConfig(mc_samples=400_000, seed=3), method=MONTE_CARLO)
    assert mc.method == MONTE_CARLO
    assert abs(mc.value - quad.value) <= mc.abs_error + quad.abs_error


@pytest.mark.parametrize("n", [1, 2, 3])
def test_log_norm_is_exact(n):
    spec = entry(f"log-norm-n{n}").spec
    for t in (-0.5, -3.0, -30.0):
        est = sublevel_volume(spec, t)
        assert est.method == RADIAL_EXACT
        assert est.log_value == pytest.approx(math.log(ball_volume(2 * n)) + 2 * n * t, abs=1e-9)


@pytest.mark.parametrize("name", CATALOG_NAMES)
def test_full_cap_above_boundary_sup(name):
    spec = entry(name).spec
    est = sublevel_volume(spec, spec.boundary_sup + 1.0)
    assert est.value == pytest.approx(spec.volume, rel=1e-6)


def test_profile_rejects_increasing_grid():
    with pytest.raises(ValueError):
        volume_profile(entry("ex-4.1").spec, [-2.0, -1.0])


def test_profile_csv_format():
    text = profile_csv(volume_profile(entry("log-norm-n2").spec, [-1.0, -2.0]))
    lines = text.split("\n")
    assert lines[0] == "t,volume,abs_error,method,nodes"
    assert "\r" not in text and text.endswith("\n")
    assert lines[1].split(",")[3] == RADIAL_EXACT


@settings(max_examples=25, deadline=None)
@given(name=st.sampled_from(CATALOG_NAMES), a=st.floats(-12.0, 0.5), b=st.floats(-12.0, 0.5))
def test_volume_monotone_in_level(name, a, b):
    spec = entry(name).spec
    lo, hi = sorted((a, b))
    v_lo, v_hi = sublevel_volumes(spec, [lo, hi])
    assert v_lo.value <= v_hi.value + v_lo.abs_error + v_hi.abs_error
    assert 0.0 <= v_hi.value <= spec.volume * (1 + 1e-9)


def test_monte_carlo_is_seeded():
    spec = entry("ex-4.2").spec
    cfg = VolumeConfig(mc_samples=50_000, seed=11)
    a = sublevel_volume(spec, -1.0, cfg, method=MONTE_CARLO)
    b = sublevel_volume(spec, -1.0, cfg, method=MONTE_CARLO)
    assert a == b


def test_monte_carlo_independent_of_worker_count():
    spec = entry("ex-4.4").spec
    one = sublevel_volume(spec, -6.0, VolumeConfig(mc_samples=64_000, seed=5), method=MONTE_CARLO)
    four = sublevel_volume(spec, -6.0, VolumeConfig(mc_samples=64_000, seed=5, workers=4),
                           method=MONTE_CARLO)
    assert one == four

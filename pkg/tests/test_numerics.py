import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pshsym import expr as ex
from pshsym.errors import SchemaError
from pshsym.quadrature import integrate, pairwise_sum
from pshsym.slopes import SlopePolicy, aitken, asymptotic_slope, extrapolate, fit_slope


@settings(max_examples=50, deadline=None)
@given(s=st.floats(-5, 5), c=st.floats(-5, 5))
def test_fit_slope_exact_on_lines(s, c):
    t = np.linspace(-40.0, -10.0, 21)
    got, icpt, err = fit_slope(t, s * t + c, np.abs(t))
    assert got == pytest.approx(s, abs=1e-9)
    assert icpt == pytest.approx(c, abs=1e-8)
    assert err <= 1e-9


def test_aitken_recovers_geometric_limit():
    # s_k = 2 + 0.5^k
    assert aitken(2.5, 2.25, 2.125) == pytest.approx(2.0, abs=1e-12)
    assert aitken(1.0, 1.0, 1.0) is None
    assert aitken(1.0, 2.0, 4.0) is None


def test_extrapolate_flags_non_contracting_windows():
    value, err, extrapolated, unstable = extrapolate([1.0, 2.0, 4.0], [0.0, 0.0, 0.0])
    assert unstable and not extrapolated
    value, err, extrapolated, unstable = extrapolate([1.0, 1.0], [0.0, 0.0])
    assert value == 1.0 and not unstable


def test_asymptotic_slope_log_correction():
    # f(t) = 2t + log(-t) has slope 2 only in the limit; the bias decays like 1/t
    est = asymptotic_slope(lambda t: 2 * t + np.log(-t), SlopePolicy())
    assert est.slope == pytest.approx(2.0, abs=0.01)


def test_integrate_known_values():
    val, err = integrate(np.exp, 0.0, 1.0)
    assert val == pytest.approx(math.e - 1, rel=1e-12)
    val, _ = integrate(lambda x: 1 / np.sqrt(x), 0.0, 1.0, rel_tol=1e-8)
    assert val == pytest.approx(2.0, rel=1e-6)


def test_pairwise_sum_order_independent_of_chunking():
    v = np.random.default_rng(0).standard_normal(1000)
    assert pairwise_sum(v) == pytest.approx(float(np.sum(v)), abs=1e-10)
    assert pairwise_sum([]) == 0.0


def test_expression_stays_finite_deep_in_log_coordinates():
    e = ["log", ["+", ["pow", ["abs_coord", 1], 2], ["pow", ["abs_coord", 2], 0.5]]]
    logabs = np.array([[-1e5], [-1e5]])
    # log(|z1|^2 + |z2|^(1/2)) -> max(2 x1, x2 / 2) when both are tiny
    assert ex.evaluate_log(e, logabs)[0] == pytest.approx(-5e4, rel=1e-12)


def test_expression_validation():
    with pytest.raises(SchemaError):
        ex.validate(["pow", ["norm"]], 2)
    with pytest.raises(SchemaError):
        ex.validate(["abs_coord", 0], 2)
    ex.validate(["max", ["*", 2.0, ["log", ["abs_coord", 1]]], ["log", ["norm"]]], 2)

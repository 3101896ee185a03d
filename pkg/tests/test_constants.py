import math

import numpy as np
import pytest
from scipy.optimize import brentq
from scipy.special import gammaln

from subweibull import constants as C
from subweibull.errors import InputError


def test_gamma_matches_independent_root():
    # root of lhs(k) = 1 by brentq, independent of the scan-and-bisect routine
    oracle = brentq(lambda k: C.gamma_defining_lhs(k) - 1.0, 1.05, 3.0, xtol=1e-14)
    assert C.gamma_minimal() == pytest.approx(oracle, abs=1e-9)
    g = C.gamma_minimal(1e-4)
    assert 1.77 <= g <= 1.79
    assert C.gamma_defining_lhs(g) <= 1.0


def test_gamma_tolerance_validation():
    with pytest.raises(InputError):
        C.gamma_minimal(0.5)


def _moment_obj(p, theta):
    return math.exp(-math.log(p) / theta + gammaln(p / theta + 1.0) / p)


@pytest.mark.parametrize("theta", [0.3, 0.5, 0.8, 1.0])
def test_moment_sup_against_dense_grid(theta):
    ps = np.linspace(2.0, 500.0, 200001)
    oracle = max(_moment_obj(p, theta) for p in ps[::50])
    oracle = max(oracle, _moment_obj(2.0, theta))
    _, v = C.moment_sup(theta)
    assert v == pytest.approx(oracle, rel=1e-6)


def test_big_c_half_by_hand():
    # sup over p >= 2 sits at p = 2 for theta = 1/2: 2^{-2} Gamma(5)^{1/2}
    sup = 0.25 * math.sqrt(24.0)
    expected = 2.0 * (math.log(2.0) ** 2 + math.e ** 3 * (math.sqrt(24.0) + 3.0 * sup))
    assert C.big_c(0.5) == pytest.approx(expected, rel=1e-10)
    assert C.big_c(0.5) == pytest.approx(345.356, abs=1e-3)


@pytest.mark.parametrize("theta", [1.5, 2.0, 3.0])
def test_big_c_closed_form_above_one(theta):
    assert C.big_c(theta) == pytest.approx(2.0 * (4.0 * math.e + math.log(2.0) ** (1.0 / theta)))


def test_moment_inf_includes_limit():
    p, v = C.moment_inf(0.5)
    assert math.isinf(p)
    assert v == pytest.approx((0.5 * math.e) ** -2.0)
    _, v_window = C.moment_inf(0.5, include_limit=False)
    assert v_window >= v


def test_a_theta_half():
    a, b = C.a_b_theta(0.5)
    assert b is None
    expected = math.e ** 3 * 3.0 ** 1.0 * (0.5 * math.e) ** -2.0 / C.big_c(0.5)
    assert a == pytest.approx(expected, rel=1e-10)


def test_b_theta_closed_form():
    th = 2.0
    _, b = C.a_b_theta(th)
    expected = 2 * math.e * th ** (-1 / th) * (1 - 1 / th) ** (1 / 2) / (4 * math.e + math.log(2) ** (1 / th))
    assert b == pytest.approx(expected)


def _c_theta_oracle(theta):
    ks = np.linspace(1.0, 2000.0, 1_999_001)
    vals = (np.log(2 * math.sqrt(2 * math.pi) / theta) + 0.5 * np.log(ks / theta)) / ks
    return math.exp(vals.max())


@pytest.mark.parametrize("theta", [0.5, 1.0, 3.0, 20.0])
def test_c_theta_against_fine_grid(theta):
    assert C.c_theta_moment_const(theta) == pytest.approx(_c_theta_oracle(theta), rel=1e-8)


def test_c_theta_one_is_endpoint_value():
    assert C.c_theta_moment_const(1.0) == pytest.approx(2 * math.sqrt(2 * math.pi), rel=1e-12)


@pytest.mark.parametrize("theta", [0.3, 0.5, 1.0, 1.5, 2.0, 3.0])
def test_two_optimiser_routes_agree(theta):
    out = C.cross_check(theta)
    assert out["max_relative_gap"] <= 1e-3


def test_centering_factor_theta_one():
    assert C.centering_factor(1.0) == pytest.approx(1.0 + 2.0 / (math.e * math.log(2.0)))


def test_k_and_d_theta():
    assert C.k_theta(0.5) == 4.0
    assert C.k_theta(2.0) == 1.0
    assert C.d_theta(2.0) == pytest.approx(math.sqrt(2.0 * math.e) / 2.0)
    assert C.beta_conjugate(3.0) == pytest.approx(1.5)
    assert C.beta_conjugate(1.0) is None


def test_l_n_scale_invariant_and_unit_weights():
    b = np.array([1.0, 2.0, 3.0])
    assert C.l_n(0.5, b) == pytest.approx(C.l_n(0.5, 7.0 * b))
    a, _ = C.a_b_theta(0.5)
    assert C.l_n(0.5, np.ones(10)) == pytest.approx(C.gamma_minimal() ** 4 * a / math.sqrt(10))


def test_l_n_degenerate():
    with pytest.raises(InputError, match="degenerate weights"):
        C.l_n(1.0, [0.0, 0.0])


def test_h_bound_monotone_in_t_and_n():
    h = [C.h_bound(t, 400, 2.0, 1.0) for t in (1.0, 10.0, 100.0)]
    assert h[0] < h[1] < h[2]
    assert C.h_bound(10.0, 4000, 2.0, 1.0) < C.h_bound(10.0, 400, 2.0, 1.0)


def test_theta_validation():
    for bad in (0.0, -1.0, float("nan"), float("inf")):
        with pytest.raises(InputError):
            C.constant_bundle(bad)


def test_bundle_fields():
    d = C.constant_bundle(1.5).to_dict()
    assert set(d) == {"theta", "gamma", "bigC", "a_theta", "b_theta", "c_theta", "k_theta",
                      "d_theta", "beta_conjugate", "centering_factor"}
    assert d["beta_conjugate"] == pytest.approx(3.0)

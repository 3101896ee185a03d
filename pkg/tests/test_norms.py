import math
import warnings

import numpy as np
import pytest

from subweibull import norms as N
from subweibull.distributions import DistributionSpec
from subweibull.errors import InputError, NumericError
from subweibull.montecarlo import RngStream, sample


def test_bounded_matches_inversion_of_constant():
    M, th = 1.7, 0.8
    inv = N.psi_norm_mgf_inversion(lambda s: math.exp(s * M ** th), th, 10.0)
    assert inv.value == pytest.approx(N.psi_norm_bounded(M, th).value, rel=1e-10)


@pytest.mark.parametrize("q", [0.2, 0.5, 0.8])
@pytest.mark.parametrize("k", [0.5, 1.0, 3.0])
def test_negbin_closed_form_vs_inversion(q, k):
    closed = N.psi1_norm_negbin(q, k).value
    inv = N.psi_norm_mgf_inversion(N.mgf_negbin(q, k), 1.0, -math.log(q) * (1 - 1e-12)).value
    assert inv == pytest.approx(closed, rel=1e-8)


@pytest.mark.parametrize("lam", [0.5, 1.0, 3.0])
def test_poisson_closed_form_vs_inversion(lam):
    closed = N.psi1_norm_poisson(lam).value
    inv = N.psi_norm_mgf_inversion(N.mgf_poisson(lam), 1.0, 5.0).value
    assert inv == pytest.approx(closed, rel=1e-8)


def test_inversion_errors():
    with pytest.raises(NumericError, match="MGF blow-up"):
        N.psi_norm_mgf_inversion(N.mgf_exponential(1.0), 1.0, 2.0)
    with pytest.raises(NumericError, match="not bracketed"):
        N.psi_norm_mgf_inversion(lambda s: 1.0 + 0.1 * s, 1.0, 1.0)


def test_chi2_mgf_gives_gaussian_psi2():
    v = N.psi_norm_mgf_inversion(N.mgf_chi2_1, 2.0, 0.5 - 1e-12).value
    assert v == pytest.approx(math.sqrt(8.0 / 3.0), rel=1e-10)


def test_negbin_degenerate_flag():
    nv = N.psi1_norm_negbin(1e-14, 1.0)
    assert "degenerate" in nv.diagnostics


def test_power_product_and_centering():
    base = N.NormValue(2.0, "psi", 1.0, "closed_form")
    p = N.power_transform_norm(base, 2.0)
    assert p.value == 4.0 and p.theta == 0.5
    prod = N.product_norm_bound([base, N.NormValue(3.0, "psi", 2.0, "closed_form")])
    assert prod.value == 6.0 and prod.theta == pytest.approx(2.0 / 3.0)
    c = N.centered_norm_bound(base)
    assert c.value == pytest.approx(2.0 * (1 + 2 / (math.e * math.log(2))))


def test_phi2_bernoulli_and_uniform_reference():
    assert N.phi2_closed_form("bernoulli", 0.3).value == pytest.approx(0.4582576, abs=1e-6)
    assert N.phi2_closed_form("uniform").value == pytest.approx(0.5773503, abs=1e-6)


def test_phi2_closed_form_matches_moment_series():
    # independent route: exact absolute moments of the centred laws
    for spec, name, mu in (("centered_bernoulli:0.3", "bernoulli", 0.3), ("uniform:-1,1", "uniform", None)):
        series = N.phi_norm_of(DistributionSpec.parse(spec), 2.0, k_max=100)
        assert series.value == pytest.approx(N.phi2_closed_form(name, mu).value, rel=1e-9)


def test_phi2_gaussian_sup_is_not_at_p2():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        nv = N.phi2_closed_form("gaussian")
    assert nv.diagnostics["value_at_p2"] == pytest.approx(1.0)
    # ((2k-1)!!/k!)^{1/(2k)} increases towards sqrt(2)
    k = np.arange(1, 101)
    direct = np.exp((np.cumsum(np.log(2 * k - 1)) - np.cumsum(np.log(k))) / (2 * k))
    assert np.all(np.diff(direct) > 0)
    assert nv.value == pytest.approx(direct.max(), rel=1e-9)
    assert nv.value < math.sqrt(2.0)


def test_centered_poisson_phi1_is_two_over_e():
    nv = N.phi_norm_of(DistributionSpec.parse("centered_poisson:1"), 1.0)
    assert nv.value == pytest.approx(2.0 / math.e, abs=1e-9)
    assert nv.diagnostics["argmax_k"] < nv.diagnostics["k_max"]


def test_exponential_phi1_is_scale():
    nv = N.phi_norm_of(DistributionSpec.parse("exponential:1"), 1.0)
    assert nv.value == pytest.approx(1.0, abs=1e-12)


def test_series_invariant_to_k_max_beyond_argmax():
    d = DistributionSpec.parse("centered_poisson:1")
    a = N.phi_norm_of(d, 1.0, k_max=20)
    b = N.phi_norm_of(d, 1.0, k_max=80)
    assert a.diagnostics["argmax_k"] < 20
    assert a.value == b.value


def test_series_truncation_warning():
    with pytest.warns(RuntimeWarning):
        N.phi_norm_series(lambda k: math.factorial(k) * (2.0 * k) ** k, 1.0, k_max=10)


def _draw(spec, n, seed=5):
    return sample(DistributionSpec.parse(spec), RngStream(seed), n)


def test_estimator_uniform_phi2():
    est = N.estimate_phi_norm(_draw("uniform:-1,1", 100_000), 2.0)
    assert est.value == pytest.approx(1 / math.sqrt(3), abs=0.05)


def test_estimator_centered_poisson_phi1():
    est = N.estimate_phi_norm(_draw("centered_poisson:1", 100_000), 1.0)
    assert est.value == pytest.approx(2.0 / math.e, abs=0.05)
    assert est.diagnostics["k_min"] == 2


def test_emgf_weibull_and_half_normal():
    w = N.estimate_psi_norm_emgf(_draw("weibull:1", 200_000), 1.0)
    assert w.value == pytest.approx(2.0, rel=0.02)
    g = N.estimate_psi_norm_emgf(np.abs(_draw("gaussian:0,1", 200_000)), 2.0)
    assert g.value == pytest.approx(math.sqrt(8.0 / 3.0), rel=0.02)


def test_vector_estimate_uses_row_norms():
    rows = np.column_stack([_draw("uniform:-1,1", 5000, 1), _draw("uniform:-1,1", 5000, 2)])
    v = N.vector_norm_estimate(rows, 2.0)
    s = N.estimate_phi_norm(np.linalg.norm(rows, axis=1), 2.0)
    assert v.value == s.value
    assert v.diagnostics["dimension"] == 2


def test_normvalue_validation():
    with pytest.raises(InputError):
        N.NormValue(1.0, "xyz", 1.0, "closed_form")
    with pytest.raises(InputError):
        N.NormValue(1.0, "gbo", 1.0, "closed_form")
    with pytest.raises(InputError):
        N.estimate_phi_norm([1.0], 1.0)

import math

import numpy as np
import pytest

from subweibull import constants as C
from subweibull import tails as T
from subweibull.errors import InputError
from subweibull.norms import NormValue, psi1_norm_negbin
from subweibull.suite import tail_domination_suite


def test_single_psi_formula_and_cap():
    nv = NormValue(2.0, "psi", 0.5, "closed_form")
    assert T.tail_single_psi(nv, 8.0) == pytest.approx(2.0 * math.exp(-2.0))
    ev = T.single_psi_bound(nv).evaluate(0.1)
    assert ev["vacuous"] and ev["bound"] == 1.0


def test_single_phi_formula():
    nv = NormValue(1.0, "phi", 1.0, "series")
    assert T.tail_single_phi(nv, 4.0) == pytest.approx(2.0 * math.exp(-2.0))
    with pytest.raises(InputError):
        T.single_phi_bound(NormValue(1.0, "psi", 1.0, "closed_form"))


def test_deviation_at_t_one():
    fam = T.WeightedFamily([1.0], [1.0], 2.0)
    L = C.l_n(2.0, [1.0])
    expected = 2.0 * math.e * C.big_c(2.0) * (1.0 + L)
    assert T.sum_deviation(fam, 2.0 / math.e) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("t", [0.5, 2.0, 7.0])
def test_gbo_deviation_tail_inverts_radius(t):
    fam = T.WeightedFamily(np.full(20, 0.05), (3.0,), 0.7)
    s = T.sum_deviation_t(fam, t)
    assert T.gbo_deviation_tail(fam).raw(s) == pytest.approx(2.0 * math.exp(-t), rel=1e-9)


def test_gbo_norm_pair():
    fam = T.WeightedFamily([1.0, 2.0], [1.0, 1.0], 1.5)
    scale, L = T.sum_gbo_norm(fam)
    assert scale == pytest.approx(C.gamma_minimal() * math.e * C.big_c(1.5) * math.sqrt(5.0))
    assert L == pytest.approx(C.l_n(1.5, [1.0, 2.0]))


def test_gbo_deviation_formula():
    g = NormValue(2.0, "gbo", 0.5, "upper_bound", gbo_L=0.3)
    assert T.gbo_tail(g, 4.0) == pytest.approx(2.0 * (2.0 + 0.3 * 16.0))


@pytest.mark.parametrize("theta", [0.5, 1.5, 3.0])
def test_crossover_continuity(theta):
    fam = T.WeightedFamily(np.full(10, 0.1), (1.0,), theta)
    s = T.crossover_point(fam)
    g, w = T.two_regime_exponents(fam, s)
    assert g == pytest.approx(w, rel=1e-10)
    below = T.sum_tail_two_regime_branches(fam, 0.5 * s)["branch"]
    above = T.sum_tail_two_regime_branches(fam, 2.0 * s)["branch"]
    assert below != above


def test_two_regime_rejects_theta_two():
    fam = T.WeightedFamily([1.0], [1.0], 2.0)
    with pytest.raises(InputError):
        T.crossover_point(fam)


def test_subexp_radius_covers_gaussian_regime():
    w, v = np.ones(50), (1.5,)
    t = 3.0
    ss = 50 * 1.5 ** 2
    r = 2.0 * math.sqrt(2.0 * t * ss)  # the square-root part alone
    assert T.subexp_deviation(w, v, t) == pytest.approx(r + 2.0 * t * 1.5)
    assert T.tail_subexp_sum(w, v, r) == pytest.approx(2.0 * math.exp(-t))


def test_nb_a_is_centred_norm_bound():
    mu, k = 2.0, 3.0
    q = mu / (k + mu)
    assert T.nb_a(mu, k) == pytest.approx(psi1_norm_negbin(q, k).value + mu / math.log(2.0))


def test_phi_sum_threshold_and_ci():
    b = T.phi_sum_bound([1.0, 1.0], 1.0)
    assert b.evaluate(0.5 * b.valid_from)["vacuous"]
    r1, r2 = T.phi_sum_ci([1.0], 1.0, 0.1), T.phi_sum_ci([1.0], 1.0, 0.01)
    assert r2 > r1 > 0
    with pytest.raises(InputError):
        T.phi_sum_ci([1.0], 1.0, 0.5)


def test_phi_ci_radius_matches_tail_level():
    # n times the mean radius plugged into the sum tail gives back alpha
    v, th, a, n = 0.8, 1.3, 0.05, 40
    r = T.phi_sum_ci([v], th, a)
    assert T.phi_sum_bound(np.full(n, v), th).raw(n * r) == pytest.approx(a, rel=1e-9)


def test_phi_sum_mixed_monotone_in_t():
    r = [T.phi_sum_mixed([1.0, 1.0], 1.0, [0.5, 0.5], t) for t in (1.0, 2.0, 4.0)]
    assert r[0] < r[1] < r[2]


def test_confidence_interval_methods():
    rng = np.random.default_rng(0)
    x = rng.exponential(size=200)
    for method in ("gbo_theorem1", "phi_theorem2"):
        ci = T.confidence_interval(x, 1.0, 0.05, method)
        assert ci["lo"] < x.mean() < ci["hi"]
        assert ci["plug_in_norm"]
    with pytest.raises(InputError):
        T.confidence_interval(x, 1.0, 0.05, "other")


def test_reference_example_record():
    rec = T.reference_example_comparison()
    assert rec["reference"]["bigC"] == 2825.89
    assert rec["computed"]["bigC"] == pytest.approx(345.356, abs=1e-3)
    assert rec["computed"]["A"] == pytest.approx(0.09445, abs=1e-5)
    assert rec["computed"]["L10"] == pytest.approx(0.2987, abs=1e-4)
    assert rec["discrepancy"] is True
    assert rec["optimizer_agreement"]["pass"]


def test_best_bound_and_uncertified_shape():
    a = T.single_psi_bound(NormValue(1.0, "psi", 1.0, "closed_form"))
    s = T.comparison_shape_bound(1.0, 1.0, 1.0, 10, 1.0)
    assert not s.certified
    val, kind = T.best_bound([a, s], 3.0)
    assert val == min(a(3.0), s(3.0))


def test_weighted_family_validation():
    with pytest.raises(InputError):
        T.WeightedFamily([1.0, 2.0], [1.0, 2.0, 3.0], 1.0)
    with pytest.raises(InputError, match="degenerate"):
        T.WeightedFamily([0.0], [1.0], 1.0).b_norm2()


def test_tail_suite_small():
    out = tail_domination_suite(reps=1000, seed=3)
    assert out["violations"] == 0

import math

import numpy as np
import pytest

from subweibull import nbr as B
from subweibull.errors import InputError, NumericError
from subweibull.montecarlo import RngStream
from subweibull.randmat import jacobi_eigenvalues


def _points(m=100, seed=0):
    rng = np.random.default_rng(seed)
    return rng.uniform(-5, 5, m), rng.integers(0, 40, m).astype(float), rng.uniform(0.2, 60, m)


def test_derivatives_by_central_differences():
    h = 1e-5
    for u, y, k in zip(*_points()):
        d1 = (B.nb_loss(u + h, y, k) - B.nb_loss(u - h, y, k)) / (2 * h)
        d2 = (B.nb_dloss(u + h, y, k) - B.nb_dloss(u - h, y, k)) / (2 * h)
        assert d1 == pytest.approx(B.nb_dloss(u, y, k), abs=1e-6 * max(1.0, abs(d1)))
        assert d2 == pytest.approx(B.nb_ddloss(u, y, k), abs=1e-6 * max(1.0, abs(d2)))


def test_loss_closed_values():
    assert B.nb_loss(0.0, 1.0, 1.0) == pytest.approx(2.0 * math.log(2.0))
    assert B.nb_dloss(0.0, 1.0, 1.0) == pytest.approx(0.0, abs=1e-15)
    assert B.nb_ddloss(0.0, 1.0, 1.0) == pytest.approx(0.5)


def test_loss_stable_for_large_u():
    assert np.isfinite(B.nb_loss(800.0, 3.0, 2.0))
    assert B.nb_dloss(800.0, 3.0, 2.0) == pytest.approx(2.0)
    assert B.nb_ddloss(800.0, 3.0, 2.0) == pytest.approx(0.0, abs=1e-300)


def _data(n=1500, p=3, k=5.0, seed=1):
    rng = RngStream(seed)
    X = np.ones((n, p))
    X[:, 1:] = 2.0 * rng.uniform((n, p - 1)) - 1.0
    beta = np.array([1.0, 0.5, -0.3][:p])
    y = B.sample_nb(rng, np.exp(X @ beta), k, n)
    return X, y, k, beta


def test_intercept_only_mle_is_log_mean():
    _, y, k, _ = _data()
    X = np.ones((y.size, 1))
    bh = B.fit_nbr(X, y, k)
    assert bh[0] == pytest.approx(math.log(y.mean()), abs=1e-9)


def test_fit_is_stationary_minimum():
    X, y, k, beta = _data()
    bh = B.fit_nbr(X, y, k, beta0=np.zeros(3))
    assert np.linalg.norm(B.score(X, y, k, bh)) <= 1e-9
    base = B.empirical_loss(X, y, k, bh)
    rng = np.random.default_rng(3)
    for _ in range(20):
        assert B.empirical_loss(X, y, k, bh + 1e-3 * rng.normal(size=3)) >= base
    assert B.delta_n(X, y, k, bh) == pytest.approx(0.0, abs=1e-8)
    assert np.linalg.norm(bh - beta) < 0.2


def test_hessian_psd_by_jacobi():
    X, y, k, _ = _data()
    rng = np.random.default_rng(4)
    for _ in range(5):
        ev, _ = jacobi_eigenvalues(B.hessian(X, y, k, rng.normal(size=3)))
        assert ev[0] >= -1e-10


def test_hessian_matches_score_differences():
    X, y, k, beta = _data(n=300)
    h = 1e-6
    Q = B.hessian(X, y, k, beta)
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        col = (B.score(X, y, k, beta + e) - B.score(X, y, k, beta - e)) / (2 * h)
        assert np.allclose(col, Q[:, j], atol=1e-6)


def test_singular_design():
    X = np.ones((50, 2))
    y = np.arange(50.0)
    with pytest.raises(NumericError, match="singular"):
        B.fit_nbr(X, y, 2.0, beta0=np.zeros(2))


def test_nb_sampler_moments():
    mu, k, m = 3.0, 2.0, 200_000
    y = B.sample_nb(RngStream(9), mu, k, m)
    var = mu + mu * mu / k
    assert abs(y.mean() - mu) < 3 * math.sqrt(var / m)
    # variance of the sample variance uses the fourth central moment of NB
    q = mu / (k + mu)
    kurt_excess = 6.0 / k + (1 - q) ** 2 / (k * q)  # for the failures-count parameterisation
    se_var = var * math.sqrt((2.0 + kurt_excess) / m)
    assert abs(y.var() - var) < 3 * se_var


def _inputs(**kw):
    base = dict(n=2000, p=5, delta=0.05, M_X=2.0, B=100.0, C_min=8.0, theta=0.5, I_n=math.sqrt(5))
    base.update(kw)
    return B.NbrBoundInputs(**base)


def test_r_n_monotone_and_scaling():
    r = [B.r_n_bound(_inputs(n=n))[0] for n in (1000, 10_000, 100_000)]
    assert r[0] > r[1] > r[2]
    ratio = B.r_n_bound(_inputs(M_X=4.0))[0] / B.r_n_bound(_inputs())[0]
    assert ratio >= 2.0


def test_r_n_literal_formula():
    i = _inputs()
    lp = math.log(2 * 5 / 0.05)
    lg = math.log(2 * 2000 * 5 / 0.05)
    m_bx = 2.0 + 100.0 / math.log(2.0)
    expected = 6 * m_bx * 2.0 / 8.0 * (math.sqrt(2 * 5 / 2000 * lp) + math.sqrt(5 * lp) / 2000) * lg ** 2
    assert B.r_n_bound(i)[0] == pytest.approx(expected, rel=1e-12)


def test_c_condition_threshold():
    X = np.ones((3, 2))
    ok, m = B.c_condition(X, B.CC_LIMIT / math.sqrt(2.0))
    assert ok and m == pytest.approx(B.CC_LIMIT)
    assert not B.c_condition(X, 1.01 * B.CC_LIMIT / math.sqrt(2.0))[0]


def test_input_validation():
    with pytest.raises(InputError):
        B.nbr_experiment({"p": 0}, seed=1)
    with pytest.raises(InputError):
        B.nbr_experiment({"p": 21}, seed=1)
    with pytest.raises(InputError):
        _inputs(delta=1.5)
    with pytest.raises(InputError):
        B.nb_loss(0.0, -1.0, 1.0)


def test_small_experiment_report():
    rep = B.nbr_experiment({"n": 400, "p": 2, "reps": 20, "cmin_draws": 20_000}, seed=2)
    s = rep.summary
    assert len(rep.records) == 20
    assert 0.0 <= s["sandwich_freq"] <= 1.0
    assert s["coverage_status"] in ("pass", "fail", "vacuous")
    assert s["epsilon_n"] == "unverified residual probability"

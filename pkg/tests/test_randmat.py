import math

import numpy as np
import pytest
from scipy.special import gamma

from subweibull import randmat as M
from subweibull.constants import h_bound
from subweibull.errors import InputError
from subweibull.montecarlo import RngStream
from subweibull.norms import mgf_chi2_1, psi_norm_mgf_inversion


@pytest.mark.parametrize("p", [1, 2, 7, 30])
def test_jacobi_matches_lapack(p):
    rng = np.random.default_rng(p)
    a = rng.normal(size=(p, p))
    S = a + a.T
    ev, _ = M.jacobi_eigenvalues(S)
    assert np.allclose(ev, np.linalg.eigvalsh(S), atol=1e-10 * max(1.0, np.abs(S).max()))


def test_jacobi_diagonal_and_repeated():
    ev, rot = M.jacobi_eigenvalues(np.diag([3.0, 1.0, 2.0]))
    assert list(ev) == [1.0, 2.0, 3.0] and rot == 0
    ev, _ = M.jacobi_eigenvalues(np.ones((4, 4)))
    assert np.allclose(ev, [0, 0, 0, 4], atol=1e-12)


def test_jacobi_rejects_bad_input():
    with pytest.raises(InputError):
        M.jacobi_eigenvalues(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(InputError):
        M.jacobi_eigenvalues(np.ones((2, 3)))


def test_gram_extremes_and_limit():
    A = np.random.default_rng(0).normal(size=(50, 4))
    ev = np.linalg.eigvalsh(A.T @ A / 50)
    e = M.gram_extremes(A)
    assert e.lambda_min == pytest.approx(ev[0], rel=1e-10)
    assert e.lambda_max == pytest.approx(ev[-1], rel=1e-10)
    with pytest.raises(InputError, match="limit"):
        M.gram_extremes(np.zeros((500, 401)))


def test_row_norms_by_mgf_inversion():
    g = psi_norm_mgf_inversion(mgf_chi2_1, 2.0, 0.5 - 1e-12).value
    assert M.default_row_norm(M.MatrixSpec(10, 2, "gaussian")) == pytest.approx(g, rel=1e-10)
    r = psi_norm_mgf_inversion(math.exp, 2.0, 10.0).value
    assert M.default_row_norm(M.MatrixSpec(10, 2, "rademacher")) == pytest.approx(r, rel=1e-10)
    for th in (0.5, 1.0, 1.7):
        # |X|^theta is Exp(1) / sigma^theta, so its MGF is 1 / (1 - s / sigma^theta)
        sig_th = gamma(2.0 / th + 1.0) ** (th / 2.0)
        w = psi_norm_mgf_inversion(lambda s: 1.0 / (1.0 - s / sig_th) if s < sig_th else math.inf,
                                   th, sig_th * (1 - 1e-12)).value
        spec = M.MatrixSpec(10, 2, "symweibull", theta=th)
        assert M.default_row_norm(spec) == pytest.approx(w, rel=1e-9)


@pytest.mark.parametrize("law,theta", [("gaussian", None), ("rademacher", None), ("symweibull", 0.7),
                                       ("symweibull", 1.0)])
def test_entries_have_unit_variance(law, theta):
    x = M.sample_matrix(M.MatrixSpec(200_000, 1, law, theta=theta), RngStream(4)).ravel()
    assert abs(x.mean()) < 4 * x.std() / math.sqrt(x.size)
    assert x.var() == pytest.approx(1.0, abs=0.05)


def test_bai_yin_interval_literal_and_checks():
    n, p, s = 400, 10, 2.0
    c = n * math.log(9.0) / p
    iv = M.bai_yin_interval(n, p, 2.0, 1.0, s, c)
    assert iv["H"] == pytest.approx(h_bound(c * p + s * s, n, 2.0, 1.0))
    assert iv["vacuous"] and iv["lower"] == 0.0
    assert iv["confidence"] == pytest.approx(1.0 - 2.0 * math.exp(-4.0))
    with pytest.raises(InputError, match="log 9"):
        M.bai_yin_interval(n, p, 2.0, 1.0, s, 0.5 * c)


def test_matrix_spec_validation():
    with pytest.raises(InputError):
        M.MatrixSpec(3, 5)
    with pytest.raises(InputError):
        M.MatrixSpec(10, 2, "cauchy")
    with pytest.raises(InputError):
        M.MatrixSpec(10, 2, "symweibull")


def test_bai_yin_experiment_vacuous_is_not_pass():
    rep = M.bai_yin_experiment(M.MatrixSpec(40, 3), 1.0, None, 100, seed=1)
    assert rep.summary["status"] == "vacuous"
    assert rep.summary["pass"] is False
    with pytest.raises(InputError):
        M.bai_yin_experiment(M.MatrixSpec(40, 3), 1.0, None, 10, seed=1)


def test_jacobi_2x2_quadratic_formula():
    a, b, d = 2.0, 0.7, -1.3
    tr, det = a + d, a * d - b * b
    disc = math.sqrt(tr * tr / 4.0 - det)
    ev, _ = M.jacobi_eigenvalues(np.array([[a, b], [b, d]]))
    assert ev == pytest.approx([tr / 2.0 - disc, tr / 2.0 + disc], abs=1e-12)


def test_gram_2x2_known_entries():
    A = np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 2.0], [1.0, -1.0]])
    G = A.T @ A / 4.0  # [[3, 0], [0, 6]] / 4
    e = M.gram_extremes(A)
    assert (e.lambda_min, e.lambda_max) == pytest.approx((G[0, 0], G[1, 1]), abs=1e-12)


def test_jacobi_3x3_characteristic_cubic():
    S = np.array([[4.0, 1.0, -2.0], [1.0, 2.0, 0.5], [-2.0, 0.5, 3.0]])
    # trigonometric roots of det(S - x I) for a symmetric matrix
    q = np.trace(S) / 3.0
    p2 = np.sum((S - q * np.eye(3)) ** 2) / 6.0
    p = math.sqrt(p2)
    r = np.linalg.det((S - q * np.eye(3)) / p) / 2.0
    phi = math.acos(max(-1.0, min(1.0, r))) / 3.0
    roots = sorted(q + 2.0 * p * math.cos(phi + 2.0 * math.pi * j / 3.0) for j in range(3))
    ev, _ = M.jacobi_eigenvalues(S)
    assert ev == pytest.approx(roots, abs=1e-10)

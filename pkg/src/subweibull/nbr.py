"""Negative binomial regression with known dispersion: fitting, error radius and a simulation harness."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .constants import big_c, l_n
from .errors import InputError, NumericError
from .montecarlo import RngStream, SimReport, clopper_pearson, sample_gamma, sample_poisson, sharded_statistic
from .randmat import jacobi_eigenvalues

__all__ = ["NbrModel", "NbrBoundInputs", "nb_loss", "nb_dloss", "nb_ddloss", "empirical_loss", "score",
           "hessian", "fit_nbr", "delta_n", "c_condition", "r_n_bound", "c_n", "sample_nb",
           "nbr_experiment", "P_LIMIT", "CC_LIMIT"]

P_LIMIT = 20
CC_LIMIT = math.log(4.0 / 3.0) / 3.0  # threshold shared by the C-condition and the sample-size condition


@dataclass(frozen=True)
class NbrModel:
    k: float
    beta: tuple

    def __post_init__(self):
        if not (self.k > 0 and math.isfinite(self.k)):
            raise InputError("dispersion k must be positive")
        b = np.asarray(self.beta, dtype=float)
        if b.ndim != 1 or b.size == 0 or not np.all(np.isfinite(b)):
            raise InputError("beta must be a nonempty finite vector")
        object.__setattr__(self, "beta", tuple(float(x) for x in b))

    def mean(self, X: np.ndarray) -> np.ndarray:
        return np.exp(np.asarray(X, dtype=float) @ np.asarray(self.beta))


@dataclass(frozen=True)
class NbrBoundInputs:
    n: int
    p: int
    delta: float
    M_X: float
    B: float
    C_min: float
    theta: float
    I_n: float

    def __post_init__(self):
        for name in ("n", "p", "M_X", "B", "C_min", "theta", "I_n"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise InputError(f"{name} must be positive")
        if not 0 < self.delta < 1:
            raise InputError("delta must lie in (0, 1)")

    @property
    def M_BX(self) -> float:
        return self.M_X + self.B / math.log(2.0)


# loss and its u-derivatives --------------------------------------------------

def _check_yk(y, k):
    if not k > 0:
        raise InputError("dispersion k must be positive")
    if np.any(np.asarray(y) < 0):
        raise InputError("responses must be nonnegative")


def nb_loss(u, y, k: float):
    """l(u, y) = -y u + (y + k) log(k + e^u)."""
    _check_yk(y, k)
    u, y = np.asarray(u, dtype=float), np.asarray(y, dtype=float)
    return -y * u + (y + k) * np.logaddexp(math.log(k), u)


def nb_dloss(u, y, k: float):
    """dl/du = -k (y - e^u) / (k + e^u)."""
    _check_yk(y, k)
    u, y = np.asarray(u, dtype=float), np.asarray(y, dtype=float)
    w = 1.0 / (1.0 + k * np.exp(-u))  # e^u / (k + e^u), overflow-safe
    return k * w - y * (1.0 - w)


def nb_ddloss(u, y, k: float):
    """d2l/du2 = k (y + k) e^u / (k + e^u)^2 > 0."""
    _check_yk(y, k)
    u, y = np.asarray(u, dtype=float), np.asarray(y, dtype=float)
    w = 1.0 / (1.0 + k * np.exp(-u))
    return (y + k) * w * (1.0 - w)


# empirical versions ------------------------------------------------------------

def _check_design(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[1] == 0:
        raise InputError("design must be an n x p matrix with p >= 1")
    if X.shape[0] != y.size:
        raise InputError("design and response lengths differ")
    if X.shape[0] < X.shape[1]:
        raise InputError("need n >= p")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise InputError("design and response must be finite")
    return X, y


def empirical_loss(X, y, k: float, beta) -> float:
    X, y = _check_design(X, y)
    return float(np.mean(nb_loss(X @ np.asarray(beta, dtype=float), y, k)))


def score(X, y, k: float, beta) -> np.ndarray:
    """Z_n(beta) = (1/n) sum dl(X_i beta, Y_i) X_i."""
    X, y = _check_design(X, y)
    return X.T @ nb_dloss(X @ np.asarray(beta, dtype=float), y, k) / X.shape[0]


def hessian(X, y, k: float, beta) -> np.ndarray:
    """Q_n(beta) = (1/n) sum d2l(X_i beta, Y_i) X_i X_i^T."""
    X, y = _check_design(X, y)
    w = nb_ddloss(X @ np.asarray(beta, dtype=float), y, k)
    return (X * w[:, None]).T @ X / X.shape[0]


def _solve(Q: np.ndarray, z: np.ndarray) -> np.ndarray:
    try:
        step = np.linalg.solve(Q, z)
    except np.linalg.LinAlgError as exc:
        raise NumericError("singular Hessian") from exc
    if not np.all(np.isfinite(step)) or np.linalg.cond(Q) > 1e14:
        raise NumericError("singular Hessian")
    return step


def fit_nbr(X, y, k: float, tol: float = 1e-9, max_iter: int = 100, beta0=None) -> np.ndarray:
    """Minimise the empirical NB loss by Newton steps with step halving.

    Stops once the score norm is at most ``tol``.  Every accepted step
    decreases the loss.
    """
    X, y = _check_design(X, y)
    _check_yk(y, k)
    if beta0 is None:
        beta = np.zeros(X.shape[1])
        const = np.flatnonzero(np.all(X == 1.0, axis=0))
        if const.size:  # intercept at the log of the mean response
            beta[const[0]] = math.log(max(float(y.mean()), 1e-8))
    else:
        beta = np.asarray(beta0, dtype=float).copy()
    loss = empirical_loss(X, y, k, beta)
    for it in range(int(max_iter)):
        z = score(X, y, k, beta)
        if np.linalg.norm(z) <= tol:
            return beta
        step = _solve(hessian(X, y, k, beta), z)
        t = 1.0
        for _ in range(60):
            cand = beta - t * step
            new = empirical_loss(X, y, k, cand)
            if new <= loss:
                break
            # near the root the decrease drops below loss roundoff; accept if the score shrinks
            if new <= loss + 64 * np.finfo(float).eps * abs(loss) and \
                    np.linalg.norm(score(X, y, k, cand)) < np.linalg.norm(z):
                break
            t *= 0.5
        else:
            raise NumericError(f"line search failed at iteration {it}; score norm {np.linalg.norm(z):.3g}")
        beta, loss = cand, new
    z = np.linalg.norm(score(X, y, k, beta))
    if z <= tol:
        return beta
    raise NumericError(f"max_iter={max_iter} exceeded; score norm {z:.3g}")


def delta_n(X, y, k: float, beta) -> float:
    """(3/2) ||Q_n(beta)^{-1} Z_n(beta)||_2."""
    z = score(X, y, k, beta)
    return 1.5 * float(np.linalg.norm(_solve(hessian(X, y, k, beta), z)))


def c_condition(X, dn: float) -> tuple[bool, float]:
    """max_i ||X_i||_2 delta_n <= log(4/3)/3, so that e^{3 u} <= 4/3 along the segment."""
    m = float(np.max(np.linalg.norm(np.asarray(X, dtype=float), axis=1))) * dn
    return m <= CC_LIMIT, m


# error radius and probability --------------------------------------------------

def _log_term(inputs: NbrBoundInputs) -> float:
    return math.log(2.0 * inputs.n * inputs.p / inputs.delta)


def r_n_bound(inputs: NbrBoundInputs) -> tuple[float, bool]:
    """R_n and whether R_n I_n <= log(4/3)/3."""
    n, p, d = inputs.n, inputs.p, inputs.delta
    lp = math.log(2.0 * p / d)
    bracket = math.sqrt(2.0 * p / n * lp) + math.sqrt(p * lp) / n
    r = 6.0 * inputs.M_BX * inputs.M_X / inputs.C_min * bracket * _log_term(inputs) ** (1.0 / inputs.theta)
    return r, r * inputs.I_n <= CC_LIMIT


def c_n(inputs: NbrBoundInputs, k: float) -> float:
    """c_n with t = C_min / 4 in both exponential terms and b = (k/n) M_X^2 (1, ..., 1)."""
    n, th = inputs.n, inputs.theta
    t = inputs.C_min / 4.0
    lg = _log_term(inputs)
    mx, mbx = inputs.M_X, inputs.M_BX
    first = math.exp(-0.25 * min(n * t * t / (2.0 * mx ** 4 * lg ** (4.0 / th) * mbx ** 2),
                                 n * t / (mx ** 2 * lg ** (2.0 / th) * mbx)))
    half = th / 2.0
    b = np.full(n, k / n * mx ** 2)
    b2 = float(np.linalg.norm(b))
    C = big_c(half)
    L = l_n(half, b)
    second = math.exp(-min(t ** half / (4.0 * math.e * C * b2 * L) ** half,
                           t * t / (16.0 * math.e ** 2 * C * C * b2 * b2)))
    return first + second


# simulation ----------------------------------------------------------------------

def sample_nb(rng: RngStream, mu, k: float, size: int) -> np.ndarray:
    """NB(mu, k) via Gamma(shape k, scale mu/k) then Poisson."""
    mu = np.broadcast_to(np.asarray(mu, dtype=float), (size,))
    return sample_poisson(rng, sample_gamma(rng, k, mu / k, size), size)


_DEFAULTS = {"n": 2000, "p": 5, "k": 50.0, "beta_star": None, "design": "uniform", "design_theta": 0.5,
             "truncation": 4.0, "theta": 0.5, "delta": 0.05, "reps": 200, "level": 0.99,
             "cmin_draws": 200000}


def _design(cfg: dict, rng: RngStream, n: int) -> np.ndarray:
    p = cfg["p"]
    X = np.ones((n, p))
    if p == 1:
        return X
    if cfg["design"] == "uniform":
        X[:, 1:] = 2.0 * rng.uniform((n, p - 1)) - 1.0
    else:
        th, T = cfg["design_theta"], cfg["truncation"]
        mag = np.minimum((-np.log(rng.uniform((n, p - 1)))) ** (1.0 / th), T)
        X[:, 1:] = rng.signs((n, p - 1)) * mag
    return X


def _default_beta(p: int) -> np.ndarray:
    beta = np.zeros(p)
    beta[0] = 4.0
    if p > 1:
        beta[1:] = 0.2 * np.array([(-1.0) ** j / (1 + j // 2) for j in range(p - 1)])
    return beta


def _config(config: Optional[dict]) -> dict:
    cfg = dict(_DEFAULTS)
    cfg.update({k: v for k, v in (config or {}).items() if k in _DEFAULTS})
    p = int(cfg["p"])
    if p < 1:
        raise InputError("p must be at least 1")
    if p > P_LIMIT:
        raise InputError(f"p > {P_LIMIT} exceeds the desk-scale limit")
    cfg["p"], cfg["n"], cfg["reps"] = p, int(cfg["n"]), int(cfg["reps"])
    if cfg["n"] < p:
        raise InputError("need n >= p")
    if cfg["design"] not in ("uniform", "symweibull"):
        raise InputError("design must be 'uniform' or 'symweibull'")
    if cfg["beta_star"] is None:
        cfg["beta_star"] = _default_beta(p).tolist()
    if len(cfg["beta_star"]) != p:
        raise InputError("beta_star must have p entries")
    if not 0 < cfg["theta"] < 1:
        raise InputError("theta for the design condition must lie in (0, 1)")
    return cfg


def _truncated_psi(theta: float, design_theta: float, T: float) -> float:
    """psi_theta norm of min(W, T) with P(W > x) = exp(-x^design_theta)."""
    def excess(c: float) -> float:
        body, _ = quad(lambda x: math.exp((x / c) ** theta) * design_theta * x ** (design_theta - 1.0)
                       * math.exp(-x ** design_theta), 0.0, T, limit=200)
        return body + math.exp((T / c) ** theta - T ** design_theta) - 2.0

    lo, hi = 1e-3 * T, T / math.log(2.0) ** (1.0 / theta)  # |X| <= T gives the upper end
    while excess(lo) < 0:
        lo *= 0.5
    return float(brentq(excess, lo, hi * (1 + 1e-12), xtol=1e-12))


def _population(cfg: dict, seed: int) -> dict:
    """Design-level constants: M_X, B, I_n and a Monte Carlo C_min."""
    p, th = cfg["p"], cfg["theta"]
    beta = np.asarray(cfg["beta_star"], dtype=float)
    if cfg["design"] == "uniform":
        bound = 1.0
        m_x = math.log(2.0) ** (-1.0 / th)  # |X_ik| <= 1
    else:
        bound = float(cfg["truncation"])
        m_x = max(math.log(2.0) ** (-1.0 / th), _truncated_psi(th, float(cfg["design_theta"]), bound))
    B = math.exp(beta[0] + bound * float(np.sum(np.abs(beta[1:]))))
    I_n = math.sqrt(1.0 + (p - 1) * bound * bound)
    rng = RngStream(seed, 1 << 40)
    X = _design(cfg, rng, int(cfg["cmin_draws"]))
    mu = np.exp(X @ beta)
    w = cfg["k"] * mu / (cfg["k"] + mu)  # E of the Hessian weight given X
    ev, _ = jacobi_eigenvalues((X * w[:, None]).T @ X / X.shape[0])
    return {"M_X": m_x, "B": B, "I_n": I_n, "C_min": float(ev[0])}


_FIELDS = ("error", "delta_n", "cc_value", "max_abs_x", "hess_min_eig", "max_mean")


def nbr_experiment(config: Optional[dict], seed: int, jobs: int = 1) -> SimReport:
    """Replicate fits and tally the Hessian sandwich and the R_n coverage."""
    cfg = _config(config)
    n, p, k, reps = cfg["n"], cfg["p"], float(cfg["k"]), cfg["reps"]
    beta = np.asarray(cfg["beta_star"], dtype=float)
    pop = _population(cfg, seed)
    inputs = NbrBoundInputs(n, p, cfg["delta"], pop["M_X"], pop["B"], pop["C_min"], cfg["theta"], pop["I_n"])
    R, cc_ok = r_n_bound(inputs)
    cn = c_n(inputs, k)

    def draw(rng: RngStream, m: int) -> np.ndarray:
        out = np.empty((m, len(_FIELDS)))
        for r in range(m):
            X = _design(cfg, rng, n)
            mu = np.exp(X @ beta)
            y = sample_nb(rng, mu, k, n)
            bh = fit_nbr(X, y, k)
            dn = delta_n(X, y, k, beta)
            _, ccv = c_condition(X, dn)
            ev, _ = jacobi_eigenvalues(hessian(X, y, k, beta))
            out[r] = (np.linalg.norm(bh - beta), dn, ccv, np.abs(X).max(), ev[0], mu.max())
        return out.ravel()

    vals = sharded_statistic(draw, reps, seed, jobs).reshape(-1, len(_FIELDS))
    err, dn, ccv = vals[:, 0], vals[:, 1], vals[:, 2]
    cond = ccv <= CC_LIMIT
    sandwich = cond & (0.5 * dn <= err) & (err <= dn)
    covered = err <= R
    f_max = vals[:, 3] <= pop["M_X"] * _log_term(inputs) ** (1.0 / cfg["theta"])
    f_hess = vals[:, 4] >= pop["C_min"] / 2.0
    f_y = vals[:, 5] <= pop["B"]
    level = float(cfg["level"])
    s_lo, s_hi = clopper_pearson(int(sandwich.sum()), reps, level)
    c_lo, c_hi = clopper_pearson(int(covered.sum()), reps, level)
    claimed = 1.0 - 2.0 * p * p * cn - cfg["delta"]
    records = [{"rep": i, **{f: float(vals[i, j]) for j, f in enumerate(_FIELDS)},
                "c_condition": bool(cond[i]), "sandwich": bool(sandwich[i]), "within_R_n": bool(covered[i])}
               for i in range(reps)]
    summary = {
        "R_n": R, "sample_condition": cc_ok, "R_n_times_I_n": R * pop["I_n"], "c_n": cn,
        "claimed_probability": claimed, "epsilon_n": "unverified residual probability",
        "population": pop,
        "c_condition_freq": float(cond.mean()), "sandwich_freq": float(sandwich.mean()),
        "sandwich_cp": [s_lo, s_hi], "coverage_freq": float(covered.mean()), "coverage_cp": [c_lo, c_hi],
        "proxy_failures": {"F_max": int((~f_max).sum()), "hessian_min_eig": int((~f_hess).sum()),
                           "F_Y": int((~f_y).sum())},
        "sandwich_pass": bool(sandwich.mean() >= 0.95),
        "coverage_status": ("vacuous" if claimed <= 0 else ("pass" if c_hi >= claimed else "fail")),
    }
    cfg_out = {k_: v for k_, v in cfg.items()}
    return SimReport("nbr", int(seed), reps, cfg_out, records, summary)

"""Explicit constants appearing in the sub-Weibull concentration bounds.

Every sup/inf constant is computed by two independent numeric routes:

* route ``"grid"``: a dense grid over the search interval followed by a
  golden-section refinement around the best grid point (own code);
* route ``"scipy"``: bounded Brent minimisation (``scipy.optimize``) on a
  ladder of doubling sub-intervals, keeping the best local optimum.

The public functions use the grid route; :func:`cross_check` runs both so the
results can be compared.  All Gamma-function objectives are handled in log
space through :func:`scipy.special.gammaln`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gammaln

from .errors import InputError, NumericError

__all__ = [
    "ConstantBundle",
    "gamma_defining_lhs",
    "gamma_minimal",
    "c_theta_moment_const",
    "moment_sup",
    "moment_inf",
    "big_c",
    "a_b_theta",
    "beta_conjugate",
    "k_theta",
    "d_theta",
    "l_n",
    "centering_factor",
    "h_bound",
    "constant_bundle",
    "cross_check",
    "P_MAX_DEFAULT",
]

P_MAX_DEFAULT = 500.0
_GRID_STEP = 1e-2
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not (math.isfinite(theta) and theta > 0):
        raise InputError(f"theta must be positive and finite, got {theta!r}")
    return theta


# ---------------------------------------------------------------------------
# gamma: the minimal root of the GBO moment-to-norm inequality
# ---------------------------------------------------------------------------

def gamma_defining_lhs(k: float) -> float:
    """Left-hand side e^{2/k^2} - 1 + e^{2(1-k^2)/k^2}/(k^2-1) of the gamma condition.

    ``k`` must exceed 1; the constant gamma is the smallest such ``k`` at which
    this expression is at most 1.
    """
    k = float(k)
    if k <= 1.0:
        return math.inf
    k2 = k * k
    return math.expm1(2.0 / k2) + math.exp(2.0 * (1.0 - k2) / k2) / (k2 - 1.0)


def _gamma_feasible(k: float) -> bool:
    return gamma_defining_lhs(k) <= 1.0


@lru_cache(maxsize=None)
def gamma_minimal(tolerance: float = 1e-10) -> float:
    """Smallest ``k > 1`` satisfying the gamma condition, to ``tolerance``.

    The left side blows up as ``k -> 1+`` and decays to 0 as ``k -> inf``.  A
    forward scan with step ``tolerance``-independent spacing (1e-3) finds the
    first feasible point, then bisection shrinks the bracket.  The returned
    value is always the feasible end of the final bracket.
    """
    tolerance = float(tolerance)
    if not (0.0 < tolerance <= 1e-2):
        raise InputError("tolerance must lie in (0, 1e-2]")
    step = 1e-3
    lo = 1.0 + step
    while _gamma_feasible(lo):  # pragma: no cover - lhs is infinite near 1
        lo = 1.0 + (lo - 1.0) / 2.0
    hi = lo
    while not _gamma_feasible(hi):
        lo = hi
        hi += step
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if _gamma_feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# generic 1-D optimisation helpers (two independent routes)
# ---------------------------------------------------------------------------

def _golden_max(f: Callable[[float], float], a: float, b: float, tol: float = 1e-12) -> tuple[float, float]:
    """Golden-section search for a maximiser of a unimodal ``f`` on [a, b]."""
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > tol * max(1.0, abs(a) + abs(b)):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    x = c if fc >= fd else d
    return x, max(fc, fd)


def _grid_max(f_vec: Callable[[np.ndarray], np.ndarray], f: Callable[[float], float],
              lo: float, hi: float, step: float = _GRID_STEP) -> tuple[float, float]:
    """Grid search on [lo, hi] then golden refinement next to the best node."""
    n = int(math.ceil((hi - lo) / step)) + 1
    xs = np.linspace(lo, hi, n)
    vals = f_vec(xs)
    i = int(np.nanargmax(vals))
    best_x, best_v = float(xs[i]), float(vals[i])
    a = float(xs[max(i - 1, 0)])
    b = float(xs[min(i + 1, n - 1)])
    if b > a:
        x, v = _golden_max(f, a, b)
        if v > best_v:
            best_x, best_v = x, v
    return best_x, best_v


def _scipy_max(f: Callable[[float], float], lo: float, hi: float) -> tuple[float, float]:
    """Bounded Brent search on doubling sub-intervals of [lo, hi]; endpoints included."""
    cands = [(lo, f(lo)), (hi, f(hi))]
    a = lo
    while a < hi:
        b = min(hi, max(2.0 * a, a + 1.0))
        res = minimize_scalar(lambda x: -f(x), bounds=(a, b), method="bounded",
                              options={"xatol": 1e-10})
        cands.append((float(res.x), -float(res.fun)))
        a = b
    return max(cands, key=lambda c: c[1])


def _optimise(f_vec, f, lo, hi, route: str, maximise: bool) -> tuple[float, float]:
    sign = 1.0 if maximise else -1.0
    g_vec = lambda x: sign * f_vec(x)  # noqa: E731
    g = lambda x: sign * f(x)  # noqa: E731
    if route == "grid":
        x, v = _grid_max(g_vec, g, lo, hi)
    elif route == "scipy":
        x, v = _scipy_max(g, lo, hi)
    else:
        raise InputError(f"unknown optimisation route {route!r}")
    return x, sign * v


# ---------------------------------------------------------------------------
# C_theta (moment constant)
# ---------------------------------------------------------------------------

def _log_c_obj(k, theta):
    a = 2.0 * math.sqrt(2.0 * math.pi) / theta
    return (math.log(a) + 0.5 * np.log(np.asarray(k, dtype=float) / theta)) / np.asarray(k, dtype=float)


def _c_theta_route(theta: float, route: str) -> tuple[float, float]:
    f_vec = lambda k: _log_c_obj(k, theta)  # noqa: E731
    f = lambda k: float(_log_c_obj(k, theta))  # noqa: E731
    hi = 200.0
    while True:
        k, v = _optimise(f_vec, f, 1.0, hi, route, maximise=True)
        if k < hi - 1.0:
            return k, math.exp(v)
        hi *= 4.0  # maximiser sits on the boundary: widen geometrically


@lru_cache(maxsize=None)
def c_theta_moment_const(theta: float) -> float:
    """C_theta = max over real k >= 1 of (2 sqrt(2 pi)/theta)^{1/k} (k/theta)^{1/(2k)}.

    Coarse grid on [1, 200] with 1e-2 spacing plus golden refinement; the
    upper end is extended geometrically if the maximiser lands on it.
    """
    theta = _check_theta(theta)
    return _c_theta_route(theta, "grid")[1]


# ---------------------------------------------------------------------------
# C(theta), A(theta), B(theta)
# ---------------------------------------------------------------------------

def _log_moment_obj(p, theta):
    p = np.asarray(p, dtype=float)
    return -np.log(p) / theta + gammaln(p / theta + 1.0) / p


def moment_limit(theta: float) -> float:
    """Limit of p^{-1/theta} Gamma(p/theta+1)^{1/p} as p -> inf, i.e. (theta e)^{-1/theta}."""
    theta = _check_theta(theta)
    return (theta * math.e) ** (-1.0 / theta)


def moment_sup(theta: float, p_max: float = P_MAX_DEFAULT, route: str = "grid") -> tuple[float, float]:
    """sup over real p in [2, p_max] of p^{-1/theta} Gamma^{1/p}(p/theta + 1).

    Returns ``(argmax, value)``.  A monotone-tail guard checks that both the
    objective at ``p_max`` and its p -> inf limit stay below the running max,
    otherwise the truncated sup could be too small.
    """
    theta = _check_theta(theta)
    f_vec = lambda p: _log_moment_obj(p, theta)  # noqa: E731
    f = lambda p: float(_log_moment_obj(p, theta))  # noqa: E731
    p, v = _optimise(f_vec, f, 2.0, float(p_max), route, maximise=True)
    value = math.exp(v)
    tail = max(math.exp(f(p_max)), moment_limit(theta))
    if tail > value * (1.0 + 1e-12):
        raise NumericError(f"sup not resolved on [2, {p_max}] for theta={theta}")
    return p, value


def moment_inf(theta: float, p_max: float = P_MAX_DEFAULT, route: str = "grid",
               include_limit: bool = True) -> tuple[float, float]:
    """inf over p >= 2 of p^{-1/theta} Gamma^{1/p}(p/theta + 1).

    The search covers [2, p_max]; with ``include_limit`` the analytic p -> inf
    limit (theta e)^{-1/theta} also competes, so the infimum over the whole
    half-line is returned.  The argmin is ``inf`` when the limit wins.
    """
    theta = _check_theta(theta)
    f_vec = lambda p: _log_moment_obj(p, theta)  # noqa: E731
    f = lambda p: float(_log_moment_obj(p, theta))  # noqa: E731
    p, v = _optimise(f_vec, f, 2.0, float(p_max), route, maximise=False)
    value = math.exp(v)
    if include_limit:
        lim = moment_limit(theta)
        if lim < value:
            return math.inf, lim
    return p, value


def _big_c_small(theta: float, sup_val: float) -> float:
    g2 = math.exp(0.5 * gammaln(2.0 / theta + 1.0))
    three = 3.0 ** ((2.0 - theta) / (3.0 * theta))
    return 2.0 * (math.log(2.0) ** (1.0 / theta) + math.e ** 3 * (g2 + three * sup_val))


@lru_cache(maxsize=None)
def _big_c_cached(theta: float, p_max: float, route: str) -> float:
    if theta > 1.0:
        return 2.0 * (4.0 * math.e + math.log(2.0) ** (1.0 / theta))
    _, s = moment_sup(theta, p_max, route)
    return _big_c_small(theta, s)


def big_c(theta: float, p_max: float = P_MAX_DEFAULT, route: str = "grid") -> float:
    """Two-branch constant C(theta) of the GBO bound for weighted sums."""
    theta = _check_theta(theta)
    return _big_c_cached(theta, float(p_max), route)


def beta_conjugate(theta: float) -> Optional[float]:
    """Hoelder conjugate beta with 1/theta + 1/beta = 1 (only for theta > 1)."""
    theta = _check_theta(theta)
    if theta <= 1.0:
        return None
    return theta / (theta - 1.0)


@lru_cache(maxsize=None)
def _a_b_cached(theta: float, p_max: float, route: str, include_limit: bool):
    if theta > 1.0:
        beta = theta / (theta - 1.0)
        b = (2.0 * math.e * theta ** (-1.0 / theta) * (1.0 - 1.0 / theta) ** (1.0 / beta)
             / (4.0 * math.e + math.log(2.0) ** (1.0 / theta)))
    else:
        b = None
    _, inf_val = moment_inf(theta, p_max, route, include_limit)
    three = 3.0 ** ((2.0 - theta) / (3.0 * theta))
    # A always carries the theta <= 1 form of C(theta) in its denominator.
    _, sup_val = moment_sup(theta, p_max, route)
    a = math.e ** 3 * three * inf_val / _big_c_small(theta, sup_val)
    return a, b


def a_b_theta(theta: float, p_max: float = P_MAX_DEFAULT, route: str = "grid",
              include_limit: bool = True) -> tuple[float, Optional[float]]:
    """Return ``(A(theta), B(theta))``; ``B`` is ``None`` when theta <= 1.

    A(theta) is the infimum over p >= 2 of e^3 3^{(2-theta)/(3 theta)}
    p^{-1/theta} Gamma^{1/p}(p/theta+1) divided by the theta <= 1 expression
    for C(theta).  B(theta) is closed form.
    """
    theta = _check_theta(theta)
    return _a_b_cached(theta, float(p_max), route, bool(include_limit))


# ---------------------------------------------------------------------------
# L_n, centering factor, H
# ---------------------------------------------------------------------------

def k_theta(theta: float) -> float:
    """K_theta = 2^{1/theta} for theta < 1 and 1 otherwise."""
    theta = _check_theta(theta)
    return 2.0 ** (1.0 / theta) if theta < 1.0 else 1.0


def d_theta(theta: float) -> float:
    """d_theta = (theta e)^{1/theta} / 2."""
    theta = _check_theta(theta)
    return (theta * math.e) ** (1.0 / theta) / 2.0


def l_n(theta: float, b: Sequence[float], p_max: float = P_MAX_DEFAULT) -> float:
    """L_n(theta, b) = gamma^{2/theta} A ||b||_inf/||b||_2 (theta <= 1) or gamma^{2/theta} B ||b||_beta/||b||_2."""
    theta = _check_theta(theta)
    b = np.abs(np.asarray(b, dtype=float).ravel())
    if b.size == 0 or not np.all(np.isfinite(b)):
        raise InputError("weights must be a nonempty finite vector")
    scale = float(b.max())
    if scale == 0.0:
        raise InputError("degenerate weights")
    b = b / scale  # ratios are scale free; this keeps the norms well conditioned
    two = float(np.sqrt(np.sum(b * b)))
    g = gamma_minimal() ** (2.0 / theta)
    a, bb = a_b_theta(theta, p_max)
    if theta <= 1.0:
        return g * a * 1.0 / two
    beta = theta / (theta - 1.0)
    nb = float(np.sum(b ** beta) ** (1.0 / beta))
    return g * bb * nb / two


def centering_factor(theta: float) -> float:
    """K_theta (1 + (d_theta log 2)^{-1/theta}), the factor bounding ||X - EX|| / ||X||."""
    theta = _check_theta(theta)
    return k_theta(theta) * (1.0 + (d_theta(theta) * math.log(2.0)) ** (-1.0 / theta))


def h_bound(t: float, n: int, theta: float, K: float) -> float:
    """The function H(t, n; theta) controlling ||A^T A/n - I|| for sub-Weibull rows.

    Evaluated exactly as displayed, including its own centering bracket
    K_{theta/2}[1 + ((e theta/2)^{theta/2} log 2)^{-theta/2}], which is not the
    same expression as :func:`centering_factor` at index theta/2.
    """
    theta = _check_theta(theta)
    t, K = float(t), float(K)
    if not (t > 0 and K > 0 and int(n) >= 1):
        raise InputError("h_bound needs t > 0, n >= 1 and K > 0")
    n = int(n)
    half = theta / 2.0
    centre = k_theta(half) * (1.0 + ((math.e * half) ** half * math.log(2.0)) ** (-half))
    lead = 2.0 * math.e * K * big_c(half) * centre
    g2t = (gamma_minimal() ** 2 * t) ** (2.0 / theta)
    a, b = a_b_theta(half)
    if theta <= 2.0:
        extra = a * g2t / n
    else:
        extra = b * g2t / n ** (1.0 / theta)
    return lead * (math.sqrt(t / n) + extra)


# ---------------------------------------------------------------------------
# bundle and cross-check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantBundle:
    """All per-theta constants in one record."""

    theta: float
    gamma: float
    bigC: float
    a_theta: float
    b_theta: Optional[float]
    c_theta: float
    k_theta: float
    d_theta: float
    beta_conjugate: Optional[float]
    centering_factor: float

    def to_dict(self) -> dict:
        return asdict(self)


def constant_bundle(theta: float, p_max: float = P_MAX_DEFAULT) -> ConstantBundle:
    theta = _check_theta(theta)
    a, b = a_b_theta(theta, p_max)
    return ConstantBundle(
        theta=theta,
        gamma=gamma_minimal(),
        bigC=big_c(theta, p_max),
        a_theta=a,
        b_theta=b,
        c_theta=c_theta_moment_const(theta),
        k_theta=k_theta(theta),
        d_theta=d_theta(theta),
        beta_conjugate=beta_conjugate(theta),
        centering_factor=centering_factor(theta),
    )


def cross_check(theta: float, p_max: float = P_MAX_DEFAULT) -> dict:
    """Evaluate the sup/inf constants by both routes and report relative gaps.

    The inf for A is compared on the finite window [2, p_max] (without the
    analytic limit) so that the two optimisers are actually exercised.
    """
    theta = _check_theta(theta)
    out: dict = {"theta": theta, "p_max": float(p_max)}
    for route in ("grid", "scipy"):
        sup_p, sup_v = moment_sup(theta, p_max, route)
        inf_p, inf_v = moment_inf(theta, p_max, route, include_limit=False)
        _, c_v = _c_theta_route(theta, route)
        out[route] = {
            "sup_argmax": sup_p, "sup": sup_v,
            "inf_window_argmin": inf_p, "inf_window": inf_v,
            "bigC": big_c(theta, p_max, route),
            "A_window": a_b_theta(theta, p_max, route, include_limit=False)[0],
            "c_theta": c_v,
        }
    rel = {}
    for key in ("sup", "inf_window", "bigC", "A_window", "c_theta"):
        x, y = out["grid"][key], out["scipy"][key]
        rel[key] = abs(x - y) / max(abs(x), abs(y))
    out["relative_gap"] = rel
    out["max_relative_gap"] = max(rel.values())
    return out

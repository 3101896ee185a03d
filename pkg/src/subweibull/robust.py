"""Log-truncated Z-estimation of a mean under heavy tails.

The score uses phi^c(x) = sign(x) log(1 + |x| + c(|x|)) for a high-order
function ``c``.  The estimator is any root of
Z(theta) = (1/(n alpha)) sum phi^c(alpha (X_i - theta)); since phi^c is
non-decreasing, Z is non-increasing in theta and bisection finds a root.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .data import as_array
from .distributions import DistributionSpec
from .errors import InputError, NumericError
from .montecarlo import RngStream, clopper_pearson, sample, sharded_statistic

__all__ = [
    "CFunction", "power_c", "validate_cfunction", "phi_c", "z_score", "solve_z",
    "min_sample_size", "choose_alpha", "choose_alpha_general", "g_alpha", "deviation_bound",
    "chen_bound", "empirical_c_moment", "confidence_endpoints", "certify_subweibull_estimator",
    "robust_mean_experiment",
    "RobustConfig",
]


@dataclass(frozen=True)
class CFunction:
    """Truncation shape c with weak-triangle constant c2 and scaling majorant f."""

    c: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    c2: float
    f: Callable[[float], float] = field(repr=False)
    f_inv: Callable[[float], float] = field(repr=False)
    label: str
    beta: Optional[float] = None


@dataclass(frozen=True)
class RobustConfig:
    alpha: float
    delta: float
    beta: Optional[float] = None
    v_beta: Optional[float] = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise InputError("alpha must be positive")
        if not (0.0 < self.delta < 0.5):
            raise InputError("delta must lie in (0, 1/2)")


def power_c(beta: float) -> CFunction:
    """c(x) = |x|^beta / beta with c2 = 2^{beta-1} and f(t) = |t|^beta, for beta in (1, 2]."""
    beta = float(beta)
    if not (1.0 < beta <= 2.0):
        raise InputError("beta must lie in (1, 2]")
    return CFunction(
        c=lambda x: np.abs(x) ** beta / beta,
        c2=2.0 ** (beta - 1.0),
        f=lambda t: abs(t) ** beta,
        f_inv=lambda y: y ** (1.0 / beta),
        label=f"power(beta={beta:g})",
        beta=beta,
    )


def validate_cfunction(cf: CFunction, grid: Optional[np.ndarray] = None) -> dict:
    """Grid checks of admissibility, the weak triangle inequality and the scaling rule."""
    x = np.linspace(-10.0, 10.0, 1001) if grid is None else np.asarray(grid, dtype=float)
    cx = cf.c(np.abs(x))
    admissible = bool(np.all(cx >= np.sqrt(1.0 + x * x) - 1.0 - 1e-15))
    xs, ys = np.meshgrid(x[::25], x[::25])
    triangle = bool(np.all(cf.c(xs + ys) <= cf.c2 * (cf.c(xs) + cf.c(ys)) * (1 + 1e-12) + 1e-300))
    ts = np.array([0.01, 0.1, 0.5, 1.0, 2.0, 5.0])
    # f(t)/t must increase and vanish at 0; a geometric grid reaches the limit
    small = np.array([1e-300, 1e-100, 1e-30, 1e-10])
    ratio = np.array([cf.f(t) / t for t in np.concatenate([small, ts])])
    scaling = bool(np.all(np.diff(ratio) > 0) and ratio[0] < 0.2)
    majorant = bool(all(np.all(cf.c(t * x) <= cf.f(t) * cf.c(x) * (1 + 1e-12) + 1e-300) for t in ts))
    return {"admissible": admissible, "weak_triangle": triangle, "f_ratio_increasing": scaling,
            "scaling_majorant": majorant,
            "ok": admissible and triangle and scaling and majorant}


def phi_c(x, cf: CFunction):
    """sign(x) log(1 + |x| + c(|x|)); odd and non-decreasing."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    out = np.sign(x) * np.log1p(ax + cf.c(ax))
    return out if out.ndim else float(out)


def z_score(theta: float, samples, alpha: float, cf: CFunction) -> float:
    """Z_alpha(theta) = (1/(n alpha)) sum phi^c(alpha (X_i - theta))."""
    if not alpha > 0:
        raise InputError("alpha must be positive")
    x = as_array(samples)
    return float(np.mean(phi_c(alpha * (x - theta), cf)) / alpha)


def solve_z(samples, alpha: float, cf: CFunction, tol: float = 1e-12) -> float:
    """A root of the score by bisection on [min X - 1, max X + 1]."""
    x = as_array(samples)
    if not alpha > 0:
        raise InputError("alpha must be positive")
    lo, hi = float(x.min()) - 1.0, float(x.max()) + 1.0
    z = lambda th: float(np.mean(phi_c(alpha * (x - th), cf)))  # noqa: E731
    width = hi - lo
    while z(lo) < 0:  # pragma: no cover - the score is positive left of min X
        lo -= width
        width *= 2
    while z(hi) > 0:  # pragma: no cover
        hi += width
        width *= 2
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        zm = z(mid)
        if zm == 0.0:
            return mid
        if zm > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# tuning and radii for c(x) = |x|^beta / beta
# ---------------------------------------------------------------------------

def min_sample_size(beta: float, epsilon: float, v_beta: float) -> float:
    """Smallest n allowed by the sample-size condition ((2v+1)/beta)^{beta/(beta-1)} 2 beta log(1/eps) / v."""
    beta, epsilon, v_beta = float(beta), float(epsilon), float(v_beta)
    if not (1.0 < beta <= 2.0 and 0.0 < epsilon < 0.5 and v_beta > 0):
        raise InputError("need beta in (1, 2], epsilon in (0, 1/2), v_beta > 0")
    return ((2.0 * v_beta + 1.0) / beta) ** (beta / (beta - 1.0)) * 2.0 * beta * math.log(1.0 / epsilon) / v_beta


def choose_alpha(n: int, beta: float, epsilon: float, v_beta: float,
                 return_info: bool = False):
    """alpha = (1/2) (2 beta log(1/eps) / (n v_beta))^{1/beta}.

    A ``RuntimeWarning`` is raised (and ``condition_ok`` is False in the info
    dict) when n is below :func:`min_sample_size`.
    """
    n_min = min_sample_size(beta, epsilon, v_beta)
    if int(n) < 1:
        raise InputError("n must be positive")
    alpha = 0.5 * (2.0 * beta * math.log(1.0 / epsilon) / (n * v_beta)) ** (1.0 / beta)
    ok = n >= n_min
    if not ok:
        warnings.warn(f"n={n} is below the sample-size requirement {n_min:.6g}", RuntimeWarning,
                      stacklevel=2)
    if return_info:
        return {"alpha": alpha, "n_min": n_min, "condition_ok": ok}
    return alpha


def choose_alpha_general(delta: float, cf: CFunction, c_moment_sum: float) -> float:
    """alpha = f^{-1}(log(1/delta) / (c2 sum_i E c(X_i - mu))), the general tuning floor."""
    if not (0.0 < delta < 0.5) or not c_moment_sum > 0:
        raise InputError("need delta in (0, 1/2) and a positive c-moment sum")
    return cf.f_inv(math.log(1.0 / delta) / (cf.c2 * c_moment_sum))


def g_alpha(t, alpha: float, cf: CFunction):
    """g_alpha(t) = t + (c2/alpha) c(alpha t)."""
    t = np.asarray(t, dtype=float)
    out = t + cf.c2 / alpha * cf.c(alpha * t)
    return out if out.ndim else float(out)


def _branch_floor(alpha: float, cf: CFunction) -> tuple[float, float]:
    """Left end t* < 0 of the increasing branch of g_alpha through 0, and g(t*)."""
    if cf.beta is not None and cf.beta > 1.0:
        b = cf.beta
        ts = (1.0 / (cf.c2 * alpha ** (b - 1.0))) ** (1.0 / (b - 1.0))
        return -ts, float(g_alpha(-ts, alpha, cf))
    # generic c: walk left until g turns upward, then golden-search the minimum
    T = 1.0 / alpha
    while g_alpha(-2.0 * T, alpha, cf) < g_alpha(-T, alpha, cf):
        T *= 2.0
        if T > 1e300:
            return -math.inf, -math.inf
    a, b = -2.0 * T, 0.0
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    for _ in range(300):
        c1, c2 = b - gr * (b - a), a + gr * (b - a)
        if g_alpha(c1, alpha, cf) < g_alpha(c2, alpha, cf):
            b = c2
        else:
            a = c1
    tm = 0.5 * (a + b)
    return tm, float(g_alpha(tm, alpha, cf))


def deviation_bound(n: int, alpha: float, delta: float, cf: CFunction) -> float:
    """|g_alpha^{-1}(-2 log(1/delta)/(n alpha))| on the increasing branch containing 0."""
    if not (alpha > 0 and 0.0 < delta < 1.0 and int(n) >= 1):
        raise InputError("need alpha > 0, delta in (0, 1) and n >= 1")
    y = -2.0 * math.log(1.0 / delta) / (n * alpha)
    t_floor, g_floor = _branch_floor(alpha, cf)
    if y < g_floor:
        raise NumericError("confidence level unattainable at this (n, alpha)")
    lo, hi = t_floor, 0.0
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if g_alpha(mid, alpha, cf) < y:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(lo)):
            break
    return abs(0.5 * (lo + hi))


def chen_bound(n: int, beta: float, epsilon: float, v_beta: float) -> float:
    """Radius 2 (2 beta log(1/eps)/n)^{(beta-1)/beta} v^{1/beta} / [beta - (2 beta log(1/eps)/(n v))^{(beta-1)/beta}]."""
    n_min = min_sample_size(beta, epsilon, v_beta)
    if n < n_min:
        warnings.warn(f"n={n} is below the sample-size requirement {n_min:.6g}", RuntimeWarning,
                      stacklevel=2)
    e = (beta - 1.0) / beta
    L = 2.0 * beta * math.log(1.0 / epsilon)
    denom = beta - (L / (n * v_beta)) ** e
    if denom <= 0:
        raise NumericError("radius undefined: bracket term is not positive")
    return 2.0 * (L / n) ** e * v_beta ** (1.0 / beta) / denom


# ---------------------------------------------------------------------------
# interval endpoints from population c-moments
# ---------------------------------------------------------------------------

def empirical_c_moment(samples, cf: CFunction) -> Callable[[float, float], float]:
    """Plug-in (alpha, theta) -> mean c(alpha (X_i - theta)); an approximation to the population version."""
    x = as_array(samples)
    return lambda a, th: float(np.mean(cf.c(a * (x - th))))


def confidence_endpoints(c_moment: Callable[[float, float], float], mu_n: float, n: int,
                         alpha: float, delta: float, budget: int = 60, scan: int = 2000) -> dict:
    """Endpoints (theta_-, theta_+) solving B_n^-(theta) = 0 and B_n^+(theta) = 0.

    ``c_moment(alpha, theta)`` must return (1/n) sum_i E c(alpha (X_i - theta)).
    theta_+ is the smallest root right of mu_n, theta_- the largest root left
    of it; each bracket half-width d is doubled until a sign change appears.
    """
    cfg = RobustConfig(alpha, delta)
    lg = math.log(1.0 / cfg.delta) / (n * alpha)

    def b_plus(th):
        return mu_n - th + c_moment(alpha, th) / alpha + lg

    def b_minus(th):
        return mu_n - th - c_moment(alpha, th) / alpha - lg

    def find(bfun, sign):
        d = max(lg, 1e-12)
        for _ in range(budget):
            if sign * bfun(mu_n + sign * d) < 0:
                break
            d *= 2.0
        else:
            raise NumericError("sample condition unmet")
        # scan outward from mu_n for the first sign change, then bisect
        grid = mu_n + sign * d * np.linspace(0.0, 1.0, scan + 1)
        vals = np.array([sign * bfun(g) for g in grid])
        j = int(np.argmax(vals < 0))
        a, b = grid[j - 1], grid[j]
        fa = sign * bfun(a)
        for _ in range(200):
            m = 0.5 * (a + b)
            fm = sign * bfun(m)
            if (fm > 0) == (fa > 0):
                a, fa = m, fm
            else:
                b = m
            if abs(b - a) <= 1e-14 * max(1.0, abs(m)):
                break
        return 0.5 * (a + b), d

    th_plus, d_plus = find(b_plus, +1.0)
    th_minus, d_minus = find(b_minus, -1.0)
    d = max(d_plus, d_minus)
    cond = (max(c_moment(alpha, mu_n + d), c_moment(alpha, mu_n - d)) / alpha + lg) < d
    return {"theta_minus": th_minus, "theta_plus": th_plus, "d_n": d,
            "sample_condition": bool(cond)}


# ---------------------------------------------------------------------------
# certification of sub-Weibull estimators
# ---------------------------------------------------------------------------

def certify_subweibull_estimator(estimator: Callable[[np.ndarray], float], dist: DistributionSpec,
                                 theta: float, A: float, B: float, C: float,
                                 t_grid: Sequence[float], reps: int, seed: int, n: int,
                                 level: float = 0.99, jobs: int = 1, min_reps: int = 1000) -> dict:
    """Check P(|mu_hat - mu| <= B (t/n)^{1/theta}) >= 1 - C e^{-t} for t in t_grid within (0, A).

    A grid point fails only when the Clopper-Pearson upper limit of the
    coverage falls below 1 - C e^{-t}.
    """
    if int(reps) < min_reps:
        raise InputError(f"reps must be at least {min_reps}")
    mu = dist.mean()

    def draw(rng: RngStream, m: int) -> np.ndarray:
        return np.array([abs(estimator(sample(dist, rng, n)) - mu) for _ in range(m)])

    err = sharded_statistic(draw, reps, seed, jobs)
    records = []
    for t in t_grid:
        if not (0.0 < t < A):
            continue
        radius = B * (t / n) ** (1.0 / theta)
        hits = int(np.count_nonzero(err <= radius))
        lo, hi = clopper_pearson(hits, len(err), level)
        target = 1.0 - C * math.exp(-t)
        records.append({"t": float(t), "radius": radius, "coverage": hits / len(err),
                        "cp_lower": lo, "cp_upper": hi, "target": target, "pass": hi >= target})
    return {"dist": dist.label(), "theta": theta, "A": A, "B": B, "C": C, "n": n, "reps": int(reps),
            "seed": int(seed), "records": records, "pass": all(r["pass"] for r in records)}


def robust_mean_experiment(dist: DistributionSpec, n: int, reps: int, seed: int, beta: float = 1.5,
                           epsilon: float = 0.05, level: float = 0.99, jobs: int = 1) -> dict:
    """Coverage of the radius from :func:`chen_bound` around the tuned estimate.

    ``v_beta`` is the exact centred beta-moment of ``dist``.  The check passes
    when the Clopper-Pearson upper limit of the coverage reaches 1 - 2 epsilon.
    """
    if int(reps) < 1 or int(n) < 2:
        raise InputError("need reps >= 1 and n >= 2")
    mu = dist.mean()
    centred = DistributionSpec(dist.kind, dist.params, centered=True)
    v = centred.abs_moment(beta)
    cf = power_c(beta)
    info = choose_alpha(n, beta, epsilon, v, return_info=True)
    radius = chen_bound(n, beta, epsilon, v)

    def draw(rng: RngStream, m: int) -> np.ndarray:
        return np.array([solve_z(sample(dist, rng, n), info["alpha"], cf) - mu for _ in range(m)])

    err = sharded_statistic(draw, reps, seed, jobs)
    hits = int(np.count_nonzero(np.abs(err) <= radius))
    lo, hi = clopper_pearson(hits, len(err), level)
    target = 1.0 - 2.0 * epsilon
    return {"dist": dist.label(), "n": int(n), "reps": int(reps), "seed": int(seed), "beta": beta,
            "epsilon": epsilon, "v_beta": v, "alpha": info["alpha"], "sample_condition": info["condition_ok"],
            "radius": radius, "coverage": hits / len(err), "cp_lower": lo, "cp_upper": hi,
            "target": target, "max_abs_error": float(np.abs(err).max()), "pass": hi >= target}

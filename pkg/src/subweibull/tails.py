"""Tail bounds, deviation radii and confidence intervals with explicit constants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import constants
from .data import as_array
from .errors import InputError, NumericError
from .norms import NormValue, estimate_phi_norm, estimate_psi_norm_emgf

__all__ = [
    "TailBound", "WeightedFamily",
    "tail_single_psi", "tail_single_phi", "single_psi_bound", "single_phi_bound",
    "tail_subexp_sum", "subexp_deviation", "subexp_sum_bound",
    "nb_a", "tail_nb_sum", "nb_sum_bound",
    "sum_gbo_norm", "sum_deviation", "sum_deviation_t", "gbo_deviation_tail",
    "crossover_point", "two_regime_exponents", "sum_tail_two_regime", "sum_tail_two_regime_branches",
    "gbo_tail", "phi_sum_threshold", "phi_sum_tail", "phi_sum_ci", "phi_sum_mixed", "phi_sum_bound",
    "confidence_interval", "reference_example_comparison", "best_bound", "comparison_shape_bound",
]


@dataclass(frozen=True)
class TailBound:
    """An evaluable map t -> upper bound on a tail probability.

    ``raw(t)`` is the uncapped expression.  :meth:`evaluate` caps it to [0, 1]
    and reports it as vacuous when ``t`` is below ``valid_from`` or the cap
    binds.  ``certified`` is False for comparison shapes with unknown
    constants.
    """

    kind: str
    raw: Callable[[float], float] = field(repr=False, compare=False)
    constants: dict = field(default_factory=dict)
    valid_from: float = 0.0
    certified: bool = True

    def evaluate(self, t: float) -> dict:
        t = float(t)
        if t < self.valid_from:
            return {"t": t, "bound": 1.0, "vacuous": True, "reason": "below validity threshold"}
        v = float(self.raw(t))
        if not v < 1.0:
            return {"t": t, "bound": 1.0, "vacuous": True, "reason": "cap binds"}
        return {"t": t, "bound": max(0.0, v), "vacuous": False}

    def __call__(self, t: float) -> float:
        return self.evaluate(t)["bound"]

    def report(self, t_grid: Sequence[float]) -> dict:
        evals = [self.evaluate(t) for t in t_grid]
        return {"kind": self.kind, "constants": dict(self.constants), "valid_from": self.valid_from,
                "certified": self.certified, "t_grid": [e["t"] for e in evals],
                "bound_values": [e["bound"] for e in evals],
                "vacuous_flags": [e["vacuous"] for e in evals]}


@dataclass(frozen=True)
class WeightedFamily:
    """Weights and per-summand norms for sum_i w_i X_i."""

    weights: tuple
    psi_norms: tuple
    theta: float
    means: Optional[tuple] = None

    def __post_init__(self):
        w = tuple(float(x) for x in np.atleast_1d(self.weights))
        v = tuple(float(x) for x in np.atleast_1d(self.psi_norms))
        if len(v) == 1 and len(w) > 1:
            v = v * len(w)
        if len(w) == 1 and len(v) > 1:
            w = w * len(v)
        if len(w) != len(v) or not w:
            raise InputError("weights and norms must have equal nonzero length")
        if any(x < 0 or not math.isfinite(x) for x in v):
            raise InputError("norms must be finite and nonnegative")
        if not all(math.isfinite(x) for x in w):
            raise InputError("weights must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "psi_norms", v)
        object.__setattr__(self, "theta", constants._check_theta(self.theta))
        if self.means is not None:
            m = tuple(float(x) for x in np.atleast_1d(self.means))
            if len(m) != len(w):
                raise InputError("means must match weights in length")
            object.__setattr__(self, "means", m)

    @property
    def b(self) -> np.ndarray:
        return np.abs(np.asarray(self.weights)) * np.asarray(self.psi_norms)

    def b_norm2(self) -> float:
        b = self.b
        if not np.any(b > 0):
            raise InputError("degenerate weights")
        return float(np.linalg.norm(b))


def _cap(x: float) -> float:
    return min(1.0, max(0.0, x))


def _solve_increasing(r: Callable[[float], float], s: float) -> float:
    """Smallest t >= 0 with r(t) = s for a continuous increasing r with r(0) = 0."""
    if s <= 0:
        return 0.0
    hi = 1.0
    while r(hi) < s:
        hi *= 2.0
        if hi > 1e300:
            raise NumericError("deviation inversion did not bracket")
    return brentq(lambda t: r(t) - s, 0.0, hi, xtol=1e-14, rtol=1e-14, maxiter=500)


# ---------------------------------------------------------------------------
# single variables
# ---------------------------------------------------------------------------

def tail_single_psi(norm: NormValue, t: float) -> float:
    """min(1, 2 exp(-(t/||X||_psi)^theta))."""
    return single_psi_bound(norm)(t)


def single_psi_bound(norm: NormValue) -> TailBound:
    if norm.family != "psi":
        raise InputError("expected a psi norm")
    v, th = norm.value, norm.theta
    return TailBound("single_psi", lambda t: 2.0 * math.exp(-(t / v) ** th),
                     {"norm": v, "theta": th})


def tail_single_phi(norm: NormValue, t: float) -> float:
    """min(1, 2 exp(-t^theta / (2 ||X||_phi^theta)))."""
    return single_phi_bound(norm)(t)


def single_phi_bound(norm: NormValue) -> TailBound:
    if norm.family != "phi":
        raise InputError("expected a phi norm")
    v, th = norm.value, norm.theta
    return TailBound("single_phi", lambda t: 2.0 * math.exp(-t ** th / (2.0 * v ** th)),
                     {"norm": v, "theta": th})


# ---------------------------------------------------------------------------
# sub-exponential sums
# ---------------------------------------------------------------------------

def _subexp_parts(weights, norms) -> tuple[float, float]:
    fam = WeightedFamily(weights, norms, 1.0)
    b = fam.b
    if not np.any(b > 0):
        raise InputError("degenerate weights")
    return float(np.sum(b * b)), float(np.max(b))


def subexp_sum_bound(weights, centered_norms) -> TailBound:
    """2 exp{-1/4 (t^2/(2 sum w^2 ||.||^2) ^ t/max |w| ||.||)} for centred psi_1 summands."""
    ss, mx = _subexp_parts(weights, centered_norms)
    raw = lambda t: 2.0 * math.exp(-0.25 * min(t * t / (2.0 * ss), t / mx))  # noqa: E731
    return TailBound("subexp_sum", raw, {"sum_sq": ss, "max": mx})


def tail_subexp_sum(weights, centered_norms, t: float) -> float:
    return subexp_sum_bound(weights, centered_norms)(t)


def subexp_deviation(weights, centered_norms, t: float) -> float:
    """Radius 2(2 t sum w^2||.||^2)^{1/2} + 2 t max|w|||.||, exceeded with prob <= 2e^{-t}."""
    ss, mx = _subexp_parts(weights, centered_norms)
    return 2.0 * math.sqrt(2.0 * t * ss) + 2.0 * t * mx


def nb_a(mu: float, k: float) -> float:
    """a(mu, k) = [log((1 - (1-q)/2^{1/k})/q)]^{-1} + mu/log 2 with q = mu/(k + mu)."""
    mu, k = float(mu), float(k)
    if not (mu > 0 and k > 0):
        raise InputError("need mu > 0 and k > 0")
    q = mu / (k + mu)
    return 1.0 / math.log((1.0 - (1.0 - q) * 2.0 ** (-1.0 / k)) / q) + mu / math.log(2.0)


def nb_sum_bound(mus, ks, weights) -> TailBound:
    """Two-regime bound for |sum w_i (Y_i - EY_i)| with Y_i ~ NB(mu_i, k_i)."""
    mus = np.atleast_1d(np.asarray(mus, dtype=float))
    ks = np.broadcast_to(np.atleast_1d(np.asarray(ks, dtype=float)), mus.shape)
    a = np.array([nb_a(m, k) for m, k in zip(mus, ks)])
    w = np.broadcast_to(np.atleast_1d(np.asarray(weights, dtype=float)), mus.shape)
    ss, mx = _subexp_parts(w, a)
    raw = lambda t: 2.0 * math.exp(-0.25 * min(t * t / (2.0 * ss), t / mx))  # noqa: E731
    return TailBound("nb_sum", raw, {"sum_sq": ss, "max": mx, "a_first": float(a[0])})


def tail_nb_sum(mus, ks, weights, t: float) -> float:
    return nb_sum_bound(mus, ks, weights)(t)


# ---------------------------------------------------------------------------
# GBO-based sums
# ---------------------------------------------------------------------------

def sum_gbo_norm(family: WeightedFamily) -> tuple[float, float]:
    """(gamma e C(theta) ||b||_2, L_n(theta, b)) for the weighted sum."""
    th = family.theta
    nb = family.b_norm2()
    return (constants.gamma_minimal() * math.e * constants.big_c(th) * nb,
            constants.l_n(th, family.b))


def sum_deviation_t(family: WeightedFamily, t: float) -> float:
    """2 e C(theta) ||b||_2 (sqrt(t) + L_n t^{1/theta}), exceeded with prob <= 2 e^{-t}."""
    th = family.theta
    nb = family.b_norm2()
    L = constants.l_n(th, family.b)
    t = float(t)
    return 2.0 * math.e * constants.big_c(th) * nb * (math.sqrt(t) + L * t ** (1.0 / th))


def sum_deviation(family: WeightedFamily, delta: float) -> float:
    """Deviation radius at confidence 1 - delta, using t = log(2/delta)."""
    if not (0.0 < delta < 1.0):
        raise InputError("delta must lie in (0, 1)")
    return sum_deviation_t(family, math.log(2.0 / delta))


def gbo_deviation_tail(family: WeightedFamily) -> TailBound:
    """Tail form of the GBO deviation: P(|S| >= s) <= 2 e^{-t(s)} with radius(t(s)) = s."""
    th = family.theta
    scale = 2.0 * math.e * constants.big_c(th) * family.b_norm2()
    L = constants.l_n(th, family.b)
    r = lambda t: scale * (math.sqrt(t) + L * t ** (1.0 / th))  # noqa: E731
    return TailBound("gbo_deviation", lambda s: 2.0 * math.exp(-_solve_increasing(r, s)),
                     {"scale": scale, "L": L, "theta": th})


def gbo_tail(gbo: NormValue, t: float) -> float:
    """Deviation ||X||_GBO (sqrt(t) + L t^{1/theta}) exceeded with prob <= 2 e^{-t}."""
    if gbo.family != "gbo":
        raise InputError("expected a GBO norm value")
    if t < 0:
        raise InputError("t must be nonnegative")
    return gbo.value * (math.sqrt(t) + gbo.gbo_L * t ** (1.0 / gbo.theta))


def crossover_point(family: WeightedFamily) -> float:
    """s* = 4 e C ||b||_2 L^{theta/(theta-2)}, where the two exponents coincide.

    The same expression serves theta < 2 and theta > 2.
    """
    th = family.theta
    if th == 2.0:
        raise InputError("the two-regime form excludes theta = 2; use sum_deviation")
    L = constants.l_n(th, family.b)
    return 4.0 * math.e * constants.big_c(th) * family.b_norm2() * L ** (th / (th - 2.0))


def two_regime_exponents(family: WeightedFamily, s: float) -> tuple[float, float]:
    """(Gaussian exponent s^2/(16 e^2 C^2 ||b||^2), Weibull exponent s^theta/(4 e C ||b|| L)^theta)."""
    th = family.theta
    c = constants.big_c(th)
    nb = family.b_norm2()
    L = constants.l_n(th, family.b)
    g = s * s / (16.0 * math.e ** 2 * c * c * nb * nb)
    w = s ** th / (4.0 * math.e * c * nb * L) ** th
    return g, w


def sum_tail_two_regime(family: WeightedFamily, s: float) -> float:
    """min(1, 2 exp(-min(Gaussian exponent, Weibull exponent)))."""
    if family.theta == 2.0:
        raise InputError("the two-regime form excludes theta = 2; use sum_deviation")
    g, w = two_regime_exponents(family, s)
    return _cap(2.0 * math.exp(-min(g, w)))


def sum_tail_two_regime_branches(family: WeightedFamily, s: float) -> dict:
    """Evaluate the case split at the crossover and report which branch is active."""
    th = family.theta
    sc = crossover_point(family)
    g, w = two_regime_exponents(family, s)
    if th < 2.0:
        branch = "gaussian" if s <= sc else "weibull"
    else:
        branch = "weibull" if s < sc else "gaussian"
    expo = g if branch == "gaussian" else w
    return {"s": s, "crossover": sc, "branch": branch, "exponent": expo,
            "gaussian_exponent": g, "weibull_exponent": w, "bound": _cap(2.0 * math.exp(-expo))}


# ---------------------------------------------------------------------------
# phi_theta sums
# ---------------------------------------------------------------------------

_E1112 = math.exp(11.0 / 12.0)


def _phi_check(v) -> np.ndarray:
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.size == 0 or np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise InputError("phi norms must be positive and finite")
    return v


def phi_sum_threshold(v, theta: float) -> float:
    """Smallest t for which the phi-sum tail display applies: e (sum v) C_theta (theta e^{11/12}/2)^{-1/theta}."""
    v = _phi_check(v)
    th = constants._check_theta(theta)
    return math.e * float(v.sum()) * constants.c_theta_moment_const(th) * (th * _E1112 / 2.0) ** (-1.0 / th)


def phi_sum_bound(v, theta: float) -> TailBound:
    v = _phi_check(v)
    th = constants._check_theta(theta)
    scale = math.e * float(v.sum()) * constants.c_theta_moment_const(th)
    raw = lambda t: math.exp(-th * _E1112 * t ** th / (2.0 * scale ** th))  # noqa: E731
    return TailBound("phi_sum", raw, {"scale": scale, "theta": th},
                     valid_from=phi_sum_threshold(v, th))


def phi_sum_tail(v, theta: float, t: float) -> dict:
    """Tail of |sum X_i|; reported vacuous (probability 1) below the validity threshold."""
    return phi_sum_bound(v, theta).evaluate(t)


def phi_sum_ci(v, theta: float, alpha: float) -> float:
    """Radius for |mean X_i|: e vbar 2^{1/theta} C_theta (log(1/alpha)/(theta e^{11/12}))^{1/theta}."""
    v = _phi_check(v)
    th = constants._check_theta(theta)
    if not (0.0 < alpha < math.exp(-1.0)):
        raise InputError("alpha must lie in (0, 1/e)")
    return (math.e * float(v.mean()) * 2.0 ** (1.0 / th) * constants.c_theta_moment_const(th)
            * (math.log(1.0 / alpha) / (th * _E1112)) ** (1.0 / th))


def phi_sum_mixed(v, theta: float, mean_abs, t: float) -> float:
    """Radius e (sum (E|X_i|)^t)^{1/t} + e (sum v) 2^{1/theta} C_theta (t/(theta e^{11/12}))^{1/theta}.

    The sum exceeds it with probability at most e^{-t}.
    """
    v = _phi_check(v)
    th = constants._check_theta(theta)
    m = np.broadcast_to(np.atleast_1d(np.asarray(mean_abs, dtype=float)), v.shape)
    if not t > 0:
        raise InputError("t must be positive")
    if np.any(m < 0):
        raise InputError("mean absolute values must be nonnegative")
    mx = float(m.max())
    first = 0.0 if mx == 0 else mx * float(np.sum((m / mx) ** t)) ** (1.0 / t)
    second = float(v.sum()) * 2.0 ** (1.0 / th) * constants.c_theta_moment_const(th) * (t / (th * _E1112)) ** (1.0 / th)
    return math.e * (first + second)


# ---------------------------------------------------------------------------
# data-driven intervals and comparisons
# ---------------------------------------------------------------------------

def confidence_interval(samples, theta: float, delta: float, method: str = "gbo_theorem1",
                        norm: Optional[float] = None) -> dict:
    """Interval mean +- radius for the mean of iid data with weights 1/n.

    ``gbo_theorem1`` uses the GBO deviation radius with a centred psi_theta norm
    (``norm`` if given, else the EMGF estimate on the demeaned data);
    ``phi_theorem2`` uses the phi_theta interval with the moment-sup estimate.
    Plug-in norms make the interval approximate; this is flagged.
    """
    x = as_array(samples)
    n = x.size
    if n < 2:
        raise InputError("need at least two samples")
    if not (0.0 < delta < 1.0):
        raise InputError("delta must lie in (0, 1)")
    th = constants._check_theta(theta)
    centre = float(x.mean())
    resid = x - centre
    plug_in = norm is None
    if method == "gbo_theorem1":
        if plug_in:
            norm = 0.0 if not np.any(resid) else estimate_psi_norm_emgf(resid, th).value
        if norm == 0.0:
            radius = 0.0
        else:
            radius = sum_deviation(WeightedFamily(np.full(n, 1.0 / n), (norm,), th), delta)
    elif method == "phi_theorem2":
        if plug_in:
            norm = estimate_phi_norm(resid, th).value
        radius = 0.0 if norm == 0.0 else phi_sum_ci([norm], th, delta)
    else:
        raise InputError(f"unknown interval method {method!r}")
    return {"method": method, "center": centre, "radius": radius, "lo": centre - radius,
            "hi": centre + radius, "norm": norm, "plug_in_norm": plug_in, "n": n,
            "theta": th, "delta": delta}


REFERENCE_EXAMPLE = {"bigC": 2825.89, "A": 0.07, "L10": 0.23, "half_width_over_2e": 2118.80,
                 "alternative_half_width_over_2e": 3969.94}


def reference_example_comparison(theta: float = 0.5, n: int = 10, delta: float = 0.05) -> dict:
    """Own constants for the theta = 0.5, n = 10, unit-norm example next to reference values.

    The half-width is reported under both weight conventions (w = 1 and
    w = 1/n) and two readings of the 95% level (t = log(2/delta) and
    t = log(1/delta)); it is divided by 2e to match how the reference value
    is quoted.
    """
    a, _ = constants.a_b_theta(theta)
    a_window, _ = constants.a_b_theta(theta, include_limit=False)
    c = constants.big_c(theta)
    L = constants.l_n(theta, np.ones(n))
    check = constants.cross_check(theta)
    widths = {}
    for wname, w in (("w=1", 1.0), ("w=1/n", 1.0 / n)):
        fam = WeightedFamily(np.full(n, w), (1.0,), theta)
        for tname, t in (("t=log(2/delta)", math.log(2.0 / delta)), ("t=log(1/delta)", math.log(1.0 / delta))):
            widths[f"{wname},{tname}"] = sum_deviation_t(fam, t) / (2.0 * math.e)
    ours = {"bigC": c, "A": a, "A_window_p_le_p_max": a_window, "L10": L}
    rel = {k: (ours[k] - REFERENCE_EXAMPLE[k]) / REFERENCE_EXAMPLE[k] for k in ("bigC", "A", "L10")}
    return {
        "theta": theta, "n": n, "delta": delta,
        "computed": ours, "reference": dict(REFERENCE_EXAMPLE), "relative_deviation": rel,
        "half_width_over_2e": widths,
        "optimizer_agreement": {"max_relative_gap": check["max_relative_gap"],
                                "gaps": check["relative_gap"], "pass": check["max_relative_gap"] <= 1e-3},
        "discrepancy": any(abs(r) > 1e-3 for r in rel.values()),
        "note": ("reference constants are not reproduced by the displayed formulas; the sup "
                 "over p >= 2 is attained at p = 2 and the inf for A is the p -> inf limit"),
    }


def comparison_shape_bound(c1: float, c2: float, scale: float, n: int, theta: float) -> TailBound:
    """Shape v (C1 (t/n)^{1/2} + C2 (t/n)^{1/theta}) at level e^{-t} with user-chosen C1, C2.

    Its constants are unknown in general, so the bound is marked uncertified
    and only serves for comparisons.
    """
    th = constants._check_theta(theta)
    r = lambda t: scale * (c1 * math.sqrt(t / n) + c2 * (t / n) ** (1.0 / th))  # noqa: E731
    return TailBound("comparison_shape", lambda s: math.exp(-_solve_increasing(r, s)),
                     {"c1": c1, "c2": c2, "scale": scale, "n": n, "theta": th}, certified=False)


def best_bound(bounds: Sequence[TailBound], t: float) -> tuple[float, str]:
    """Pointwise minimum over the supplied bounds, with the winning kind."""
    if not bounds:
        raise InputError("need at least one bound")
    vals = [(b(t), b.kind) for b in bounds]
    return min(vals, key=lambda x: x[0])

"""psi_theta (Orlicz), phi_theta (moment) and GBO norm values.

Two different norms live here and are never mixed:

* the Orlicz norm ``psi_theta``: inf{C > 0 : E exp(|X|^theta / C^theta) <= 2};
* the moment norm ``phi_theta``: sup_{k >= 1} (E|X|^{theta k} / k!)^{1/(theta k)}.

Closed forms, MGF inversion, series suprema and two data-driven estimators are
provided.  Moment sums with k! run in log space.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from . import constants
from .data import SampleBatch, as_array
from .errors import InputError, NumericError

FAMILIES = ("psi", "phi", "gbo")
PROVENANCES = ("closed_form", "mgf_inversion", "series", "estimated", "upper_bound")


@dataclass(frozen=True)
class NormValue:
    """A norm value together with what it is and how it was obtained."""

    value: float
    family: str
    theta: float
    provenance: str
    gbo_L: Optional[float] = None
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InputError(f"unknown norm family {self.family!r}")
        if self.provenance not in PROVENANCES:
            raise InputError(f"unknown provenance {self.provenance!r}")
        if not (self.value >= 0):
            raise InputError("norm value must be nonnegative")
        if (self.gbo_L is not None) != (self.family == "gbo"):
            raise InputError("gbo_L is required exactly for the gbo family")
        constants._check_theta(self.theta)

    def to_dict(self) -> dict:
        out = {"value": self.value, "family": self.family, "theta": self.theta,
               "provenance": self.provenance, "diagnostics": dict(self.diagnostics)}
        if self.gbo_L is not None:
            out["gbo_L"] = self.gbo_L
        return out


# ---------------------------------------------------------------------------
# closed forms and MGF inversion for psi_theta
# ---------------------------------------------------------------------------

def psi_norm_bounded(M: float, theta: float) -> NormValue:
    """Orlicz norm of the constant |X| = M, namely M (log 2)^{-1/theta}.

    For a variable with |X| <= M this is an upper bound.
    """
    theta = constants._check_theta(theta)
    if not M > 0:
        raise InputError("M must be positive")
    return NormValue(M * math.log(2.0) ** (-1.0 / theta), "psi", theta, "closed_form")


def psi_norm_mgf_inversion(mgf: Callable[[float], float], theta: float, t_upper: float,
                           rtol: float = 1e-13) -> NormValue:
    """Invert a strictly increasing MGF s -> E exp(s |X|^theta) at level 2.

    Bisection on (0, t_upper); the norm is root^{-1/theta}.
    """
    theta = constants._check_theta(theta)
    hi = float(t_upper)
    if not hi > 0:
        raise InputError("t_upper must be positive")
    top = mgf(hi)
    if not math.isfinite(top):
        raise NumericError("MGF blow-up")
    if top < 2.0:
        raise NumericError("norm not bracketed")
    lo = 0.0
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        m = mgf(mid)
        if not math.isfinite(m):
            raise NumericError("MGF blow-up")
        if m >= 2.0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= rtol * hi:
            break
    root = 0.5 * (lo + hi)
    return NormValue(root ** (-1.0 / theta), "psi", theta, "mgf_inversion",
                     diagnostics={"root": root, "bracket": [0.0, float(t_upper)]})


def mgf_exponential(scale: float = 1.0) -> Callable[[float], float]:
    """E exp(s X) for X exponential with the given scale (finite for s < 1/scale)."""
    return lambda s: 1.0 / (1.0 - s * scale) if s * scale < 1.0 else math.inf


def mgf_negbin(q: float, k: float) -> Callable[[float], float]:
    """E exp(s Y) = ((1-q)/(1-q e^s))^k for the NB law with success parameter q."""
    def m(s):
        d = 1.0 - q * math.exp(s)
        return ((1.0 - q) / d) ** k if d > 0 else math.inf
    return m


def mgf_poisson(lam: float) -> Callable[[float], float]:
    def m(s):
        expo = lam * math.expm1(s) if s < 700 else math.inf
        return math.exp(expo) if expo < 700 else math.inf
    return m


def mgf_chi2_1(s: float) -> float:
    """E exp(s Z^2) for standard normal Z."""
    return (1.0 - 2.0 * s) ** -0.5 if s < 0.5 else math.inf


def psi1_norm_negbin(q: float, k: float) -> NormValue:
    """psi_1 norm of an NB(q, k) count: [log((1 - (1-q)/2^{1/k})/q)]^{-1}."""
    q, k = float(q), float(k)
    if not (0.0 < q < 1.0) or not k > 0:
        raise InputError("need q in (0, 1) and k > 0")
    inner = (1.0 - (1.0 - q) * 2.0 ** (-1.0 / k)) / q
    val = 1.0 / math.log(inner)
    diag = {"q": q, "k": k}
    if q < 1e-12:
        diag["degenerate"] = "q near 0: the count is almost surely 0 and the norm tends to 0"
    return NormValue(val, "psi", 1.0, "closed_form", diagnostics=diag)


def psi1_norm_poisson(lam: float, centered: bool = False) -> NormValue:
    """psi_1 norm of Poisson(lam): [log(log 2 / lam + 1)]^{-1}.

    With ``centered`` the triangle-inequality bound for X - lam is returned,
    which adds lam / log 2.
    """
    lam = float(lam)
    if not lam > 0:
        raise InputError("lam must be positive")
    val = 1.0 / math.log(math.log(2.0) / lam + 1.0)
    if centered:
        return NormValue(val + lam / math.log(2.0), "psi", 1.0, "upper_bound",
                         diagnostics={"centered": True})
    return NormValue(val, "psi", 1.0, "closed_form")


def power_transform_norm(norm: NormValue, r: float) -> NormValue:
    """|| |X|^r ||_{psi_{theta/r}} = ||X||_{psi_theta}^r."""
    if norm.family != "psi":
        raise InputError("power transform applies to psi norms")
    if not r > 0:
        raise InputError("r must be positive")
    return NormValue(norm.value ** r, "psi", norm.theta / r, norm.provenance,
                     diagnostics={"power": r})


def product_norm_bound(norms: Sequence[NormValue]) -> NormValue:
    """Upper bound for the psi_beta norm of a product, 1/beta = sum 1/alpha_i."""
    if not norms:
        raise InputError("need at least one norm")
    if any(n.family != "psi" for n in norms):
        raise InputError("product bound applies to psi norms")
    if len(norms) == 1:
        return norms[0]
    beta = 1.0 / sum(1.0 / n.theta for n in norms)
    val = float(np.prod([n.value for n in norms]))
    return NormValue(val, "psi", beta, "upper_bound",
                     diagnostics={"factors": [n.theta for n in norms]})


def centered_norm_bound(norm: NormValue) -> NormValue:
    """||X - EX||_{psi_theta} <= K_theta (1 + (d_theta log 2)^{-1/theta}) ||X||_{psi_theta}."""
    if norm.family != "psi":
        raise InputError("centering bound applies to psi norms")
    f = constants.centering_factor(norm.theta)
    return NormValue(norm.value * f, "psi", norm.theta, "upper_bound",
                     diagnostics={"centering_factor": f})


# ---------------------------------------------------------------------------
# phi_theta: series and closed forms
# ---------------------------------------------------------------------------

def phi_norm_series(abs_moment: Callable[[float], float], theta: float, k_max: int = 100,
                    k_min: int = 1, log_moment: bool = False) -> NormValue:
    """sup over integers k in [k_min, k_max] of (E|X|^{theta k}/k!)^{1/(theta k)}.

    ``abs_moment(k)`` returns E|X|^{theta k} (or its log when ``log_moment``).
    A warning is emitted when the maximiser is ``k_max``, since the sup may
    then be truncated.
    """
    theta = constants._check_theta(theta)
    if not (1 <= int(k_min) <= int(k_max)):
        raise InputError("need 1 <= k_min <= k_max")
    ks = np.arange(int(k_min), int(k_max) + 1)
    logs = []
    for k in ks:
        lm = abs_moment(int(k))
        lm = lm if log_moment else (math.log(lm) if lm > 0 else -math.inf)
        logs.append((lm - gammaln(k + 1.0)) / (theta * k))
    logs = np.asarray(logs)
    i = int(np.argmax(logs))
    kstar = int(ks[i])
    truncated = kstar == int(k_max) and k_max > k_min
    if truncated:
        warnings.warn(f"phi series sup attained at k_max={k_max}; it may be truncated",
                      RuntimeWarning, stacklevel=2)
    return NormValue(float(math.exp(logs[i])), "phi", theta, "series",
                     diagnostics={"argmax_k": kstar, "k_min": int(k_min), "k_max": int(k_max),
                                  "truncated": truncated})


def phi_norm_of(dist, theta: float, k_max: int = 100, k_min: int = 1) -> NormValue:
    """phi_theta series using the exact absolute moments of a DistributionSpec."""
    return phi_norm_series(lambda k: dist.log_abs_moment(theta * k), theta, k_max, k_min,
                           log_moment=True)


def _phi2_log_term(dist: str, p: np.ndarray, mu: Optional[float]) -> np.ndarray:
    if dist == "gaussian":
        # sqrt(2) [Gamma((1+p)/2) / (Gamma(1/2) Gamma(1+p/2))]^{1/p}
        return 0.5 * math.log(2.0) + (gammaln(0.5 * (1 + p)) - gammaln(0.5) - gammaln(1 + 0.5 * p)) / p
    if dist == "bernoulli":
        if mu is None or not (0.0 < mu < 1.0):
            raise InputError("bernoulli needs mu in (0, 1)")
        num = np.logaddexp(math.log(mu) + p * math.log1p(-mu), math.log1p(-mu) + p * math.log(mu))
        return (num - gammaln(0.5 * p + 1.0)) / p
    if dist == "uniform":
        return (-gammaln(0.5 * p + 1.0) - np.log(p + 1.0)) / p
    raise InputError(f"no phi_2 closed form for {dist!r}")


def phi2_closed_form(dist: str, mu: Optional[float] = None,
                     p_grid: Optional[Sequence[float]] = None) -> NormValue:
    """phi_2 norm from the p-indexed closed forms, supremised over ``p_grid``.

    Supported: standard ``gaussian``, centred ``bernoulli`` (success ``mu``)
    and ``uniform`` on [-1, 1].  The default grid is the even orders
    p = 2k, k = 1..100, which is the phi_2 definition itself.
    """
    p = np.asarray(p_grid if p_grid is not None else np.arange(2, 201, 2), dtype=float)
    if p.size == 0 or np.any(p <= 0):
        raise InputError("p_grid must contain positive orders")
    logs = _phi2_log_term(dist, p, mu)
    i = int(np.argmax(logs))
    truncated = i == p.size - 1 and p.size > 1
    if truncated:
        warnings.warn(f"phi_2 closed-form sup attained at the last grid order p={p[i]:g}",
                      RuntimeWarning, stacklevel=2)
    return NormValue(float(math.exp(logs[i])), "phi", 2.0, "closed_form",
                     diagnostics={"argmax_p": float(p[i]), "p_min": float(p.min()),
                                  "p_max": float(p.max()), "truncated": truncated,
                                  "value_at_p2": float(math.exp(_phi2_log_term(dist, np.array([2.0]), mu)[0]))})


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------

def default_k_min(theta: float) -> int:
    """Starting order for the moment-sup estimator: 2 for theta = 1, else 1."""
    return 2 if float(theta) == 1.0 else 1


def estimate_phi_norm(samples, theta: float, k_min: Optional[int] = None,
                      k_max: int = 50) -> NormValue:
    """Plug-in moment-sup estimate: sup_k ((1/(n k!)) sum |X_i|^{theta k})^{1/(theta k)}."""
    theta = constants._check_theta(theta)
    x = as_array(samples)
    if x.size < 2:
        raise InputError("need at least two samples")
    k_min = default_k_min(theta) if k_min is None else int(k_min)
    if not (1 <= k_min <= int(k_max)):
        raise InputError("need 1 <= k_min <= k_max")
    with np.errstate(divide="ignore"):
        logabs = np.log(np.abs(x))
    ks = np.arange(k_min, int(k_max) + 1)
    logn = math.log(x.size)
    vals = np.array([(logsumexp(theta * k * logabs) - logn - gammaln(k + 1.0)) / (theta * k)
                     for k in ks])
    if np.all(np.isneginf(vals)):
        return NormValue(0.0, "phi", theta, "estimated",
                         diagnostics={"argmax_k": int(k_min), "k_min": k_min, "k_max": int(k_max), "n": int(x.size)})
    i = int(np.argmax(vals))
    return NormValue(float(math.exp(vals[i])), "phi", theta, "estimated",
                     diagnostics={"argmax_k": int(ks[i]), "k_min": k_min, "k_max": int(k_max),
                                  "n": int(x.size)})


def estimate_psi_norm_emgf(samples, theta: float) -> NormValue:
    """Orlicz-norm estimate by inverting the empirical MGF of |X|^theta at level 2."""
    theta = constants._check_theta(theta)
    x = as_array(samples)
    if x.size < 2:
        raise InputError("need at least two samples")
    y = np.abs(x) ** theta
    logn = math.log(x.size)

    def log_emgf(s):
        return float(logsumexp(s * y)) - logn

    target = math.log(2.0)
    lo, hi = 0.0, 1e-12
    while log_emgf(hi) < target:
        lo, hi = hi, hi * 2.0
        if hi > 1e300:
            raise NumericError("level 2 unreachable")
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if log_emgf(mid) >= target:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-14 * hi:
            break
    root = 0.5 * (lo + hi)
    return NormValue(root ** (-1.0 / theta), "psi", theta, "estimated",
                     diagnostics={"root": root, "bracket_upper": hi, "n": int(x.size)})


def vector_norm_estimate(rows, theta: float, k_min: Optional[int] = None,
                         k_max: int = 50) -> NormValue:
    """Moment-sup estimate applied to the Euclidean norms of the rows."""
    arr = rows.values if isinstance(rows, SampleBatch) else np.asarray(rows, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise InputError("rows must be a nonempty 2-D array")
    norms = np.sqrt(np.sum(arr * arr, axis=1))
    out = estimate_phi_norm(norms, theta, k_min, k_max)
    return NormValue(out.value, "phi", out.theta, "estimated",
                     diagnostics={**out.diagnostics, "dimension": int(arr.shape[1])})

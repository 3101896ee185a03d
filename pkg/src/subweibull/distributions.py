"""Tagged one-dimensional laws with the analytic accessors the calculators need."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln, logsumexp

from .errors import InputError

KINDS = ("weibull", "symweibull", "gaussian", "bernoulli", "uniform",
         "exponential", "poisson", "negbin", "pareto", "constant")

# parameter names per kind, with defaults (None = required)
_PARAMS: dict[str, tuple[tuple[str, Optional[float]], ...]] = {
    "weibull": (("theta", None), ("scale", 1.0)),
    "symweibull": (("theta", None), ("scale", 1.0)),
    "gaussian": (("mu", 0.0), ("sigma", 1.0)),
    "bernoulli": (("p", None),),
    "uniform": (("low", -1.0), ("high", 1.0)),
    "exponential": (("scale", 1.0),),
    "poisson": (("lam", None),),
    "negbin": (("mu", None), ("k", None)),
    "pareto": (("alpha", None), ("k", 1.0)),
    "constant": (("value", None),),
}


@dataclass(frozen=True)
class DistributionSpec:
    """A sampleable law on the real line.

    ``kind`` selects the family and ``params`` holds its parameters in the order
    listed in ``_PARAMS``.  With ``centered=True`` the object describes
    ``X - EX`` instead of ``X``.  Exponential uses the scale convention, so
    ``exponential(2)`` has mean 2.  ``weibull(theta)`` is the law with
    ``P(X > t) = exp(-(t/scale)^theta)``; ``symweibull`` attaches an
    independent random sign to it.
    """

    kind: str
    params: tuple = field(default_factory=tuple)
    centered: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown distribution kind {self.kind!r}")
        names = _PARAMS[self.kind]
        vals = list(self.params)
        if len(vals) > len(names):
            raise InputError(f"too many parameters for {self.kind}")
        full = []
        for i, (name, default) in enumerate(names):
            if i < len(vals):
                v = float(vals[i])
            elif default is None:
                raise InputError(f"{self.kind} needs parameter {name}")
            else:
                v = float(default)
            if not math.isfinite(v):
                raise InputError(f"{self.kind}.{name} must be finite")
            full.append(v)
        object.__setattr__(self, "params", tuple(full))
        self._validate()

    # -- construction helpers ------------------------------------------------
    def _validate(self):
        p = self.param
        k = self.kind
        positive = {"weibull": ("theta", "scale"), "symweibull": ("theta", "scale"),
                    "gaussian": ("sigma",), "exponential": ("scale",), "poisson": ("lam",),
                    "negbin": ("mu", "k"), "pareto": ("alpha", "k")}
        for name in positive.get(k, ()):
            if p(name) <= 0:
                raise InputError(f"{k}.{name} must be positive")
        if k == "bernoulli" and not (0.0 < p("p") < 1.0):
            raise InputError("bernoulli.p must lie in (0, 1)")
        if k == "uniform" and not p("low") < p("high"):
            raise InputError("uniform needs low < high")

    def param(self, name: str) -> float:
        for (n, _), v in zip(_PARAMS[self.kind], self.params):
            if n == name:
                return v
        raise KeyError(name)

    def as_centered(self) -> "DistributionSpec":
        return DistributionSpec(self.kind, self.params, True)

    @classmethod
    def parse(cls, text: str) -> "DistributionSpec":
        """Parse ``kind[:p1[,p2]]``; a ``centered_`` prefix centres the law.

        Examples: ``exponential:1``, ``negbin:1,1``, ``centered_poisson:1``.
        """
        text = text.strip()
        centered = False
        if text.startswith("centered_"):
            centered, text = True, text[len("centered_"):]
        kind, _, rest = text.partition(":")
        try:
            vals = tuple(float(x) for x in rest.split(",") if x.strip()) if rest else ()
        except ValueError as exc:
            raise InputError(f"bad distribution parameters in {text!r}") from exc
        return cls(kind.strip().lower(), vals, centered)

    def label(self) -> str:
        body = f"{self.kind}:{','.join(repr(v) for v in self.params)}"
        return ("centered_" + body) if self.centered else body

    # -- moments ---------------------------------------------------------------
    def raw_mean(self) -> float:
        """Mean of the uncentred law."""
        k, p = self.kind, self.param
        if k == "weibull":
            return p("scale") * math.exp(gammaln(1.0 / p("theta") + 1.0))
        if k == "symweibull":
            return 0.0
        if k == "gaussian":
            return p("mu")
        if k == "bernoulli":
            return p("p")
        if k == "uniform":
            return 0.5 * (p("low") + p("high"))
        if k == "exponential":
            return p("scale")
        if k == "poisson":
            return p("lam")
        if k == "negbin":
            return p("mu")
        if k == "pareto":
            a = p("alpha")
            return math.inf if a <= 1 else a * p("k") / (a - 1.0)
        return p("value")

    def mean(self) -> float:
        return 0.0 if self.centered else self.raw_mean()

    def variance(self) -> float:
        k, p = self.kind, self.param
        if k in ("weibull", "symweibull"):
            th, s = p("theta"), p("scale")
            m2 = s * s * math.exp(gammaln(2.0 / th + 1.0))
            return m2 if k == "symweibull" else m2 - self.raw_mean() ** 2
        if k == "gaussian":
            return p("sigma") ** 2
        if k == "bernoulli":
            return p("p") * (1.0 - p("p"))
        if k == "uniform":
            return (p("high") - p("low")) ** 2 / 12.0
        if k == "exponential":
            return p("scale") ** 2
        if k == "poisson":
            return p("lam")
        if k == "negbin":
            return p("mu") + p("mu") ** 2 / p("k")
        if k == "pareto":
            a, s = p("alpha"), p("k")
            return math.inf if a <= 2 else s * s * a / ((a - 1.0) ** 2 * (a - 2.0))
        return 0.0

    def log_abs_moment(self, order: float) -> float:
        """log E|X|^order (of the centred variable when ``centered``)."""
        r = float(order)
        if r <= 0:
            raise InputError("moment order must be positive")
        k, p = self.kind, self.param
        c = self.raw_mean() if self.centered else 0.0
        if k in ("weibull", "symweibull") and (k == "symweibull" or not self.centered):
            return r * math.log(p("scale")) + gammaln(r / p("theta") + 1.0)
        if k == "gaussian" and (self.centered or p("mu") == 0.0):
            return (r * math.log(p("sigma")) + 0.5 * r * math.log(2.0)
                    + gammaln(0.5 * (r + 1.0)) - 0.5 * math.log(math.pi))
        if k == "gaussian":
            mu, sd = p("mu"), p("sigma")
            dens = lambda x: abs(x) ** r * math.exp(-0.5 * ((x - mu) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))  # noqa: E731
            return math.log(quad(dens, -np.inf, 0.0)[0] + quad(dens, 0.0, np.inf)[0])
        if k == "bernoulli":
            mu = p("p")
            if not self.centered:
                return math.log(mu)
            return math.log(mu * (1.0 - mu) ** r + (1.0 - mu) * mu ** r)
        if k == "uniform":
            a, b = p("low") - c, p("high") - c
            return _log_uniform_abs_moment(a, b, r)
        if k == "exponential":
            s = p("scale")
            if not self.centered:
                return r * math.log(s) + gammaln(r + 1.0)
            head = quad(lambda u: u ** r * math.exp(u - 1.0), 0.0, 1.0, epsabs=0, epsrel=1e-13)[0]
            return r * math.log(s) + float(np.logaddexp(math.log(head), gammaln(r + 1.0) - 1.0))
        if k == "poisson":
            return _log_discrete_abs_moment(_poisson_logpmf(p("lam")), c, r, p("lam"))
        if k == "negbin":
            return _log_discrete_abs_moment(_negbin_logpmf(p("mu"), p("k")), c, r, p("mu"),
                                            decay=-math.log(p("mu") / (p("k") + p("mu"))))
        if k == "pareto":
            a, s = p("alpha"), p("k")
            if r >= a:
                return math.inf
            if not self.centered:
                return math.log(a) + r * math.log(s) - math.log(a - r)
            dens = lambda x: abs(x - c) ** r * a * s ** a / x ** (a + 1.0)  # noqa: E731
            val = quad(dens, s, c, epsrel=1e-12)[0] + quad(dens, c, np.inf, epsrel=1e-12, limit=400)[0]
            return math.log(val)
        if k == "constant":
            v = abs(p("value") - c)
            return -math.inf if v == 0 else r * math.log(v)
        # centred Weibull: numeric integration of |x - mean|^r against the density
        th, s = p("theta"), p("scale")
        dens = lambda x: abs(x - c) ** r * (th / s) * (x / s) ** (th - 1) * math.exp(-(x / s) ** th)  # noqa: E731
        val = quad(dens, 0.0, c, epsrel=1e-12)[0] + quad(dens, c, np.inf, epsrel=1e-12, limit=400)[0]
        return math.log(val)

    def abs_moment(self, order: float) -> float:
        return math.exp(self.log_abs_moment(order))

    def support_bound(self) -> Optional[float]:
        """Almost-sure bound on |X| when the law is bounded, else ``None``."""
        k, p = self.kind, self.param
        c = self.raw_mean() if self.centered else 0.0
        if k == "bernoulli":
            return max(abs(0.0 - c), abs(1.0 - c))
        if k == "uniform":
            return max(abs(p("low") - c), abs(p("high") - c))
        if k == "constant":
            return abs(p("value") - c)
        return None


def _log_uniform_abs_moment(a: float, b: float, r: float) -> float:
    # E|U|^r for U uniform on [a, b]
    def prim(x):  # integral of |x|^r from 0 to x, signed
        return math.copysign(abs(x) ** (r + 1.0) / (r + 1.0), x)
    if a < 0.0 < b:
        val = prim(b) - prim(a)
    else:
        val = abs(prim(b) - prim(a))
    return math.log(val / (b - a))


def _poisson_logpmf(lam: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda j: j * math.log(lam) - lam - gammaln(j + 1.0)


def _negbin_logpmf(mu: float, k: float) -> Callable[[np.ndarray], np.ndarray]:
    q = mu / (k + mu)
    return lambda y: (gammaln(y + k) - gammaln(k) - gammaln(y + 1.0)
                      + k * math.log1p(-q) + y * math.log(q))


def _log_discrete_abs_moment(logpmf, c: float, r: float, scale: float, decay: float = 0.0) -> float:
    """log sum_j |j - c|^r pmf(j) on a support window wide enough for order ``r``."""
    # The summand peaks near j ~ r / log(j); a generous window covers it and
    # the geometric (or faster) pmf tail.
    span = 4.0 * r + 60.0 * math.sqrt(scale + 1.0) + scale * 10.0 + 200.0
    if decay > 0:
        span = max(span, (r * math.log(span + 1.0) + 800.0) / decay)
    j = np.arange(0.0, math.ceil(span) + 1.0)
    d = np.abs(j - c)
    with np.errstate(divide="ignore"):
        terms = r * np.log(d) + logpmf(j)
    return float(logsumexp(terms))

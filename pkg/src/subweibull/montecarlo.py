"""Seeded sampling, exact binomial intervals and the bound-validation engine.

Random numbers come from the counter-based Philox-4x64 bit generator keyed by
``(seed, stream_id)``.  Uniforms are built from raw 64-bit words as
``((w >> 11) + 0.5) * 2**-53``, an open-interval 53-bit grid, so every sampler
below is fully determined by the key and the draw order.  All samplers are
written out explicitly (inverse CDF, Box-Muller, Marsaglia-Tsang) rather than
delegated to numpy's distribution methods.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.special import betaincinv

from .distributions import DistributionSpec
from .errors import InputError
from .report import clean

__all__ = [
    "RngStream",
    "sample",
    "sample_gamma",
    "sample_poisson",
    "clopper_pearson",
    "SimReport",
    "validate_bound",
    "sharded_statistic",
    "CHUNK",
]

_TWO_M53 = 2.0 ** -53
_MASK64 = (1 << 64) - 1
CHUNK = 1000  # replications per RNG stream when sharding


class RngStream:
    """Deterministic uniform source identified by ``(seed, stream_id)``.

    Two streams with the same key produce identical output; distinct stream
    ids give independent Philox keys.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        key = self.seed | (self.stream_id << 64)
        self._bitgen = np.random.Philox(key=key)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def spawn(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)

    def raw(self, size: int) -> np.ndarray:
        return np.asarray(self._bitgen.random_raw(int(size)), dtype=np.uint64)

    def uniform(self, size) -> np.ndarray:
        """Uniforms on the open interval (0, 1) with 53-bit resolution."""
        shape = (size,) if np.isscalar(size) else tuple(size)
        n = int(np.prod(shape))
        w = self.raw(n) >> np.uint64(11)
        return ((w.astype(np.float64) + 0.5) * _TWO_M53).reshape(shape)

    def normal(self, size) -> np.ndarray:
        """Standard normals by the Box-Muller transform."""
        shape = (size,) if np.isscalar(size) else tuple(size)
        n = int(np.prod(shape))
        m = (n + 1) // 2
        u1 = self.uniform(m)
        u2 = self.uniform(m)
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([r * np.cos(2.0 * math.pi * u2), r * np.sin(2.0 * math.pi * u2)])
        return z[:n].reshape(shape)

    def signs(self, size) -> np.ndarray:
        return np.where(self.uniform(size) < 0.5, -1.0, 1.0)


def sample_gamma(rng: RngStream, shape: float, scale, size: int) -> np.ndarray:
    """Gamma(shape, scale) by Marsaglia-Tsang; shape < 1 via the U^{1/a} boost."""
    if shape <= 0:
        raise InputError("gamma shape must be positive")
    boost = shape < 1.0
    a = shape + 1.0 if boost else shape
    d = a - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    out = np.empty(size)
    todo = np.arange(size)
    while todo.size:
        m = todo.size
        x = rng.normal(m)
        u = rng.uniform(m)
        v = (1.0 + c * x) ** 3
        ok = v > 0
        with np.errstate(invalid="ignore", divide="ignore"):
            ok &= np.log(u) < 0.5 * x * x + d - d * v + d * np.log(np.where(ok, v, 1.0))
        out[todo[ok]] = d * v[ok]
        todo = todo[~ok]
    if boost:
        out *= rng.uniform(size) ** (1.0 / shape)
    return out * np.asarray(scale, dtype=float)


def sample_poisson(rng: RngStream, lam, size: int) -> np.ndarray:
    """Poisson draws by sequential CDF inversion.

    Means above 30 are split into ``m`` equal pieces of mean at most 30 and the
    piece counts summed (a Poisson sum is Poisson), so the inversion never
    starts from an underflowing ``exp(-lam)``.
    """
    lam = np.broadcast_to(np.asarray(lam, dtype=float), (size,)).copy()
    if np.any(lam < 0) or not np.all(np.isfinite(lam)):
        raise InputError("Poisson mean must be finite and nonnegative")
    pieces = max(1, int(math.ceil(float(lam.max(initial=0.0)) / 30.0)))
    lam_piece = lam / pieces
    total = np.zeros(size)
    for _ in range(pieces):
        u = rng.uniform(size)
        k = np.zeros(size)
        p = np.exp(-lam_piece)
        cdf = p.copy()
        active = u > cdf
        while np.any(active):
            idx = np.nonzero(active)[0]
            k[idx] += 1.0
            p[idx] *= lam_piece[idx] / k[idx]
            cdf[idx] += p[idx]
            still = u[idx] > cdf[idx]
            # floating-point floor: the cdf can stall just below 1
            still &= p[idx] > 1e-300
            active[idx] = still
        total += k
    return total


def sample(dist: DistributionSpec, rng: RngStream, count: int) -> np.ndarray:
    """Draw ``count`` iid values from ``dist`` (centred when the law is flagged centred)."""
    count = int(count)
    if count < 0:
        raise InputError("count must be nonnegative")
    k, p = dist.kind, dist.param
    if k == "weibull":
        x = p("scale") * (-np.log(rng.uniform(count))) ** (1.0 / p("theta"))
    elif k == "symweibull":
        mag = p("scale") * (-np.log(rng.uniform(count))) ** (1.0 / p("theta"))
        x = rng.signs(count) * mag
    elif k == "gaussian":
        x = p("mu") + p("sigma") * rng.normal(count)
    elif k == "bernoulli":
        x = (rng.uniform(count) < p("p")).astype(float)
    elif k == "uniform":
        x = p("low") + (p("high") - p("low")) * rng.uniform(count)
    elif k == "exponential":
        x = -p("scale") * np.log(rng.uniform(count))
    elif k == "poisson":
        if p("lam") > 30.0:
            raise InputError("Poisson sampler is limited to lam <= 30")
        x = sample_poisson(rng, p("lam"), count)
    elif k == "negbin":
        mu, kk = p("mu"), p("k")
        lam = sample_gamma(rng, kk, mu / kk, count)
        x = sample_poisson(rng, lam, count)
    elif k == "pareto":
        x = p("k") * rng.uniform(count) ** (-1.0 / p("alpha"))
    elif k == "constant":
        x = np.full(count, p("value"))
    else:  # pragma: no cover - kinds are validated at construction
        raise InputError(f"no sampler for {k}")
    if dist.centered:
        x = x - dist.raw_mean()
    return x


def clopper_pearson(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    """Exact two-sided binomial interval at confidence ``level``."""
    x, n = int(successes), int(trials)
    if n <= 0 or not (0 <= x <= n):
        raise InputError("need 0 <= successes <= trials and trials > 0")
    if not (0.0 < level < 1.0):
        raise InputError("level must lie in (0, 1)")
    a = 1.0 - level
    lo = 0.0 if x == 0 else float(betaincinv(x, n - x + 1, a / 2.0))
    hi = 1.0 if x == n else float(betaincinv(x + 1, n - x, 1.0 - a / 2.0))
    return lo, hi


@dataclass
class SimReport:
    """Outcome of a Monte Carlo check, serialisable to deterministic JSON."""

    experiment: str
    seed: int
    reps: int
    config: dict = field(default_factory=dict)
    records: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def violations(self) -> int:
        return sum(1 for r in self.records if r.get("violation"))

    def to_dict(self) -> dict:
        return clean({
            "experiment": self.experiment,
            "seed": self.seed,
            "reps": self.reps,
            "config": self.config,
            "records": self.records,
            "summary": self.summary,
        })

    def to_csv(self) -> str:
        if not self.records:
            return ""
        keys = sorted(self.records[0].keys())
        rows = [",".join(keys)]
        for r in self.records:
            rows.append(",".join(str(clean(r.get(k))) for k in keys))
        return "\n".join(rows) + "\n"


def sharded_statistic(draw: Callable[[RngStream, int], np.ndarray], reps: int, seed: int,
                      jobs: int = 1) -> np.ndarray:
    """Draw ``reps`` statistics in fixed-size chunks on streams 0, 1, 2, ...

    Chunk boundaries do not depend on ``jobs``, so the output is identical for
    any degree of parallelism.
    """
    reps = int(reps)
    sizes = [min(CHUNK, reps - s) for s in range(0, reps, CHUNK)]
    tasks = [(i, sz) for i, sz in enumerate(sizes)]

    def run(task):
        i, sz = task
        return np.asarray(draw(RngStream(seed, i), sz), dtype=float)

    if jobs > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=int(jobs)) as ex:
            parts = list(ex.map(run, tasks))
    else:
        parts = [run(t) for t in tasks]
    return np.concatenate(parts) if parts else np.empty(0)


def validate_bound(statistic: Callable[[RngStream, int], np.ndarray],
                   bound: Callable[[float], float], t_grid: Sequence[float], reps: int,
                   level: float = 0.99, seed: int = 0, name: str = "validate",
                   jobs: int = 1, config: Optional[dict] = None,
                   min_reps: int = 1000) -> SimReport:
    """Compare empirical exceedances P(stat >= t) with a claimed upper bound.

    A grid point is a violation when the Clopper-Pearson lower limit of the
    exceedance frequency is above ``bound(t)``.
    """
    if int(reps) < min_reps:
        raise InputError(f"reps must be at least {min_reps}")
    stats = sharded_statistic(statistic, reps, seed, jobs)
    if not np.all(np.isfinite(stats)):
        raise InputError("statistic produced non-finite values")
    records = []
    for t in t_grid:
        hits = int(np.count_nonzero(stats >= t))
        lo, hi = clopper_pearson(hits, len(stats), level)
        b = float(bound(float(t)))
        records.append({
            "t": float(t), "exceedances": hits, "empirical_freq": hits / len(stats),
            "cp_lower": lo, "cp_upper": hi, "bound": b, "violation": lo > b,
        })
    rep = SimReport(name, int(seed), int(reps), dict(config or {}), records)
    rep.summary = {"violations": rep.violations, "level": level, "pass": rep.violations == 0}
    return rep


def iter_chunks(total: int, chunk: int = CHUNK) -> Iterable[tuple[int, int]]:
    for i, s in enumerate(range(0, total, chunk)):
        yield i, min(chunk, total - s)

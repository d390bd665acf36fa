"""Occupancy statistics for throwing ``s`` balls uniformly into ``t`` bins.

In the codebook picture a bin is one sequence index ``l1`` of a fixed
subcodebook ``C1(m1)`` and a ball is the preselected pair of one product
subcodebook ``C1(m1) x C2(m2)``, so ``t = 2**(n*R_l1)`` and ``s = 2**(n*R_2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._util import SizeGuardError, ValidationError, count_from_rate, derive_rng, pmap

# elements materialized per Monte Carlo chunk
_CHUNK_ELEMS = 1 << 22


@dataclass(frozen=True)
class OccupancyParams:
    t: int
    s: int

    def __post_init__(self):
        if int(self.t) != self.t or int(self.s) != self.s:
            raise ValidationError("t and s must be integers")
        if self.t < 1:
            raise ValidationError(f"need at least one bin, got t={self.t}")
        if self.s < 0:
            raise ValidationError(f"number of balls must be >= 0, got s={self.s}")


@dataclass(frozen=True)
class OccupancyStats:
    mean: float
    variance: float
    mean_fraction: float


@dataclass(frozen=True)
class SimulationStats:
    mean: float
    variance: float
    trials: int

    @property
    def std_error(self) -> float:
        return math.sqrt(self.variance / self.trials)


def _params(p, s=None) -> OccupancyParams:
    if isinstance(p, OccupancyParams):
        return p
    if s is None:
        raise ValidationError("pass OccupancyParams or both t and s")
    return OccupancyParams(int(p), int(s))


def _log_base(k: int, t: int) -> float:
    """``log(1 - k/t)`` for ``k < t``."""
    return math.log1p(-k / t)


def _pow_miss(k: int, t: int, s: int) -> float:
    """``(1 - k/t)**s`` evaluated in the log domain when the base is positive."""
    if s == 0:
        return 1.0
    base = 1.0 - k / t
    if base <= 0.0:
        return base**s
    return math.exp(s * _log_base(k, t))


def expected_distinct(p, s=None) -> float:
    """Mean number of occupied bins, ``t * (1 - (1 - 1/t)**s)``."""
    p = _params(p, s)
    if p.s == 0:
        return 0.0
    if p.t == 1:
        return 1.0
    return -p.t * math.expm1(p.s * _log_base(1, p.t))


def variance_distinct(p, s=None) -> float:
    """Variance of the number of occupied bins.

    ``t a + t^2 (1 - 1/t) b - t^2 a^2`` with ``a = (1-1/t)^s``,
    ``b = (1-2/t)^s``. For ``t > 2`` the last two terms are combined as
    ``t^2 a^2 expm1(d)`` to avoid cancellation.
    """
    p = _params(p, s)
    t, s = p.t, p.s
    if s == 0 or t == 1:
        return 0.0
    a = _pow_miss(1, t, s)
    if t == 2:
        b = _pow_miss(2, t, s)
        v = t * a + t * t * (1 - 1 / t) * b - t * t * a * a
    else:
        d = s * _log_base(2, t) + _log_base(1, t) - 2 * s * _log_base(1, t)
        v = t * a + t * t * a * a * math.expm1(d)
    return max(v, 0.0)


def occupancy_stats(p, s=None) -> OccupancyStats:
    p = _params(p, s)
    m = expected_distinct(p)
    return OccupancyStats(mean=m, variance=variance_distinct(p), mean_fraction=m / p.t)


def distinct_pmf(p, s=None) -> np.ndarray:
    """Exact law of the occupied-bin count, ``P(K = k)`` for ``k = 0..min(t, s)``.

    Built by adding balls one at a time: with ``k`` bins occupied the next
    ball lands in a fresh bin with probability ``(t - k)/t``.
    """
    p = _params(p, s)
    t, s = p.t, p.s
    kmax = min(t, s)
    law = np.zeros(kmax + 1)
    law[0] = 1.0
    k = np.arange(kmax + 1)
    stay = k / t
    for _ in range(s):
        new = law * stay
        new[1:] += law[:-1] * (1 - stay[:-1])
        law = new
    return law


def _count_chunk(t: int, s: int, size: int, rng: np.random.Generator) -> np.ndarray:
    if s == 0:
        return np.zeros(size, dtype=np.int64)
    if s <= t:
        balls = np.sort(rng.integers(0, t, size=(size, s)), axis=1)
        return 1 + np.count_nonzero(np.diff(balls, axis=1), axis=1)
    occ = rng.multinomial(s, np.full(t, 1.0 / t), size=size)
    return np.count_nonzero(occ, axis=1)


def simulate_distinct(p, trials: int, seed: int, s=None) -> SimulationStats:
    """Monte Carlo estimate of the occupied-bin count.

    Each trial places ``s`` balls uniformly at random and counts occupied
    bins; when ``s > t`` the placement is drawn as multinomial bin loads,
    which has the same law. Trials are split in fixed-size chunks, each with
    its own derived stream, so results depend on ``seed`` only.
    """
    if isinstance(p, OccupancyParams):
        params = p
    else:
        params = _params(p, s)
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    t, s = params.t, params.s
    per = max(1, _CHUNK_ELEMS // max(1, min(t, s)))
    sizes = [per] * (trials // per) + ([trials % per] if trials % per else [])

    def run(job):
        idx, size = job
        c = _count_chunk(t, s, size, derive_rng(seed, 1, idx))
        return int(c.sum()), int((c * c).sum())

    parts = pmap(run, list(enumerate(sizes)))
    tot = sum(a for a, _ in parts)
    tot2 = sum(b for _, b in parts)
    mean = tot / trials
    var = (tot2 - trials * mean * mean) / (trials - 1) if trials > 1 else 0.0
    return SimulationStats(mean=mean, variance=max(var, 0.0), trials=trials)


def theorem1_condition(r1: float, r2: float, rl1: float, rl2: float) -> bool:
    """True iff ``r1 > rl2`` and ``r2 > rl1`` (both strict)."""
    for name, v in (("r1", r1), ("r2", r2), ("rl1", rl1), ("rl2", rl2)):
        if v < 0:
            raise ValidationError(f"{name} must be >= 0, got {v}")
    return r1 > rl2 and r2 > rl1


def occupancy_fraction_trend(rl: float, r_other: float, n_list) -> list[tuple[int, float]]:
    """Expected occupied fraction at each block length.

    Uses ``t = round(2**(n*rl))`` bins and ``s = round(2**(n*r_other))``
    balls. Block lengths with ``n * max(rl, r_other) > 30`` are rejected.
    """
    if rl < 0 or r_other < 0:
        raise ValidationError("rates must be >= 0")
    out = []
    for n in n_list:
        if n * max(rl, r_other) > 30:
            raise SizeGuardError(f"n={n}: 2**(n*rate) exceeds 2**30")
        t, s = count_from_rate(n, rl), count_from_rate(n, r_other)
        out.append((int(n), expected_distinct(t, s) / t))
    return out

"""Finite-n Marton codebooks with jointly typical pair preselection.

Subcodebook ``C_i(m_i)`` holds ``L_i`` sequences ``u_i(m_i, l_i)`` drawn
i.i.d. from the marginal of ``U_i``. For every message pair one jointly
typical ``(l1, l2)`` is preselected; the encoder then only ever transmits
that pair. The experiments here check that the preselected indices look
like uniform throws into bins, which is what makes the unused-looking
randomization indices behave like a wiretap code's dummy messages.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from ._util import SizeGuardError, ValidationError, count_from_rate, derive_rng, derive_seed
from .ballbins import expected_distinct
from .channel import AuxiliaryStructure

ENUMERATION_GUARD = 1 << 24
FAILURE = -1

# cap on M1*M2*L1*L2 cells materialized at once during preselection
_CELL_CHUNK = 1 << 21


class EncodingError(RuntimeError):
    """The requested message pair has no preselected jointly typical pair."""


@dataclass(frozen=True)
class MartonConfig:
    n: int
    r1: float
    r2: float
    rl1: float
    rl2: float
    eps_pair: float
    seed: int = 0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValidationError(f"block length must be a positive integer, got {self.n}")
        for name in ("r1", "r2", "rl1", "rl2"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0, got {getattr(self, name)}")
        if not self.eps_pair > 0:
            raise ValidationError("eps_pair must be positive")
        if self.seed < 0:
            raise ValidationError("seed must be >= 0")
        if self.cells > ENUMERATION_GUARD:
            raise SizeGuardError(
                f"M1*M2*L1*L2 = {self.cells} exceeds 2**24 at n={self.n}"
            )

    @property
    def m1(self) -> int:
        return count_from_rate(self.n, self.r1)

    @property
    def m2(self) -> int:
        return count_from_rate(self.n, self.r2)

    @property
    def l1(self) -> int:
        return count_from_rate(self.n, self.rl1)

    @property
    def l2(self) -> int:
        return count_from_rate(self.n, self.rl2)

    @property
    def cells(self) -> int:
        return self.m1 * self.m2 * self.l1 * self.l2

    def with_seed(self, seed: int) -> "MartonConfig":
        return MartonConfig(self.n, self.r1, self.r2, self.rl1, self.rl2, self.eps_pair, seed)


@dataclass(frozen=True, eq=False)
class MartonCodebook:
    """Sequences ``u1[m1, l1, :]`` and ``u2[m2, l2, :]`` (0-based indices)."""

    config: MartonConfig
    aux: AuxiliaryStructure
    u1: np.ndarray
    u2: np.ndarray

    def __post_init__(self):
        c = self.config
        if self.u1.shape != (c.m1, c.l1, c.n) or self.u2.shape != (c.m2, c.l2, c.n):
            raise ValidationError("codebook arrays do not match the configuration")
        if self.u1.min() < 0 or self.u1.max() >= self.aux.u1_size:
            raise ValidationError("u1 symbol outside alphabet")
        if self.u2.min() < 0 or self.u2.max() >= self.aux.u2_size:
            raise ValidationError("u2 symbol outside alphabet")
        for arr in (self.u1, self.u2):
            arr.setflags(write=False)

    def subcodebook(self, i: int, m: int) -> np.ndarray:
        return (self.u1 if i == 1 else self.u2)[m]


@dataclass(frozen=True, eq=False)
class PairSelection:
    """``table[m1, m2] = (l1, l2)``, or ``(-1, -1)`` where no typical pair exists."""

    table: np.ndarray

    @property
    def failures(self) -> np.ndarray:
        return self.table[..., 0] == FAILURE

    @property
    def failure_count(self) -> int:
        return int(self.failures.sum())

    def get(self, m1: int, m2: int) -> tuple[int, int] | None:
        l1, l2 = self.table[m1, m2]
        if l1 == FAILURE:
            return None
        return int(l1), int(l2)


@dataclass(frozen=True, eq=False)
class DistinctCountReport:
    counts_1: np.ndarray
    counts_2: np.ndarray
    l1: int
    l2: int
    failure_count: int

    @property
    def fractions_1(self) -> np.ndarray:
        return self.counts_1 / self.l1

    @property
    def fractions_2(self) -> np.ndarray:
        return self.counts_2 / self.l2

    def to_dict(self) -> dict:
        return {
            "counts_1": self.counts_1.tolist(),
            "counts_2": self.counts_2.tolist(),
            "fractions_1": self.fractions_1.tolist(),
            "fractions_2": self.fractions_2.tolist(),
            "mean_fraction_1": float(self.fractions_1.mean()),
            "mean_fraction_2": float(self.fractions_2.mean()),
            "failure_count": self.failure_count,
        }


def _draw(rng: np.random.Generator, probs: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    # inverse-cdf sampling; searchsorted side="right" never returns a zero-probability symbol
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, rng.random(shape), side="right")
    return np.minimum(idx, probs.size - 1).astype(np.int16)


def generate_codebook(cfg: MartonConfig, aux: AuxiliaryStructure) -> MartonCodebook:
    """Draw every subcodebook sequence i.i.d. from the auxiliary marginals."""
    rng = derive_rng(cfg.seed, 2)
    u1 = _draw(rng, aux.marginal_u1().probs, (cfg.m1, cfg.l1, cfg.n))
    u2 = _draw(rng, aux.marginal_u2().probs, (cfg.m2, cfg.l2, cfg.n))
    return MartonCodebook(cfg, aux, u1, u2)


def pair_typical_mask(u1: np.ndarray, u2: np.ndarray, joint: np.ndarray, eps: float) -> np.ndarray:
    """Joint typicality of every ``(l1, l2)`` combination.

    ``u1`` has shape ``(..., L1, n)`` and ``u2`` shape ``(..., L2, n)`` with
    broadcastable leading axes; the result has shape ``(..., L1, L2)``.
    Pair-symbol counts come from one indicator product per ``(a, b)``.
    """
    n = u1.shape[-1]
    ka, kb = joint.shape
    ok = None
    for a in range(ka):
        ia = (u1 == a).astype(np.float32)
        for b in range(kb):
            ib = np.swapaxes((u2 == b).astype(np.float32), -1, -2)
            cnt = ia @ ib
            p = joint[a, b]
            good = np.abs(cnt / n - p) <= eps * p + 1e-12
            ok = good if ok is None else ok & good
    return ok


def _choose(mask: np.ndarray, rng: np.random.Generator, rule: str) -> np.ndarray:
    """Pick one True cell per ``(L1, L2)`` block; returns ``(..., 2)`` indices."""
    lead = mask.shape[:-2]
    l1, l2 = mask.shape[-2:]
    flat = mask.reshape(lead + (l1 * l2,))
    if rule == "uniform":
        keys = np.where(flat, rng.random(flat.shape), -1.0)
    elif rule == "first":
        keys = np.where(flat, np.arange(l1 * l2, 0, -1, dtype=float), -1.0)
    else:
        raise ValidationError(f"unknown selection rule {rule!r}")
    pick = keys.argmax(axis=-1)
    out = np.stack([pick // l2, pick % l2], axis=-1)
    out[~flat.any(axis=-1)] = FAILURE
    return out


def preselect_pairs(cb: MartonCodebook, rng_seed: int, rule: str = "uniform") -> PairSelection:
    """For each message pair pick one jointly typical ``(l1, l2)``.

    With ``rule="uniform"`` the pick is uniform over all typical pairs of the
    product subcodebook; ``rule="first"`` takes the lexicographically
    smallest and exists only as a biased reference rule.
    """
    c = cb.config
    rng = derive_rng(rng_seed, 3)
    joint = cb.aux.joint_matrix()
    rows = max(1, _CELL_CHUNK // (c.m2 * c.l1 * c.l2))
    parts = []
    for start in range(0, c.m1, rows):
        blk = cb.u1[start:start + rows]
        mask = pair_typical_mask(blk[:, None], cb.u2[None], joint, c.eps_pair)
        parts.append(_choose(mask, rng, rule))
    table = np.concatenate(parts, axis=0)
    return PairSelection(table)


@dataclass(frozen=True)
class Lemma1Result:
    cell_counts: np.ndarray
    statistic: float
    p_value: float
    failures: int
    alpha: float = 0.01

    @property
    def passed(self) -> bool:
        return self.p_value >= self.alpha


def lemma1_uniformity_test(
    cfg: MartonConfig,
    aux: AuxiliaryStructure,
    draws: int,
    seed: int,
    rule: str = "uniform",
    alpha: float = 0.01,
) -> Lemma1Result:
    """Chi-square test that the preselected cell of one product subcodebook is uniform.

    Every draw is a fresh codebook with ``M1 = M2 = 1``; draws without any
    typical pair are skipped and counted in ``failures``.
    """
    if cfg.m1 != 1 or cfg.m2 != 1:
        raise ValidationError("uniformity test works on a single product subcodebook (M1 = M2 = 1)")
    if draws < 1:
        raise ValidationError("draws must be >= 1")
    l1, l2 = cfg.l1, cfg.l2
    rng = derive_rng(seed, 4)
    joint = aux.joint_matrix()
    p1, p2 = aux.marginal_u1().probs, aux.marginal_u2().probs
    per = max(1, _CELL_CHUNK // (l1 * l2 * cfg.n))
    counts = np.zeros(l1 * l2, dtype=np.int64)
    failures = 0
    done = 0
    while done < draws:
        size = min(per, draws - done)
        u1 = _draw(rng, p1, (size, l1, cfg.n))
        u2 = _draw(rng, p2, (size, l2, cfg.n))
        picks = _choose(pair_typical_mask(u1, u2, joint, cfg.eps_pair), rng, rule)
        ok = picks[:, 0] != FAILURE
        failures += int((~ok).sum())
        counts += np.bincount(picks[ok, 0] * l2 + picks[ok, 1], minlength=l1 * l2)
        done += size
    if failures == draws:
        raise ValidationError("every draw lacked a jointly typical pair; nothing to test")
    if counts.size == 1:
        return Lemma1Result(counts, 0.0, 1.0, failures, alpha)
    res = stats.chisquare(counts)
    return Lemma1Result(counts, float(res.statistic), float(res.pvalue), failures, alpha)


def count_distinct(sel: PairSelection, cb: MartonCodebook) -> DistinctCountReport:
    """Distinct ``l_i`` per subcodebook among the preselected pairs."""
    c = cb.config
    ok = ~sel.failures
    m1_idx, m2_idx = np.nonzero(ok)
    used1 = np.zeros((c.m1, c.l1), dtype=bool)
    used2 = np.zeros((c.m2, c.l2), dtype=bool)
    used1[m1_idx, sel.table[m1_idx, m2_idx, 0]] = True
    used2[m2_idx, sel.table[m1_idx, m2_idx, 1]] = True
    return DistinctCountReport(
        counts_1=used1.sum(axis=1),
        counts_2=used2.sum(axis=1),
        l1=c.l1,
        l2=c.l2,
        failure_count=sel.failure_count,
    )


@dataclass(frozen=True)
class Theorem1Row:
    n: int
    t1: int
    s1: int
    t2: int
    s2: int
    mean_fraction_1: float
    mean_fraction_2: float
    predicted_1: float
    predicted_2: float
    failure_rate: float

    @property
    def mean_fraction(self) -> float:
        return 0.5 * (self.mean_fraction_1 + self.mean_fraction_2)

    @property
    def predicted_fraction(self) -> float:
        return 0.5 * (self.predicted_1 + self.predicted_2)


def theorem1_experiment(
    aux: AuxiliaryStructure,
    rates: tuple[float, float, float, float],
    n_list,
    draws: int,
    seed: int,
    eps_pair: float = 1e9,
) -> list[Theorem1Row]:
    """Average distinct-sequence fractions against the occupancy prediction.

    ``rates`` is ``(r1, r2, rl1, rl2)``. For user 1 the prediction is
    ``1 - (1 - 1/L1)**M2`` (bins ``L1``, balls ``M2``), symmetrically for
    user 2. The default ``eps_pair`` makes typicality vacuous so that only
    the counting law is exercised.
    """
    r1, r2, rl1, rl2 = rates
    cfgs = []
    for n in n_list:
        try:
            cfgs.append(MartonConfig(int(n), r1, r2, rl1, rl2, eps_pair, 0))
        except SizeGuardError as exc:
            raise SizeGuardError(f"first offending n={n}: {exc}") from exc
    rows = []
    for cfg in cfgs:
        f1, f2, fails = [], [], 0
        for d in range(draws):
            c = cfg.with_seed(derive_seed(seed, 5, cfg.n, d))
            cb = generate_codebook(c, aux)
            rep = count_distinct(preselect_pairs(cb, c.seed), cb)
            f1.append(rep.fractions_1.mean())
            f2.append(rep.fractions_2.mean())
            fails += rep.failure_count
        rows.append(Theorem1Row(
            n=cfg.n,
            t1=cfg.l1, s1=cfg.m2, t2=cfg.l2, s2=cfg.m1,
            mean_fraction_1=float(np.mean(f1)),
            mean_fraction_2=float(np.mean(f2)),
            predicted_1=expected_distinct(cfg.l1, cfg.m2) / cfg.l1,
            predicted_2=expected_distinct(cfg.l2, cfg.m1) / cfg.l2,
            failure_rate=fails / (draws * cfg.m1 * cfg.m2),
        ))
    return rows


def encode(cb: MartonCodebook, sel: PairSelection, m1: int, m2: int, encoder_seed: int = 0) -> np.ndarray:
    """Channel input for ``(m1, m2)``: ``x_j ~ p(x | u1_j, u2_j)`` on the preselected pair."""
    pair = sel.get(m1, m2)
    if pair is None:
        raise EncodingError(f"no jointly typical pair was preselected for ({m1}, {m2})")
    l1, l2 = pair
    u1 = cb.u1[m1, l1].astype(np.int64)
    u2 = cb.u2[m2, l2].astype(np.int64)
    rows = cb.aux.channel_input_map.rows[u1 * cb.aux.u2_size + u2]
    if cb.aux.channel_input_map.is_deterministic:
        return rows.argmax(axis=1)
    rng = derive_rng(encoder_seed, 6)
    cdf = np.cumsum(rows, axis=1)
    cdf[:, -1] = 1.0
    return (rng.random((rows.shape[0], 1)) >= cdf).sum(axis=1)


def dump_codebook_csv(cb: MartonCodebook, path: str | Path) -> None:
    """One row per ``(i, m, l)``; symbols are space-separated."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "m", "l", "symbols"])
        for i, arr in ((1, cb.u1), (2, cb.u2)):
            for m in range(arr.shape[0]):
                for l in range(arr.shape[1]):
                    w.writerow([i, m, l, " ".join(str(int(v)) for v in arr[m, l])])

"""Exact eavesdropper leakage and Monte Carlo decoding error for concrete codes.

Leakage is computed by enumerating every eavesdropper output ``z^n``, so it
is only available for tiny instances (``|Z|**n * M1 * M2 <= 2**22``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._util import SizeGuardError, ValidationError, derive_rng, derive_seed, pmap
from .channel import AuxiliaryStructure, BroadcastChannelSpec, pair_joint, typical_counts_ok
from .codebook import MartonCodebook, MartonConfig, PairSelection, generate_codebook, preselect_pairs

LEAKAGE_GUARD = 1 << 22


@dataclass(frozen=True)
class ExactLeakage:
    rate_1: float
    rate_2: float
    substituted: int  # message pairs whose FAILURE entry was replaced by the all-zeros input


@dataclass(frozen=True)
class LeakageReport:
    leakage_rate_1: float
    leakage_rate_2: float
    n: int
    codebook_draws: int
    per_draw_values: list = field(default_factory=list)
    spread_1: float = 0.0
    spread_2: float = 0.0
    flagged_draws: int = 0

    def to_dict(self) -> dict:
        return {
            "leakage_rate_1": self.leakage_rate_1,
            "leakage_rate_2": self.leakage_rate_2,
            "n": self.n,
            "codebook_draws": self.codebook_draws,
            "spread_1": self.spread_1,
            "spread_2": self.spread_2,
            "flagged_draws": self.flagged_draws,
            "per_draw_values": [list(v) for v in self.per_draw_values],
        }


@dataclass(frozen=True)
class ErrorReport:
    p_err_1: float
    p_err_2: float
    trials: int
    decoder: str

    @property
    def std_error_1(self) -> float:
        return math.sqrt(self.p_err_1 * (1 - self.p_err_1) / self.trials)

    @property
    def std_error_2(self) -> float:
        return math.sqrt(self.p_err_2 * (1 - self.p_err_2) / self.trials)

    def to_dict(self) -> dict:
        return {
            "p_err_1": self.p_err_1,
            "p_err_2": self.p_err_2,
            "std_error_1": self.std_error_1,
            "std_error_2": self.std_error_2,
            "trials": self.trials,
            "decoder": self.decoder,
        }


def _letter_laws(cb: MartonCodebook, sel: PairSelection, out_given_x: np.ndarray) -> tuple[np.ndarray, int]:
    """Per-letter output law for every message pair, shape ``(M1, M2, n, |out|)``.

    The encoder's randomness is folded in letter by letter:
    ``p(out | u1, u2) = sum_x p(x | u1, u2) p(out | x)``.
    """
    aux = cb.aux
    per_aux = aux.channel_input_map.rows @ out_given_x
    c = cb.config
    fail = sel.failures
    l1 = np.where(fail, 0, sel.table[..., 0])
    l2 = np.where(fail, 0, sel.table[..., 1])
    m1 = np.arange(c.m1)[:, None]
    m2 = np.arange(c.m2)[None, :]
    u1 = cb.u1[m1, l1].astype(np.int64)
    u2 = cb.u2[m2, l2].astype(np.int64)
    laws = per_aux[u1 * aux.u2_size + u2]
    if fail.any():
        laws[fail] = out_given_x[0]
    return laws, int(fail.sum())


def _sequence_law(letters: np.ndarray) -> np.ndarray:
    """Product law over ``out^n`` from per-letter laws ``(..., n, k)``; first letter most significant."""
    lead = letters.shape[:-2]
    n, k = letters.shape[-2:]
    out = np.ones(lead + (1,))
    for j in range(n):
        out = (out[..., :, None] * letters[..., j, None, :]).reshape(lead + (-1,))
    return out


def _entropy_rows(p: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(p > 0, p * np.log2(p), 0.0)
    return -t.sum(axis=-1)


def leakage_pair(cb: MartonCodebook, sel: PairSelection, ch: BroadcastChannelSpec) -> ExactLeakage:
    """``I(M1; Z^n)/n`` and ``I(M2; Z^n)/n`` with uniform independent messages."""
    c = cb.config
    size = ch.z_size**c.n * c.m1 * c.m2
    if size > LEAKAGE_GUARD:
        raise SizeGuardError(f"|Z|^n * M1 * M2 = {size} exceeds 2**22")
    if cb.aux.x_size != ch.x_size:
        raise ValidationError("codebook input alphabet does not match the channel")
    letters, substituted = _letter_laws(cb, sel, ch.output_given_x("z"))
    joint = _sequence_law(letters) / (c.m1 * c.m2)  # p(m1, m2, z^n)
    h_z = _entropy_rows(joint.sum(axis=(0, 1)))
    p_z_m1 = joint.sum(axis=1) * c.m1
    p_z_m2 = joint.sum(axis=0) * c.m2
    i1 = h_z - _entropy_rows(p_z_m1).mean()
    i2 = h_z - _entropy_rows(p_z_m2).mean()
    return ExactLeakage(max(i1, 0.0) / c.n, max(i2, 0.0) / c.n, substituted)


def exact_leakage(cb: MartonCodebook, sel: PairSelection, ch: BroadcastChannelSpec, i: int) -> float:
    """Leakage rate ``I(M_i; Z^n)/n`` in bits per channel use.

    Message pairs without a preselected pair transmit the all-zeros input;
    :func:`leakage_pair` reports how many were substituted.
    """
    if i not in (1, 2):
        raise ValidationError("receiver index must be 1 or 2")
    res = leakage_pair(cb, sel, ch)
    return res.rate_1 if i == 1 else res.rate_2


def average_leakage(
    cfg: MartonConfig,
    aux: AuxiliaryStructure,
    ch: BroadcastChannelSpec,
    draws: int,
    seed: int,
) -> LeakageReport:
    """Exact leakage averaged over independent codebook draws.

    Draw ``d`` uses codebook seed ``derive_seed(seed, 7, d)`` (the same value
    seeds the preselection), so two configurations run with the same
    ``seed`` are paired draw by draw.
    """
    if draws < 1:
        raise ValidationError("draws must be >= 1")
    if ch.z_size**cfg.n * cfg.m1 * cfg.m2 > LEAKAGE_GUARD:
        raise SizeGuardError("|Z|^n * M1 * M2 exceeds 2**22")

    def one(d: int) -> ExactLeakage:
        c = cfg.with_seed(derive_seed(seed, 7, d))
        cb = generate_codebook(c, aux)
        return leakage_pair(cb, preselect_pairs(cb, c.seed), ch)

    res = pmap(one, range(draws))
    v1 = np.array([r.rate_1 for r in res])
    v2 = np.array([r.rate_2 for r in res])
    return LeakageReport(
        leakage_rate_1=float(v1.mean()),
        leakage_rate_2=float(v2.mean()),
        n=cfg.n,
        codebook_draws=draws,
        per_draw_values=[(float(a), float(b)) for a, b in zip(v1, v2)],
        spread_1=float(v1.std()),
        spread_2=float(v2.std()),
        flagged_draws=sum(1 for r in res if r.substituted),
    )


class TypicalityDecoder:
    """Joint-typicality decoder for receiver ``i``.

    Returns the unique ``m`` such that some ``u_i(m, l)`` is jointly typical
    with the observation under the induced ``p(u_i, y_i)``, else ``None``.
    """

    def __init__(self, cb: MartonCodebook, ch: BroadcastChannelSpec, i: int, eps_dec: float):
        if i not in (1, 2):
            raise ValidationError("receiver index must be 1 or 2")
        if not eps_dec > 0:
            raise ValidationError("eps_dec must be positive")
        self.joint = pair_joint(cb.aux, ch, "u1y1" if i == 1 else "u2y2")
        self.y_size = self.joint.shape[1]
        self.words = (cb.u1 if i == 1 else cb.u2).astype(np.int64)
        self.eps = eps_dec
        self._probs = self.joint.reshape(-1)

    def __call__(self, y_seq) -> int | None:
        y = np.asarray(y_seq, dtype=np.int64)
        if y.shape != (self.words.shape[-1],):
            raise ValidationError("observation length does not match the block length")
        if y.min() < 0 or y.max() >= self.y_size:
            raise ValidationError("observation symbol outside alphabet")
        k = self._probs.size
        codes = (self.words * self.y_size + y).reshape(-1, y.size)
        # histogram of pair symbols per codeword in a single bincount
        rows = np.arange(codes.shape[0])[:, None] * k
        counts = np.bincount((rows + codes).ravel(), minlength=codes.shape[0] * k)
        counts = counts.reshape(self.words.shape[:2] + (k,))
        hit = typical_counts_ok(counts, y.size, self._probs, self.eps).any(axis=1)
        found = np.flatnonzero(hit)
        return int(found[0]) if found.size == 1 else None


def decode_typicality(cb: MartonCodebook, ch: BroadcastChannelSpec, y_seq, i: int, eps_dec: float) -> int | None:
    return TypicalityDecoder(cb, ch, i, eps_dec)(y_seq)


class MLDecoder:
    """Maximum-likelihood decoder for ``M_i`` with the other message uniform.

    Exhaustive over all message pairs, intended as a reference on tiny codes.
    Ties decode to ``None``.
    """

    def __init__(self, cb: MartonCodebook, sel: PairSelection, ch: BroadcastChannelSpec, i: int):
        if i not in (1, 2):
            raise ValidationError("receiver index must be 1 or 2")
        self.i = i
        laws, _ = _letter_laws(cb, sel, ch.output_given_x("y1" if i == 1 else "y2"))
        with np.errstate(divide="ignore"):
            self.log_laws = np.log(laws)  # (M1, M2, n, |Y|)

    def __call__(self, y_seq) -> int | None:
        y = np.asarray(y_seq, dtype=np.int64)
        n = self.log_laws.shape[2]
        ll = self.log_laws[:, :, np.arange(n), y].sum(axis=-1)
        axis = 1 if self.i == 1 else 0
        top = ll.max()
        if not np.isfinite(top):
            return None
        with np.errstate(divide="ignore"):
            score = np.log(np.exp(ll - top).sum(axis=axis))
        best = np.flatnonzero(score >= score.max() - 1e-12)
        return int(best[0]) if best.size == 1 else None


def _sample_rows(rng: np.random.Generator, rows: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(rows, axis=-1)
    cdf[..., -1] = 1.0
    return (rng.random(rows.shape[:-1] + (1,)) >= cdf).sum(axis=-1)


def estimate_error_prob(
    cb: MartonCodebook,
    sel: PairSelection,
    ch: BroadcastChannelSpec,
    trials: int,
    seed: int,
    eps_dec: float = 1.0,
    decoder: str = "typicality",
) -> ErrorReport:
    """Monte Carlo ``P(M_i_hat != M_i)`` over uniform messages and channel noise.

    Message pairs with no preselected pair count as errors at both receivers.
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    if decoder == "typicality":
        decs = [TypicalityDecoder(cb, ch, i, eps_dec) for i in (1, 2)]
    elif decoder in ("ml", "maximum-likelihood"):
        decoder = "maximum-likelihood"
        decs = [MLDecoder(cb, sel, ch, i) for i in (1, 2)]
    else:
        raise ValidationError(f"unknown decoder {decoder!r}")
    c = cb.config
    aux = cb.aux
    rng = derive_rng(seed, 8)
    _, y1_size, y2_size, z_size = ch.sizes
    flat_tr = ch.transition.reshape(ch.x_size, -1)
    msgs = np.stack([rng.integers(0, c.m1, trials), rng.integers(0, c.m2, trials)], axis=1)
    err = np.zeros(2, dtype=np.int64)
    for m1, m2 in msgs:
        pair = sel.get(m1, m2)
        if pair is None:
            err += 1
            continue
        u1 = cb.u1[m1, pair[0]].astype(np.int64)
        u2 = cb.u2[m2, pair[1]].astype(np.int64)
        x = _sample_rows(rng, aux.channel_input_map.rows[u1 * aux.u2_size + u2])
        out = _sample_rows(rng, flat_tr[x])
        y1 = out // (y2_size * z_size)
        y2 = (out // z_size) % y2_size
        err[0] += decs[0](y1) != m1
        err[1] += decs[1](y2) != m2
    return ErrorReport(err[0] / trials, err[1] / trials, trials, decoder)

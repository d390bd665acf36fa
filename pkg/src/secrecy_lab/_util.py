"""Shared errors, rounding and seeding helpers."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

PROB_TOL = 1e-9
INFO_TOL = 1e-8


class ValidationError(ValueError):
    """Malformed input: bad distribution, size mismatch, negative rate..."""


class SizeGuardError(ValueError):
    """A computation would exceed its enumeration guard."""


def count_from_rate(n: int, rate: float) -> int:
    """Integer size ``2**(n*rate)`` rounded half-up, never below 1."""
    if rate < 0:
        raise ValidationError(f"rate must be >= 0, got {rate}")
    return max(1, int(math.floor(2.0 ** (n * rate) + 0.5)))


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for component ``keys`` under master ``seed``.

    The derivation is ``SeedSequence(seed, spawn_key=keys)``, so streams for
    distinct key tuples never overlap and do not depend on call order.
    """
    if seed < 0:
        raise ValidationError(f"seed must be >= 0, got {seed}")
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys)))


def worker_count() -> int:
    raw = os.environ.get("SECRECY_LAB_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return n


def pmap(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """Ordered parallel map; output order matches input order."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def as_prob_array(values: Sequence | np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name}: non-finite probability")
    if np.any(arr < 0):
        raise ValidationError(f"{name}: negative probability")
    return arr


def derive_seed(seed: int, *keys: int) -> int:
    """Integer seed for a sub-experiment, derived like :func:`derive_rng`."""
    if seed < 0:
        raise ValidationError(f"seed must be >= 0, got {seed}")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint32)[0])

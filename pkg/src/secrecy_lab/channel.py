"""Finite-alphabet distributions, broadcast channels and information measures.

All logarithms are base 2. Distributions are validated on construction and
treated as immutable afterwards.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._util import PROB_TOL, ValidationError, as_prob_array

# slack added to typicality comparisons so exact boundary cases are not lost to rounding
_TYP_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class Pmf:
    """Probability mass function, optionally over a product alphabet.

    ``probs`` may be passed with any shape; it is stored flat, with the
    original shape kept in ``shape`` so that joint pmfs over pairs remember
    their factor sizes (row-major, i.e. pair ``(a, b)`` is symbol
    ``a * size_b + b``).
    """

    probs: np.ndarray
    shape: tuple[int, ...] = field(default=())

    def __post_init__(self):
        arr = as_prob_array(self.probs, "Pmf")
        shape = tuple(self.shape) or arr.shape
        if arr.size == 0:
            raise ValidationError("Pmf: empty support")
        if int(np.prod(shape)) != arr.size:
            raise ValidationError(f"Pmf: shape {shape} does not match {arr.size} entries")
        total = arr.sum()
        if abs(total - 1.0) > PROB_TOL:
            raise ValidationError(f"Pmf: probabilities sum to {total!r}, not 1")
        flat = arr.reshape(-1).copy()
        flat.setflags(write=False)
        object.__setattr__(self, "probs", flat)
        object.__setattr__(self, "shape", shape)

    @property
    def support_size(self) -> int:
        return self.probs.size

    def matrix(self) -> np.ndarray:
        return self.probs.reshape(self.shape)

    def marginal(self, axis: int) -> "Pmf":
        """Marginal over factor ``axis`` of a multi-factor pmf."""
        m = self.matrix()
        others = tuple(i for i in range(m.ndim) if i != axis)
        return Pmf(m.sum(axis=others))

    @classmethod
    def uniform(cls, k: int) -> "Pmf":
        return cls(np.full(k, 1.0 / k))

    @classmethod
    def point(cls, k: int, symbol: int) -> "Pmf":
        p = np.zeros(k)
        p[symbol] = 1.0
        return cls(p)


@dataclass(frozen=True, eq=False)
class ConditionalPmf:
    """Row-stochastic matrix; row ``a`` is the pmf of the output given input ``a``."""

    rows: np.ndarray

    def __post_init__(self):
        arr = as_prob_array(self.rows, "ConditionalPmf")
        if arr.ndim != 2 or 0 in arr.shape:
            raise ValidationError(f"ConditionalPmf: expected a non-empty matrix, got shape {arr.shape}")
        bad = np.abs(arr.sum(axis=1) - 1.0) > PROB_TOL
        if bad.any():
            raise ValidationError(f"ConditionalPmf: rows {np.flatnonzero(bad).tolist()} do not sum to 1")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "rows", arr)

    @property
    def input_size(self) -> int:
        return self.rows.shape[0]

    @property
    def output_size(self) -> int:
        return self.rows.shape[1]

    def row(self, a: int) -> Pmf:
        return Pmf(self.rows[a])

    @property
    def is_deterministic(self) -> bool:
        return bool(np.all(np.isclose(self.rows.max(axis=1), 1.0, atol=PROB_TOL)))

    @classmethod
    def from_function(cls, values, output_size: int) -> "ConditionalPmf":
        """Deterministic map: input ``a`` goes to ``values[a]`` with probability 1."""
        values = np.asarray(values, dtype=int)
        rows = np.zeros((values.size, output_size))
        rows[np.arange(values.size), values] = 1.0
        return cls(rows)


def bsc(flip: float) -> np.ndarray:
    """Transition matrix of a binary symmetric channel."""
    return np.array([[1 - flip, flip], [flip, 1 - flip]])


@dataclass(frozen=True, eq=False)
class BroadcastChannelSpec:
    """Per-letter law ``p(y1, y2, z | x)`` indexed ``[x, y1, y2, z]``.

    The n-letter law is the product of per-letter laws (memoryless, no
    feedback); nothing here depends on n.
    """

    transition: np.ndarray

    def __post_init__(self):
        arr = as_prob_array(self.transition, "BroadcastChannelSpec")
        if arr.ndim != 4 or 0 in arr.shape:
            raise ValidationError(f"BroadcastChannelSpec: expected rank-4 array, got shape {arr.shape}")
        sums = arr.reshape(arr.shape[0], -1).sum(axis=1)
        bad = np.abs(sums - 1.0) > PROB_TOL
        if bad.any():
            raise ValidationError(f"BroadcastChannelSpec: p(.|x) does not sum to 1 for x in {np.flatnonzero(bad).tolist()}")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "transition", arr)

    @property
    def sizes(self) -> tuple[int, int, int, int]:
        return tuple(self.transition.shape)  # type: ignore[return-value]

    @property
    def x_size(self) -> int:
        return self.transition.shape[0]

    @property
    def z_size(self) -> int:
        return self.transition.shape[3]

    def output_given_x(self, which: str) -> np.ndarray:
        """Marginal channel matrix ``p(out | x)`` for ``which`` in ``{"y1", "y2", "z"}``."""
        axes = {"y1": (2, 3), "y2": (1, 3), "z": (1, 2)}
        return self.transition.sum(axis=axes[which])

    @classmethod
    def from_components(cls, p_y1_x, p_y2_x, p_z_x) -> "BroadcastChannelSpec":
        """Channel whose three outputs are conditionally independent given x."""
        a, b, c = (np.asarray(m, dtype=float) for m in (p_y1_x, p_y2_x, p_z_x))
        if not (a.shape[0] == b.shape[0] == c.shape[0]):
            raise ValidationError("component channels disagree on |X|")
        return cls(np.einsum("xa,xb,xc->xabc", a, b, c))

    def to_dict(self) -> dict:
        x, y1, y2, z = self.sizes
        return {"x": x, "y1": y1, "y2": y2, "z": z, "p": self.transition.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "BroadcastChannelSpec":
        try:
            shape = (int(d["x"]), int(d["y1"]), int(d["y2"]), int(d["z"]))
            arr = np.asarray(d["p"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"channel spec: {exc}") from exc
        if arr.shape != shape:
            raise ValidationError(f"channel spec: declared sizes {shape} but array has shape {arr.shape}")
        return cls(arr)


@dataclass(frozen=True, eq=False)
class AuxiliaryStructure:
    """Joint pmf of ``(U1, U2)`` together with the input map ``p(x | u1, u2)``.

    Row ``u1 * u2_size + u2`` of ``channel_input_map`` is the pmf of X for
    that auxiliary pair.
    """

    u1_size: int
    u2_size: int
    joint: Pmf
    channel_input_map: ConditionalPmf

    def __post_init__(self):
        if self.u1_size < 1 or self.u2_size < 1:
            raise ValidationError("auxiliary alphabet sizes must be positive")
        k = self.u1_size * self.u2_size
        if self.joint.support_size != k:
            raise ValidationError(f"joint has {self.joint.support_size} entries, expected {k}")
        if self.channel_input_map.input_size != k:
            raise ValidationError(f"input map has {self.channel_input_map.input_size} rows, expected {k}")
        if self.joint.shape != (self.u1_size, self.u2_size):
            object.__setattr__(self, "joint", Pmf(self.joint.probs, (self.u1_size, self.u2_size)))

    @classmethod
    def build(cls, joint, input_map) -> "AuxiliaryStructure":
        """Convenience constructor from a ``|U1| x |U2|`` matrix and a map matrix."""
        j = np.asarray(joint, dtype=float)
        if j.ndim != 2:
            raise ValidationError("joint must be a |U1| x |U2| matrix")
        m = input_map if isinstance(input_map, ConditionalPmf) else ConditionalPmf(input_map)
        return cls(j.shape[0], j.shape[1], Pmf(j), m)

    @property
    def x_size(self) -> int:
        return self.channel_input_map.output_size

    def joint_matrix(self) -> np.ndarray:
        return self.joint.matrix()

    def marginal_u1(self) -> Pmf:
        return self.joint.marginal(0)

    def marginal_u2(self) -> Pmf:
        return self.joint.marginal(1)

    def map_tensor(self) -> np.ndarray:
        """``p(x | u1, u2)`` as an array indexed ``[u1, u2, x]``."""
        return self.channel_input_map.rows.reshape(self.u1_size, self.u2_size, self.x_size)

    def to_dict(self) -> dict:
        return {
            "u1": self.u1_size,
            "u2": self.u2_size,
            "joint": self.joint_matrix().tolist(),
            "map": self.channel_input_map.rows.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AuxiliaryStructure":
        try:
            u1, u2 = int(d["u1"]), int(d["u2"])
            joint = np.asarray(d["joint"], dtype=float)
            input_map = np.asarray(d["map"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"aux spec: {exc}") from exc
        if joint.shape != (u1, u2):
            raise ValidationError(f"aux spec: joint shape {joint.shape} != ({u1}, {u2})")
        return cls(u1, u2, Pmf(joint), ConditionalPmf(input_map))


def load_channel(path: str | Path) -> BroadcastChannelSpec:
    return BroadcastChannelSpec.from_dict(_read_json(path))


def load_aux(path: str | Path) -> AuxiliaryStructure:
    return AuxiliaryStructure.from_dict(_read_json(path))


def _read_json(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc


@dataclass(frozen=True)
class MutualInfoProfile:
    """The five mutual informations (bits) that parametrize the rate region.

    ``h_u1``/``h_u2`` are the auxiliary entropies when known; they enable the
    ``i_u1_u2 <= min(H(U1), H(U2))`` check.
    """

    i_u1_y1: float
    i_u2_y2: float
    i_u1_z: float
    i_u2_z: float
    i_u1_u2: float
    h_u1: float | None = None
    h_u2: float | None = None

    def __post_init__(self):
        for name in ("i_u1_y1", "i_u2_y2", "i_u1_z", "i_u2_z", "i_u1_u2"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValidationError(f"{name} must be a finite nonnegative number, got {v}")
        if self.h_u1 is not None and self.h_u2 is not None:
            if self.i_u1_u2 > min(self.h_u1, self.h_u2) + 1e-8:
                raise ValidationError("I(U1;U2) exceeds min(H(U1), H(U2))")

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.i_u1_y1, self.i_u2_y2, self.i_u1_z, self.i_u2_z, self.i_u1_u2)


def _probs(p) -> np.ndarray:
    return p.probs if isinstance(p, Pmf) else Pmf(p).probs


def entropy(p) -> float:
    """Shannon entropy in bits, with ``0 log 0 = 0``."""
    probs = _probs(p)
    nz = probs[probs > 0]
    return float(max(0.0, -np.sum(nz * np.log2(nz))))


def mutual_information(joint, size_a: int | None = None, size_b: int | None = None) -> float:
    """``I(A;B) = H(A) + H(B) - H(A,B)`` for a joint pmf over ``A x B``.

    ``joint`` may be a 2-D array, a :class:`Pmf` carrying a 2-factor shape,
    or a flat vector together with ``size_a`` and ``size_b``.
    """
    if isinstance(joint, Pmf):
        flat = joint.probs
        shape = joint.shape if len(joint.shape) == 2 else None
    else:
        arr = np.asarray(joint, dtype=float)
        flat = arr.reshape(-1)
        shape = arr.shape if arr.ndim == 2 else None
    if size_a is not None or size_b is not None:
        if size_a is None or size_b is None or size_a * size_b != flat.size:
            raise ValidationError(f"joint of {flat.size} entries cannot be viewed as {size_a} x {size_b}")
        if shape is not None and shape != (size_a, size_b):
            raise ValidationError(f"joint shape {shape} != ({size_a}, {size_b})")
        shape = (size_a, size_b)
    if shape is None:
        raise ValidationError("mutual_information needs a 2-D joint or explicit sizes")
    m = Pmf(flat, shape).matrix()
    mi = entropy(m.sum(axis=1)) + entropy(m.sum(axis=0)) - entropy(flat)
    return 0.0 if mi < 0 else float(mi)


def full_joint(aux: AuxiliaryStructure, ch: BroadcastChannelSpec) -> np.ndarray:
    """``p(u1, u2, x, y1, y2, z)`` as a rank-6 array."""
    if aux.x_size != ch.x_size:
        raise ValidationError(f"aux maps into |X|={aux.x_size} but channel has |X|={ch.x_size}")
    return np.einsum("ab,abx,xpqr->abxpqr", aux.joint_matrix(), aux.map_tensor(), ch.transition)


def induced_distributions(aux: AuxiliaryStructure, ch: BroadcastChannelSpec) -> MutualInfoProfile:
    """Mutual informations induced by ``p(u1,u2) p(x|u1,u2) p(y1,y2,z|x)``."""
    full = full_joint(aux, ch)
    p_u1_y1 = full.sum(axis=(1, 2, 4, 5))
    p_u2_y2 = full.sum(axis=(0, 2, 3, 5))
    p_u1_z = full.sum(axis=(1, 2, 3, 4))
    p_u2_z = full.sum(axis=(0, 2, 3, 4))
    return MutualInfoProfile(
        i_u1_y1=mutual_information(p_u1_y1),
        i_u2_y2=mutual_information(p_u2_y2),
        i_u1_z=mutual_information(p_u1_z),
        i_u2_z=mutual_information(p_u2_z),
        i_u1_u2=mutual_information(aux.joint_matrix()),
        h_u1=entropy(aux.marginal_u1()),
        h_u2=entropy(aux.marginal_u2()),
    )


def pair_joint(aux: AuxiliaryStructure, ch: BroadcastChannelSpec, which: str) -> np.ndarray:
    """Joint ``p(u_i, out)`` for ``which`` in ``{"u1y1", "u2y2", "u1z", "u2z"}``."""
    full = full_joint(aux, ch)
    keep = {"u1y1": (0, 3), "u2y2": (1, 4), "u1z": (0, 5), "u2z": (1, 5)}[which]
    return full.sum(axis=tuple(i for i in range(6) if i not in keep))


def typical_counts_ok(counts: np.ndarray, n: int, probs: np.ndarray, eps: float) -> np.ndarray:
    """Vectorized strong-typicality test on symbol counts.

    ``counts`` has shape ``(..., k)``; returns a boolean array of shape
    ``(...)``. Symbols with zero probability must not occur, which the
    relative-deviation rule enforces by itself.
    """
    dev = np.abs(counts / n - probs)
    return np.all(dev <= eps * probs + _TYP_SLACK, axis=-1)


def _check_seq(seq, k: int, name: str) -> np.ndarray:
    s = np.asarray(seq)
    if s.ndim != 1 or s.size == 0:
        raise ValidationError(f"{name}: expected a non-empty 1-D sequence")
    if not np.issubdtype(s.dtype, np.integer):
        if not np.all(np.mod(s, 1) == 0):
            raise ValidationError(f"{name}: symbols must be integers")
        s = s.astype(int)
    if s.min() < 0 or s.max() >= k:
        raise ValidationError(f"{name}: symbol outside alphabet [0, {k})")
    return s


def is_typical(seq, p, eps: float) -> bool:
    """Strong typicality: ``|N(a)/n - p(a)| <= eps * p(a)`` for every symbol ``a``."""
    if eps <= 0:
        raise ValidationError("eps must be positive")
    probs = _probs(p)
    s = _check_seq(seq, probs.size, "seq")
    counts = np.bincount(s, minlength=probs.size)
    return bool(typical_counts_ok(counts, s.size, probs, eps))


def is_jointly_typical(seq_a, seq_b, joint, eps: float) -> bool:
    """Strong joint typicality of ``(seq_a, seq_b)`` under a pmf on pairs.

    ``joint`` is a 2-D array or a :class:`Pmf` with a two-factor shape. If
    the pair is jointly typical, each component is typical for its marginal
    with the same ``eps`` (the deviations add up over the other factor).
    """
    if eps <= 0:
        raise ValidationError("eps must be positive")
    if isinstance(joint, Pmf):
        if len(joint.shape) != 2:
            raise ValidationError("joint pmf must have a two-factor shape")
        m = joint.matrix()
    else:
        m = Pmf(joint).matrix()
        if m.ndim != 2:
            raise ValidationError("joint must be 2-D")
    ka, kb = m.shape
    a = _check_seq(seq_a, ka, "seq_a")
    b = _check_seq(seq_b, kb, "seq_b")
    if a.size != b.size:
        raise ValidationError(f"sequence lengths differ: {a.size} vs {b.size}")
    counts = np.bincount(a * kb + b, minlength=ka * kb)
    return bool(typical_counts_ok(counts, a.size, m.reshape(-1), eps))

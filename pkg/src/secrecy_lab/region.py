"""Individual-secrecy rate region: linear systems, Fourier-Motzkin, polygons.

The region for a fixed auxiliary distribution is

    R1 < I(U1;Y1) - I(U1;Z)          R1 > I(U2;Z)
    R2 < I(U2;Y2) - I(U2;Z)          R2 > I(U1;Z)
    R1 + R2 < I(U1;Y1) + I(U2;Y2) - I(U1;U2)
    R1 + R2 > I(U1;U2)
    subject to min(I(U1;Y1), I(U2;Y2)) > I(U1;U2),

and it is what remains after projecting the randomization rates out of the
four-variable system built by :func:`pre_fm_system`.

The three lower bounds keep the region away from the axes. Rate pairs cut off
this way can be reached by appending extra random bits to each message; that
construction is not modelled here, only the closure of the region.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._util import ValidationError, derive_rng, pmap
from .channel import (
    AuxiliaryStructure,
    BroadcastChannelSpec,
    ConditionalPmf,
    MutualInfoProfile,
    Pmf,
    induced_distributions,
)

SENSES = ("<=", "<", ">=", ">")
_SENSE_ALIASES = {"≤": "<=", "≥": ">=", "=<": "<=", "=>": ">="}
_TOL = 1e-9


@dataclass(frozen=True)
class LinearConstraint:
    """``sum_v coeffs[v] * v  (sense)  bound``.

    A constraint without coefficients is a pure feasibility condition
    ``0 (sense) bound``; ``label`` is descriptive only and ignored by
    equality.
    """

    coeffs: Mapping[str, float]
    sense: str
    bound: float
    label: str = field(default="", compare=False)

    def __post_init__(self):
        sense = _SENSE_ALIASES.get(self.sense, self.sense)
        if sense not in SENSES:
            raise ValidationError(f"unknown sense {self.sense!r}")
        clean = {str(k): float(v) for k, v in dict(self.coeffs).items() if v != 0}
        if not math.isfinite(self.bound) or not all(math.isfinite(v) for v in clean.values()):
            raise ValidationError("constraint data must be finite")
        object.__setattr__(self, "sense", sense)
        object.__setattr__(self, "bound", float(self.bound))
        object.__setattr__(self, "coeffs", MappingProxyType(clean))

    def __hash__(self):
        return hash((tuple(sorted(self.coeffs.items())), self.sense, self.bound))

    def __eq__(self, other):
        if not isinstance(other, LinearConstraint):
            return NotImplemented
        return (dict(self.coeffs), self.sense, self.bound) == (dict(other.coeffs), other.sense, other.bound)

    @property
    def strict(self) -> bool:
        return self.sense in ("<", ">")

    @property
    def is_feasibility(self) -> bool:
        return not self.coeffs

    def upper_form(self) -> tuple[dict[str, float], float, bool]:
        """Coefficients and bound of the equivalent ``<=``/``<`` constraint."""
        if self.sense in ("<=", "<"):
            return dict(self.coeffs), self.bound, self.strict
        return {k: -v for k, v in self.coeffs.items()}, -self.bound, self.strict

    def slack(self, point: Mapping[str, float]) -> float:
        """``bound - lhs`` in upper form; nonnegative when the closed constraint holds."""
        c, b, _ = self.upper_form()
        return b - sum(v * point[k] for k, v in c.items())

    def holds(self, point: Mapping[str, float] | None = None, tol: float = 0.0) -> bool:
        s = self.slack(point or {})
        return s > tol if self.strict else s >= -tol

    def __str__(self) -> str:
        terms = []
        for k, v in self.coeffs.items():
            mag = "" if abs(v) == 1 else f"{abs(v):g}*"
            if not terms:
                terms.append(f"{'-' if v < 0 else ''}{mag}{k}")
            else:
                terms.append(f"{'-' if v < 0 else '+'} {mag}{k}")
        return f"{' '.join(terms) or '0'} {self.sense} {self.bound:.12g}"


def _canonical(coeffs: Mapping[str, float], bound: float, strict: bool, label: str) -> LinearConstraint:
    """Scale to max |coef| = 1 and orient so the leading coefficient is positive."""
    if not coeffs:
        return LinearConstraint({}, "<" if strict else "<=", bound, label)
    scale = max(abs(v) for v in coeffs.values())
    c = {k: v / scale for k, v in coeffs.items()}
    b = bound / scale
    lead = next(v for _, v in sorted(c.items()))
    if lead < 0:
        return LinearConstraint({k: -v for k, v in c.items()}, ">" if strict else ">=", -b, label)
    return LinearConstraint(c, "<" if strict else "<=", b, label)


@dataclass(frozen=True)
class ConstraintSystem:
    variables: tuple[str, ...]
    constraints: tuple[LinearConstraint, ...]

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if len(set(self.variables)) != len(self.variables):
            raise ValidationError("duplicate variable names")
        known = set(self.variables)
        for c in self.constraints:
            extra = set(c.coeffs) - known
            if extra:
                raise ValidationError(f"constraint {c} uses undeclared variables {sorted(extra)}")

    @property
    def side_conditions(self) -> list[LinearConstraint]:
        return [c for c in self.constraints if c.is_feasibility]

    @property
    def empty(self) -> bool:
        """True when some feasibility condition is violated (empty-region marker)."""
        return any(not c.holds() for c in self.side_conditions)

    def matrix(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(A, b, strict)`` with every row in ``A x <= b`` / ``A x < b`` form."""
        A = np.zeros((len(self.constraints), len(self.variables)))
        b = np.zeros(len(self.constraints))
        strict = np.zeros(len(self.constraints), dtype=bool)
        pos = {v: i for i, v in enumerate(self.variables)}
        for r, con in enumerate(self.constraints):
            c, bb, s = con.upper_form()
            for k, v in c.items():
                A[r, pos[k]] = v
            b[r], strict[r] = bb, s
        return A, b, strict

    def satisfied(self, point: Mapping[str, float] | Sequence[float], tol: float = 0.0) -> bool:
        if not isinstance(point, Mapping):
            point = dict(zip(self.variables, point))
        return all(c.holds(point, tol) for c in self.constraints)

    def to_dict(self) -> dict:
        return {
            "vars": list(self.variables),
            "cons": [
                {"coeffs": dict(c.coeffs), "sense": c.sense, "bound": c.bound, **({"label": c.label} if c.label else {})}
                for c in self.constraints
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConstraintSystem":
        try:
            cons = [
                LinearConstraint(c.get("coeffs", {}), c["sense"], float(c["bound"]), c.get("label", ""))
                for c in d["cons"]
            ]
            return cls(tuple(d["vars"]), tuple(cons))
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValidationError(f"constraint system JSON: {exc}") from exc

    def __str__(self) -> str:
        return "\n".join(str(c) for c in self.constraints)


def load_system(path: str | Path) -> ConstraintSystem:
    try:
        return ConstraintSystem.from_dict(json.loads(Path(path).read_text()))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc


def _key(con: LinearConstraint, variables: Sequence[str]) -> tuple[np.ndarray, float, bool]:
    c, b, s = con.upper_form()
    vec = np.array([c.get(v, 0.0) for v in variables])
    scale = np.abs(vec).max() if vec.any() else 1.0
    return vec / scale, b / scale, s


def _dominates(a, b, tol: float) -> bool:
    """``a`` implies ``b`` (same normal direction, tighter or equal bound)."""
    va, ba, sa = a
    vb, bb, sb = b
    if va.shape != vb.shape or not np.allclose(va, vb, atol=tol, rtol=0):
        return False
    if ba < bb - tol:
        return True
    return abs(ba - bb) <= tol and (sa or not sb)


def remove_redundant(sys: ConstraintSystem, tol: float = _TOL) -> ConstraintSystem:
    """Drop every constraint implied by a single other one after scaling."""
    keys = [_key(c, sys.variables) for c in sys.constraints]
    keep = []
    for i, ki in enumerate(keys):
        redundant = False
        for j, kj in enumerate(keys):
            if i == j or not _dominates(kj, ki, tol):
                continue
            # mutual dominance means duplicates: keep the earliest
            if _dominates(ki, kj, tol) and i < j:
                continue
            redundant = True
            break
        if not redundant:
            keep.append(sys.constraints[i])
    return ConstraintSystem(sys.variables, tuple(keep))


def fourier_motzkin_eliminate(sys: ConstraintSystem, var: str) -> ConstraintSystem:
    """Project ``var`` out of ``sys``.

    Every lower bound on ``var`` is paired with every upper bound; a
    combination is strict when either parent is. Combinations with no
    variables left stay in the system as feasibility conditions. Pairwise
    dominance removes redundant output rows.
    """
    if var not in sys.variables:
        raise ValidationError(f"{var!r} is not a variable of the system")
    upper, lower, rest = [], [], []
    for con in sys.constraints:
        c, b, s = con.upper_form()
        a = c.get(var, 0.0)
        if a > 0:
            upper.append((c, b, s, a, con.label))
        elif a < 0:
            lower.append((c, b, s, a, con.label))
        else:
            rest.append(_canonical(c, b, s, con.label))
    out = list(rest)
    for cu, bu, su, au, lu in upper:
        for cl, bl, sl, al, ll in lower:
            wu, wl = -al, au
            coeffs = {}
            for k in set(cu) | set(cl):
                if k == var:
                    continue
                v = wu * cu.get(k, 0.0) + wl * cl.get(k, 0.0)
                if abs(v) > 1e-15:
                    coeffs[k] = v
            label = f"({ll}) & ({lu})" if (ll or lu) else ""
            out.append(_canonical(coeffs, wu * bu + wl * bl, su or sl, label))
    variables = tuple(v for v in sys.variables if v != var)
    return remove_redundant(ConstraintSystem(variables, tuple(out)))


def eliminate(sys: ConstraintSystem, names: Iterable[str]) -> ConstraintSystem:
    for name in names:
        sys = fourier_motzkin_eliminate(sys, name)
    return sys


def canonical_form(sys: ConstraintSystem) -> ConstraintSystem:
    """Redundancy-free system with every row scaled and oriented canonically."""
    rows = []
    for con in sys.constraints:
        c, b, s = con.upper_form()
        rows.append(_canonical(c, b, s, con.label))
    return remove_redundant(ConstraintSystem(sys.variables, tuple(rows)))


def systems_equivalent(a: ConstraintSystem, b: ConstraintSystem, tol: float = 1e-9) -> bool:
    """Same variables and, after canonicalization, the same set of rows."""
    if set(a.variables) != set(b.variables):
        return False
    order = tuple(sorted(a.variables))
    ka = [_key(c, order) for c in canonical_form(a).constraints]
    kb = [_key(c, order) for c in canonical_form(b).constraints]
    if len(ka) != len(kb):
        return False
    unmatched = list(kb)
    for x in ka:
        for i, y in enumerate(unmatched):
            if x[2] == y[2] and abs(x[1] - y[1]) <= tol and np.allclose(x[0], y[0], atol=tol, rtol=0):
                del unmatched[i]
                break
        else:
            return False
    return True


def theorem2_system(mi: MutualInfoProfile) -> ConstraintSystem:
    """The six rate inequalities, nonnegativity and the side condition.

    The side condition is a coefficient-free row; when it fails the returned
    system has ``empty == True``.
    """
    a1, a2, e1, e2, i12 = mi.as_tuple()
    L = LinearConstraint
    cons = (
        L({"R1": 1}, "<", a1 - e1, "R1 < I(U1;Y1) - I(U1;Z)"),
        L({"R2": 1}, "<", a2 - e2, "R2 < I(U2;Y2) - I(U2;Z)"),
        L({"R1": 1, "R2": 1}, "<", a1 + a2 - i12, "R1 + R2 < I(U1;Y1) + I(U2;Y2) - I(U1;U2)"),
        L({"R1": 1}, ">", e2, "R1 > I(U2;Z)"),
        L({"R2": 1}, ">", e1, "R2 > I(U1;Z)"),
        L({"R1": 1, "R2": 1}, ">", i12, "R1 + R2 > I(U1;U2)"),
        L({"R1": 1}, ">=", 0.0, "R1 >= 0"),
        L({"R2": 1}, ">=", 0.0, "R2 >= 0"),
        L({}, "<", min(a1, a2) - i12, "min(I(U1;Y1), I(U2;Y2)) > I(U1;U2)"),
    )
    return ConstraintSystem(("R1", "R2"), cons)


def pre_fm_system(mi: MutualInfoProfile) -> ConstraintSystem:
    """Rate constraints before the randomization rates are projected out.

    Covering (a typical pair exists in every product subcodebook), decoding
    at each receiver, eavesdropper confusion per message, the distinct-count
    condition, and nonnegativity of all four rates.
    """
    a1, a2, e1, e2, i12 = mi.as_tuple()
    L = LinearConstraint
    cons = (
        L({"Rl1": 1, "Rl2": 1}, ">", i12, "covering: Rl1 + Rl2 > I(U1;U2)"),
        L({"R1": 1, "Rl1": 1}, "<", a1, "decoding: R1 + Rl1 < I(U1;Y1)"),
        L({"R2": 1, "Rl2": 1}, "<", a2, "decoding: R2 + Rl2 < I(U2;Y2)"),
        L({"Rl1": 1}, ">=", e1, "secrecy: Rl1 >= I(U1;Z)"),
        L({"Rl2": 1}, ">=", e2, "secrecy: Rl2 >= I(U2;Z)"),
        L({"R1": 1, "Rl2": -1}, ">", 0.0, "distinct: R1 > Rl2"),
        L({"R2": 1, "Rl1": -1}, ">", 0.0, "distinct: R2 > Rl1"),
        L({"R1": 1}, ">=", 0.0, "R1 >= 0"),
        L({"R2": 1}, ">=", 0.0, "R2 >= 0"),
        L({"Rl1": 1}, ">=", 0.0, "Rl1 >= 0"),
        L({"Rl2": 1}, ">=", 0.0, "Rl2 >= 0"),
    )
    return ConstraintSystem(("R1", "R2", "Rl1", "Rl2"), cons)


@dataclass(frozen=True)
class RatePolygon:
    """Closure of a 2-D rate region as a counter-clockwise vertex list.

    ``edge_strict[k]`` tells whether the edge from vertex ``k`` to ``k+1``
    belongs to a strict constraint, i.e. is excluded from the open region.
    """

    vertices: tuple[tuple[float, float], ...]
    closure_tolerance: float = 1e-9
    edge_strict: tuple[bool, ...] = ()

    @property
    def is_empty(self) -> bool:
        return not self.vertices

    def area(self) -> float:
        if len(self.vertices) < 3:
            return 0.0
        v = np.array(self.vertices)
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))

    def contains(self, point: Sequence[float], tol: float | None = None) -> bool:
        """Closed point-in-polygon test (convexity assumed)."""
        tol = self.closure_tolerance if tol is None else tol
        if not self.vertices:
            return False
        p = np.asarray(point, dtype=float)
        v = np.array(self.vertices)
        if len(v) == 1:
            return bool(np.linalg.norm(p - v[0]) <= tol)
        if len(v) == 2:
            d = v[1] - v[0]
            t = np.clip(np.dot(p - v[0], d) / np.dot(d, d), 0, 1)
            return bool(np.linalg.norm(v[0] + t * d - p) <= tol)
        for k in range(len(v)):
            a, b = v[k], v[(k + 1) % len(v)]
            e = b - a
            cross = e[0] * (p[1] - a[1]) - e[1] * (p[0] - a[0])
            if cross < -tol * max(1.0, np.linalg.norm(e)):
                return False
        return True


def _hull(points: np.ndarray) -> np.ndarray:
    """Monotone-chain convex hull, counter-clockwise, collinear points dropped."""
    pts = sorted(set(map(tuple, points)))
    if len(pts) <= 2:
        return np.array(pts)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 1e-14:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 1e-14:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def polygon_of(sys: ConstraintSystem, tol: float = 1e-9) -> RatePolygon:
    """Vertices of the closure of a two-variable system.

    Strict rows are treated as closed. Candidate vertices are all pairwise
    boundary intersections that satisfy every row within ``tol``; the hull of
    the survivors is returned. The region must be bounded for the result to
    describe it completely.
    """
    if len(sys.variables) != 2:
        raise ValidationError(f"polygon_of needs exactly two variables, got {sys.variables}")
    if sys.empty:
        return RatePolygon((), tol)
    A, b, strict = sys.matrix()
    rows = [k for k in range(len(b)) if A[k].any()]
    pts = []
    for i, j in itertools.combinations(rows, 2):
        M = A[[i, j]]
        det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
        if abs(det) < 1e-14:
            continue
        p = np.linalg.solve(M, b[[i, j]])
        if np.all(A @ p <= b + tol * np.maximum(1.0, np.abs(b))):
            pts.append(np.round(p, 12) + 0.0)
    if not pts:
        return RatePolygon((), tol)
    hull = _hull(np.array(pts))
    verts = tuple((float(x), float(y)) for x, y in hull)
    edges = []
    if len(verts) >= 2:
        for k in range(len(verts)):
            p, q = np.array(verts[k]), np.array(verts[(k + 1) % len(verts)])
            tight = [r for r in rows if abs(A[r] @ p - b[r]) <= 1e-7 and abs(A[r] @ q - b[r]) <= 1e-7]
            edges.append(any(strict[r] for r in tight))
    return RatePolygon(verts, tol, tuple(edges))


def side_condition_holds(mi: MutualInfoProfile) -> bool:
    return min(mi.i_u1_y1, mi.i_u2_y2) > mi.i_u1_u2


@dataclass(frozen=True)
class RegionSample:
    index: int
    aux: AuxiliaryStructure
    profile: MutualInfoProfile
    polygon: RatePolygon


@dataclass(frozen=True)
class SearchResult:
    samples: list[RegionSample]
    union_vertices: tuple[tuple[float, float], ...]

    def polygons(self) -> list[RatePolygon]:
        return [s.polygon for s in self.samples]


def _simplex_grid(k: int, step: float) -> list[np.ndarray]:
    m = int(round(1 / step))
    out = []
    for combo in itertools.combinations_with_replacement(range(k), m):
        v = np.bincount(combo, minlength=k) / m
        out.append(v)
    # stable, seed-free order
    out.sort(key=lambda v: tuple(-v))
    return out


def _candidates(ch, u1_size, u2_size, samples, seed, mode, grid_step):
    k = u1_size * u2_size
    nx = ch.x_size
    if mode == "grid":
        joints = _simplex_grid(k, grid_step)
        maps = [ConditionalPmf.from_function(f, nx) for f in itertools.product(range(nx), repeat=k)]
        return [(i, (j, m)) for i, (j, m) in enumerate(itertools.product(joints, maps))]

    def draw(i):
        rng = derive_rng(seed, 9, i)
        joint = rng.dirichlet(np.ones(k))
        if rng.random() < 0.5:
            m = ConditionalPmf.from_function(rng.integers(0, nx, k), nx)
        else:
            m = ConditionalPmf(rng.dirichlet(np.ones(nx), size=k))
        return i, (joint, m)

    return [draw(i) for i in range(samples)]


def search_distributions(
    ch: BroadcastChannelSpec,
    u1_size: int,
    u2_size: int,
    samples: int,
    seed: int,
    mode: str = "random",
    grid_step: float = 0.25,
) -> SearchResult:
    """Sampled inner approximation of the union over auxiliary distributions.

    ``mode="random"`` draws ``samples`` joints uniformly from the simplex and
    input maps that are either a random function or random stochastic rows.
    ``mode="grid"`` enumerates every joint on a simplex grid with spacing
    ``grid_step`` against every deterministic map, ignoring ``samples`` and
    ``seed``. Candidates that violate the side condition are dropped.
    """
    if u1_size < 1 or u2_size < 1:
        raise ValidationError("auxiliary sizes must be >= 1")
    if samples < 0:
        raise ValidationError("samples must be >= 0")
    if mode not in ("random", "grid"):
        raise ValidationError(f"unknown search mode {mode!r}")
    if mode == "random" and samples == 0:
        return SearchResult([], ())
    cands = _candidates(ch, u1_size, u2_size, samples, seed, mode, grid_step)

    def evaluate(item):
        i, (joint, m) = item
        aux = AuxiliaryStructure(u1_size, u2_size, Pmf(joint, (u1_size, u2_size)), m)
        mi = induced_distributions(aux, ch)
        if not side_condition_holds(mi):
            return None
        return RegionSample(i, aux, mi, polygon_of(theorem2_system(mi)))

    kept = [r for r in pmap(evaluate, cands) if r is not None]
    kept.sort(key=lambda r: r.index)
    pts = [v for r in kept for v in r.polygon.vertices]
    union = tuple((float(x), float(y)) for x, y in _hull(np.array(pts))) if pts else ()
    return SearchResult(kept, union)

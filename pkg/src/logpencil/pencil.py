"""Logarithmic pencils on complements of affine hyperplane arrangements.

A pencil is stored as one parameter-affine residue matrix per hyperplane;
the connection form is ``B(s, x) = sum_H C_H(s) d(alpha_H) / alpha_H``.
Flatness is checked two independent ways: the exact residue criterion on
codimension-2 flats, and exact evaluation of ``B ^ B`` at random points.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import mpmath
import numpy as np

from .algebra import (
    Matrix,
    MultiPoly,
    ParamLinearMatrix,
    RationalFunction,
    _is_exact_scalar,
    charpoly,
    commutator,
    is_resonant_exact,
    first_nonzero,
    mat_add,
    mat_scale,
    zeros,
)

__all__ = [
    "Hyperplane",
    "Arrangement",
    "LogPencil",
    "FlatnessReport",
    "check_flatness_residue",
    "check_flatness_points",
    "curvature_witness",
    "connection_components",
    "residue_of",
    "symbolic_components",
    "resonant_hyperplanes",
]

# high-precision point oracle for pencils with irrational residues
_MP_DPS = 50
_MP_THRESHOLD = mpmath.mpf("1e-20")


def _mpf(v) -> mpmath.mpf:
    if isinstance(v, Fraction):
        return mpmath.mpf(v.numerator) / v.denominator
    return mpmath.mpf(v)


def _primitive(normal: Sequence, offset) -> tuple[tuple, object]:
    if all(isinstance(v, Fraction) for v in (*normal, offset)):
        lcm = 1
        for v in (*normal, offset):
            lcm = lcm * v.denominator // math.gcd(lcm, v.denominator)
        ints = [int(v * lcm) for v in normal]
        off = int(offset * lcm)
        g = 0
        for v in ints:
            g = math.gcd(g, v)
        g = math.gcd(g, off) if g else g
        sign = 1 if next(v for v in ints if v) > 0 else -1
        g *= sign
        return tuple(Fraction(v, g) for v in ints), Fraction(off, g)
    normal = [_mpf(v) for v in normal]
    lead = next(v for v in normal if abs(v) > mpmath.mpf(10) ** (-_MP_DPS // 2))
    scale = max(abs(v) for v in normal) * (1 if lead > 0 else -1)
    return tuple(v / scale for v in normal), _mpf(offset) / scale


@dataclass(frozen=True)
class Hyperplane:
    """Affine hyperplane ``normal . x + offset = 0``.

    Exact hyperplanes are stored with a primitive integer normal whose first
    nonzero entry is positive; rescaling does not change ``d(alpha)/alpha``.
    """

    normal: tuple
    offset: object = Fraction(0)
    label: str = ""

    def __post_init__(self):
        normal = tuple(Fraction(v) if _is_exact_scalar(v) else v for v in self.normal)
        offset = Fraction(self.offset) if _is_exact_scalar(self.offset) else self.offset
        if not normal or all(v == 0 for v in normal):
            raise ValueError("hyperplane normal must be nonzero")
        normal, offset = _primitive(normal, offset)
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "offset", offset)
        if not self.label:
            object.__setattr__(self, "label", _default_label(normal, offset))

    @property
    def exact(self) -> bool:
        return isinstance(self.offset, Fraction)

    def __call__(self, x: Sequence):
        return sum((a * v for a, v in zip(self.normal, x)), self.offset * 0) + self.offset

    def linear_part(self, d: Sequence):
        return sum((a * v for a, v in zip(self.normal, d)), self.offset * 0)

    def key(self):
        if self.exact:
            return (self.normal, self.offset)
        return tuple(round(float(v), 9) for v in (*self.normal, self.offset))


def _default_label(normal, offset) -> str:
    terms = []
    for i, a in enumerate(normal, start=1):
        if a:
            terms.append(f"{a}*x{i}" if a != 1 else f"x{i}")
    text = " + ".join(terms).replace("+ -", "- ")
    return f"{text} = {-offset}"


@dataclass(frozen=True)
class Flat:
    """Codimension-2 intersection, with the indices of hyperplanes containing it."""

    members: tuple[int, ...]


@dataclass(frozen=True)
class Arrangement:
    base_dim: int
    hyperplanes: tuple[Hyperplane, ...]

    def __post_init__(self):
        object.__setattr__(self, "hyperplanes", tuple(self.hyperplanes))
        if self.base_dim < 1:
            raise ValueError("base dimension must be at least 1")
        seen = {}
        labels = set()
        for h in self.hyperplanes:
            if len(h.normal) != self.base_dim:
                raise ValueError(f"hyperplane {h.label!r} has normal of length {len(h.normal)}")
            if h.key() in seen:
                raise ValueError(f"duplicate hyperplane: {h.label!r} and {seen[h.key()]!r}")
            if h.label in labels:
                raise ValueError(f"duplicate hyperplane label {h.label!r}")
            seen[h.key()] = h.label
            labels.add(h.label)

    @property
    def exact(self) -> bool:
        return all(h.exact for h in self.hyperplanes)

    def index(self, label: str) -> int:
        for i, h in enumerate(self.hyperplanes):
            if h.label == label:
                return i
        raise KeyError(f"unknown hyperplane label {label!r}")

    @cached_property
    def codim2_flats(self) -> tuple[Flat, ...]:
        """Codimension-2 flats via pairwise intersection, deduplicated by RREF."""
        if not self.exact:
            raise TypeError("intersection lattice needs exact hyperplanes")
        rows = [(*h.normal, h.offset) for h in self.hyperplanes]
        flats: dict[tuple, list[int]] = {}
        for i in range(len(rows)):
            for j in range(i + 1, len(rows)):
                basis = _rref([rows[i], rows[j]])
                if len(basis) < 2:
                    continue
                # parallel hyperplanes: span contains (0, ..., 0, 1), empty intersection
                if _rank([r[:-1] for r in basis]) < 2:
                    continue
                key = tuple(basis)
                if key in flats:
                    continue
                flats[key] = [k for k in range(len(rows)) if _rank([*basis, rows[k]]) == 2]
        return tuple(Flat(tuple(m)) for m in flats.values())


def _rref(rows: list[Sequence[Fraction]]) -> list[tuple[Fraction, ...]]:
    m = [list(r) for r in rows]
    out = []
    col = 0
    ncols = len(m[0]) if m else 0
    r = 0
    while r < len(m) and col < ncols:
        piv = next((i for i in range(r, len(m)) if m[i][col] != 0), None)
        if piv is None:
            col += 1
            continue
        m[r], m[piv] = m[piv], m[r]
        p = m[r][col]
        m[r] = [v / p for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][col]:
                f = m[i][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        r += 1
        col += 1
    for row in m[:r]:
        out.append(tuple(row))
    return out


def _rank(rows) -> int:
    return len(_rref(rows)) if rows else 0


@dataclass(frozen=True)
class LogPencil:
    """Pencil of logarithmic connections ``d - sum_H C_H(s) d(alpha_H)/alpha_H``."""

    arrangement: Arrangement
    fiber_dim: int
    residues: tuple[ParamLinearMatrix, ...]
    param_names: tuple[str, ...]
    coord_names: tuple[str, ...]
    name: str = "custom"
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "residues", tuple(self.residues))
        object.__setattr__(self, "param_names", tuple(self.param_names))
        object.__setattr__(self, "coord_names", tuple(self.coord_names))
        if len(self.residues) != len(self.arrangement.hyperplanes):
            raise ValueError("need exactly one residue per hyperplane")
        if len(self.coord_names) != self.arrangement.base_dim:
            raise ValueError("coord_names must match the base dimension")
        if set(self.param_names) & set(self.coord_names):
            raise ValueError("parameter and coordinate names must be disjoint")
        if len(set(self.param_names)) != len(self.param_names) or len(set(self.coord_names)) != len(self.coord_names):
            raise ValueError("duplicate symbol names")
        for h, c in zip(self.arrangement.hyperplanes, self.residues):
            if c.dim != self.fiber_dim:
                raise ValueError(f"residue at {h.label!r} is {c.dim}x{c.dim}, fiber is {self.fiber_dim}")
            if c.n_params != len(self.param_names):
                raise ValueError(f"residue at {h.label!r} has {c.n_params} parameters")

    @property
    def hyperplanes(self) -> tuple[Hyperplane, ...]:
        return self.arrangement.hyperplanes

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(h.label for h in self.hyperplanes)

    @property
    def base_dim(self) -> int:
        return self.arrangement.base_dim

    @property
    def param_count(self) -> int:
        return len(self.param_names)

    @property
    def exact(self) -> bool:
        return self.arrangement.exact and all(c.exact for c in self.residues)

    def residue_of(self, label: str) -> ParamLinearMatrix:
        return self.residues[self.arrangement.index(label)]

    def with_residue(self, label: str, residue: ParamLinearMatrix, name: str | None = None) -> "LogPencil":
        residues = list(self.residues)
        residues[self.arrangement.index(label)] = residue
        return LogPencil(self.arrangement, self.fiber_dim, tuple(residues), self.param_names,
                         self.coord_names, name or self.name, dict(self.meta))

    @cached_property
    def _numeric(self) -> tuple[np.ndarray, np.ndarray]:
        """Stacked residues as (m, N, N) constant part and (m, n, N, N) linear part."""
        consts, lins = zip(*(c.numeric_arrays() for c in self.residues)) if self.residues else ((), ())
        n, d = self.param_count, self.fiber_dim
        return (np.array(consts, dtype=complex).reshape(-1, d, d),
                np.array(lins, dtype=complex).reshape(-1, n, d, d))

    def numeric_residues(self, s: Sequence) -> np.ndarray:
        """All residues at parameter ``s`` as a complex (m, N, N) array."""
        if len(s) != self.param_count:
            raise ValueError(f"expected {self.param_count} parameters, got {len(s)}")
        const, lin = self._numeric
        if not self.param_count:
            return const.copy()
        return const + np.einsum("j,hjab->hab", np.asarray([complex(v) for v in s]), lin)

    def connection_components(self, s: Sequence, x: Sequence):
        return connection_components(self, s, x)


def residue_of(p: LogPencil, label: str) -> ParamLinearMatrix:
    return p.residue_of(label)


def connection_components(p: LogPencil, s: Sequence, x: Sequence):
    """Coordinate components ``B^(i)(s, x) = sum_H C_H(s) a_{H,i} / alpha_H(x)``.

    Exact (nested Fraction tuples) when ``p``, ``s`` and ``x`` are all exact;
    otherwise a list of complex arrays.
    """
    if len(x) != p.base_dim:
        raise ValueError(f"point has {len(x)} coordinates, base dimension is {p.base_dim}")
    if p.exact and all(_is_exact_scalar(v) for v in (*s, *x)):
        x = [Fraction(v) for v in x]
        alphas = [h(x) for h in p.hyperplanes]
        if any(a == 0 for a in alphas):
            raise ValueError("point lies on the arrangement")
        res = [c.evaluate(list(s)) for c in p.residues]
        comps = []
        for i in range(p.base_dim):
            acc = zeros(p.fiber_dim)
            for h, c, a in zip(p.hyperplanes, res, alphas):
                if h.normal[i]:
                    acc = mat_add(acc, mat_scale(c, h.normal[i] / a))
            comps.append(acc)
        return comps
    xv = np.asarray([complex(v) for v in x])
    normals = np.array([[complex(a) for a in h.normal] for h in p.hyperplanes]).reshape(-1, p.base_dim)
    offsets = np.array([complex(h.offset) for h in p.hyperplanes])
    alphas = normals @ xv + offsets
    if np.any(alphas == 0):
        raise ValueError("point lies on the arrangement")
    res = p.numeric_residues(s)
    weights = normals / alphas[:, None]
    return [np.einsum("h,hab->ab", weights[:, i], res) for i in range(p.base_dim)]


def symbolic_components(p: LogPencil, shift: tuple[int, int] | None = None) -> list[list[list[RationalFunction]]]:
    """Components ``B^(i)`` as matrices of rational functions in (params, coords).

    ``shift=(j, k)`` substitutes ``s_j -> s_j + k`` (0-based ``j``).
    """
    if not p.exact:
        raise TypeError("symbolic components need an exact pencil")
    variables = p.param_names + p.coord_names
    one = MultiPoly.constant(1, variables)
    s_polys = [MultiPoly.variable(v, variables) for v in p.param_names]
    n = p.fiber_dim
    comps = [[[RationalFunction.constant(0, variables) for _ in range(n)] for _ in range(n)]
             for _ in range(p.base_dim)]
    for h, c in zip(p.hyperplanes, p.residues):
        if shift is not None:
            c = c.shifted(shift[0], shift[1])
        alpha = MultiPoly.linear(dict(zip(p.coord_names, h.normal)), h.offset, variables)
        entries = [[one * c.constant[a][b] + sum((sp * m[a][b] for sp, m in zip(s_polys, c.linear)),
                                                 MultiPoly.constant(0, variables))
                    for b in range(n)] for a in range(n)]
        for i in range(p.base_dim):
            coeff = h.normal[i]
            if not coeff:
                continue
            for a in range(n):
                for b in range(n):
                    if not entries[a][b].is_zero():
                        comps[i][a][b] = comps[i][a][b] + RationalFunction(entries[a][b] * coeff, alpha)
    return comps


@dataclass
class FlatnessReport:
    passed: bool
    method: str
    skipped: bool = False
    flats_checked: int = 0
    flat: tuple[str, ...] | None = None
    hyperplane: str | None = None
    entry: tuple[int, int] | None = None
    monomial: str | None = None
    value: str | None = None
    note: str = ""

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "method": self.method,
            "skipped": self.skipped,
            "flats_checked": self.flats_checked,
            "witness": None if self.passed else {
                "flat": list(self.flat) if self.flat else None,
                "hyperplane": self.hyperplane,
                "entry": list(self.entry) if self.entry else None,
                "monomial": self.monomial,
                "value": self.value,
            },
            "note": self.note,
        }


def check_flatness_residue(p: LogPencil) -> FlatnessReport:
    """Integrability criterion for logarithmic forms with constant residues.

    For each codimension-2 flat L and each H containing L, the commutator
    ``[C_H(s), sum_{H' > L} C_H'(s)]`` must vanish identically in ``s``; it is
    quadratic in ``s``, so every monomial coefficient of degree <= 2 is checked.
    """
    if not p.exact:
        return FlatnessReport(True, "residue", skipped=True,
                              note="irrational residues: exact residue criterion skipped")
    flats = p.arrangement.codim2_flats
    names = p.param_names
    for flat in flats:
        total = [mat_add_all([p.residues[k].constant for k in flat.members], p.fiber_dim)]
        total += [mat_add_all([p.residues[k].linear[j] for k in flat.members], p.fiber_dim)
                  for j in range(p.param_count)]
        for k in flat.members:
            ch = [p.residues[k].constant, *p.residues[k].linear]
            for mono, pieces in _quadratic_coefficients(ch, total, names):
                acc = pieces[0]
                for extra in pieces[1:]:
                    acc = mat_add(acc, extra)
                hit = first_nonzero(acc)
                if hit is not None:
                    i, j, v = hit
                    return FlatnessReport(
                        False, "residue", flats_checked=len(flats),
                        flat=tuple(p.hyperplanes[m].label for m in flat.members),
                        hyperplane=p.hyperplanes[k].label, entry=(i, j), monomial=mono, value=str(v),
                    )
    return FlatnessReport(True, "residue", flats_checked=len(flats))


def mat_add_all(mats: list[Matrix], n: int) -> Matrix:
    acc = zeros(n)
    for m in mats:
        acc = mat_add(acc, m)
    return acc


def _quadratic_coefficients(ch: list[Matrix], total: list[Matrix], names: Sequence[str]):
    """Coefficients of ``[sum_a s_a H_a, sum_b s_b S_b]`` by monomial (s_0 := 1)."""
    labels = ["1", *names]
    n = len(ch)
    for a in range(n):
        for b in range(a, n):
            if a == b:
                pieces = [commutator(ch[a], total[a])]
                mono = "1" if a == 0 else f"{labels[a]}^2"
            else:
                pieces = [commutator(ch[a], total[b]), commutator(ch[b], total[a])]
                mono = labels[b] if a == 0 else f"{labels[a]}*{labels[b]}"
            yield mono, pieces


def _random_rational(rng: random.Random, bound: int = 10**4) -> Fraction:
    return Fraction(rng.randint(-bound, bound), rng.randint(1, bound))


def curvature_witness(p: LogPencil, trials: int = 20, seed: int = 0) -> dict | None:
    """First random point where ``B ^ B`` is nonzero, or None.

    ``dB = 0`` holds identically for logarithmic forms with constant residues,
    so the curvature reduces to the commutators ``[B^(i), B^(k)]``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = random.Random(seed)
    for trial in range(trials):
        s = [_random_rational(rng) for _ in range(p.param_count)]
        while True:
            x = [_random_rational(rng) for _ in range(p.base_dim)]
            if all(h(x) != 0 for h in p.hyperplanes):
                break
        if p.exact:
            comps = connection_components(p, s, x)
            for i in range(p.base_dim):
                for k in range(i + 1, p.base_dim):
                    hit = first_nonzero(commutator(comps[i], comps[k]))
                    if hit is not None:
                        return {"trial": trial, "s": [str(v) for v in s], "x": [str(v) for v in x],
                                "components": [i, k], "entry": [hit[0], hit[1]], "value": str(hit[2])}
        else:
            with mpmath.workdps(_MP_DPS):
                comps = _mp_components(p, s, x)
                for i in range(p.base_dim):
                    for k in range(i + 1, p.base_dim):
                        c = comps[i] * comps[k] - comps[k] * comps[i]
                        worst = max(abs(v) for v in c) if c.rows else mpmath.mpf(0)
                        if worst > _MP_THRESHOLD:
                            return {"trial": trial, "s": [str(v) for v in s], "x": [str(v) for v in x],
                                    "components": [i, k], "value": mpmath.nstr(worst, 5)}
    return None


def _mp_components(p: LogPencil, s, x):
    xs = [_mpf(v) for v in x]
    ss = [_mpf(v) for v in s]
    n = p.fiber_dim
    comps = [mpmath.zeros(n, n) for _ in range(p.base_dim)]
    for h, c in zip(p.hyperplanes, p.residues):
        alpha = sum((_mpf(a) * v for a, v in zip(h.normal, xs)), mpmath.mpf(0)) + _mpf(h.offset)
        m = mpmath.matrix([[_mpf(v) for v in row] for row in c.constant])
        for sj, mj in zip(ss, c.linear):
            m += sj * mpmath.matrix([[_mpf(v) for v in row] for row in mj])
        for i in range(p.base_dim):
            if h.normal[i]:
                comps[i] += m * (_mpf(h.normal[i]) / alpha)
    return comps


def check_flatness_points(p: LogPencil, trials: int = 20, seed: int = 0) -> bool:
    return curvature_witness(p, trials, seed) is None


# ---------------------------------------------------------------------------
# Resonance
# ---------------------------------------------------------------------------


def resonant_hyperplanes(p: LogPencil, s: Sequence, tol: float = 1e-8) -> list[str]:
    """Labels whose residue at ``s`` has two eigenvalues differing by a nonzero integer.

    Exact for rational ``s`` on exact pencils; otherwise eigenvalue
    differences within ``tol`` of a nonzero integer count.
    """
    exact = p.exact and all(_is_exact_scalar(v) for v in s)
    out = []
    if exact:
        s = [Fraction(v) for v in s]
        for h, c in zip(p.hyperplanes, p.residues):
            if is_resonant_exact(charpoly(c.evaluate(s))):
                out.append(h.label)
        return out
    res = p.numeric_residues(s)
    for h, m in zip(p.hyperplanes, res):
        ev = np.linalg.eigvals(m)
        diff = ev[:, None] - ev[None, :]
        near = np.abs(diff - np.round(diff.real)) < tol
        if np.any(near & (np.abs(np.round(diff.real)) >= 1)):
            out.append(h.label)
    return out

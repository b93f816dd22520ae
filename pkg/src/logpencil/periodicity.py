"""Shift-operator identities, periodic-monodromy invariants, q-dependence, and
eigenvalue checks for Dunkl and tensor KZ monodromy."""

from __future__ import annotations

import cmath
import math
import random
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebra import RationalFunction
from .families import RationalMatrixFunction
from .monodromy import (
    DEFAULT_RTOL,
    LineSlice,
    MonodromyRep,
    make_slice,
    monodromy_rep,
    signature,
    signature_distance,
)
from .pencil import LogPencil, resonant_hyperplanes, symbolic_components

__all__ = [
    "ShiftCheck",
    "verify_shift_exact",
    "resonant_hyperplanes",
    "PeriodicityReport",
    "test_periodic_monodromy",
    "QDependenceReport",
    "test_q_dependence",
    "integer_lattice_basis",
    "EigenCheck",
    "hecke_relation_check",
    "braiding_ratio_check",
]


# ---------------------------------------------------------------------------
# Exact shift identities
# ---------------------------------------------------------------------------


@dataclass
class ShiftCheck:
    passed: bool
    shift_index: int
    witness: dict | None = None

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> dict:
        return {"passed": self.passed, "shift_index": self.shift_index, "witness": self.witness}


def _rf_matmul(a, b, zero: RationalFunction):
    n = len(a)
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = zero
            for k in range(n):
                if a[i][k].is_zero() or b[k][j].is_zero():
                    continue
                acc = acc + a[i][k] * b[k][j]
            row.append(acc)
        out.append(row)
    return out


def verify_shift_exact(p: LogPencil, A: RationalMatrixFunction, j: int) -> ShiftCheck:
    """Check ``dA/dx_i = B^(i)(s + e_j) A - A B^(i)(s)`` identically, for every i.

    ``j`` is 1-based. Returns a falsy result carrying one nonzero defect entry
    when the identity fails.
    """
    if not 1 <= j <= p.param_count:
        raise ValueError(f"shift index must lie in 1..{p.param_count}, got {j}")
    if A.dim != p.fiber_dim:
        raise ValueError(f"operator is {A.dim}x{A.dim}, fiber dimension is {p.fiber_dim}")
    variables = p.param_names + p.coord_names
    if set(A.variables) - set(variables):
        raise ValueError(f"operator uses symbols {sorted(set(A.variables) - set(variables))} not in the pencil")
    if A.variables != variables:
        A = A.embed(variables)
    plain = symbolic_components(p)
    shifted = symbolic_components(p, shift=(j - 1, 1))
    zero = RationalFunction.constant(0, variables)
    a = [list(r) for r in A.entries]
    for i, name in enumerate(p.coord_names):
        lhs = A.partial(name).entries
        left = _rf_matmul(shifted[i], a, zero)
        right = _rf_matmul(a, plain[i], zero)
        for r in range(p.fiber_dim):
            for c in range(p.fiber_dim):
                defect = lhs[r][c] - left[r][c] + right[r][c]
                if not defect.is_zero():
                    return ShiftCheck(False, j, {"coordinate": name, "entry": [r, c], "defect": str(defect)})
    return ShiftCheck(True, j)


# ---------------------------------------------------------------------------
# Periodic monodromy
# ---------------------------------------------------------------------------


def _complex_json(z: complex) -> dict:
    return {"re": float(z.real), "im": float(z.imag)}


@dataclass
class PeriodicityReport:
    pencil: str
    s: tuple[complex, ...]
    shift: tuple[int, ...]
    distance: float
    tol: float
    resonant: list[str] = field(default_factory=list)
    word_length: int = 2
    noise: float = 0.0

    @property
    def passed(self) -> bool:
        return self.distance <= self.tol and not self.resonant

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> dict:
        return {
            "pencil": self.pencil,
            "s": [_complex_json(z) for z in self.s],
            "shift": list(self.shift),
            "word_length": self.word_length,
            "distance": self.distance,
            "tol": self.tol,
            "resonant": list(self.resonant),
            "passed": self.passed,
            "verdict": "invariants match" if self.passed else "invariants differ",
        }


def _shifted(s: Sequence, v: Sequence[int]) -> list:
    return [a + b for a, b in zip(s, v)]


def test_periodic_monodromy(p: LogPencil, s: Sequence, v: Sequence[int], L: int = 2, tol: float = 1e-6,
                            slice: LineSlice | None = None, rtol: float = DEFAULT_RTOL, seed: int = 0,
                            check_reversal: bool = False, jobs: int = 1,
                            base: MonodromyRep | None = None) -> PeriodicityReport:
    """Compare word signatures of the monodromy at ``s`` and ``s + v`` on one slice."""
    if len(v) != p.param_count or len(s) != p.param_count:
        raise ValueError("s and v must have one entry per parameter")
    v = tuple(int(x) for x in v)
    slice = slice if slice is not None else make_slice(p, seed)
    if base is None:
        base = monodromy_rep(p, s, slice, rtol, check_reversal=check_reversal, jobs=jobs)
    other = monodromy_rep(p, _shifted(s, v), slice, rtol, check_reversal=check_reversal, jobs=jobs)
    dist = signature_distance(signature(base, L), signature(other, L))
    flags = sorted(set(resonant_hyperplanes(p, s)) | set(resonant_hyperplanes(p, _shifted(s, v))))
    return PeriodicityReport(p.name, tuple(complex(x) for x in s), v, dist, tol, flags, L)


# avoid pytest collecting the public name above as a test
test_periodic_monodromy.__test__ = False


def integer_lattice_basis(vectors: Sequence[Sequence[int]], n: int) -> list[list[int]]:
    """Hermite-normal-form basis of the integer lattice spanned by ``vectors``."""
    rows = [list(map(int, v)) for v in vectors if any(v)]
    basis = []
    col = 0
    while rows and col < n:
        rows = [r for r in rows if any(r)]
        nz = [r for r in rows if r[col]]
        if not nz:
            col += 1
            continue
        # Euclid on column `col` across rows
        while len([r for r in rows if r[col]]) > 1:
            nz = sorted((r for r in rows if r[col]), key=lambda r: abs(r[col]))
            pivot = nz[0]
            for r in nz[1:]:
                q = r[col] // pivot[col]
                for k in range(n):
                    r[k] -= q * pivot[k]
            rows = [r for r in rows if any(r)]
        pivot = next(r for r in rows if r[col])
        if pivot[col] < 0:
            pivot = [-x for x in pivot]
        rows = [r for r in rows if r[col] == 0 and any(r)]
        basis.append(pivot)
        col += 1
    # reduce entries above pivots
    for i, b in enumerate(basis):
        pc = next(k for k in range(n) if b[k])
        for a in basis[:i]:
            q = a[pc] // b[pc]
            for k in range(n):
                a[k] -= q * b[k]
    return basis


@dataclass
class QDependenceReport:
    pencil: str
    s: tuple[complex, ...]
    results: list[PeriodicityReport]
    lattice: list[list[int]]
    tol: float

    @property
    def passed(self) -> bool:
        """True when every non-resonant shift matched."""
        return all(r.passed for r in self.results if not r.resonant)

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> dict:
        return {
            "pencil": self.pencil,
            "s": [_complex_json(z) for z in self.s],
            "tol": self.tol,
            "shifts": [{"shift": list(r.shift), "distance": r.distance, "passed": r.passed,
                        "resonant": list(r.resonant)} for r in self.results],
            "matched_lattice": self.lattice,
            "all_passed": self.passed,
        }


def test_q_dependence(p: LogPencil, s: Sequence, trials: int = 6, L: int = 2, tol: float = 1e-6,
                      shifts: Sequence[Sequence[int]] | None = None, seed: int = 0,
                      slice: LineSlice | None = None, rtol: float = DEFAULT_RTOL, jobs: int = 1) -> QDependenceReport:
    """Signature comparison for random integer shifts with entries in [-3, 3].

    Reports the lattice generated by the shifts whose signatures matched.
    """
    if trials < 1 and not shifts:
        raise ValueError("trials must be >= 1")
    rng = random.Random(seed)
    n = p.param_count
    if shifts is None:
        shifts = [tuple(rng.randint(-3, 3) for _ in range(n)) for _ in range(trials)]
    slice = slice if slice is not None else make_slice(p, seed)
    base = monodromy_rep(p, s, slice, rtol, check_reversal=False, jobs=jobs)
    results = [test_periodic_monodromy(p, s, v, L, tol, slice, rtol, base=base, jobs=jobs) for v in shifts]
    lattice = integer_lattice_basis([r.shift for r in results if r.passed], n)
    return QDependenceReport(p.name, tuple(complex(x) for x in s), results, lattice, tol)


test_q_dependence.__test__ = False


# ---------------------------------------------------------------------------
# Eigenvalue structure checks
# ---------------------------------------------------------------------------


@dataclass
class EigenCheck:
    passed: bool
    expected: list[complex]
    per_generator: list[dict]
    tol: float

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> dict:
        return {"passed": self.passed, "tol": self.tol,
                "expected": [_complex_json(z) for z in self.expected], "generators": self.per_generator}


def _eig(m: np.ndarray) -> np.ndarray:
    return np.linalg.eigvals(m)


def hecke_relation_check(rep: MonodromyRep, c: complex, tol: float = 1e-6) -> EigenCheck:
    """Meridians of a Dunkl pencil are full twists: eigenvalues ``{1, q^-2}``, ``q = e^{2 pi i c}``.

    Also requires ``(M - 1)(M - q^-2) = 0`` so the minimal polynomial has degree <= 2.
    """
    target = cmath.exp(-4j * math.pi * complex(c))
    expected = [1 + 0j, target]
    rows = []
    ok = True
    n = rep.dim
    eye = np.eye(n)
    for label, m in zip(rep.labels, rep.generators):
        ev = _eig(m)
        dev = float(max(min(abs(e - t) for t in expected) for e in ev))
        hit = [bool(np.any(np.abs(ev - t) <= tol)) for t in expected]
        quad = (m - eye) @ (m - target * eye)
        residual = float(np.max(np.abs(quad))) / max(1.0, float(np.max(np.abs(m))) ** 2)
        good = dev <= tol and all(hit) and residual <= tol
        ok &= good
        rows.append({"label": label, "eigenvalues": [_complex_json(complex(e)) for e in sorted(ev, key=lambda z: (round(z.real, 9), round(z.imag, 9)))],
                     "max_deviation": dev, "quadratic_residual": residual, "passed": good})
    return EigenCheck(ok, expected, rows, tol)


def _clusters(ev: np.ndarray, tol: float) -> list[tuple[complex, int]]:
    groups: list[list[complex]] = []
    for e in ev:
        for g in groups:
            if abs(g[0] - e) <= tol:
                g.append(e)
                break
        else:
            groups.append([e])
    return sorted(((complex(np.mean(g)), len(g)) for g in groups), key=lambda t: -t[1])


def braiding_ratio_check(rep: MonodromyRep, hbar: complex, tol: float = 1e-6) -> EigenCheck:
    """Each meridian has two eigenvalue clusters whose ratio (majority / minority) is ``e^{4 pi i hbar}``.

    The gap of 2 between the eigenvalues 1/2 and -3/2 of the Casimir on
    ``C^2 (x) C^2`` fixes the ratio. When ``e^{4 pi i hbar}`` is 1 a single
    cluster is expected.
    """
    ratio = cmath.exp(4j * math.pi * complex(hbar))
    degenerate = abs(ratio - 1) <= tol
    rows = []
    ok = bool(rep.generators)
    for label, m in zip(rep.labels, rep.generators):
        groups = _clusters(_eig(m), max(tol, 1e-9) * 10)
        if degenerate:
            good = len(groups) == 1
            measured = 1 + 0j
        elif len(groups) == 2:
            measured = groups[0][0] / groups[1][0]
            good = abs(measured - ratio) <= tol
        else:
            measured = complex("nan")
            good = False
        ok &= good
        rows.append({"label": label, "distinct_eigenvalues": len(groups),
                     "ratio": _complex_json(measured), "passed": good})
    return EigenCheck(ok, [ratio], rows, tol)

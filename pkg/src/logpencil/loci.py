"""Parameter scans for jumps of monodromy invariants and integer-normal hyperplane fits."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .monodromy import (
    DEFAULT_RANK_THRESHOLD,
    IntegrationError,
    LineSlice,
    commutant_dim,
    fixed_space_dim,
    make_slice,
    monodromy_rep,
    _map,
)
from .pencil import LogPencil, resonant_hyperplanes

__all__ = [
    "ScanResult",
    "HyperplaneFit",
    "scan_segment",
    "fit_hyperplanes",
    "primitive_normals",
    "fit_matches_resonance",
    "exact_point",
    "QUANTITIES",
]

QUANTITIES = ("fixed_dim", "commutant_dim")


def exact_point(values: Sequence) -> tuple[tuple[Fraction, Fraction], ...]:
    """Parse parameter coordinates into exact (re, im) Fraction pairs.

    Floats are read through their shortest decimal repr, so ``-2.5`` is exact.
    """
    out = []
    for v in values:
        if isinstance(v, tuple) and len(v) == 2:
            out.append((Fraction(v[0]), Fraction(v[1])))
        elif isinstance(v, complex):
            out.append((Fraction(repr(v.real)), Fraction(repr(v.imag))))
        elif isinstance(v, float):
            out.append((Fraction(repr(v)), Fraction(0)))
        elif isinstance(v, str):
            z = complex(v.replace("i", "j")) if ("j" in v or "i" in v) else None
            out.append((Fraction(repr(z.real)), Fraction(repr(z.imag))) if z is not None else (Fraction(v), Fraction(0)))
        else:
            out.append((Fraction(v), Fraction(0)))
    return tuple(out)


def _to_complex(pt) -> tuple[complex, ...]:
    return tuple(complex(float(re), float(im)) for re, im in pt)


@dataclass
class ScanResult:
    s_from: tuple
    s_to: tuple
    samples: int
    quantity: str
    points: list[tuple]  # exact (re, im) pairs per coordinate
    values: list[int | None]
    jumps: list[tuple]
    failures: list[dict] = field(default_factory=list)
    refined: list[tuple] = field(default_factory=list)
    param_names: tuple[str, ...] = ()

    @property
    def minimum(self) -> int | None:
        vals = [v for v in self.values if v is not None]
        return min(vals) if vals else None

    @property
    def resolution(self) -> float:
        a, b = np.array(_to_complex(self.s_from)), np.array(_to_complex(self.s_to))
        return float(np.linalg.norm(b - a)) / self.samples

    def jump_points(self, refined: bool = False) -> list[tuple[complex, ...]]:
        return [_to_complex(p) for p in (self.refined if refined and self.refined else self.jumps)]

    def is_real(self) -> bool:
        return all(im == 0 for p in self.points for _, im in p)

    def csv_rows(self) -> list[list[str]]:
        names = list(self.param_names) or [f"s{i + 1}" for i in range(len(self.s_from))]
        real = self.is_real()
        header = names if real else [f"{n}_{part}" for n in names for part in ("re", "im")]
        rows = [header + [self.quantity]]
        for p, v in zip(self.points, self.values):
            coords = [repr(float(re)) for re, _ in p] if real else \
                [repr(float(x)) for re, im in p for x in (re, im)]
            rows.append(coords + ["" if v is None else str(v)])
        return rows

    def to_dict(self) -> dict:
        def enc(p):
            return [{"re": str(re), "im": str(im)} for re, im in p]

        return {
            "from": enc(self.s_from),
            "to": enc(self.s_to),
            "samples": self.samples,
            "quantity": self.quantity,
            "minimum": self.minimum,
            "resolution": self.resolution,
            "jumps": [enc(p) for p in self.jumps],
            "refined_jumps": [enc(p) for p in self.refined],
            "failures": self.failures,
        }


def _grid(a, b, count: int) -> list[tuple]:
    out = []
    for k in range(count):
        t = Fraction(k, count - 1)
        out.append(tuple((ar + t * (br - ar), ai + t * (bi - ai)) for (ar, ai), (br, bi) in zip(a, b)))
    return out


def _measure(p: LogPencil, pts, quantity, slice, rtol, threshold, jobs):
    measure = fixed_space_dim if quantity == "fixed_dim" else commutant_dim

    def one(pt):
        try:
            rep = monodromy_rep(p, _to_complex(pt), slice, rtol, check_reversal=False)
        except (IntegrationError, ValueError) as exc:
            return None, str(exc)
        return measure(rep, threshold), None

    return _map(one, pts, jobs)


def scan_segment(p: LogPencil, s_from: Sequence, s_to: Sequence, samples: int = 51, quantity: str = "fixed_dim",
                 slice: LineSlice | None = None, rtol: float = 1e-10, seed: int = 0, refine: bool = False,
                 threshold: float = DEFAULT_RANK_THRESHOLD, jobs: int = 1) -> ScanResult:
    """Sample a monodromy invariant along a straight segment, endpoints included.

    Jumps are samples whose value exceeds the segment minimum. With ``refine``
    each jump neighbourhood is rescanned at ten times the resolution.
    """
    if samples < 8:
        raise ValueError("need at least 8 samples")
    if quantity not in QUANTITIES:
        raise ValueError(f"quantity must be one of {QUANTITIES}")
    a, b = exact_point(s_from), exact_point(s_to)
    if len(a) != p.param_count or len(b) != p.param_count:
        raise ValueError(f"segment endpoints need {p.param_count} coordinates")
    slice = slice if slice is not None else make_slice(p, seed)
    pts = _grid(a, b, samples)
    measured = _measure(p, pts, quantity, slice, rtol, threshold, jobs)
    values = [v for v, _ in measured]
    failures = [{"index": i, "error": e} for i, (_, e) in enumerate(measured) if e]
    good = [v for v in values if v is not None]
    low = min(good) if good else None
    jumps = [pt for pt, v in zip(pts, values) if v is not None and v > low]
    refined: list[tuple] = []
    if refine and jumps:
        seen = set()
        for k, (pt, v) in enumerate(zip(pts, values)):
            if v is None or v <= low:
                continue
            lo, hi = pts[max(0, k - 1)], pts[min(samples - 1, k + 1)]
            fine = _grid(lo, hi, 21)
            for q, (w, _) in zip(fine, _measure(p, fine, quantity, slice, rtol, threshold, jobs)):
                if w is not None and w > low and q not in seen:
                    seen.add(q)
                    refined.append(q)
    return ScanResult(a, b, samples, quantity, pts, values, jumps, failures, refined, p.param_names)


# ---------------------------------------------------------------------------
# Hyperplane fitting
# ---------------------------------------------------------------------------


@dataclass
class HyperplaneFit:
    normal: tuple[int, ...]
    offset: complex  # representative value in [0, 1) + i * imag
    residual: float
    support: int
    integer_shifts: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"normal": list(self.normal), "offset": {"re": self.offset.real, "im": self.offset.imag},
                "residual": self.residual, "support": self.support, "integer_shifts": self.integer_shifts}


def primitive_normals(n: int, a_max: int) -> list[tuple[int, ...]]:
    """Integer vectors with entries in [-a_max, a_max], gcd 1, first nonzero entry positive."""
    out = []
    for v in itertools.product(range(-a_max, a_max + 1), repeat=n):
        if not any(v):
            continue
        if next(x for x in v if x) < 0:
            continue
        g = 0
        for x in v:
            g = math.gcd(g, x)
        if g == 1:
            out.append(v)
    return out


def _circular(a: float, b: float) -> float:
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


def fit_hyperplanes(points: Sequence[Sequence[complex]], a_max: int = 3, tol: float = 1e-6) -> list[HyperplaneFit]:
    """Integer-normal hyperplanes ``a . s = c + N`` (N integer) through at least 3 points.

    For every primitive normal the values ``a . p`` are clustered modulo the
    integers; clusters of size >= 3 become fits.
    """
    if not 1 <= a_max <= 5:
        raise ValueError("a_max must lie in 1..5")
    pts = [np.asarray([complex(x) for x in p]) for p in points]
    if len(pts) < 3:
        return []
    n = len(pts[0])
    fits = []
    for a in primitive_normals(n, a_max):
        vals = [complex(np.dot(a, p)) for p in pts]
        used = [False] * len(vals)
        for i, v in enumerate(vals):
            if used[i]:
                continue
            members = [j for j, w in enumerate(vals)
                       if not used[j] and _circular(v.real, w.real) <= tol and abs(v.imag - w.imag) <= tol]
            if len(members) < 3:
                continue
            for j in members:
                used[j] = True
            frac = [vals[j].real - math.floor(vals[j].real + tol) for j in members]
            c_re = float(np.mean(frac))
            c_im = float(np.mean([vals[j].imag for j in members]))
            shifts = sorted({int(round(vals[j].real - c_re)) for j in members})
            residual = max(max(_circular(vals[j].real, c_re), abs(vals[j].imag - c_im)) for j in members)
            fits.append(HyperplaneFit(a, complex(c_re, c_im), residual, len(members), shifts))
    fits.sort(key=lambda f: (-f.support, f.residual, sum(abs(x) for x in f.normal), f.normal))
    return fits


def fit_matches_resonance(p: LogPencil, fit: HyperplaneFit, points: Sequence[Sequence[complex]],
                          tol: float = 1e-6, max_den: int = 10**6) -> bool:
    """True when every supporting point is exactly resonant for some residue.

    Points are rationalized (real and imaginary parts) before the exact check;
    complex points fall back to the numeric resonance test.
    """
    hits = 0
    for pt in points:
        v = complex(np.dot(fit.normal, [complex(x) for x in pt]))
        if _circular(v.real, fit.offset.real) > tol or abs(v.imag - fit.offset.imag) > tol:
            continue
        hits += 1
        if all(abs(complex(x).imag) == 0 for x in pt):
            s = [Fraction(complex(x).real).limit_denominator(max_den) for x in pt]
        else:
            s = [complex(x) for x in pt]
        if not resonant_hyperplanes(p, s):
            return False
    return hits >= 3

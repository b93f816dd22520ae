"""Numerical parallel transport along loops in a generic line slice.

A line ``x(t) = b + t d`` meets each hyperplane once, at ``t_H``; pulled back,
``B`` becomes ``sum_H C_H(s) dt / (t - t_H)``. Meridians around the ``t_H``
are transported with an adaptive Verner 6(5) pair whose step is also capped
by the distance to the nearest puncture.
"""

from __future__ import annotations

import cmath
import itertools
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .algebra import gaussian_div
from .pencil import LogPencil

__all__ = [
    "IntegrationError",
    "SliceError",
    "LineSlice",
    "Line",
    "Arc",
    "Loop",
    "MonodromyRep",
    "InvariantSignature",
    "make_slice",
    "meridian",
    "loop_around_all",
    "transport",
    "monodromy_rep",
    "signature",
    "signature_distance",
    "fixed_space_dim",
    "commutant_dim",
    "conjugate_rep",
    "local_law_check",
    "slice_through",
    "RTOL_MIN",
    "RTOL_MAX",
    "DEFAULT_RTOL",
]

RTOL_MIN = 1e-14
RTOL_MAX = 1e-6
DEFAULT_RTOL = 1e-12
DEFAULT_RANK_THRESHOLD = 1e-7

_MAX_REDRAWS = 100
_MIN_ABS_T = 1e-3
_MAX_STEPS = 200_000


class IntegrationError(RuntimeError):
    """Transport failed: step underflow or step budget exhausted."""

    def __init__(self, message: str, achieved: float | None = None):
        super().__init__(message)
        self.achieved = achieved


class SliceError(RuntimeError):
    """No generic line slice found."""


# ---------------------------------------------------------------------------
# Slices and loops
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LineSlice:
    """Line ``b + t d`` with its punctures, listed in hyperplane order."""

    basepoint: tuple[complex, ...]
    direction: tuple[complex, ...]
    punctures: tuple[tuple[complex, str], ...]
    seed: int | None = None

    @property
    def t_values(self) -> np.ndarray:
        return np.array([t for t, _ in self.punctures], dtype=complex)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for _, label in self.punctures)

    @property
    def order(self) -> tuple[int, ...]:
        """Puncture indices by increasing argument in (-pi, pi]."""
        return tuple(sorted(range(len(self.punctures)), key=lambda k: _arg(self.punctures[k][0])))

    def point(self, t: complex) -> np.ndarray:
        return np.asarray(self.basepoint) + t * np.asarray(self.direction)


def _arg(z: complex) -> float:
    a = cmath.phase(z)
    return math.pi if a == -math.pi else a


@dataclass(frozen=True)
class Line:
    start: complex
    end: complex

    def at(self, tau: float) -> complex:
        return self.start + tau * (self.end - self.start)

    def velocity(self, tau: float) -> complex:
        return self.end - self.start

    def reversed(self) -> "Line":
        return Line(self.end, self.start)

    @property
    def length(self) -> float:
        return abs(self.end - self.start)


@dataclass(frozen=True)
class Arc:
    """Circular arc ``center + radius * exp(i (theta0 + sweep * tau))``."""

    center: complex
    radius: float
    theta0: float
    sweep: float

    def at(self, tau: float) -> complex:
        return self.center + self.radius * cmath.exp(1j * (self.theta0 + self.sweep * tau))

    def velocity(self, tau: float) -> complex:
        return 1j * self.sweep * self.radius * cmath.exp(1j * (self.theta0 + self.sweep * tau))

    def reversed(self) -> "Arc":
        return Arc(self.center, self.radius, self.theta0 + self.sweep, -self.sweep)

    @property
    def length(self) -> float:
        return abs(self.sweep) * self.radius


@dataclass(frozen=True)
class Loop:
    segments: tuple
    slice: LineSlice
    label: str = ""

    def reversed(self) -> "Loop":
        return Loop(tuple(s.reversed() for s in reversed(self.segments)), self.slice, f"reverse({self.label})")

    def then(self, other: "Loop") -> "Loop":
        return Loop(self.segments + other.segments, self.slice, f"{self.label}*{other.label}")

    def clearance(self, samples: int = 64) -> float:
        """Smallest sampled distance from the loop to a puncture."""
        ts = self.slice.t_values
        if not len(ts):
            return math.inf
        best = math.inf
        for seg in self.segments:
            for tau in np.linspace(0.0, 1.0, samples):
                best = min(best, float(np.min(np.abs(seg.at(tau) - ts))))
        return best


def _gaussian(rng: random.Random) -> tuple[Fraction, Fraction]:
    return (Fraction(rng.randint(-40, 40), rng.randint(1, 12)), Fraction(rng.randint(-40, 40), rng.randint(1, 12)))


def _seg_distance(z: complex, a: complex, b: complex) -> float:
    ab = b - a
    if ab == 0:
        return abs(z - a)
    u = ((z - a) * ab.conjugate()).real / abs(ab) ** 2
    u = min(1.0, max(0.0, u))
    return abs(z - (a + u * ab))


def _punctures(p: LogPencil, b, d):
    """Exact Gaussian-rational punctures when possible, else complex floats; None if degenerate."""
    out = []
    for h in p.hyperplanes:
        if h.exact:
            num = (-(h(tuple(v[0] for v in b))), -sum((a * v[1] for a, v in zip(h.normal, b)), Fraction(0)))
            den = (sum((a * v[0] for a, v in zip(h.normal, d)), Fraction(0)),
                   sum((a * v[1] for a, v in zip(h.normal, d)), Fraction(0)))
            if den == (0, 0):
                return None
            re, im = gaussian_div(num, den)
            out.append(complex(float(re), float(im)))
        else:
            bc = [complex(float(v[0]), float(v[1])) for v in b]
            dc = [complex(float(v[0]), float(v[1])) for v in d]
            normal = [complex(a) for a in h.normal]
            den = sum(a * v for a, v in zip(normal, dc))
            if abs(den) < 1e-12:
                return None
            out.append(-(sum(a * v for a, v in zip(normal, bc)) + complex(h.offset)) / den)
    return out


def _is_generic(ts: Sequence[complex]) -> bool:
    if any(abs(t) < _MIN_ABS_T for t in ts):
        return False
    scale = max((abs(t) for t in ts), default=1.0)
    for i, j in itertools.combinations(range(len(ts)), 2):
        if abs(ts[i] - ts[j]) < 1e-6 * scale:
            return False
    # each meridian's approach ray must clear the other punctures
    for k, tk in enumerate(ts):
        for j, tj in enumerate(ts):
            if j != k and _seg_distance(tj, 0, tk) < 0.02 * min(abs(tj), abs(tk)):
                return False
    return True


def make_slice(p: LogPencil, seed: int = 0) -> LineSlice:
    """Random Gaussian-rational line, redrawn until punctures are well separated."""
    rng = random.Random(seed)
    for _ in range(_MAX_REDRAWS):
        b = [_gaussian(rng) for _ in range(p.base_dim)]
        d = [_gaussian(rng) for _ in range(p.base_dim)]
        if all(v == (0, 0) for v in d):
            continue
        ts = _punctures(p, b, d)
        if ts is None or not _is_generic(ts):
            continue
        return LineSlice(
            tuple(complex(float(v[0]), float(v[1])) for v in b),
            tuple(complex(float(v[0]), float(v[1])) for v in d),
            tuple(zip(ts, p.labels)),
            seed,
        )
    raise SliceError(f"no generic line slice after {_MAX_REDRAWS} attempts")


def slice_through(p: LogPencil, basepoint: Sequence[complex], direction: Sequence[complex]) -> LineSlice:
    """Slice with an explicit basepoint and direction (no genericity redraw)."""
    b = np.asarray(basepoint, dtype=complex)
    d = np.asarray(direction, dtype=complex)
    ts = []
    for h in p.hyperplanes:
        normal = np.array([complex(a) for a in h.normal])
        den = normal @ d
        if den == 0:
            raise SliceError(f"direction is parallel to {h.label!r}")
        ts.append(complex(-(normal @ b + complex(h.offset)) / den))
    if any(t == 0 for t in ts):
        raise SliceError("basepoint lies on the arrangement")
    return LineSlice(tuple(b), tuple(d), tuple(zip(ts, p.labels)))


def meridian_radius(slice: LineSlice, k: int) -> float:
    ts = slice.t_values
    tk = ts[k]
    others = [abs(tk - t) for j, t in enumerate(ts) if j != k]
    rho = 0.5 * min([*others, abs(tk)])
    return min(rho, 0.1 * abs(tk))


def meridian(slice: LineSlice, k: int) -> Loop:
    """Out toward puncture ``k``, once counterclockwise around it, back to t = 0."""
    if not 0 <= k < len(slice.punctures):
        raise IndexError(f"puncture index {k} out of range")
    tk = slice.punctures[k][0]
    rho = meridian_radius(slice, k)
    u = tk / abs(tk)
    near = tk - rho * u
    theta0 = cmath.phase(-u)
    segs = (Line(0j, near), Arc(tk, rho, theta0, 2 * math.pi), Line(near, 0j))
    return Loop(segs, slice, slice.punctures[k][1])


def loop_around_all(slice: LineSlice) -> Loop:
    """Big counterclockwise loop enclosing every puncture, starting along angle pi.

    Homotopic to the meridians concatenated in angle order.
    """
    ts = slice.t_values
    big = 2.0 * float(np.max(np.abs(ts))) if len(ts) else 1.0
    start = complex(-big, 0.0)
    segs = (Line(0j, start), Arc(0j, big, math.pi, 2 * math.pi), Line(start, 0j))
    return Loop(segs, slice, "infinity")


# ---------------------------------------------------------------------------
# Integrator
# ---------------------------------------------------------------------------

# Verner 6(5) "efficient" pair; stage 9 is the FSAL evaluation at the new point
_C = np.array([0.0, 9 / 50, 1 / 6, 1 / 4, 53 / 100, 3 / 5, 4 / 5, 1.0, 1.0])
_A = [
    [],
    [9 / 50],
    [29 / 324, 25 / 324],
    [1 / 16, 0, 3 / 16],
    [79129 / 250000, 0, -261237 / 250000, 19663 / 15625],
    [1336883 / 4909125, 0, -25476 / 30875, 194159 / 185250, 8225 / 78546],
    [-2459386 / 14727375, 0, 19504 / 30875, 2377474 / 13615875, -6157250 / 5773131, 902 / 735],
    [2699 / 7410, 0, -252 / 1235, -1393253 / 3993990, 236875 / 72618, -135 / 49, 15 / 22],
    [11 / 144, 0, 0, 256 / 693, 0, 125 / 504, 125 / 528, 5 / 72],
]
_B6 = np.array([11 / 144, 0, 0, 256 / 693, 0, 125 / 504, 125 / 528, 5 / 72, 0])
_B5 = np.array([28 / 477, 0, 0, 212 / 441, -312500 / 366177, 2125 / 1764, 0, -2105 / 35532, 2995 / 17766])
_E = _B6 - _B5
_ORDER = 6


class _Field:
    """``tau -> A(l(tau)) l'(tau)`` for one path segment."""

    def __init__(self, residues: np.ndarray, ts: np.ndarray, seg):
        m, n, _ = residues.shape
        self.flat = residues.reshape(m, n * n)
        self.n = n
        self.ts = ts
        self.seg = seg

    def __call__(self, tau: float) -> np.ndarray:
        z = self.seg.at(tau)
        w = self.seg.velocity(tau) / (z - self.ts)
        return (w @ self.flat).reshape(self.n, self.n)

    def clearance(self, tau: float) -> float:
        return float(np.min(np.abs(self.seg.at(tau) - self.ts))) if len(self.ts) else math.inf


def _integrate_segment(field_: _Field, y: np.ndarray, rtol: float, stats: dict) -> np.ndarray:
    speed = field_.seg.length
    if speed == 0:
        return y
    tau = 0.0
    h = min(1.0, 0.05 * field_.clearance(0.0) / speed)
    k1 = field_(0.0) @ y
    steps = 0
    while tau < 1.0:
        cap = 0.25 * field_.clearance(tau) / speed
        h = min(h, cap, 1.0 - tau)
        if h < 1e-15 * max(1.0, tau):
            raise IntegrationError(f"step size underflow at tau={tau:.6g}", stats.get("err"))
        ks = [k1]
        for i in range(1, 9):
            acc = y + h * sum(a * k for a, k in zip(_A[i], ks) if a)
            if i == 8:
                y_new = acc
            ks.append(field_(tau + _C[i] * h) @ acc)
        err_vec = h * sum(e * k for e, k in zip(_E, ks) if e)
        err = float(np.max(np.abs(err_vec)))
        scale = rtol * max(1.0, float(np.max(np.abs(y_new))))
        steps += 1
        if steps > _MAX_STEPS:
            raise IntegrationError("step budget exhausted", err / scale * rtol)
        if err <= scale:
            tau = tau + h if 1.0 - (tau + h) > 1e-14 else 1.0
            y = y_new
            k1 = ks[8]
            stats["steps"] = stats.get("steps", 0) + 1
            stats["err"] = max(stats.get("err", 0.0), err / max(1.0, float(np.max(np.abs(y_new)))))
        factor = 0.9 * (scale / err) ** (1.0 / _ORDER) if err > 0 else 5.0
        h *= min(5.0, max(0.2, factor))
    return y


def _check_rtol(rtol: float) -> None:
    if not (RTOL_MIN <= rtol <= RTOL_MAX):
        raise ValueError(f"rtol must lie in [{RTOL_MIN:g}, {RTOL_MAX:g}], got {rtol:g}")


def transport(p: LogPencil, s: Sequence[complex], loop: Loop, rtol: float = DEFAULT_RTOL,
              stats: dict | None = None) -> np.ndarray:
    """Fundamental solution at the end of ``loop`` with ``F(0) = I``."""
    _check_rtol(rtol)
    residues = p.numeric_residues(s)
    if not np.all(np.isfinite(residues)):
        raise ValueError("parameter values must be finite")
    ts = loop.slice.t_values
    stats = {} if stats is None else stats
    y = np.eye(p.fiber_dim, dtype=complex)
    if not np.any(residues):
        return y
    for seg in loop.segments:
        y = _integrate_segment(_Field(residues, ts, seg), y, rtol, stats)
    return y


# ---------------------------------------------------------------------------
# Representations and invariants
# ---------------------------------------------------------------------------


@dataclass
class MonodromyRep:
    """Slice monodromy: generator images in puncture-angle order."""

    generators: list[np.ndarray]
    labels: list[str]
    slice: LineSlice | None
    s_value: tuple[complex, ...]
    tolerance: float = 0.0
    rtol: float = DEFAULT_RTOL
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for g, label in zip(self.generators, self.labels):
            if abs(np.linalg.det(g)) <= 1e-10:
                raise ValueError(f"generator {label!r} is numerically singular")

    @property
    def dim(self) -> int:
        return self.generators[0].shape[0] if self.generators else 0


def _map(fn, items, jobs: int):
    if jobs and jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def monodromy_rep(p: LogPencil, s: Sequence[complex], slice: LineSlice | None = None, rtol: float = DEFAULT_RTOL,
                  check_reversal: bool = True, jobs: int = 1, seed: int = 0) -> MonodromyRep:
    """Transport every meridian of ``slice``.

    With ``check_reversal`` the achieved tolerance is the largest defect of
    ``T(loop) T(reverse loop) - I``; otherwise it is the integrator's error estimate.
    """
    _check_rtol(rtol)
    slice = slice if slice is not None else make_slice(p, seed)
    order = slice.order

    def one(k):
        loop = meridian(slice, k)
        stats: dict = {}
        m = transport(p, s, loop, rtol, stats)
        if check_reversal:
            back = transport(p, s, loop.reversed(), rtol)
            defect = float(np.max(np.abs(m @ back - np.eye(p.fiber_dim))))
        else:
            defect = stats.get("err", 0.0)
        return m, defect

    results = _map(one, list(order), jobs)
    return MonodromyRep(
        [m for m, _ in results],
        [slice.punctures[k][1] for k in order],
        slice,
        tuple(complex(v) for v in s),
        max((d for _, d in results), default=0.0),
        rtol,
    )


def conjugate_rep(rep: MonodromyRep, g: np.ndarray) -> MonodromyRep:
    ginv = np.linalg.inv(g)
    return MonodromyRep([g @ m @ ginv for m in rep.generators], list(rep.labels), rep.slice, rep.s_value,
                        rep.tolerance, rep.rtol, dict(rep.meta))


@dataclass
class InvariantSignature:
    """Characteristic polynomial coefficients of short positive words."""

    length: int
    words: list[tuple[int, ...]]
    coefficients: np.ndarray  # (n_words, N + 1), highest degree first

    def as_dict(self) -> dict[tuple[int, ...], np.ndarray]:
        return {w: c for w, c in zip(self.words, self.coefficients)}


def signature(rep: MonodromyRep, L: int = 2) -> InvariantSignature:
    if L not in (1, 2, 3):
        raise ValueError("word length must be 1, 2 or 3")
    m = len(rep.generators)
    words, coeffs = [], []
    for length in range(1, L + 1):
        for w in itertools.product(range(m), repeat=length):
            prod = rep.generators[w[0]]
            for i in w[1:]:
                prod = prod @ rep.generators[i]
            words.append(w)
            coeffs.append(np.poly(prod))
    n = rep.dim
    return InvariantSignature(L, words, np.array(coeffs, dtype=complex).reshape(len(words), n + 1))


def signature_distance(a: InvariantSignature, b: InvariantSignature) -> float:
    if a.words != b.words or a.coefficients.shape != b.coefficients.shape:
        raise ValueError("signatures are not comparable")
    if not a.words:
        return 0.0
    return float(np.max(np.abs(a.coefficients - b.coefficients)))


def _numerical_rank(stacked: np.ndarray, threshold: float, scale: float) -> int:
    if stacked.size == 0:
        return 0
    sv = np.linalg.svd(stacked, compute_uv=False)
    return int(np.sum(sv > threshold * max(1.0, scale)))


def fixed_space_dim(rep: MonodromyRep, threshold: float = DEFAULT_RANK_THRESHOLD) -> int:
    """Dimension of the common fixed space of the generators."""
    n = rep.dim
    if not rep.generators:
        return n
    eye = np.eye(n)
    stacked = np.vstack([g - eye for g in rep.generators])
    scale = max(float(np.linalg.norm(g, 2)) for g in rep.generators)
    return n - _numerical_rank(stacked, threshold, scale)


def commutant_dim(rep: MonodromyRep, threshold: float = DEFAULT_RANK_THRESHOLD) -> int:
    """Dimension of the space of matrices commuting with every generator."""
    n = rep.dim
    if not rep.generators:
        return n * n
    eye = np.eye(n)
    # row-major vec: vec(M X) = (M kron I) vec X, vec(X M) = (I kron M^T) vec X
    stacked = np.vstack([np.kron(g, eye) - np.kron(eye, g.T) for g in rep.generators])
    scale = max(float(np.linalg.norm(g, 2)) for g in rep.generators)
    return n * n - _numerical_rank(stacked, threshold, scale)


def local_law_check(p: LogPencil, rep: MonodromyRep, det_tol: float = 1e-8, eig_tol: float = 1e-6) -> list[dict]:
    """Compare each meridian with the exponential of its residue.

    ``det M_H = exp(2 pi i tr C_H(s))`` always; eigenvalues of ``M_H`` equal
    ``exp(2 pi i lambda)`` over eigenvalues of ``C_H(s)`` unless the residue
    is resonant, in which case the eigenvalue comparison is skipped and flagged.
    """
    from scipy.optimize import linear_sum_assignment

    from .pencil import resonant_hyperplanes

    s = list(rep.s_value)
    exact_s = _rationalize(s)
    resonant = set(resonant_hyperplanes(p, exact_s))
    residues = dict(zip(p.labels, p.numeric_residues(s)))
    rows = []
    for label, m in zip(rep.labels, rep.generators):
        c = residues[label]
        det_expected = complex(np.exp(2j * np.pi * np.trace(c)))
        det_err = abs(complex(np.linalg.det(m)) - det_expected)
        row = {"label": label, "det_error": det_err, "det_ok": det_err <= det_tol, "resonant": label in resonant}
        if label in resonant:
            row.update(eig_error=None, eig_ok=None)
        else:
            want = np.exp(2j * np.pi * np.linalg.eigvals(c))
            got = np.linalg.eigvals(m)
            cost = np.abs(want[:, None] - got[None, :])
            r, k = linear_sum_assignment(cost)
            err = float(cost[r, k].max()) if len(r) else 0.0
            row.update(eig_error=err, eig_ok=err <= eig_tol)
        rows.append(row)
    return rows


def _rationalize(s: Sequence[complex]) -> list:
    """Real parameters read as exact decimals so resonance is decided exactly."""
    out = []
    for v in s:
        z = complex(v)
        if z.imag == 0:
            out.append(Fraction(repr(z.real)))
        else:
            return [complex(x) for x in s]
    return out

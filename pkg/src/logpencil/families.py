"""Builders for concrete pencils and shift operators, plus the pencil spec format."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import jsonschema
import mpmath

from .algebra import (
    Matrix,
    ParamLinearMatrix,
    RationalFunction,
    identity,
    mat_mul,
    mat_sub,
    parse_rational,
    zeros,
)
from .pencil import Arrangement, Hyperplane, LogPencil, check_flatness_points, check_flatness_residue

__all__ = [
    "RationalMatrixFunction",
    "FamilySpec",
    "SpecError",
    "build_exshift",
    "build_exshift_shift",
    "build_verma_kz",
    "build_verma_kz_shift",
    "build_tensor_kz",
    "build_dunkl",
    "parse_family",
    "pencil_to_custom",
    "spec_from_json",
    "spec_to_json",
    "SPEC_SCHEMA",
    "omega_matrix",
    "group_action",
    "reflection_classes",
]

MAX_TENSOR_N = 8
MAX_SYMMETRIC_M = 5
MAX_DIHEDRAL_M = 12


class SpecError(ValueError):
    """Malformed or unsupported pencil specification."""


# ---------------------------------------------------------------------------
# Matrices of rational functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RationalMatrixFunction:
    """Square matrix of rational functions sharing one variable tuple."""

    entries: tuple[tuple[RationalFunction, ...], ...]
    variables: tuple[str, ...]

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.entries)
        object.__setattr__(self, "entries", rows)
        object.__setattr__(self, "variables", tuple(self.variables))
        n = len(rows)
        for row in rows:
            if len(row) != n:
                raise ValueError("matrix must be square")
            for e in row:
                if e.variables != self.variables:
                    raise ValueError("entries must share the declared variables")

    @classmethod
    def from_strings(cls, rows: Sequence[Sequence[str]], variables: Sequence[str]) -> "RationalMatrixFunction":
        from .algebra import parse_rational_function

        return cls(tuple(tuple(parse_rational_function(str(e), variables) for e in row) for row in rows),
                   tuple(variables))

    @property
    def dim(self) -> int:
        return len(self.entries)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def replace(self, i: int, j: int, value: RationalFunction) -> "RationalMatrixFunction":
        rows = [list(r) for r in self.entries]
        rows[i][j] = value
        return RationalMatrixFunction(tuple(map(tuple, rows)), self.variables)

    def embed(self, variables: Sequence[str]) -> "RationalMatrixFunction":
        return RationalMatrixFunction(tuple(tuple(e.embed(variables) for e in row) for row in self.entries),
                                      tuple(variables))

    def partial(self, name: str) -> "RationalMatrixFunction":
        return RationalMatrixFunction(tuple(tuple(e.partial(name) for e in row) for row in self.entries),
                                      self.variables)

    def evaluate(self, point: Mapping[str, object]):
        return tuple(tuple(e.evaluate(point) for e in row) for row in self.entries)

    def det(self) -> RationalFunction:
        """Determinant by Gaussian elimination over the function field."""
        m = [list(r) for r in self.entries]
        n = self.dim
        result = RationalFunction.constant(1, self.variables)
        for col in range(n):
            piv = next((r for r in range(col, n) if not m[r][col].is_zero()), None)
            if piv is None:
                return RationalFunction.constant(0, self.variables)
            if piv != col:
                m[col], m[piv] = m[piv], m[col]
                result = -result
            p = m[col][col]
            result = result * p
            for r in range(col + 1, n):
                if m[r][col].is_zero():
                    continue
                f = m[r][col] / p
                m[r] = [a - f * b for a, b in zip(m[r], m[col])]
        return result

    def __str__(self) -> str:
        return "[" + ", ".join("[" + ", ".join(str(e) for e in row) + "]" for row in self.entries) + "]"


def _rf(expr: str, variables: Sequence[str]) -> RationalFunction:
    from .algebra import parse_rational_function

    return parse_rational_function(expr, variables)


# ---------------------------------------------------------------------------
# Builtin pencils
# ---------------------------------------------------------------------------


def _unit(n: int, i: int, j: int) -> Matrix:
    rows = [[Fraction(0)] * n for _ in range(n)]
    rows[i][j] = Fraction(1)
    return tuple(map(tuple, rows))


def _combine(n: int, terms: Sequence[tuple[object, int, int]]) -> Matrix:
    rows = [[Fraction(0)] * n for _ in range(n)]
    for c, i, j in terms:
        rows[i][j] += Fraction(c)
    return tuple(map(tuple, rows))


def _diagonal(r: int, i: int, j: int) -> Hyperplane:
    normal = [0] * r
    normal[i], normal[j] = 1, -1
    return Hyperplane(tuple(normal), 0, f"x{i + 1}=x{j + 1}")


def build_exshift() -> LogPencil:
    """Rank-2 pencil on C^x with residue [[s, 1], [0, 0]] at x = 0."""
    residue = ParamLinearMatrix(2, _unit(2, 0, 1), (_unit(2, 0, 0),))
    arr = Arrangement(1, (Hyperplane((1,), 0, "x=0"),))
    return LogPencil(arr, 2, (residue,), ("s",), ("x",), name="exshift", meta={"family": "exshift"})


def build_exshift_shift() -> RationalMatrixFunction:
    return RationalMatrixFunction.from_strings([["x", "x/s - 1/(s+1)"], ["0", "1"]], ("s", "x"))


def verma_residue(r: int, i: int, j: int) -> ParamLinearMatrix:
    """``C_ij(s) = s_i (E_ji - E_jj) + s_j (E_ij - E_ii)`` (0-based i, j)."""
    lin = {i: _combine(r, [(1, j, i), (-1, j, j)]), j: _combine(r, [(1, i, j), (-1, i, i)])}
    return ParamLinearMatrix.from_terms(r, r, None, lin)


def build_verma_kz(r: int) -> LogPencil:
    if not isinstance(r, int) or r < 2:
        raise SpecError("verma_kz needs an integer r >= 2")
    pairs = list(itertools.combinations(range(r), 2))
    arr = Arrangement(r, tuple(_diagonal(r, i, j) for i, j in pairs))
    residues = tuple(verma_residue(r, i, j) for i, j in pairs)
    return LogPencil(arr, r, residues, tuple(f"s{i + 1}" for i in range(r)),
                     tuple(f"x{i + 1}" for i in range(r)), name=f"verma_kz({r})",
                     meta={"family": "verma_kz", "r": r})


def build_verma_kz_shift(r: int, k: int) -> RationalMatrixFunction:
    """``A_k^0 = sum_{i != k} [(s_k+1)(E_ii - E_ik) + s_i(E_kk - E_ki)] / (x_i - x_k)``, 1-based k."""
    if not isinstance(r, int) or r < 2:
        raise SpecError("verma_kz needs an integer r >= 2")
    if not 1 <= k <= r:
        raise ValueError(f"k must lie in 1..{r}, got {k}")
    variables = tuple(f"s{i + 1}" for i in range(r)) + tuple(f"x{i + 1}" for i in range(r))
    zero = RationalFunction.constant(0, variables)
    rows = [[zero] * r for _ in range(r)]
    kk = k - 1
    sk1 = _rf(f"s{k} + 1", variables)
    for i in range(r):
        if i == kk:
            continue
        inv = _rf(f"1/(x{i + 1} - x{k})", variables)
        si = RationalFunction.variable(f"s{i + 1}", variables)
        a = sk1 * inv
        b = si * inv
        rows[i][i] = rows[i][i] + a
        rows[i][kk] = rows[i][kk] - a
        rows[kk][kk] = rows[kk][kk] + b
        rows[kk][i] = rows[kk][i] - b
    return RationalMatrixFunction(tuple(map(tuple, rows)), variables)


def omega_matrix(n: int, i: int, j: int) -> Matrix:
    """``P_ij - I/2`` on (C^2)^{(x) n}; slot 0 is the most significant bit."""
    dim = 2**n
    bi, bj = n - 1 - i, n - 1 - j
    rows = [[Fraction(0)] * dim for _ in range(dim)]
    for b in range(dim):
        u, v = (b >> bi) & 1, (b >> bj) & 1
        swapped = b & ~((1 << bi) | (1 << bj)) | (v << bi) | (u << bj)
        rows[swapped][b] += 1
        rows[b][b] -= Fraction(1, 2)
    return tuple(map(tuple, rows))


def build_tensor_kz(n: int) -> LogPencil:
    if not isinstance(n, int) or not 2 <= n <= MAX_TENSOR_N:
        raise SpecError(f"tensor_kz needs an integer 2 <= n <= {MAX_TENSOR_N}")
    pairs = list(itertools.combinations(range(n), 2))
    arr = Arrangement(n, tuple(_diagonal(n, i, j) for i, j in pairs))
    dim = 2**n
    residues = tuple(ParamLinearMatrix(dim, zeros(dim), (omega_matrix(n, i, j),)) for i, j in pairs)
    return LogPencil(arr, dim, residues, ("hbar",), tuple(f"x{i + 1}" for i in range(n)),
                     name=f"tensor_kz({n})", meta={"family": "tensor_kz", "n": n})


# ---------------------------------------------------------------------------
# Coxeter groups for the Dunkl connection
# ---------------------------------------------------------------------------


@dataclass
class _Reflection:
    label: str
    element: object  # abstract group element
    cls: int


@dataclass
class _CoxeterData:
    name: str
    rank: int
    elements: list  # abstract elements, identity first
    compose: object  # (a, b) -> a*b
    reflection_matrix: object  # element -> rank x rank matrix
    reflections: list[_Reflection] = field(default_factory=list)
    n_classes: int = 1


def _symmetric(m: int) -> _CoxeterData:
    elements = list(itertools.permutations(range(m)))

    def compose(a, b):
        return tuple(a[b[k]] for k in range(m))

    def refl_matrix(perm):
        # basis b_k = e_k - e_{k+1}; perm sends e_a to e_perm[a]
        rows = [[Fraction(0)] * (m - 1) for _ in range(m - 1)]
        for k in range(m - 1):
            a, b = perm[k], perm[k + 1]
            lo, hi, sign = (a, b, 1) if a < b else (b, a, -1)
            for t in range(lo, hi):
                rows[t][k] += sign
        return tuple(map(tuple, rows))

    refls = []
    for i, j in itertools.combinations(range(m), 2):
        perm = list(range(m))
        perm[i], perm[j] = j, i
        refls.append(_Reflection(f"({i + 1} {j + 1})", tuple(perm), 0))
    return _CoxeterData(f"S{m}", m - 1, elements, compose, refl_matrix, refls, 1)


_CARTAN_OFFDIAG = {2: (0, 0), 3: (-1, -1), 4: (-1, -2), 6: (-1, -3)}


def _dihedral(m: int) -> _CoxeterData:
    # elements (k, f) stand for r^k s1^f with r = s1 s2
    elements = [(k, f) for f in (0, 1) for k in range(m)]

    def compose(a, b):
        k1, f1 = a
        k2, f2 = b
        return ((k1 + (-k2 if f1 else k2)) % m, f1 ^ f2)

    if m in _CARTAN_OFFDIAG:
        k12, k21 = (Fraction(v) for v in _CARTAN_OFFDIAG[m])
        two = Fraction(2)
    else:
        c = -2 * mpmath.cos(mpmath.pi / m)
        k12 = k21 = c
        two = mpmath.mpf(2)
    cartan = ((two, k12), (k21, two))
    one, nil = two / 2, two * 0
    eye = ((one, nil), (nil, one))

    def simple(i):
        # s_i = I - K[:, i] e_i^T
        col = (cartan[0][i], cartan[1][i])
        return tuple(tuple(eye[a][b] - (col[a] if b == i else nil) for b in range(2)) for a in range(2))

    s1, s2 = simple(0), simple(1)
    r = mat_mul(s1, s2)
    powers = [eye]
    for _ in range(m - 1):
        powers.append(mat_mul(powers[-1], r))

    exact = m in _CARTAN_OFFDIAG

    def refl_matrix(el):
        k, f = el
        out = mat_mul(powers[k], s1) if f else powers[k]
        if exact:
            return out
        return tuple(tuple(mpmath.mpf(v.numerator) / v.denominator if isinstance(v, Fraction) else v
                           for v in row) for row in out)

    refls = []
    even = m % 2 == 0
    for k in range(m):
        refls.append(_Reflection("s1" if k == 0 else f"r^{k} s1", (k, 1), (k % 2) if even else 0))
    return _CoxeterData(f"I2({m})", 2, elements, compose, refl_matrix, refls, 2 if even else 1)


def _parse_group(group: str) -> _CoxeterData:
    g = str(group).replace(" ", "").replace("_", "")
    try:
        if g.upper().startswith("S"):
            m = int(g[1:])
            if not 2 <= m <= MAX_SYMMETRIC_M:
                raise SpecError(f"symmetric group S{m} outside supported range 2..{MAX_SYMMETRIC_M}")
            return _symmetric(m)
        if g.upper().startswith("I2(") and g.endswith(")"):
            m = int(g[3:-1])
            if not 2 <= m <= MAX_DIHEDRAL_M:
                raise SpecError(f"dihedral group I2({m}) outside supported range 2..{MAX_DIHEDRAL_M}")
            return _dihedral(m)
    except ValueError as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(f"unsupported group {group!r}") from exc
    raise SpecError(f"unsupported group {group!r}; expected S<m> or I2(<m>)")


def _regular_matrix(data: _CoxeterData, element) -> Matrix:
    index = {e: i for i, e in enumerate(data.elements)}
    n = len(data.elements)
    rows = [[Fraction(0)] * n for _ in range(n)]
    for i, h in enumerate(data.elements):
        rows[index[data.compose(element, h)]][i] = Fraction(1)
    return tuple(map(tuple, rows))


def _root_normal(refl: Matrix) -> tuple:
    diff = mat_sub(refl, identity(len(refl))) if all(isinstance(v, Fraction) for row in refl for v in row) \
        else tuple(tuple(refl[a][b] - (1 if a == b else 0) for b in range(len(refl))) for a in range(len(refl)))
    best = max(diff, key=lambda row: max(float(abs(v)) for v in row))
    return tuple(best)


def build_dunkl(group: str, rep: str = "reflection") -> LogPencil:
    """``d - sum_w c_{class(w)} (rho(w) - 1) d(alpha_w)/alpha_w`` over reflections w."""
    data = _parse_group(group)
    if rep not in ("reflection", "regular"):
        raise SpecError(f"unsupported representation {rep!r}; expected 'reflection' or 'regular'")
    hyperplanes, residues = [], []
    for refl in data.reflections:
        base = data.reflection_matrix(refl.element)
        hyperplanes.append(Hyperplane(_root_normal(base), 0, refl.label))
        fiber = base if rep == "reflection" else _regular_matrix(data, refl.element)
        n = len(fiber)
        if all(isinstance(v, Fraction) for row in fiber for v in row):
            coeff = mat_sub(fiber, identity(n))
        else:
            coeff = tuple(tuple(fiber[a][b] - (1 if a == b else 0) for b in range(n)) for a in range(n))
        zero = coeff[0][0] * 0
        nil = tuple(tuple(zero for _ in range(n)) for _ in range(n))
        lin = tuple(coeff if k == refl.cls else nil for k in range(data.n_classes))
        residues.append(ParamLinearMatrix(n, nil, lin))
    params = ("c",) if data.n_classes == 1 else ("c1", "c2")
    coords = tuple(f"y{i + 1}" for i in range(data.rank))
    arr = Arrangement(data.rank, tuple(hyperplanes))
    meta = {"family": "dunkl", "group": data.name, "rep": rep, "coxeter": data}
    return LogPencil(arr, residues[0].dim, tuple(residues), params, coords,
                     name=f"dunkl({data.name},{rep})", meta=meta)


def group_action(p: LogPencil):
    """Yield ``(base matrix, fiber matrix)`` for every element of a Dunkl pencil's group."""
    data = p.meta.get("coxeter")
    if data is None:
        raise ValueError("not a Dunkl pencil")
    for e in data.elements:
        base = data.reflection_matrix(e)
        yield base, base if p.meta["rep"] == "reflection" else _regular_matrix(data, e)


def reflection_classes(p: LogPencil) -> list[int]:
    """Parameter index (reflection class) of each hyperplane of a Dunkl pencil."""
    return [r.cls for r in p.meta["coxeter"].reflections]


# ---------------------------------------------------------------------------
# Spec files
# ---------------------------------------------------------------------------

_RATIONAL = {"type": "string", "pattern": r"^\s*[-+]?\d+(\s*/\s*\d+)?\s*$"}
_RMATRIX = {"type": "array", "items": {"type": "array", "items": _RATIONAL}}

SPEC_SCHEMA = {
    "type": "object",
    "oneOf": [
        {
            "required": ["family"],
            "properties": {
                "family": {"enum": ["exshift", "verma_kz", "tensor_kz", "dunkl"]},
                "params": {"type": "object"},
            },
            "additionalProperties": False,
        },
        {
            "required": ["custom"],
            "properties": {
                "custom": {
                    "type": "object",
                    "required": ["base_dim", "fiber_dim", "param_names", "coord_names", "hyperplanes"],
                    "properties": {
                        "name": {"type": "string"},
                        "base_dim": {"type": "integer", "minimum": 1},
                        "fiber_dim": {"type": "integer", "minimum": 1},
                        "param_names": {"type": "array", "items": {"type": "string", "pattern": r"^[A-Za-z_]\w*$"}},
                        "coord_names": {"type": "array", "items": {"type": "string", "pattern": r"^[A-Za-z_]\w*$"}},
                        "hyperplanes": {
                            "type": "array",
                            "items": {
                                "type": "object",
                                "required": ["normal", "residue"],
                                "properties": {
                                    "normal": {"type": "array", "items": _RATIONAL},
                                    "offset": _RATIONAL,
                                    "label": {"type": "string"},
                                    "residue": {
                                        "type": "object",
                                        "properties": {
                                            "constant": _RMATRIX,
                                            "linear": {"type": "object", "additionalProperties": _RMATRIX},
                                        },
                                        "additionalProperties": False,
                                    },
                                },
                                "additionalProperties": False,
                            },
                        },
                    },
                    "additionalProperties": False,
                }
            },
            "additionalProperties": False,
        },
    ],
}


@dataclass(frozen=True)
class FamilySpec:
    """In-memory pencil spec: a builtin family with size parameters, or a custom pencil."""

    family: str
    params: Mapping[str, object] = field(default_factory=dict)
    custom: Mapping[str, object] | None = None


def spec_from_json(doc: Mapping) -> FamilySpec:
    try:
        jsonschema.validate(doc, SPEC_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise SpecError(f"invalid pencil spec: {exc.message}") from exc
    if "custom" in doc:
        return FamilySpec("custom", {}, doc["custom"])
    return FamilySpec(doc["family"], dict(doc.get("params", {})))


def spec_to_json(spec: FamilySpec) -> dict:
    if spec.family == "custom":
        return {"custom": dict(spec.custom)}
    return {"family": spec.family, "params": dict(spec.params)}


def _matrix_from_strings(rows, n: int, where: str) -> Matrix:
    if len(rows) != n or any(len(r) != n for r in rows):
        raise SpecError(f"{where}: expected a {n}x{n} matrix")
    return tuple(tuple(parse_rational(v) for v in row) for row in rows)


def _build_custom(c: Mapping) -> LogPencil:
    r, n = c["base_dim"], c["fiber_dim"]
    names = tuple(c["param_names"])
    hyperplanes, residues = [], []
    for idx, h in enumerate(c["hyperplanes"]):
        label = h.get("label", "")
        where = f"hyperplane {label or idx}"
        if len(h["normal"]) != r:
            raise SpecError(f"{where}: normal has {len(h['normal'])} entries, base_dim is {r}")
        unknown = set(h["residue"].get("linear", {})) - set(names)
        if unknown:
            raise SpecError(f"{where}: residue uses undeclared parameters {sorted(unknown)}")
        try:
            hyperplanes.append(Hyperplane(tuple(parse_rational(v) for v in h["normal"]),
                                          parse_rational(h.get("offset", "0")), label))
        except ValueError as exc:
            raise SpecError(f"{where}: {exc}") from exc
        const = h["residue"].get("constant")
        const = _matrix_from_strings(const, n, where) if const is not None else zeros(n)
        lin = h["residue"].get("linear", {})
        residues.append(ParamLinearMatrix(n, const, tuple(
            _matrix_from_strings(lin[p], n, where) if p in lin else zeros(n) for p in names)))
    try:
        arr = Arrangement(r, tuple(hyperplanes))
        return LogPencil(arr, n, tuple(residues), names, tuple(c["coord_names"]),
                         name=c.get("name", "custom"), meta={"family": "custom"})
    except ValueError as exc:
        raise SpecError(str(exc)) from exc


def parse_family(spec: FamilySpec | Mapping, check_flat: bool = True) -> LogPencil:
    """Build the pencil a spec describes.

    Custom pencils are additionally required to pass both flatness checks
    unless ``check_flat`` is False.
    """
    if isinstance(spec, Mapping):
        spec = spec_from_json(spec)
    params = dict(spec.params)

    def take(key, default=None):
        if key not in params and default is None:
            raise SpecError(f"{spec.family} needs parameter {key!r}")
        return params.pop(key, default)

    if spec.family == "exshift":
        p = build_exshift()
    elif spec.family == "verma_kz":
        p = build_verma_kz(take("r"))
    elif spec.family == "tensor_kz":
        p = build_tensor_kz(take("n"))
    elif spec.family == "dunkl":
        p = build_dunkl(take("group"), take("rep", "reflection"))
    elif spec.family == "custom":
        p = _build_custom(spec.custom)
        if check_flat:
            res = check_flatness_residue(p)
            if not res.passed or not check_flatness_points(p):
                raise SpecError("custom pencil is not flat")
    else:
        raise SpecError(f"unknown family {spec.family!r}")
    if params:
        raise SpecError(f"unexpected parameters for {spec.family}: {sorted(params)}")
    return p


def pencil_to_custom(p: LogPencil) -> dict:
    """Serialize an exact pencil into the custom spec format."""
    if not p.exact:
        raise TypeError("only exact pencils serialize to the custom format")

    def mat(m):
        return [[str(v) for v in row] for row in m]

    hyperplanes = []
    for h, c in zip(p.hyperplanes, p.residues):
        residue = {"constant": mat(c.constant),
                   "linear": {name: mat(m) for name, m in zip(p.param_names, c.linear)}}
        hyperplanes.append({"normal": [str(v) for v in h.normal], "offset": str(h.offset),
                            "label": h.label, "residue": residue})
    return {"custom": {"name": p.name, "base_dim": p.base_dim, "fiber_dim": p.fiber_dim,
                       "param_names": list(p.param_names), "coord_names": list(p.coord_names),
                       "hyperplanes": hyperplanes}}

"""Exact arithmetic: multivariate polynomials and rational functions over Q,
parameter-affine matrices, and a handful of dense exact matrix helpers.

Rationals are :class:`fractions.Fraction`. Polynomials use a sparse map from
exponent tuples to coefficients; rational functions keep their denominator
as a product of normalized factors so that sums over simple poles stay small.
Equality of rational functions is always decided by cross-multiplication.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational as _RationalABC
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "MultiPoly",
    "RationalFunction",
    "ParamLinearMatrix",
    "rf_arith",
    "rf_partial",
    "plm_eval",
    "plm_eigen_exact",
    "parse_rational",
    "parse_rational_function",
    "charpoly",
    "integer_gaps",
    "is_resonant_exact",
]

Exponent = tuple[int, ...]


def parse_rational(value) -> Fraction:
    """Parse ``"p/q"``, integers, or Fractions into a Fraction.

    Floats are rejected on purpose; rationals travel as strings.
    """
    if isinstance(value, bool):
        raise TypeError("bool is not a rational")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational: {value!r}") from exc
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


def _is_exact_scalar(x) -> bool:
    return isinstance(x, _RationalABC) and not isinstance(x, bool)


# ---------------------------------------------------------------------------
# Multivariate polynomials
# ---------------------------------------------------------------------------


class MultiPoly:
    """Sparse polynomial over Q in an ordered tuple of named variables.

    Immutable. Binary operations require identical variable tuples; use
    :meth:`embed` to move a polynomial into a larger ring.
    """

    __slots__ = ("variables", "terms", "_hash")

    def __init__(self, variables: Sequence[str], terms: Mapping[Exponent, object] | None = None):
        variables = tuple(variables)
        if len(set(variables)) != len(variables):
            raise ValueError(f"duplicate variable names in {variables}")
        clean: dict[Exponent, Fraction] = {}
        for exp, coeff in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != len(variables):
                raise ValueError(f"exponent {exp} does not match {len(variables)} variables")
            if any(e < 0 for e in exp):
                raise ValueError(f"negative exponent in {exp}")
            c = Fraction(coeff)
            if c:
                clean[exp] = clean.get(exp, Fraction(0)) + c
                if not clean[exp]:
                    del clean[exp]
        self.variables = variables
        self.terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, variables: tuple[str, ...], terms: dict[Exponent, Fraction]) -> "MultiPoly":
        obj = cls.__new__(cls)
        obj.variables = variables
        obj.terms = terms
        obj._hash = None
        return obj

    @classmethod
    def constant(cls, value, variables: Sequence[str]) -> "MultiPoly":
        variables = tuple(variables)
        value = Fraction(value)
        terms = {(0,) * len(variables): value} if value else {}
        return cls._raw(variables, terms)

    @classmethod
    def variable(cls, name: str, variables: Sequence[str]) -> "MultiPoly":
        variables = tuple(variables)
        if name not in variables:
            raise ValueError(f"unknown symbol {name!r}; declared {variables}")
        exp = tuple(1 if v == name else 0 for v in variables)
        return cls._raw(variables, {exp: Fraction(1)})

    @classmethod
    def linear(cls, coeffs: Mapping[str, object], constant, variables: Sequence[str]) -> "MultiPoly":
        """``sum coeffs[v] * v + constant``."""
        variables = tuple(variables)
        terms: dict[Exponent, Fraction] = {}
        for name, c in coeffs.items():
            c = Fraction(c)
            if c:
                idx = variables.index(name)
                terms[tuple(1 if k == idx else 0 for k in range(len(variables)))] = c
        constant = Fraction(constant)
        if constant:
            terms[(0,) * len(variables)] = constant
        return cls._raw(variables, terms)

    # -- basic queries -----------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and not any(next(iter(self.terms))))

    def constant_value(self) -> Fraction:
        return self.terms.get((0,) * len(self.variables), Fraction(0))

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def degree_in(self, name: str) -> int:
        idx = self.variables.index(name)
        return max((e[idx] for e in self.terms), default=-1)

    def depends_on(self, name: str) -> bool:
        idx = self.variables.index(name)
        return any(e[idx] for e in self.terms)

    def leading(self) -> tuple[Exponent, Fraction]:
        """Leading term in lexicographic order."""
        exp = max(self.terms)
        return exp, self.terms[exp]

    def content(self) -> Fraction:
        """Positive rational c with self/c having coprime integer coefficients."""
        if not self.terms:
            return Fraction(0)
        num = 0
        den = 1
        for c in self.terms.values():
            num = math.gcd(num, c.numerator)
            den = den * c.denominator // math.gcd(den, c.denominator)
        return Fraction(num, den)

    # -- arithmetic --------------------------------------------------------

    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.variables != self.variables:
                raise ValueError(f"variable mismatch: {self.variables} vs {other.variables}")
            return other
        if _is_exact_scalar(other):
            return MultiPoly.constant(other, self.variables)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not other.terms:
            return self
        terms = dict(self.terms)
        for e, c in other.terms.items():
            v = terms.get(e)
            if v is None:
                terms[e] = c
            else:
                v = v + c
                if v:
                    terms[e] = v
                else:
                    del terms[e]
        return MultiPoly._raw(self.variables, terms)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly._raw(self.variables, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if _is_exact_scalar(other):
            c = Fraction(other)
            if not c:
                return MultiPoly._raw(self.variables, {})
            return MultiPoly._raw(self.variables, {e: v * c for e, v in self.terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms: dict[Exponent, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                v = terms.get(e)
                terms[e] = c1 * c2 if v is None else v + c1 * c2
        return MultiPoly._raw(self.variables, {e: c for e, c in terms.items() if c})

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers")
        result = MultiPoly.constant(1, self.variables)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, MultiPoly):
            return self.variables == other.variables and self.terms == other.terms
        if _is_exact_scalar(other):
            return self.is_constant() and self.constant_value() == other
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.variables, frozenset(self.terms.items())))
        return self._hash

    def partial(self, name: str) -> "MultiPoly":
        if name not in self.variables:
            raise ValueError(f"unknown symbol {name!r}; declared {self.variables}")
        idx = self.variables.index(name)
        terms = {}
        for e, c in self.terms.items():
            if e[idx]:
                ne = e[:idx] + (e[idx] - 1,) + e[idx + 1:]
                terms[ne] = c * e[idx]
        return MultiPoly._raw(self.variables, terms)

    def divide_exact(self, other: "MultiPoly") -> "MultiPoly | None":
        """Quotient if ``other`` divides ``self`` exactly, else None."""
        other = self._coerce(other)
        if other.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        lead_e, lead_c = other.leading()
        rem = dict(self.terms)
        quot: dict[Exponent, Fraction] = {}
        while rem:
            e = max(rem)
            if any(a < b for a, b in zip(e, lead_e)):
                return None
            qe = tuple(a - b for a, b in zip(e, lead_e))
            qc = rem[e] / lead_c
            quot[qe] = qc
            for oe, oc in other.terms.items():
                te = tuple(a + b for a, b in zip(qe, oe))
                v = rem.get(te, Fraction(0)) - qc * oc
                if v:
                    rem[te] = v
                else:
                    rem.pop(te, None)
        return MultiPoly._raw(self.variables, quot)

    def evaluate(self, point):
        """Evaluate at a mapping ``{name: value}`` or a sequence in variable order."""
        if isinstance(point, Mapping):
            try:
                vals = [point[v] for v in self.variables]
            except KeyError as exc:
                raise ValueError(f"missing value for {exc.args[0]!r}") from None
        else:
            vals = list(point)
            if len(vals) != len(self.variables):
                raise ValueError("point has wrong length")
        total = 0
        for e, c in self.terms.items():
            term = c
            for v, k in zip(vals, e):
                if k:
                    term = term * v**k
            total = total + term
        return total

    def embed(self, variables: Sequence[str]) -> "MultiPoly":
        variables = tuple(variables)
        if variables == self.variables:
            return self
        missing = set(self.variables) - set(variables)
        if missing:
            raise ValueError(f"cannot embed: symbols {sorted(missing)} absent from target")
        where = [variables.index(v) for v in self.variables]
        terms = {}
        for e, c in self.terms.items():
            ne = [0] * len(variables)
            for k, pos in zip(e, where):
                ne[pos] = k
            terms[tuple(ne)] = c
        return MultiPoly._raw(variables, terms)

    def __repr__(self) -> str:
        return f"MultiPoly({self})"

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e in sorted(self.terms, reverse=True):
            c = self.terms[e]
            mono = "*".join(
                v if k == 1 else f"{v}^{k}" for v, k in zip(self.variables, e) if k
            )
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"({c})*{mono}" if c.denominator != 1 else f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")


def _normalize_factor(f: MultiPoly) -> tuple[Fraction, MultiPoly]:
    """Split f = scale * g with g primitive over Z and positive leading coefficient."""
    c = f.content()
    if f.leading()[1] < 0:
        c = -c
    return c, f * (1 / c)


# ---------------------------------------------------------------------------
# Rational functions
# ---------------------------------------------------------------------------


class RationalFunction:
    """Quotient ``num / den`` of polynomials over Q.

    The denominator is stored factored as ``prod(f**e)`` with each ``f``
    primitive; numerator and denominator are reduced by trial division of
    those factors. Two instances compare equal iff ``a.num*b.den == b.num*a.den``.
    """

    __slots__ = ("num", "factors")

    def __init__(self, num: MultiPoly, den: MultiPoly | None = None):
        if den is None:
            den = MultiPoly.constant(1, num.variables)
        if num.variables != den.variables:
            raise ValueError("numerator and denominator live in different rings")
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        factors: dict[MultiPoly, int] = {}
        if den.is_constant():
            num = num * (1 / den.constant_value())
        else:
            scale, g = _normalize_factor(den)
            num = num * (1 / scale)
            factors[g] = 1
        self.num = num
        self.factors = factors
        self._reduce()

    @classmethod
    def _raw(cls, num: MultiPoly, factors: dict[MultiPoly, int]) -> "RationalFunction":
        obj = cls.__new__(cls)
        obj.num = num
        obj.factors = {f: e for f, e in factors.items() if e}
        obj._reduce()
        return obj

    @classmethod
    def constant(cls, value, variables: Sequence[str]) -> "RationalFunction":
        return cls._raw(MultiPoly.constant(value, variables), {})

    @classmethod
    def variable(cls, name: str, variables: Sequence[str]) -> "RationalFunction":
        return cls._raw(MultiPoly.variable(name, variables), {})

    def _reduce(self) -> None:
        if self.num.is_zero():
            self.factors = {}
            return
        num = self.num
        for f in list(self.factors):
            e = self.factors[f]
            while e:
                q = num.divide_exact(f)
                if q is None:
                    break
                num = q
                e -= 1
            if e:
                self.factors[f] = e
            else:
                del self.factors[f]
        self.num = num

    @property
    def variables(self) -> tuple[str, ...]:
        return self.num.variables

    @property
    def den(self) -> MultiPoly:
        out = MultiPoly.constant(1, self.variables)
        for f, e in self.factors.items():
            out = out * f**e
        return out

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_polynomial(self) -> bool:
        return not self.factors

    def _coerce(self, other) -> "RationalFunction":
        if isinstance(other, RationalFunction):
            if other.variables != self.variables:
                raise ValueError(f"variable mismatch: {self.variables} vs {other.variables}")
            return other
        if isinstance(other, MultiPoly):
            if other.variables != self.variables:
                raise ValueError(f"variable mismatch: {self.variables} vs {other.variables}")
            return RationalFunction._raw(other, {})
        if _is_exact_scalar(other):
            return RationalFunction.constant(other, self.variables)
        return NotImplemented

    @staticmethod
    def _cofactor(factors: Mapping[MultiPoly, int], target: Mapping[MultiPoly, int], variables) -> MultiPoly:
        out = MultiPoly.constant(1, variables)
        for f, e in target.items():
            k = e - factors.get(f, 0)
            if k:
                out = out * f**k
        return out

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        if self.factors == other.factors:
            return RationalFunction._raw(self.num + other.num, dict(self.factors))
        lcm = dict(self.factors)
        for f, e in other.factors.items():
            lcm[f] = max(lcm.get(f, 0), e)
        num = (self.num * self._cofactor(self.factors, lcm, self.variables)
               + other.num * self._cofactor(other.factors, lcm, self.variables))
        return RationalFunction._raw(num, lcm)

    __radd__ = __add__

    def __neg__(self):
        return RationalFunction._raw(-self.num, dict(self.factors))

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.is_zero() or other.is_zero():
            return RationalFunction.constant(0, self.variables)
        factors = dict(self.factors)
        for f, e in other.factors.items():
            factors[f] = factors.get(f, 0) + e
        return RationalFunction._raw(self.num * other.num, factors)

    __rmul__ = __mul__

    def inverse(self) -> "RationalFunction":
        if self.is_zero():
            raise ZeroDivisionError("division by the zero rational function")
        num = self._cofactor({}, self.factors, self.variables)
        rest = self.num
        factors: dict[MultiPoly, int] = {}
        # peel known factors off the old numerator before it becomes a denominator
        for f in self.factors:
            while True:
                q = rest.divide_exact(f)
                if q is None:
                    break
                rest = q
                factors[f] = factors.get(f, 0) + 1
        if rest.is_constant():
            num = num * (1 / rest.constant_value())
        else:
            scale, g = _normalize_factor(rest)
            num = num * (1 / scale)
            factors[g] = factors.get(g, 0) + 1
        return RationalFunction._raw(num, factors)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise ValueError("only integer powers")
        if k < 0:
            return self.inverse() ** (-k)
        return RationalFunction._raw(self.num**k, {f: e * k for f, e in self.factors.items()})

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return (self.num * other.den - other.num * self.den).is_zero()

    __hash__ = None  # equality is by cross-multiplication, no canonical hash

    def partial(self, name: str) -> "RationalFunction":
        if name not in self.variables:
            raise ValueError(f"unknown symbol {name!r}; declared {self.variables}")
        moving = [f for f in self.factors if f.depends_on(name)]
        if not moving:
            return RationalFunction._raw(self.num.partial(name), dict(self.factors))
        one = MultiPoly.constant(1, self.variables)
        prod_all = one
        for f in moving:
            prod_all = prod_all * f
        num = self.num.partial(name) * prod_all
        for f in moving:
            rest = one
            for g in moving:
                if g is not f:
                    rest = rest * g
            num = num - self.num * f.partial(name) * rest * self.factors[f]
        factors = dict(self.factors)
        for f in moving:
            factors[f] += 1
        return RationalFunction._raw(num, factors)

    def evaluate(self, point):
        d = 1
        for f, e in self.factors.items():
            d = d * f.evaluate(point) ** e
        if d == 0:
            raise ZeroDivisionError("rational function evaluated at a pole")
        return self.num.evaluate(point) / d

    def embed(self, variables: Sequence[str]) -> "RationalFunction":
        return RationalFunction._raw(
            self.num.embed(variables), {f.embed(variables): e for f, e in self.factors.items()}
        )

    def __repr__(self) -> str:
        return f"RationalFunction({self})"

    def __str__(self) -> str:
        if not self.factors:
            return str(self.num)
        den = " * ".join(f"({f})" + (f"^{e}" if e > 1 else "") for f, e in self.factors.items())
        return f"({self.num}) / ({den})"


def rf_arith(a: RationalFunction, b: RationalFunction, op: str) -> RationalFunction:
    """Exact field operation ``op`` in {"add", "sub", "mul", "div"}."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown operation {op!r}")


def rf_partial(f: RationalFunction, v: str) -> RationalFunction:
    return f.partial(v)


_BINOPS = {ast.Add: "add", ast.Sub: "sub", ast.Mult: "mul", ast.Div: "div"}


def parse_rational_function(expr: str, variables: Sequence[str]) -> RationalFunction:
    """Parse an arithmetic expression such as ``"x/s - 1/(s+1)"``.

    Supports ``+ - * /``, integer powers (``**`` or ``^``), integer and
    decimal literals (read exactly), and the declared symbols.
    """
    variables = tuple(variables)
    try:
        tree = ast.parse(expr.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse expression {expr!r}") from exc

    def walk(node) -> RationalFunction:
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.BinOp):
            if isinstance(node.op, ast.Pow):
                exp = node.right
                sign = 1
                if isinstance(exp, ast.UnaryOp) and isinstance(exp.op, ast.USub):
                    sign, exp = -1, exp.operand
                if not (isinstance(exp, ast.Constant) and isinstance(exp.value, int)):
                    raise ValueError("exponents must be integer literals")
                return walk(node.left) ** (sign * exp.value)
            op = _BINOPS.get(type(node.op))
            if op is None:
                raise ValueError(f"unsupported operator in {expr!r}")
            return rf_arith(walk(node.left), walk(node.right), op)
        if isinstance(node, ast.UnaryOp):
            if isinstance(node.op, ast.USub):
                return -walk(node.operand)
            if isinstance(node.op, ast.UAdd):
                return walk(node.operand)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            text = ast.get_source_segment(expr.replace("^", "**"), node) or repr(node.value)
            return RationalFunction.constant(Fraction(text), variables)
        if isinstance(node, ast.Name):
            if node.id not in variables:
                raise ValueError(f"unknown symbol {node.id!r}; declared {variables}")
            return RationalFunction.variable(node.id, variables)
        raise ValueError(f"unsupported syntax in {expr!r}")

    return walk(tree)


# ---------------------------------------------------------------------------
# Dense exact matrices (nested tuples of Fractions)
# ---------------------------------------------------------------------------

Matrix = tuple[tuple, ...]


def zeros(n: int) -> Matrix:
    return tuple((Fraction(0),) * n for _ in range(n))


def identity(n: int) -> Matrix:
    return tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))


def as_matrix(rows) -> Matrix:
    return tuple(tuple(parse_rational(v) if isinstance(v, str) else v for v in row) for row in rows)


def mat_add(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def mat_sub(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(x - y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def mat_scale(a: Matrix, c) -> Matrix:
    return tuple(tuple(x * c for x in row) for row in a)


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    """Product that skips zero entries; residues here are mostly sparse."""
    n = len(b[0]) if b else 0
    b_rows = [[(j, v) for j, v in enumerate(row) if v] for row in b]
    out = []
    for row in a:
        acc = [0] * n
        for k, x in enumerate(row):
            if x:
                for j, v in b_rows[k]:
                    acc[j] += x * v
        out.append(tuple(Fraction(v) if type(v) is int else v for v in acc))
    return tuple(out)


def commutator(a: Matrix, b: Matrix) -> Matrix:
    return mat_sub(mat_mul(a, b), mat_mul(b, a))


def first_nonzero(a: Matrix):
    for i, row in enumerate(a):
        for j, v in enumerate(row):
            if v:
                return i, j, v
    return None


def is_zero_matrix(a: Matrix) -> bool:
    return first_nonzero(a) is None


# ---------------------------------------------------------------------------
# Univariate polynomials over Q (coefficient lists, highest degree first)
# ---------------------------------------------------------------------------


def _trim(p: list) -> list:
    i = 0
    while i < len(p) - 1 and p[i] == 0:
        i += 1
    return p[i:]


def _poly_rem(a: list, b: list) -> list:
    a = list(a)
    while len(a) >= len(b) and any(a):
        q = a[0] / b[0]
        for i in range(len(b)):
            a[i] -= q * b[i]
        a.pop(0)
    return _trim(a) if a else [Fraction(0)]


def poly_gcd(a: Sequence, b: Sequence) -> list:
    """Monic gcd of two univariate polynomials over Q."""
    a = _trim([Fraction(x) for x in a])
    b = _trim([Fraction(x) for x in b])
    while any(b):
        a, b = b, _poly_rem(a, b)
    if not any(a):
        return [Fraction(0)]
    return [x / a[0] for x in a]


def poly_shift(p: Sequence, k) -> list:
    """Coefficients of p(t + k) (Horner-style Taylor shift)."""
    out = [Fraction(0)]
    for c in p:
        # out = out * (t + k) + c
        nxt = [Fraction(0)] * (len(out) + 1)
        for i, v in enumerate(out):
            nxt[i] += v
            nxt[i + 1] += v * k
        nxt[-1] += c
        out = nxt
    return _trim(out)


def poly_derivative(p: Sequence) -> list:
    n = len(p) - 1
    if n <= 0:
        return [Fraction(0)]
    return [c * (n - i) for i, c in enumerate(p[:-1])]


def poly_div_exact(a: Sequence, b: Sequence) -> list:
    a = [Fraction(x) for x in a]
    out = []
    while len(a) >= len(b):
        q = a[0] / b[0]
        out.append(q)
        for i in range(len(b)):
            a[i] -= q * b[i]
        a.pop(0)
    return out or [Fraction(0)]


def charpoly(m: Matrix) -> list[Fraction]:
    """Characteristic polynomial det(tI - m), highest degree first.

    Hessenberg reduction followed by the standard recurrence; O(N^3) exact.
    """
    n = len(m)
    h = [list(row) for row in m]
    for col in range(1, n - 1):
        piv = next((i for i in range(col, n) if h[i][col - 1] != 0), None)
        if piv is None:
            continue
        if piv != col:
            h[piv], h[col] = h[col], h[piv]
            for row in h:
                row[piv], row[col] = row[col], row[piv]
        pv = h[col][col - 1]
        for j in range(col + 1, n):
            u = h[j][col - 1] / pv
            if u:
                rj, rc = h[j], h[col]
                for k in range(n):
                    rj[k] -= u * rc[k]
                for row in h:
                    row[col] += u * row[j]
    # p[k] lists low -> high degree
    polys: list[list] = [[Fraction(1)]]
    for k in range(n):
        prev = polys[k]
        nxt = [Fraction(0)] + list(prev)
        for i, c in enumerate(prev):
            nxt[i] -= h[k][k] * c
        prod = Fraction(1)
        for i in range(k - 1, -1, -1):
            prod *= h[i + 1][i]
            if not prod:
                break
            coef = h[i][k] * prod
            if coef:
                for d, c in enumerate(polys[i]):
                    nxt[d] -= coef * c
        polys.append(nxt)
    return list(reversed(polys[n]))


def _root_bound(p: Sequence[Fraction]) -> Fraction:
    """Fujiwara-style bound on |root| for a monic polynomial (highest first)."""
    n = len(p) - 1
    best = 0
    for k in range(1, n + 1):
        c = abs(p[k])
        if c:
            # smallest integer r with r**k >= c
            r = 1 if c <= 1 else max(1, int(math.exp((math.log(c.numerator) - math.log(c.denominator)) / k)))
            while Fraction(r) ** k < c:
                r += 1
            best = max(best, r)
    return Fraction(2 * best)


def integer_gaps(p: Sequence[Fraction]) -> set[int]:
    """Non-negative integers k such that two roots of ``p`` differ by k.

    ``0`` is included iff ``p`` has a repeated root. Exact over Q.
    """
    p = [Fraction(x) for x in p]
    p = [c / p[0] for c in p]
    gaps: set[int] = set()
    dp = poly_derivative(p)
    g = poly_gcd(p, dp)
    if len(g) > 1:
        gaps.add(0)
        p = poly_div_exact(p, g)
    if len(p) <= 2:
        return gaps
    bound = int(2 * _root_bound(p)) + 1
    for k in range(1, bound + 1):
        if len(poly_gcd(p, poly_shift(p, k))) > 1:
            gaps.add(k)
    return gaps


def is_resonant_exact(p: Sequence[Fraction]) -> bool:
    return any(k > 0 for k in integer_gaps(p))


# ---------------------------------------------------------------------------
# Parameter-affine matrices
# ---------------------------------------------------------------------------


def _freeze(rows) -> Matrix:
    return tuple(tuple(rows[i][j] for j in range(len(rows[i]))) for i in range(len(rows)))


@dataclass(frozen=True)
class ParamLinearMatrix:
    """Square matrix ``constant + sum_j s_j * linear[j]``.

    Entries are Fractions. A few dihedral groups have irrational
    realizations; for those the entries are mpmath floats and
    :attr:`exact` is False.
    """

    dim: int
    constant: Matrix
    linear: tuple[Matrix, ...]

    def __post_init__(self):
        object.__setattr__(self, "constant", _freeze(self.constant))
        object.__setattr__(self, "linear", tuple(_freeze(m) for m in self.linear))
        for m in (self.constant, *self.linear):
            if len(m) != self.dim or any(len(row) != self.dim for row in m):
                raise ValueError(f"expected {self.dim}x{self.dim} matrices")

    @classmethod
    def from_terms(cls, dim: int, n_params: int, constant=None, linear: Mapping[int, Matrix] | None = None):
        linear = linear or {}
        return cls(
            dim,
            constant if constant is not None else zeros(dim),
            tuple(linear.get(j, zeros(dim)) for j in range(n_params)),
        )

    @property
    def n_params(self) -> int:
        return len(self.linear)

    @property
    def exact(self) -> bool:
        return all(isinstance(v, Fraction) for m in (self.constant, *self.linear) for row in m for v in row)

    def evaluate(self, s: Sequence):
        """Exact nested-tuple result for exact ``s``; complex ndarray otherwise."""
        if len(s) != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {len(s)}")
        if self.exact and all(_is_exact_scalar(v) for v in s):
            out = self.constant
            for sj, mj in zip(s, self.linear):
                if sj:
                    out = mat_add(out, mat_scale(mj, Fraction(sj)))
            return out
        return self.evaluate_numeric(s)

    def evaluate_generic(self, s: Sequence) -> Matrix:
        """Entrywise ``M0 + sum s_j M_j`` in whatever scalar type ``s`` carries."""
        if len(s) != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {len(s)}")
        out = [list(row) for row in self.constant]
        for sj, mj in zip(s, self.linear):
            for i in range(self.dim):
                row = mj[i]
                for j in range(self.dim):
                    if row[j]:
                        out[i][j] = out[i][j] + sj * row[j]
        return _freeze(out)

    def numeric_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        m0 = np.array([[complex(v) for v in row] for row in self.constant], dtype=complex)
        lin = np.array(
            [[[complex(v) for v in row] for row in m] for m in self.linear], dtype=complex
        ).reshape(self.n_params, self.dim, self.dim)
        return m0, lin

    def evaluate_numeric(self, s: Sequence) -> np.ndarray:
        if len(s) != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {len(s)}")
        m0, lin = self.numeric_arrays()
        if not self.n_params:
            return m0
        return m0 + np.tensordot(np.asarray([complex(v) for v in s]), lin, axes=1)

    def shifted(self, j: int, amount=1) -> "ParamLinearMatrix":
        """The matrix function ``s -> self(s + amount * e_j)`` (0-based j)."""
        return ParamLinearMatrix(
            self.dim, mat_add(self.constant, mat_scale(self.linear[j], amount)), self.linear
        )

    def trace(self) -> "ParamLinearMatrix":
        """Trace as a 1x1 affine form."""
        tr = lambda m: sum((m[i][i] for i in range(self.dim)), Fraction(0))
        return ParamLinearMatrix(1, ((tr(self.constant),),), tuple(((tr(m),),) for m in self.linear))

    def monomial_coefficients(self) -> Iterable[tuple[int | None, Matrix]]:
        yield None, self.constant
        yield from enumerate(self.linear)


def plm_eval(m: ParamLinearMatrix, s: Sequence):
    return m.evaluate(s)


def plm_eigen_exact(m: ParamLinearMatrix, s: Sequence) -> list[Fraction]:
    """Exact characteristic polynomial of ``m(s)``, highest degree first."""
    if not all(_is_exact_scalar(v) for v in s):
        raise TypeError("exact characteristic polynomial needs rational parameters")
    if not m.exact:
        raise TypeError("matrix has inexact entries")
    return charpoly(m.evaluate([Fraction(v) for v in s]))


def gaussian_div(a: tuple[Fraction, Fraction], b: tuple[Fraction, Fraction]) -> tuple[Fraction, Fraction]:
    """(a_re + i a_im) / (b_re + i b_im) over Q(i)."""
    ar, ai = a
    br, bi = b
    d = br * br + bi * bi
    if not d:
        raise ZeroDivisionError("division by zero in Q(i)")
    return (ar * br + ai * bi) / d, (ai * br - ar * bi) / d



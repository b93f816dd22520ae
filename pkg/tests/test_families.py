import json
import random
from fractions import Fraction as F
from pathlib import Path

import numpy as np
import pytest
import sympy

from logpencil.families import (
    SpecError,
    build_dunkl,
    build_exshift_shift,
    build_tensor_kz,
    build_verma_kz,
    group_action,
    omega_matrix,
    parse_family,
    pencil_to_custom,
    reflection_classes,
    spec_from_json,
    spec_to_json,
    verma_residue,
)
from logpencil.pencil import connection_components

FIXTURES = Path(__file__).parent / "fixtures"


def _np(m):
    return np.array([[complex(v) for v in row] for row in m])


@pytest.mark.parametrize("r", [2, 3, 4])
def test_verma_components_match_kz_ode(r):
    """Rederive the coordinate components from the scalar ODE for I_1..I_r."""
    xs = sympy.symbols(f"x1:{r + 1}")
    ss = sympy.symbols(f"s1:{r + 1}")
    rng = random.Random(r)
    sval = {v: sympy.Rational(rng.randint(-9, 9), rng.randint(1, 9)) for v in ss}
    xval = {v: sympy.Rational(k * 3 + rng.randint(0, 2), rng.randint(1, 4)) for k, v in enumerate(xs)}
    comps = connection_components(build_verma_kz(r), [F(str(sval[v])) for v in ss], [F(str(xval[v])) for v in xs])
    for i in range(r):
        ode = sympy.zeros(r, r)
        for j in range(r):
            if j == i:
                continue
            w = 1 / (xs[i] - xs[j])
            # d I_j / d x_i = s_i (I_i - I_j) / (x_i - x_j)
            ode[j, i] += ss[i] * w
            ode[j, j] -= ss[i] * w
            # d I_i / d x_i = -sum_j s_j (I_i - I_j) / (x_i - x_j)
            ode[i, i] -= ss[j] * w
            ode[i, j] += ss[j] * w
        want = ode.subs({**sval, **xval})
        got = sympy.Matrix([[sympy.Rational(str(v)) for v in row] for row in comps[i]])
        assert got == want


@pytest.mark.parametrize("r", [2, 3, 5])
def test_verma_residues_kill_ones_and_s(r):
    rng = random.Random(r)
    s = [F(rng.randint(-9, 9), rng.randint(1, 9)) for _ in range(r)]
    for i in range(r):
        for j in range(i + 1, r):
            c = verma_residue(r, i, j).evaluate(s)
            assert all(sum(row) == 0 for row in c)
            assert all(sum(s[a] * c[a][b] for a in range(r)) == 0 for b in range(r))


def test_omega_from_sl2_generators():
    e = np.array([[0, 1], [0, 0]])
    f = np.array([[0, 0], [1, 0]])
    h = np.array([[1, 0], [0, -1]])
    eye = np.eye(2)

    def at(n, slot, m):
        out = np.ones((1, 1))
        for k in range(n):
            out = np.kron(out, m if k == slot else eye)
        return out

    for n in (2, 3):
        for i in range(n):
            for j in range(i + 1, n):
                casimir = (at(n, i, e) @ at(n, j, f) + at(n, i, f) @ at(n, j, e)
                           + 0.5 * at(n, i, h) @ at(n, j, h))
                assert np.array_equal(_np(omega_matrix(n, i, j)).real, casimir)


def test_tensor_residues_commute_with_diagonal_sl2():
    n = 3
    e = np.array([[0, 1], [0, 0]])
    total = sum(np.kron(np.kron(*(e if k == slot else np.eye(2) for k in range(2))), e if slot == 2 else np.eye(2))
                for slot in range(n))
    p = build_tensor_kz(n)
    for c in p.numeric_residues([1.0]):
        assert np.allclose(c @ total, total @ c)


@pytest.mark.parametrize("group", ["S3", "S4", "I2(3)", "I2(4)", "I2(5)", "I2(6)"])
def test_dunkl_residue_eigenvalues(group):
    p = build_dunkl(group)
    c = [0.3, -0.7][: p.param_count]
    for res, cls in zip(p.numeric_residues(c), reflection_classes(p)):
        ev = np.sort_complex(np.linalg.eigvals(res))
        want = np.sort_complex(np.array([-2 * c[cls]] + [0] * (p.fiber_dim - 1), dtype=complex))
        assert np.allclose(ev, want, atol=1e-12)


@pytest.mark.parametrize("group, hyperplanes, classes", [
    ("S3", 3, [3]), ("S4", 6, [6]), ("I2(4)", 4, [2, 2]), ("I2(6)", 6, [3, 3]), ("I2(5)", 5, [5]),
])
def test_dunkl_reflection_classes(group, hyperplanes, classes):
    p = build_dunkl(group)
    cls = reflection_classes(p)
    assert len(p.hyperplanes) == hyperplanes
    assert [cls.count(k) for k in range(len(classes))] == classes


@pytest.mark.parametrize("group, rep", [("S3", "reflection"), ("I2(4)", "reflection"), ("S3", "regular")])
def test_dunkl_connection_is_equivariant(group, rep):
    """B(g x)(g v) = rho(g) B(x)(v) rho(g)^-1 for every group element."""
    p = build_dunkl(group, rep)
    c = [0.3, -0.45][: p.param_count]
    x = np.array([0.37, -1.21, 2.05][: p.base_dim])
    v = np.array([0.5, 0.25, -1.0][: p.base_dim])
    bx = sum(vi * m for vi, m in zip(v, connection_components(p, c, list(x))))
    count = 0
    for base, fiber in group_action(p):
        g, rho = _np(base), _np(fiber)
        gx = g @ x
        bgx = sum(wi * m for wi, m in zip(g @ v, connection_components(p, c, list(gx))))
        assert np.allclose(bgx, rho @ bx @ np.linalg.inv(rho), atol=1e-10)
        count += 1
    assert count == {"S3": 6, "I2(4)": 8}[group]


def test_regular_rep_dimension():
    assert build_dunkl("S3", "regular").fiber_dim == 6


def test_exshift_shift_operator_form():
    a = build_exshift_shift()
    assert a.dim == 2
    assert str(a[1, 1]) == "1" and a[1, 0].is_zero()
    assert a.det() == a[0, 0]
    assert a.evaluate({"s": F(1), "x": F(4)}) == ((4, F(7, 2)), (0, 1))


@pytest.mark.parametrize("doc, name", [
    ({"family": "exshift"}, "exshift"),
    ({"family": "verma_kz", "params": {"r": 3}}, "verma_kz(3)"),
    ({"family": "tensor_kz", "params": {"n": 2}}, "tensor_kz(2)"),
    ({"family": "dunkl", "params": {"group": "I2(4)"}}, "dunkl(I2(4),reflection)"),
    ({"family": "dunkl", "params": {"group": "S3", "rep": "regular"}}, "dunkl(S3,regular)"),
])
def test_parse_family_builtin(doc, name):
    p = parse_family(doc)
    assert p.name == name
    assert spec_to_json(spec_from_json(doc)) == {"family": doc["family"], "params": doc.get("params", {})}


@pytest.mark.parametrize("doc", [
    {"family": "verma_kz"},
    {"family": "verma_kz", "params": {"r": 1}},
    {"family": "tensor_kz", "params": {"n": 9}},
    {"family": "dunkl", "params": {"group": "E8"}},
    {"family": "dunkl", "params": {"group": "S3", "rep": "spin"}},
    {"family": "exshift", "params": {"extra": 1}},
    {"family": "nope"},
    {"custom": {"base_dim": 1}},
])
def test_parse_family_rejects(doc):
    with pytest.raises(SpecError):
        parse_family(doc)


def test_custom_round_trip():
    p = build_verma_kz(3)
    doc = pencil_to_custom(p)
    q = parse_family(json.loads(json.dumps(doc)))
    assert q.labels == p.labels and q.residues == p.residues
    assert spec_to_json(spec_from_json(doc)) == doc


def test_custom_fixture_matches_builtin():
    q = parse_family(json.loads((FIXTURES / "verma_kz3_custom.json").read_text()))
    assert q.residues == build_verma_kz(3).residues


def test_non_flat_custom_rejected():
    doc = json.loads((FIXTURES / "perturbed_verma_kz3.json").read_text())
    with pytest.raises(SpecError, match="not flat"):
        parse_family(doc)


def test_custom_rejects_undeclared_parameter():
    doc = pencil_to_custom(build_verma_kz(2))
    doc["custom"]["hyperplanes"][0]["residue"]["linear"]["t"] = [["0", "0"], ["0", "0"]]
    with pytest.raises(SpecError, match="undeclared"):
        parse_family(doc)

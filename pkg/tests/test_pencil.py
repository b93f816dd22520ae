import json
from fractions import Fraction as F
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logpencil.algebra import mat_add, mat_scale, mat_sub
from logpencil.families import build_dunkl, build_exshift, build_tensor_kz, build_verma_kz, parse_family
from logpencil.pencil import (
    Arrangement,
    Hyperplane,
    check_flatness_points,
    check_flatness_residue,
    connection_components,
    curvature_witness,
    resonant_hyperplanes,
)

FIXTURES = Path(__file__).parent / "fixtures"

fractions = st.fractions(min_value=-5, max_value=5, max_denominator=7)


def test_hyperplane_is_normalized():
    h = Hyperplane((F(-2), F(4)), F(6))
    assert h.normal == (1, -2) and h.offset == -3
    assert Hyperplane((F(1, 2), F(1, 3)), 0).normal == (3, 2)


def test_zero_normal_rejected():
    with pytest.raises(ValueError):
        Hyperplane((0, 0), 1)


def test_duplicate_hyperplanes_rejected():
    with pytest.raises(ValueError, match="duplicate"):
        Arrangement(2, (Hyperplane((1, -1), 0, "a"), Hyperplane((-2, 2), 0, "b")))
    with pytest.raises(ValueError, match="label"):
        Arrangement(2, (Hyperplane((1, 0), 0, "a"), Hyperplane((0, 1), 0, "a")))


def test_codim2_flats_of_braid_arrangement():
    assert [f.members for f in build_verma_kz(3).arrangement.codim2_flats] == [(0, 1, 2)]
    sizes = sorted(len(f.members) for f in build_verma_kz(4).arrangement.codim2_flats)
    assert sizes == [2, 2, 2, 3, 3, 3, 3]


def test_parallel_hyperplanes_do_not_meet():
    arr = Arrangement(2, (Hyperplane((1, 0), 0, "a"), Hyperplane((1, 0), -1, "b")))
    assert arr.codim2_flats == ()


@pytest.mark.parametrize("build", [build_exshift, lambda: build_verma_kz(3), lambda: build_tensor_kz(3),
                                   lambda: build_dunkl("S3"), lambda: build_dunkl("I2(5)")])
def test_builtin_families_are_flat(build):
    p = build()
    res = check_flatness_residue(p)
    assert res.passed
    assert check_flatness_points(p, 10, seed=3)


def test_inexact_residue_check_is_skipped():
    res = check_flatness_residue(build_dunkl("I2(5)"))
    assert res.skipped and res.passed


def test_perturbed_fixture_fails_with_witness():
    doc = json.loads((FIXTURES / "perturbed_verma_kz3.json").read_text())
    p = parse_family(doc, check_flat=False)
    res = check_flatness_residue(p)
    assert not res.passed
    assert set(res.flat) == {"x1=x2", "x1=x3", "x2=x3"}
    assert res.to_dict()["witness"]["hyperplane"] is not None
    w = curvature_witness(p, 20, seed=0)
    assert w is not None and w["value"] != "0"


def test_exshift_components_closed_form():
    p = build_exshift()
    (b,) = connection_components(p, [F(3)], [F(2)])
    assert b == ((F(3, 2), F(1, 2)), (0, 0))


def test_point_on_arrangement_rejected():
    with pytest.raises(ValueError):
        connection_components(build_verma_kz(2), [F(1), F(1)], [F(1), F(1)])


def test_numeric_and_exact_components_agree():
    p = build_verma_kz(3)
    s, x = [F(1, 3), F(-2, 5), F(3, 7)], [F(1), F(-2), F(5, 2)]
    exact = connection_components(p, s, x)
    numeric = connection_components(p, [float(v) for v in s], [float(v) for v in x])
    for e, n in zip(exact, numeric):
        assert np.allclose(np.array(e, dtype=float), n, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.lists(fractions, min_size=3, max_size=3), st.lists(fractions, min_size=3, max_size=3),
       st.lists(fractions, min_size=3, max_size=3))
def test_components_are_affine_in_parameters(s, t, x):
    p = build_verma_kz(3)
    if len(set(x)) < 3:
        return
    st_sum = [a + b for a, b in zip(s, t)]
    lhs = connection_components(p, st_sum, x)
    zero = connection_components(p, [F(0)] * 3, x)
    a, b = connection_components(p, s, x), connection_components(p, t, x)
    for i in range(3):
        assert mat_add(lhs[i], zero[i]) == mat_add(a[i], b[i])


@settings(max_examples=30, deadline=None)
@given(st.lists(fractions, min_size=2, max_size=2), fractions, fractions.filter(lambda v: v != 0))
def test_residue_is_limit_of_alpha_times_form(s, base, eps):
    """alpha_H * B^(i) tends to a_{H,i} C_H as the point approaches H."""
    p = build_verma_kz(2)
    c = p.residues[0].evaluate(s)
    prev = None
    for k in range(1, 5):
        e = eps / 10**k
        x = [base + e, base]
        b1 = connection_components(p, s, x)[0]
        err = max(abs(v) for row in mat_sub(mat_scale(b1, e), c) for v in row)
        if prev is not None:
            assert err <= prev
        prev = err
    assert prev == 0  # only one hyperplane, so the product is the residue exactly


def test_resonance_detection():
    p = build_exshift()
    assert resonant_hyperplanes(p, [F(2)]) == ["x=0"]
    assert resonant_hyperplanes(p, [F(0)]) == []
    assert resonant_hyperplanes(p, [F(1, 2)]) == []
    assert resonant_hyperplanes(p, [-3.0 + 0j]) == ["x=0"]

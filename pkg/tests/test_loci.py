from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logpencil.families import build_exshift, build_verma_kz
from logpencil.loci import (
    exact_point,
    fit_hyperplanes,
    fit_matches_resonance,
    primitive_normals,
    scan_segment,
)
from logpencil.monodromy import slice_through


@pytest.fixture(scope="module")
def exshift_scan():
    p = build_exshift()
    return scan_segment(p, [-2.5], [2.5], samples=51, slice=slice_through(p, [1], [1]))


def test_exshift_fixed_dim_jumps_at_nonzero_integers(exshift_scan):
    # s = 0 gives a unipotent Jordan block, so the fixed space stays one-dimensional there
    assert sorted(p[0].real for p in exshift_scan.jump_points()) == [-2, -1, 1, 2]
    assert exshift_scan.minimum == 1
    assert exshift_scan.resolution == pytest.approx(5 / 51)
    assert exshift_scan.points[25] == ((0, 0),)


def test_exshift_fit(exshift_scan):
    pts = exshift_scan.jump_points()
    fits = fit_hyperplanes(pts, 3, 1e-6)
    top = fits[0]
    assert top.normal == (1,) and top.support == 4
    assert abs(top.offset) <= 1e-9
    assert top.integer_shifts == [-2, -1, 1, 2]
    assert fit_matches_resonance(build_exshift(), top, pts)


def test_commutant_jumps_match():
    p = build_exshift()
    res = scan_segment(p, [-2], [2], samples=9, quantity="commutant_dim", slice=slice_through(p, [1], [1]))
    assert [v for v in res.values] == [4, 2, 4, 2, 2, 2, 4, 2, 4]


def test_refinement_keeps_jumps():
    p = build_exshift()
    res = scan_segment(p, [0.6], [1.4], samples=9, slice=slice_through(p, [1], [1]), refine=True)
    assert [pt[0].real for pt in res.jump_points()] == [1.0]
    assert [pt[0].real for pt in res.jump_points(refined=True)] == [1.0]


def test_verma_scan_finds_sum_locus():
    p = build_verma_kz(2)
    res = scan_segment(p, (0.2, 0.3), (0.9, 0.6), samples=21)
    pts = res.jump_points()
    assert pts and all(abs((a + b) - 1) <= 1e-12 for a, b in pts)


def test_scan_validates_inputs():
    p = build_exshift()
    with pytest.raises(ValueError):
        scan_segment(p, [0], [1], samples=5)
    with pytest.raises(ValueError):
        scan_segment(p, [0], [1], quantity="rank")
    with pytest.raises(ValueError):
        scan_segment(p, [0, 1], [1, 2])


def test_csv_rows(exshift_scan):
    rows = exshift_scan.csv_rows()
    assert rows[0] == ["s", "fixed_dim"]
    assert rows[1] == ["-2.5", "1"] and rows[6] == ["-2.0", "2"]
    assert len(rows) == 52


def test_exact_point_parsing():
    assert exact_point([-2.5, "1/3", 0.1 + 0.2j]) == ((F(-5, 2), 0), (F(1, 3), 0), (F(1, 10), F(1, 5)))


def test_primitive_normals():
    assert primitive_normals(1, 3) == [(1,)]
    normals = primitive_normals(2, 2)
    assert (1, 1) in normals and (2, 2) not in normals and (-1, 1) not in normals and (0, 1) in normals


def test_fit_needs_three_points():
    assert fit_hyperplanes([(0.5,), (1.5,)]) == []
    with pytest.raises(ValueError):
        fit_hyperplanes([(0.5,)] * 3, a_max=6)


@settings(max_examples=30, deadline=None)
@given(st.integers(-3, 3), st.integers(-3, 3).filter(lambda v: v != 0), st.fractions(0, 1, max_denominator=9),
       st.lists(st.integers(-5, 5), min_size=3, max_size=6, unique=True))
def test_fit_recovers_planted_hyperplane(a, b, c, ns):
    """Points on a . s = c + N for distinct N and generic positions are recovered."""
    from math import gcd

    g = gcd(a, b)
    a, b = a // g, b // g
    if b < 0 or (b == 0 and a < 0):
        a, b = -a, -b
    if a < 0 and b == 0:
        return
    normal = (a, b) if a > 0 or (a == 0 and b > 0) else (-a, -b)
    pts = []
    for k, n in enumerate(ns):
        s1 = 0.137 * (k + 1) + 0.01 * k * k
        s2 = (float(c) + n - a * s1) / b
        pts.append((s1, s2))
    fits = fit_hyperplanes(pts, 3, 1e-9)
    assert any(f.normal == normal and f.support == len(ns) for f in fits)

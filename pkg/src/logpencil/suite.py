"""A fixed battery of checks whose JSON output depends only on the seed."""

from __future__ import annotations

import cmath
import random

import numpy as np

from .families import (
    build_dunkl,
    build_exshift,
    build_exshift_shift,
    build_tensor_kz,
    build_verma_kz,
    build_verma_kz_shift,
)
from .loci import fit_hyperplanes, scan_segment
from .monodromy import make_slice, meridian, monodromy_rep, slice_through, transport
from .pencil import check_flatness_residue, curvature_witness
from .periodicity import braiding_ratio_check, hecke_relation_check, test_periodic_monodromy, verify_shift_exact
from .report import dumps, metadata


def _flatness(seed: int) -> list[dict]:
    pencils = [build_exshift(), build_verma_kz(3), build_tensor_kz(3), build_dunkl("S3"), build_dunkl("I2(4)")]
    out = []
    for p in pencils:
        res = check_flatness_residue(p)
        out.append({"pencil": p.name, "residue": res.passed, "points": curvature_witness(p, 20, seed) is None})
    return out


def run_suite(seed: int = 0, jobs: int = 1) -> dict:
    rng = random.Random(seed)
    checks: dict = {}

    checks["flatness"] = _flatness(seed)

    p = build_exshift()
    m = transport(p, [0.3], meridian(slice_through(p, [1], [1]), 0), 1e-12)
    q = cmath.exp(0.6j * cmath.pi)
    err = float(np.max(np.abs(m - np.array([[q, (q - 1) / 0.3], [0, 1]]))))
    checks["exshift_closed_form"] = {"max_error": err, "tol": 1e-8, "passed": err <= 1e-8}

    shifts = [verify_shift_exact(p, build_exshift_shift(), 1).passed]
    for r in (2, 3):
        shifts += [verify_shift_exact(build_verma_kz(r), build_verma_kz_shift(r, k), k).passed for k in range(1, r + 1)]
    checks["shift_identities"] = {"passed": all(shifts), "count": len(shifts)}

    v3 = build_verma_kz(3)
    s = [round(rng.uniform(-0.9, 0.9), 4) for _ in range(3)]
    sl = make_slice(v3, seed)
    checks["verma_kz3_periodicity"] = test_periodic_monodromy(v3, s, (1, 0, 0), 2, 1e-6, sl, jobs=jobs).to_dict()

    d = build_dunkl("S3")
    rep = monodromy_rep(d, [0.2], make_slice(d, seed), jobs=jobs)
    checks["dunkl_s3_hecke"] = hecke_relation_check(rep, 0.2).to_dict()

    t = build_tensor_kz(2)
    rep = monodromy_rep(t, [0.1], make_slice(t, seed))
    checks["tensor_kz2_braiding"] = braiding_ratio_check(rep, 0.1).to_dict()

    scan = scan_segment(p, [-2.5], [2.5], 21, "fixed_dim", make_slice(p, seed), seed=seed, jobs=jobs)
    fits = fit_hyperplanes(scan.jump_points(), 3, 1e-6)
    checks["exshift_scan"] = {"scan": scan.to_dict(), "fits": [f.to_dict() for f in fits[:3]]}

    passed = (all(c["residue"] and c["points"] for c in checks["flatness"])
              and checks["exshift_closed_form"]["passed"] and checks["shift_identities"]["passed"]
              and checks["verma_kz3_periodicity"]["passed"] and checks["dunkl_s3_hecke"]["passed"]
              and checks["tensor_kz2_braiding"]["passed"])
    return {"meta": metadata("suite", seed), "checks": checks, "passed": passed}


def run_suite_text(seed: int = 0, jobs: int = 1) -> str:
    return dumps(run_suite(seed, jobs))

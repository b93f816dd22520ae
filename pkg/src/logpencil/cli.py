"""Command-line interface.

Exit codes: 0 pass, 1 a checked property failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import random
import sys
from pathlib import Path
from typing import Sequence

from .families import (
    RationalMatrixFunction,
    SpecError,
    build_exshift_shift,
    build_verma_kz_shift,
    parse_family,
    spec_from_json,
    spec_to_json,
)
from .loci import QUANTITIES, fit_hyperplanes, fit_matches_resonance, scan_segment
from .monodromy import (
    DEFAULT_RANK_THRESHOLD,
    DEFAULT_RTOL,
    RTOL_MAX,
    RTOL_MIN,
    IntegrationError,
    SliceError,
    fixed_space_dim,
    local_law_check,
    make_slice,
    monodromy_rep,
    signature,
)
from .pencil import LogPencil, check_flatness_residue, curvature_witness
from .periodicity import test_q_dependence, verify_shift_exact
from .report import dumps, metadata

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _load_spec(path: str):
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise UsageError(f"spec file not found: {path}") from exc
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read spec {path}: {exc}") from exc
    try:
        spec = spec_from_json(doc)
        if spec_from_json(spec_to_json(spec)) != spec:
            raise UsageError("spec does not round-trip")
        return spec
    except SpecError as exc:
        raise UsageError(str(exc)) from exc


def _pencil(spec, check_flat: bool = True) -> LogPencil:
    try:
        return parse_family(spec, check_flat=check_flat)
    except SpecError as exc:
        raise UsageError(str(exc)) from exc


def parse_complex_list(text: str) -> list[complex]:
    """``"0.1,0.2+0.05j"`` -> complex values; ``i`` is accepted for the imaginary unit."""
    try:
        return [complex(part.strip().replace("i", "j").replace(" ", "")) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse parameter list {text!r}") from exc


def parse_int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse integer vector {text!r}") from exc


def _params(text: str, p: LogPencil, rng: random.Random) -> list:
    if text == "random":
        return [round(rng.uniform(-1.0, 1.0), 6) for _ in range(p.param_count)]
    values = parse_complex_list(text)
    if len(values) != p.param_count:
        raise UsageError(f"expected {p.param_count} parameter values ({', '.join(p.param_names)}), got {len(values)}")
    return [v.real if v.imag == 0 else v for v in values]


def _seed(args) -> int:
    env = os.environ.get("PENCIL_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise UsageError(f"PENCIL_SEED must be an integer, got {env!r}") from exc
    return args.seed


def _emit(args, report: dict) -> None:
    text = dumps(report)
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _slice_json(sl) -> dict:
    return {"basepoint": list(sl.basepoint), "direction": list(sl.direction),
            "punctures": [{"t": t, "label": label} for t, label in sl.punctures],
            "generator_order": [sl.punctures[k][1] for k in sl.order], "kind": "slice monodromy"}


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_flatness(args) -> int:
    seed = _seed(args)
    spec = _load_spec(args.spec)
    p = _pencil(spec, check_flat=False)
    residue = check_flatness_residue(p)
    witness = curvature_witness(p, args.trials, seed)
    ok = residue.passed and witness is None
    _emit(args, {
        "meta": metadata("flatness", seed, trials=args.trials),
        "spec": spec_to_json(spec),
        "pencil": p.name,
        "residue_criterion": residue.to_dict(),
        "point_oracle": {"passed": witness is None, "trials": args.trials, "witness": witness},
        "passed": ok,
    })
    return EXIT_OK if ok else EXIT_FAIL


def cmd_monodromy(args) -> int:
    seed = _seed(args)
    if not RTOL_MIN <= args.rtol <= RTOL_MAX:
        _emit(args, {"meta": metadata("monodromy", seed, rtol=args.rtol),
                     "error": f"rtol outside supported range [{RTOL_MIN:g}, {RTOL_MAX:g}]", "passed": False})
        return EXIT_FAIL
    if args.word_len not in (1, 2, 3):
        raise UsageError("--word-len must be 1, 2 or 3")
    spec = _load_spec(args.spec)
    p = _pencil(spec)
    s = _params(args.s, p, random.Random(seed))
    try:
        sl = make_slice(p, seed)
        rep = monodromy_rep(p, s, sl, args.rtol, check_reversal=True, jobs=args.jobs)
    except (IntegrationError, SliceError) as exc:
        _emit(args, {"meta": metadata("monodromy", seed, rtol=args.rtol), "error": str(exc), "passed": False})
        return EXIT_FAIL
    laws = local_law_check(p, rep)
    sig = signature(rep, args.word_len)
    ok = all(r["det_ok"] and r["eig_ok"] is not False for r in laws)
    _emit(args, {
        "meta": metadata("monodromy", seed, rtol=args.rtol, det_tol=1e-8, eig_tol=1e-6,
                         rank_threshold=DEFAULT_RANK_THRESHOLD),
        "spec": spec_to_json(spec),
        "pencil": p.name,
        "s": list(rep.s_value),
        "slice": _slice_json(sl),
        "generators": [{"label": label, "matrix": m} for label, m in zip(rep.labels, rep.generators)],
        "achieved_tolerance": rep.tolerance,
        "signature": {"word_length": args.word_len,
                      "words": [{"word": list(w), "charpoly": c} for w, c in zip(sig.words, sig.coefficients)]},
        "fixed_space_dim": fixed_space_dim(rep),
        "local_laws": laws,
        "passed": ok,
    })
    return EXIT_OK if ok else EXIT_FAIL


def cmd_periodicity(args) -> int:
    seed = _seed(args)
    spec = _load_spec(args.spec)
    p = _pencil(spec)
    s = _params(args.s, p, random.Random(seed))
    if not RTOL_MIN <= args.rtol <= RTOL_MAX:
        raise UsageError(f"--rtol must lie in [{RTOL_MIN:g}, {RTOL_MAX:g}]")
    sl = make_slice(p, seed)
    meta = metadata("periodicity", seed, rtol=args.rtol, tol=args.tol, word_length=args.word_len)
    try:
        if args.shift:
            shifts = [parse_int_list(v) for v in args.shift]
            for v in shifts:
                if len(v) != p.param_count:
                    raise UsageError(f"shift needs {p.param_count} entries")
            q = test_q_dependence(p, s, L=args.word_len, tol=args.tol, shifts=shifts, seed=seed, slice=sl,
                                  rtol=args.rtol, jobs=args.jobs)
        else:
            q = test_q_dependence(p, s, trials=args.trials, L=args.word_len, tol=args.tol, seed=seed, slice=sl,
                                  rtol=args.rtol, jobs=args.jobs)
    except IntegrationError as exc:
        _emit(args, {"meta": meta, "error": str(exc), "passed": False})
        return EXIT_FAIL
    _emit(args, {"meta": meta, "spec": spec_to_json(spec), "pencil": p.name, "slice": _slice_json(sl),
                 "result": q.to_dict(), "passed": q.passed})
    return EXIT_OK if q.passed else EXIT_FAIL


def _load_operator(path: str, p: LogPencil) -> tuple[RationalMatrixFunction, int]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        variables = doc.get("variables", list(p.param_names + p.coord_names))
        op = RationalMatrixFunction.from_strings(doc["entries"], variables)
        return op, int(doc["shift_index"])
    except FileNotFoundError as exc:
        raise UsageError(f"operator file not found: {path}") from exc
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError, SyntaxError) as exc:
        raise UsageError(f"bad operator file {path}: {exc}") from exc


def cmd_shift_verify(args) -> int:
    seed = _seed(args)
    spec = _load_spec(args.spec)
    p = _pencil(spec)
    family = p.meta.get("family")
    if args.operator == "builtin":
        if family == "exshift":
            ops = [(build_exshift_shift(), 1)]
        elif family == "verma_kz":
            r = p.meta["r"]
            ks = [args.index] if args.index else range(1, r + 1)
            ops = [(build_verma_kz_shift(r, k), k) for k in ks]
        else:
            raise UsageError(f"no builtin shift operator for family {family!r}")
    else:
        ops = [_load_operator(args.operator, p)]
    results = []
    try:
        for op, j in ops:
            results.append(verify_shift_exact(p, op, j))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    ok = all(r.passed for r in results)
    _emit(args, {"meta": metadata("shift-verify", seed, operator=args.operator, tolerance="exact"),
                 "spec": spec_to_json(spec), "pencil": p.name,
                 "results": [r.to_dict() for r in results], "passed": ok})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_scan(args) -> int:
    seed = _seed(args)
    spec = _load_spec(args.spec)
    p = _pencil(spec)
    a, b = parse_complex_list(args.from_), parse_complex_list(args.to)
    if len(a) != p.param_count or len(b) != p.param_count:
        raise UsageError(f"--from/--to need {p.param_count} coordinates")
    if args.samples < 8:
        raise UsageError("--samples must be at least 8")
    if not RTOL_MIN <= args.rtol <= RTOL_MAX:
        raise UsageError(f"--rtol must lie in [{RTOL_MIN:g}, {RTOL_MAX:g}]")
    a = [v.real if v.imag == 0 else v for v in a]
    b = [v.real if v.imag == 0 else v for v in b]
    sl = make_slice(p, seed)
    res = scan_segment(p, a, b, args.samples, args.quantity, sl, args.rtol, seed, refine=args.refine,
                       jobs=args.jobs)
    report = {"meta": metadata("scan", seed, rtol=args.rtol, rank_threshold=DEFAULT_RANK_THRESHOLD,
                               fit_tol=args.fit_tol, a_max=args.a_max),
              "spec": spec_to_json(spec), "pencil": p.name, "slice": _slice_json(sl), "scan": res.to_dict()}
    if args.fit:
        pts = res.jump_points(refined=args.refine)
        fits = fit_hyperplanes(pts, args.a_max, args.fit_tol)
        report["fits"] = [dict(f.to_dict(), resonance_consistent=fit_matches_resonance(p, f, pts, args.fit_tol))
                          for f in fits]
    if args.csv:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(res.csv_rows())
        Path(args.csv).write_text(buf.getvalue(), encoding="utf-8")
    _emit(args, report)
    return EXIT_OK if not res.failures else EXIT_FAIL


def cmd_suite(args) -> int:
    from .suite import run_suite

    seed = _seed(args)
    report = run_suite(seed, jobs=args.jobs)
    _emit(args, report)
    return EXIT_OK if report["passed"] else EXIT_FAIL


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="logpencil", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, spec=True):
        if spec:
            sp.add_argument("spec", help="pencil spec file (JSON)")
        sp.add_argument("--seed", type=int, default=0, help="random seed (PENCIL_SEED overrides)")
        sp.add_argument("--jobs", type=int, default=1, help="maximum worker threads")
        sp.add_argument("--report", help="write the JSON report here instead of stdout")

    sp = sub.add_parser("flatness", help="residue criterion and random-point curvature check")
    common(sp)
    sp.add_argument("--trials", type=int, default=20)
    sp.set_defaults(func=cmd_flatness)

    sp = sub.add_parser("monodromy", help="meridian monodromy on a random line slice")
    common(sp)
    sp.add_argument("--s", required=True, help="comma-separated parameter values, or 'random'")
    sp.add_argument("--rtol", type=float, default=DEFAULT_RTOL)
    sp.add_argument("--word-len", type=int, default=2)
    sp.set_defaults(func=cmd_monodromy)

    sp = sub.add_parser("periodicity", help="compare monodromy signatures at s and s+v")
    common(sp)
    sp.add_argument("--s", required=True, help="comma-separated parameter values, or 'random'")
    sp.add_argument("--shift", action="append", help="integer shift vector like 1,0,0 (repeatable)")
    sp.add_argument("--trials", type=int, default=6, help="random shifts when --shift is absent")
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--rtol", type=float, default=DEFAULT_RTOL)
    sp.add_argument("--word-len", type=int, default=2)
    sp.set_defaults(func=cmd_periodicity)

    sp = sub.add_parser("shift-verify", help="exact check of a shift operator")
    common(sp)
    sp.add_argument("--operator", default="builtin", help="'builtin' or an operator JSON file")
    sp.add_argument("--index", type=int, help="shift index for builtin verma_kz operators (1-based)")
    sp.set_defaults(func=cmd_shift_verify)

    sp = sub.add_parser("scan", help="scan a parameter segment for jumps")
    common(sp)
    sp.add_argument("--from", dest="from_", required=True)
    sp.add_argument("--to", required=True)
    sp.add_argument("--samples", type=int, default=51)
    sp.add_argument("--quantity", choices=QUANTITIES, default="fixed_dim")
    sp.add_argument("--rtol", type=float, default=1e-10)
    sp.add_argument("--refine", action="store_true")
    sp.add_argument("--fit", action="store_true")
    sp.add_argument("--a-max", type=int, default=3)
    sp.add_argument("--fit-tol", type=float, default=1e-6)
    sp.add_argument("--csv", help="write the scan table here")
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("suite", help="run the fixed deterministic check battery")
    common(sp, spec=False)
    sp.set_defaults(func=cmd_suite)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

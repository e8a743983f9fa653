"""Command-line front end.

Exit codes: 0 success, 2 malformed input (bad method spec, unknown table,
bad flags), 3 violated numerical contract (degenerate polynomial, infeasible
retarget, spectrum outside region, ...).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from fractions import Fraction

import numpy as np

from . import amplification, catalog, region as region_mod, sim
from .catalog import MethodSpec, OddOrder, UnknownMethod, UnsupportedFamily
from .forms import (ShuOsherForm, _num_to_json, butcher_to_shu_osher,
                    shu_osher_to_butcher, validate)
from .poly import Poly, taylor_exp
from .region import DegenerateP, UntracedRegion, trace_region, max_abs_z
from .stability import (DegreeMismatch, SpanFailure,
                        derive_internal_stability)
from .sim import NonfiniteState, NotCanonical, SpectrumOutsideRegion

PARSE_EXIT = 2
CONTRACT_EXIT = 3

_PARSE_ERRORS = (UnknownMethod, UnsupportedFamily)
_CONTRACT_ERRORS = (OddOrder, DegenerateP, UntracedRegion, SpanFailure,
                    DegreeMismatch, NotCanonical, NonfiniteState,
                    SpectrumOutsideRegion)


class ParseError(ValueError):
    """Malformed method spec; the message points at the offending column."""


class UnknownTable(KeyError):
    pass


_FAMILY_ALIASES = {
    "ssp2": ("ssp2", "s"),
    "ssp3": ("ssp3", "n"),
    "ee": ("ee_extrap", "p"),
    "ee_extrap": ("ee_extrap", "p"),
    "em": ("em_extrap", "p"),
    "em_extrap": ("em_extrap", "p"),
    "classic": ("classic", "name"),
}


def parse_method_spec(text: str, embedded: bool = False,
                      form_preference: str = "natural") -> MethodSpec:
    """Grammar: family[:param[=value]], e.g. ssp2:8, ssp3:n=3, ee:12,
    classic:rk4."""
    head, sep, rest = text.partition(":")
    if head not in _FAMILY_ALIASES:
        raise ParseError(
            f"{text!r}: unknown family {head!r} at column 1 "
            f"(expected one of {', '.join(sorted(set(_FAMILY_ALIASES)))})")
    family, pname = _FAMILY_ALIASES[head]
    if not sep or not rest:
        raise ParseError(f"{text!r}: missing parameter after column {len(head)}")
    key, eq, value = rest.partition("=")
    if eq:
        if key != pname:
            raise ParseError(
                f"{text!r}: parameter {key!r} at column {len(head) + 2} "
                f"(expected {pname!r})")
    else:
        value = rest
    if family == "classic":
        if value not in catalog.CLASSIC_NAMES:
            raise ParseError(
                f"{text!r}: unknown method {value!r} at column {len(head) + 2} "
                f"(choices: {', '.join(catalog.CLASSIC_NAMES)})")
        param: int | str = value
    else:
        try:
            param = int(value)
        except ValueError:
            raise ParseError(
                f"{text!r}: expected an integer at column {len(head) + 2}, "
                f"got {value!r}") from None
        if param < 1:
            raise ParseError(f"{text!r}: parameter must be positive")
        if family == "em_extrap" and param % 2:
            raise OddOrder(
                f"{text!r}: the midpoint-seed family exists at even orders only")
    return MethodSpec(family, param, embedded, form_preference)


def _build_both(spec: MethodSpec):
    """(ShuOsherForm, label) honoring the form preference."""
    so = catalog.build(MethodSpec(spec.family, spec.parameter, spec.embedded,
                                  "natural"))
    if spec.form_preference == "butcher":
        so = butcher_to_shu_osher(shu_osher_to_butcher(so))
    return so


def _poly_json(q: Poly):
    return [_num_to_json(x) for x in q.coeffs]


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    return repr(float(x))


def _cmd_method(args) -> int:
    spec = parse_method_spec(args.spec, form_preference=args.form)
    so = _build_both(spec)
    if spec.form_preference == "butcher":
        form = shu_osher_to_butcher(so)
    else:
        form = so
    issues = validate(form)
    if issues:
        for msg in issues:
            print(msg, file=sys.stderr)
        return CONTRACT_EXIT
    if args.json:
        print(json.dumps(form.to_json_dict(), indent=2))
        return 0
    if isinstance(form, ShuOsherForm):
        print(f"stages: {form.s}  order: {form.order}  form: shu-osher")
        print("alpha | beta (nonzero entries, 1-based row/col):")
        for i, (ar, br) in enumerate(zip(form.alpha, form.beta), start=1):
            parts = [f"[{i},{j + 1}] a={_fmt(a)} b={_fmt(b)}"
                     for j, (a, b) in enumerate(zip(ar, br))
                     if a != 0 or b != 0]
            label = "update" if i == form.s + 1 else f"stage {i}"
            print(f"  {label}: " + ("; ".join(parts) if parts else "seed"))
    else:
        print(f"stages: {form.s}  order: {form.order}  form: butcher")
        for i, row in enumerate(form.A, start=1):
            nz = [f"[{i},{j + 1}]={_fmt(x)}" for j, x in enumerate(row) if x != 0]
            print(f"  A row {i}: " + ("; ".join(nz) if nz else "-"))
        print("  b: " + ", ".join(_fmt(x) for x in form.b))
        if form.b_embedded is not None:
            print("  b_embedded: " + ", ".join(_fmt(x) for x in form.b_embedded))
        print("  c: " + ", ".join(_fmt(x) for x in form.c))
    return 0


def _iss_for(spec: MethodSpec):
    so = _build_both(spec)
    return derive_internal_stability(so)


def _cmd_poly(args) -> int:
    spec = parse_method_spec(args.spec, form_preference=args.form)
    iss = _iss_for(spec)
    doc = {"method": args.spec, "form": args.form,
           "P": _poly_json(iss.P), "Q": [_poly_json(q) for q in iss.Q]}
    text = json.dumps(doc, indent=2)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text + "\n")
    else:
        print(text)
    return 0


def _region_P(spec_text: str, form: str) -> Poly:
    if spec_text.startswith("taylor:"):
        try:
            p = int(spec_text.split(":", 1)[1])
        except ValueError:
            raise ParseError(f"{spec_text!r}: expected taylor:<integer>") from None
        if p < 1:
            raise ParseError(f"{spec_text!r}: order must be positive")
        return taylor_exp(p)
    return _iss_for(parse_method_spec(spec_text, form_preference=form)).P


def _cmd_region(args) -> int:
    P = _region_P(args.spec, args.form)
    reg = trace_region(P, resolution=args.resolution)
    rows = []
    for pts in reg.boundary:
        sel = pts[pts.real <= 1e-12] if args.half_plane else pts
        rows.extend((z.real, z.imag) for z in sel)
    if args.half_plane:
        rows.extend((0.0, float(y)) for y in reg.axis_crossings)
    with open(args.out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["re", "im"])
        for re, im in rows:
            w.writerow([repr(re), repr(im)])
    r, z = max_abs_z(reg, half_plane_only=args.half_plane)
    print(f"{len(rows)} boundary points; max |z| = {r:.12g} at "
          f"{z.real:.9g}{z.imag:+.9g}i")
    return 0


def _cmd_amp(args) -> int:
    if args.table:
        if args.table != "ssp3":
            raise UnknownTable(f"amp --table supports 'ssp3', got {args.table!r}")
        out = sys.stdout if not args.out else open(args.out, "w", newline="")
        try:
            w = csv.writer(out)
            w.writerow(["n", "nu_star", "m_value"])
            for n in range(2, args.n_max + 1):
                ana = amplification.ssp3_analytic(n)
                w.writerow([n, f"{ana.nu_star:.12f}", f"{ana.m_value:.6f}"])
        finally:
            if args.out:
                out.close()
        return 0
    if not args.spec:
        raise ParseError("amp needs a method spec or --table ssp3")
    spec = parse_method_spec(args.spec, form_preference=args.form)
    iss = _iss_for(spec)
    reg = trace_region(iss.P, resolution=args.resolution)
    rep = amplification.report(iss, reg, args.spec)
    if args.json:
        print(json.dumps({
            "method_id": rep.method_id,
            "m_full": rep.m_full, "m_half": rep.m_half,
            "m_main": rep.m_main, "m_zero": rep.m_zero,
            "argmax_full": {"stage": rep.argmax_full[0],
                            "z": [rep.argmax_full[1].real,
                                  rep.argmax_full[1].imag]},
            "argmax_half": {"stage": rep.argmax_half[0],
                            "z": [rep.argmax_half[1].real,
                                  rep.argmax_half[1].imag]},
        }, indent=2))
    else:
        value = rep.m_half if args.half_plane else rep.m_full
        stage, z = rep.argmax_half if args.half_plane else rep.argmax_full
        where = "left half-plane part of the region" if args.half_plane \
            else "full region"
        print(f"method {rep.method_id}")
        print(f"  M over {where}: {value:.9g} at stage {stage}, "
              f"z = {z.real:.9g}{z.imag:+.9g}i")
        print(f"  M at z = 0: {rep.m_zero:.9g}")
    return 0


def _parse_tols(text: str) -> list[float]:
    if ".." in text:
        lo_s, hi_s = text.split("..", 1)
        a, b = float(lo_s), float(hi_s)
        if a < b:
            a, b = b, a
        out = []
        t = a
        while t >= b * (1.0 - 1e-9):
            out.append(t)
            t /= 10.0
        return out
    return [float(x) for x in text.split(",")]


def _cmd_experiment(args) -> int:
    if args.kind != "d2":
        raise UnknownTable(f"unknown experiment {args.kind!r}")
    spec = parse_method_spec(args.method, embedded=True,
                             form_preference=args.form)
    so = catalog.build(MethodSpec(spec.family, spec.parameter, True, "natural"))
    if args.form == "butcher":
        so = butcher_to_shu_osher(shu_osher_to_butcher(so))
    problem = sim.kepler_d2()
    ref = sim.kepler_reference()
    tols = _parse_tols(args.tols)
    # default noise magnitude models roundoff accumulated over the ~s flops
    # that assemble each stage, not a single rounding
    mag = args.noise_magnitude if args.noise_magnitude is not None \
        else so.s * 2.0 ** -52
    policy = sim.PerturbationPolicy("relative_roundoff", magnitude=mag,
                                    seed=args.seed)
    with open(args.out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["tol", "steps", "rejections", "global_error", "failed"])
        for tol in tols:
            cfg = sim.StepControllerConfig(abs_tol=tol, rel_tol=tol)
            rec = sim.integrate_adaptive(so, problem, cfg, policy,
                                         method_id=args.method)
            err = (float(np.linalg.norm(rec.final_state - ref))
                   if not rec.failed else math.nan)
            w.writerow([repr(tol), rec.accepted, rec.rejected,
                        "nan" if math.isnan(err) else repr(err),
                        int(rec.failed)])
            print(f"tol {tol:.1e}: steps {rec.accepted}, rejected "
                  f"{rec.rejected}, "
                  + (f"failed ({rec.failure_reason})" if rec.failed
                     else f"error {err:.3e}"))
    return 0


# -- tables ----------------------------------------------------------------

def _method_report(spec_text: str, form: str, resolution: int = 1024):
    spec = parse_method_spec(spec_text, form_preference=form)
    iss = _iss_for(spec)
    reg = trace_region(iss.P, resolution=resolution)
    return amplification.report(iss, reg, spec_text)


def _table_table1(w):
    w.writerow(["# amplification of widely used methods over the "
                "origin-connected component of their stability regions; "
                "tolerance band 2% relative"])
    w.writerow(["method", "m_region", "m_zero", "note"])
    for name in catalog.CLASSIC_NAMES:
        rep = _method_report(f"classic:{name}", "natural")
        w.writerow([name, f"{rep.m_main:.6g}", f"{rep.m_zero:.6g}", ""])
    for name in ("rkc_second_order_family",):
        w.writerow([name, "", "", "omitted: Chebyshev recurrence family "
                    "out of scope for this artifact"])


def _table_table2(w):
    w.writerow(["# amplification of the order-12 Euler-seed extrapolation "
                "in both implementations, over the origin-connected "
                "component; tolerance band 5% relative"])
    w.writerow(["method", "form", "m_region", "m_zero"])
    rep = _method_report("classic:fehlberg54", "butcher")
    w.writerow(["fehlberg54", "butcher", f"{rep.m_main:.6g}", f"{rep.m_zero:.6g}"])
    for form in ("natural", "butcher"):
        rep = _method_report("ee:12", form)
        w.writerow(["ee:12", form, f"{rep.m_main:.6g}", f"{rep.m_zero:.6g}"])


def _table_ssp3(w):
    w.writerow(["# analytic amplification of the n^2-stage third-order "
                "family; printed to 3 decimals"])
    w.writerow(["n", "nu_star", "m_value"])
    for n in range(2, 11):
        ana = amplification.ssp3_analytic(n)
        w.writerow([n, f"{ana.nu_star:.12f}", f"{ana.m_value:.3f}"])


def _table_max_z(w):
    w.writerow(["# largest |z| in the Taylor stability regions; "
                "tolerance band 0.5% relative"])
    w.writerow(["p", "max_abs_z_full", "max_abs_z_half_plane"])
    for p in range(1, 21):
        reg = trace_region(taylor_exp(p))
        rf, _ = max_abs_z(reg)
        rh, _ = max_abs_z(reg, half_plane_only=True)
        w.writerow([p, f"{rf:.6f}", f"{rh:.6f}"])


def _extrap_table(w, family: str, ps, half: bool):
    where = "left half-plane part" if half else "full region"
    w.writerow([f"# amplification of {family} extrapolation over the "
                f"{where} of its stability region; tolerance band 0.5% "
                "(5% above order 8)"])
    w.writerow(["p", "m_value"])
    key = "ee" if family == "euler-seed" else "em"
    for p in ps:
        rep = _method_report(f"{key}:{p}", "natural")
        val = rep.m_half if half else rep.m_full
        w.writerow([p, f"{val:.6g}"])


def _zero_table(w, family: str, ps):
    w.writerow([f"# exact amplification of {family} extrapolation at z = 0"])
    w.writerow(["p", "m_zero_exact", "m_zero_float"])
    for p in ps:
        if family == "euler-seed":
            m = amplification.amplification_closed_form_ee_zero(p)
        else:
            m = amplification.amplification_closed_form_em_zero(p)
        w.writerow([p, f"{m.numerator}/{m.denominator}", f"{float(m):.6g}"])


_TABLES = {
    "table1": _table_table1,
    "table2": _table_table2,
    "ssp3": _table_ssp3,
    "max-z": _table_max_z,
    "ee-region": lambda w: _extrap_table(w, "euler-seed", range(2, 9), False),
    "ee-half": lambda w: _extrap_table(w, "euler-seed", range(2, 9), True),
    "ee-zero": lambda w: _zero_table(w, "euler-seed", range(2, 21)),
    "em-half": lambda w: _extrap_table(w, "midpoint-seed", range(2, 9, 2), True),
    "em-zero": lambda w: _zero_table(w, "midpoint-seed", range(2, 21, 2)),
}


def run_tables(which: str, out_path: str | None = None) -> int:
    try:
        fn = _TABLES[which]
    except KeyError:
        raise UnknownTable(
            f"unknown table {which!r}; choices: {', '.join(sorted(_TABLES))}")
    out = open(out_path, "w", newline="") if out_path else sys.stdout
    try:
        fn(csv.writer(out))
    finally:
        if out_path:
            out.close()
    return 0


def _cmd_tables(args) -> int:
    return run_tables(args.which, args.out)


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="rkistab",
        description="internal stability analysis of explicit Runge-Kutta methods")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    m = sub.add_parser("method", help="print a method's coefficients")
    m.add_argument("spec")
    m.add_argument("--form", choices=("natural", "butcher"), default="natural")
    m.add_argument("--json", action="store_true")
    m.set_defaults(fn=_cmd_method)

    p = sub.add_parser("poly", help="stability and stage polynomials as JSON")
    p.add_argument("spec")
    p.add_argument("--form", choices=("natural", "butcher"), default="natural")
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_poly)

    r = sub.add_parser("region", help="trace a stability region boundary")
    r.add_argument("spec", help="method spec or taylor:<p>")
    r.add_argument("--form", choices=("natural", "butcher"), default="natural")
    r.add_argument("--half-plane", action="store_true")
    r.add_argument("--resolution", type=int, default=1024)
    r.add_argument("--out", required=True)
    r.set_defaults(fn=_cmd_region)

    a = sub.add_parser("amp", help="amplification report for a method")
    a.add_argument("spec", nargs="?")
    a.add_argument("--form", choices=("natural", "butcher"), default="natural")
    a.add_argument("--half-plane", action="store_true")
    a.add_argument("--resolution", type=int, default=1024)
    a.add_argument("--json", action="store_true")
    a.add_argument("--table", help="'ssp3' for the analytic family table")
    a.add_argument("--n-max", type=int, default=10)
    a.add_argument("--out")
    a.set_defaults(fn=_cmd_amp)

    e = sub.add_parser("experiment", help="perturbed integration sweeps")
    e.add_argument("kind", help="d2")
    e.add_argument("--method", required=True)
    e.add_argument("--form", choices=("natural", "butcher"), default="natural")
    e.add_argument("--tols", default="1e-4..1e-12")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--noise-magnitude", type=float, default=None,
                   help="per-stage residual scale; default: stages * 2^-52")
    e.add_argument("--out", required=True)
    e.set_defaults(fn=_cmd_experiment)

    t = sub.add_parser("tables", help="reproduce a published table as CSV")
    t.add_argument("which")
    t.add_argument("--out")
    t.set_defaults(fn=_cmd_tables)
    return ap


def main(argv=None) -> int:
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return PARSE_EXIT if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (ParseError, UnknownTable, *_PARSE_ERRORS) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return PARSE_EXIT
    except _CONTRACT_ERRORS as exc:
        print(f"numerical contract violated: {exc}", file=sys.stderr)
        return CONTRACT_EXIT


if __name__ == "__main__":
    sys.exit(main())

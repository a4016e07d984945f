"""Batch front end: validate, invariants, classify, schedule, trace-approx,
match, realize.

Exit status: 0 on success (including decided Not-Isomorphic verdicts), 2 when
a requested decision comes back Undetermined, 1 on input or hypothesis errors.
Reports are deterministic given identical inputs and seeds.
"""

from __future__ import annotations

import argparse
import json
import sys as _sys
from pathlib import Path

from . import report as rpt
from .classify import ShapeMismatchError, classify_k_contractible, classify_same_shape, invariant_tuple
from .extended import INF
from .intertwine import ScheduleError, build_schedule, verify_schedule
from .invariants import rc_lower_witness, rc_realization
from .matching import EvaluationMultiset, marriage_match, violator_neighbor_count
from .sysfile import SchemaError, load_system, save_system
from .system import Point, SizeCapError, cube, validate
from .traces import ApproximationError, DiscreteMeasure, SampledFunction, approximate_by_extreme
from .util import format_ratio, parse_ratio

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_UNDETERMINED = 2


def _write(doc: rpt.ReportDocument, out: Path, quiet: bool) -> None:
    doc.write(out)
    if not quiet:
        print(doc.render(), end="")
    print(f"report written to {out}", file=_sys.stderr)


def cmd_validate(args) -> int:
    sys_obj = load_system(args.system)
    rep = validate(sys_obj, args.depth, parse_ratio(args.resolution))
    doc = rpt.ReportDocument("validate")
    doc.add("input", Path(args.system).name)
    doc.add("depth", args.depth)
    doc.add("resolution", args.resolution)
    rpt.add_validation(doc, rep)
    out = Path(args.output or "validate-report.txt")
    _write(doc, out, args.quiet)
    if args.figures:
        rows = rpt.partial_product_rows(sys_obj, args.depth)
        if rows:
            rpt.write_partials_table(rows, out.with_suffix(".partials.tsv"))
            rpt.render_partials_figure(rows, out.with_suffix(".partials.png"))
    return EXIT_OK if rep.structural_ok else EXIT_INPUT


def cmd_invariants(args) -> int:
    sys_obj = load_system(args.system)
    rep = invariant_tuple(sys_obj, args.depth)
    doc = rpt.ReportDocument("invariants")
    doc.add("input", Path(args.system).name)
    doc.add("depth", args.depth)
    rpt.add_invariants(doc, rep)
    if args.witness_eps:
        res = rc_lower_witness(sys_obj, parse_ratio(args.witness_eps), args.depth * 8)
        rpt.add_witness(doc, res)
    out = Path(args.output or "invariants-report.txt")
    rows = rpt.partial_product_rows(sys_obj, args.depth)
    _write(doc, out, args.quiet)
    rpt.write_partials_table(rows, out.with_suffix(".partials.tsv"))
    if args.figures and rows:
        exact = rep.gamma.exact.finite if rep.gamma.is_exact and not rep.gamma.exact.is_infinite else None
        rpt.render_partials_figure(rows, out.with_suffix(".partials.png"), exact)
    return EXIT_OK


def cmd_classify(args) -> int:
    A = load_system(args.system_a)
    B = load_system(args.system_b)
    doc = rpt.ReportDocument("classify")
    doc.add("left", Path(args.system_a).name)
    doc.add("right", Path(args.system_b).name)
    doc.add("depth", args.depth)
    try:
        if args.criterion == "same-shape":
            verdict = classify_same_shape(A, B, args.depth)
        elif args.criterion == "k-contractible":
            verdict = classify_k_contractible(A, B, args.depth)
        else:
            try:
                verdict = classify_same_shape(A, B, args.depth)
            except ShapeMismatchError:
                verdict = classify_k_contractible(A, B, args.depth)
    except ShapeMismatchError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_INPUT
    rpt.add_verdict(doc, verdict)
    _write(doc, Path(args.output or "classify-report.txt"), args.quiet)
    return EXIT_UNDETERMINED if verdict.verdict == "Undetermined" else EXIT_OK


def cmd_schedule(args) -> int:
    A = load_system(args.system_a)
    B = load_system(args.system_b)
    deltas = [parse_ratio(tok) for tok in args.deltas.split(",")]
    doc = rpt.ReportDocument("schedule")
    doc.add("left", Path(args.system_a).name)
    doc.add("right", Path(args.system_b).name)
    doc.add("deltas", args.deltas)
    doc.add("search-bound", args.search_bound)
    try:
        sched = build_schedule(A, B, deltas, args.search_bound)
    except ScheduleError as exc:
        doc.begin("schedule")
        doc.add("refused", str(exc))
        doc.add("failed-condition", exc.failed)
        _write(doc, Path(args.output or "schedule-report.txt"), args.quiet)
        return EXIT_INPUT
    rpt.add_schedule(doc, sched)
    reverified = verify_schedule(A, B, sched)
    doc.begin("re-verification")
    doc.add("checks", len(reverified))
    doc.add("all-pass", all(ch.verdict for ch in reverified))
    _write(doc, Path(args.output or "schedule-report.txt"), args.quiet)
    return EXIT_OK if sched.all_verified else EXIT_UNDETERMINED


def _load_measure_task(path: Path, seed_kind_system) -> tuple[DiscreteMeasure, int, list[SampledFunction]]:
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    stage_index = int(data["stage"])
    pairs = []
    for entry in data["support"]:
        pt = Point(tuple(parse_ratio(v) for v in entry["point"]))
        pairs.append((pt, parse_ratio(entry["weight"])))
    _, d = seed_kind_system.stage_dims(stage_index)
    mu = DiscreteMeasure.from_pairs(d, pairs)
    funcs = []
    for f in data.get("functions", []):
        table = {
            Point(tuple(parse_ratio(v) for v in row["point"])): parse_ratio(row["value"])
            for row in f["values"]
        }
        funcs.append(
            SampledFunction.from_table(
                table,
                parse_ratio(f.get("lipschitz", "1")),
                parse_ratio(f["sup_norm"]) if "sup_norm" in f else None,
                f.get("name", "f"),
            )
        )
    return mu, stage_index, funcs


def cmd_trace_approx(args) -> int:
    sys_obj = load_system(args.system)
    mu, stage_index, funcs = _load_measure_task(Path(args.measure), sys_obj)
    doc = rpt.ReportDocument("trace-approx")
    doc.add("input", Path(args.system).name)
    doc.add("measure", Path(args.measure).name)
    doc.add("stage", stage_index)
    doc.add("eps", args.eps)
    try:
        x_mu, steps = approximate_by_extreme(
            sys_obj, mu, stage_index, funcs, parse_ratio(args.eps), args.search_bound
        )
    except ApproximationError as exc:
        doc.begin("approximation")
        doc.add("failed-threshold", exc.threshold)
        doc.add("detail", str(exc))
        _write(doc, Path(args.output or "trace-approx-report.txt"), args.quiet)
        return EXIT_INPUT
    doc.begin("approximation")
    doc.add("point-coordinates", len(x_mu.coords))
    doc.add("point", " ".join(format_ratio(v) for v in x_mu.coords[:16]) + (" ..." if len(x_mu.coords) > 16 else ""))
    ok = True
    for st in steps:
        doc.add(f"step.{st.name}", f"{format_ratio(st.value)} < {format_ratio(st.budget)} [{'ok' if st.verdict else 'FAIL'}]")
        ok = ok and st.verdict
    doc.add("all-verified", ok)
    _write(doc, Path(args.output or "trace-approx-report.txt"), args.quiet)
    return EXIT_OK if ok else EXIT_UNDETERMINED


def cmd_match(args) -> int:
    try:
        data = json.loads(Path(args.instance).read_text())
    except json.JSONDecodeError as exc:
        print(f"error: {args.instance}:{exc.lineno}: {exc.msg}", file=_sys.stderr)
        return EXIT_INPUT
    space = cube(int(data.get("cube", 1)))
    def side(key):
        return EvaluationMultiset.of(
            space,
            [
                (Point(tuple(parse_ratio(v) for v in e["point"])), int(e.get("mult", 1)))
                for e in data[key]
            ],
        )
    xs, ys = side("xs"), side("ys")
    radius = parse_ratio(args.radius)
    doc = rpt.ReportDocument("match")
    doc.add("instance", Path(args.instance).name)
    doc.add("radius", args.radius)
    doc.add("count", xs.total)
    result = marriage_match(xs, ys, radius)
    doc.begin("matching")
    doc.add("matched", result.matched)
    if result.matched:
        doc.add("max-displacement", result.max_displacement)
        for u, v in result.permutation:
            doc.add(f"pair.{u}", v)
    else:
        viol = result.violator
        doc.add("violator-size", viol.total)
        doc.add("violator-neighbors", violator_neighbor_count(viol, ys, radius))
        for p, m in zip(viol.points, viol.multiplicities):
            doc.add("violator-point", f"{tuple(map(format_ratio, p.coords))} x{m}")
    _write(doc, Path(args.output or "match-report.txt"), args.quiet)
    return EXIT_OK


def cmd_realize(args) -> int:
    target = INF if args.rc in ("inf", "oo") else parse_ratio(args.rc)
    sys_obj = rc_realization(target)
    out = Path(args.output or f"{sys_obj.name}.vsys")
    save_system(sys_obj, out)
    doc = rpt.ReportDocument("realize")
    doc.add("rc-target", args.rc)
    doc.add("system-file", out.name)
    rpt.add_invariants(doc, invariant_tuple(sys_obj, args.depth))
    _write(doc, out.with_suffix(".report.txt"), args.quiet)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="villadsen",
        description="Exact invariants and isomorphism decisions for diagonal AH systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--output", "-o", help="report path")
        p.add_argument("--quiet", "-q", action="store_true", help="do not echo the report")

    p = sub.add_parser("validate", help="structural, density, and tail-product checks")
    p.add_argument("system")
    p.add_argument("--depth", type=int, default=10)
    p.add_argument("--resolution", default="1/2")
    p.add_argument("--figures", action="store_true", help="render partial-product figures")
    common(p)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("invariants", help="gamma, mean dimension, comparison radius, K0, trace tag")
    p.add_argument("system")
    p.add_argument("--depth", type=int, default=12)
    p.add_argument("--witness-eps", help="also run the lower-bound witness chain at this epsilon")
    p.add_argument("--figures", action="store_true")
    common(p)
    p.set_defaults(fn=cmd_invariants)

    p = sub.add_parser("classify", help="decide isomorphism of two systems")
    p.add_argument("system_a")
    p.add_argument("system_b")
    p.add_argument("--depth", type=int, default=24)
    p.add_argument("--criterion", choices=["auto", "same-shape", "k-contractible"], default="auto")
    common(p)
    p.set_defaults(fn=cmd_classify)

    p = sub.add_parser("schedule", help="build and verify an intertwining schedule")
    p.add_argument("system_a")
    p.add_argument("system_b")
    p.add_argument("--deltas", default="1/8,1/16,1/32")
    p.add_argument("--search-bound", type=int, default=200)
    common(p)
    p.set_defaults(fn=cmd_schedule)

    p = sub.add_parser("trace-approx", help="approximate a trace by an extreme one")
    p.add_argument("system")
    p.add_argument("measure", help="JSON task file: stage, support, functions")
    p.add_argument("--eps", default="1/4")
    p.add_argument("--search-bound", type=int, default=16)
    common(p)
    p.set_defaults(fn=cmd_trace_approx)

    p = sub.add_parser("match", help="marriage matching of two point multisets")
    p.add_argument("instance", help="JSON file with xs, ys, optional cube exponent")
    p.add_argument("--radius", default="1/4")
    common(p)
    p.set_defaults(fn=cmd_match)

    p = sub.add_parser("realize", help="emit a system with a prescribed comparison radius")
    p.add_argument("--rc", required=True, help="rational like 3/2, or inf")
    p.add_argument("--depth", type=int, default=12)
    common(p)
    p.set_defaults(fn=cmd_realize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (SchemaError, FileNotFoundError, ValueError, SizeCapError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())

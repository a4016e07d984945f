"""Report documents: deterministic structured text, a delimited partial-product
table, and optional convergence figures.

Every rational in a report is exact (numerator/denominator); float columns are
clearly marked approximations for plotting and eyeballing only.
"""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional

from .classify import ClassificationVerdict, InvariantReport
from .extended import ExtendedRational
from .intertwine import IntertwiningSchedule
from .invariants import CertifiedValue, RcWitnessResult, gamma_partial
from .system import ValidationReport, VilladsenSystem
from .util import format_ratio


class ReportDocument:
    """Sections of key/value lines, rendered byte-for-byte deterministically."""

    def __init__(self, command: str):
        self.sections: list[tuple[str, list[tuple[str, str]]]] = []
        self.begin("meta")
        self.add("command", command)

    def begin(self, name: str) -> None:
        self.sections.append((name, []))

    def add(self, key: str, value) -> None:
        if isinstance(value, Fraction):
            value = format_ratio(value)
        elif isinstance(value, ExtendedRational):
            value = str(value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        self.sections[-1][1].append((key, str(value)))

    def add_certified(self, key: str, value: CertifiedValue) -> None:
        if value.is_exact:
            self.add(f"{key}.exact", value.exact)
        self.add(f"{key}.lower", value.lower)
        self.add(f"{key}.upper", value.upper)
        self.add(f"{key}.stage", value.truncation_stage)
        if value.note:
            self.add(f"{key}.note", value.note)

    def render(self) -> str:
        lines = ["# villadsen report v1"]
        for name, rows in self.sections:
            lines.append(f"[{name}]")
            for key, value in rows:
                lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"

    def write(self, path: Path) -> None:
        path.write_text(self.render())


def partial_product_rows(sys: VilladsenSystem, depth: int) -> list[tuple[int, Fraction]]:
    """Coordinate-fraction partial products at powers of two up to ``depth``."""
    rows = []
    d = 1
    while d <= depth:
        if not sys.has_stage(d):
            break
        rows.append((d, gamma_partial(sys, d)))
        d *= 2
    return rows


def write_partials_table(rows: Iterable[tuple[int, Fraction]], path: Path) -> None:
    lines = ["depth\tnumerator\tdenominator\tapprox"]
    for depth, value in rows:
        lines.append(
            f"{depth}\t{value.numerator}\t{value.denominator}\t{float(value):.10f}"
        )
    path.write_text("\n".join(lines) + "\n")


def render_partials_figure(
    rows: list[tuple[int, Fraction]], path: Path, exact: Optional[Fraction] = None
) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    depths = [d for d, _ in rows]
    values = [float(v) for _, v in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(depths, values, marker="o", label="partial product")
    if exact is not None:
        ax.axhline(float(exact), linestyle="--", color="gray", label="closed form")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("depth")
    ax.set_ylabel("coordinate fraction")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def add_validation(doc: ReportDocument, rep: ValidationReport) -> None:
    doc.begin("validation")
    doc.add("structural", "pass" if rep.structural_ok else "fail")
    for ch in rep.stage_checks:
        doc.add(f"stage.{ch.stage}", ("ok: " if ch.ok else "FAIL: ") + ch.detail)
    for ch in rep.density_checks:
        doc.add(f"density.{ch.stage}", f"{ch.verdict}: {ch.detail}")
    doc.begin("tail-products")
    for row in rep.tail_rows:
        doc.add(f"from.{row.start}.partial", row.partial)
        if row.limit is not None:
            if row.limit.exact is not None:
                doc.add(f"from.{row.start}.limit", row.limit.exact)
            else:
                doc.add(f"from.{row.start}.limit", f"[{format_ratio(row.limit.lower)}, {format_ratio(row.limit.upper)}]")
    doc.add("negligible-evaluations", rep.negligibility_verdict)
    for note in rep.notes:
        doc.add("note", note)


def add_invariants(doc: ReportDocument, rep: InvariantReport) -> None:
    doc.begin("invariants")
    doc.add("system", rep.name)
    mult = rep.k0.multiplicity
    doc.add("k0.unit-class", rep.k0.unit_class)
    doc.add("k0.truncation", mult.truncation_stage)
    for p, e in mult.known:
        doc.add(f"k0.exponent.{p}", e)
    tail = mult.tail_rule.describe() if mult.tail_rule else "unknown"
    doc.add("k0.tail", tail)
    doc.add_certified("gamma", rep.gamma)
    doc.add_certified("mean-dimension", rep.mdim)
    doc.add_certified("comparison-radius", rep.rc)
    doc.add("trace-simplex", rep.trace_tag)
    for name, ok in rep.flags:
        doc.add(f"flag.{name}", ok)


def add_verdict(doc: ReportDocument, v: ClassificationVerdict) -> None:
    doc.begin("classification")
    doc.add("verdict", v.verdict)
    doc.add("criterion", v.criterion)
    doc.add("detail", v.detail)
    for name, ok in v.hypothesis_report.checked:
        doc.add(f"hypothesis.{name}", "verified" if ok else "FAILED")
    if v.k0_verdict is not None:
        doc.add("k0.compare", v.k0_verdict.kind)
        if v.k0_verdict.witness_prime is not None:
            doc.add("k0.witness-prime", v.k0_verdict.witness_prime)
        doc.add("k0.reason", v.k0_verdict.reason)
    if v.rc_left is not None:
        doc.add_certified("rc.left", v.rc_left)
        doc.add_certified("rc.right", v.rc_right)
    if v.trace_tags is not None:
        doc.add("trace-tags", f"{v.trace_tags[0]} vs {v.trace_tags[1]}")


def add_witness(doc: ReportDocument, res: RcWitnessResult) -> None:
    doc.begin("comparison-radius-floor")
    doc.add("applicable", res.applicable)
    if not res.applicable:
        doc.add("reason", res.reason)
        return
    w = res.witness
    doc.add("epsilon", w.epsilon)
    doc.add("stage", w.stage)
    doc.add("sphere-dimension", w.sphere_dim)
    doc.add("rank-bound", w.trivial_subbundle_rank_bound)
    doc.add("conclusion", f"rc >= {format_ratio(w.conclusion)}")
    for entry in w.inequality_chain:
        doc.add(f"chain.{entry.name}", entry.describe())
    doc.add("all-verified", w.all_verified)


def add_schedule(doc: ReportDocument, sched: IntertwiningSchedule) -> None:
    doc.begin("schedule")
    doc.add("sides", f"{sched.side_a} <-> {sched.side_b}")
    doc.add("entries", len(sched.entries))
    for note in sched.hypothesis_checks:
        doc.add("hypothesis", note)
    for note in sched.notes:
        doc.add("adjustment", note)
    for e in sched.entries:
        key = f"entry.{e.s}"
        doc.add(f"{key}.pair", f"(i'={e.i_prime}, i={e.i})")
        doc.add(f"{key}.delta", e.delta)
        doc.add(f"{key}.style", e.cross_map.style)
        doc.add(f"{key}.blocks", e.cross_map.blocks)
        doc.add(f"{key}.coord-rank", e.cross_map.coord_rank)
        doc.add(f"{key}.fill", e.cross_map.fill_policy)
        for ch in e.checks:
            doc.add(f"{key}.check.{ch.name}", ch.describe())
    for r in sched.rounds:
        key = f"round.{r.s}"
        doc.add(f"{key}.window", f"[{r.start_stage}, {r.end_stage}] on {r.side}")
        doc.add(f"{key}.shared-rank", r.decomposition.shared_rank)
        doc.add(f"{key}.residual-rank", r.decomposition.residual_rank)
        doc.add(f"{key}.theta-rank", r.decomposition.theta_rank)
        doc.add(f"{key}.ratio", r.decomposition.ratio)
        for ch in r.checks:
            doc.add(f"{key}.check.{ch.name}", ch.describe())
    doc.add("all-verified", sched.all_verified)

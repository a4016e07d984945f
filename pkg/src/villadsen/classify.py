"""Isomorphism decision procedures over the computed invariants.

A decided verdict is only ever emitted with every hypothesis of the invoked
criterion verified; everything else is Undetermined with the failing flag
named.  Comparing bracketed (non-exact) values never certifies equality.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .invariants import CertifiedValue, gamma, mdim_upper, radius_of_comparison
from .supernatural import ComparisonVerdict, K0Description, compare, k0_of_system
from .system import VilladsenSystem
from .traces import simplex_tag

ISOMORPHIC = "Isomorphic"
NOT_ISOMORPHIC = "NotIsomorphic"
UNDETERMINED = "Undetermined"


class ShapeMismatchError(ValueError):
    """The same-shape criterion does not apply; use the K-contractible one."""


@dataclass(frozen=True)
class HypothesisReport:
    checked: tuple[tuple[str, bool], ...]

    @property
    def all_ok(self) -> bool:
        return all(ok for _, ok in self.checked)

    def failing(self) -> list[str]:
        return [name for name, ok in self.checked if not ok]


@dataclass(frozen=True)
class ClassificationVerdict:
    verdict: str
    criterion: str  # which decision rule produced the verdict
    k0_verdict: Optional[ComparisonVerdict]
    rc_left: Optional[CertifiedValue]
    rc_right: Optional[CertifiedValue]
    trace_tags: Optional[tuple[str, str]]
    hypothesis_report: HypothesisReport
    detail: str = ""

    def __post_init__(self):
        if self.verdict in (ISOMORPHIC, NOT_ISOMORPHIC) and not self.hypothesis_report.all_ok:
            raise ValueError("decided verdict with an unverified hypothesis")


def _rc_comparison(a: CertifiedValue, b: CertifiedValue) -> str:
    """'equal' | 'different' | 'undetermined', never trusting loose brackets."""
    if a.is_exact and b.is_exact:
        return "equal" if a.exact == b.exact else "different"
    if a.upper < b.lower or b.upper < a.lower:
        return "different"
    return "undetermined"


def _rc_nonzero(v: CertifiedValue) -> Optional[bool]:
    if v.is_exact:
        return v.exact != 0
    if v.lower > 0:
        return True
    if v.upper == 0:
        return False
    return None


def classify_same_shape(
    A: VilladsenSystem, B: VilladsenSystem, depth: int
) -> ClassificationVerdict:
    """Decide isomorphism for systems sharing the seed, unit size, coordinate
    counts, and multiplicities: the invariants are the ordered K-zero data and
    the radius of comparison.

    The solidity and finite-dimensionality hypotheses are only consulted when
    the radius of comparison is nonzero; connectivity is always required.
    """
    if not A.same_shape(B, depth):
        raise ShapeMismatchError(
            "systems differ in coordinate counts or multiplicities; "
            "try the K-contractible criterion"
        )
    rc_a = radius_of_comparison(A, depth)
    rc_b = radius_of_comparison(B, depth)
    nz_a, nz_b = _rc_nonzero(rc_a), _rc_nonzero(rc_b)
    hyp = [("connected", A.seed.connected and B.seed.connected)]
    if nz_a is not False or nz_b is not False:
        hyp.append(("solid", A.seed.solid and B.seed.solid))
        hyp.append(("finite-dimensional", A.seed.dim is not None and B.seed.dim is not None))
    report = HypothesisReport(tuple(hyp))

    k0 = compare(k0_of_system(A, depth).multiplicity, k0_of_system(B, depth).multiplicity, depth)
    rc_cmp = _rc_comparison(rc_a, rc_b)

    if not report.all_ok:
        return ClassificationVerdict(
            UNDETERMINED, "same-shape", k0, rc_a, rc_b, None, report,
            f"hypotheses not verified: {', '.join(report.failing())}",
        )
    if k0.is_not_equal:
        return ClassificationVerdict(
            NOT_ISOMORPHIC, "same-shape", k0, rc_a, rc_b, None, report,
            f"ordered K-zero data differ at the prime {k0.witness_prime}",
        )
    if rc_cmp == "different":
        return ClassificationVerdict(
            NOT_ISOMORPHIC, "same-shape", k0, rc_a, rc_b, None, report,
            f"comparison radii differ: {rc_a.describe()} vs {rc_b.describe()}",
        )
    if k0.is_equal and rc_cmp == "equal":
        return ClassificationVerdict(
            ISOMORPHIC, "same-shape", k0, rc_a, rc_b, None, report,
            "ordered K-zero data and comparison radii agree",
        )
    return ClassificationVerdict(
        UNDETERMINED, "same-shape", k0, rc_a, rc_b, None, report,
        f"K-zero comparison {k0.kind}; radius comparison {rc_cmp}",
    )


def classify_k_contractible(
    A: VilladsenSystem, B: VilladsenSystem, depth: int
) -> ClassificationVerdict:
    """Decide isomorphism for K-contractible solid finite-dimensional seeds,
    with arbitrary coordinate counts and multiplicities.

    With nonzero comparison radius the trace simplex is redundant: the verdict
    never consults it, which the evidence record makes checkable.  With radius
    zero the trace simplex enters, compared by decidable tags only.
    """
    hyp = [
        ("k-contractible", A.seed.k_contractible and B.seed.k_contractible),
        ("solid", A.seed.solid and B.seed.solid),
        ("finite-dimensional", A.seed.dim is not None and B.seed.dim is not None),
        ("connected", A.seed.connected and B.seed.connected),
    ]
    report = HypothesisReport(tuple(hyp))
    k0 = compare(k0_of_system(A, depth).multiplicity, k0_of_system(B, depth).multiplicity, depth)
    rc_a = radius_of_comparison(A, depth)
    rc_b = radius_of_comparison(B, depth)
    if not report.all_ok:
        return ClassificationVerdict(
            UNDETERMINED, "k-contractible", k0, rc_a, rc_b, None, report,
            f"hypotheses not verified: {', '.join(report.failing())}",
        )
    nz_a, nz_b = _rc_nonzero(rc_a), _rc_nonzero(rc_b)
    if nz_a is None or nz_b is None:
        return ClassificationVerdict(
            UNDETERMINED, "k-contractible", k0, rc_a, rc_b, None, report,
            "cannot certify whether the comparison radius is zero",
        )
    if nz_a != nz_b:
        return ClassificationVerdict(
            NOT_ISOMORPHIC, "k-contractible", k0, rc_a, rc_b, None, report,
            "one comparison radius is zero, the other is not",
        )
    if k0.is_not_equal:
        return ClassificationVerdict(
            NOT_ISOMORPHIC, "k-contractible", k0, rc_a, rc_b, None, report,
            f"K-zero groups differ at the prime {k0.witness_prime}",
        )
    if nz_a:
        # nonzero radius: trace simplex redundant, decide on K0 + rc alone
        rc_cmp = _rc_comparison(rc_a, rc_b)
        if rc_cmp == "different":
            return ClassificationVerdict(
                NOT_ISOMORPHIC, "k-contractible", k0, rc_a, rc_b, None, report,
                f"comparison radii differ: {rc_a.describe()} vs {rc_b.describe()}",
            )
        if k0.is_equal and rc_cmp == "equal":
            return ClassificationVerdict(
                ISOMORPHIC, "k-contractible", k0, rc_a, rc_b, None, report,
                "K-zero groups and nonzero comparison radii agree",
            )
        return ClassificationVerdict(
            UNDETERMINED, "k-contractible", k0, rc_a, rc_b, None, report,
            f"K-zero comparison {k0.kind}; radius comparison {rc_cmp}",
        )
    # both radii zero: the trace simplex joins the invariant, compared by tag
    tags = (simplex_tag(A), simplex_tag(B))
    decidable = {("Singleton", "Singleton")}
    if tags == ("BauerOverSeed", "BauerOverSeed") and A.seed == B.seed:
        decidable.add(tags)
    if k0.is_equal and tags in decidable:
        return ClassificationVerdict(
            ISOMORPHIC, "k-contractible", k0, rc_a, rc_b, tags, report,
            "zero radii, matching K-zero groups, decidably matching trace simplices",
        )
    return ClassificationVerdict(
        UNDETERMINED, "k-contractible", k0, rc_a, rc_b, tags, report,
        "trace simplex comparison beyond tags is out of scope",
    )


@dataclass(frozen=True)
class InvariantReport:
    name: str
    k0: K0Description
    gamma: CertifiedValue
    mdim: CertifiedValue
    rc: CertifiedValue
    trace_tag: str
    flags: tuple[tuple[str, bool], ...]


def invariant_tuple(sys: VilladsenSystem, depth: int) -> InvariantReport:
    """Everything the decision procedures consume, in one record."""
    return InvariantReport(
        name=sys.name,
        k0=k0_of_system(sys, depth),
        gamma=gamma(sys, depth),
        mdim=mdim_upper(sys, depth),
        rc=radius_of_comparison(sys, depth),
        trace_tag=simplex_tag(sys),
        flags=(
            ("solid", sys.seed.solid),
            ("connected", sys.seed.connected),
            ("k-contractible", sys.seed.k_contractible),
            ("finite-dimensional", sys.seed.dim is not None),
        ),
    )

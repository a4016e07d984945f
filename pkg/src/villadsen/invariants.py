"""Classification invariants: the coordinate fraction gamma, the mean-dimension
upper bound, the radius of comparison, asymptotic shape conditions, the
realization construction, and the exact lower-bound witness chain.

All values are CertifiedValue brackets: exact rationals (or the infinity
symbol) when a closed form applies, honest lower/upper bounds otherwise.
Nothing here ever emits an unproven real.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .extended import INF, ExtendedRational
from .families import HalvingFamily, Interval, SquaresFamily
from .system import VilladsenSystem, cantor, cube, hilbert_cube
from .util import format_ratio, ratio_product


@dataclass(frozen=True)
class CertifiedValue:
    """A certified bracket around a limit value, at an explicit truncation stage."""

    lower: ExtendedRational
    upper: ExtendedRational
    exact: Optional[ExtendedRational]
    truncation_stage: int
    note: str = ""

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"bracket inverted: {self.lower} > {self.upper}")
        if self.exact is not None and not (self.lower <= self.exact <= self.upper):
            raise ValueError("exact value outside its own bracket")
        if self.exact is None and self.lower == self.upper:
            object.__setattr__(self, "exact", self.lower)
            object.__setattr__(self, "note", self.note or "")

    @property
    def is_exact(self) -> bool:
        return self.exact is not None

    def scaled(self, factor: ExtendedRational, note: str = "") -> "CertifiedValue":
        return CertifiedValue(
            self.lower * factor,
            self.upper * factor,
            None if self.exact is None else self.exact * factor,
            self.truncation_stage,
            note or self.note,
        )

    def describe(self) -> str:
        if self.is_exact:
            return f"{self.exact} (exact)"
        return f"[{self.lower}, {self.upper}]" + (f" ({self.note})" if self.note else "")


def _wrap_interval(iv: Interval, partial: Fraction, stage: int, note: str = "") -> CertifiedValue:
    return CertifiedValue(
        ExtendedRational(partial * iv.lower),
        ExtendedRational(partial * iv.upper),
        None if iv.exact is None else ExtendedRational(partial * iv.exact),
        stage,
        note,
    )


def gamma(sys: VilladsenSystem, depth: int) -> CertifiedValue:
    """The limit of prod c_i/(n_i+k_i): the fraction of the algebra carried by
    coordinate projections.

    The partial product at ``depth`` is an upper bound (each factor is < 1);
    the lower bound comes from the family's certified coordinate tail, and the
    bracket collapses to an exact value for telescoping families.
    """
    last = depth if sys.family is not None else min(depth, len(sys.prefix))
    partial = ratio_product((sys.c(i), sys.term(i)) for i in range(1, last + 1))
    if sys.family is not None:
        tail = sys.family.coord_tail(last + 1)
        return _wrap_interval(tail, partial, last)
    return CertifiedValue(
        ExtendedRational(0), ExtendedRational(partial), None, last, "bracket loose"
    )


def gamma_partial(sys: VilladsenSystem, depth: int) -> Fraction:
    """The bare partial product at ``depth`` (monotone nonincreasing)."""
    return ratio_product((sys.c(i), sys.term(i)) for i in range(1, depth + 1))


def mdim_upper(sys: VilladsenSystem, depth: int) -> CertifiedValue:
    """dim(X)/n0 times gamma, with inf * 0 = 0; an infinite-dimensional seed
    with gamma bracketed away from zero yields the infinity symbol."""
    g = gamma(sys, depth)
    dim = sys.seed.dim
    if dim is not None:
        return g.scaled(ExtendedRational(Fraction(dim, sys.n0)))
    if g.exact is not None and g.exact == 0:
        zero = ExtendedRational(0)
        return CertifiedValue(zero, zero, zero, g.truncation_stage)
    if g.lower > 0:
        return CertifiedValue(INF, INF, INF, g.truncation_stage)
    return CertifiedValue(
        ExtendedRational(0), INF, None, g.truncation_stage,
        "infinite-dimensional seed with an unresolved gamma bracket",
    )


def radius_of_comparison(sys: VilladsenSystem, depth: int) -> CertifiedValue:
    """Half the mean-dimension bound; exact equality for solid seeds, an upper
    bound (flagged) otherwise.  A zero upper bound collapses to exact zero."""
    md = mdim_upper(sys, depth)
    half = md.scaled(ExtendedRational(Fraction(1, 2)))
    if sys.seed.solid:
        return half
    if half.upper == 0:
        zero = ExtendedRational(0)
        return CertifiedValue(zero, zero, zero, half.truncation_stage)
    return CertifiedValue(
        ExtendedRational(0), half.upper, None, half.truncation_stage,
        "upper bound (non-solid seed)",
    )


def asymptotic_checks(sys: VilladsenSystem, i: int, j: int) -> tuple[Fraction, Fraction]:
    """(prod_{l=i}^{i+j} c_l/n_l, fraction of multiplicity-one coordinate entries
    of the composite over stages i..i+j).

    The multiplicity of a composite coordinate index is the product of the
    per-stage multiplicities of its digits, so the number of multiplicity-one
    indices factorizes as the product of per-stage counts; the equality with
    the materialized composite is exercised in the tests.
    """
    cn = ratio_product((sys.c(l), sys.n(l)) for l in range(i, i + j + 1))
    ones = 1
    n_prod = 1
    for l in range(i, i + j + 1):
        st = sys.counts(l)
        ones *= st.mult_one_count
        n_prod *= st.n
    return cn, Fraction(ones, n_prod)


def rc_realization(r) -> VilladsenSystem:
    """A system whose radius of comparison is exactly ``r`` (rational >= 0 or INF).

    For finite positive r: seed the smallest even-dimensional cube above 2r
    and use the halving-ratio family with target 2r/d, all multiplicities one.
    Zero and infinity get the designated degenerate seeds.
    """
    if isinstance(r, ExtendedRational) and r.is_infinite:
        return VilladsenSystem(
            seed=hilbert_cube(), n0=1, family=SquaresFamily(2), name="rc-infinity"
        )
    r = Fraction(r)
    if r < 0:
        raise ValueError("radius of comparison cannot be negative")
    if r == 0:
        return VilladsenSystem(
            seed=cantor(), n0=1, family=HalvingFamily(1, 2), name="rc-zero"
        )
    two_r = 2 * r
    d = int(two_r) + 1  # smallest integer strictly above 2r
    if d % 2:
        d += 1
    s = two_r / d
    return VilladsenSystem(
        seed=cube(d),
        n0=1,
        family=HalvingFamily(s.numerator, s.denominator),
        name=f"rc-{format_ratio(r)}".replace("/", "-"),
    )


# ---------------------------------------------------------------------------
# the lower-bound witness chain


@dataclass(frozen=True)
class ChainEntry:
    name: str
    left: Fraction
    relation: str  # one of < <= > >=
    right: Fraction

    @property
    def verdict(self) -> bool:
        if self.relation == "<":
            return self.left < self.right
        if self.relation == "<=":
            return self.left <= self.right
        if self.relation == ">":
            return self.left > self.right
        if self.relation == ">=":
            return self.left >= self.right
        raise ValueError(f"unknown relation {self.relation!r}")

    def describe(self) -> str:
        mark = "ok" if self.verdict else "FAIL"
        return f"{self.name}: {format_ratio(self.left)} {self.relation} {format_ratio(self.right)} [{mark}]"


@dataclass(frozen=True)
class RcWitness:
    """One run of the comparison-failure argument, every inequality exact.

    The sphere dimension d sits in the window [D-2, D-1] with D the ambient
    dimension at the chosen stage; the obstruction is used purely as the rank
    bound: trivial sub-bundles leave at least d/2 of the rank untouched.
    """

    epsilon: Fraction
    stage: int
    sphere_dim: int
    inequality_chain: tuple[ChainEntry, ...]
    trivial_subbundle_rank_bound: Fraction
    conclusion: Fraction  # certified floor for the radius of comparison

    @property
    def all_verified(self) -> bool:
        return all(entry.verdict for entry in self.inequality_chain)


@dataclass(frozen=True)
class RcWitnessResult:
    applicable: bool
    witness: Optional[RcWitness]
    reason: str = ""


def rc_lower_witness(
    sys: VilladsenSystem, epsilon: Fraction, depth_bound: int = 256
) -> RcWitnessResult:
    """Select a stage and an even sphere dimension, then verify the whole
    displayed chain of the lower-bound argument with exact rationals.

    Applicable to solid finite-dimensional seeds whose gamma is exact (or
    bracketed away from zero; the bracket's lower end is then used throughout,
    which only weakens the certified conclusion)."""
    epsilon = Fraction(epsilon)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    dim = sys.seed.dim
    if dim is None or dim == 0:
        return RcWitnessResult(False, None, f"seed dimension {dim}: no sphere to embed")
    if not sys.seed.solid:
        return RcWitnessResult(False, None, "seed is not solid")
    g = gamma(sys, min(depth_bound, 64))
    if g.exact is not None:
        if g.exact == 0:
            return RcWitnessResult(False, None, "gamma is exactly zero: the bound is vacuous")
        gam = g.exact.finite
    elif g.lower > 0:
        gam = g.lower.finite
    else:
        return RcWitnessResult(False, None, "gamma not bracketed away from zero")

    n0 = sys.n0
    target = gam * dim / (2 * n0)

    chosen = None
    m_i, d_i = sys.stage_dims(1)
    partial_prev = Fraction(1)  # partial coordinate product through stage i-1
    for i in range(2, depth_bound + 1):
        st = sys.counts(i - 1)
        m_i *= st.n + st.k
        d_i *= st.c
        partial_prev *= Fraction(st.c, st.n + st.k)
        # tail window: all deeper partials stay within epsilon of this one
        window_ok = Fraction(dim, 2 * n0) * (partial_prev - gam) <= epsilon
        floor_ok = Fraction(d_i * dim - 2, 2 * m_i) > target - epsilon
        if window_ok and floor_ok and d_i * dim - 2 >= 2:
            chosen = (i, m_i, d_i, partial_prev)
            break
    if chosen is None:
        return RcWitnessResult(
            False, None, f"no admissible stage within depth bound {depth_bound}"
        )
    i, m_i, d_i, p_prev = chosen

    ambient = d_i * dim
    d = ambient - 1 if (ambient - 1) % 2 == 0 else ambient - 2

    j = i + 1
    st_i = sys.counts(i)
    window_nk = st_i.n + st_i.k
    window_c = st_i.c
    m_j = m_i * window_nk
    p_j = p_prev * Fraction(window_c, window_nk)

    rank_bound = Fraction(d, 2) * (window_nk - window_c)
    rho = Fraction(5, 2) * epsilon  # trace of the competing trivial projection

    chain = (
        ChainEntry("sphere-dim-lower", Fraction(ambient - 2), "<=", Fraction(d)),
        ChainEntry("sphere-dim-upper", Fraction(d), "<=", Fraction(ambient - 1)),
        ChainEntry("sphere-dim-positive", Fraction(0), "<", Fraction(d)),
        ChainEntry(
            "projection-trace-floor", Fraction(ambient - 2, 2 * m_i), "<=", Fraction(d, 2 * m_i)
        ),
        ChainEntry("trace-floor-beats-target", target - epsilon, "<", Fraction(ambient - 2, 2 * m_i)),
        ChainEntry("tail-window", Fraction(dim, 2 * n0) * (p_prev - gam), "<=", epsilon),
        ChainEntry(
            "rank-bound-vs-ambient",
            rank_bound,
            "<=",
            Fraction(dim, 2) * (d_i * window_nk - d_i * window_c),
        ),
        ChainEntry(
            "rank-bound-window-identity",
            Fraction(dim, 2) * d_i * (window_nk - window_c),
            "<=",
            Fraction(dim, 2 * n0) * (p_prev - p_j) * m_j,
        ),
        ChainEntry(
            "rank-bound-small", Fraction(dim, 2 * n0) * (p_prev - p_j) * m_j, "<", epsilon * m_j
        ),
        ChainEntry("competing-trace-above", 2 * epsilon, "<", rho),
        ChainEntry("competing-trace-below", rho, "<", 3 * epsilon),
        ChainEntry("gap", rho + (target - 4 * epsilon), "<", Fraction(ambient - 2, 2 * m_i)),
        ChainEntry("competing-rank-exceeds-bound", rank_bound, "<", 2 * epsilon * m_j),
    )
    witness = RcWitness(
        epsilon=epsilon,
        stage=i,
        sphere_dim=d,
        inequality_chain=chain,
        trivial_subbundle_rank_bound=rank_bound,
        conclusion=target - 4 * epsilon,
    )
    return RcWitnessResult(True, witness)

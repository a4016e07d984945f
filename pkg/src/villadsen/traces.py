"""Trace-simplex machinery at measure level.

Tracial states of the limit are inverse sequences of probability measures on
the stage spaces, linked by the coordinate-averaging pushforward.  Everything
here is finitely supported with rational weights, and claims quantified over
all continuous functions become claims over a supplied finite family of
sampled functions with declared Lipschitz moduli.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import ceil
from typing import Optional, Sequence

from .system import (
    MapDescriptor,
    Point,
    VilladsenSystem,
    diagonal_point,
    point_arity,
    project_point,
)
from .util import format_ratio


class MissingSampleError(KeyError):
    """A sampled function was evaluated off its table."""


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely supported probability measure with exact rational weights."""

    arity: int
    entries: tuple[tuple[Point, Fraction], ...]

    def __post_init__(self):
        total = Fraction(0)
        for p, w in self.entries:
            if w <= 0:
                raise ValueError("weights must be positive")
            total += w
        if total != 1:
            raise ValueError(f"weights sum to {total}, not 1")

    @staticmethod
    def from_pairs(arity: int, pairs: Sequence[tuple[Point, Fraction]]) -> "DiscreteMeasure":
        merged: dict[Point, Fraction] = {}
        for p, w in pairs:
            merged[p] = merged.get(p, Fraction(0)) + Fraction(w)
        entries = tuple(sorted(merged.items(), key=lambda it: it[0].coords))
        return DiscreteMeasure(arity, entries)

    @staticmethod
    def dirac(arity: int, p: Point) -> "DiscreteMeasure":
        return DiscreteMeasure(arity, ((p, Fraction(1)),))

    @property
    def support(self) -> tuple[Point, ...]:
        return tuple(p for p, _ in self.entries)

    @property
    def weights(self) -> tuple[Fraction, ...]:
        return tuple(w for _, w in self.entries)

    def mass(self) -> Fraction:
        return sum(self.weights, Fraction(0))

    def integrate(self, f: "SampledFunction") -> Fraction:
        return sum((w * f(p) for p, w in self.entries), Fraction(0))

    def describe(self) -> str:
        return " + ".join(f"{format_ratio(w)}*d[{p.coords}]" for p, w in self.entries)


@dataclass(frozen=True)
class SampledFunction:
    """A finite evaluation table standing in for a continuous function.

    The declared Lipschitz constant (for the sup metric on the cube model) and
    sup-norm bound are part of the data; the table must respect the bound.
    """

    values: tuple[tuple[Point, Fraction], ...]
    lipschitz: Fraction
    sup_norm: Fraction
    name: str = "f"

    def __post_init__(self):
        if self.lipschitz < 0 or self.sup_norm < 0:
            raise ValueError("moduli must be nonnegative")
        for _, v in self.values:
            if abs(v) > self.sup_norm:
                raise ValueError(f"table value {v} exceeds declared sup-norm {self.sup_norm}")

    @staticmethod
    def from_table(
        table: dict[Point, Fraction],
        lipschitz: Fraction,
        sup_norm: Optional[Fraction] = None,
        name: str = "f",
    ) -> "SampledFunction":
        if sup_norm is None:
            sup_norm = max((abs(v) for v in table.values()), default=Fraction(0))
        items = tuple(sorted(table.items(), key=lambda it: it[0].coords))
        return SampledFunction(items, Fraction(lipschitz), Fraction(sup_norm), name)

    def __call__(self, p: Point) -> Fraction:
        for q, v in self.values:
            if q == p:
                return v
        raise MissingSampleError(f"{self.name} has no sample at {p.coords}")

    def table(self) -> dict[Point, Fraction]:
        return dict(self.values)


def theta_pushforward(sys: VilladsenSystem, i: int, mu: DiscreteMeasure) -> DiscreteMeasure:
    """Push a measure on X^{d_{i+1}} down to X^{d_i}.

    A point splits into its c_i blocks; block t receives the weight fraction
    s_{i,t}/n_i.  Mass is preserved exactly.
    """
    st = sys.counts(i)
    _, d_i = sys.stage_dims(i)
    _, d_next = sys.stage_dims(i + 1)
    if mu.arity != d_next:
        raise ValueError(f"measure lives on arity {mu.arity}, stage {i+1} has {d_next}")
    pairs: list[tuple[Point, Fraction]] = []
    for p, w in mu.entries:
        if point_arity(sys.seed, p) != d_next:
            raise ValueError("support point arity mismatch")
        for t in range(1, st.c + 1):
            pairs.append((project_point(sys.seed, p, t, d_i), w * Fraction(st.s_at(t), st.n)))
    return DiscreteMeasure.from_pairs(d_i, pairs)


def trace_functional(phi: MapDescriptor, h: SampledFunction, x: Point) -> Fraction:
    """The normalized trace of phi(h) at the point x of the target stage space.

    Averages h over the projected coordinates and the evaluation points with
    their multiplicities; needs h sampled at all of them.
    """
    total = phi.total
    acc = Fraction(0)
    block = len(x.coords) // phi.block_count
    for idx, mult in phi.coords.items():
        lo = (idx - 1) * block
        acc += mult * h(Point(x.coords[lo : lo + block]))
    for p, mult in phi.evals.items():
        acc += mult * h(p)
    return acc / total


def trace_distance_bound(sys: VilladsenSystem, i: int, j: int) -> Fraction:
    """The exact window estimate 2(1 - prod_{l=i}^{i+j-1} n_l/(n_l+k_l))."""
    prod = Fraction(1)
    for l in range(i, i + j):
        st = sys.counts(l)
        prod *= Fraction(st.n, st.n + st.k)
    return 2 * (1 - prod)


def largest_remainder_counts(weights: Sequence[Fraction], n: int) -> list[int]:
    """Deterministic apportionment of n slots proportional to the weights.

    Floors first, then hands leftover slots to the largest fractional parts
    (ties broken by position).  Minimizes the L1 gap among integer splits.
    """
    shares = [Fraction(w) * n for w in weights]
    counts = [int(sh) for sh in shares]
    rems = [sh - c for sh, c in zip(shares, counts)]
    leftover = n - sum(counts)
    order = sorted(range(len(weights)), key=lambda t: (-rems[t], t))
    for t in order[:leftover]:
        counts[t] += 1
    return counts


class DiscretizationError(ValueError):
    def __init__(self, msg: str, achieved: Fraction):
        super().__init__(msg)
        self.achieved = achieved


def required_sample_count(F: Sequence[SampledFunction], eps: Fraction, support_size: int) -> int:
    """The computable floor on n: ceil(max Lipschitz * diameter / eps) * support size."""
    max_l = max((f.lipschitz for f in F), default=Fraction(0))
    return ceil(max_l / Fraction(eps)) * support_size if max_l > 0 else 1


def discretize(
    mu: DiscreteMeasure, F: Sequence[SampledFunction], n: int, eps: Fraction
) -> list[Point]:
    """n points whose empirical average is within eps of mu on every f in F.

    Uses largest-remainder apportionment of the weights; the discrepancy is
    recomputed independently and an infeasible n is reported with the value
    achieved.
    """
    eps = Fraction(eps)
    counts = largest_remainder_counts(mu.weights, n)
    points: list[Point] = []
    for (p, _), c in zip(mu.entries, counts):
        points.extend([p] * c)
    worst = Fraction(0)
    for f in F:
        emp = sum((f(p) for p in points), Fraction(0)) / n
        worst = max(worst, abs(mu.integrate(f) - emp))
    if worst >= eps:
        raise DiscretizationError(
            f"n = {n} cannot meet eps = {eps}: achieved discrepancy {worst}", worst
        )
    return points


def extreme_trace(
    sys: VilladsenSystem, i: int, x: Point, horizon: int
) -> list[DiscreteMeasure]:
    """The extreme trace through the point x at stage i, as measures at stages
    1..horizon: pushforwards of the Dirac below stage i, Diracs at diagonal
    repetitions above it."""
    _, d_i = sys.stage_dims(i)
    if point_arity(sys.seed, x) != d_i:
        raise ValueError(f"point arity {point_arity(sys.seed, x)} != d_{i} = {d_i}")
    out: dict[int, DiscreteMeasure] = {i: DiscreteMeasure.dirac(d_i, x)}
    for l in range(i - 1, 0, -1):
        out[l] = theta_pushforward(sys, l, out[l + 1])
    current = x
    for l in range(i, horizon):
        st = sys.counts(l)
        current = diagonal_point(sys.seed, current, st.c)
        _, d_next = sys.stage_dims(l + 1)
        out[l + 1] = DiscreteMeasure.dirac(d_next, current)
    return [out[l] for l in range(1, horizon + 1)]


class ApproximationError(RuntimeError):
    def __init__(self, msg: str, threshold: str):
        super().__init__(msg)
        self.threshold = threshold


def _coordinate_tail_deficiency(sys: VilladsenSystem, i: int) -> Optional[Fraction]:
    """Certified upper bound for 1 - lim_j prod_{l=i}^{i+j} c_l/n_l, if provable."""
    if sys.family is None:
        return None
    if i <= len(sys.prefix):
        # explicit overrides contribute their own factors
        head = Fraction(1)
        for l in range(i, len(sys.prefix) + 1):
            st = sys.counts(l)
            head *= Fraction(st.c, st.n)
        tail = sys.family.cn_tail(len(sys.prefix) + 1)
        return 1 - head * tail.lower
    return 1 - sys.family.cn_tail(i).lower


def _mult_one_deficiency(sys: VilladsenSystem, i: int) -> Optional[Fraction]:
    if sys.family is None:
        return None
    if i <= len(sys.prefix):
        ones = Fraction(1)
        for l in range(i, len(sys.prefix) + 1):
            st = sys.counts(l)
            ones *= Fraction(st.mult_one_count, st.n)
        return 1 - ones * sys.family.mult_one_tail(len(sys.prefix) + 1).lower
    return 1 - sys.family.mult_one_tail(i).lower


@dataclass(frozen=True)
class ApproximationStep:
    name: str
    value: Fraction
    budget: Fraction

    @property
    def verdict(self) -> bool:
        return self.value < self.budget


def approximate_by_extreme(
    sys: VilladsenSystem,
    mu: DiscreteMeasure,
    stage_index: int,
    F: Sequence[SampledFunction],
    eps: Fraction,
    search_bound: int = 32,
) -> tuple[Point, list[ApproximationStep]]:
    """Find a point whose extreme trace approximates the given measure.

    Selects a working stage where both asymptotic thresholds clear eps/3,
    discretizes the (diagonally lifted) measure into one point per coordinate
    slot, and returns the concatenated point together with the three-step
    inequality chain of the argument, each step evaluated exactly: the
    discretization error, the multiplicity-reweighting error, and the
    coordinate-versus-size normalization error.  Their budgets are eps/3
    verbatim.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    for f in F:
        if f.sup_norm > 1:
            raise ValueError(f"{f.name}: test functions must lie in the unit ball")
    third = eps / 3

    i0 = None
    for i in range(stage_index, stage_index + search_bound + 1):
        cn_def = _coordinate_tail_deficiency(sys, i)
        m1_def = _mult_one_deficiency(sys, i)
        if cn_def is None or m1_def is None:
            raise ApproximationError(
                "no closed form for the asymptotic thresholds", "coordinate-ratio"
            )
        if cn_def >= third:
            continue
        if m1_def >= third:
            continue
        i0 = i
        break
    if i0 is None:
        cn_def = _coordinate_tail_deficiency(sys, stage_index)
        name = "coordinate-ratio" if (cn_def is None or cn_def >= third) else "multiplicity-one"
        raise ApproximationError(
            f"thresholds unreachable within search bound {search_bound}", name
        )

    work = mu
    _, d_here = sys.stage_dims(stage_index)
    for l in range(stage_index, i0):
        st = sys.counts(l)
        _, d_next = sys.stage_dims(l + 1)
        work = DiscreteMeasure.from_pairs(
            d_next,
            [(diagonal_point(sys.seed, p, st.c), w) for p, w in work.entries],
        )

    n_req = required_sample_count(F, third, len(work.support))
    j0 = None
    c_prod = 1
    n_prod = 1
    s_windows: list = []
    for j in range(0, search_bound + 1):
        st = sys.counts(i0 + j)
        c_prod *= st.c
        n_prod *= st.n
        s_windows.append(st)
        if c_prod >= n_req:
            j0 = j
            break
    if j0 is None:
        raise ApproximationError(
            f"coordinate count never reaches the sample floor {n_req}", "sample-count"
        )

    points = discretize(work, F, c_prod, third)
    x_mu = Point(tuple(v for p in points for v in p.coords))

    # composite multiplicities of the window, by mixed-radix digits
    def slot_mult(t: int) -> int:
        mult = 1
        rest = t - 1
        for st in s_windows:
            rest, digit = divmod(rest, st.c)
            mult *= st.s_at(digit + 1)
        return mult

    steps: list[ApproximationStep] = []
    for f in F:
        plain = sum((f(p) for p in points), Fraction(0))
        weighted = Fraction(0)
        for t, p in enumerate(points, start=1):
            weighted += slot_mult(t) * f(p)
        disc = abs(work.integrate(f) - plain / c_prod)
        reweight = abs(weighted / n_prod - plain / n_prod)
        renorm = abs(plain / n_prod - plain / c_prod)
        steps.append(ApproximationStep(f"discretization[{f.name}]", disc, third))
        steps.append(ApproximationStep(f"multiplicity-one[{f.name}]", reweight, third))
        steps.append(ApproximationStep(f"normalization[{f.name}]", renorm, third))
        total = disc + reweight + renorm
        steps.append(ApproximationStep(f"total[{f.name}]", total, eps))
    return x_mu, steps


def simplex_tag(sys: VilladsenSystem) -> str:
    """One of Singleton, BauerOverSeed, Poulsen, Unknown.

    BauerOverSeed needs a family proof that every stage has a single
    coordinate projection; Poulsen needs the closed-form coordinate ratio
    condition plus a non-singleton seed.
    """
    if sys.seed.is_singleton:
        return "Singleton"
    fam = sys.family
    if fam is None:
        return "Unknown"
    if fam.single_projection and all(sys.c(i) == 1 for i in range(1, len(sys.prefix) + 1)):
        return "BauerOverSeed"
    cn = fam.cn_tail(1)
    prefix_ok = all(sys.counts(i).all_mult_one for i in range(1, len(sys.prefix) + 1))
    if cn.exact == 1 and prefix_ok:
        return "Poulsen"
    return "Unknown"

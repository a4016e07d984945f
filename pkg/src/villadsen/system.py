"""Construction data for diagonal AH inductive systems and the composite-map calculus.

A system is a seed space, a unit size n0, and a stage sequence: each stage i
contributes c_i coordinate projections with multiplicities (s_i,1..s_i,c_i)
and k_i point evaluations at points of X^{d_i}.  Stage sequences are a finite
explicit prefix plus an optional closed-form family for the tail; every
operation takes explicit stage bounds, since the limit object itself is
infinite.

Connecting maps are recorded as multisets (diagonal maps are permutation
equivalent exactly when their multisets agree).  Projection-index composition
is purely arithmetic, row-major: index_compose(b, a) = (b-1)*blocks(first) + a.
Any fixed convention works; this one makes every size law checkable by
integer arithmetic alone, including for bridge maps between different systems
where the dimension ratio is only a floor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .families import Family, Interval, StageCounts
from .supernatural import TailRule

COMPOSITE_INDEX_CAP = 250_000
POINT_COORD_CAP = 50_000


class StageRangeError(IndexError):
    """Requested stage beyond what the system can generate."""


class SizeCapError(ValueError):
    """An explicit multiset or point would be astronomically large; use summaries."""


# ---------------------------------------------------------------------------
# seed spaces and points


@dataclass(frozen=True)
class SeedSpace:
    """The compact base space X: a cube power, the Hilbert cube, the Cantor set,
    or an explicit finite metric space."""

    kind: str  # cube | hilbert_cube | cantor | finite_metric
    m: int = 1  # cube exponent (coordinates per X factor)
    labels: tuple[str, ...] = ()
    distance_table: tuple[tuple[Fraction, ...], ...] = ()

    def __post_init__(self):
        if self.kind not in ("cube", "hilbert_cube", "cantor", "finite_metric"):
            raise ValueError(f"unknown seed kind {self.kind!r}")
        if self.kind == "cube" and self.m < 1:
            raise ValueError("cube exponent must be >= 1")
        if self.kind == "finite_metric":
            n = len(self.labels)
            t = self.distance_table
            if len(t) != n or any(len(row) != n for row in t):
                raise ValueError("distance table shape mismatch")
            for i in range(n):
                if t[i][i] != 0:
                    raise ValueError("distance table diagonal must be zero")
                for j in range(n):
                    if t[i][j] != t[j][i]:
                        raise ValueError("distance table must be symmetric")
                    if t[i][j] < 0:
                        raise ValueError("distances must be nonnegative")
                    for k in range(n):
                        if t[i][j] > t[i][k] + t[k][j]:
                            raise ValueError("triangle inequality fails")

    @property
    def dim(self):  # int or None for infinite
        if self.kind == "cube":
            return self.m
        if self.kind == "hilbert_cube":
            return None
        return 0

    @property
    def solid(self) -> bool:
        # A zero-dimensional Euclidean ball is a point, so the zero-dimensional
        # seeds count as solid; cubes and the Hilbert cube contain balls of
        # every relevant dimension.
        return True

    @property
    def connected(self) -> bool:
        if self.kind in ("cube", "hilbert_cube"):
            return True
        if self.kind == "finite_metric":
            return len(self.labels) == 1
        return False

    @property
    def k_contractible(self) -> bool:
        if self.kind in ("cube", "hilbert_cube"):
            return True
        if self.kind == "finite_metric":
            return len(self.labels) == 1
        return False

    @property
    def is_singleton(self) -> bool:
        return self.kind == "finite_metric" and len(self.labels) == 1

    @property
    def diameter(self) -> Fraction:
        if self.kind in ("cube", "hilbert_cube", "cantor"):
            return Fraction(1)
        table = self.distance_table
        return max((d for row in table for d in row), default=Fraction(0))

    def describe(self) -> str:
        if self.kind == "cube":
            return f"cube({self.m})"
        if self.kind == "finite_metric":
            return f"finite_metric({len(self.labels)} points)"
        return self.kind


def cube(m: int) -> SeedSpace:
    return SeedSpace("cube", m=m)


def hilbert_cube() -> SeedSpace:
    return SeedSpace("hilbert_cube")


def cantor() -> SeedSpace:
    return SeedSpace("cantor")


def finite_metric(labels: Sequence[str], table: Sequence[Sequence[Fraction]]) -> SeedSpace:
    return SeedSpace(
        "finite_metric",
        labels=tuple(labels),
        distance_table=tuple(tuple(Fraction(x) for x in row) for row in table),
    )


@dataclass(frozen=True)
class Point:
    """A point of X^d.

    For cube seeds ``coords`` is the flat tuple of rationals in [0,1] of
    length m*d; for the Cantor set a tuple of d bit strings; for a finite
    metric space a tuple of d label indices; for the Hilbert cube a tuple of
    d finite rational tuples (implied zero tails).
    """

    coords: tuple

    def __len__(self) -> int:
        return len(self.coords)


def point_arity(seed: SeedSpace, p: Point) -> int:
    if seed.kind == "cube":
        if len(p.coords) % seed.m:
            raise ValueError(f"{len(p.coords)} coordinates do not fill cube({seed.m}) blocks")
        return len(p.coords) // seed.m
    return len(p.coords)


def project_point(seed: SeedSpace, p: Point, index: int, target_arity: int) -> Point:
    """The ``index``-th block of ``target_arity`` X-factors of p (1-based)."""
    width = target_arity * (seed.m if seed.kind == "cube" else 1)
    lo = (index - 1) * width
    if lo + width > len(p.coords):
        raise ValueError(f"block {index} of width {width} outside point of size {len(p.coords)}")
    return Point(p.coords[lo : lo + width])


def diagonal_point(seed: SeedSpace, p: Point, copies: int) -> Point:
    if copies * len(p.coords) > POINT_COORD_CAP:
        raise SizeCapError("diagonal repetition exceeds the explicit-point cap")
    return Point(p.coords * copies)


def point_distance(seed: SeedSpace, p: Point, q: Point) -> Fraction:
    """Sup metric over X factors; the factor metric depends on the seed kind."""
    if len(p.coords) != len(q.coords):
        raise ValueError("points of different arity")
    if seed.kind in ("cube", "hilbert_cube"):
        best = Fraction(0)
        for a, b in zip(p.coords, q.coords):
            if isinstance(a, tuple):  # hilbert blocks
                la, lb = len(a), len(b)
                for t in range(max(la, lb)):
                    x = a[t] if t < la else Fraction(0)
                    y = b[t] if t < lb else Fraction(0)
                    best = max(best, abs(x - y))
            else:
                best = max(best, abs(a - b))
        return best
    if seed.kind == "finite_metric":
        return max(
            (seed.distance_table[a][b] for a, b in zip(p.coords, q.coords)),
            default=Fraction(0),
        )
    # cantor: 2^-(common prefix length)
    best = Fraction(0)
    for a, b in zip(p.coords, q.coords):
        if a == b:
            continue
        lcp = 0
        for x, y in zip(a, b):
            if x != y:
                break
            lcp += 1
        best = max(best, Fraction(1, 2**lcp))
    return best


# ---------------------------------------------------------------------------
# stage data and systems


@dataclass(frozen=True)
class StageData:
    """One stage: counts plus (for explicit stages) concrete evaluation points."""

    counts: StageCounts
    points: Optional[tuple[Point, ...]] = None

    def __post_init__(self):
        if self.counts.c < 0 or self.counts.k < 0:
            raise ValueError("negative stage counts are malformed")
        if self.counts.s_explicit is not None and any(v < 0 for v in self.counts.s_explicit):
            raise ValueError("negative multiplicities are malformed")
        if self.points is not None and len(self.points) != self.counts.k:
            raise ValueError(f"{len(self.points)} points recorded for k = {self.counts.k}")

    @property
    def c(self) -> int:
        return self.counts.c

    @property
    def s(self) -> tuple[int, ...]:
        return self.counts.s

    @property
    def k(self) -> int:
        return self.counts.k

    @property
    def n(self) -> int:
        return self.counts.n


def stage(c: int, s: Sequence[int], k: int, points: Optional[Sequence[Point]] = None) -> StageData:
    return StageData(
        StageCounts(c, k, tuple(int(v) for v in s)),
        tuple(points) if points is not None else None,
    )


def _mix(*parts: int) -> int:
    """Deterministic 24-bit integer mix (no reliance on Python hash)."""
    h = 0x811C9DC5
    for part in parts:
        x = part & 0xFFFFFFFF
        while True:
            h ^= x & 0xFF
            h = (h * 0x01000193) & 0xFFFFFFFF
            x >>= 8
            if not x:
                break
    return h & 0xFFFFFF


def _bitrev24(x: int) -> int:
    out = 0
    for _ in range(24):
        out = (out << 1) | (x & 1)
        x >>= 1
    return out


@dataclass(frozen=True)
class VilladsenSystem:
    """Seed space + unit size + stage sequence (explicit prefix, family tail).

    The evaluation-point generator is deterministic from ``eval_seed``: axis
    values are bit-reversed hashes, exact dyadic rationals.  Explicit stages
    may carry their own points, which take precedence.
    """

    seed: SeedSpace
    n0: int
    prefix: tuple[StageData, ...] = ()
    family: Optional[Family] = None
    eval_seed: int = 1
    name: str = "system"

    def __post_init__(self):
        if self.n0 < 1:
            raise ValueError("n0 must be >= 1")

    # --- stage access ------------------------------------------------------

    def has_stage(self, i: int) -> bool:
        return i >= 1 and (self.family is not None or i <= len(self.prefix))

    def explicit_stage_count(self) -> int:
        return len(self.prefix)

    def stage(self, i: int) -> StageData:
        if i < 1:
            raise StageRangeError(f"stage indices start at 1, got {i}")
        if i <= len(self.prefix):
            return self.prefix[i - 1]
        if self.family is None:
            raise StageRangeError(
                f"stage {i} beyond the {len(self.prefix)} explicit stages (no family tail)"
            )
        return StageData(self.family.stage(i))

    def counts(self, i: int) -> StageCounts:
        return self.stage(i).counts

    def c(self, i: int) -> int:
        return self.counts(i).c

    def n(self, i: int) -> int:
        return self.counts(i).n

    def k(self, i: int) -> int:
        return self.counts(i).k

    def term(self, i: int) -> int:
        st = self.counts(i)
        return st.n + st.k

    def k0_tail_rule(self) -> Optional[TailRule]:
        return self.family.tail_rule() if self.family is not None else None

    # --- dimensions ---------------------------------------------------------

    def stage_dims(self, i: int) -> tuple[int, int]:
        """(matrix size m_i, seed power d_i); m_1 = n0 and d_1 = 1."""
        if i < 1:
            raise StageRangeError(f"stage indices start at 1, got {i}")
        m = self.n0
        d = 1
        for l in range(1, i):
            st = self.counts(l)
            m *= st.n + st.k
            d *= st.c
        return m, d

    # --- evaluation points --------------------------------------------------

    def eval_axis(self, i: int, t: int, axis: int) -> Fraction:
        """Coordinate ``axis`` (0-based) of the t-th evaluation point at stage i."""
        st = self.stage(i)
        if st.points is not None:
            return st.points[t - 1].coords[axis]
        return Fraction(_bitrev24(_mix(self.eval_seed, i, t, axis)), 1 << 24)

    def eval_points(self, i: int) -> tuple[Point, ...]:
        """Materialize the stage-i evaluation set E_i in X^{d_i}."""
        st = self.stage(i)
        if st.points is not None:
            return st.points
        _, d = self.stage_dims(i)
        if self.seed.kind == "cube":
            width = d * self.seed.m
            if width * st.k > POINT_COORD_CAP:
                raise SizeCapError(
                    f"stage {i} points have {width} coordinates each; beyond the explicit cap"
                )
            return tuple(
                Point(tuple(self.eval_axis(i, t, a) for a in range(width)))
                for t in range(1, st.k + 1)
            )
        if self.seed.kind == "hilbert_cube":
            if d * st.k > POINT_COORD_CAP:
                raise SizeCapError("too many blocks for explicit hilbert-cube points")
            return tuple(
                Point(tuple((self.eval_axis(i, t, a),) for a in range(d)))
                for t in range(1, st.k + 1)
            )
        if self.seed.kind == "cantor":
            return tuple(
                Point(tuple(format(_mix(self.eval_seed, i, t, a) & 0xFF, "08b") for a in range(d)))
                for t in range(1, st.k + 1)
            )
        npts = len(self.seed.labels)
        return tuple(
            Point(tuple(_mix(self.eval_seed, i, t, a) % npts for a in range(d)))
            for t in range(1, st.k + 1)
        )

    # --- shape comparison ----------------------------------------------------

    def same_shape(self, other: "VilladsenSystem", depth: int) -> bool:
        """Same seed, unit size, coordinate counts, and multiplicities through ``depth``.

        Beyond the checked depth, family identity (up to evaluation counts) is
        required when both systems have family tails.
        """
        if self.seed != other.seed or self.n0 != other.n0:
            return False
        for i in range(1, depth + 1):
            if self.has_stage(i) != other.has_stage(i):
                return False
            if not self.has_stage(i):
                break
            a, b = self.counts(i), other.counts(i)
            if a.c != b.c:
                return False
            if (a.s_explicit or b.s_explicit) and a.s != b.s:
                return False
        fa, fb = self.family, other.family
        if (fa is None) != (fb is None):
            return False
        if fa is not None and (type(fa) is not type(fb) or fa.params() != fb.params()):
            return False
        return True

    def describe(self) -> str:
        fam = self.family.describe() if self.family else f"{len(self.prefix)} explicit stages"
        return f"{self.name}: seed {self.seed.describe()}, n0={self.n0}, {fam}"


# ---------------------------------------------------------------------------
# map descriptors


@dataclass(frozen=True)
class MapDescriptor:
    """A unital diagonal homomorphism between stages, as multisets.

    ``coords`` maps projection indices (1-based, within ``block_count``) to
    multiplicities; ``evals`` maps points of the source-stage space to
    multiplicities.  The unital size law requires the total multiplicity to
    equal the matrix-size ratio of the two stages.
    """

    from_stage: int
    to_stage: int
    block_count: int
    coords: dict[int, int] = field(default_factory=dict)
    evals: dict[Point, int] = field(default_factory=dict)
    from_side: str = ""
    to_side: str = ""

    def __post_init__(self):
        for idx, mult in self.coords.items():
            if mult < 1:
                raise ValueError("coordinate multiplicities must be >= 1")
            if not 1 <= idx <= self.block_count:
                raise ValueError(f"projection index {idx} outside 1..{self.block_count}")
        for _, mult in self.evals.items():
            if mult < 1:
                raise ValueError("evaluation multiplicities must be >= 1")

    @property
    def total(self) -> int:
        return self.coord_total + self.eval_total

    @property
    def coord_total(self) -> int:
        return sum(self.coords.values())

    @property
    def eval_total(self) -> int:
        return sum(self.evals.values())

    @property
    def mult_one_coord_count(self) -> int:
        return sum(1 for v in self.coords.values() if v == 1)

    def check_size_law(self, expected_total: int) -> None:
        if self.total != expected_total:
            raise ValueError(f"size law violated: total {self.total} != {expected_total}")


def stage_map(sys: VilladsenSystem, i: int) -> MapDescriptor:
    """The seed map of stage i: its coordinate multiplicities plus its evaluation set."""
    st = sys.stage(i)
    coords = {t: st.counts.s_at(t) for t in range(1, st.c + 1)}
    evals: dict[Point, int] = {}
    for p in sys.eval_points(i):
        evals[p] = evals.get(p, 0) + 1
    desc = MapDescriptor(i, i + 1, st.c, coords, evals)
    m_i, _ = sys.stage_dims(i)
    m_next, _ = sys.stage_dims(i + 1)
    desc.check_size_law(m_next // m_i)
    return desc


def compose(first: MapDescriptor, second: MapDescriptor, seed: SeedSpace) -> MapDescriptor:
    """Composite of two diagonal maps, as multisets.

    Each entry of the first map is expanded by the second: projections compose
    by the row-major index rule; a projection entry hit by one of the second
    map's evaluation points becomes an evaluation at the projected point; and
    evaluation entries of the first map are replicated by the second map's
    total multiplicity.
    """
    if first.to_stage != second.from_stage or (
        first.to_side and second.from_side and first.to_side != second.from_side
    ):
        raise ValueError(
            f"stage mismatch: first ends at {first.to_side or ''}{first.to_stage}, "
            f"second starts at {second.from_side or ''}{second.from_stage}"
        )
    if len(first.coords) * len(second.coords) > COMPOSITE_INDEX_CAP:
        raise SizeCapError("composite coordinate multiset too large; use summaries")
    coords: dict[int, int] = {}
    for b, mb in second.coords.items():
        for a, ma in first.coords.items():
            idx = (b - 1) * first.block_count + a
            coords[idx] = coords.get(idx, 0) + ma * mb
    evals: dict[Point, int] = {}
    src_arity = None
    for q, mq in second.evals.items():
        for a, ma in first.coords.items():
            if src_arity is None:
                src_arity = point_arity(seed, q) // first.block_count
            p = project_point(seed, q, a, src_arity)
            evals[p] = evals.get(p, 0) + ma * mq
    second_total = second.total
    for p, mp in first.evals.items():
        evals[p] = evals.get(p, 0) + mp * second_total
    return MapDescriptor(
        first.from_stage,
        second.to_stage,
        first.block_count * second.block_count,
        coords,
        evals,
        from_side=first.from_side,
        to_side=second.to_side,
    )


def composite_map(sys: VilladsenSystem, i: int, j: int) -> MapDescriptor:
    """Fold of the stage maps from stage i through stage j (i < j)."""
    if not i < j:
        raise ValueError(f"need i < j, got {i} >= {j}")
    desc = stage_map(sys, i)
    for l in range(i + 1, j):
        desc = compose(desc, stage_map(sys, l), sys.seed)
    m_i, _ = sys.stage_dims(i)
    m_j, _ = sys.stage_dims(j)
    desc.check_size_law(m_j // m_i)
    return desc


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class StageCheck:
    stage: int
    ok: bool
    detail: str


@dataclass(frozen=True)
class DensityCheck:
    stage: int
    verdict: str  # covered | gaps | skipped
    detail: str


@dataclass(frozen=True)
class TailRow:
    start: int
    partial: Fraction
    limit: Optional[Interval]


@dataclass(frozen=True)
class ValidationReport:
    stage_checks: tuple[StageCheck, ...]
    density_checks: tuple[DensityCheck, ...]
    tail_rows: tuple[TailRow, ...]
    negligibility_verdict: str  # satisfied | violated | undetermined
    notes: tuple[str, ...]

    @property
    def structural_ok(self) -> bool:
        return all(ch.ok for ch in self.stage_checks)


DENSITY_AXIS_CAP = 48
DENSITY_BLOCK_CAP = 256


def validate(
    sys: VilladsenSystem,
    stage_bound: int,
    density_resolution: Fraction = Fraction(1, 2),
) -> ValidationReport:
    """Structural checks, a coordinate-wise density verdict, and the tail products.

    Structural violations are reported, not thrown.  The density test covers
    each axis of X^{d_i} by cells of the given side and asks whether axis
    values of later evaluation sets, projected down, meet every cell; it is a
    finite-resolution surrogate and says so.  Tail rows report the partial
    products prod n/(n+k) from increasing start indices together with the
    family's certified limit when one exists.
    """
    resolution = Fraction(density_resolution)
    if resolution <= 0 or resolution > 1:
        raise ValueError("density resolution must lie in (0, 1]")
    notes: list[str] = []

    checks: list[StageCheck] = []
    bound = stage_bound
    if sys.family is None:
        bound = min(stage_bound, len(sys.prefix))
        if bound < stage_bound:
            notes.append(f"only {bound} stages exist; no family tail")
    for i in range(1, bound + 1):
        st = sys.counts(i)
        problems = []
        if st.k < 1:
            problems.append(f"k = {st.k} < 1")
        if st.c < 1:
            problems.append(f"c = {st.c} < 1")
        if st.s_explicit is not None:
            if any(v < 1 for v in st.s_explicit):
                problems.append("some multiplicity s is 0")
            if len(st.s_explicit) != st.c:
                problems.append(f"{len(st.s_explicit)} multiplicities for c = {st.c}")
        checks.append(
            StageCheck(i, not problems, "; ".join(problems) or f"c={st.c} n={st.n} k={st.k}")
        )

    density = _density_checks(sys, bound, resolution, notes)

    rows: list[TailRow] = []
    start = 1
    while start <= bound:
        partial = Fraction(1)
        for l in range(start, bound + 1):
            st = sys.counts(l)
            partial *= Fraction(st.n, st.n + st.k)
        limit = sys.family.trace_tail(start) if sys.family is not None else None
        rows.append(TailRow(start, partial, limit))
        start *= 2

    if sys.family is None:
        verdict = "undetermined"
        notes.append("no family tail: the negligible-evaluation condition has no closed form")
    else:
        verdict = "satisfied" if sys.family.trace_tails_tend_to_one() else "violated"

    return ValidationReport(tuple(checks), tuple(density), tuple(rows), verdict, tuple(notes))


def _density_checks(
    sys: VilladsenSystem, bound: int, resolution: Fraction, notes: list[str]
) -> list[DensityCheck]:
    if sys.seed.kind != "cube":
        notes.append(f"density test implemented for cube seeds only; {sys.seed.kind} skipped")
        return [DensityCheck(i, "skipped", "non-cube seed") for i in range(1, bound + 1)]
    cells = -((-1) // resolution)  # ceil(1/resolution), exact
    out: list[DensityCheck] = []
    for i in range(1, bound + 1):
        _, d_i = sys.stage_dims(i)
        axes = d_i * sys.seed.m
        if axes > DENSITY_AXIS_CAP:
            out.append(DensityCheck(i, "skipped", f"{axes} axes exceed the sampling cap"))
            continue
        covered = [set() for _ in range(axes)]
        for t_stage in range(i + 1, bound + 1):
            _, d_t = sys.stage_dims(t_stage)
            blocks = min(d_t // d_i, DENSITY_BLOCK_CAP)
            k_t = sys.counts(t_stage).k
            for pt in range(1, k_t + 1):
                for blk in range(blocks):
                    for a in range(axes):
                        v = sys.eval_axis(t_stage, pt, blk * axes + a)
                        covered[a].add(min(int(v * cells), cells - 1))
        missing = [a for a in range(axes) if len(covered[a]) < cells]
        if not missing:
            out.append(DensityCheck(i, "covered", f"all {axes} axes meet every 1/{cells} cell"))
        else:
            out.append(
                DensityCheck(
                    i,
                    "gaps",
                    f"{len(missing)} of {axes} axes have uncovered cells at this bound (sampled)",
                )
            )
    return out

"""Index scheduling and cross maps between two systems, with exact verification.

A schedule alternates maps A -> B -> A -> ... whose round trips agree with the
in-system composites up to point evaluations, trace-approximately within the
delta budgets.  Two styles of cross map occur:

* mirror: between same-shape systems the bridge copies the source composite's
  coordinate part verbatim, so round trips share the full coordinate part;
* flat: between different shapes the bridge uses l distinct multiplicity-one
  projections, l the floor of the dimension ratio, and the shared part is
  tracked by rank arithmetic.

Stage windows grow far too fast to materialize composite multisets (the
coordinate index count is a product of per-stage counts), so schedule
verification runs on window summaries: exact integer ranks derived from the
same stage data.  The explicit descriptor operations below are used by the
tests to confirm the summary arithmetic on small systems.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .invariants import ChainEntry, gamma
from .supernatural import compare, k0_of_system
from .system import MapDescriptor, Point, VilladsenSystem
from .util import format_ratio

K0_CHECK_BOUND = 32


class ScheduleError(RuntimeError):
    """A schedule hypothesis failed or the index search was exhausted; the
    message names the furthest failing condition."""

    def __init__(self, msg: str, failed: str, verdict=None):
        super().__init__(msg)
        self.failed = failed
        self.verdict = verdict


# ---------------------------------------------------------------------------
# window summaries (exact integer arithmetic, no multisets)


def window_products(sys: VilladsenSystem, start: int, stop: int) -> tuple[int, int, int, int]:
    """(prod n, prod c, prod (n+k), prod mult-one counts) over stages [start, stop)."""
    n = c = nk = ones = 1
    for l in range(start, stop):
        st = sys.counts(l)
        n *= st.n
        c *= st.c
        nk *= st.n + st.k
        ones *= st.mult_one_count
    return n, c, nk, ones


@dataclass(frozen=True)
class CrossMapSpec:
    """A bridge map between systems, summarized.

    ``blocks`` is the number of diagonal entries (the matrix-size ratio);
    ``coord_rank``/``coord_indices`` describe the coordinate part; the
    remaining blocks are point evaluations chosen by ``fill_policy``.
    """

    src_side: str
    src_stage: int
    tgt_side: str
    tgt_stage: int
    style: str  # mirror | flat
    blocks: int
    coord_rank: int
    coord_indices: int
    fill_policy: str

    @property
    def eval_blocks(self) -> int:
        return self.blocks - self.coord_rank


@dataclass(frozen=True)
class ScheduleEntry:
    """One verified leg of the intertwining: source composite through stage
    i_prime, then the bridge into the other system at stage i."""

    s: int
    i_prime: int
    i: int
    delta: Fraction
    cross_map: CrossMapSpec
    checks: tuple[ChainEntry, ...]

    @property
    def all_verified(self) -> bool:
        return all(ch.verdict for ch in self.checks)


@dataclass(frozen=True)
class RankDecomposition:
    """diag{P, R, Theta} bookkeeping for a round trip against its reference.

    P is the shared coordinate part; the point-evaluation parts are balanced
    to equal rank, the imbalance being absorbed into the residuals R, which
    then automatically have equal rank on both sides.
    """

    shared_rank: int
    residual_rank: int
    theta_rank: int
    total: int
    ratio: Fraction
    shared_summary: str = ""

    def __post_init__(self):
        if self.shared_rank + self.residual_rank + self.theta_rank != self.total:
            raise ValueError("rank bookkeeping does not add up")


@dataclass(frozen=True)
class RoundTripCheck:
    s: int
    start_stage: int
    end_stage: int
    side: str
    decomposition: RankDecomposition
    checks: tuple[ChainEntry, ...]

    @property
    def all_verified(self) -> bool:
        return all(ch.verdict for ch in self.checks)


@dataclass(frozen=True)
class IntertwiningSchedule:
    side_a: str
    side_b: str
    deltas: tuple[Fraction, ...]
    entries: tuple[ScheduleEntry, ...]
    rounds: tuple[RoundTripCheck, ...]
    hypothesis_checks: tuple[str, ...]
    notes: tuple[str, ...]

    @property
    def all_verified(self) -> bool:
        return all(e.all_verified for e in self.entries) and all(
            r.all_verified for r in self.rounds
        )


# ---------------------------------------------------------------------------
# close pairs


def _tail_deficiency(sys: VilladsenSystem, start: int) -> Optional[Fraction]:
    """Certified upper bound on 1 - prod_{l>=start} n_l/(n_l+k_l), closed form."""
    if sys.family is None:
        return None
    if start <= len(sys.prefix):
        head = Fraction(1)
        for l in range(start, len(sys.prefix) + 1):
            st = sys.counts(l)
            head *= Fraction(st.n, st.n + st.k)
        return 1 - head * sys.family.trace_tail(len(sys.prefix) + 1).lower
    return 1 - sys.family.trace_tail(start).lower


def find_close_pair(
    A: VilladsenSystem,
    B: VilladsenSystem,
    delta: Fraction,
    direction: str = "A->B",
    search_bound: int = 200,
    min_i_prime: int = 2,
    style: str = "mirror",
    l_floor: int = 1,
) -> tuple[int, int, tuple[ChainEntry, ...]]:
    """Smallest admissible (i_prime, i): the source tail-product deficiency is
    below delta (closed form), the target size at i is divisible by the source
    size at i_prime, and there is strictly more room than the coordinate part
    needs.  All three are recorded as exact inequalities.

    In flat style the coordinate part has l = floor(dim-ratio) entries and
    admissibility additionally requires l >= l_floor (which controls the
    shared-rank shortfall downstream).
    """
    delta = Fraction(delta)
    src, tgt = (A, B) if direction == "A->B" else (B, A)
    furthest = "tail-product"
    for i_prime in range(max(min_i_prime, 2), search_bound + 1):
        deficiency = _tail_deficiency(src, i_prime)
        if deficiency is None:
            raise ScheduleError(
                "source system has no closed-form tail product", "tail-product"
            )
        if not deficiency < delta:
            continue
        furthest = "divisibility"
        m_src, d_src = src.stage_dims(i_prime)
        m_tgt, d_tgt = tgt.stage_dims(i_prime)
        n_window = 1
        for i in range(i_prime + 1, search_bound + 1):
            st_prev = tgt.counts(i - 1)
            m_tgt *= st_prev.n + st_prev.k
            d_tgt *= st_prev.c
            n_window *= src.counts(i - 1).n
            if m_tgt % m_src:
                continue
            furthest = "room"
            blocks = m_tgt // m_src
            if style == "mirror":
                coord_rank = n_window
                if not blocks > coord_rank:
                    continue
                room = ChainEntry(
                    "room", Fraction(1), "<", Fraction(m_tgt, m_src * n_window)
                )
            else:
                l = d_tgt // d_src
                if l < max(l_floor, 1):
                    furthest = "coordinate-floor"
                    continue
                coord_rank = l
                if not blocks > coord_rank:
                    continue
                room = ChainEntry("room", Fraction(l * m_src, m_tgt), "<", Fraction(1))
            checks = (
                ChainEntry("tail-product-deficiency", deficiency, "<", delta),
                ChainEntry("divisibility", Fraction(m_tgt % m_src), "<=", Fraction(0)),
                room,
            )
            return i_prime, i, checks
    raise ScheduleError(
        f"no admissible pair within search bound {search_bound}; furthest condition: {furthest}",
        furthest,
    )


# ---------------------------------------------------------------------------
# explicit cross maps (desk scale)


def build_cross_map(
    A: VilladsenSystem,
    i_prime_src: int,
    B: VilladsenSystem,
    i_tgt: int,
    l: int,
    fill_policy: str = "cycle-target-evals",
    fill_points: Optional[Sequence[Point]] = None,
) -> MapDescriptor:
    """An explicit bridge descriptor: l distinct multiplicity-one projections
    plus evaluation entries filling the remaining blocks.

    The default fill cycles the target system's evaluation set at the source
    stage when arities match, else the source system's own; an explicit list
    cycles if shorter than needed.  The chosen points need not be dense; the
    composition with the source composite restores density, which is recorded
    as a note by the schedule builder rather than checked here.
    """
    m_src, d_src = A.stage_dims(i_prime_src)
    m_tgt, d_tgt = B.stage_dims(i_tgt)
    if m_tgt % m_src:
        raise ValueError(f"target size {m_tgt} not divisible by source size {m_src}")
    blocks = m_tgt // m_src
    if l * m_src > m_tgt:
        raise ValueError(f"no room: {l} coordinate copies exceed {blocks} blocks")
    if l > d_tgt // d_src:
        raise ValueError(f"only {d_tgt // d_src} projection indices available, wanted {l}")
    fill_count = blocks - l
    if fill_points is None:
        fills: list[Point] = []
        if fill_count:
            if _arity_matches(A, B, i_prime_src):
                candidates = B.eval_points(i_prime_src)
            else:
                candidates = A.eval_points(i_prime_src)
            if not candidates:
                raise ValueError("no evaluation points available for the fill")
            for t in range(fill_count):
                fills.append(candidates[t % len(candidates)])
    else:
        fills = [fill_points[t % len(fill_points)] for t in range(fill_count)]
    evals: dict[Point, int] = {}
    for p in fills:
        evals[p] = evals.get(p, 0) + 1
    return MapDescriptor(
        i_prime_src,
        i_tgt,
        d_tgt // d_src,
        {t: 1 for t in range(1, l + 1)},
        evals,
        from_side="A",
        to_side="B",
    )


def _arity_matches(A: VilladsenSystem, B: VilladsenSystem, stage: int) -> bool:
    return A.seed == B.seed and A.stage_dims(stage)[1] == B.stage_dims(stage)[1]


def build_mirror_cross_map(
    A: VilladsenSystem, i_prime: int, B: VilladsenSystem, i_tgt: int
) -> MapDescriptor:
    """Explicit mirror bridge: the coordinate part of the source composite over
    [i_prime, i_tgt), plus cycled target evaluation points."""
    from .system import composite_map

    comp = composite_map(A, i_prime, i_tgt)
    m_src, _ = A.stage_dims(i_prime)
    m_tgt, _ = B.stage_dims(i_tgt)
    if m_tgt % m_src:
        raise ValueError("size divisibility fails")
    blocks = m_tgt // m_src
    fill_count = blocks - comp.coord_total
    if fill_count < 0:
        raise ValueError("no room for the mirror coordinate part")
    candidates = B.eval_points(i_prime) if _arity_matches(A, B, i_prime) else A.eval_points(i_prime)
    evals: dict[Point, int] = {}
    for t in range(fill_count):
        p = candidates[t % len(candidates)]
        evals[p] = evals.get(p, 0) + 1
    return MapDescriptor(
        i_prime,
        i_tgt,
        comp.block_count,
        dict(comp.coords),
        evals,
        from_side="A",
        to_side="B",
    )


# ---------------------------------------------------------------------------
# rank decompositions


def rank_decompose(round_trip, reference, delta: Fraction) -> RankDecomposition:
    """diag{P, R, Theta} bookkeeping for a round trip against its reference.

    Accepts either explicit MapDescriptors (multiset intersection) or summary
    tuples (shared_rank, total, eval_round, eval_reference) produced by the
    schedule builder.  The evaluation parts are balanced to a common rank; the
    excess moves into the residuals, which then have equal rank on both sides
    by construction, and the ratio residual/theta is checked against delta.
    """
    delta = Fraction(delta)
    if isinstance(round_trip, MapDescriptor):
        if round_trip.from_stage != reference.from_stage or round_trip.to_stage != reference.to_stage:
            raise ValueError("maps must share their stages")
        if round_trip.total != reference.total:
            raise ValueError("maps must share their total rank")
        shared = 0
        ref_coords = dict(reference.coords)
        for idx, mult in round_trip.coords.items():
            shared += min(mult, ref_coords.get(idx, 0))
        total = round_trip.total
        # the balanced evaluation part is the evaluation multisets' overlap;
        # everything unshared (coordinates or points) lands in the residuals
        theta = 0
        ref_evals = dict(reference.evals)
        for p, mult in round_trip.evals.items():
            theta += min(mult, ref_evals.get(p, 0))
        eval_round = round_trip.eval_total
        eval_ref = reference.eval_total
        summary = f"{len(round_trip.coords)} vs {len(reference.coords)} coordinate indices"
    else:
        shared, total, eval_round, eval_ref = round_trip
        if reference is not None:
            raise ValueError("summary form packs both maps into the first argument")
        summary = "window summary"
        theta = min(eval_round, eval_ref)
    residual = total - shared - theta
    if residual < 0:
        raise ValueError("rank bookkeeping cannot balance (schedule bug)")
    ratio = Fraction(residual, theta) if theta else Fraction(0)
    if residual and not theta:
        raise ValueError("rank bookkeeping cannot balance (no evaluation part)")
    return RankDecomposition(shared, residual, theta, total, ratio, summary)


# ---------------------------------------------------------------------------
# schedules


def _shape_mode(A: VilladsenSystem, B: VilladsenSystem) -> str:
    return "mirror" if A.same_shape(B, max(len(A.prefix), len(B.prefix), 8)) else "flat"


def _check_hypotheses(A, B, mode: str) -> list[str]:
    notes = [f"cross-map style: {mode}"]
    ka = k0_of_system(A, K0_CHECK_BOUND)
    kb = k0_of_system(B, K0_CHECK_BOUND)
    verdict = compare(ka.multiplicity, kb.multiplicity, K0_CHECK_BOUND)
    if verdict.is_not_equal:
        raise ScheduleError(
            f"ordered K-zero hypothesis fails: witness prime {verdict.witness_prime}",
            "k0-equality",
            verdict,
        )
    if not verdict.is_equal:
        raise ScheduleError(
            f"ordered K-zero hypothesis undetermined: {verdict.reason}", "k0-equality", verdict
        )
    notes.append("k0-equality: verified")
    if mode == "mirror":
        # same shape and same size sequence: the stagewise size ratio is
        # constant; it must be 1 for the diagram to exist
        depth = max(len(A.prefix), len(B.prefix), 4)
        for i in range(1, depth + 1):
            if A.term(i) != B.term(i):
                raise ScheduleError(
                    f"stage {i} sizes differ ({A.term(i)} vs {B.term(i)}): size-ratio limit is not 1",
                    "size-ratio",
                )
        notes.append("size-ratio: identically 1")
    else:
        ga = gamma(A, K0_CHECK_BOUND)
        gb = gamma(B, K0_CHECK_BOUND)
        if ga.exact is None or gb.exact is None:
            raise ScheduleError(
                "coordinate-fraction limits are not exact; cannot certify the shared value",
                "coordinate-fraction",
            )
        va = ga.exact * Fraction(1, A.n0)
        vb = gb.exact * Fraction(1, B.n0)
        if va != vb:
            raise ScheduleError(
                f"normalized coordinate fractions differ: {va} vs {vb}", "coordinate-fraction"
            )
        if va == 0:
            raise ScheduleError(
                "normalized coordinate fraction is zero; the flat construction needs it nonzero",
                "coordinate-fraction",
            )
        notes.append(f"coordinate-fraction: both {va}")
        for sysname, sys in (("A", A), ("B", B)):
            fam = sys.family
            ok = fam is not None and fam.all_mult_one and all(
                sys.counts(i).all_mult_one for i in range(1, len(sys.prefix) + 1)
            )
            if not ok:
                raise ScheduleError(
                    f"system {sysname} is not certified all-multiplicity-one; "
                    "the flat window estimates need that closed form",
                    "multiplicity-one",
                )
        notes.append("multiplicity-one: certified on both sides")
    return notes


def build_schedule(
    A: VilladsenSystem,
    B: VilladsenSystem,
    deltas: Sequence[Fraction],
    search_bound: int = 200,
) -> IntertwiningSchedule:
    """Alternating verified entries A->B, B->A, with per-round rank checks.

    The user's budgets are shrunk when the construction needs it (strict
    decrease; in flat style also below the first-stage evaluation fraction and
    1/4); every adjustment is logged.  Each entry's admissibility conditions
    and each round trip's trace bound and rank-decomposition ratio are
    recorded as exact inequalities; re-verification from scratch is available
    via verify_schedule.
    """
    deltas = [Fraction(d) for d in deltas]
    if not deltas:
        raise ValueError("need at least one delta")
    if any(d <= 0 for d in deltas):
        raise ValueError("deltas must be positive")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("deltas must be strictly decreasing")
    if sum(deltas) >= 1:
        raise ValueError("delta budgets must sum below 1")

    mode = _shape_mode(A, B)
    notes = _check_hypotheses(A, B, mode)
    notes.append(
        "fill: bridge evaluation points need not be dense; the composed entry "
        "inherits the source composite's evaluation sets"
    )
    adjustments: list[str] = []
    sides = {"A": A, "B": B}

    entries: list[ScheduleEntry] = []
    used: list[Fraction] = []
    cur_stage = 1
    cur_side = "A"
    for s, user_delta in enumerate(deltas, start=1):
        delta = user_delta
        src = sides[cur_side]
        if mode == "flat":
            st = src.counts(cur_stage)
            frac = Fraction(st.k, st.n + st.k)
            cap = min(Fraction(1, 4), frac / 2)
            if used:
                cap = min(cap, used[-1] / 2)
            if delta > cap:
                adjustments.append(
                    f"delta_{s} shrunk from {format_ratio(delta)} to {format_ratio(cap)}"
                )
                delta = cap
        other = "B" if cur_side == "A" else "A"
        if mode == "mirror":
            budget = delta / 2
            l_floor = 1
        else:
            budget = delta / 4
            l_floor = int(Fraction(8, 3) / (delta * delta)) + 1
        i_prime, i, checks = find_close_pair(
            src,
            sides[other],
            budget,
            direction="A->B",
            search_bound=search_bound,
            min_i_prime=cur_stage + 1,
            style=mode,
            l_floor=l_floor,
        )
        m_src, d_src = src.stage_dims(i_prime)
        m_tgt, d_tgt = sides[other].stage_dims(i)
        blocks = m_tgt // m_src
        if mode == "mirror":
            n_window, c_window, _, _ = window_products(src, i_prime, i)
            spec = CrossMapSpec(
                cur_side, i_prime, other, i, "mirror", blocks, n_window, c_window,
                "cycle-target-evals",
            )
        else:
            l = d_tgt // d_src
            spec = CrossMapSpec(
                cur_side, i_prime, other, i, "flat", blocks, l, l,
                "cycle-target-evals",
            )
        entries.append(ScheduleEntry(s, i_prime, i, delta, spec, checks))
        used.append(delta)
        cur_stage = i
        cur_side = other

    rounds = []
    for t in range(len(entries) - 1):
        full_start = 1 if t == 0 else entries[t - 1].i
        rounds.append(_round_check_at(sides, entries[t], entries[t + 1], full_start))
    return IntertwiningSchedule(
        A.name, B.name, tuple(used), tuple(entries), tuple(rounds),
        tuple(notes), tuple(adjustments)
    )


def verify_schedule(
    A: VilladsenSystem, B: VilladsenSystem, schedule: IntertwiningSchedule
) -> list[ChainEntry]:
    """Recompute every recorded inequality from the raw stage data."""
    sides = {"A": A, "B": B}
    out: list[ChainEntry] = []
    for entry in schedule.entries:
        src = sides[entry.cross_map.src_side]
        tgt = sides[entry.cross_map.tgt_side]
        deficiency = _tail_deficiency(src, entry.i_prime)
        budget = entry.delta / (2 if entry.cross_map.style == "mirror" else 4)
        out.append(ChainEntry("tail-product-deficiency", deficiency, "<", budget))
        m_src, d_src = src.stage_dims(entry.i_prime)
        m_tgt, d_tgt = tgt.stage_dims(entry.i)
        out.append(ChainEntry("divisibility", Fraction(m_tgt % m_src), "<=", Fraction(0)))
        if entry.cross_map.style == "mirror":
            n_window, _, _, _ = window_products(src, entry.i_prime, entry.i)
            out.append(ChainEntry("room", Fraction(1), "<", Fraction(m_tgt, m_src * n_window)))
        else:
            l = d_tgt // d_src
            out.append(ChainEntry("room", Fraction(l * m_src, m_tgt), "<", Fraction(1)))
            out.append(ChainEntry("coordinate-count", Fraction(entry.cross_map.coord_rank), "<=", Fraction(l)))
    for rnd in schedule.rounds:
        first = schedule.entries[rnd.s - 1]
        second = schedule.entries[rnd.s]
        redone = _round_check_at(sides, first, second, rnd.start_stage)
        out.extend(redone.checks)
    return out


def _round_check_at(sides, first, second, full_start) -> RoundTripCheck:
    side = first.cross_map.src_side
    src = sides[side]
    tgt = sides[first.cross_map.tgt_side]
    start = first.i_prime
    end = second.i
    delta = first.delta
    n_src, c_src, nk_src, _ = window_products(src, start, end)
    n_mid, _, _, _ = window_products(tgt, first.i, second.i_prime)
    total_tail = nk_src
    if first.cross_map.style == "mirror":
        shared_tail = n_src
    else:
        shared_tail = first.cross_map.coord_rank * n_mid * second.cross_map.coord_rank
    trace_bound = 2 * (1 - Fraction(shared_tail, total_tail))
    n_full, _, nk_full, _ = window_products(src, full_start, end)
    prefix_n, _, _, _ = window_products(src, full_start, start)
    shared_full = prefix_n * shared_tail
    total_full = nk_full
    eval_round = total_full - shared_full
    eval_ref = total_full - n_full
    deco = rank_decompose((shared_full, total_full, eval_round, eval_ref), None, delta)
    checks = [
        ChainEntry("round-trip-trace-bound", trace_bound, "<", delta),
        ChainEntry("residual-ratio", deco.ratio, "<", delta),
        ChainEntry(
            "theta-balance",
            Fraction(min(eval_round, eval_ref)),
            "<=",
            Fraction(max(eval_round, eval_ref)),
        ),
    ]
    if first.cross_map.style == "flat":
        checks.append(
            ChainEntry(
                "residual-rank-small",
                Fraction(deco.residual_rank),
                "<",
                Fraction(3, 4) * delta * delta * n_full,
            )
        )
    return RoundTripCheck(first.s, full_start, end, side, deco, tuple(checks))

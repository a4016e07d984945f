"""Constructive matching: moduli, covers and bump functions, Hall-condition
certificates, the marriage matching, and point-evaluation division.

Distances on cube models use the sup metric (consistent with box covers);
finite metric spaces use their tables.  Matchings come from Hopcroft-Karp on
the expanded bipartite graph; failure certificates are extracted from
alternating reachability and always satisfy the counting violation exactly.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from math import ceil
from typing import Callable, Optional, Sequence

from .system import Point, SeedSpace, cube, point_distance
from .traces import SampledFunction
from .util import format_ratio


@dataclass(frozen=True)
class EvaluationMultiset:
    """Points with multiplicities inside a declared seed-space power."""

    space: SeedSpace
    points: tuple[Point, ...]
    multiplicities: tuple[int, ...]

    def __post_init__(self):
        if len(self.points) != len(self.multiplicities):
            raise ValueError("points and multiplicities must align")
        if any(m < 1 for m in self.multiplicities):
            raise ValueError("multiplicities must be >= 1")

    @staticmethod
    def of(space: SeedSpace, items: Sequence[tuple[Point, int]]) -> "EvaluationMultiset":
        pts = tuple(p for p, _ in items)
        mults = tuple(int(m) for _, m in items)
        return EvaluationMultiset(space, pts, mults)

    @property
    def total(self) -> int:
        return sum(self.multiplicities)

    def expanded(self) -> list[Point]:
        out: list[Point] = []
        for p, m in zip(self.points, self.multiplicities):
            out.extend([p] * m)
        return out

    def counts(self) -> dict[Point, int]:
        out: dict[Point, int] = {}
        for p, m in zip(self.points, self.multiplicities):
            out[p] = out.get(p, 0) + m
        return out


@dataclass(frozen=True)
class MatchResult:
    """Either a bijection with all displacements below the radius, or a
    violating subset with |X~| > |X~_radius ∩ Y| exactly."""

    matched: bool
    permutation: tuple[tuple[int, int], ...] = ()
    max_displacement: Fraction = Fraction(0)
    violator: Optional[EvaluationMultiset] = None
    violator_neighbor_count: int = 0


def modulus_eta(
    F: Sequence[SampledFunction], eps: Fraction, diameter: Fraction = Fraction(1)
) -> Fraction:
    """The uniform modulus: dist < 3*eta forces every f in F to move < eps."""
    if not F:
        raise ValueError("need at least one test function")
    max_l = max(f.lipschitz for f in F)
    if max_l == 0:
        return Fraction(diameter)
    return Fraction(eps) / (3 * max_l)


def _hopcroft_karp(n: int, adj: list[list[int]]) -> list[int]:
    """Maximum matching on a balanced bipartite graph; returns right-partner of
    each left vertex (-1 if unmatched)."""
    match_l = [-1] * n
    match_r = [-1] * n
    INFTY = n + 1
    dist = [0] * n

    def bfs() -> bool:
        queue: deque[int] = deque()
        for u in range(n):
            if match_l[u] == -1:
                dist[u] = 0
                queue.append(u)
            else:
                dist[u] = INFTY
        found = False
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                w = match_r[v]
                if w == -1:
                    found = True
                elif dist[w] == INFTY:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return found

    def dfs(u: int) -> bool:
        for v in adj[u]:
            w = match_r[v]
            if w == -1 or (dist[w] == dist[u] + 1 and dfs(w)):
                match_l[u] = v
                match_r[v] = u
                return True
        dist[u] = INFTY
        return False

    while bfs():
        for u in range(n):
            if match_l[u] == -1:
                dfs(u)
    return match_l


def _violator_from(
    root: int, adj: list[list[int]], match_l: list[int], match_r: list[int]
) -> tuple[list[int], set[int]]:
    """Alternating reachability from one unmatched left vertex: the reached left
    set is a Hall violator (its neighborhood is fully matched to its members)."""
    left = {root}
    right: set[int] = set()
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in right:
                right.add(v)
                w = match_r[v]
                if w != -1 and w not in left:
                    left.add(w)
                    queue.append(w)
    return sorted(left), right


def _radius_graph(
    xs: EvaluationMultiset, ys: EvaluationMultiset, radius: Fraction
) -> tuple[list[Point], list[Point], list[list[int]]]:
    if xs.total != ys.total:
        raise ValueError(f"count mismatch: {xs.total} vs {ys.total}")
    left = xs.expanded()
    right = ys.expanded()
    dist_cache: dict[tuple[Point, Point], Fraction] = {}

    def d(p: Point, q: Point) -> Fraction:
        key = (p, q)
        if key not in dist_cache:
            dist_cache[key] = point_distance(xs.space, p, q)
        return dist_cache[key]

    adj = [[j for j, q in enumerate(right) if d(p, q) < radius] for p in left]
    return left, right, adj


def hall_check(
    xs: EvaluationMultiset, ys: EvaluationMultiset, radius: Fraction
) -> MatchResult:
    """Decide whether a perfect matching within ``radius`` exists.

    On failure the certificate is the smallest violator found over all
    deficient roots of the alternating forest.
    """
    radius = Fraction(radius)
    left, right, adj = _radius_graph(xs, ys, radius)
    match_l = _hopcroft_karp(len(left), adj)
    match_r = [-1] * len(right)
    for u, v in enumerate(match_l):
        if v != -1:
            match_r[v] = u
    unmatched = [u for u, v in enumerate(match_l) if v == -1]
    if not unmatched:
        pairs = tuple((u, v) for u, v in enumerate(match_l))
        disp = max(
            (point_distance(xs.space, left[u], right[v]) for u, v in pairs),
            default=Fraction(0),
        )
        return MatchResult(True, pairs, disp)
    best: Optional[tuple[list[int], set[int]]] = None
    for root in unmatched:
        cand = _violator_from(root, adj, match_l, match_r)
        if best is None or len(cand[0]) < len(best[0]):
            best = cand
    lefts, rights = best
    viol_counts: dict[Point, int] = {}
    for u in lefts:
        viol_counts[left[u]] = viol_counts.get(left[u], 0) + 1
    violator = EvaluationMultiset.of(xs.space, sorted(viol_counts.items(), key=lambda it: it[0].coords))
    return MatchResult(
        False,
        violator=violator,
        violator_neighbor_count=len(rights),
    )


def marriage_match(
    xs: EvaluationMultiset, ys: EvaluationMultiset, radius: Fraction
) -> MatchResult:
    """A bijection moving every point by less than ``radius``, or the Hall
    failure certificate; displacements are rechecked after the fact."""
    result = hall_check(xs, ys, radius)
    if not result.matched:
        return result
    left = xs.expanded()
    right = ys.expanded()
    for u, v in result.permutation:
        if point_distance(xs.space, left[u], right[v]) >= radius:
            raise AssertionError("matching algorithm returned an edge outside the radius")
    return result


def violator_neighbor_count(
    xs_violator: EvaluationMultiset, ys: EvaluationMultiset, radius: Fraction
) -> int:
    """|X~_radius ∩ Y| counted with multiplicity, for certificate rechecks."""
    total = 0
    for q, m in zip(ys.points, ys.multiplicities):
        if any(
            point_distance(ys.space, p, q) < radius for p in xs_violator.points
        ):
            total += m
    return total


# ---------------------------------------------------------------------------
# covers and bump functions


@dataclass(frozen=True)
class Box:
    """An axis-aligned closed box inside the cube model."""

    bounds: tuple[tuple[Fraction, Fraction], ...]

    def distance(self, p: Point) -> Fraction:
        best = Fraction(0)
        for v, (lo, hi) in zip(p.coords, self.bounds):
            if v < lo:
                best = max(best, lo - v)
            elif v > hi:
                best = max(best, v - hi)
        return best


@dataclass(frozen=True)
class RampFunction:
    """h(x) = max(1 - dist(x, O)/eta, 0) for O a finite union of boxes."""

    boxes: tuple[Box, ...]
    eta: Fraction
    name: str

    def distance(self, p: Point) -> Fraction:
        return min(box.distance(p) for box in self.boxes)

    def __call__(self, p: Point) -> Fraction:
        return max(1 - self.distance(p) / self.eta, Fraction(0))


@dataclass(frozen=True)
class TentFunction:
    """g(x) = max(1 - dist(x, center)/radius, 0): a bump supported in the closed
    ball around its center."""

    center: Point
    radius: Fraction
    space: SeedSpace
    name: str

    def __call__(self, p: Point) -> Fraction:
        d = point_distance(self.space, self.center, p)
        return max(1 - d / self.radius, Fraction(0))


@dataclass(frozen=True)
class UniquenessData:
    eta: Fraction
    cover: tuple[Box, ...]
    ramps: tuple[RampFunction, ...]   # one h_O per union O
    bumps: tuple[TentFunction, ...]   # one g_O per union with room outside
    delta: Fraction
    notes: tuple[str, ...]


def _grid_points(m: int, step: Fraction) -> list[Point]:
    per_axis: list[Fraction] = []
    v = step / 2
    while v < 1:
        per_axis.append(v)
        v += step
    coords = [()]
    for _ in range(m):
        coords = [c + (x,) for c in coords for x in per_axis]
    return [Point(c) for c in coords]


def default_density_functional(g: TentFunction) -> Fraction:
    """A crude order-preserving lower bound for the mass of a tent: the volume
    of the half-height ball, halved again for boundary clipping."""
    m = len(g.center.coords)
    return (g.radius / 2) ** m / 2


def uniqueness_data(
    F: Sequence[SampledFunction],
    eps: Fraction,
    cover_resolution: Fraction,
    space: SeedSpace = cube(1),
    union_size_cap: int = 2,
    density_functional: Optional[Callable[[TentFunction], Fraction]] = None,
) -> UniquenessData:
    """Cover the seed space at the modulus scale and build the test functions
    that drive the matching argument.

    For every union O of at most ``union_size_cap`` cover boxes: the ramp h_O
    as stated; and, where the eta-neighborhood of O is not everything, a tent
    g_O supported in the shell between the eta- and 2eta-neighborhoods.  The
    returned delta is the minimum density over the tents.  The union family is
    capped for tractability; the full family is exponential and nothing
    downstream needs it.
    """
    if space.kind not in ("cube", "finite_metric"):
        raise ValueError(f"cover construction implemented for cube and finite_metric, not {space.kind}")
    eta = modulus_eta(F, eps, space.diameter)
    resolution = Fraction(cover_resolution)
    if resolution > eta:
        raise ValueError(f"resolution {resolution} is coarser than eta = {eta}")
    notes: list[str] = []
    if density_functional is None:
        density_functional = default_density_functional
        notes.append("default volume-based density functional")

    if space.kind == "finite_metric":
        raise NotImplementedError("finite metric covers: table-driven variant not needed yet")

    m = space.m
    cells = ceil(1 / resolution)
    step = Fraction(1, cells)
    axes_cells = [(Fraction(t, cells), Fraction(t + 1, cells)) for t in range(cells)]
    boxes = []
    idx = [0] * m
    while True:
        boxes.append(Box(tuple(axes_cells[t] for t in idx)))
        pos = 0
        while pos < m and idx[pos] == cells - 1:
            idx[pos] = 0
            pos += 1
        if pos == m:
            break
        idx[pos] += 1
    if len(boxes) > 4096:
        raise ValueError("cover too fine; raise the resolution or lower the dimension")

    unions: list[tuple[int, ...]] = [(i,) for i in range(len(boxes))]
    if union_size_cap >= 2:
        unions += [(i, j) for i in range(len(boxes)) for j in range(i + 1, len(boxes))]
        if union_size_cap > 2:
            notes.append("union family capped at pairs; larger unions omitted")

    probe = _grid_points(m, min(step, eta / 4))
    ramps: list[RampFunction] = []
    bumps: list[TentFunction] = []
    for u in unions:
        sel = tuple(boxes[i] for i in u)
        name = "O(" + ",".join(map(str, u)) + ")"
        ramp = RampFunction(sel, eta, f"h_{name}")
        ramps.append(ramp)
        best: Optional[tuple[Fraction, Point]] = None
        lo_band, hi_band = eta * Fraction(5, 4), eta * Fraction(7, 4)
        for p in probe:
            dist = ramp.distance(p)
            if lo_band <= dist <= hi_band:
                best = (dist, p)
                break
            if dist > eta and (best is None or dist > best[0]):
                best = (dist, p)
        if best is None or best[0] <= eta:
            continue  # the eta-neighborhood covers everything: no bump required
        dist, center = best
        radius = min(eta / 8, (dist - eta) / 2, (2 * eta - dist) / 2)
        if radius <= 0:
            continue
        bumps.append(TentFunction(center, radius, space, f"g_{name}"))
    delta = min((density_functional(g) for g in bumps), default=Fraction(1))
    return UniquenessData(eta, tuple(boxes), tuple(ramps), tuple(bumps), delta, tuple(notes))


# ---------------------------------------------------------------------------
# point-evaluation division


class DensityError(ValueError):
    def __init__(self, msg: str, failing: str):
        super().__init__(msg)
        self.failing = failing


@dataclass(frozen=True)
class DivisionResult:
    theta0: EvaluationMultiset
    theta1: EvaluationMultiset
    permutation: tuple[tuple[int, int], ...]  # original expanded index -> target slot
    net: tuple[Point, ...]
    moved: Fraction  # largest snap displacement
    lower_count_bound: int  # the L that n had to exceed


def _cube_net(m: int, delta: Fraction) -> tuple[list[Point], Fraction]:
    """A delta-dense grid net with its minimal pairwise distance."""
    cells = ceil(1 / delta) if delta < 1 else 1
    step = Fraction(1, cells)
    pts = _grid_points(m, step)
    return pts, step


def divide_point_evaluation(
    theta: EvaluationMultiset,
    M: int,
    Delta: Callable[[TentFunction], Fraction],
    F: Sequence[SampledFunction],
    eps: Fraction,
) -> DivisionResult:
    """Split a point-evaluation multiset as theta0 + M copies of theta1.

    Points are snapped to a delta-dense net (nearest net point; the half-gap
    rule makes the choice forced whenever a point sits within delta0/2 of a
    net point).  Each net multiplicity m_i is divided as M*d_i + r_i; the
    remainders form theta0, so n0 + M*n1 = n and n0 <= n1 exactly whenever the
    density precondition holds.  The permutation realigns the original points
    with the slots of the reassembled diagonal.
    """
    if theta.space.kind != "cube":
        raise NotImplementedError("division implemented on the cube model")
    if M < 1:
        raise ValueError("M must be >= 1")
    eps = Fraction(eps)
    max_l = max((f.lipschitz for f in F), default=Fraction(0))
    delta = eps / max_l if max_l > 0 else Fraction(1)
    net, delta0 = _cube_net(theta.space.m, delta)

    tents = [
        TentFunction(y, delta0 / 2, theta.space, f"h[{format_ratio(y.coords[0])},..]")
        for y in net
    ]
    floors = [Delta(t) for t in tents]
    min_floor = min(floors)
    if min_floor <= 0:
        raise ValueError("density functional must be strictly positive")
    L = int((M * M + M) / min_floor) + 1

    n = theta.total
    if n <= L:
        raise ValueError(f"need more than L = {L} points, got {n}")

    expanded = theta.expanded()
    # empirical density against each tent must clear its floor
    for tent, floor in zip(tents, floors):
        tr = sum((tent(p) for p in expanded), Fraction(0)) / n
        if not tr > floor:
            raise DensityError(
                f"evaluation set too sparse near {tent.name}: trace {tr} <= floor {floor}",
                tent.name,
            )

    def nearest(p: Point) -> int:
        best_i, best_d = 0, None
        for i, y in enumerate(net):
            d = point_distance(theta.space, p, y)
            if best_d is None or d < best_d:
                best_i, best_d = i, d
        return best_i

    assignment = [nearest(p) for p in expanded]
    moved = max(
        (point_distance(theta.space, p, net[i]) for p, i in zip(expanded, assignment)),
        default=Fraction(0),
    )
    if moved >= delta:
        raise AssertionError("net is delta-dense by construction")

    counts: dict[int, int] = {}
    for i in assignment:
        counts[i] = counts.get(i, 0) + 1
    for i, m_i in counts.items():
        if m_i <= M * M + M:
            raise DensityError(
                f"net point {i} has multiplicity {m_i} <= M^2+M = {M*M+M}", tents[i].name
            )

    split = {i: divmod(m_i, M) for i, m_i in counts.items()}  # m_i = M*d_i + r_i
    theta0_items = [(net[i], r) for i, (d, r) in sorted(split.items()) if r > 0]
    theta1_items = [(net[i], d) for i, (d, r) in sorted(split.items())]
    theta0 = EvaluationMultiset.of(theta.space, theta0_items)
    theta1 = EvaluationMultiset.of(theta.space, theta1_items)

    # slot layout of diag{theta0, theta1 repeated M times}, grouped by net point
    slot_of: dict[int, list[int]] = {i: [] for i in counts}
    pos = 0
    for i, (d, r) in sorted(split.items()):
        slot_of[i].extend(range(pos, pos + r))
        pos += r
    for copy in range(M):
        for i, (d, r) in sorted(split.items()):
            slot_of[i].extend(range(pos, pos + d))
            pos += d
    permutation = []
    cursor = {i: 0 for i in counts}
    for orig_idx, i in enumerate(assignment):
        permutation.append((orig_idx, slot_of[i][cursor[i]]))
        cursor[i] += 1

    return DivisionResult(
        theta0, theta1, tuple(permutation), tuple(net), moved, L
    )

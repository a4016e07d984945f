"""Acceptance criteria, one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
summary lines; every tolerance is pinned here exactly as stated.
"""

import random
import time
from fractions import Fraction

import pytest

from villadsen.classify import classify_k_contractible, classify_same_shape
from villadsen.extended import INF, ExtendedRational
from villadsen.families import OddSquaresFamily, SquaresFamily
from villadsen.intertwine import build_schedule, verify_schedule
from villadsen.invariants import (
    gamma_partial,
    mdim_upper,
    radius_of_comparison,
    rc_lower_witness,
    rc_realization,
)
from villadsen.matching import (
    EvaluationMultiset,
    divide_point_evaluation,
    marriage_match,
    violator_neighbor_count,
)
from villadsen.system import (
    Point,
    VilladsenSystem,
    composite_map,
    cube,
    point_distance,
    stage,
    validate,
)
from villadsen.traces import (
    DiscreteMeasure,
    SampledFunction,
    discretize,
    extreme_trace,
    largest_remainder_counts,
    required_sample_count,
    theta_pushforward,
    trace_distance_bound,
)


def report(number: int, text: str) -> None:
    print(f"ACCEPTANCE {number:2d} PASS  {text}")


S2 = VilladsenSystem(seed=cube(2), n0=1, family=SquaresFamily(2), name="S2")
S2F = VilladsenSystem(seed=cube(2), n0=1, family=SquaresFamily(2), eval_seed=99, name="S2F")
S4 = VilladsenSystem(seed=cube(4), n0=1, family=SquaresFamily(4), name="S4")
ODD = VilladsenSystem(seed=cube(2), n0=1, family=OddSquaresFamily(3), name="odd")


def test_criterion_1_rc_closed_forms():
    start = time.perf_counter()
    assert radius_of_comparison(S2, 16).exact == ExtendedRational(Fraction(1, 2))
    assert mdim_upper(S2, 16).exact == ExtendedRational(1)
    depth = 10**4
    partial = gamma_partial(S2, depth)
    n_last = depth + 1  # largest squared base
    assert partial == Fraction(n_last + 1, 2 * n_last)  # telescoping closed form
    assert abs(partial - Fraction(1, 2)) < Fraction(1, 10**4)
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0
    report(1, f"rc(S2)=1/2, mdim=1, |partial(1e4) - 1/2| = 1/{2*n_last} in {elapsed:.2f}s")


def test_criterion_2_realization_round_trip():
    for r in (Fraction(1, 2), Fraction(3, 2), Fraction(7, 5)):
        sys_obj = rc_realization(r)
        rep = validate(sys_obj, 10)
        assert rep.structural_ok
        assert rep.negligibility_verdict == "satisfied"
        tail = sys_obj.family.trace_tail(11)
        assert tail.exact is not None  # closed-form certificate
        assert radius_of_comparison(sys_obj, 10).exact == ExtendedRational(r)
    assert rc_realization(0).seed.kind == "cantor"
    assert rc_realization(INF).seed.kind == "hilbert_cube"
    report(2, "rc realization exact for 1/2, 3/2, 7/5; designated seeds at 0 and inf")


def _marked_system(rng: random.Random):
    """Small random system whose evaluation points cannot collide across stages."""
    stages = []
    d = 1
    for idx in range(rng.randint(2, 4)):
        c = rng.randint(1, 3)
        s = tuple(rng.randint(1, 6) for _ in range(c))
        k = rng.randint(1, 3)
        den = 5 + 2 * idx  # distinct odd denominators per stage: no collisions
        pool = list(range(1, den))
        rng.shuffle(pool)
        # point t is the pool shifted by t: distinct points within the stage
        pts = []
        for t in range(k):
            pts.append(Point(tuple(Fraction(pool[(t + a) % len(pool)], den) for a in range(d))))
        stages.append(stage(c, s, k, pts))
        d *= c
    return VilladsenSystem(seed=cube(1), n0=rng.randint(1, 6), prefix=tuple(stages))


def test_criterion_3_size_laws():
    rng = random.Random(2024)
    checked = 0
    while checked < 500:
        sys_obj = _marked_system(rng)
        top = len(sys_obj.prefix) + 1
        i = rng.randint(1, top - 1)
        j = rng.randint(i + 1, top)
        comp = composite_map(sys_obj, i, j)
        m_i, _ = sys_obj.stage_dims(i)
        m_j, _ = sys_obj.stage_dims(j)
        assert comp.total == m_j // m_i
        n_prod = 1
        for l in range(i, j):
            n_prod *= sys_obj.n(l)
        assert comp.coord_total == n_prod
        window = 1
        for l in range(i + 1, j):
            window *= sys_obj.term(l)
        for p in sys_obj.eval_points(i):
            assert comp.evals[p] == window
        checked += 1
    report(3, "size laws exact on 500 random composites (totals, coordinates, evaluations)")


def test_criterion_4_trace_machinery():
    rng = random.Random(77)
    for _ in range(500):
        sys_obj = _marked_system(rng)
        i = rng.randint(1, len(sys_obj.prefix))
        _, d_next = sys_obj.stage_dims(i + 1)
        raws = [rng.randint(1, 9) for _ in range(rng.randint(1, 5))]
        total = sum(raws)
        pts = [
            Point(tuple(Fraction(rng.randrange(0, 11), 11) for _ in range(d_next)))
            for _ in raws
        ]
        mu = DiscreteMeasure.from_pairs(
            d_next, [(p, Fraction(r, total)) for p, r in zip(pts, raws)]
        )
        assert theta_pushforward(sys_obj, i, mu).mass() == 1
    x = Point(tuple(Fraction(t, 7) for t in range(6)))
    seq = extreme_trace(S2, 2, x, 4)
    for l in range(len(seq) - 1):
        assert theta_pushforward(S2, l + 1, seq[l + 1]) == seq[l]
    assert trace_distance_bound(S2, 2, 2) == Fraction(1, 3)
    report(4, "mass exact on 500 pushforwards; tower consistent; window bound = 1/3")


def _all_splits(n, parts):
    if parts == 1:
        yield (n,)
        return
    for c in range(n + 1):
        for rest in _all_splits(n - c, parts - 1):
            yield (c,) + rest


def test_criterion_5_discretization():
    rng = random.Random(5150)
    brute_checked = 0
    for trial in range(200):
        size = rng.randint(1, 6)
        raws = [rng.randint(1, 9) for _ in range(size)]
        total = sum(raws)
        weights = [Fraction(r, total) for r in raws]
        pts = [Point((Fraction(t, size),)) for t in range(size)]
        mu = DiscreteMeasure.from_pairs(1, list(zip(pts, weights)))
        funcs = []
        for fi in range(rng.randint(1, 4)):
            lip = Fraction(rng.randint(1, 4))
            table = {}
            for p in pts:
                # values within the Lipschitz cone of the declared constant
                table[p] = (lip * p.coords[0] * rng.choice((-1, 1))) / 2
            funcs.append(SampledFunction.from_table(table, lip, name=f"f{fi}"))
        eps = Fraction(1, rng.randint(5, 30))
        n = max(required_sample_count(funcs, eps, size), 1)
        points = discretize(mu, funcs, n, eps)
        assert len(points) == n
        for f in funcs:
            emp = sum(f(p) for p in points) / Fraction(n)
            assert abs(mu.integrate(f) - emp) < eps

        if size <= 4 and brute_checked < 60:
            # small-n regime: the deterministic split is within the budget
            # whenever any split is
            n_small = rng.randint(size, 12)
            max_l = max(f.lipschitz for f in funcs)
            eps_small = Fraction(max_l * size, n_small)
            counts = largest_remainder_counts(weights, n_small)
            lr_err = Fraction(0)
            best_err = None
            for split in _all_splits(n_small, size):
                err = Fraction(0)
                for f in funcs:
                    emp = sum(Fraction(c, n_small) * f(p) for c, p in zip(split, pts))
                    err = max(err, abs(mu.integrate(f) - emp))
                if best_err is None or err < best_err:
                    best_err = err
                if tuple(split) == tuple(counts):
                    lr_err = err
            if best_err < eps_small:
                assert lr_err < eps_small
            brute_checked += 1
    assert brute_checked == 60
    report(5, "200 discretizations within budget; deterministic split optimal-enough on all brute-forced instances")


def test_criterion_6_matching_oracle():
    line = cube(1)
    rng = random.Random(616)

    def backtrack(left, right, radius):
        n = len(left)
        used = [False] * n

        def go(i):
            if i == n:
                return True
            for j in range(n):
                if not used[j] and point_distance(line, left[i], right[j]) < radius:
                    used[j] = True
                    if go(i + 1):
                        return True
                    used[j] = False
            return False

        return go(0)

    for _ in range(1000):
        n = rng.randint(1, 8)
        radius = Fraction(rng.randint(1, 8), 16)
        xs = EvaluationMultiset.of(
            line, [(Point((Fraction(rng.randrange(0, 17), 16),)), 1) for _ in range(n)]
        )
        ys = EvaluationMultiset.of(
            line, [(Point((Fraction(rng.randrange(0, 17), 16),)), 1) for _ in range(n)]
        )
        res = marriage_match(xs, ys, radius)
        assert res.matched == backtrack(xs.expanded(), ys.expanded(), radius)
        if res.matched:
            left, right = xs.expanded(), ys.expanded()
            assert len(res.permutation) == n
            for u, v in res.permutation:
                assert point_distance(line, left[u], right[v]) < radius
        else:
            viol = res.violator
            assert viol.total > violator_neighbor_count(viol, ys, radius)
    report(6, "1000 instances agree with exhaustive search; permutations and certificates recheck exactly")


def test_criterion_7_division_arithmetic():
    line = cube(1)
    rng = random.Random(707)
    f = SampledFunction.from_table({Point((Fraction(0),)): Fraction(0)}, Fraction(1))
    for _ in range(500):
        M = rng.randint(1, 4)
        eps = Fraction(1, 4)  # net at quarters
        jitters = []
        items = []
        for t in range(4):
            base = Fraction(1, 8) + Fraction(t, 4)
            count = rng.randint(110, 160)
            jitter = Fraction(rng.randrange(-3, 4), 100)
            items.append((Point((base + jitter,)), count))
        theta = EvaluationMultiset.of(line, items)
        res = divide_point_evaluation(theta, M, lambda g: Fraction(1, 20), [f], eps)
        n = theta.total
        n0, n1 = res.theta0.total, res.theta1.total
        assert n0 + M * n1 == n
        assert n0 <= n1
        # reconstruction: the permutation realigns originals with the slots of
        # the reassembled diagonal, landing exactly on the snapped multiset
        slots = []
        for p, m in zip(res.theta0.points, res.theta0.multiplicities):
            slots.extend([p] * m)
        for _ in range(M):
            for p, m in zip(res.theta1.points, res.theta1.multiplicities):
                slots.extend([p] * m)
        expanded = theta.expanded()
        seen = sorted(idx for _, idx in res.permutation)
        assert seen == list(range(n))
        snapped = sorted(
            min(res.net, key=lambda y: (point_distance(line, p, y), y.coords)).coords
            for p in expanded
        )
        assert snapped == sorted(slots[idx].coords for _, idx in sorted(res.permutation))
    report(7, "500 divisions: n0 + M*n1 = n, n0 <= n1, reconstruction matches the snapped multiset")


def test_criterion_8_schedule():
    start = time.perf_counter()
    deltas = [Fraction(1, 4) / (2**s) for s in range(1, 4)]
    sched = build_schedule(S2, S2F, deltas, search_bound=200)
    assert len(sched.entries) >= 3
    assert all(e.i <= 200 for e in sched.entries)
    assert sched.all_verified
    redone = verify_schedule(S2, S2F, sched)
    assert redone and all(ch.verdict for ch in redone)
    for rnd in sched.rounds:
        assert rnd.decomposition.ratio < sched.entries[rnd.s - 1].delta
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0
    report(8, f"{len(sched.entries)}-entry schedule verified and re-verified in {elapsed:.2f}s; ratios below budgets")


def test_criterion_9_classification():
    same = classify_same_shape(S2, S2F, 24)
    assert same.verdict == "Isomorphic"
    assert classify_same_shape(S2F, S2, 24).verdict == "Isomorphic"

    diff = classify_k_contractible(S2, S4, 24)
    assert diff.verdict == "NotIsomorphic"
    assert diff.rc_left.exact == ExtendedRational(Fraction(1, 2))
    assert diff.rc_right.exact == ExtendedRational(Fraction(3, 2))
    assert diff.trace_tags is None  # nonzero radius: no trace comparison
    assert classify_k_contractible(S4, S2, 24).verdict == "NotIsomorphic"

    odd = classify_k_contractible(ODD, S2, 24)
    assert odd.verdict == "NotIsomorphic"
    assert odd.k0_verdict.witness_prime == 2
    assert odd.trace_tags is None
    swapped = classify_k_contractible(S2, ODD, 24)
    assert swapped.verdict == "NotIsomorphic"
    assert swapped.k0_verdict.witness_prime == 2
    report(9, "verdicts: Isomorphic / NotIsomorphic(rc) / NotIsomorphic(prime 2); symmetric; no trace evidence at rc != 0")


def test_criterion_10_witness_chain():
    res = rc_lower_witness(S2, Fraction(1, 100))
    assert res.applicable
    w = res.witness
    # exact recomputation of every inequality from the recorded numbers
    for entry in w.inequality_chain:
        assert entry.verdict, entry.describe()
    # and a from-scratch rerun agrees entirely
    again = rc_lower_witness(S2, Fraction(1, 100)).witness
    assert again == w
    assert w.conclusion == Fraction(1, 2) - Fraction(4, 100)
    report(10, f"witness chain of {len(w.inequality_chain)} inequalities verifies; conclusion rc >= 23/50")

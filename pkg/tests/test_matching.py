import random
from fractions import Fraction

import pytest

from villadsen.matching import (
    DensityError,
    EvaluationMultiset,
    divide_point_evaluation,
    hall_check,
    marriage_match,
    modulus_eta,
    uniqueness_data,
    violator_neighbor_count,
)
from villadsen.system import Point, cube, point_distance
from villadsen.traces import SampledFunction


LINE = cube(1)


def pts(*values):
    return EvaluationMultiset.of(LINE, [(Point((Fraction(v),)), 1) for v in values])


def brute_force_matchable(xs, ys, radius):
    """Complete backtracking search over bijections (independent oracle)."""
    left = xs.expanded()
    right = ys.expanded()
    n = len(left)
    used = [False] * n

    def ok(i):
        if i == n:
            return True
        for j in range(n):
            if not used[j] and point_distance(xs.space, left[i], right[j]) < radius:
                used[j] = True
                if ok(i + 1):
                    return True
                used[j] = False
        return False

    return ok(0)


def lipschitz_f(lconst):
    return SampledFunction.from_table({Point((Fraction(0),)): Fraction(0)}, Fraction(lconst))


def test_modulus_direct():
    assert modulus_eta([lipschitz_f(1)], Fraction(3, 10)) == Fraction(1, 10)
    assert modulus_eta([lipschitz_f(5)], Fraction(1)) == Fraction(1, 15)


def test_modulus_constant_functions():
    assert modulus_eta([lipschitz_f(0)], Fraction(1, 2)) == Fraction(1)


def test_hall_positive_instance():
    xs = pts("1/10", "5/10", "9/10")
    ys = pts("15/100", "55/100", "95/100")
    res = hall_check(xs, ys, Fraction(2, 10))
    assert res.matched
    assert brute_force_matchable(xs, ys, Fraction(2, 10))


def test_hall_no_edges_violator():
    xs = pts("1/10", "12/100")
    ys = pts("5/10", "9/10")
    res = hall_check(xs, ys, Fraction(2, 10))
    assert not res.matched
    assert res.violator.total >= 1
    assert res.violator.total > violator_neighbor_count(res.violator, ys, Fraction(2, 10))


def test_hall_identity_any_radius():
    xs = pts("1/4", "3/4")
    assert hall_check(xs, xs, Fraction(1, 1000)).matched


def test_count_mismatch():
    with pytest.raises(ValueError):
        hall_check(pts("1/2"), pts("1/2", "3/4"), Fraction(1))


def test_marriage_displacement():
    xs = pts("1/10", "5/10", "9/10")
    ys = pts("15/100", "55/100", "95/100")
    res = marriage_match(xs, ys, Fraction(2, 10))
    assert res.matched
    assert res.max_displacement == Fraction(5, 100)


def test_marriage_respects_multiplicity():
    a = Point((Fraction(1, 2),))
    xs = EvaluationMultiset.of(LINE, [(a, 2)])
    res = marriage_match(xs, xs, Fraction(1, 10))
    assert res.matched
    assert len(res.permutation) == 2


@pytest.mark.parametrize("seed", range(40))
def test_matching_agrees_with_oracle(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 8)
    radius = Fraction(rng.randint(1, 6), 12)
    xs = EvaluationMultiset.of(
        LINE, [(Point((Fraction(rng.randrange(0, 13), 12),)), 1) for _ in range(n)]
    )
    ys = EvaluationMultiset.of(
        LINE, [(Point((Fraction(rng.randrange(0, 13), 12),)), 1) for _ in range(n)]
    )
    res = marriage_match(xs, ys, radius)
    assert res.matched == brute_force_matchable(xs, ys, radius)
    if res.matched:
        left, right = xs.expanded(), ys.expanded()
        for u, v in res.permutation:
            assert point_distance(LINE, left[u], right[v]) < radius
    else:
        assert res.violator.total > violator_neighbor_count(res.violator, ys, radius)


def test_uniqueness_data_interval_example():
    # unit interval, eta = 1/10 via eps/(3L) with eps = 3/10 and L = 1
    f = lipschitz_f(1)
    data = uniqueness_data([f], Fraction(3, 10), Fraction(1, 10))
    assert data.eta == Fraction(1, 10)
    assert len(data.cover) == 10
    ramp = data.ramps[0]
    inside = Point((Fraction(1, 20),))
    assert ramp(inside) == 1
    # the ramp falls off linearly within eta of its box
    edge = Point((Fraction(3, 20),))
    assert ramp(edge) == Fraction(1, 2)
    assert data.delta > 0
    for g in data.bumps:
        # support stays inside the shell: distance from the union in (eta, 2 eta)
        name = g.name
        ramp_for = {r.name.replace("h_", ""): r for r in data.ramps}[name.replace("g_", "")]
        lo = ramp_for.distance(g.center) - g.radius
        hi = ramp_for.distance(g.center) + g.radius
        assert lo > data.eta
        assert hi < 2 * data.eta


def test_uniqueness_resolution_too_coarse():
    f = lipschitz_f(1)
    with pytest.raises(ValueError):
        uniqueness_data([f], Fraction(3, 10), Fraction(1, 2))


def test_divide_exact_reconstruction():
    # all points already on the net, multiplicities divisible by M
    f = lipschitz_f(1)
    net_points = [Fraction(1, 8) + Fraction(t, 4) for t in range(4)]
    theta = EvaluationMultiset.of(
        LINE, [(Point((v,)), 12) for v in net_points]
    )
    res = divide_point_evaluation(theta, 2, lambda g: Fraction(1, 5), [f], Fraction(1, 4))
    assert res.theta0.total == 0
    assert res.theta0.total + 2 * res.theta1.total == theta.total
    assert res.moved == 0


def test_divide_example_counts():
    # two net points, counts (21, 23), M = 4: remainders (1, 3), quotients (5, 5)
    f = lipschitz_f(1)
    theta = EvaluationMultiset.of(
        LINE,
        [(Point((Fraction(1, 4),)), 21), (Point((Fraction(3, 4),)), 23)],
    )
    res = divide_point_evaluation(theta, 4, lambda g: Fraction(47, 100), [f], Fraction(1, 2))
    counts0 = res.theta0.counts()
    counts1 = res.theta1.counts()
    assert sorted(counts0.values()) == [1, 3]
    assert sorted(counts1.values()) == [5, 5]
    assert res.theta0.total + 4 * res.theta1.total == 44
    assert res.theta0.total <= res.theta1.total


def test_divide_m_equals_one():
    f = lipschitz_f(1)
    theta = EvaluationMultiset.of(
        LINE, [(Point((Fraction(1, 4),)), 3), (Point((Fraction(3, 4),)), 4)]
    )
    res = divide_point_evaluation(theta, 1, lambda g: Fraction(2, 5), [f], Fraction(1, 2))
    assert res.theta0.total == 0
    assert res.theta1.counts() == theta.counts() or res.moved > 0


def test_divide_density_violation_named():
    f = lipschitz_f(4)  # delta = eps / L = 1/8: net has 8 points
    theta = EvaluationMultiset.of(LINE, [(Point((Fraction(1, 16),)), 400)])
    with pytest.raises(DensityError) as err:
        divide_point_evaluation(theta, 2, lambda g: Fraction(1, 50), [f], Fraction(1, 2))
    assert err.value.failing


def test_divide_permutation_realigns():
    f = lipschitz_f(1)
    rng = random.Random(3)
    items = []
    for t in range(4):
        base = Fraction(1, 8) + Fraction(t, 4)
        items.append((Point((base + Fraction(rng.randrange(-2, 3), 100),)), 14 + rng.randrange(0, 4)))
    theta = EvaluationMultiset.of(LINE, items)
    M = 2
    res = divide_point_evaluation(theta, M, lambda g: Fraction(1, 8), [f], Fraction(1, 4))
    # rebuild the slot layout and check the permutation lands each original
    # point on a slot holding its snapped copy
    slots: list[Point] = []
    for p, m in zip(res.theta0.points, res.theta0.multiplicities):
        slots.extend([p] * m)
    for _ in range(M):
        for p, m in zip(res.theta1.points, res.theta1.multiplicities):
            slots.extend([p] * m)
    expanded = theta.expanded()
    assert sorted(idx for _, idx in res.permutation) == list(range(len(slots)))
    for orig_idx, slot_idx in res.permutation:
        assert point_distance(LINE, expanded[orig_idx], slots[slot_idx]) < Fraction(1, 2)


def test_uniqueness_ramps_bounded_unit_interval():
    f = lipschitz_f(1)
    data = uniqueness_data([f], Fraction(3, 10), Fraction(1, 10))
    probes = [Point((Fraction(t, 40),)) for t in range(41)]
    for ramp in data.ramps:
        for p in probes:
            assert 0 <= ramp(p) <= 1
    for g in data.bumps:
        for p in probes:
            v = g(p)
            assert 0 <= v <= 1
            if v > 0:
                # positive bump values only outside the eta-neighborhood
                ramp_for = {r.name.replace("h_", ""): r for r in data.ramps}[
                    g.name.replace("g_", "")
                ]
                assert ramp_for.distance(p) > data.eta

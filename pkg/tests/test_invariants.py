import random
from fractions import Fraction

import pytest

from villadsen.extended import INF, ExtendedRational
from villadsen.families import ConstantFamily, SquaresFamily
from villadsen.invariants import (
    asymptotic_checks,
    gamma,
    gamma_partial,
    mdim_upper,
    radius_of_comparison,
    rc_lower_witness,
    rc_realization,
)
from villadsen.system import VilladsenSystem, composite_map, cube, hilbert_cube, validate

from conftest import random_system


def test_extended_inf_times_zero():
    assert INF * ExtendedRational(0) == ExtendedRational(0)
    assert INF * Fraction(1, 2) == INF
    assert ExtendedRational(Fraction(1, 3)) * 3 == ExtendedRational(1)


def test_gamma_s2_exact(s2):
    g = gamma(s2, 4)
    assert g.exact == ExtendedRational(Fraction(1, 2))
    assert gamma_partial(s2, 4) == Fraction(3, 5)


def test_gamma_monotone_nonincreasing(s2):
    prev = None
    for depth in (1, 2, 4, 8, 16):
        value = gamma_partial(s2, depth)
        if prev is not None:
            assert value <= prev
        prev = value


def test_gamma_brackets_nested(odd_squares):
    outer = gamma(odd_squares, 3)
    inner = gamma(odd_squares, 9)
    assert outer.exact is None
    assert outer.lower <= inner.lower
    assert inner.upper <= outer.upper


def test_gamma_constant_exact_zero():
    sys_obj = VilladsenSystem(seed=cube(1), n0=1, family=ConstantFamily(2, 1))
    g = gamma(sys_obj, 6)
    assert g.exact == ExtendedRational(0)


def test_mdim_s2(s2):
    assert mdim_upper(s2, 6).exact == ExtendedRational(1)


def test_mdim_goodearl_zero(goodearl):
    assert mdim_upper(goodearl, 6).exact == ExtendedRational(0)


def test_mdim_hilbert_infinite():
    sys_obj = VilladsenSystem(seed=hilbert_cube(), n0=1, family=SquaresFamily(2))
    assert mdim_upper(sys_obj, 6).exact == INF
    assert radius_of_comparison(sys_obj, 6).exact == INF


def test_rc_s2(s2):
    assert radius_of_comparison(s2, 6).exact == ExtendedRational(Fraction(1, 2))


def test_rc_cantor_zero():
    sys_obj = rc_realization(0)
    assert sys_obj.seed.kind == "cantor"
    assert radius_of_comparison(sys_obj, 6).exact == ExtendedRational(0)


def test_rc_infinite_seed():
    sys_obj = rc_realization(INF)
    assert sys_obj.seed.kind == "hilbert_cube"
    assert radius_of_comparison(sys_obj, 6).exact == INF


@pytest.mark.parametrize("r", [Fraction(1, 2), Fraction(3, 2), Fraction(7, 5), Fraction(1), Fraction(5, 3)])
def test_realization_round_trip(r):
    sys_obj = rc_realization(r)
    rep = validate(sys_obj, 8)
    assert rep.structural_ok
    assert rep.negligibility_verdict == "satisfied"
    assert radius_of_comparison(sys_obj, 8).exact == ExtendedRational(r)


def test_realization_dimension_window():
    assert rc_realization(Fraction(1, 2)).seed.m == 2
    assert rc_realization(Fraction(3, 2)).seed.m == 4
    assert rc_realization(Fraction(7, 5)).seed.m == 4


def test_realization_negative_rejected():
    with pytest.raises(ValueError):
        rc_realization(Fraction(-1))


def test_asymptotic_checks_all_ones(s2):
    cn, ones = asymptotic_checks(s2, 2, 2)
    assert cn == 1
    assert ones == 1


def test_asymptotic_checks_goodearl():
    sys_obj = VilladsenSystem(seed=cube(1), n0=1, family=ConstantFamily(3, 1))
    cn, ones = asymptotic_checks(sys_obj, 1, 2)
    assert cn == Fraction(1, 27)
    assert ones == 0


def test_asymptotic_checks_match_composite():
    rng = random.Random(5)
    for _ in range(20):
        sys_obj = random_system(rng, max_stages=4)
        top = len(sys_obj.prefix)
        if top < 3:
            continue
        i, j = 1, 1
        cn, ones = asymptotic_checks(sys_obj, i, j)
        comp = composite_map(sys_obj, i, i + j + 1)
        n_prod = 1
        c_prod = Fraction(1)
        for l in range(i, i + j + 1):
            n_prod *= sys_obj.n(l)
            c_prod *= Fraction(sys_obj.c(l), sys_obj.n(l))
        assert cn == c_prod
        assert ones == Fraction(comp.mult_one_coord_count, n_prod)


def test_cn_product_toward_one_along_family(s2):
    values = [asymptotic_checks(s2, i, 2)[0] for i in (2, 4, 8, 16)]
    assert all(v == 1 for v in values)  # all-multiplicity-one family


def test_witness_s2_small_eps(s2):
    res = rc_lower_witness(s2, Fraction(1, 100))
    assert res.applicable
    w = res.witness
    assert w.all_verified
    assert w.conclusion == Fraction(1, 2) - Fraction(4, 100)
    assert w.sphere_dim % 2 == 0
    _, d_i = s2.stage_dims(w.stage)
    ambient = d_i * 2
    assert ambient - 2 <= w.sphere_dim <= ambient - 1


def test_witness_s2_large_eps_vacuous(s2):
    res = rc_lower_witness(s2, Fraction(1, 4))
    assert res.applicable
    assert res.witness.all_verified
    assert res.witness.conclusion == Fraction(1, 2) - 1


def test_witness_goodearl_inapplicable(goodearl):
    res = rc_lower_witness(goodearl, Fraction(1, 100))
    assert not res.applicable
    assert "zero" in res.reason


def test_witness_conclusion_consistent_with_rc(s2):
    res = rc_lower_witness(s2, Fraction(1, 100))
    rc = radius_of_comparison(s2, 8)
    assert ExtendedRational(res.witness.conclusion) <= rc.exact


def test_asymptotic_checks_mixed_toy():
    from villadsen.system import Point, stage

    pts = [Point((Fraction(1, 2),) * (2 ** t)) for t in range(3)]
    sys_obj = VilladsenSystem(
        seed=cube(1), n0=1,
        prefix=tuple(stage(2, (1, 2), 1, [pts[t]]) for t in range(3)),
    )
    cn, ones = asymptotic_checks(sys_obj, 1, 1)
    assert cn == Fraction(4, 9)  # (2/3)^2
    assert ones == Fraction(1, 9)


def test_rc_is_half_mdim_for_solid_seeds(s2, s4, goodearl, odd_squares):
    for sys_obj in (s2, s4, goodearl, odd_squares):
        assert sys_obj.seed.solid
        md = mdim_upper(sys_obj, 10)
        rc = radius_of_comparison(sys_obj, 10)
        assert rc.lower * 2 == md.lower
        assert rc.upper * 2 == md.upper
        if md.exact is not None:
            assert rc.exact * 2 == md.exact

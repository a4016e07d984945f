"""Closed-form stage families and their certified tail products.

A family generates stage data (c_i, (s_i,j), k_i) for every stage index and
knows closed forms for the three tail products the invariants need:

* the trace tail  prod_{l>=start} n_l/(n_l+k_l),
* the coordinate tail  prod_{l>=start} c_l/(n_l+k_l),
* the coordinate-to-size tail  prod_{l>=start} c_l/n_l.

Each is returned as an Interval: certified lower/upper rational bounds with an
optional exact value.  Never emit an unproven real: families without a closed
form return a loose bracket.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional

from . import supernatural as sn

_S_TUPLE_CAP = 10**6


class Interval(NamedTuple):
    lower: Fraction
    upper: Fraction
    exact: Optional[Fraction]

    @staticmethod
    def point(value: Fraction) -> "Interval":
        v = Fraction(value)
        return Interval(v, v, v)

    @staticmethod
    def loose() -> "Interval":
        return Interval(Fraction(0), Fraction(1), None)


@dataclass(frozen=True)
class StageCounts:
    """Counts for one stage: c coordinate indices, multiplicities s, k evaluations.

    ``s_explicit`` is None for all-multiplicity-one stages so that deep stages
    (where c is astronomically large) never materialize a tuple.
    """

    c: int
    k: int
    s_explicit: Optional[tuple[int, ...]] = None

    @property
    def n(self) -> int:
        return self.c if self.s_explicit is None else sum(self.s_explicit)

    @property
    def s(self) -> tuple[int, ...]:
        if self.s_explicit is not None:
            return self.s_explicit
        if self.c > _S_TUPLE_CAP:
            raise ValueError(f"stage has {self.c} coordinate indices; multiplicity tuple withheld")
        return (1,) * self.c

    def s_at(self, t: int) -> int:
        """Multiplicity of the t-th coordinate index (1-based)."""
        if not 1 <= t <= self.c:
            raise IndexError(f"coordinate index {t} outside 1..{self.c}")
        return 1 if self.s_explicit is None else self.s_explicit[t - 1]

    @property
    def mult_one_count(self) -> int:
        if self.s_explicit is None:
            return self.c
        return sum(1 for v in self.s_explicit if v == 1)

    @property
    def all_mult_one(self) -> bool:
        return self.s_explicit is None or all(v == 1 for v in self.s_explicit)


def _squares_tail(first_base: int) -> Interval:
    # prod_{b>=B} (b^2-1)/b^2 telescopes to (B-1)/B
    return Interval.point(Fraction(first_base - 1, first_base))


def _odd_squares_tail(first_base: int) -> Interval:
    # prod over odd b >= B of (1 - 1/b^2): the deficiencies are bounded by the
    # telescoping sum 1/((b-1)(b+1)) over odd b, which is 1/(2(B-1)); the
    # limit is irrational in general so no exact value is claimed.
    b = first_base
    lo = 1 - Fraction(1, 2 * (b - 1))
    hi = Fraction(b * b - 1, b * b)
    return Interval(max(lo, Fraction(0)), hi, None)


class Family:
    """Base class; concrete families are immutable and cheap to evaluate per stage."""

    name = "abstract"
    all_mult_one = False       # every s_{i,j} = 1
    single_projection = False  # every c_i = 1

    def stage(self, i: int) -> StageCounts:
        raise NotImplementedError

    def term(self, i: int) -> int:
        st = self.stage(i)
        return st.n + st.k

    def trace_tail(self, start: int) -> Interval:
        """lim_j prod_{l=start}^{j} n_l/(n_l+k_l), certified."""
        raise NotImplementedError

    def trace_tails_tend_to_one(self) -> bool:
        """Whether lim_start (trace tail from start) = 1: the point evaluations
        are asymptotically negligible in trace."""
        raise NotImplementedError

    def coord_tail(self, start: int) -> Interval:
        """lim_j prod_{l=start}^{j} c_l/(n_l+k_l), certified."""
        if self.all_mult_one:
            return self.trace_tail(start)
        raise NotImplementedError

    def cn_tail(self, start: int) -> Interval:
        """lim_j prod_{l=start}^{j} c_l/n_l, certified."""
        if self.all_mult_one:
            return Interval.point(Fraction(1))
        raise NotImplementedError

    def mult_one_tail(self, start: int) -> Interval:
        """Limit fraction of multiplicity-one entries in deep composites."""
        if self.all_mult_one:
            return Interval.point(Fraction(1))
        raise NotImplementedError

    def tail_rule(self) -> sn.TailRule:
        raise NotImplementedError

    def params(self) -> dict:
        return {}

    def describe(self) -> str:
        return self.name


@dataclass(frozen=True)
class SquaresFamily(Family):
    """All-multiplicity-one stages with sizes n_i+k_i = (base+i-1)^2 and k_i = 1.

    ``block`` > 1 merges that many consecutive stages into one (sizes multiply,
    coordinate counts multiply); the generated limit data is unchanged.
    """

    base: int = 2
    block: int = 1
    name = "squares"
    all_mult_one = True

    def _window(self, i: int) -> range:
        lo = self.base + (i - 1) * self.block
        return range(lo, lo + self.block)

    def stage(self, i: int) -> StageCounts:
        c = 1
        nk = 1
        for b in self._window(i):
            c *= b * b - 1
            nk *= b * b
        return StageCounts(c, nk - c)

    def term(self, i: int) -> int:
        t = 1
        for b in self._window(i):
            t *= b * b
        return t

    def trace_tail(self, start: int) -> Interval:
        return _squares_tail(self.base + (start - 1) * self.block)

    def trace_tails_tend_to_one(self) -> bool:
        return True

    def tail_rule(self) -> sn.TailRule:
        return sn.SquaresTail(self.base, self.block)

    def params(self):
        return {"base": self.base, "block": self.block}

    def describe(self):
        extra = f", merged in blocks of {self.block}" if self.block > 1 else ""
        return f"squares family from base {self.base}{extra}"


@dataclass(frozen=True)
class OddSquaresFamily(Family):
    """All-multiplicity-one stages with sizes (base + 2(i-1))^2 over odd bases."""

    base: int = 3
    name = "odd-squares"
    all_mult_one = True

    def stage(self, i: int) -> StageCounts:
        b = self.base + 2 * (i - 1)
        return StageCounts(b * b - 1, 1)

    def trace_tail(self, start: int) -> Interval:
        return _odd_squares_tail(self.base + 2 * (start - 1))

    def trace_tails_tend_to_one(self) -> bool:
        # certified lower bounds 1 - 1/(2(B-1)) tend to one
        return True

    def tail_rule(self) -> sn.TailRule:
        return sn.OddSquaresTail(self.base)

    def params(self):
        return {"base": self.base}


@dataclass(frozen=True)
class GoodearlFamily(Family):
    """Single-coordinate stages (c_i = 1) with n_i = (base+i-1)^2 - 1, k_i = 1.

    The sizes grow fast enough that the trace tail still tends to one, but the
    coordinate fraction dies: a zero-mean-dimension family.
    """

    base: int = 2
    name = "goodearl"
    single_projection = True

    def stage(self, i: int) -> StageCounts:
        b = self.base + i - 1
        return StageCounts(1, 1, (b * b - 1,))

    def trace_tail(self, start: int) -> Interval:
        return _squares_tail(self.base + start - 1)

    def trace_tails_tend_to_one(self) -> bool:
        return True

    def coord_tail(self, start: int) -> Interval:
        return Interval.point(Fraction(0))

    def cn_tail(self, start: int) -> Interval:
        return Interval.point(Fraction(0))

    def mult_one_tail(self, start: int) -> Interval:
        return Interval.point(Fraction(0))

    def tail_rule(self) -> sn.TailRule:
        return sn.SquaresTail(self.base)

    def params(self):
        return {"base": self.base}


@dataclass(frozen=True)
class ConstantFamily(Family):
    """Constant single-coordinate stages: c = 1, s = (n,), k fixed.

    The trace tail is (n/(n+k))^inf = 0, so the negligible-evaluation
    condition fails; kept as the standard counterexample.
    """

    n: int = 2
    k: int = 1
    name = "constant"
    single_projection = True

    def stage(self, i: int) -> StageCounts:
        return StageCounts(1, self.k, (self.n,))

    def trace_tail(self, start: int) -> Interval:
        return Interval.point(Fraction(0))

    def trace_tails_tend_to_one(self) -> bool:
        return False

    def coord_tail(self, start: int) -> Interval:
        return Interval.point(Fraction(0))

    def cn_tail(self, start: int) -> Interval:
        return Interval.point(Fraction(0))

    def mult_one_tail(self, start: int) -> Interval:
        return Interval.point(Fraction(0))

    def tail_rule(self) -> sn.TailRule:
        return sn.ConstantTail(self.n + self.k)

    def params(self):
        return {"n": self.n, "k": self.k}


@dataclass(frozen=True)
class HalvingFamily(Family):
    """All-multiplicity-one stages whose trace ratios telescope to ``target``.

    Stage ratios are T_m/T_{m+1} with T_m = 1 - (1-target)/2^(m-1), so the
    partial ratio product from stage 1 through N is T_1/T_{N+1} and the full
    product is exactly T_1 = target; every tail product is T_start, tending to
    one.  Used to realize any prescribed comparison radius.
    """

    num: int
    den: int
    block: int = 1
    name = "halving"
    all_mult_one = True

    def __post_init__(self):
        t = Fraction(self.num, self.den)
        if not (0 < t < 1):
            raise ValueError("halving target must lie strictly between 0 and 1")

    @property
    def target(self) -> Fraction:
        return Fraction(self.num, self.den)

    def _t(self, m: int) -> Fraction:
        return 1 - (1 - self.target) / (2 ** (m - 1))

    def stage(self, i: int) -> StageCounts:
        n = 1
        nk = 1
        for m in range((i - 1) * self.block + 1, i * self.block + 1):
            r = sn.halving_ratio(self.target, m)
            n *= r.numerator
            nk *= r.denominator
        return StageCounts(n, nk - n)

    def term(self, i: int) -> int:
        t = 1
        for m in range((i - 1) * self.block + 1, i * self.block + 1):
            t *= sn.halving_ratio(self.target, m).denominator
        return t

    def trace_tail(self, start: int) -> Interval:
        return Interval.point(self._t((start - 1) * self.block + 1))

    def trace_tails_tend_to_one(self) -> bool:
        return True

    def tail_rule(self) -> sn.TailRule:
        return sn.HalvingTail(self.num, self.den, self.block)

    def params(self):
        return {"num": self.num, "den": self.den, "block": self.block}

    def describe(self):
        return f"halving family with ratio product {self.num}/{self.den}"


_REGISTRY = {
    "squares": lambda p: SquaresFamily(int(p.get("base", 2)), int(p.get("block", 1))),
    "odd-squares": lambda p: OddSquaresFamily(int(p.get("base", 3))),
    "goodearl": lambda p: GoodearlFamily(int(p.get("base", 2))),
    "constant": lambda p: ConstantFamily(int(p.get("n", 2)), int(p.get("k", 1))),
    "halving": lambda p: HalvingFamily(int(p["num"]), int(p["den"]), int(p.get("block", 1))),
}


def family_from_spec(name: str, params: dict) -> Family:
    if name not in _REGISTRY:
        raise ValueError(f"unknown family {name!r}; known: {sorted(_REGISTRY)}")
    return _REGISTRY[name](params or {})

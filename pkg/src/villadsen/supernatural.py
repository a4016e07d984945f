"""Supernatural numbers: formal infinite products with certified three-valued comparison.

A supernatural number here is a finite description: the prime factorization of
the first ``truncation_stage`` terms of a generating sequence, plus a tail rule
that lets us prove what later terms can contribute.  Comparison is honest about
what that finite description can certify: Equal and NotEqual verdicts carry
proofs (exhibited witness indices, respectively a witness prime), and anything
else is Undetermined at the stated bound.

Tail rules form a closed list.  Each rule can answer, for any single prime p,
whether p divides infinitely many future terms ("infinite") or provably at most
finitely many ("frozen"), and each rule classifies its set of infinite primes
as cofinite (with known exceptions), finite (with known members), or decidable
only prime-by-prime.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

from .util import first_primes, multiplicative_order, prime_factors, v2

INFINITE = "infinite"
FROZEN = "frozen"

# How the set of infinite primes is certified.
COFINITE = "cofinite"  # all primes except a known finite set
FINITE = "finite"      # exactly a known finite set
PER_PRIME = "per-prime"  # decidable pointwise, no finite global certificate


class TailRule:
    """Base class for closed-form term families."""

    kind = "abstract"

    def term(self, i: int) -> int:
        raise NotImplementedError

    def eventual(self, p: int) -> str:
        """INFINITE or FROZEN: behavior of p in all sufficiently late terms."""
        raise NotImplementedError

    def frozen_start(self, p: int) -> int:
        """Index beyond which a FROZEN prime divides no further term."""
        return 1

    def infinite_witness(self, p: int, beyond: int) -> int:
        """A term index > beyond whose term p divides; proof obligation for INFINITE."""
        raise NotImplementedError

    def infinite_primes(self) -> tuple[str, frozenset[int]]:
        raise NotImplementedError

    @property
    def block_size(self) -> int:
        """How many underlying factors one term groups (regrouping granularity)."""
        return 1

    @property
    def prefix_offset(self) -> int:
        """Leading term indices not governed by the family (e.g. a unit size)."""
        return 0

    def signature(self) -> tuple:
        """Canonical identity of the generated infinite product, ignoring regrouping."""
        raise NotImplementedError

    def describe(self) -> str:
        return self.kind


@dataclass(frozen=True)
class ExplicitTail(TailRule):
    """No terms beyond the recorded prefix."""

    kind = "explicit-finite"

    def term(self, i: int) -> int:
        raise IndexError("explicit-finite family has no generated terms")

    def eventual(self, p: int) -> str:
        return FROZEN

    def infinite_primes(self):
        return (FINITE, frozenset())

    def signature(self):
        return ("explicit",)


@dataclass(frozen=True)
class ConstantTail(TailRule):
    """Every term equals the same integer value >= 1."""

    value: int
    kind = "constant"

    def term(self, i: int) -> int:
        return self.value

    def eventual(self, p: int) -> str:
        return INFINITE if self.value % p == 0 else FROZEN

    def infinite_witness(self, p: int, beyond: int) -> int:
        if self.value % p:
            raise ValueError(f"{p} never divides constant term {self.value}")
        return beyond + 1

    def infinite_primes(self):
        return (FINITE, frozenset(prime_factors(self.value)))

    def signature(self):
        return ("constant", self.value)


@dataclass(frozen=True)
class SquaresTail(TailRule):
    """Terms are squares of consecutive integer bases starting at ``base``.

    With ``block`` > 1 each term is the product of ``block`` consecutive
    squares; the generated infinite product is unchanged by the regrouping.
    Every prime divides the square of every multiple of it, so every prime
    occurs infinitely often.
    """

    base: int
    block: int = 1
    kind = "squares"

    def _bases(self, i: int) -> range:
        lo = self.base + (i - 1) * self.block
        return range(lo, lo + self.block)

    def term(self, i: int) -> int:
        t = 1
        for b in self._bases(i):
            t *= b * b
        return t

    def eventual(self, p: int) -> str:
        return INFINITE

    def infinite_witness(self, p: int, beyond: int) -> int:
        first_base = self.base + beyond * self.block
        mult = ((first_base + p - 1) // p) * p
        return (mult - self.base) // self.block + 1

    def infinite_primes(self):
        return (COFINITE, frozenset())

    @property
    def block_size(self) -> int:
        return self.block

    def signature(self):
        return ("squares", self.base)

    def describe(self):
        return f"squares from base {self.base}" + (f" merged {self.block}" if self.block > 1 else "")


@dataclass(frozen=True)
class OddSquaresTail(TailRule):
    """Squares of consecutive odd bases starting at odd ``base``: 2 never appears."""

    base: int
    kind = "odd-squares"

    def __post_init__(self):
        if self.base % 2 == 0:
            raise ValueError("odd-squares base must be odd")

    def term(self, i: int) -> int:
        b = self.base + 2 * (i - 1)
        return b * b

    def eventual(self, p: int) -> str:
        return FROZEN if p == 2 else INFINITE

    def infinite_witness(self, p: int, beyond: int) -> int:
        if p == 2:
            raise ValueError("2 divides no odd square")
        # Solve base + 2(i-1) ≡ 0 (mod p) for the first i > beyond.
        inv2 = pow(2, -1, p)
        i0 = ((-self.base * inv2) % p) + 1
        while i0 <= beyond:
            i0 += p
        return i0

    def infinite_primes(self):
        return (COFINITE, frozenset({2}))

    def signature(self):
        return ("odd-squares", self.base)


def halving_denominators(target: Fraction, count: int, block: int = 1) -> list[int]:
    """Terms of the halving-ratio scheme with ratio product ``target``.

    Stage ratios are T_m / T_{m+1} with T_m = 1 - (1-target)/2^(m-1); the
    returned integers are the reduced denominators (the stage sizes n+k),
    multiplied in blocks of ``block``.
    """
    out = []
    for i in range(1, count + 1):
        t = 1
        for m in range((i - 1) * block + 1, i * block + 1):
            t *= halving_ratio(target, m).denominator
        out.append(t)
    return out


def halving_ratio(target: Fraction, m: int) -> Fraction:
    """The m-th stage ratio n_m/(n_m+k_m) of the halving scheme, in lowest terms."""
    t_m = 1 - (1 - target) / (2 ** (m - 1))
    t_next = 1 - (1 - target) / (2 ** m)
    return t_m / t_next


@dataclass(frozen=True)
class HalvingTail(TailRule):
    """Denominators of the halving-ratio scheme with ratio product num/den.

    Writing s = num/den in lowest terms and w = den - num, the m-th ratio is
    2(2^(m-1) den - w) / (2^m den - w); the term is its reduced denominator.
    Whether a given odd prime divides infinitely many terms reduces to a
    discrete-log condition, decidable per prime by scanning one period of
    powers of 2; the prime 2 is always eventually frozen.
    """

    num: int
    den: int
    block: int = 1
    kind = "halving"

    @property
    def target(self) -> Fraction:
        return Fraction(self.num, self.den)

    def term(self, i: int) -> int:
        t = 1
        for m in range((i - 1) * self.block + 1, i * self.block + 1):
            t *= halving_ratio(self.target, m).denominator
        return t

    @property
    def _w(self) -> int:
        return self.den - self.num

    def eventual(self, p: int) -> str:
        w, den = self._w, self.den
        if p == 2:
            return FROZEN
        if w % p == 0 or den % p == 0:
            # p | w: every term D/g has D ≡ 2^m den ≢ 0 (mod p).
            # p | den: D ≡ -w ≢ 0 (mod p) since gcd(den, w) = 1.
            return FROZEN
        # p odd, coprime to 2, den, w: D_m = 2^m den - w mod p is periodic
        # with period ord_p(2); if it ever vanishes it vanishes infinitely
        # often, and then p | term since gcd(term-cofactor) divides w.
        period = multiplicative_order(2, p)
        for m in range(1, period + 1):
            if (pow(2, m, p) * den - w) % p == 0:
                return INFINITE
        return FROZEN

    def frozen_start(self, p: int) -> int:
        if p == 2:
            # beyond v2(w)+1 the 2-valuations of numerator and denominator lock
            start_m = v2(self._w) + 2 if self._w % 2 == 0 else 2
            return (start_m + self.block - 1) // self.block + 1
        return 1

    def infinite_witness(self, p: int, beyond: int) -> int:
        if self.eventual(p) != INFINITE:
            raise ValueError(f"{p} is not an infinite prime of this family")
        i = beyond + 1
        period = multiplicative_order(2, p)
        for i in range(beyond + 1, beyond + 1 + period + 1):
            if self.term(i) % p == 0:
                return i
        raise AssertionError("periodicity guarantees a witness inside one period")

    def infinite_primes(self):
        # den = 2^e and w = 2^t reduce every term to 2^(m+e-t) - 1: all odd
        # primes divide some 2^j - 1, so the infinite set is all odd primes.
        den_pow2 = self.den & (self.den - 1) == 0
        w = self._w
        w_pow2 = w & (w - 1) == 0
        if den_pow2 and w_pow2:
            return (COFINITE, frozenset({2}))
        return (PER_PRIME, frozenset())

    @property
    def block_size(self) -> int:
        return self.block

    def signature(self):
        return ("halving", self.num, self.den)

    def describe(self):
        return f"halving scheme for target {self.num}/{self.den}"


@dataclass(frozen=True)
class ShiftedTail(TailRule):
    """A tail rule reindexed by a fixed offset (used to prepend the unit size n0)."""

    inner: TailRule
    offset: int
    kind = "shifted"

    def term(self, i: int) -> int:
        if i <= self.offset:
            raise IndexError("index inside the explicit prefix")
        return self.inner.term(i - self.offset)

    def eventual(self, p: int) -> str:
        return self.inner.eventual(p)

    def frozen_start(self, p: int) -> int:
        return self.inner.frozen_start(p) + self.offset

    def infinite_witness(self, p: int, beyond: int) -> int:
        return self.inner.infinite_witness(p, max(beyond - self.offset, 0)) + self.offset

    def infinite_primes(self):
        return self.inner.infinite_primes()

    @property
    def block_size(self) -> int:
        return self.inner.block_size

    @property
    def prefix_offset(self) -> int:
        return self.inner.prefix_offset + self.offset

    def signature(self):
        return self.inner.signature()

    def describe(self):
        return self.inner.describe()


TermSource = Union[Sequence[int], Callable[[int], int]]


@dataclass(frozen=True)
class SupernaturalNumber:
    """Prime exponents accumulated up to a truncation stage, plus a tail rule.

    Absent primes have exponent 0 at the current truncation.  Values are
    immutable; ``refresh`` recomputes at a deeper stage and never decreases
    any exponent.
    """

    known: tuple[tuple[int, int], ...]
    truncation_stage: int
    tail_rule: Optional[TailRule]
    terms: Optional[Callable[[int], int]] = field(default=None, compare=False, repr=False)

    @property
    def known_exponents(self) -> dict[int, int]:
        return dict(self.known)

    def exponent(self, p: int) -> int:
        return self.known_exponents.get(p, 0)

    def refresh(self, depth: int) -> "SupernaturalNumber":
        if depth <= self.truncation_stage:
            return self
        if self.terms is None or isinstance(self.tail_rule, ExplicitTail):
            return SupernaturalNumber(self.known, depth, self.tail_rule, self.terms)
        return from_terms(self.terms, depth, tail_rule=self.tail_rule)

    def describe(self) -> str:
        tail = self.tail_rule.describe() if self.tail_rule else "unknown tail"
        facts = " * ".join(f"{p}^{e}" for p, e in self.known) or "1"
        return f"{facts} (through stage {self.truncation_stage}; {tail})"


def from_terms(
    terms: TermSource,
    depth: int,
    tail_rule: Optional[TailRule] = None,
) -> SupernaturalNumber:
    """Factor the product of the first ``depth`` terms.

    ``terms`` is either an explicit list (tail then defaults to
    explicit-finite) or a callable from 1-based stage index to a term.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if callable(terms):
        fn = terms
        if tail_rule is None:
            raise ValueError("a callable term source needs an explicit tail rule")
    else:
        seq = list(terms)
        if depth > len(seq):
            raise ValueError(f"depth {depth} exceeds the {len(seq)} explicit terms")
        if tail_rule is None:
            tail_rule = ExplicitTail()

        def fn(i: int, _seq=seq) -> int:
            return _seq[i - 1]

    exps: dict[int, int] = {}
    for i in range(1, depth + 1):
        t = fn(i)
        if t < 1:
            raise ValueError(f"term {i} is {t}; all terms must be >= 1")
        for p, e in prime_factors(t).items():
            exps[p] = exps.get(p, 0) + e
    known = tuple(sorted(exps.items()))
    return SupernaturalNumber(known, depth, tail_rule, fn)


@dataclass(frozen=True)
class ComparisonVerdict:
    kind: str  # "equal" | "not-equal" | "undetermined"
    witness_prime: Optional[int] = None
    bound: int = 0
    reason: str = ""

    @property
    def is_equal(self) -> bool:
        return self.kind == "equal"

    @property
    def is_not_equal(self) -> bool:
        return self.kind == "not-equal"


WITNESS_PRIME_COUNT = 100


def _eventual_exponent(num: SupernaturalNumber, p: int):
    """(INFINITE, None) or (FROZEN, exact exponent), or (None, None) if unknowable."""
    rule = num.tail_rule
    if rule is None:
        return (None, None)
    status = rule.eventual(p)
    if status == INFINITE:
        return (INFINITE, None)
    start = rule.frozen_start(p)
    here = num if num.truncation_stage >= start else num.refresh(start)
    return (FROZEN, here.exponent(p))


def _verify_infinite(num: SupernaturalNumber, p: int) -> None:
    """Check the exhibit-index proof: a term beyond the truncation divisible by p."""
    rule = num.tail_rule
    idx = rule.infinite_witness(p, num.truncation_stage)
    if idx <= num.truncation_stage:
        raise AssertionError(f"witness index {idx} not beyond stage {num.truncation_stage}")
    if num.terms is not None:
        t = num.terms(idx)
    else:
        t = rule.term(idx)
    if t % p:
        raise AssertionError(f"term {idx} = {t} is not divisible by {p}")


def compare(a: SupernaturalNumber, b: SupernaturalNumber, bound: int) -> ComparisonVerdict:
    """Three-valued comparison at a truncation bound.

    Equal and NotEqual are only returned with a proof: either both tails admit
    a global certificate of their infinite-prime sets, or the two descriptions
    are syntactically the same generator (up to regrouping).  Undetermined is a
    legitimate verdict, never an error.
    """
    if a is b:
        return ComparisonVerdict("equal", bound=bound, reason="identical description")
    a = a.refresh(bound)
    b = b.refresh(bound)

    if a.tail_rule is not None and b.tail_rule is not None:
        kind_a, set_a = a.tail_rule.infinite_primes()
        kind_b, set_b = b.tail_rule.infinite_primes()
    else:
        kind_a = kind_b = None
        set_a = set_b = frozenset()

    def frozen_mismatch(primes) -> Optional[ComparisonVerdict]:
        for p in sorted(primes):
            sa, ea = _eventual_exponent(a, p)
            sb, eb = _eventual_exponent(b, p)
            if sa == FROZEN and sb == FROZEN and ea != eb:
                return ComparisonVerdict(
                    "not-equal", p, bound, f"exponent of {p} is {ea} vs {eb}, both frozen"
                )
            if {sa, sb} == {FROZEN, INFINITE}:
                return ComparisonVerdict(
                    "not-equal", p, bound, f"exponent of {p} is finite on one side, infinite on the other"
                )
        return None

    if kind_a in (COFINITE, FINITE) and kind_b in (COFINITE, FINITE):
        if kind_a == COFINITE and kind_b == COFINITE:
            verdict = frozen_mismatch(set_a | set_b)
            if verdict:
                return verdict
            for p in first_primes(WITNESS_PRIME_COUNT):
                if p not in set_a:
                    _verify_infinite(a, p)
                if p not in set_b:
                    _verify_infinite(b, p)
            return ComparisonVerdict(
                "equal", bound=bound,
                reason="both tails cofinite with matching exceptions; witnesses verified",
            )
        if kind_a != kind_b:
            cof_excl, fin_incl = (set_a, set_b) if kind_a == COFINITE else (set_b, set_a)
            p = 2
            while p in cof_excl or p in fin_incl:
                p += 1
                while any(p % q == 0 for q in range(2, int(p**0.5) + 1)):
                    p += 1
            return ComparisonVerdict(
                "not-equal", p, bound,
                f"{p} occurs infinitely often on one side only",
            )
        # both finite: every prime outside the certified sets is frozen
        relevant = set(set_a) | set(set_b) | set(a.known_exponents) | set(b.known_exponents)
        verdict = frozen_mismatch(relevant)
        if verdict:
            return verdict
        for p in sorted(set_a):
            _verify_infinite(a, p)
        for p in sorted(set_b):
            _verify_infinite(b, p)
        return ComparisonVerdict("equal", bound=bound, reason="finite infinite-prime sets agree")

    # At least one side only decides primes pointwise: equality needs a
    # syntactic match of the generators; inequality can still be witnessed.
    if (
        a.tail_rule is not None
        and b.tail_rule is not None
        and a.tail_rule.signature() == b.tail_rule.signature()
    ):
        # align both descriptions on the same count of underlying factors
        ba, bb = a.tail_rule.block_size, b.tail_rule.block_size
        oa, ob = a.tail_rule.prefix_offset, b.tail_rule.prefix_offset
        underlying = max(bound, 1) * ba * bb
        deep_a = a.refresh(oa + underlying // ba)
        deep_b = b.refresh(ob + underlying // bb)
        if deep_a.known == deep_b.known:
            return ComparisonVerdict(
                "equal", bound=bound, reason="same generator up to regrouping"
            )
    scan = sorted(set(a.known_exponents) | set(b.known_exponents) | set(first_primes(25)))
    for p in scan:
        sa, ea = _eventual_exponent(a, p)
        sb, eb = _eventual_exponent(b, p)
        if sa is None or sb is None:
            continue
        if {sa, sb} == {FROZEN, INFINITE}:
            return ComparisonVerdict("not-equal", p, bound, f"prime {p} frozen on one side only")
        if sa == FROZEN and sb == FROZEN and ea != eb:
            return ComparisonVerdict("not-equal", p, bound, f"frozen exponents {ea} vs {eb} at {p}")
    return ComparisonVerdict(
        "undetermined", bound=bound,
        reason="no finite certificate of equality and no witness prime at this bound",
    )


@dataclass(frozen=True)
class K0Description:
    """Ordered K-zero data of a limit algebra: a supernatural multiplicity and the unit class."""

    multiplicity: SupernaturalNumber
    unit_class: int = 1


def k0_of_system(sys, depth: int) -> K0Description:
    """K-zero data read off a system: the supernatural number n0 * prod(n_i + k_i)."""

    def term(i: int) -> int:
        return sys.n0 if i == 1 else sys.term(i - 1)

    rule = sys.k0_tail_rule()
    if rule is not None:
        rule = ShiftedTail(rule, 1)
    else:
        # no family: only the explicit prefix is known
        length = sys.explicit_stage_count()
        explicit = [term(i) for i in range(1, length + 2)]
        return K0Description(from_terms(explicit, min(depth, len(explicit))))
    return K0Description(from_terms(term, depth, tail_rule=rule))

"""Shared exact-arithmetic helpers: rational formatting, big products, small factoring."""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence


def parse_ratio(text: str) -> Fraction:
    """Parse 'p/q' or 'p' into an exact Fraction."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational: {text!r}") from exc


def format_ratio(q: Fraction) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def int_product(values: Sequence[int]) -> int:
    """Product of integers via balanced splitting (keeps big-int factors similar in size)."""
    vals = list(values)
    if not vals:
        return 1

    def rec(lo: int, hi: int) -> int:
        if hi - lo == 1:
            return vals[lo]
        mid = (lo + hi) // 2
        return rec(lo, mid) * rec(mid, hi)

    return rec(0, len(vals))


def ratio_product(pairs: Iterable[tuple[int, int]]) -> Fraction:
    """Exact product of num/den pairs; single reduction at the end."""
    nums, dens = [], []
    for n, d in pairs:
        nums.append(n)
        dens.append(d)
    return Fraction(int_product(nums), int_product(dens))


_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_probable_prime(n: int) -> bool:
    """Miller-Rabin with fixed bases; deterministic below 3.3e24."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _pollard_rho(n: int) -> int:
    """A nontrivial factor of composite odd n (Brent's cycle variant)."""
    if n % 2 == 0:
        return 2
    seed = 1
    while True:
        seed += 1
        y, c, m = seed, seed + 1, 128
        g = r = q = 1
        x = ys = y
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                from math import gcd

                g = gcd(q, n)
                k += m
            r *= 2
        if g == n:
            from math import gcd

            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = gcd(abs(x - ys), n)
        if g != n:
            return g


def prime_factors(n: int) -> dict[int, int]:
    """Prime factorization; rho-based, fast well beyond 64-bit inputs."""
    if n < 1:
        raise ValueError(f"cannot factor {n}")
    out: dict[int, int] = {}
    stack = []
    m = n
    for p in (2, 3, 5, 7, 11, 13):
        while m % p == 0:
            out[p] = out.get(p, 0) + 1
            m //= p
    if m > 1:
        stack.append(m)
    while stack:
        m = stack.pop()
        if m == 1:
            continue
        if is_probable_prime(m):
            out[m] = out.get(m, 0) + 1
            continue
        d = _pollard_rho(m)
        stack.append(d)
        stack.append(m // d)
    return out


def first_primes(count: int) -> list[int]:
    primes: list[int] = []
    n = 2
    while len(primes) < count:
        if all(n % p for p in primes if p * p <= n):
            primes.append(n)
        n += 1
    return primes


def multiplicative_order(a: int, p: int) -> int:
    """Order of a modulo p (p prime, p does not divide a)."""
    if a % p == 0:
        raise ValueError(f"{a} not invertible mod {p}")
    x = a % p
    k = 1
    while x != 1:
        x = (x * a) % p
        k += 1
    return k


def v2(n: int) -> int:
    """2-adic valuation of a positive integer."""
    if n <= 0:
        raise ValueError(f"v2 of {n}")
    k = 0
    while n % 2 == 0:
        n //= 2
        k += 1
    return k

"""Exact classical number theory used around the quantum circuits.

Everything here works on Python integers; there is no floating point.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd
from typing import Optional

from .errors import DigitOverflow, NotCoprime


def mod_pow(base: int, exp: int, N: int) -> int:
    if exp < 0:
        raise ValueError("exponent must be nonnegative")
    return pow(base, exp, N)


def mod_inv(a: int, N: int) -> int:
    g = gcd(a, N)
    if g != 1:
        raise NotCoprime(a, N, g)
    return pow(a, -1, N)


def bit_length(n: int) -> int:
    return max(1, int(n).bit_length())


def multiplicative_order(a: int, N: int) -> int:
    """Smallest d > 0 with a^d = 1 mod N, by brute force."""
    g = gcd(a, N)
    if g != 1:
        raise NotCoprime(a, N, g)
    x, d = a % N, 1
    while x != 1 % N:
        x = x * a % N
        d += 1
    return d


def totient(N: int) -> int:
    return sum(1 for k in range(N) if gcd(k, N) == 1)


def smallest_coprime_base(N: int) -> int:
    for a in range(2, N):
        if gcd(a, N) == 1:
            return a
    raise ValueError(f"no base coprime with {N}")


def digits(x: int, radix: int, count: int) -> list[int]:
    """Base-``radix`` digits of ``x``, least significant first."""
    if radix < 2:
        raise ValueError("radix must be >= 2")
    if x < 0 or x >= radix ** count:
        raise DigitOverflow(f"{x} does not fit in {count} digits of radix {radix}")
    out = []
    for _ in range(count):
        x, d = divmod(x, radix)
        out.append(d)
    return out


def undigits(ds, radix: int) -> int:
    value = 0
    for d in reversed(list(ds)):
        value = value * radix + d
    return value


@dataclass(frozen=True)
class ModCtx:
    """Modulus, base and the classically precomputed power tables."""

    N: int
    a: int
    n: int = field(init=False)
    pow_table: tuple = field(init=False, repr=False)
    inv_table: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if self.N < 3 or self.N % 2 == 0:
            raise ValueError(f"modulus must be odd and >= 3, got {self.N}")
        if not 0 < self.a < self.N:
            raise ValueError(f"base must lie in (0, N), got {self.a}")
        g = gcd(self.a, self.N)
        if g != 1:
            raise NotCoprime(self.a, self.N, g)
        n = (self.N - 1).bit_length()  # ceil(log2 N)
        pows = [self.a % self.N]
        for _ in range(2 * n - 1):
            pows.append(pows[-1] * pows[-1] % self.N)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "pow_table", tuple(pows))
        object.__setattr__(self, "inv_table", tuple(pow(p, -1, self.N) for p in pows))

    def power_table(self, radix: int, count: int) -> tuple:
        """a^(radix^i) mod N for i < count."""
        return tuple(pow(self.a, radix ** i, self.N) for i in range(count))

    @property
    def order(self) -> int:
        return multiplicative_order(self.a, self.N)


@dataclass(frozen=True)
class EuclidRow:
    r: int
    k: int
    r_prime: int


@dataclass(frozen=True)
class MidpointSplit:
    r: int
    r_prime: int
    n_prime: int
    both_below_sqrt: bool
    shared_factor: int = 1


def euclid_trace(a: int, N: int) -> list[EuclidRow]:
    """Rows r*a + k*N = r' of the extended Euclidean algorithm on (N, a)."""
    if not 0 < a < N:
        raise ValueError(f"need 0 < a < N, got a={a}, N={N}")
    g = gcd(a, N)
    if g != 1:
        raise NotCoprime(a, N, g)
    rows = [EuclidRow(0, 1, N), EuclidRow(1, 0, a)]
    while rows[-1].r_prime != 1:
        prev, cur = rows[-2], rows[-1]
        q = prev.r_prime // cur.r_prime
        rows.append(EuclidRow(prev.r - q * cur.r, prev.k - q * cur.k,
                              prev.r_prime - q * cur.r_prime))
    return rows


def midpoint_split(a: int, N: int, require_invertible: bool = False) -> MidpointSplit:
    """Row of the Euclid trace minimising max(|r|, r'); earliest row on ties.

    The result satisfies r*a = r' (mod N), so a = r' / r mod N with both
    numbers about sqrt(N) in size.  With ``require_invertible`` rows whose r
    shares a factor with N (so r has no inverse mod N) are skipped; otherwise
    such a row may be returned and ``shared_factor`` exposes gcd(r, N).
    """
    best = None
    for row in euclid_trace(a, N):
        if row.r == 0 or (require_invertible and gcd(row.r, N) != 1):
            continue
        size = max(abs(row.r), row.r_prime)
        if best is None or size < max(abs(best.r), best.r_prime):
            best = row
    r, rp = best.r, best.r_prime
    # |x| < sqrt(N)  <=>  x^2 < N, kept in integers
    below = r * r < N and rp * rp < N
    return MidpointSplit(r, rp, max(bit_length(abs(r)), bit_length(rp)), below, gcd(r, N))


def convergents(num: int, den: int, limit: Optional[int] = None):
    """Yield the continued-fraction convergents p/q of num/den."""
    h0, h1 = 0, 1
    k0, k1 = 1, 0
    count = 0
    while den:
        if limit is not None and count >= limit:
            return
        q, rem = divmod(num, den)
        h0, h1 = h1, q * h1 + h0
        k0, k1 = k1, q * k1 + k0
        yield h1, k1
        num, den = den, rem
        count += 1


def continued_fraction_order(y: int, Q: int, ctx: ModCtx) -> Optional[int]:
    """Smallest convergent denominator d < N of y/Q with a^d = 1 mod N."""
    if not 0 <= y < Q:
        raise ValueError(f"measurement {y} outside [0, {Q})")
    limit = 2 * max(1, (Q - 1).bit_length())
    for _, d in convergents(y, Q, limit):
        if 0 < d < ctx.N and pow(ctx.a, d, ctx.N) == 1:
            return d
    return None


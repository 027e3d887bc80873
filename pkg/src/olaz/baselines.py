"""Closed-form comparison pilots: Zadoff-Chu roots and extended m-sequences."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .afcore import AmbiguityZone, as_sequence, isl_oaf
from .errors import DomainError


@dataclass(frozen=True)
class ZcParams:
    N: int
    mu: int

    def __post_init__(self):
        if self.N < 2:
            raise DomainError(f"ZC length must be >= 2, got {self.N}")
        if not 1 <= self.mu < 2 * self.N:
            raise DomainError(f"root index must satisfy 1 <= mu < 2N, got {self.mu}")
        if math.gcd(self.mu, self.N) != 1:
            raise DomainError(f"gcd(mu={self.mu}, N={self.N}) != 1")


def zc(params: ZcParams) -> np.ndarray:
    """Zadoff-Chu root sequence ``exp(-1j*pi*mu*k*(k + N%2)/N)``.

    For even ``N`` this is ``zeta_{2N}**(-mu*k**2)``. Odd lengths need the
    ``k(k+1)`` exponent to stay periodic, without which the autocorrelation
    is no longer perfect.
    """
    N, mu = params.N, params.mu
    k = np.arange(N, dtype=np.int64)
    # exponent reduced mod 2N before scaling keeps large k exact
    e = (mu * k * (k + N % 2)) % (2 * N)
    return np.exp(-1j * np.pi * e / N)


def zc_roots(N: int) -> list[int]:
    """Valid root indices ``1 <= mu < N`` (for ``N = 128`` these are the 64 odd values)."""
    return [mu for mu in range(1, N) if math.gcd(mu, N) == 1]


def zc_family(N: int) -> tuple[list[np.ndarray], list[int]]:
    roots = zc_roots(N)
    return [zc(ZcParams(N, mu)) for mu in roots], roots


# GF(2) polynomials are ints: bit i is the coefficient of x**i.

def _gf2_mulmod(a: int, b: int, poly: int, degree: int) -> int:
    result = 0
    top = 1 << degree
    while b:
        if b & 1:
            result ^= a
        b >>= 1
        a <<= 1
        if a & top:
            a ^= poly
    return result


def _gf2_powmod(base: int, e: int, poly: int, degree: int) -> int:
    result = 1
    while e:
        if e & 1:
            result = _gf2_mulmod(result, base, poly, degree)
        base = _gf2_mulmod(base, base, poly, degree)
        e >>= 1
    return result


def _prime_factors(n: int) -> list[int]:
    out, p = [], 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def is_primitive(poly: int, degree: int) -> bool:
    """True when ``x`` has multiplicative order ``2**degree - 1`` modulo ``poly``."""
    if poly >> degree != 1 or not poly & 1:
        return False
    order = (1 << degree) - 1
    x = 2 % poly if degree > 1 else 2 ^ poly
    if _gf2_powmod(x, order, poly, degree) != 1:
        return False
    return all(_gf2_powmod(x, order // q, poly, degree) != 1 for q in _prime_factors(order))


def list_primitive_polys(degree: int) -> list[int]:
    """All primitive polynomials of ``degree`` over GF(2), as ascending bitmasks."""
    if not 2 <= degree <= 16:
        raise DomainError(f"degree must lie in [2, 16], got {degree}")
    lead = 1 << degree
    return [lead | c for c in range(1, lead, 2) if is_primitive(lead | c, degree)]


def poly_str(poly: int) -> str:
    terms = []
    for i in range(poly.bit_length() - 1, -1, -1):
        if poly >> i & 1:
            terms.append("1" if i == 0 else "x" if i == 1 else f"x^{i}")
    return "+".join(terms)


@dataclass(frozen=True)
class MseqParams:
    degree: int
    poly: int

    def __post_init__(self):
        if not 2 <= self.degree <= 16:
            raise DomainError(f"degree must lie in [2, 16], got {self.degree}")
        if not is_primitive(self.poly, self.degree):
            raise DomainError(f"{poly_str(self.poly)} is not primitive of degree {self.degree}")


def mseq_bits(params: MseqParams) -> np.ndarray:
    """One period (``2**d - 1`` bits) of the LFSR sequence with all-ones initial state.

    Recurrence ``s[k+d] = sum_i c_i s[k+i] (mod 2)`` for ``poly = x**d + sum_i c_i x**i``.
    """
    d = params.degree
    taps = [i for i in range(d) if params.poly >> i & 1]
    L = (1 << d) - 1
    s = np.ones(L + d, dtype=np.int8)
    for k in range(L):
        bit = 0
        for i in taps:
            bit ^= s[k + i]
        s[k + d] = bit
    return s[:L]


def mseq(params: MseqParams) -> np.ndarray:
    """Bipolar m-sequence ``(-1)**bits`` of length ``2**d - 1`` (not extended)."""
    return (1.0 - 2.0 * mseq_bits(params)).astype(np.complex128)


def mseq_extended(params: MseqParams) -> np.ndarray:
    """m-sequence with a trailing ``+1`` sample, length ``2**d``."""
    return np.concatenate([mseq(params), [1.0 + 0j]])


def mseq_family(degree: int) -> tuple[list[np.ndarray], list[int]]:
    polys = list_primitive_polys(degree)
    return [mseq_extended(MseqParams(degree, p)) for p in polys], polys


@dataclass
class Ranking:
    best: np.ndarray
    worst: np.ndarray
    best_index: int
    worst_index: int
    table: list[tuple[int, float]]

    def to_csv(self, path, params=None) -> None:
        """Rows ``index,param,isl``; ``param`` is the root / polynomial label if given."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "param", "isl"])
            for idx, isl in self.table:
                label = "" if params is None else params[idx]
                w.writerow([idx, label, repr(isl)])


TIE_RTOL = 1e-9


def rank_family(family, zone: AmbiguityZone) -> Ranking:
    """Order a family by discretised O-AF ISL.

    Values within a relative ``TIE_RTOL`` count as ties and go to the lowest
    index. Conjugate ZC roots ``mu`` and ``N - mu`` have equal ISL in exact
    arithmetic, and rounding alone must not pick between them.
    """
    if len(family) == 0:
        raise DomainError("cannot rank an empty family")
    seqs = [as_sequence(a) for a in family]
    if len({a.size for a in seqs}) != 1:
        raise DomainError("family members must share one length")
    table = [(i, isl_oaf(a, zone)) for i, a in enumerate(seqs)]
    isl = np.array([v for _, v in table])
    best = int(np.flatnonzero(isl <= isl.min() * (1 + TIE_RTOL))[0])
    worst = int(np.flatnonzero(isl >= isl.max() * (1 - TIE_RTOL))[0])
    return Ranking(seqs[best], seqs[worst], best, worst, table)

"""Exact q-combinatorics: inversions, pair partitions, crossings, q-factorials
and q-Hermite polynomials.

Everything here is computed with exact rationals and serves as ground truth
for the floating-point Fock space code.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from . import kernels

PAIRING_GUARD = 16


class QPoly:
    """Univariate polynomial in ``q`` with exact rational coefficients.

    ``coeffs[m]`` is the coefficient of ``q**m``; trailing zeros are stripped so
    equal polynomials have equal coefficient tuples.
    """

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs: Sequence = ()):
        c = [Fraction(x) for x in coeffs]
        while c and c[-1] == 0:
            c.pop()
        self._coeffs = tuple(c)

    @classmethod
    def constant(cls, value) -> "QPoly":
        return cls([value])

    @classmethod
    def monomial(cls, power: int, coeff=1) -> "QPoly":
        return cls([0] * power + [coeff])

    @property
    def coeffs(self) -> tuple:
        return self._coeffs

    @property
    def degree(self) -> int:
        return len(self._coeffs) - 1

    def __call__(self, q):
        if isinstance(q, (int, Fraction)):
            acc = Fraction(0)
            for c in reversed(self._coeffs):
                acc = acc * q + c
            return acc
        acc = 0.0
        for c in reversed(self._coeffs):
            acc = acc * q + float(c)
        return acc

    def _lift(self, other) -> "QPoly":
        if isinstance(other, QPoly):
            return other
        if isinstance(other, (int, Fraction)):
            return QPoly([other])
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        n = max(len(self._coeffs), len(other._coeffs))
        a = self._coeffs + (Fraction(0),) * (n - len(self._coeffs))
        b = other._coeffs + (Fraction(0),) * (n - len(other._coeffs))
        return QPoly([x + y for x, y in zip(a, b)])

    __radd__ = __add__

    def __neg__(self):
        return QPoly([-c for c in self._coeffs])

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        if not self._coeffs or not other._coeffs:
            return QPoly()
        out = [Fraction(0)] * (len(self._coeffs) + len(other._coeffs) - 1)
        for i, a in enumerate(self._coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other._coeffs):
                out[i + j] += a * b
        return QPoly(out)

    __rmul__ = __mul__

    def __eq__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return False
        return self._coeffs == other._coeffs

    def __hash__(self):
        return hash(self._coeffs)

    def __repr__(self):
        if not self._coeffs:
            return "QPoly(0)"
        terms = []
        for m, c in enumerate(self._coeffs):
            if c == 0:
                continue
            terms.append(str(c) if m == 0 else f"{c}*q^{m}")
        return "QPoly(" + " + ".join(terms) + ")"


@dataclass(frozen=True)
class Permutation:
    """A bijection of {1, ..., n} given by its list of images."""

    images: tuple

    def __post_init__(self):
        images = tuple(int(x) for x in self.images)
        if sorted(images) != list(range(1, len(images) + 1)):
            raise ValueError(f"not a permutation of 1..{len(images)}: {images}")
        object.__setattr__(self, "images", images)


@dataclass(frozen=True)
class PairPartition:
    """Perfect matching of {1, ..., n} as pairs (opener, closer)."""

    pairs: tuple

    def __post_init__(self):
        pairs = tuple(sorted((int(a), int(b)) for a, b in self.pairs))
        seen = []
        for a, b in pairs:
            if not a < b:
                raise ValueError(f"pair ({a}, {b}) must have opener < closer")
            seen.extend((a, b))
        if sorted(seen) != list(range(1, 2 * len(pairs) + 1)):
            raise ValueError(f"pairs do not partition 1..{2 * len(pairs)}: {pairs}")
        object.__setattr__(self, "pairs", pairs)

    @property
    def n(self) -> int:
        return 2 * len(self.pairs)


def inversions(p: Permutation) -> int:
    img = p.images
    return sum(1 for i in range(len(img)) for j in range(i + 1, len(img)) if img[i] > img[j])


def _check_pairing_size(n: int) -> None:
    if n < 0 or n % 2:
        raise ValueError(f"pair partitions need an even n >= 0, got {n}")
    if n > PAIRING_GUARD:
        raise OverflowError(f"n={n} exceeds the enumeration guard n <= {PAIRING_GUARD}")


def enumerate_pair_partitions(n: int) -> Iterator[PairPartition]:
    """Yield every pair partition of {1..n}, each exactly once."""
    _check_pairing_size(n)

    def rec(free: tuple, acc: list):
        if not free:
            yield PairPartition(tuple(acc))
            return
        first, rest = free[0], free[1:]
        for k, partner in enumerate(rest):
            acc.append((first, partner))
            yield from rec(rest[:k] + rest[k + 1:], acc)
            acc.pop()

    yield from rec(tuple(range(1, n + 1)), [])


def crossings(v: PairPartition) -> int:
    pairs = v.pairs
    return sum(
        1
        for a, b in pairs
        for c, d in pairs
        if a < c < b < d
    )


def q_integer(n: int) -> QPoly:
    # [0]_q = 0 by convention
    return QPoly([1] * n)


def q_factorial(n: int) -> QPoly:
    if n < 0:
        raise ValueError("q_factorial needs n >= 0")
    out = QPoly([1])
    for j in range(1, n + 1):
        out = out * q_integer(j)
    return out


def crossing_histogram(n: int) -> list[int]:
    """Number of pair partitions of {1..n} with c crossings, indexed by c."""
    _check_pairing_size(n)
    return kernels.crossing_histogram(n)


def moment_polynomial(n: int) -> QPoly:
    """Sum of q**crossings(V) over all pair partitions V of {1..n}."""
    _check_pairing_size(n)
    return QPoly(crossing_histogram(n))


def moment_polynomial_bruteforce(n: int) -> QPoly:
    hist: dict[int, int] = {}
    for v in enumerate_pair_partitions(n):
        c = crossings(v)
        hist[c] = hist.get(c, 0) + 1
    top = max(hist) if hist else 0
    return QPoly([hist.get(c, 0) for c in range(top + 1)])


def q_hermite(n: int) -> tuple[QPoly, ...]:
    """q-Hermite polynomial H_n as coefficients of x**0 .. x**n.

    Built from H_0 = 1, H_1 = x, x H_k = H_{k+1} + [k]_q H_{k-1}.
    """
    if n < 0:
        raise ValueError("q_hermite needs n >= 0")
    prev: list[QPoly] = [QPoly([1])]
    if n == 0:
        return tuple(prev)
    cur: list[QPoly] = [QPoly(), QPoly([1])]
    for k in range(1, n):
        nxt = [QPoly()] + cur  # x * H_k
        qk = q_integer(k)
        for i, c in enumerate(prev):
            nxt[i] = nxt[i] - qk * c
        prev, cur = cur, nxt
    return tuple(cur)


def hermite_coefficients(n: int, q: float) -> list[float]:
    return [c(q) for c in q_hermite(n)]


def catalan(m: int) -> int:
    from math import comb

    return comb(2 * m, m) // (m + 1)


def double_factorial_odd(n: int) -> int:
    """(n-1)!! for even n."""
    out = 1
    for k in range(1, n, 2):
        out *= k
    return out


def matched_inversion_polynomial(w: Sequence[int], v: Sequence[int]) -> QPoly:
    """Sum of q**inversions(pi) over permutations pi with v[pi(k)] == w[k].

    Backtracking over positions of ``w``; inversions are counted incrementally
    as each image is placed. Exact, exponential: oracle use only.
    """
    n = len(w)
    if len(v) != n:
        return QPoly()
    hist: dict[int, int] = {}
    used = [False] * n

    def rec(k: int, inv: int):
        if k == n:
            hist[inv] = hist.get(inv, 0) + 1
            return
        for j in range(n):
            if used[j] or v[j] != w[k]:
                continue
            # images already placed that exceed j each form one inversion
            extra = sum(1 for i in range(j + 1, n) if used[i])
            used[j] = True
            rec(k + 1, inv + extra)
            used[j] = False

    rec(0, 0)
    if not hist:
        return QPoly()
    return QPoly([hist.get(c, 0) for c in range(max(hist) + 1)])

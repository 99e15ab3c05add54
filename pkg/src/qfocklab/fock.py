"""Truncated q-Fock space over a finite representation.

Level n carries the d**n words in the eigenbasis letters; word
(a_1, ..., a_n) has index sum a_k d**(n-k), first letter most significant.
Words with different letter multisets are orthogonal for <., .>_q, so each
level Gram matrix is block diagonal over multisets and stored that way.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import kernels
from .qcomb import q_integer
from .repn import HVector, Representation, deformed_inner

DEFAULT_WORD_BUDGET = 200_000
DEFAULT_GRAM_ENTRY_BUDGET = 50_000_000


class BudgetError(ValueError):
    pass


def _digits(n: int, d: int) -> np.ndarray:
    """(d**n, n) array of letters of every level-n word."""
    idx = np.arange(d ** n, dtype=np.int64)
    cols = [(idx // d ** (n - 1 - k)) % d for k in range(n)]
    return np.stack(cols, axis=1) if cols else np.zeros((1, 0), dtype=np.int64)


@dataclass(frozen=True, eq=False)
class LevelIndex:
    n: int
    d: int
    block_of: np.ndarray
    pos: np.ndarray
    size: np.ndarray
    members: np.ndarray
    member_off: np.ndarray
    data_off: np.ndarray

    @classmethod
    def build(cls, n: int, d: int) -> "LevelIndex":
        words = _digits(n, d)
        counts = np.stack([(words == a).sum(axis=1) for a in range(d)], axis=1)
        _, block_of = np.unique(counts, axis=0, return_inverse=True)
        block_of = block_of.reshape(-1).astype(np.int64)
        order = np.argsort(block_of, kind="stable")
        size = np.bincount(block_of).astype(np.int64)
        member_off = np.concatenate([[0], np.cumsum(size)]).astype(np.int64)
        pos = np.empty_like(block_of)
        pos[order] = np.arange(len(order)) - member_off[block_of[order]]
        data_off = np.concatenate([[0], np.cumsum(size * size)]).astype(np.int64)
        return cls(n, d, block_of, pos, size, order.astype(np.int64), member_off, data_off)

    @property
    def dim(self) -> int:
        return self.block_of.shape[0]

    @property
    def n_blocks(self) -> int:
        return self.size.shape[0]

    def block_members(self, b: int) -> np.ndarray:
        return self.members[self.member_off[b]:self.member_off[b + 1]]


class LevelGram:
    """Gram matrix of one level, block diagonal over letter multisets."""

    def __init__(self, index: LevelIndex, data: np.ndarray):
        self.index = index
        self.data = data
        self.data.setflags(write=False)
        self._factors: dict[int, tuple[str, object]] = {}

    @property
    def dim(self) -> int:
        return self.index.dim

    def block(self, b: int) -> np.ndarray:
        s = self.index.size[b]
        o = self.index.data_off[b]
        return self.data[o:o + s * s].reshape(s, s)

    def blocks(self):
        for b in range(self.index.n_blocks):
            yield self.index.block_members(b), self.block(b)

    def dense(self) -> np.ndarray:
        g = np.zeros((self.dim, self.dim))
        for mem, blk in self.blocks():
            g[np.ix_(mem, mem)] = blk
        return g

    @cached_property
    def sparse(self) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        for mem, blk in self.blocks():
            r, c = np.meshgrid(mem, mem, indexing="ij")
            rows.append(r.ravel())
            cols.append(c.ravel())
            vals.append(blk.ravel())
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.dim, self.dim),
        )

    def _factor(self, b: int):
        if b not in self._factors:
            blk = self.block(b)
            try:
                self._factors[b] = ("chol", sla.cho_factor(blk, lower=True))
            except np.linalg.LinAlgError:
                # pivoted Cholesky P^T G P = L L^T for numerically borderline blocks
                c, piv, rank, info = sla.lapack.dpstrf(blk, lower=1)
                if info < 0:
                    raise np.linalg.LinAlgError(f"dpstrf failed on Gram block {b} (info={info})")
                self._factors[b] = ("pchol", (np.tril(c), piv - 1, rank))
        return self._factors[b]

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.sparse @ v

    def solve(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros_like(v, dtype=np.result_type(v, np.float64))
        for b in range(self.index.n_blocks):
            mem = self.index.block_members(b)
            kind, fac = self._factor(b)
            rhs = v[mem]
            if kind == "chol":
                out[mem] = sla.cho_solve(fac, rhs)
                continue
            low, piv, rank = fac
            if rank < len(mem):
                raise np.linalg.LinAlgError(f"Gram block {b} is numerically singular (rank {rank})")
            y = sla.solve_triangular(low, rhs[piv], lower=True)
            y = sla.solve_triangular(low.T, y, lower=False)
            sol = np.empty_like(y)
            sol[piv] = y
            out[mem] = sol
        return out

    def whiten(self, v: np.ndarray) -> np.ndarray:
        """Return L^H v with G = L L^H, so that |whiten(v)|^2 = v^H G v."""
        out = np.zeros_like(v, dtype=np.result_type(v, np.float64))
        for b in range(self.index.n_blocks):
            mem = self.index.block_members(b)
            kind, fac = self._factor(b)
            if kind == "chol":
                out[mem] = np.tril(fac[0]).T @ v[mem]
            else:
                low, piv, rank = fac
                # columns past the numerical rank are dropped; the norm identity still holds
                w = np.zeros((len(mem),) + v.shape[1:], dtype=out.dtype)
                w[:rank] = low[:, :rank].T @ v[mem][piv]
                out[mem] = w
        return out

    @cached_property
    def eigenvalue_range(self) -> tuple[float, float]:
        lo, hi = np.inf, -np.inf
        for _, blk in self.blocks():
            w = np.linalg.eigvalsh(blk)
            lo, hi = min(lo, w[0]), max(hi, w[-1])
        return float(lo), float(hi)

    @property
    def min_eigenvalue(self) -> float:
        return self.eigenvalue_range[0]

    @property
    def condition_number(self) -> float:
        lo, hi = self.eigenvalue_range
        return hi / lo if lo > 0 else float("inf")


class FockVector:
    """Element of the truncated Fock space: one coefficient array per level."""

    __slots__ = ("parts",)

    def __init__(self, parts: Sequence[np.ndarray]):
        self.parts = [np.asarray(p, dtype=np.complex128) for p in parts]

    @classmethod
    def zeros(cls, dims: Sequence[int]) -> "FockVector":
        return cls([np.zeros(k, dtype=np.complex128) for k in dims])

    @property
    def cutoff(self) -> int:
        return len(self.parts) - 1

    def level(self, n: int) -> np.ndarray:
        return self.parts[n]

    def flat(self) -> np.ndarray:
        return np.concatenate(self.parts)

    def max_level(self, tol: float = 0.0) -> int:
        top = -1
        for n, p in enumerate(self.parts):
            if p.size and np.max(np.abs(p)) > tol:
                top = n
        return top

    def _combine(self, other, f):
        return FockVector([f(a, b) for a, b in zip(self.parts, other.parts)])

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __neg__(self):
        return FockVector([-p for p in self.parts])

    def __mul__(self, c):
        return FockVector([c * p for p in self.parts])

    __rmul__ = __mul__

    def conj(self):
        return FockVector([p.conj() for p in self.parts])


class GradedOperator:
    """Map on the truncated Fock space stored as (source, target) level blocks.

    A conjugate-linear operator acts as v -> M conj(v) blockwise.
    """

    def __init__(self, dims: Sequence[int], blocks: dict | None = None,
                 conjugate_linear: bool = False):
        self.dims = tuple(int(x) for x in dims)
        self.blocks: dict[tuple[int, int], sp.csr_matrix] = {}
        self.conjugate_linear = conjugate_linear
        for key, m in (blocks or {}).items():
            s, t = key
            if not (0 <= s < len(self.dims) and 0 <= t < len(self.dims)):
                raise ValueError(f"block {key} outside levels 0..{len(self.dims) - 1}")
            m = sp.csr_matrix(m, dtype=np.complex128)
            if m.shape != (self.dims[t], self.dims[s]):
                raise ValueError(f"block {key} has shape {m.shape}")
            self.blocks[(s, t)] = m

    @classmethod
    def identity(cls, dims: Sequence[int]) -> "GradedOperator":
        return cls(dims, {(n, n): sp.identity(k, dtype=np.complex128, format="csr")
                          for n, k in enumerate(dims)})

    @classmethod
    def diagonal(cls, diag_parts: Sequence[np.ndarray]) -> "GradedOperator":
        dims = [len(p) for p in diag_parts]
        return cls(dims, {(n, n): sp.diags(p, format="csr") for n, p in enumerate(diag_parts)})

    @property
    def cutoff(self) -> int:
        return len(self.dims) - 1

    def _same_kind(self, other: "GradedOperator") -> None:
        if self.dims != other.dims:
            raise ValueError("operators live on different truncated spaces")
        if self.conjugate_linear != other.conjugate_linear:
            raise ValueError("cannot add linear and conjugate-linear operators")

    def __add__(self, other):
        if not isinstance(other, GradedOperator):
            other = GradedOperator.identity(self.dims) * other
        self._same_kind(other)
        out = dict(self.blocks)
        for key, m in other.blocks.items():
            out[key] = out[key] + m if key in out else m
        return GradedOperator(self.dims, out, self.conjugate_linear)

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        if not isinstance(other, GradedOperator):
            other = GradedOperator.identity(self.dims) * other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, c):
        return GradedOperator(self.dims, {k: m * c for k, m in self.blocks.items()},
                              self.conjugate_linear)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, FockVector):
            return self.apply(other)
        if not isinstance(other, GradedOperator):
            return NotImplemented
        if self.dims != other.dims:
            raise ValueError("operators live on different truncated spaces")
        out: dict[tuple[int, int], sp.csr_matrix] = {}
        for (s, m), b in other.blocks.items():
            for (m2, t), a in self.blocks.items():
                if m2 != m:
                    continue
                prod = a @ (b.conj() if self.conjugate_linear else b)
                out[(s, t)] = out[(s, t)] + prod if (s, t) in out else prod
        return GradedOperator(self.dims, out, self.conjugate_linear != other.conjugate_linear)

    def apply(self, v: FockVector) -> FockVector:
        if len(v.parts) != len(self.dims):
            raise ValueError("vector and operator have different cutoffs")
        out = FockVector.zeros(self.dims)
        for (s, t), m in self.blocks.items():
            src = v.parts[s].conj() if self.conjugate_linear else v.parts[s]
            out.parts[t] = out.parts[t] + m @ src
        return out

    def power(self, k: int) -> "GradedOperator":
        out = GradedOperator.identity(self.dims)
        for _ in range(k):
            out = self @ out
        return out

    def restrict(self, sources: Iterable[int]) -> "GradedOperator":
        keep = set(sources)
        return GradedOperator(self.dims, {k: m for k, m in self.blocks.items() if k[0] in keep},
                              self.conjugate_linear)

    def frobenius(self) -> float:
        return float(np.sqrt(sum(sp.linalg.norm(m) ** 2 for m in self.blocks.values())))

    def dense(self) -> np.ndarray:
        off = np.concatenate([[0], np.cumsum(self.dims)])
        out = np.zeros((off[-1], off[-1]), dtype=np.complex128)
        for (s, t), m in self.blocks.items():
            out[off[t]:off[t + 1], off[s]:off[s + 1]] += m.toarray()
        return out

    def block(self, source: int, target: int) -> np.ndarray:
        m = self.blocks.get((source, target))
        if m is None:
            return np.zeros((self.dims[target], self.dims[source]), dtype=np.complex128)
        return m.toarray()


@dataclass(eq=False)
class TruncatedFock:
    rep: Representation
    q: float
    cutoff: int
    grams: list[LevelGram] = dc_field(repr=False)

    @property
    def d(self) -> int:
        return self.rep.dim

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(self.d ** n for n in range(self.cutoff + 1))

    def words(self, n: int) -> np.ndarray:
        return _digits(n, self.d)

    def word_index(self, word: Sequence[int]) -> int:
        idx = 0
        for a in word:
            idx = idx * self.d + int(a)
        return idx

    def vacuum(self) -> FockVector:
        v = FockVector.zeros(self.dims)
        v.parts[0][0] = 1.0
        return v

    def basis_word(self, word: Sequence[int]) -> FockVector:
        v = FockVector.zeros(self.dims)
        v.parts[len(word)][self.word_index(word)] = 1.0
        return v

    def tensor(self, letters: Sequence[HVector]) -> FockVector:
        """xi_1 (x) ... (x) xi_n as a level-n vector."""
        if len(letters) > self.cutoff:
            raise ValueError(f"tensor of length {len(letters)} exceeds cutoff {self.cutoff}")
        c = np.ones(1, dtype=np.complex128)
        for x in letters:
            c = np.kron(c, x.coords)
        v = FockVector.zeros(self.dims)
        v.parts[len(letters)] = c
        return v

    def tensor_power(self, x: HVector, m: int) -> FockVector:
        return self.tensor([x] * m)

    def gram_apply(self, v: FockVector) -> FockVector:
        return FockVector([g.apply(p) if p.any() else p for p, g in zip(v.parts, self.grams)])

    def inner(self, u: FockVector, v: FockVector) -> complex:
        """<u, v>_q, conjugate-linear in u."""
        total = 0j
        for a, b, g in zip(u.parts, v.parts, self.grams):
            if a.any() and b.any():
                total += np.vdot(a, g.apply(b))
        return complex(total)

    def norm(self, v: FockVector) -> float:
        return float(np.sqrt(max(self.inner(v, v).real, 0.0)))

    def embed(self, x: HVector) -> FockVector:
        return self.tensor([x])


def build_fock(rep: Representation, q: float, cutoff: int,
               word_budget: int = DEFAULT_WORD_BUDGET,
               gram_entry_budget: int = DEFAULT_GRAM_ENTRY_BUDGET) -> TruncatedFock:
    if not -1.0 < q < 1.0:
        raise ValueError(f"q must lie in (−1,1), got {q}")
    if int(cutoff) != cutoff or cutoff < 0:
        raise ValueError(f"cutoff must be a nonnegative integer, got {cutoff}")
    d = rep.dim
    total = sum(d ** n for n in range(cutoff + 1))
    if total > word_budget:
        raise BudgetError(f"{total} basis words exceed the budget of {word_budget}")
    grams: list[LevelGram] = []
    entries = 0
    prev: LevelGram | None = None
    for n in range(cutoff + 1):
        idx = LevelIndex.build(n, d)
        entries += int(idx.data_off[-1])
        if entries > gram_entry_budget:
            raise BudgetError(f"Gram storage of {entries} entries exceeds {gram_entry_budget}")
        if prev is None:
            data = np.ones(1)
        else:
            pi = prev.index
            data = kernels.gram_level(n, d, float(q), pi.block_of, pi.pos, pi.size,
                                      pi.data_off, np.ascontiguousarray(prev.data),
                                      idx.members, idx.member_off, idx.data_off)
        prev = LevelGram(idx, np.asarray(data, dtype=np.float64))
        grams.append(prev)
    return TruncatedFock(rep, float(q), int(cutoff), grams)


# operators ---------------------------------------------------------------

def creation(fock: TruncatedFock, xi: HVector) -> GradedOperator:
    """Left creation c(xi); the top level maps to zero."""
    fock.rep._check(xi)
    col = sp.csr_matrix(xi.coords.reshape(-1, 1))
    blocks = {}
    for n in range(fock.cutoff):
        blocks[(n, n + 1)] = sp.kron(col, sp.identity(fock.d ** n), format="csr")
    return GradedOperator(fock.dims, blocks)


def annihilation(fock: TruncatedFock, xi: HVector) -> GradedOperator:
    """Left annihilation c(xi)*, removing letter p with weight q**p <xi, letter>_U."""
    fock.rep._check(xi)
    d = fock.d
    row = sp.csr_matrix(xi.coords.conj().reshape(1, -1))
    blocks = {}
    for n in range(1, fock.cutoff + 1):
        acc = None
        for p in range(n):
            term = sp.kron(sp.kron(sp.identity(d ** p), row), sp.identity(d ** (n - 1 - p)))
            term = term * (fock.q ** p)
            acc = term if acc is None else acc + term
        blocks[(n, n - 1)] = acc.tocsr()
    return GradedOperator(fock.dims, blocks)


def field(fock: TruncatedFock, xi: HVector) -> GradedOperator:
    if not xi.real:
        raise ValueError("field operators are defined only for real vectors")
    return creation(fock, xi) + annihilation(fock, xi)


def gram_adjoint(fock: TruncatedFock, x: GradedOperator) -> GradedOperator:
    """Adjoint for <., .>_q: block (t->s) of the result is G_s^{-1} X_{s->t}^H G_t."""
    if x.conjugate_linear:
        raise ValueError("gram_adjoint is defined for linear operators only")
    out = {}
    for (s, t), m in x.blocks.items():
        gt = fock.grams[t].apply(m.toarray())  # G_t X
        adj = fock.grams[s].solve(gt.conj().T)  # G_s^{-1} X^H G_t
        out[(t, s)] = adj
    return GradedOperator(fock.dims, out)


def vacuum_eval(fock: TruncatedFock, x: GradedOperator) -> complex:
    """<Omega, X Omega>_q."""
    m = x.blocks.get((0, 0))
    return 0j if m is None else complex(m[0, 0])


def poly_apply(x: GradedOperator, coeffs: Sequence[complex], v: FockVector) -> FockVector:
    """p(X) v for p = sum_k coeffs[k] t**k, by Horner's rule."""
    if not len(coeffs):
        return v * 0.0
    out = v * coeffs[-1]
    for c in reversed(coeffs[:-1]):
        out = x.apply(out) + v * c
    return out


def poly_operator(x: GradedOperator, coeffs: Sequence[complex]) -> GradedOperator:
    out = GradedOperator.identity(x.dims) * 0.0
    for c in reversed(list(coeffs)):
        out = x @ out + c
    return out


def wick_word(fock: TruncatedFock, letters: Sequence[HVector]) -> GradedOperator:
    """Operator W in the algebra of fields with W Omega = xi_1 (x) ... (x) xi_n.

    W(xi (x) f) = s(xi) W(f) - W(c(xi)* f), where c(xi)* f is expanded over
    the sub-words of f.
    """
    n = len(letters)
    if n > fock.cutoff:
        raise ValueError(f"word of length {n} exceeds cutoff {fock.cutoff}")
    for x in letters:
        if not x.real:
            raise ValueError("wick_word needs real letters")
    fields = [field(fock, x) for x in letters]
    gram = np.array([[deformed_inner(fock.rep, a, b) for b in letters] for a in letters])
    memo: dict[tuple[int, ...], GradedOperator] = {(): GradedOperator.identity(fock.dims)}

    def w(word: tuple[int, ...]) -> GradedOperator:
        if word in memo:
            return memo[word]
        head, rest = word[0], word[1:]
        out = fields[head] @ w(rest)
        for p, letter in enumerate(rest):
            coef = (fock.q ** p) * gram[head, letter]
            if coef != 0:
                out = out - w(rest[:p] + rest[p + 1:]) * coef
        memo[word] = out
        return out

    return w(tuple(range(n)))


def q_commutation_residual(fock: TruncatedFock, xi: HVector, eta: HVector) -> float:
    """Size of c*(xi) c(eta) - q c(eta) c*(xi) - <xi, eta>_U on levels 0..N-1."""
    lhs = (annihilation(fock, xi) @ creation(fock, eta)
           - fock.q * (creation(fock, eta) @ annihilation(fock, xi))
           - deformed_inner(fock.rep, xi, eta))
    return lhs.restrict(range(fock.cutoff)).frobenius()


def hermite_vectors(fock: TruncatedFock, xi: HVector, n_max: int) -> list[FockVector]:
    """[H_0(s(xi)) Omega, ..., H_{n_max}(s(xi)) Omega] via the three-term recursion."""
    s = field(fock, xi)
    out = [fock.vacuum()]
    for k in range(n_max):
        nxt = s.apply(out[-1])
        if k:
            nxt = nxt - out[-2] * q_integer(k)(fock.q)
        out.append(nxt)
    return out


def hermite_vector(fock: TruncatedFock, xi: HVector, n: int) -> FockVector:
    return hermite_vectors(fock, xi, n)[n]

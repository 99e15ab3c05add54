"""Tomita-Takesaki data of the vacuum state on the truncated Fock space.

Eigenbasis letters are eigenvectors of A, so the modular operator, the
modular flow and the second-quantised U_t are all diagonal on words. The
modular conjugation is word reversal composed with a letter map and complex
conjugation; it is kept in that factored form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .fock import (
    FockVector,
    GradedOperator,
    TruncatedFock,
    field as field_op,
    gram_adjoint,
)
from .repn import HVector, Representation, fixed_projection

_EXP_LIMIT = 700.0


def _word_sums(per_letter: np.ndarray, cutoff: int) -> list[np.ndarray]:
    """Level tables of sum over letters of ``per_letter`` for every word."""
    out = [np.zeros(1, dtype=per_letter.dtype)]
    for _ in range(cutoff):
        out.append(np.add.outer(per_letter, out[-1]).ravel())
    return out


@dataclass(frozen=True, eq=False)
class ModularData:
    fock: TruncatedFock
    log_delta: list = field(repr=False)  # per level: log of word Delta-eigenvalue
    log_generator: list = field(repr=False)  # per level: log of word A-eigenvalue product
    j_perm: list = field(repr=False)  # per level: index of the image word under J
    j_scale: list = field(repr=False)  # per level: scalar attached to the image word
    letter_perm: np.ndarray = field(repr=False)
    letter_scale: np.ndarray = field(repr=False)

    @property
    def rep(self) -> Representation:
        return self.fock.rep

    def delta_eigenvalues(self, n: int) -> np.ndarray:
        return np.exp(self.log_delta[n])

    def apply_j(self, v: FockVector) -> FockVector:
        out = FockVector.zeros(self.fock.dims)
        for n, part in enumerate(v.parts):
            out.parts[n][self.j_perm[n]] = self.j_scale[n] * part.conj()
        return out

    def apply_delta(self, z: complex, v: FockVector) -> FockVector:
        return FockVector([np.exp(z * ld) * p for ld, p in zip(self._checked(z), v.parts)])

    def _checked(self, z: complex) -> list[np.ndarray]:
        top = max(float(np.max(np.abs(ld))) for ld in self.log_delta)
        if abs(complex(z).real) * top > _EXP_LIMIT:
            raise OverflowError(f"Delta^{z} overflows on words up to level {self.fock.cutoff}")
        return self.log_delta


def _letter_conjugation(rep: Representation) -> tuple[np.ndarray, np.ndarray]:
    """Letter map of xi -> A^{-1/2} conj(xi) as (permutation, scale).

    Derived from the real-coordinate conjugation; raises if the resulting
    matrix is not monomial in the eigenbasis.
    """
    conj_eig = rep.to_eigen @ rep.to_real.conj()
    m = np.diag(rep.eigenvalues ** -0.5) @ conj_eig
    perm = np.argmax(np.abs(m), axis=0)
    scale = m[perm, np.arange(rep.dim)]
    residual = m.copy()
    residual[perm, np.arange(rep.dim)] = 0
    if np.max(np.abs(residual)) > 1e-12 or len(set(perm.tolist())) != rep.dim:
        raise ValueError("modular conjugation is not monomial in the eigenbasis")
    return perm, scale


def build_modular(fock: TruncatedFock) -> ModularData:
    rep = fock.rep
    d, cutoff = rep.dim, fock.cutoff
    log_a = np.log(rep.eigenvalues)
    log_delta = _word_sums(-log_a, cutoff)
    log_gen = _word_sums(log_a, cutoff)
    perm, scale = _letter_conjugation(rep)
    j_perm, j_scale = [np.zeros(1, dtype=np.int64)], [np.ones(1, dtype=np.complex128)]
    for n in range(1, cutoff + 1):
        words = fock.words(n)
        image = perm[words[:, ::-1]]
        idx = np.zeros(len(words), dtype=np.int64)
        for k in range(n):
            idx = idx * d + image[:, k]
        j_perm.append(idx)
        j_scale.append(np.prod(scale[words], axis=1))
    return ModularData(fock, log_delta, log_gen, j_perm, j_scale, perm, scale)


def delta_power(md: ModularData, z: complex) -> GradedOperator:
    return GradedOperator.diagonal([np.exp(z * ld) for ld in md._checked(z)])


def modular_conjugation(md: ModularData) -> GradedOperator:
    blocks = {}
    for n, (perm, scale) in enumerate(zip(md.j_perm, md.j_scale)):
        k = len(perm)
        blocks[(n, n)] = sp.csr_matrix((scale, (perm, np.arange(k))), shape=(k, k))
    return GradedOperator(md.fock.dims, blocks, conjugate_linear=True)


def flow_unitary(md: ModularData, t: float) -> GradedOperator:
    """Second quantisation of U_t: the word phase is the product of letter phases."""
    return GradedOperator.diagonal([np.exp(1j * t * lg) for lg in md.log_generator])


def quarter_norm_closed_form(rep: Representation, xi: HVector) -> float:
    """sqrt(<(2 A^{1/2}/(1+A)) xi, xi>) evaluated in real coordinates."""
    a = rep.generator_real()
    w, u = np.linalg.eigh(a)
    b = (u * (2 * np.sqrt(w) / (1 + w))) @ u.conj().T
    x = rep.to_real_coords(xi)
    return float(np.sqrt(np.vdot(x, b @ x).real))


def mixed_vector_mu(rep: Representation, xi: HVector) -> float:
    """Fixed part squared plus sum_k 2 sqrt(lam_k)/(1+lam_k) |block-k part|^2."""
    x = rep.to_real_coords(xi).real
    nf = rep.spec.n_fixed
    total = float(np.sum(x[:nf] ** 2))
    for k, lam in enumerate(rep.spec.lambdas):
        i, j = rep.block_indices(k)
        total += 2 * np.sqrt(lam) / (1 + lam) * (x[i] ** 2 + x[j] ** 2)
    return total


def delta_quarter_norm(md: ModularData, xi: HVector) -> tuple[float, float]:
    """Numeric |Delta^{1/4} xi|_q and its closed form."""
    if not xi.real:
        raise ValueError("delta_quarter_norm needs a real vector")
    v = md.apply_delta(0.25, md.fock.embed(xi))
    return md.fock.norm(v), quarter_norm_closed_form(md.rep, xi)


def delta_alpha_norm_xi0(md: ModularData, alpha: float, block: int,
                         betas=(0.0,)) -> tuple[list[float], float]:
    """Norms |Delta^{alpha + i beta} xi_0|_q over ``betas`` and the closed form."""
    rep = md.rep
    if not 0 <= block < len(rep.spec.lambdas):
        raise ValueError(f"no rotation block {block}")
    lam = rep.spec.lambdas[block]
    if abs(2 * alpha) * np.log(lam) > _EXP_LIMIT:
        raise OverflowError(f"lambda^(2 alpha) overflows for alpha={alpha}")
    xi0, _ = rep.block_vectors(block)
    v = md.fock.embed(xi0)
    numeric = [md.fock.norm(md.apply_delta(complex(alpha, beta), v)) for beta in betas]
    closed = float(np.sqrt((lam ** (2 * alpha) + lam ** (1 - 2 * alpha)) / (1 + lam)))
    return numeric, closed


# structural identities ----------------------------------------------------

def covariance_residual(md: ModularData, xi: HVector, t: float) -> float:
    """|F(U_t) s(xi) F(U_t)^{-1} - s(U_t xi)| on levels 0..N-1."""
    from .repn import unitary_at

    fock = md.fock
    f = flow_unitary(md, t)
    f_inv = flow_unitary(md, -t)
    rotated = HVector(unitary_at(fock.rep, t) @ xi.coords, real=True)
    diff = f @ field_op(fock, xi) @ f_inv - field_op(fock, rotated)
    return diff.restrict(range(fock.cutoff)).frobenius()


def j_involution_residual(md: ModularData) -> float:
    j = modular_conjugation(md)
    return (j @ j - 1.0).frobenius()


def commutant_locality_residual(md: ModularData, xi: HVector, eta: HVector) -> float:
    """|[s(xi), J s(eta) J]| restricted to levels 0..N-2."""
    fock = md.fock
    j = modular_conjugation(md)
    right = j @ field_op(fock, eta) @ j
    left = field_op(fock, xi)
    comm = left @ right - right @ left
    return comm.restrict(range(max(fock.cutoff - 1, 0))).frobenius()


def s_property_residual(md: ModularData, x: GradedOperator) -> float:
    """|J Delta^{1/2} x Omega - x^dagger Omega|_q for x in the field algebra."""
    fock = md.fock
    omega = fock.vacuum()
    lhs = md.apply_j(md.apply_delta(0.5, x @ omega))
    rhs = gram_adjoint(fock, x) @ omega
    return fock.norm(lhs - rhs)


def cp_pairing_witness(md: ModularData, a_ops, x_ops) -> tuple[complex, float]:
    """Pairing sum_{l,m} <a_l^* a_m Omega, J x_m^* x_l Omega>_q and
    the squared norm |sum_l J x_l J a_l Omega|_q^2."""
    fock = md.fock
    omega = fock.vacuum()
    a_adj = [gram_adjoint(fock, a) for a in a_ops]
    x_adj = [gram_adjoint(fock, x) for x in x_ops]
    pairing = 0j
    for l in range(len(a_ops)):
        for m in range(len(a_ops)):
            left = a_adj[l] @ (a_ops[m] @ omega)
            right = md.apply_j(x_adj[m] @ (x_ops[l] @ omega))
            pairing += fock.inner(left, right)
    total = FockVector.zeros(fock.dims)
    for a, x in zip(a_ops, x_ops):
        total = total + md.apply_j(x @ md.apply_j(a @ omega))
    return pairing, fock.norm(total) ** 2


def is_fixed(rep: Representation, xi: HVector, tol: float = 1e-10) -> bool:
    return float(np.linalg.norm((xi - fixed_projection(rep, xi)).coords)) <= tol

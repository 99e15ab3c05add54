"""Generator subalgebras: embedding coefficients, Hilbert-Schmidt and nuclear
certificates, the fixed/non-fixed verdict, moment tables and a commutant probe.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import qcomb
from .fock import (
    BudgetError,
    FockVector,
    TruncatedFock,
    build_fock,
    field as field_op,
    hermite_vectors,
    vacuum_eval,
    wick_word,
)
from .modular import ModularData, build_modular, mixed_vector_mu
from .repn import HVector, Representation, deformed_norm, fixed_projection

FIXED_EPS = 1e-9
FIXED_TOL = 1e-10
NULL_THRESHOLD = 1e-8
DEFAULT_PROBE_BUDGET = 400

VERDICT_FIXED = "fixed: expectation-exists"
VERDICT_NONFIXED = "non-fixed: quasi-split-certificate"
VERDICT_INDETERMINATE = "indeterminate"

CONDITIONAL_NOTES = (
    "If the ambient algebra is of type III, the relative commutant of the generator "
    "subalgebra is of type III; if it is a type III factor the inclusion is split. "
    "Neither hypothesis is decided at finite truncation.",
)


class CertificateUnavailable(ValueError):
    pass


@dataclass(eq=False)
class GeneratorSubalgebraModel:
    fock: TruncatedFock
    modular: ModularData
    xi: HVector
    basis: list  # xi^{(x) m} / sqrt([m]_q!) for m = 0..N

    @property
    def cutoff(self) -> int:
        return self.fock.cutoff

    def orthonormality_error(self) -> float:
        n = len(self.basis)
        g = np.array([[self.fock.inner(a, b) for b in self.basis] for a in self.basis])
        return float(np.max(np.abs(g - np.eye(n))))

    def normalized_hermite_vectors(self) -> list[FockVector]:
        q = self.fock.q
        hs = hermite_vectors(self.fock, self.xi, self.cutoff)
        return [h * (1 / np.sqrt(qcomb.q_factorial(m)(q))) for m, h in enumerate(hs)]

    def hermite_error(self) -> float:
        pairs = zip(self.normalized_hermite_vectors(), self.basis)
        return max(float(np.max(np.abs((h - e).flat()))) for h, e in pairs)

    @property
    def mu(self) -> float:
        v = self.modular.apply_delta(0.25, self.fock.embed(self.xi))
        return self.fock.norm(v) ** 2


def build_model(fock: TruncatedFock, xi: HVector,
                modular: Optional[ModularData] = None) -> GeneratorSubalgebraModel:
    if not xi.real:
        raise ValueError("generator must be a real vector")
    if abs(deformed_norm(fock.rep, xi) - 1) > FIXED_TOL:
        raise ValueError("generator must have unit norm")
    md = modular or build_modular(fock)
    basis = []
    for m in range(fock.cutoff + 1):
        norm = np.sqrt(qcomb.q_factorial(m)(fock.q))
        basis.append(fock.tensor_power(xi, m) * (1 / norm))
    return GeneratorSubalgebraModel(fock, md, xi, basis)


def embedding_coefficients(model: GeneratorSubalgebraModel) -> list[float]:
    """|Delta^{1/4} e_m|_q for each orthonormal basis vector e_m."""
    md = model.modular
    return [model.fock.norm(md.apply_delta(0.25, e)) for e in model.basis]


@dataclass
class HSCertificate:
    mu: float
    partial: float
    closed: float
    tail: float
    partial_from_coefficients: float
    max_coefficient: float
    coefficients: list

    @property
    def gap_error(self) -> float:
        return abs(self.closed - self.partial - self.tail)


@dataclass
class NuclearCertificate:
    mu: float
    partial: float
    closed: float
    tail: float
    partial_from_coefficients: float
    psi_norm_max: float  # max |psi_m(b)| / sup|p| on the spectrum, over samples
    cauchy_schwarz_max: float  # max |psi_m(b)| / |b Omega|_q over samples
    samples: int

    @property
    def gap_error(self) -> float:
        return abs(self.closed - self.partial - self.tail)


def _require_nonfixed(mu: float) -> None:
    if mu >= 1 - 1e-12:
        raise CertificateUnavailable(
            f"certificate unavailable: mu = {mu!r} (fixed vector, no Hilbert-Schmidt bound)")


def hs_norm_certificate(model: GeneratorSubalgebraModel) -> HSCertificate:
    mu = model.mu
    _require_nonfixed(mu)
    n = model.cutoff
    coeffs = embedding_coefficients(model)
    partial = float(sum(mu ** m for m in range(n + 1)))
    return HSCertificate(
        mu=mu,
        partial=partial,
        closed=1 / (1 - mu),
        tail=mu ** (n + 1) / (1 - mu),
        partial_from_coefficients=float(sum(c * c for c in coeffs)),
        max_coefficient=max(coeffs),
        coefficients=coeffs,
    )


def _q_factorial_float(m: int, q: float) -> float:
    out = 1.0
    for j in range(1, m + 1):
        out *= sum(q ** k for k in range(j))
    return out


def _hermite_grid(n: int, q: float, grid: int = 4001) -> np.ndarray:
    """Rows H_m(x) / sqrt([m]_q!) for m = 0..n on a grid over the spectrum
    [-2/sqrt(1-q), 2/sqrt(1-q)] of a unit field."""
    r = 2 / np.sqrt(1 - q)
    x = np.linspace(-r, r, grid)
    table = np.empty((n + 1, grid))
    prev, cur = np.zeros_like(x), np.ones_like(x)
    table[0] = cur
    for m in range(1, n + 1):
        prev, cur = cur, x * cur - qcomb.q_integer(m - 1)(q) * prev
        table[m] = cur / np.sqrt(_q_factorial_float(m, q))
    return table


def _spectral_sup(coeffs_b: np.ndarray, table: np.ndarray) -> float:
    """Grid maximum of |sum_m b_m H_m / sqrt([m]_q!)|: a lower bound for the sup norm."""
    return float(np.max(np.abs(coeffs_b @ table)))


def nuclear_certificate(model: GeneratorSubalgebraModel, rng: np.random.Generator | None = None,
                        samples: int = 100) -> NuclearCertificate:
    """Nuclear series bound plus a sampled check that the coefficient
    functionals psi_m(b) = <e_m, b Omega>_q have norm at most one."""
    mu = model.mu
    _require_nonfixed(mu)
    n = model.cutoff
    fock = model.fock
    rng = rng if rng is not None else np.random.default_rng(0)
    coeffs = embedding_coefficients(model)
    # b Omega = sum_m b_m h_m with h_m the normalised H_m(s(xi)) Omega; psi and
    # |b Omega|_q are then fixed small matrices applied to b
    hvecs = model.normalized_hermite_vectors()
    g_hvecs = [fock.gram_apply(h).flat() for h in hvecs]
    cross = np.array([[np.vdot(e.flat(), gh) for gh in g_hvecs] for e in model.basis])
    hgram = np.array([[np.vdot(a.flat(), gh) for gh in g_hvecs] for a in hvecs])
    table = _hermite_grid(n, fock.q)
    psi_max = cs_max = 0.0
    for _ in range(samples):
        b = rng.standard_normal(n + 1) + 1j * rng.standard_normal(n + 1)
        psi = np.abs(cross @ b)
        omega_norm = np.sqrt(np.vdot(b, hgram @ b).real)
        psi_max = max(psi_max, float(psi.max()) / _spectral_sup(b, table))
        cs_max = max(cs_max, float(psi.max()) / omega_norm)
    root = np.sqrt(mu)
    return NuclearCertificate(
        mu=mu,
        partial=float(sum(root ** m for m in range(n + 1))),
        closed=1 / (1 - root),
        tail=root ** (n + 1) / (1 - root),
        partial_from_coefficients=float(sum(coeffs)),
        psi_norm_max=psi_max,
        cauchy_schwarz_max=cs_max,
        samples=samples,
    )


@dataclass
class MomentRow:
    n: int
    matrix: float
    oracle: float
    diff: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.diff < self.tol


def moment_report(fock: TruncatedFock, xi: HVector, n_max: int) -> list[MomentRow]:
    if n_max > fock.cutoff or n_max > qcomb.PAIRING_GUARD:
        raise ValueError(
            f"n_max={n_max} exceeds min(cutoff={fock.cutoff}, guard={qcomb.PAIRING_GUARD})")
    s = field_op(fock, xi)
    rows = []
    power = s.power(0)
    for n in range(n_max + 1):
        if n:
            power = s @ power
        value = vacuum_eval(fock, power)
        if n % 2:
            rows.append(MomentRow(n, value.real, 0.0, abs(value), 1e-12))
        else:
            oracle = qcomb.moment_polynomial(n)(fock.q)
            rows.append(MomentRow(n, value.real, oracle, abs(value - oracle), 1e-9))
    return rows


@dataclass
class ProbeResult:
    dimension: int
    residual: float
    singular_values: list
    span: int
    safe_level: int


def commutant_probe(fock: TruncatedFock, xi: HVector, degree: int,
                    budget: int = DEFAULT_PROBE_BUDGET) -> ProbeResult:
    """Numerical null space of X -> [X, s(xi)] over Wick words of degree <= D.

    Only source levels 0..N-D-1 enter, where neither product reaches the
    truncation boundary. Residuals are measured in the q-norm.
    """
    import itertools

    d = fock.d
    span = sum(d ** k for k in range(degree + 1))
    if span > budget:
        raise BudgetError(f"probe span {span} exceeds budget {budget}")
    safe = fock.cutoff - degree - 1
    if safe < 0:
        raise ValueError(f"degree {degree} leaves no safe level below cutoff {fock.cutoff}")
    letters = fock.rep.real_basis()
    s = field_op(fock, xi)
    cols = []
    for k in range(degree + 1):
        for word in itertools.product(range(d), repeat=k):
            w = wick_word(fock, [letters[a] for a in word])
            comm = (w @ s - s @ w).restrict(range(safe + 1))
            col = _whitened_blocks(fock, comm, safe)
            # scale by the size of X itself so the residual is relative
            cols.append(col / np.linalg.norm(_whitened_blocks(fock, w.restrict(range(safe + 1)), safe)))
    width = max(len(c) for c in cols)
    mat = np.zeros((width, len(cols)), dtype=np.complex128)
    for i, c in enumerate(cols):
        mat[:len(c), i] = c
    sv = np.linalg.svd(mat, compute_uv=False) if width else np.zeros(len(cols))
    sv_full = np.zeros(len(cols))
    sv_full[:len(sv)] = sv
    sv_full = np.sort(sv_full)[::-1]
    return ProbeResult(
        dimension=int(np.sum(sv_full < NULL_THRESHOLD)),
        residual=float(sv_full[-1]),
        singular_values=[float(x) for x in sv_full],
        span=span,
        safe_level=safe,
    )


def _whitened_blocks(fock: TruncatedFock, op, safe: int) -> np.ndarray:
    """Flatten the blocks with source level <= safe, target levels whitened by the
    Gram factor; laid out identically for every operator."""
    pieces = []
    for src in range(safe + 1):
        for tgt in range(fock.cutoff + 1):
            m = op.blocks.get((src, tgt))
            if m is None:
                pieces.append(np.zeros(fock.dims[src] * fock.dims[tgt], dtype=np.complex128))
            else:
                pieces.append(fock.grams[tgt].whiten(m.toarray()).ravel())
    return np.concatenate(pieces)


@dataclass
class AnalysisReport:
    mu: float
    mu_closed: float
    fixed_residual: float
    verdict: str
    hs_partial: Optional[float] = None
    hs_closed: Optional[float] = None
    hs_partial_from_coefficients: Optional[float] = None
    max_coefficient: Optional[float] = None
    nuclear_partial: Optional[float] = None
    nuclear_closed: Optional[float] = None
    psi_norm_max: Optional[float] = None
    cauchy_schwarz_max: Optional[float] = None
    tail_bound: Optional[float] = None
    coefficients: list = field(default_factory=list)
    orthonormality_error: Optional[float] = None
    hermite_error: Optional[float] = None
    moment_table: list = field(default_factory=list)
    commutant_probe_dims: Optional[ProbeResult] = None
    notes: tuple = ()


def split_verdict(rep: Representation, q: float, cutoff: int, xi: HVector,
                  fock: Optional[TruncatedFock] = None,
                  modular: Optional[ModularData] = None,
                  rng: Optional[np.random.Generator] = None,
                  samples: int = 100) -> AnalysisReport:
    if not xi.real:
        raise ValueError("split_verdict needs a real vector")
    if abs(deformed_norm(rep, xi) - 1) > FIXED_TOL:
        raise ValueError(f"xi must be a unit vector, |xi|_U = {deformed_norm(rep, xi)!r}")
    fock = fock or build_fock(rep, q, cutoff)
    model = build_model(fock, xi, modular)
    mu = model.mu
    fixed_residual = deformed_norm(rep, xi - fixed_projection(rep, xi))
    is_fixed = fixed_residual <= FIXED_TOL
    below = mu < 1 - FIXED_EPS
    if is_fixed and not below:
        verdict = VERDICT_FIXED
    elif below and not is_fixed:
        verdict = VERDICT_NONFIXED
    elif below and is_fixed:
        raise AssertionError(f"dichotomy violated: fixed vector with mu = {mu!r}")
    else:
        verdict = VERDICT_INDETERMINATE
    report = AnalysisReport(mu=mu, mu_closed=mixed_vector_mu(rep, xi),
                            fixed_residual=fixed_residual, verdict=verdict,
                            orthonormality_error=model.orthonormality_error(),
                            hermite_error=model.hermite_error())
    if verdict == VERDICT_NONFIXED:
        hs = hs_norm_certificate(model)
        nuc = nuclear_certificate(model, rng, samples)
        report.hs_partial = hs.partial
        report.hs_closed = hs.closed
        report.hs_partial_from_coefficients = hs.partial_from_coefficients
        report.max_coefficient = hs.max_coefficient
        report.tail_bound = hs.tail
        report.nuclear_partial = nuc.partial
        report.nuclear_closed = nuc.closed
        report.psi_norm_max = nuc.psi_norm_max
        report.cauchy_schwarz_max = nuc.cauchy_schwarz_max
        report.coefficients = list(hs.coefficients)
        report.notes = CONDITIONAL_NOTES
    return report

"""Finite-dimensional orthogonal representations of the real line.

A representation is ``n_fixed`` trivial directions plus one 2x2 rotation block
per parameter ``lam > 1``. Real coordinates are ordered as

    [s_1, ..., s_{n_fixed}, x_1, x_2, x_3, x_4, ...]

with (x_{2k-1}, x_{2k}) spanning block k. All downstream code works in the
eigenbasis of the analytic generator A,

    [s_1, ..., s_{n_fixed}, z_1, z_2, z_3, z_4, ...]

where z_{2k-1} = sqrt(lam+1)/2 (x_{2k-1} + i x_{2k}) has A-eigenvalue 1/lam and
z_{2k} = sqrt(1/lam+1)/2 (x_{2k-1} - i x_{2k}) has A-eigenvalue lam. This basis
is orthonormal for the deformed inner product, so <x, y>_U = x^H y there.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

REAL_TOL = 1e-12


@dataclass(frozen=True)
class RepresentationSpec:
    n_fixed: int = 0
    lambdas: tuple = ()

    def __post_init__(self):
        lambdas = tuple(float(x) for x in self.lambdas)
        object.__setattr__(self, "lambdas", lambdas)
        if int(self.n_fixed) != self.n_fixed or self.n_fixed < 0:
            raise ValueError(f"n_fixed must be a nonnegative integer, got {self.n_fixed}")
        for lam in lambdas:
            if not np.isfinite(lam) or lam <= 1.0:
                raise ValueError(f"λ must exceed 1, got {lam}")
        if self.dim == 0:
            raise ValueError("representation must have dimension >= 1")

    @property
    def dim(self) -> int:
        return int(self.n_fixed) + 2 * len(self.lambdas)


@dataclass(frozen=True, eq=False)
class HVector:
    """Vector of H in eigenbasis coordinates; ``real`` marks membership of H_R."""

    coords: np.ndarray
    real: bool = False

    def __post_init__(self):
        c = np.array(self.coords, dtype=np.complex128)
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def dim(self) -> int:
        return self.coords.shape[0]

    def __add__(self, other: "HVector") -> "HVector":
        return HVector(self.coords + other.coords, self.real and other.real)

    def __sub__(self, other: "HVector") -> "HVector":
        return HVector(self.coords - other.coords, self.real and other.real)

    def __mul__(self, c) -> "HVector":
        return HVector(self.coords * c, self.real and np.isreal(c))

    __rmul__ = __mul__

    def __truediv__(self, c) -> "HVector":
        return self * (1.0 / c)


@dataclass(frozen=True, eq=False)
class Representation:
    spec: RepresentationSpec
    eigenvalues: np.ndarray  # A-eigenvalue of each eigenbasis vector
    block_of: np.ndarray  # -1 for fixed directions, else block number
    to_real: np.ndarray = field(repr=False)  # eigen coords -> real coords
    to_eigen: np.ndarray = field(repr=False)  # real coords -> eigen coords

    @property
    def dim(self) -> int:
        return self.spec.dim

    @property
    def generator(self) -> np.ndarray:
        return np.diag(self.eigenvalues).astype(np.complex128)

    def fixed_indices(self) -> np.ndarray:
        return np.flatnonzero(self.block_of < 0)

    def block_indices(self, k: int) -> tuple[int, int]:
        base = self.spec.n_fixed + 2 * k
        return base, base + 1

    # vector constructors -------------------------------------------------

    def from_real(self, real_coords) -> HVector:
        x = np.asarray(real_coords, dtype=np.float64)
        if x.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} real coordinates, got shape {x.shape}")
        return HVector(self.to_eigen @ x, real=True)

    def from_eigen(self, coords, real: bool | None = None) -> HVector:
        c = np.asarray(coords, dtype=np.complex128)
        if c.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} coordinates, got shape {c.shape}")
        if real is None:
            real = bool(np.all(np.abs((self.to_real @ c).imag) <= REAL_TOL))
        return HVector(c, real=real)

    def to_real_coords(self, x: HVector) -> np.ndarray:
        self._check(x)
        return self.to_real @ x.coords

    def fixed_vector(self, j: int) -> HVector:
        e = np.zeros(self.dim)
        e[j] = 1.0
        return self.from_real(e)

    def block_vectors(self, k: int) -> tuple[HVector, HVector]:
        """Real unit vectors (x_{2k-1}, x_{2k}) of block k."""
        i, j = self.block_indices(k)
        e1 = np.zeros(self.dim)
        e2 = np.zeros(self.dim)
        e1[i] = 1.0
        e2[j] = 1.0
        return self.from_real(e1), self.from_real(e2)

    def basis_vector(self, i: int) -> HVector:
        e = np.zeros(self.dim, dtype=np.complex128)
        e[i] = 1.0
        return HVector(e, real=self.block_of[i] < 0)

    def real_basis(self) -> list[HVector]:
        return [self.from_real(np.eye(self.dim)[i]) for i in range(self.dim)]

    def _check(self, x: HVector) -> None:
        if x.dim != self.dim:
            raise ValueError(f"dimension mismatch: vector has {x.dim}, representation {self.dim}")

    # real-coordinate matrices ------------------------------------------

    def generator_real(self) -> np.ndarray:
        """A in real coordinates, assembled from the explicit 2x2 block formula."""
        a = np.eye(self.dim, dtype=np.complex128)
        for k, lam in enumerate(self.spec.lambdas):
            i, j = self.block_indices(k)
            s, t = lam + 1 / lam, lam - 1 / lam
            a[i, i] = a[j, j] = s / 2
            a[i, j] = 1j * t / 2
            a[j, i] = -1j * t / 2
        return a

    def rotation_real(self, t: float) -> np.ndarray:
        u = np.eye(self.dim)
        for k, lam in enumerate(self.spec.lambdas):
            i, j = self.block_indices(k)
            th = t * np.log(lam)
            u[i, i] = u[j, j] = np.cos(th)
            u[i, j] = -np.sin(th)
            u[j, i] = np.sin(th)
        return u


def build(spec: RepresentationSpec) -> Representation:
    d = spec.dim
    nf = spec.n_fixed
    eig = np.ones(d)
    block_of = np.full(d, -1, dtype=np.int64)
    to_real = np.zeros((d, d), dtype=np.complex128)
    to_eigen = np.zeros((d, d), dtype=np.complex128)
    to_real[:nf, :nf] = np.eye(nf)
    to_eigen[:nf, :nf] = np.eye(nf)
    for k, lam in enumerate(spec.lambdas):
        i, j = nf + 2 * k, nf + 2 * k + 1
        eig[i], eig[j] = 1.0 / lam, lam
        block_of[i] = block_of[j] = k
        a = np.sqrt(lam + 1) / 2
        b = np.sqrt(1 / lam + 1) / 2
        to_real[[i, j], i] = [a, 1j * a]
        to_real[[i, j], j] = [b, -1j * b]
        # x_{2k-1} = (z_{2k-1} + sqrt(lam) z_{2k}) / sqrt(1+lam)
        # x_{2k} = -i (z_{2k-1} - sqrt(lam) z_{2k}) / sqrt(1+lam)
        r = 1 / np.sqrt(1 + lam)
        to_eigen[[i, j], i] = [r, np.sqrt(lam) * r]
        to_eigen[[i, j], j] = [-1j * r, 1j * np.sqrt(lam) * r]
    for arr in (eig, block_of, to_real, to_eigen):
        arr.setflags(write=False)
    return Representation(spec, eig, block_of, to_real, to_eigen)


def unitary_at(rep: Representation, t: float) -> np.ndarray:
    """U_t = A^{it} in the eigenbasis."""
    return np.diag(np.exp(1j * t * np.log(rep.eigenvalues)))


def apply(matrix: np.ndarray, x: HVector, real: bool | None = None) -> HVector:
    return HVector(matrix @ x.coords, x.real if real is None else real)


def deformed_inner(rep: Representation, x: HVector, y: HVector) -> complex:
    """<x, y>_U, conjugate-linear in x."""
    rep._check(x)
    rep._check(y)
    return complex(np.vdot(x.coords, y.coords))


def deformed_norm(rep: Representation, x: HVector) -> float:
    return float(np.sqrt(deformed_inner(rep, x, x).real))


def complex_inner(rep: Representation, x: HVector, y: HVector) -> complex:
    """<x, y> of the complexification, via real coordinates."""
    return complex(np.vdot(rep.to_real_coords(x), rep.to_real_coords(y)))


def fixed_projection(rep: Representation, x: HVector) -> HVector:
    rep._check(x)
    c = np.where(rep.block_of < 0, x.coords, 0)
    return HVector(c, x.real)


def block_projection(rep: Representation, x: HVector, k: int) -> HVector:
    rep._check(x)
    c = np.where(rep.block_of == k, x.coords, 0)
    return HVector(c, x.real)

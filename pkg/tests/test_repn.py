import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qfocklab import repn
from qfocklab.repn import RepresentationSpec


@pytest.fixture
def rep():
    return repn.build(RepresentationSpec(1, (2.0, 4.0)))


def test_spec_validation():
    assert RepresentationSpec(1, (4,)).dim == 3
    with pytest.raises(ValueError, match="λ must exceed 1"):
        RepresentationSpec(0, (1.0,))
    with pytest.raises(ValueError, match="λ must exceed 1"):
        RepresentationSpec(0, (0.5,))
    with pytest.raises(ValueError):
        RepresentationSpec(-1, ())
    with pytest.raises(ValueError):
        RepresentationSpec(0, ())


def test_eigenvalues_and_layout(rep):
    np.testing.assert_allclose(rep.eigenvalues, [1, 0.5, 2, 0.25, 4])
    assert rep.fixed_indices().tolist() == [0]
    assert rep.block_indices(1) == (3, 4)


def test_basis_change_is_inverse(rep):
    np.testing.assert_allclose(rep.to_real @ rep.to_eigen, np.eye(rep.dim), atol=1e-15)


def test_generator_matches_real_block_formula(rep):
    # the eigenbasis generator, moved to real coordinates, is the explicit 2x2 formula
    a_real = rep.to_real @ rep.generator @ rep.to_eigen
    np.testing.assert_allclose(a_real, rep.generator_real(), atol=1e-14)


def test_unitary_group_is_rotation(rep):
    for t in (-1.3, 0.0, 0.4, 2.0):
        u_real = rep.to_real @ repn.unitary_at(rep, t) @ rep.to_eigen
        np.testing.assert_allclose(u_real, rep.rotation_real(t), atol=1e-14)


def test_deformed_inner_product_formula(rep):
    # <x, y>_U = <2/(1 + A^{-1}) x, y> in real coordinates
    a = rep.generator_real()
    w, u = np.linalg.eigh(a)
    m = (u * (2 / (1 + 1 / w))) @ u.conj().T
    rng = np.random.default_rng(1)
    for _ in range(5):
        xr = rng.standard_normal(rep.dim) + 1j * rng.standard_normal(rep.dim)
        yr = rng.standard_normal(rep.dim) + 1j * rng.standard_normal(rep.dim)
        x, y = rep.from_eigen(rep.to_eigen @ xr), rep.from_eigen(rep.to_eigen @ yr)
        assert repn.deformed_inner(rep, x, y) == pytest.approx(np.vdot(m @ xr, yr), abs=1e-13)


def test_real_vectors_embed_isometrically(rep):
    rng = np.random.default_rng(2)
    for _ in range(5):
        x = rng.standard_normal(rep.dim)
        v = rep.from_real(x)
        assert v.real
        assert repn.deformed_norm(rep, v) == pytest.approx(np.linalg.norm(x), rel=1e-14)
        assert repn.complex_inner(rep, v, v).real == pytest.approx(np.dot(x, x), rel=1e-14)


def test_block_vectors_orthonormal(rep):
    for k in range(2):
        x0, x1 = rep.block_vectors(k)
        assert repn.deformed_inner(rep, x0, x0) == pytest.approx(1)
        assert repn.deformed_inner(rep, x1, x1) == pytest.approx(1)
        # real part of <x0, x1>_U vanishes; the imaginary part carries the rotation
        assert repn.deformed_inner(rep, x0, x1).real == pytest.approx(0, abs=1e-15)


def test_from_eigen_detects_reality(rep):
    assert rep.from_eigen(rep.fixed_vector(0).coords).real
    assert not rep.basis_vector(1).real
    with pytest.raises(ValueError):
        rep.from_real(np.zeros(2))


def test_projections(rep):
    x = rep.from_real([1.0, 2.0, 3.0, 4.0, 5.0])
    f = repn.fixed_projection(rep, x)
    np.testing.assert_allclose(rep.to_real_coords(f).real, [1, 0, 0, 0, 0], atol=1e-15)
    b = repn.block_projection(rep, x, 1)
    np.testing.assert_allclose(rep.to_real_coords(b).real, [0, 0, 0, 4, 5], atol=1e-14)
    # idempotent and norm nonincreasing
    assert np.allclose(repn.fixed_projection(rep, f).coords, f.coords)
    assert repn.deformed_norm(rep, f) <= repn.deformed_norm(rep, x)


def test_dimension_mismatch(rep):
    other = repn.build(RepresentationSpec(1, ()))
    with pytest.raises(ValueError, match="dimension mismatch"):
        repn.deformed_inner(rep, rep.fixed_vector(0), other.fixed_vector(0))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(1.01, 50.0), min_size=1, max_size=3),
       st.floats(-5, 5), st.floats(-5, 5))
def test_group_law_and_isometry(lambdas, s, t):
    rep = repn.build(RepresentationSpec(1, tuple(lambdas)))
    us, ut, ust = (repn.unitary_at(rep, x) for x in (s, t, s + t))
    np.testing.assert_allclose(us @ ut, ust, atol=1e-12)
    x = rep.from_real(np.linspace(1, 2, rep.dim))
    y = repn.apply(ut, x)
    assert repn.deformed_norm(rep, y) == pytest.approx(repn.deformed_norm(rep, x), rel=1e-12)
    # U_t preserves the real subspace
    assert np.max(np.abs(rep.to_real_coords(y).imag)) < 1e-12

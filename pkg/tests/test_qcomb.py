from fractions import Fraction
from itertools import permutations
from math import factorial

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qfocklab import qcomb
from qfocklab.qcomb import PairPartition, Permutation, QPoly


def test_qpoly_arithmetic_and_normal_form():
    a = QPoly([1, 2, 0, 0])
    assert a.coeffs == (1, 2)
    assert a.degree == 1
    b = QPoly([0, 1])
    assert a + b == QPoly([1, 3])
    assert a * b == QPoly([0, 1, 2])
    assert a - a == QPoly()
    assert 2 * a == QPoly([2, 4])
    assert a(Fraction(1, 2)) == 2
    assert a(0.5) == pytest.approx(2.0)


def test_permutation_validation():
    assert Permutation((2, 1, 3)).images == (2, 1, 3)
    with pytest.raises(ValueError):
        Permutation((1, 1, 3))
    with pytest.raises(ValueError):
        Permutation((0, 1))


def test_pair_partition_validation():
    v = PairPartition(((3, 4), (1, 2)))
    assert v.pairs == ((1, 2), (3, 4))
    assert v.n == 4
    with pytest.raises(ValueError):
        PairPartition(((2, 1),))
    with pytest.raises(ValueError):
        PairPartition(((1, 2), (2, 3)))


def test_inversions_small():
    assert qcomb.inversions(Permutation((1, 2, 3))) == 0
    assert qcomb.inversions(Permutation((3, 2, 1))) == 3
    assert qcomb.inversions(Permutation((2, 1, 3))) == 1


@pytest.mark.parametrize("n", [0, 2, 4, 6, 8])
def test_pair_partition_count_is_double_factorial(n):
    parts = list(qcomb.enumerate_pair_partitions(n))
    assert len(parts) == qcomb.double_factorial_odd(n)
    assert len(set(parts)) == len(parts)


def test_pair_partition_guards():
    with pytest.raises(ValueError):
        list(qcomb.enumerate_pair_partitions(3))
    with pytest.raises(OverflowError):
        list(qcomb.enumerate_pair_partitions(18))


def test_crossings():
    assert qcomb.crossings(PairPartition(((1, 3), (2, 4)))) == 1
    assert qcomb.crossings(PairPartition(((1, 4), (2, 3)))) == 0
    assert qcomb.crossings(PairPartition(((1, 2), (3, 4)))) == 0


def test_known_moment_polynomials():
    assert qcomb.moment_polynomial(0) == QPoly([1])
    assert qcomb.moment_polynomial(2) == QPoly([1])
    assert qcomb.moment_polynomial(4) == QPoly([2, 1])
    assert qcomb.moment_polynomial(6) == QPoly([5, 6, 3, 1])
    assert qcomb.moment_polynomial(4)(0.5) == pytest.approx(2.5)


@pytest.mark.parametrize("n", [0, 2, 4, 6, 8, 10])
def test_histogram_matches_bruteforce(n):
    assert qcomb.moment_polynomial(n) == qcomb.moment_polynomial_bruteforce(n)


@pytest.mark.parametrize("m", range(7))
def test_moment_limits(m):
    p = qcomb.moment_polynomial(2 * m)
    assert p(0) == qcomb.catalan(m)
    assert p(1) == qcomb.double_factorial_odd(2 * m)


def test_q_factorial():
    assert qcomb.q_factorial(0) == QPoly([1])
    assert qcomb.q_factorial(3) == QPoly([1, 2, 2, 1])
    assert qcomb.q_integer(0) == QPoly()
    for n in range(7):
        assert qcomb.q_factorial(n)(1) == factorial(n)


@pytest.mark.parametrize("n", range(6))
def test_q_factorial_counts_inversions(n):
    hist = {}
    for p in permutations(range(1, n + 1)):
        k = qcomb.inversions(Permutation(p))
        hist[k] = hist.get(k, 0) + 1
    expected = QPoly([hist.get(k, 0) for k in range(max(hist) + 1)])
    assert qcomb.q_factorial(n) == expected


def test_q_hermite_low_degree():
    h2 = qcomb.q_hermite(2)
    assert h2 == (QPoly([-1]), QPoly(), QPoly([1]))
    h3 = qcomb.q_hermite(3)
    # x^3 - (2 + q) x
    assert h3 == (QPoly(), QPoly([-2, -1]), QPoly(), QPoly([1]))
    assert qcomb.hermite_coefficients(3, 0.5) == [0.0, -2.5, 0.0, 1.0]


def test_matched_inversion_polynomial_identical_letters():
    for n in range(5):
        w = [0] * n
        assert qcomb.matched_inversion_polynomial(w, w) == qcomb.q_factorial(n)


def test_matched_inversion_polynomial_distinct_letters():
    assert qcomb.matched_inversion_polynomial([0, 1], [1, 0]) == QPoly([0, 1])
    assert qcomb.matched_inversion_polynomial([0, 1], [0, 1]) == QPoly([1])
    assert qcomb.matched_inversion_polynomial([0, 1], [0, 0]) == QPoly()
    assert qcomb.matched_inversion_polynomial([0], [0, 0]) == QPoly()


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=0, max_size=5), st.randoms(use_true_random=False))
def test_matched_inversion_symmetric(word, rnd):
    other = list(word)
    rnd.shuffle(other)
    assert qcomb.matched_inversion_polynomial(word, other) == \
        qcomb.matched_inversion_polynomial(other, word)

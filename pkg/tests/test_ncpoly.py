import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from strongconv.errors import DimensionMismatchError, DomainError, NotSelfAdjointError
from strongconv.genus import gue_word_polynomial
from strongconv.ncpoly import (
    CMat,
    FreeModel,
    NCPoly,
    canonical_key,
    cyclic_reduce,
    free_even_moments,
    free_haar_moment,
    free_matrix_moment,
    free_norm_estimate,
    free_reduce,
    free_semicircular_moment,
    make_word,
    ncp_apply_poly,
    ncp_mul,
    word_adjoint,
)
from strongconv.poly import Poly

SEMI = FreeModel.SEMICIRCULAR
HAAR = FreeModel.HAAR_UNITARY

plain_words = st.lists(st.integers(1, 2), max_size=8)
unitary_words = st.lists(st.tuples(st.integers(1, 2), st.booleans()), max_size=8)


def _noncrossing_count(labels):
    """Independent brute force: all label-respecting pairings, keep the noncrossing ones."""
    n = len(labels)
    if n % 2:
        return 0

    def rec(free):
        if not free:
            return [[]]
        a = free[0]
        out = []
        for i in range(1, len(free)):
            b = free[i]
            if labels[a] == labels[b]:
                rest = free[1:i] + free[i + 1:]
                out += [[(a, b)] + m for m in rec(rest)]
        return out

    count = 0
    for m in rec(list(range(n))):
        if not any(a < c < b < d for a, b in m for c, d in m):
            count += 1
    return count


def _random_self_adjoint(rng, r=2, D=2, deg=2):
    terms = {}
    for _ in range(rng.integers(1, 4)):
        L = int(rng.integers(0, deg + 1))
        w = make_word([int(g) for g in rng.integers(1, r + 1, size=L)])
        A = CMat(rng.integers(-2, 3, size=(D, D)), rng.integers(-2, 3, size=(D, D)))
        terms[w] = terms[w] + A if w in terms else A
    P = NCPoly(r, D, terms)
    return P + P.adjoint(hermitian_letters=True)


def test_word_parsing_and_adjoint():
    w = make_word("1,2*,3")
    assert [(a.generator, a.starred) for a in w] == [(1, False), (2, True), (3, False)]
    assert word_adjoint(w) == make_word("3*,2,1*")
    with pytest.raises(DomainError):
        make_word("1,x")


def test_free_and_cyclic_reduction():
    assert free_reduce(make_word("1,2,2*,1*,3")) == make_word("3")
    assert cyclic_reduce(make_word("1*,2,1")) == make_word("2")
    assert canonical_key(make_word("1,2,1,1")) == canonical_key(make_word("2,1,1,1"))


def test_ncp_mul_examples():
    A = CMat.from_entries([[1, 2], [0, 1]])
    B = CMat.from_entries([[0, 1], [1, 0]])
    P = NCPoly.generator(1, 2, A=A)
    Q = NCPoly.generator(2, 2, A=B)
    PQ = ncp_mul(P, Q)
    assert PQ.terms == {make_word("1,2"): A @ B}
    assert ncp_mul(P, NCPoly.identity(2, 2)) == P
    U = NCPoly.from_words(1, 1, [("1", 1), ("1*", 1)])
    assert len(ncp_mul(U, U).terms) == 4
    with pytest.raises(DimensionMismatchError):
        ncp_mul(P, NCPoly.generator(1, 1, D=3))


def test_ncp_apply_poly_examples():
    P = NCPoly.generator(1, 1)
    assert ncp_apply_poly(Poly([0, 1]), P) == P
    assert ncp_apply_poly(Poly([0, 0, 1]), P).terms == {make_word("1,1"): CMat.identity(1)}
    U = NCPoly.from_words(1, 1, [("1", 1), ("1*", 1)])
    Q = ncp_apply_poly(Poly([-1, 0, 1]), U)
    # words u u, u* u*, u u*, u* u and the constant -1
    assert len([w for w in Q.terms if w]) == 4
    R = ncp_apply_poly(Poly([-1, 0, 1]), U, reduce_unitary=True)
    assert R.terms[()] == CMat.scalar(1, 1)
    assert len([w for w in R.terms if w]) == 2


def test_json_roundtrip_and_errors():
    P = NCPoly.from_words(2, 1, [("1,2", Fraction(1, 3)), ("2,1", Fraction(1, 3))])
    assert NCPoly.from_json(P.to_json()) == P
    with pytest.raises(DomainError):
        NCPoly.from_json("{bad")
    with pytest.raises(DomainError):
        NCPoly.from_json('{"r": 1, "D": 1}')
    with pytest.raises(DimensionMismatchError):
        NCPoly.from_json('{"r": 1, "D": 2, "terms": [{"word": [[1, false]], "matrix": [[1, 0]]}]}')


@given(st.integers(0, 2 ** 32 - 1))
def test_json_roundtrip_random(seed):
    P = _random_self_adjoint(np.random.default_rng(seed))
    assert NCPoly.from_json(P.to_json()) == P
    assert P.is_self_adjoint("hermitian")


def test_free_semicircular_examples():
    assert free_semicircular_moment(make_word([1, 1])) == 1
    assert free_semicircular_moment(make_word([1, 1, 1, 1])) == 2
    assert free_semicircular_moment(make_word([1, 2, 1, 2])) == 0
    with pytest.raises(DomainError):
        free_semicircular_moment(make_word("1*,1"))


@given(plain_words)
def test_free_semicircular_matches_brute_force_and_genus(w):
    val = free_semicircular_moment(make_word(w))
    assert val == _noncrossing_count(w)
    assert val == gue_word_polynomial(w).poly[0]


def test_free_haar_examples():
    assert free_haar_moment(make_word("1,1*")) == 1
    assert free_haar_moment(make_word("1,2,1*,2*")) == 0
    assert free_haar_moment(()) == 1


@given(unitary_words, st.integers(0, 8))
def test_free_haar_rotation_invariant(w, k):
    w = make_word(w)
    if w:
        k %= len(w)
        assert free_haar_moment(w) == free_haar_moment(w[k:] + w[:k])


def test_free_matrix_moment_examples():
    assert free_matrix_moment(NCPoly.generator(1, 1, D=2), 4, SEMI) == 2
    A = CMat.from_entries([[1, 2], [2, 3]])
    P = NCPoly.constant(A)
    assert free_matrix_moment(P, 3, SEMI) == Fraction((A @ A @ A).trace()[0], 2)
    S = NCPoly.from_words(2, 1, [("1", 1), ("2", 1)])
    assert free_matrix_moment(S, 2, SEMI) == 2
    with pytest.raises(DomainError):
        free_matrix_moment(NCPoly.generator(1, 1, starred=True), 2, SEMI)


def test_fock_and_enumeration_engines_agree():
    P = NCPoly.from_words(2, 1, [("1,2", 1), ("2,1", 1), ("1", 1)])
    for p in range(1, 7):
        assert free_matrix_moment(P, p, SEMI, method="fock") == free_matrix_moment(P, p, SEMI, method="words")
    U = NCPoly.from_words(2, 1, [("1", 1), ("1*", 1), ("2", 1), ("2*", 1)])
    for p in range(1, 7):
        assert free_matrix_moment(U, p, HAAR, method="fock") == free_matrix_moment(U, p, HAAR, method="words")


@given(st.integers(0, 2 ** 32 - 1))
def test_even_moments_nonnegative_and_roots_monotone(seed):
    P = _random_self_adjoint(np.random.default_rng(seed), D=2, deg=2)
    ms = free_even_moments(P, SEMI, 8)
    assert all(m >= 0 for m in ms)
    roots = [float(m) ** (1 / (2 * p)) for p, m in enumerate(ms) if p > 0 and m > 0]
    assert all(b >= a - 1e-12 for a, b in zip(roots, roots[1:]))


@given(st.integers(0, 2 ** 32 - 1))
def test_adjoint_moments_conjugate(seed):
    rng = np.random.default_rng(seed)
    terms = {make_word([int(g) for g in rng.integers(1, 3, size=int(rng.integers(0, 3)))]):
             CMat(rng.integers(-2, 3, size=(2, 2)), rng.integers(-2, 3, size=(2, 2)))
             for _ in range(2)}
    P = NCPoly(2, 2, terms)
    Ps = P.adjoint(hermitian_letters=True)
    for p in range(1, 5):
        a = free_matrix_moment(P, p, SEMI)
        b = free_matrix_moment(Ps, p, SEMI)
        a = complex(a.re, a.im) if hasattr(a, "re") else complex(a)
        b = complex(b.re, b.im) if hasattr(b, "re") else complex(b)
        assert a == b.conjugate()


def test_free_norm_estimate_examples():
    lim = free_norm_estimate(NCPoly.generator(1, 1), SEMI, p_max=64)
    assert lim.lower <= 2.0 <= lim.upper and lim.width <= 0.05
    U = NCPoly.from_words(1, 1, [("1", 1), ("1*", 1)])
    lim = free_norm_estimate(U, HAAR, p_max=64)
    assert lim.lower <= 2.0 <= lim.upper
    U2 = NCPoly.from_words(2, 1, [("1", 1), ("1*", 1), ("2", 1), ("2*", 1)])
    lim = free_norm_estimate(U2, HAAR, p_max=64)
    assert lim.lower <= 2 * math.sqrt(3) <= lim.upper
    with pytest.raises(NotSelfAdjointError):
        free_norm_estimate(NCPoly.generator(1, 1, starred=True), HAAR)

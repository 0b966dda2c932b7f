import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from strongconv.errors import NotSelfAdjointError, PoleRegionError, SizeCapError
from strongconv.interp import gq_poly
from strongconv.ncpoly import FreeModel, NCPoly, free_matrix_moment, make_word
from strongconv.oracles import gram_unitary_weingarten
from strongconv.poly import Poly
from strongconv.weingarten import (
    character,
    cycle_type,
    dim_lambda,
    is_balanced,
    matchings,
    newton_interpolate,
    orthogonal_denominator,
    orthogonal_word_moment,
    partitions,
    psi_degree_bound,
    reconstruct_psi,
    reconstruct_psi_orthogonal,
    symplectic_expectation,
    unitary_statistic,
    unitary_word_moment,
    wg_orthogonal,
    wg_unitary,
)

X = Fraction


def U(*items, r=None):
    """Sum of letters/words with unit coefficients, e.g. U("1", "1*")."""
    gens = [int(t.rstrip("*")) for it in items for t in it.split(",")]
    return NCPoly.from_words(r or max(gens), 1, [(it, 1) for it in items])


balanced = st.lists(st.tuples(st.integers(1, 2), st.booleans()), max_size=6).filter(
    lambda w: is_balanced(make_word(w)))


# symmetric group --------------------------------------------------------------


def test_partitions():
    assert partitions(1) == [(1,)]
    assert sorted(partitions(3)) == [(1, 1, 1), (2, 1), (3,)]
    assert len(partitions(5)) == 7
    assert [len(partitions(n)) for n in range(9)] == [1, 1, 2, 3, 5, 7, 11, 15, 22]


def test_dim_lambda():
    assert dim_lambda((5,)) == 1
    assert dim_lambda((1, 1, 1, 1)) == 1
    assert dim_lambda((2, 1)) == 2
    for L in range(1, 8):
        assert sum(dim_lambda(l) ** 2 for l in partitions(L)) == math.factorial(L)


def _class_size(rho):
    L = sum(rho)
    size = math.factorial(L)
    for k in set(rho):
        m = rho.count(k)
        size //= k ** m * math.factorial(m)
    return size


def test_character_examples_and_orthogonality():
    for rho in partitions(4):
        assert character((4,), rho) == 1
        sign = (-1) ** (sum(rho) - len(rho))
        assert character((1, 1, 1, 1), rho) == sign
    assert character((2, 1), (1, 1, 1)) == 2
    for L in range(1, 7):
        parts = partitions(L)
        for a in parts:
            for b in parts:
                s = sum(_class_size(r) * character(a, r) * character(b, r) for r in parts)
                assert s == (math.factorial(L) if a == b else 0)


def test_cycle_type():
    assert cycle_type((1, 0, 2)) == (2, 1)
    assert cycle_type((1, 2, 0, 4, 3)) == (3, 2)


# unitary Weingarten -----------------------------------------------------------


@pytest.mark.parametrize("N", [3, 5, 8])
def test_wg_small_values(N):
    assert wg_unitary((1,), N) == X(1, N)
    assert wg_unitary((1, 1), N) == X(1, N * N - 1)
    assert wg_unitary((2,), N) == X(-1, N * (N * N - 1))


@pytest.mark.parametrize("L", [2, 3, 4])
def test_wg_matches_gram_inversion(L):
    for N in (L + 1, L + 3):
        gram = gram_unitary_weingarten(L, N)
        for lam in partitions(L):
            assert wg_unitary(lam, N) == gram[lam]


def test_wg_pole_region():
    with pytest.raises(PoleRegionError):
        wg_unitary((1, 1), 2)


@pytest.mark.parametrize("L", [1, 2, 3, 4, 5])
def test_wg_pole_structure(L):
    # Wg(N) * N^L prod_k (N^2 - k^2)^floor(L/k) is a polynomial in N
    def D(N):
        v = N ** L
        for k in range(1, L + 1):
            v *= (N * N - k * k) ** (L // k)
        return v

    deg = L + 2 * sum(L // k for k in range(1, L + 1))
    Ns = list(range(L + 1, L + 2 + deg))
    extra = range(L + 2 + deg, L + 7 + deg)
    for lam in partitions(L):
        f = newton_interpolate([X(N) for N in Ns], [wg_unitary(lam, N) * D(N) for N in Ns])
        for N in extra:
            assert f(X(N)) == wg_unitary(lam, N) * D(N)


# unitary word moments ---------------------------------------------------------


def test_unitary_word_examples():
    assert unitary_word_moment("1,1*", 3) == 1
    assert unitary_word_moment("1", 5) == 0
    assert unitary_word_moment("1,1,1*", 5) == 0
    assert unitary_word_moment((), 5) == 1
    assert unitary_word_moment("1,2,1*,2*", 4) == X(1, 16)


def test_unitary_known_closed_forms():
    # E|tr U|^2 / N = 1/N, E tr(U U U* U*) = 1 and E |U_11|^4 route through tr(U U* U U*)
    for N in (3, 4, 7):
        assert unitary_word_moment("1,1*,1,1*", N) == 1
        assert unitary_word_moment("1,2,1*,2*", N) == X(1, N * N)


@settings(max_examples=25)
@given(balanced, st.integers(0, 5))
def test_unitary_rotation_and_star_symmetry(w, k):
    w = make_word(w)
    N = 7
    val = unitary_word_moment(w, N)
    if w:
        k %= len(w)
        assert unitary_word_moment(w[k:] + w[:k], N) == val
    swapped = tuple(a._replace(starred=not a.starred) for a in w)
    assert unitary_word_moment(swapped, N) == val
    relabel = tuple(a._replace(generator=3 - a.generator) for a in w)
    assert unitary_word_moment(relabel, N) == val


# orthogonal -------------------------------------------------------------------


def _orth_entry_moment(idx, N):
    """E prod_k O[i_k, j_k] = sum_{m1, m2} delta_m1(i) delta_m2(j) Wg(m1, m2)."""
    L = len(idx) // 2
    rows = [i for i, _ in idx]
    cols = [j for _, j in idx]
    total = X(0)
    for (m1, m2), v in wg_orthogonal(L, N).items():
        if all(rows[a] == rows[b] for a, b in m1) and all(cols[a] == cols[b] for a, b in m2):
            total += v
    return total


@pytest.mark.parametrize("N", [3, 4, 6, 9])
def test_orthogonal_entry_moments(N):
    assert _orth_entry_moment([(0, 0), (0, 0)], N) == X(1, N)
    assert _orth_entry_moment([(0, 0)] * 4, N) == X(3, N * (N + 2))
    assert _orth_entry_moment([(0, 0), (0, 0), (0, 1), (0, 1)], N) == X(1, N * (N + 2))
    assert _orth_entry_moment([(0, 0), (1, 1), (0, 1), (1, 0)], N) == X(-1, N * (N - 1) * (N + 2))


def test_orthogonal_gram_identity():
    from strongconv.weingarten import _matching_loops

    N = 6
    for L in (1, 2, 3):
        M = matchings(2 * L)
        W = wg_orthogonal(L, N)
        for a in M:
            for c in M:
                s = sum(W[(a, b)] * N ** _matching_loops(b, c, 2 * L) for b in M)
                assert s == (1 if a == c else 0)
    assert wg_orthogonal(1, 5) == {(((0, 1),), ((0, 1),)): X(1, 5)}


def test_orthogonal_caps_and_poles():
    with pytest.raises(SizeCapError):
        wg_orthogonal(5, 20)
    with pytest.raises(PoleRegionError):
        wg_orthogonal(3, 2)


def test_orthogonal_word_moments():
    assert orthogonal_word_moment("1", 4) == 0
    assert orthogonal_word_moment("1,1*", 4) == 1
    assert orthogonal_word_moment("1,1,1", 6) == 0
    for N in (3, 5, 8):
        assert orthogonal_word_moment("1,1", N) == X(1, N)
        # words in O and O^T agree with the same word read in the transpose
        assert orthogonal_word_moment("1,1,1*,1", N) == orthogonal_word_moment("1*,1*,1,1*", N)
        if N >= 4:
            # averaging O_1 gives (Tr O_2 / N) I, and E (Tr O)^2 = 1
            assert orthogonal_word_moment("1,2,1*,2*", N) == X(1, N * N)


def test_orthogonal_denominator_clears_poles():
    # Psi * den is a polynomial: interpolate on enough N and check fresh points
    for w in ("1,1", "1,1,1,1", "1,1*,1,1"):
        L = len(w.split(","))
        den = orthogonal_denominator(L)
        assert den[0] == 1
        deg = den.degree + L + 1
        Ns = list(range(L, L + deg + 1))
        f = newton_interpolate([X(1, N) for N in Ns], [orthogonal_word_moment(w, N) * den(X(1, N)) for N in Ns])
        for N in range(L + deg + 1, L + deg + 6):
            assert f(X(1, N)) == orthogonal_word_moment(w, N) * den(X(1, N))


# rational reconstruction -------------------------------------------------------


def test_psi_constant_statistic():
    psi = reconstruct_psi(U("1", "1*"), Poly([0, 0, 1]))
    for N in range(3, 40):
        assert psi.at_N(N) == 2
    assert psi.numerator == psi.denominator * 2


def test_psi_quartic_heldout_and_bounds():
    P, h = U("1", "1*"), Poly([0, 0, 0, 0, 1])
    psi = reconstruct_psi(P, h)
    L = 4
    for N in range(L + 1, L + 51):
        assert psi.at_N(N) == unitary_statistic(P, h, N)
    assert psi.numerator.degree <= psi_degree_bound(L)
    assert psi.info["numerator_degree"] <= psi.info["degree_bound"] <= psi.info["log_degree_bound"]
    assert psi.denominator == gq_poly(L)
    for N in range(5, 15):
        assert psi(X(1, N)) == psi(X(-1, N))
    # constant term is the free moment
    assert psi(X(0)) == free_matrix_moment(P, 4, FreeModel.HAAR_UNITARY)


def test_psi_requires_self_adjoint():
    with pytest.raises(NotSelfAdjointError):
        reconstruct_psi(U("1"), Poly([0, 1]))


@settings(max_examples=6)
@given(st.sampled_from([("1", "1*"), ("1", "1*", "2", "2*"), ("1,2", "2*,1*"), ("1,1", "1*,1*")]),
       st.lists(st.integers(-2, 2), min_size=2, max_size=3))
def test_psi_random_parity_and_free_term(items, hc):
    P = U(*items)
    h = Poly(hc + [1])
    if h.degree * P.degree > 6:
        return
    psi = reconstruct_psi(P, h)
    for N in (7, 11, 20):
        assert psi(X(1, N)) == psi(X(-1, N))
    assert psi(X(0)) == sum(c * free_matrix_moment(P, k, FreeModel.HAAR_UNITARY) for k, c in enumerate(h.coeffs))


def test_orthogonal_psi_and_symplectic_duality():
    P, h = U("1", "1*"), Poly([0, 0, 1])
    psi = reconstruct_psi_orthogonal(P, h)
    for N in range(2, 12):
        # tr (O + O^T)^2 = 2 + 2 tr O^2 = 2 + 2/N
        assert psi.at_N(N) == 2 + X(2, N)
    assert symplectic_expectation("1,1", 5) == X(-1, 10)
    assert symplectic_expectation("1,1*", 7) == 1
    assert symplectic_expectation("1", 7) == 0

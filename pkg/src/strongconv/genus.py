"""Exact genus expansion for Gaussian ensembles.

E[tr w(G_1, ..., G_r)] for GUE/GOE words is a polynomial in x = 1/N; each
label-matching gluing contributes x**(n + 1 - loops).  GSE values come from the
GOE polynomial evaluated at x = -1/(2N).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache

from .errors import DomainError, InconsistencyError, NotSelfAdjointError
from .kernels import gauss_loop_histogram
from .ncpoly import (FreeModel, NCPoly, Word, canonical_key, free_matrix_moment,
                     make_word, ncp_apply_poly)
from .poly import Poly


class Ensemble(str, Enum):
    GUE = "gue"
    GOE = "goe"

    @classmethod
    def parse(cls, value) -> "Ensemble":
        if isinstance(value, Ensemble):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise DomainError(f"genus expansion supports GUE and GOE, not {value!r}") from None


@dataclass(frozen=True)
class GenusPoly:
    poly: Poly
    ensemble: Ensemble

    def __call__(self, x):
        return self.poly(x)

    def at_N(self, N: int) -> Fraction:
        return self.poly(Fraction(1, N))


def _labels(w: Word) -> tuple:
    w = make_word(w)
    if any(a.starred for a in w):
        raise DomainError("Gaussian words are star-free (the matrices are self-adjoint)")
    return tuple(a.generator for a in w)


@lru_cache(maxsize=None)
def _hist_poly(key: tuple, twisted: bool) -> Poly:
    labels = [k[0] for k in key]
    n = len(labels) // 2
    if len(labels) % 2:
        return Poly()
    if len(set(labels)) == 1 and not twisted:
        return gue_power_polynomial(len(labels))
    hist = gauss_loop_histogram(labels, twisted)
    return Poly([int(hist[n + 1 - e]) if 0 <= n + 1 - e < len(hist) else 0 for e in range(n + 2)])


def gue_word_polynomial(w) -> GenusPoly:
    """E tr of a GUE word as a polynomial in 1/N (sum over label-matching pairings)."""
    labels = _labels(w)
    return GenusPoly(_hist_poly(canonical_key(make_word(labels)), False), Ensemble.GUE)


def goe_word_polynomial(w) -> GenusPoly:
    """E tr of a GOE word: pairings times 2**n orientation choices."""
    labels = _labels(w)
    return GenusPoly(_hist_poly(canonical_key(make_word(labels)), True), Ensemble.GOE)


def word_polynomial(ensemble, w) -> GenusPoly:
    ens = Ensemble.parse(ensemble)
    return gue_word_polynomial(w) if ens is Ensemble.GUE else goe_word_polynomial(w)


def gse_expectation(w, N: int) -> Fraction:
    if N < 1:
        raise DomainError("N must be >= 1")
    return goe_word_polynomial(w).poly(Fraction(-1, 2 * N))


@lru_cache(maxsize=None)
def _hz_table(kmax: int) -> tuple:
    """eps[g][k]: coefficient of x^(2g) in E tr G^(2k) (one-matrix GUE), by the
    three-term recursion in k and g."""
    gmax = kmax // 2 + 1
    eps = [[0] * (kmax + 1) for _ in range(gmax + 1)]
    for k in range(kmax + 1):
        eps[0][k] = math.comb(2 * k, k) // (k + 1)
    for g in range(1, gmax + 1):
        for k in range(1, kmax + 1):
            a = (4 * k - 2) * eps[g][k - 1]
            b = (k - 1) * (2 * k - 1) * (2 * k - 3) * eps[g - 1][k - 2] if k >= 2 else 0
            eps[g][k] = (a + b) // (k + 1)
    return tuple(tuple(row) for row in eps)


def gue_power_polynomial(n: int) -> Poly:
    """E tr G^n for one GUE matrix, valid for any n (no enumeration)."""
    if n % 2:
        return Poly()
    k = n // 2
    eps = _hz_table(max(k, 1))
    coeffs = [0] * (k + 2)
    for g in range(0, k // 2 + 1):
        coeffs[2 * g] = eps[g][k]
    return Poly(coeffs)


def gue_genus_coefficient(g: int, k: int) -> int:
    """Number of genus-g gluings of a 2k-gon (coefficient of x^(2g) in E tr G^(2k))."""
    if g < 0 or k < 0:
        return 0
    return _hz_table(max(k, 1))[g][k] if g <= max(k, 1) // 2 + 1 else 0


def _check_statistic(P: NCPoly):
    if P.has_stars():
        raise DomainError("Gaussian statistics need a star-free polynomial")
    if not P.is_self_adjoint("hermitian"):
        raise NotSelfAdjointError("P must be self-adjoint")


def spectral_statistic_poly(ensemble, P: NCPoly, h: Poly) -> GenusPoly:
    """Phi_h(x) with E[tr_D (x) tr_N h(P(G))] = Phi_h(1/N), exactly."""
    ens = Ensemble.parse(ensemble)
    _check_statistic(P)
    Q = ncp_apply_poly(h, P)
    acc = Poly()
    imag = Poly()
    for w, A in Q.terms.items():
        re, im = A.trace()
        if re == 0 and im == 0:
            continue
        wp = word_polynomial(ens, w).poly
        if re:
            acc = acc + wp * (re / P.D)
        if im:
            imag = imag + wp * (im / P.D)
    if not imag.is_zero():
        raise NotSelfAdjointError("statistic has a nonzero imaginary part")
    return GenusPoly(acc, ens)


def free_statistic(P: NCPoly, h: Poly, model=FreeModel.SEMICIRCULAR) -> Fraction:
    """(tr (x) tau)(h(P)) from the free moments of P."""
    total = Fraction(0)
    for k, c in enumerate(h.coeffs):
        if c:
            m = free_matrix_moment(P, k, model)
            total += c * m
    return total


def nu0_crosscheck(P: NCPoly, h: Poly) -> Fraction:
    """Constant term of the GUE statistic, confirmed against the free engine."""
    phi = spectral_statistic_poly(Ensemble.GUE, P, h).poly
    free = free_statistic(P, h, FreeModel.SEMICIRCULAR)
    if phi[0] != free:
        raise InconsistencyError(f"genus-0 term {phi[0]} differs from free value {free}")
    return free

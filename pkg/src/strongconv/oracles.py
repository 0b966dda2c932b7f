"""Independent brute-force routes used to cross-check the fast engines.

Nothing here is fast; everything is exact.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction

from .errors import DomainError
from .ncpoly import make_word
from .weingarten import _inverse, _perms, _solve_inverse, cycle_type


def _double_factorial(m: int) -> int:
    return math.prod(range(m - 1, 0, -2)) if m > 0 else 1


def _gaussian_moment(m: int) -> int:
    """E g^m for a standard real Gaussian."""
    return 0 if m % 2 else _double_factorial(m)


def entry_wick_expectation(ensemble: str, w, N: int) -> Fraction:
    """E tr w(X_1, ..., X_r) by summing over all N**len(w) index tuples.

    GUE: X_ab = (xi + i eta)/sqrt(2N) off the diagonal, X_aa = g/sqrt(N), so
    E X_ab^p conj(X_ab)^q = [p == q] p! / N^p.
    GOE: X_ab = X_ba = xi/sqrt(N), X_aa = sqrt(2) g/sqrt(N).
    """
    labels = [a.generator for a in make_word(w)]
    n = len(labels)
    if ensemble not in ("gue", "goe"):
        raise DomainError("entry oracle covers GUE and GOE")
    if n == 0:
        return Fraction(1)
    total = Fraction(0)
    for idx in itertools.product(range(N), repeat=n):
        counts: dict = {}
        for k in range(n):
            a, b = idx[k], idx[(k + 1) % n]
            if ensemble == "goe" or a == b:
                key = (labels[k], min(a, b), max(a, b))
                counts[key] = counts.get(key, 0) + 1
            else:
                key = (labels[k], min(a, b), max(a, b))
                p, q = counts.get(key, (0, 0))
                counts[key] = (p + 1, q) if a < b else (p, q + 1)
        val = Fraction(1)
        for (lab, a, b), c in counts.items():
            if isinstance(c, tuple):
                p, q = c
                if p != q:
                    val = Fraction(0)
                    break
                val *= Fraction(math.factorial(p), N ** p)
            else:
                mom = _gaussian_moment(c)
                if mom == 0:
                    val = Fraction(0)
                    break
                if a == b and ensemble == "goe":
                    val *= Fraction(mom * 2 ** (c // 2), N ** (c // 2))
                else:
                    val *= Fraction(mom, N ** (c // 2))
        total += val
    return total / N


def gram_unitary_weingarten(L: int, N: int) -> dict:
    """{cycle type: Wg} from the inverse of G[s, t] = N^cycles(s t^-1) on S_L."""
    perms = _perms(L)
    G = [[Fraction(N) ** len(cycle_type(tuple(s[t_inv[i]] for i in range(L))))
          for t_inv in (_inverse(t) for t in perms)] for s in perms]
    W = _solve_inverse(G)
    ident = perms.index(tuple(range(L)))
    out: dict = {}
    for j, s in enumerate(perms):
        out.setdefault(cycle_type(s), W[ident][j])
    return out

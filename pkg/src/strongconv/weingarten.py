"""Exact Weingarten calculus for Haar unitary and orthogonal matrices.

Word moments are assembled from a loop-count histogram (N-independent, cached
per word) and Weingarten values at the requested N.  Statistics of
polynomials are rational in x = 1/N; :func:`reconstruct_psi` recovers the
numerator over a known denominator from exact samples at integer N.
"""
from __future__ import annotations

import atexit
import itertools
import json
import math
import os
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import (DomainError, NotSelfAdjointError, PoleRegionError,
                     ReconstructionError, SizeCapError)
from .kernels import product_loop_histogram, trace_involution
from .ncpoly import (NCPoly, Word, canonical_key, cyclic_reduce, make_word,
                     ncp_apply_poly)
from .interp import gq_poly
from .poly import Poly

IntPartition = tuple  # weakly decreasing positive ints
Matching = tuple  # tuple of (a, b) pairs with a < b, sorted

MAX_ORTHOGONAL_L = 4


# ---------------------------------------------------------------------------
# symmetric group combinatorics
# ---------------------------------------------------------------------------


def partitions(L: int) -> list[IntPartition]:
    """All partitions of L, largest first part first: (L), (L-1, 1), ..., (1^L)."""
    if L < 0:
        raise DomainError("L must be >= 0")
    out: list[IntPartition] = []

    def rec(rem: int, cap: int, acc: list[int]):
        if rem == 0:
            out.append(tuple(acc))
            return
        for part in range(min(rem, cap), 0, -1):
            acc.append(part)
            rec(rem - part, part, acc)
            acc.pop()

    rec(L, L, [])
    return out


def _check_partition(lam) -> IntPartition:
    lam = tuple(int(x) for x in lam)
    if any(x <= 0 for x in lam) or any(lam[i] < lam[i + 1] for i in range(len(lam) - 1)):
        raise DomainError(f"{lam} is not a partition")
    return lam


def hooks(lam: IntPartition):
    lam = _check_partition(lam)
    conj = [sum(1 for x in lam if x > j) for j in range(lam[0])] if lam else []
    for i, row in enumerate(lam):
        for j in range(row):
            yield (row - j - 1) + (conj[j] - i - 1) + 1


def dim_lambda(lam: IntPartition) -> int:
    """Hook length formula."""
    lam = _check_partition(lam)
    n = sum(lam)
    prod = 1
    for h in hooks(lam):
        prod *= h
    return math.factorial(n) // prod


def contents(lam: IntPartition):
    for i, row in enumerate(lam):
        for j in range(row):
            yield j - i


_CHAR_CACHE: dict[str, int] = {}
_CHAR_LOCK = threading.Lock()
_CACHE_LOADED = False


def _cache_path():
    return os.environ.get("STRONGCONV_CACHE") or None


def _load_cache():
    global _CACHE_LOADED
    if _CACHE_LOADED:
        return
    _CACHE_LOADED = True
    path = _cache_path()
    if path and os.path.exists(path):
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
            if isinstance(data, dict):
                _CHAR_CACHE.update({str(k): int(v) for k, v in data.items()})
        except (OSError, ValueError):
            pass  # a corrupt cache is simply rebuilt


def save_character_cache(path: str | None = None) -> str | None:
    path = path or _cache_path()
    if not path:
        return None
    with _CHAR_LOCK:
        snapshot = dict(_CHAR_CACHE)
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(snapshot, fh, sort_keys=True)
    os.replace(tmp, path)
    return path


@atexit.register
def _save_on_exit():
    if _cache_path() and _CHAR_CACHE:
        try:
            save_character_cache()
        except OSError:
            pass


def character(lam: IntPartition, rho: IntPartition) -> int:
    """chi^lambda at cycle type rho, by the Murnaghan-Nakayama rule."""
    lam = _check_partition(lam)
    rho = tuple(sorted((int(x) for x in rho), reverse=True))
    if any(x <= 0 for x in rho):
        raise DomainError(f"{rho} is not a cycle type")
    if sum(lam) != sum(rho):
        raise DomainError(f"size mismatch: |lambda|={sum(lam)}, |rho|={sum(rho)}")
    _load_cache()
    key = f"{','.join(map(str, lam))}|{','.join(map(str, rho))}"
    val = _CHAR_CACHE.get(key)
    if val is None:
        val = _mn(lam, rho)
        with _CHAR_LOCK:
            _CHAR_CACHE.setdefault(key, val)
    return val


@lru_cache(maxsize=None)
def _mn(lam: tuple, rho: tuple) -> int:
    if not rho:
        return 1 if not lam else 0
    k, rest = rho[0], rho[1:]
    n = len(lam)
    beta = [lam[i] + (n - 1 - i) for i in range(n)]
    occupied = set(beta)
    total = 0
    for b in beta:
        t = b - k
        if t < 0 or t in occupied:
            continue
        height = sum(1 for c in beta if t < c < b)
        nb = sorted((occupied - {b}) | {t}, reverse=True)
        new = [x - (n - 1 - i) for i, x in enumerate(nb)]
        new = tuple(x for x in new if x > 0)
        total += (-1) ** height * _mn(new, rest)
    return total


def cycle_type(perm) -> IntPartition:
    n = len(perm)
    seen = [False] * n
    out = []
    for s in range(n):
        if seen[s]:
            continue
        c = 0
        x = s
        while not seen[x]:
            seen[x] = True
            x = perm[x]
            c += 1
        out.append(c)
    return tuple(sorted(out, reverse=True))


# ---------------------------------------------------------------------------
# unitary Weingarten function
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _wg_unitary(alpha: tuple, N: int) -> Fraction:
    L = sum(alpha)
    total = Fraction(0)
    for lam in partitions(L):
        den = 1
        for c in contents(lam):
            den *= N + c
        total += Fraction(dim_lambda(lam) * character(lam, alpha), den)
    return total / math.factorial(L)


def wg_unitary(alpha_type: IntPartition, N: int) -> Fraction:
    """Wg(alpha, N) = (1/L!) sum_lambda d_lambda chi^lambda(alpha) / prod_box (N + content)."""
    alpha = tuple(sorted((int(x) for x in alpha_type), reverse=True))
    L = sum(alpha)
    if N <= L:
        raise PoleRegionError(f"unitary Weingarten needs N > L (got N={N}, L={L})")
    return _wg_unitary(alpha, N)


@lru_cache(maxsize=None)
def _perms(L: int):
    return [tuple(p) for p in itertools.permutations(range(L))]


def _compose(a, b):
    return tuple(a[b[i]] for i in range(len(a)))


def _inverse(a):
    inv = [0] * len(a)
    for i, v in enumerate(a):
        inv[v] = i
    return tuple(inv)


def _gen_positions(w: Word):
    gens: dict[int, tuple[list[int], list[int]]] = {}
    for k, a in enumerate(w):
        plain, starred = gens.setdefault(a.generator, ([], []))
        (starred if a.starred else plain).append(k)
    return [gens[g] for g in sorted(gens)]


def is_balanced(w) -> bool:
    w = make_word(w)
    return all(len(p) == len(s) for p, s in _gen_positions(w))


@lru_cache(maxsize=None)
def _unitary_structure(key: tuple) -> tuple:
    """{(types per generator, loops): count} for a canonical balanced word."""
    w = make_word([(g + 1, s) for g, s in key])
    n = len(w)
    tau = trace_involution(n)
    options = []
    types = []
    for plain, starred in _gen_positions(w):
        L = len(plain)
        perms = _perms(L)
        opts, tps = [], []
        for alpha in perms:
            for beta in perms:
                pairs = []
                for i in range(L):
                    pairs.append((2 * plain[i], 2 * starred[alpha[i]] + 1))
                    pairs.append((2 * plain[i] + 1, 2 * starred[beta[i]]))
                opts.append(pairs)
                tps.append(cycle_type(_compose(alpha, _inverse(beta))))
        options.append(opts)
        types.append(tps)
    hist = product_loop_histogram(tau, options)
    return _aggregate(hist, [len(o) for o in options], types)


def _aggregate(hist: np.ndarray, nopts: list[int], labels: list[list]) -> tuple:
    G = len(nopts)
    radix = [1] * G
    for g in range(G - 2, -1, -1):
        radix[g] = radix[g + 1] * nopts[g + 1]
    combos, loops = np.nonzero(hist)
    acc: dict = {}
    for c, l in zip(combos.tolist(), loops.tolist()):
        key = tuple(labels[g][(c // radix[g]) % nopts[g]] for g in range(G))
        acc[(key, l)] = acc.get((key, l), 0) + int(hist[c, l])
    return tuple(sorted(acc.items()))


def unitary_word_moment(w, N: int) -> Fraction:
    """E tr w(U_1, ..., U_r) for independent Haar unitaries, exactly.

    Words are first cyclically reduced (U U* = I); unbalanced words vanish.
    """
    w = make_word(w)
    if N < 1:
        raise DomainError("N must be >= 1")
    w = cyclic_reduce(w)
    if not w:
        return Fraction(1)
    if not is_balanced(w):
        return Fraction(0)
    Lmax = max(len(p) for p, _ in _gen_positions(w))
    if N < Lmax:
        raise PoleRegionError(f"N={N} is inside the pole region for L={Lmax}")
    total = Fraction(0)
    for (types, loops), count in _unitary_structure(canonical_key(w)):
        term = Fraction(count) * Fraction(N) ** (loops - 1)
        for t in types:
            term *= _wg_unitary(t, N)
        total += term
    return total


# ---------------------------------------------------------------------------
# orthogonal Weingarten via Gram inversion
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def matchings(m: int) -> tuple:
    """Perfect matchings of range(m) as sorted tuples of pairs."""
    if m % 2:
        return ()

    def rec(pts):
        if not pts:
            yield ()
            return
        a = pts[0]
        for i in range(1, len(pts)):
            rest = pts[1:i] + pts[i + 1:]
            for tail in rec(rest):
                yield ((a, pts[i]),) + tail

    return tuple(rec(tuple(range(m))))


def _matching_loops(m1, m2, m: int) -> int:
    adj = [[] for _ in range(m)]
    for a, b in itertools.chain(m1, m2):
        adj[a].append(b)
        adj[b].append(a)
    seen = [False] * m
    comps = 0
    for s in range(m):
        if seen[s]:
            continue
        comps += 1
        stack = [s]
        seen[s] = True
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if not seen[y]:
                    seen[y] = True
                    stack.append(y)
    return comps


@lru_cache(maxsize=None)
def _gram_loops(L: int) -> tuple:
    M = matchings(2 * L)
    return tuple(tuple(_matching_loops(a, b, 2 * L) for b in M) for a in M)


def _solve_inverse(G: list[list[Fraction]]) -> list[list[Fraction]]:
    n = len(G)
    A = [row[:] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(G)]
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col] != 0), None)
        if piv is None:
            raise PoleRegionError("Gram matrix is singular at this N")
        A[col], A[piv] = A[piv], A[col]
        inv = 1 / A[col][col]
        A[col] = [v * inv for v in A[col]]
        for r in range(n):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [a - f * b for a, b in zip(A[r], A[col])]
    return [row[n:] for row in A]


@lru_cache(maxsize=None)
def _wg_orthogonal_matrix(L: int, N: int) -> tuple:
    loops = _gram_loops(L)
    G = [[Fraction(N) ** l for l in row] for row in loops]
    return tuple(tuple(r) for r in _solve_inverse(G))


def wg_orthogonal(L: int, N: int) -> dict:
    """{(m1, m2): Wg^O(m1, m2, N)} as the exact inverse of the Gram matrix N^loops(m1, m2)."""
    if L < 0:
        raise DomainError("L must be >= 0")
    if L > MAX_ORTHOGONAL_L:
        raise SizeCapError(f"orthogonal Weingarten capped at L={MAX_ORTHOGONAL_L}")
    if N < L:
        raise PoleRegionError(f"Gram matrix is singular for N={N} < L={L}")
    M = matchings(2 * L)
    W = _wg_orthogonal_matrix(L, N)
    return {(M[i], M[j]): W[i][j] for i in range(len(M)) for j in range(len(M))}


@lru_cache(maxsize=None)
def _orthogonal_structure(key: tuple) -> tuple:
    """{((m1, m2) index pairs per generator, loops): count} for a canonical even word."""
    w = make_word([(g + 1, s) for g, s in key])
    n = len(w)
    tau = trace_involution(n)
    options, labels = [], []
    for plain, starred in _gen_positions(w):
        pos = sorted(plain + starred)
        star = {k: (k in starred) for k in pos}
        rows = [2 * k + 1 if star[k] else 2 * k for k in pos]
        cols = [2 * k if star[k] else 2 * k + 1 for k in pos]
        M = matchings(len(pos))
        opts, labs = [], []
        for i1, m1 in enumerate(M):
            for i2, m2 in enumerate(M):
                pairs = [(rows[a], rows[b]) for a, b in m1] + [(cols[a], cols[b]) for a, b in m2]
                opts.append(pairs)
                labs.append((len(pos) // 2, i1, i2))
        options.append(opts)
        labels.append(labs)
    hist = product_loop_histogram(tau, options)
    return _aggregate(hist, [len(o) for o in options], labels)


def orthogonal_word_moment(w, N: int) -> Fraction:
    """E tr w(O_1, ..., O_r) for independent Haar orthogonal matrices; starred
    letters are transposes."""
    w = cyclic_reduce(make_word(w))
    if not w:
        return Fraction(1)
    if any((len(p) + len(s)) % 2 for p, s in _gen_positions(w)):
        return Fraction(0)
    if N < len(w):
        raise PoleRegionError(f"orthogonal moments need N >= word length ({len(w)})")
    Ls = [(len(p) + len(s)) // 2 for p, s in _gen_positions(w)]
    if max(Ls) > MAX_ORTHOGONAL_L:
        raise SizeCapError(f"orthogonal Weingarten capped at L={MAX_ORTHOGONAL_L}")
    total = Fraction(0)
    for (labs, loops), count in _orthogonal_structure(canonical_key(w)):
        term = Fraction(count) * Fraction(N) ** (loops - 1)
        for L, i1, i2 in labs:
            term *= _wg_orthogonal_matrix(L, N)[i1][i2]
        total += term
    return total


# ---------------------------------------------------------------------------
# rational reconstruction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RationalFn:
    """numerator(x) / denominator(x), x = 1/N."""

    numerator: Poly
    denominator: Poly
    info: dict = field(default_factory=dict, compare=False, hash=False)

    def __call__(self, x) -> Fraction:
        d = self.denominator(x)
        if d == 0:
            raise PoleRegionError(f"denominator vanishes at x={x}")
        return self.numerator(x) / d

    def at_N(self, N: int) -> Fraction:
        return self(Fraction(1, N))

    def taylor(self, m: int) -> Poly:
        """First m Taylor coefficients at x = 0 (exact series division)."""
        return self.numerator.series_div(self.denominator, m)

    def to_dict(self) -> dict:
        return {"num": json.loads(self.numerator.to_json()), "den": json.loads(self.denominator.to_json())}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def psi_degree_bound(L: int) -> int:
    """floor(3 L (1 + log L)), the bound on the numerator degree."""
    return math.floor(3 * L * (1 + math.log(L))) if L >= 1 else 0


def orthogonal_denominator(L: int) -> Poly:
    """Common denominator in x of orthogonal Weingarten values with 2L points:
    prod over c of (1 + c x)^(max multiplicity of 2j - i - 1 over boxes of lambda |- L)."""
    mult: dict[int, int] = {}
    for lam in partitions(L):
        counts: dict[int, int] = {}
        for i, row in enumerate(lam):
            for j in range(row):
                c = 2 * j - i  # 0-based form of 2j - i - 1 with 1-based (i, j)
                counts[c] = counts.get(c, 0) + 1
        for c, k in counts.items():
            mult[c] = max(mult.get(c, 0), k)
    acc = Poly.const(1)
    for c, k in sorted(mult.items()):
        if c:
            acc = acc * Poly((1, c)) ** k
    return acc


def newton_interpolate(xs: list[Fraction], ys: list[Fraction]) -> Poly:
    """Exact interpolating polynomial through (xs, ys) via divided differences."""
    n = len(xs)
    coef = list(ys)
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            coef[i] = (coef[i] - coef[i - 1]) / (xs[i] - xs[i - j])
    acc = Poly.const(coef[-1])
    for i in range(n - 2, -1, -1):
        acc = acc * Poly((-xs[i], 1)) + coef[i]
    return acc


def _statistic_terms(P: NCPoly, h: Poly):
    Q = ncp_apply_poly(h, P, reduce_unitary=True)
    terms = []
    for w, A in Q.terms.items():
        re, im = A.trace()
        if re or im:
            terms.append((w, re / P.D, im / P.D))
    return terms


def unitary_statistic(P: NCPoly, h: Poly, N: int, terms=None) -> Fraction:
    """E[tr_D (x) tr_N h(P(U, U*))] exactly at integer N."""
    terms = _statistic_terms(P, h) if terms is None else terms
    re_tot = Fraction(0)
    im_tot = Fraction(0)
    for w, re, im in terms:
        v = unitary_word_moment(w, N)
        if v:
            re_tot += re * v
            im_tot += im * v
    if im_tot:
        raise NotSelfAdjointError("statistic has a nonzero imaginary part")
    return re_tot


def orthogonal_statistic(P: NCPoly, h: Poly, N: int, terms=None) -> Fraction:
    terms = _statistic_terms(P, h) if terms is None else terms
    re_tot = Fraction(0)
    im_tot = Fraction(0)
    for w, re, im in terms:
        v = orthogonal_word_moment(w, N)
        if v:
            re_tot += re * v
            im_tot += im * v
    if im_tot:
        raise NotSelfAdjointError("statistic has a nonzero imaginary part")
    return re_tot


def _reconstruct(evaluate, den: Poly, deg_bound: int, n0: int, heldout: int,
                 require_even: bool, info: dict) -> RationalFn:
    Ns = list(range(n0, n0 + deg_bound + 1))
    xs = [Fraction(1, N) for N in Ns]
    ys = [evaluate(N) * den(x) for N, x in zip(Ns, xs)]
    f = newton_interpolate(xs, ys)
    psi = RationalFn(f, den, info)
    for N in range(n0 + deg_bound + 1, n0 + deg_bound + 1 + heldout):
        if psi.at_N(N) != evaluate(N):
            raise ReconstructionError(f"held-out mismatch at N={N}: degree bound {deg_bound} violated")
    if require_even and not f.odd_part_is_zero():
        raise ReconstructionError("reconstructed numerator is not even")
    info.update(numerator_degree=f.degree, degree_bound=deg_bound,
                sample_N=[Ns[0], Ns[-1]], heldout=heldout)
    return psi


def reconstruct_psi(P: NCPoly, h: Poly, heldout: int = 3) -> RationalFn:
    """Psi_h = f_h / g_L with L = q q0, from exact Haar-unitary values at
    N = L+1, ..., L+1+deg; checked at ``heldout`` further N and for evenness."""
    if not P.is_self_adjoint("unitary"):
        raise NotSelfAdjointError("P must be self-adjoint in u, u*")
    L = max(1, h.degree * P.degree)
    den = gq_poly(L)
    bound = L + 2 * sum(L // k for k in range(1, L + 1))
    terms = _statistic_terms(P, h)
    info = {"group": "unitary", "L": L, "log_degree_bound": psi_degree_bound(L)}
    return _reconstruct(lambda N: unitary_statistic(P, h, N, terms), den, bound, L + 1,
                        heldout, True, info)


def reconstruct_psi_orthogonal(P: NCPoly, h: Poly, heldout: int = 3) -> RationalFn:
    """Rational encoding of E tr h(P(O, O^T)) for Haar orthogonal matrices."""
    if not P.is_self_adjoint("unitary"):
        raise NotSelfAdjointError("P must be self-adjoint in o, o^T")
    L = max(1, h.degree * P.degree)
    half = L // 2
    ngen = max(1, len(P.generators_used()))
    den = orthogonal_denominator(max(half, 1)) ** ngen
    bound = den.degree + L + 1
    terms = _statistic_terms(P, h)
    info = {"group": "orthogonal", "L": L}
    return _reconstruct(lambda N: orthogonal_statistic(P, h, N, terms), den, bound, max(L, 1),
                        heldout, False, info)


@lru_cache(maxsize=None)
def _orthogonal_word_psi(key: tuple) -> RationalFn:
    return _reconstruct_word_orthogonal(make_word([(g + 1, s) for g, s in key]))


def _reconstruct_word_orthogonal(w: Word) -> RationalFn:
    n = len(w)
    Ls = [(len(p) + len(s)) // 2 for p, s in _gen_positions(w)]
    den = Poly.const(1)
    for L in Ls:
        den = den * orthogonal_denominator(max(L, 1))
    bound = den.degree + n + 1
    return _reconstruct(lambda N: orthogonal_word_moment(w, N), den, bound, max(n, 1), 3, False,
                        {"group": "orthogonal", "word_length": n})


def orthogonal_word_psi(w) -> RationalFn:
    """Rational function Psi_w with E tr w(O) = Psi_w(1/N)."""
    w = cyclic_reduce(make_word(w))
    if not w:
        return RationalFn(Poly.const(1), Poly.const(1))
    if any((len(p) + len(s)) % 2 for p, s in _gen_positions(w)):
        return RationalFn(Poly(), Poly.const(1))
    return _orthogonal_word_psi(canonical_key(w))


def symplectic_expectation(w, N: int) -> Fraction:
    """E tr_{2N} w(V_1, ...) for Haar Sp(N) (2N-dim complex representation),
    obtained as Psi_w(-1/(2N)) from the orthogonal encoding; starred letters
    are adjoints."""
    if N < 1:
        raise DomainError("N must be >= 1")
    return orthogonal_word_psi(w)(Fraction(-1, 2 * N))

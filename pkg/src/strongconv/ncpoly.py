"""Noncommutative polynomials with exact complex-rational matrix coefficients,
free semicircular / free Haar moments, and norm estimation of the free limit.

Generators are numbered from 1.  A letter is (generator, starred); a word is
a tuple of letters read left to right as an operator product.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from .errors import (DimensionMismatchError, DomainError, NotSelfAdjointError,
                     SizeCapError)
from .poly import Poly

_SMALL = 1 << 30  # entries below this multiply safely in int64 for D <= 4


class Letter(NamedTuple):
    generator: int
    starred: bool = False

    def adjoint(self) -> "Letter":
        return Letter(self.generator, not self.starred)

    def __str__(self) -> str:
        return f"{self.generator}{'*' if self.starred else ''}"


Word = tuple  # tuple[Letter, ...]


def make_word(spec) -> Word:
    """Build a word from "1,1*,2", a list of ints, or (gen, star) pairs."""
    if isinstance(spec, str):
        spec = [s.strip() for s in spec.split(",") if s.strip()]
        out = []
        for tok in spec:
            star = tok.endswith("*")
            try:
                out.append(Letter(int(tok.rstrip("*")), star))
            except ValueError as exc:
                raise DomainError(f"bad letter {tok!r}") from exc
        return tuple(out)
    out = []
    for item in spec:
        if isinstance(item, Letter):
            out.append(item)
        elif isinstance(item, (int, np.integer)):
            out.append(Letter(int(item), False))
        else:
            g, s = item
            out.append(Letter(int(g), bool(s)))
    return tuple(out)


def word_str(w: Word) -> str:
    return ",".join(str(a) for a in w) if w else "e"


def word_adjoint(w: Word) -> Word:
    return tuple(a.adjoint() for a in reversed(w))


def free_reduce(w: Word) -> Word:
    """Cancel adjacent u u* and u* u pairs."""
    stack: list[Letter] = []
    for a in w:
        if stack and stack[-1].generator == a.generator and stack[-1].starred != a.starred:
            stack.pop()
        else:
            stack.append(a)
    return tuple(stack)


def cyclic_reduce(w: Word) -> Word:
    w = free_reduce(w)
    while len(w) >= 2 and w[0].generator == w[-1].generator and w[0].starred != w[-1].starred:
        w = w[1:-1]
    return w


def canonical_key(w: Word) -> tuple:
    """Key shared by all cyclic rotations and generator relabelings of w.

    Expected normalized traces of words in i.i.d. families are invariant under
    both, so this is the cache key for word moments.
    """
    n = len(w)
    if n == 0:
        return ()
    best = None
    for s in range(n):
        rot = w[s:] + w[:s]
        relabel: dict[int, int] = {}
        key = []
        for a in rot:
            if a.generator not in relabel:
                relabel[a.generator] = len(relabel)
            key.append((relabel[a.generator], a.starred))
        key = tuple(key)
        if best is None or key < best:
            best = key
    return best


# ---------------------------------------------------------------------------
# exact complex-rational matrices
# ---------------------------------------------------------------------------


def _as_frac_pair(x) -> tuple[Fraction, Fraction]:
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return Fraction(str(x[0])) if isinstance(x[0], str) else Fraction(x[0]), \
            Fraction(str(x[1])) if isinstance(x[1], str) else Fraction(x[1])
    if isinstance(x, complex):
        return Fraction(x.real), Fraction(x.imag)
    if isinstance(x, str):
        x = x.strip()
        try:
            return Fraction(x), Fraction(0)
        except ValueError:
            c = complex(x.replace("i", "j"))
            return Fraction(c.real), Fraction(c.imag)
    if isinstance(x, (float, np.floating)):
        return Fraction(float(x)), Fraction(0)
    if isinstance(x, (np.complexfloating,)):
        return Fraction(float(x.real)), Fraction(float(x.imag))
    return Fraction(x), Fraction(0)


def _shrink(a: np.ndarray) -> np.ndarray:
    """Use int64 storage when every entry is small, Python ints otherwise."""
    if a.size == 0:
        return a.astype(np.int64)
    if a.dtype == object:
        m = max(abs(int(v)) for v in a.flat)
        if m < _SMALL:
            return a.astype(np.int64)
        return a
    if int(np.abs(a).max()) >= _SMALL:
        return a.astype(object)
    return a


def _gcd_all(*arrays) -> int:
    g = 0
    for a in arrays:
        if a.dtype == object:
            for v in a.flat:
                g = math.gcd(g, int(v))
        else:
            g = math.gcd(g, int(np.gcd.reduce(np.abs(a).ravel()))) if a.size else g
        if g == 1:
            return 1
    return g


class CMat:
    """Exact complex-rational D x D matrix stored as (re + i im) / den with
    integer arrays; immutable by convention."""

    __slots__ = ("re", "im", "den")

    def __init__(self, re: np.ndarray, im: np.ndarray, den: int = 1):
        if den <= 0:
            re, im, den = -re, -im, -den
        g = math.gcd(_gcd_all(re, im), den)
        if g > 1:
            re = re // g
            im = im // g
            den //= g
        self.re = _shrink(re)
        self.im = _shrink(im)
        self.den = int(den)

    @property
    def D(self) -> int:
        return self.re.shape[0]

    @classmethod
    def from_entries(cls, rows) -> "CMat":
        rows = [list(r) for r in rows]
        D = len(rows)
        if any(len(r) != D for r in rows):
            raise DimensionMismatchError("coefficient matrix must be square")
        pairs = [[_as_frac_pair(x) for x in r] for r in rows]
        den = 1
        for r in pairs:
            for a, b in r:
                den = math.lcm(den, a.denominator, b.denominator)
        re = np.array([[int(a * den) for a, _ in r] for r in pairs], dtype=object).reshape(D, D)
        im = np.array([[int(b * den) for _, b in r] for r in pairs], dtype=object).reshape(D, D)
        return cls(re, im, den)

    @classmethod
    def scalar(cls, c, D: int) -> "CMat":
        a, b = _as_frac_pair(c)
        den = math.lcm(a.denominator, b.denominator)
        eye = np.eye(D, dtype=np.int64)
        return cls(eye * int(a * den), eye * int(b * den), den)

    @classmethod
    def identity(cls, D: int) -> "CMat":
        return cls.scalar(1, D)

    @classmethod
    def zeros(cls, D: int) -> "CMat":
        z = np.zeros((D, D), dtype=np.int64)
        return cls(z, z.copy(), 1)

    def is_zero(self) -> bool:
        return not (np.any(self.re != 0) or np.any(self.im != 0))

    def __add__(self, other: "CMat") -> "CMat":
        if self.D != other.D:
            raise DimensionMismatchError("coefficient dimensions differ")
        d = math.lcm(self.den, other.den)
        a, b = d // self.den, d // other.den
        return CMat(_obj_if_big(self.re, a) * a + _obj_if_big(other.re, b) * b,
                    _obj_if_big(self.im, a) * a + _obj_if_big(other.im, b) * b, d)

    def __neg__(self) -> "CMat":
        return CMat(-self.re, -self.im, self.den)

    def __sub__(self, other: "CMat") -> "CMat":
        return self + (-other)

    def __matmul__(self, other: "CMat") -> "CMat":
        if self.D != other.D:
            raise DimensionMismatchError("coefficient dimensions differ")
        big = self.D > 4 or any(x.dtype == object for x in (self.re, self.im, other.re, other.im))
        ar, ai, br, bi = (x.astype(object) if big else x for x in (self.re, self.im, other.re, other.im))
        return CMat(ar @ br - ai @ bi, ar @ bi + ai @ br, self.den * other.den)

    def scale(self, c) -> "CMat":
        a, b = _as_frac_pair(c)
        den = math.lcm(a.denominator, b.denominator)
        ia, ib = int(a * den), int(b * den)
        re, im = self.re.astype(object), self.im.astype(object)
        return CMat(re * ia - im * ib, re * ib + im * ia, self.den * den)

    def adjoint(self) -> "CMat":
        return CMat(self.re.T.copy(), -self.im.T, self.den)

    def trace(self) -> tuple[Fraction, Fraction]:
        return (Fraction(int(np.trace(self.re.astype(object))), self.den),
                Fraction(int(np.trace(self.im.astype(object))), self.den))

    def entry(self, i: int, j: int) -> tuple[Fraction, Fraction]:
        return Fraction(int(self.re[i, j]), self.den), Fraction(int(self.im[i, j]), self.den)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CMat):
            return NotImplemented
        return (self.den == other.den and self.D == other.D
                and bool(np.all(self.re == other.re)) and bool(np.all(self.im == other.im)))

    def __hash__(self):
        return hash((self.den, tuple(int(v) for v in self.re.flat), tuple(int(v) for v in self.im.flat)))

    def to_complex(self) -> np.ndarray:
        re = np.array([float(Fraction(int(v), self.den)) for v in self.re.flat]).reshape(self.re.shape)
        im = np.array([float(Fraction(int(v), self.den)) for v in self.im.flat]).reshape(self.im.shape)
        return re + 1j * im

    def op_norm(self) -> float:
        return float(np.linalg.norm(self.to_complex(), 2)) if self.D else 0.0

    def to_json_entries(self) -> list:
        out = []
        for i in range(self.D):
            for j in range(self.D):
                a, b = self.entry(i, j)
                out.append([_fstr(a), _fstr(b)])
        return out

    def __repr__(self) -> str:
        return f"CMat({self.to_json_entries()})"


def _fstr(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


def _obj_if_big(a: np.ndarray, factor: int) -> np.ndarray:
    if a.dtype != object and factor >= _SMALL:
        return a.astype(object)
    return a


# ---------------------------------------------------------------------------
# NCPoly
# ---------------------------------------------------------------------------


class NCPoly:
    """Element of M_D(C) (x) C<x_1..x_r, x_1*..x_r*> with exact coefficients."""

    __slots__ = ("r", "D", "terms")

    def __init__(self, r: int, D: int, terms: Mapping[Word, CMat] | None = None):
        if r < 0 or D < 1:
            raise DomainError("need r >= 0 and D >= 1")
        self.r = int(r)
        self.D = int(D)
        clean: dict[Word, CMat] = {}
        for w, A in (terms or {}).items():
            w = make_word(w)
            for a in w:
                if not 1 <= a.generator <= r:
                    raise DomainError(f"generator {a.generator} outside alphabet 1..{r}")
            if not isinstance(A, CMat):
                A = CMat.from_entries(A) if isinstance(A, (list, tuple, np.ndarray)) else CMat.scalar(A, D)
            if A.D != D:
                raise DimensionMismatchError(f"coefficient of {word_str(w)} is {A.D}x{A.D}, expected {D}x{D}")
            if w in clean:
                A = clean[w] + A
            if A.is_zero():
                clean.pop(w, None)
            else:
                clean[w] = A
        self.terms = clean

    # constructors -----------------------------------------------------------
    @classmethod
    def constant(cls, A, r: int = 1, D: int | None = None) -> "NCPoly":
        if not isinstance(A, CMat):
            A = CMat.from_entries(A) if isinstance(A, (list, tuple, np.ndarray)) else CMat.scalar(A, D or 1)
        return cls(r, A.D, {(): A})

    @classmethod
    def identity(cls, r: int = 1, D: int = 1) -> "NCPoly":
        return cls(r, D, {(): CMat.identity(D)})

    @classmethod
    def generator(cls, i: int, r: int | None = None, D: int = 1, A=None, starred: bool = False) -> "NCPoly":
        r = i if r is None else r
        if A is None:
            A = CMat.identity(D)
        elif not isinstance(A, CMat):
            A = CMat.from_entries(A) if isinstance(A, (list, tuple, np.ndarray)) else CMat.scalar(A, D)
        return cls(r, A.D, {(Letter(i, starred),): A})

    @classmethod
    def from_words(cls, r: int, D: int, items: Iterable) -> "NCPoly":
        """items: iterable of (word spec, coefficient) pairs."""
        return cls(r, D, {make_word(w): c for w, c in _merge_items(items)})

    # properties -------------------------------------------------------------
    @property
    def degree(self) -> int:
        return max((len(w) for w in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def has_stars(self) -> bool:
        return any(a.starred for w in self.terms for a in w)

    def generators_used(self) -> list[int]:
        return sorted({a.generator for w in self.terms for a in w})

    def adjoint(self, hermitian_letters: bool = False) -> "NCPoly":
        """P*; with ``hermitian_letters`` every x_i is taken self-adjoint (x_i* = x_i)."""
        if hermitian_letters:
            return NCPoly(self.r, self.D, {tuple(Letter(a.generator) for a in reversed(w)): A.adjoint()
                                           for w, A in self.terms.items()})
        return NCPoly(self.r, self.D, {word_adjoint(w): A.adjoint() for w, A in self.terms.items()})

    def is_self_adjoint(self, kind: str = "hermitian") -> bool:
        """Exact check P* == P.

        ``kind`` says what the letters are: "hermitian" (x_i* = x_i, stars
        ignored), "unitary" (words compared after free reduction) or "generic".
        """
        if kind == "hermitian":
            P = NCPoly(self.r, self.D, {tuple(Letter(a.generator) for a in w): A for w, A in self.terms.items()})
            return P == P.adjoint(hermitian_letters=True)
        if kind == "unitary":
            return self.reduced() == self.adjoint().reduced()
        return self == self.adjoint()

    def reduced(self) -> "NCPoly":
        """Apply u u* = u* u = 1 to every word (valid for unitary generators)."""
        acc: dict[Word, CMat] = {}
        for w, A in self.terms.items():
            rw = free_reduce(w)
            acc[rw] = acc[rw] + A if rw in acc else A
        return NCPoly(self.r, self.D, acc)

    def __eq__(self, other) -> bool:
        if not isinstance(other, NCPoly):
            return NotImplemented
        return self.D == other.D and self.terms == other.terms

    def __hash__(self):
        return hash((self.D, frozenset(self.terms)))

    def _check(self, other: "NCPoly"):
        if self.D != other.D:
            raise DimensionMismatchError(f"coefficient dimensions {self.D} and {other.D} differ")

    def __add__(self, other) -> "NCPoly":
        if not isinstance(other, NCPoly):
            other = NCPoly.constant(CMat.scalar(other, self.D), self.r)
        self._check(other)
        terms = dict(self.terms)
        for w, A in other.terms.items():
            terms[w] = terms[w] + A if w in terms else A
        return NCPoly(max(self.r, other.r), self.D, terms)

    __radd__ = __add__

    def __neg__(self) -> "NCPoly":
        return NCPoly(self.r, self.D, {w: -A for w, A in self.terms.items()})

    def __sub__(self, other) -> "NCPoly":
        return self + (-other if isinstance(other, NCPoly) else -Fraction(other))

    def scale(self, c) -> "NCPoly":
        return NCPoly(self.r, self.D, {w: A.scale(c) for w, A in self.terms.items()})

    def __mul__(self, other) -> "NCPoly":
        if isinstance(other, NCPoly):
            return ncp_mul(self, other)
        return self.scale(other)

    def __rmul__(self, other) -> "NCPoly":
        return self.scale(other)

    def __repr__(self) -> str:
        parts = [f"{A.to_json_entries()}*[{word_str(w)}]" for w, A in sorted(self.terms.items(), key=_wkey)]
        return f"NCPoly(r={self.r}, D={self.D}, " + " + ".join(parts or ["0"]) + ")"

    # serialization ----------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "D": self.D,
            "terms": [
                {"word": [[a.generator, bool(a.starred)] for a in w], "matrix": A.to_json_entries()}
                for w, A in sorted(self.terms.items(), key=_wkey)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "NCPoly":
        try:
            r, D = int(data["r"]), int(data["D"])
            terms: dict[Word, CMat] = {}
            for t in data["terms"]:
                w = tuple(Letter(int(g), bool(s)) for g, s in t["word"])
                ents = t["matrix"]
                if len(ents) != D * D:
                    raise DimensionMismatchError(f"matrix for word {word_str(w)} has {len(ents)} entries, expected {D * D}")
                A = CMat.from_entries([ents[i * D:(i + 1) * D] for i in range(D)])
                terms[w] = terms[w] + A if w in terms else A
        except DimensionMismatchError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"malformed NCPoly data: {exc}") from exc
        return cls(r, D, terms)

    @classmethod
    def from_json(cls, text: str) -> "NCPoly":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DomainError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)


def _wkey(item):
    w = item[0]
    return (len(w), tuple((a.generator, a.starred) for a in w))


def _merge_items(items):
    for w, c in items:
        yield w, c


def ncp_mul(P: NCPoly, Q: NCPoly) -> NCPoly:
    P._check(Q)
    acc: dict[Word, CMat] = {}
    for w, A in P.terms.items():
        for v, B in Q.terms.items():
            key = w + v
            C = A @ B
            acc[key] = acc[key] + C if key in acc else C
    return NCPoly(max(P.r, Q.r), P.D, acc)


def ncp_apply_poly(h: Poly, P: NCPoly, reduce_unitary: bool = False) -> NCPoly:
    """h(P) by Horner's rule; the constant term multiplies the empty word.

    With ``reduce_unitary`` words are freely reduced after every step.
    """
    acc = NCPoly.constant(CMat.scalar(h[h.degree], P.D), P.r)
    for k in range(h.degree - 1, -1, -1):
        acc = ncp_mul(acc, P)
        if reduce_unitary:
            acc = acc.reduced()
        if h[k]:
            acc = acc + NCPoly.constant(CMat.scalar(h[k], P.D), P.r)
    return acc


# ---------------------------------------------------------------------------
# free word moments
# ---------------------------------------------------------------------------


class FreeModel(str, Enum):
    SEMICIRCULAR = "semicircular"
    HAAR_UNITARY = "haar_unitary"

    @classmethod
    def parse(cls, value) -> "FreeModel":
        if isinstance(value, FreeModel):
            return value
        v = str(value).strip().lower().replace("-", "_")
        aliases = {"semicircular": cls.SEMICIRCULAR, "semi": cls.SEMICIRCULAR, "gue": cls.SEMICIRCULAR,
                   "goe": cls.SEMICIRCULAR, "gse": cls.SEMICIRCULAR,
                   "haar_unitary": cls.HAAR_UNITARY, "haar": cls.HAAR_UNITARY, "haar_u": cls.HAAR_UNITARY,
                   "unitary": cls.HAAR_UNITARY, "haaru": cls.HAAR_UNITARY}
        if v not in aliases:
            raise DomainError(f"unknown free model {value!r}")
        return aliases[v]


def free_semicircular_moment(w: Word) -> Fraction:
    """Count noncrossing pairings of positions that only pair equal generators."""
    w = make_word(w)
    if any(a.starred for a in w):
        raise DomainError("semicircular elements are self-adjoint; starred letters are not allowed")
    return Fraction(_nc_count(tuple(a.generator for a in w)))


@lru_cache(maxsize=65536)
def _nc_count(labels: tuple) -> int:
    n = len(labels)
    if n % 2:
        return 0
    if len(set(labels)) == 1:
        k = n // 2
        return math.comb(2 * k, k) // (k + 1)
    # nc[i][j]: count on the interval labels[i:j]
    nc = [[0] * (n + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        nc[i][i] = 1
    for length in range(2, n + 1, 2):
        for i in range(0, n - length + 1):
            j = i + length
            total = 0
            for k in range(i + 1, j, 2):
                if labels[k] == labels[i]:
                    total += nc[i + 1][k] * nc[k + 1][j]
            nc[i][j] = total
    return nc[0][n]


def free_haar_moment(w: Word) -> Fraction:
    """1 if w is trivial in the free group on the generators, else 0."""
    return Fraction(1 if not free_reduce(make_word(w)) else 0)


def word_functional(model: FreeModel):
    model = FreeModel.parse(model)
    return free_semicircular_moment if model is FreeModel.SEMICIRCULAR else free_haar_moment


@dataclass(frozen=True)
class ComplexRational:
    re: Fraction
    im: Fraction

    def __eq__(self, other):
        if isinstance(other, ComplexRational):
            return self.re == other.re and self.im == other.im
        if self.im == 0:
            return self.re == other
        return NotImplemented

    def __hash__(self):
        return hash((self.re, self.im))

    def conjugate(self) -> "ComplexRational":
        return ComplexRational(self.re, -self.im)


def _real_or_complex(re: Fraction, im: Fraction):
    return re if im == 0 else ComplexRational(re, im)


def free_matrix_moment(P: NCPoly, p: int, model, method: str = "fock", budget: int | None = None):
    """(tr_D (x) tau)(P^p) exactly.

    ``method="words"`` expands P^p and applies the word functional term by
    term; ``"fock"`` applies P to the vacuum of the free model's Hilbert
    space.  The two routes are independent and must agree.
    """
    model = FreeModel.parse(model)
    if p < 0:
        raise DomainError("moment order must be >= 0")
    if model is FreeModel.SEMICIRCULAR and P.has_stars():
        raise DomainError("starred letter in a semicircular polynomial")
    if method == "words":
        tau = word_functional(model)
        Q = ncp_apply_poly(Poly.monomial(p), P, reduce_unitary=model is FreeModel.HAAR_UNITARY)
        re = im = Fraction(0)
        for w, A in Q.terms.items():
            t = tau(w)
            if t:
                a, b = A.trace()
                re += a * t
                im += b * t
        return _real_or_complex(re / P.D, im / P.D)
    if method != "fock":
        raise DomainError(f"unknown method {method!r}")
    eng = FreeEngine(P, model, budget=budget)
    b = (p + 1) // 2
    a = p - b
    Y = eng.power_state(b)
    Pa = P.adjoint(hermitian_letters=model is FreeModel.SEMICIRCULAR)
    Z = FreeEngine(Pa, model, budget=budget).power_state(a) if a else eng.vacuum()
    return eng.pairing(Z, Y)


# ---------------------------------------------------------------------------
# vacuum-vector engine on the free models' Hilbert spaces
# ---------------------------------------------------------------------------

DEFAULT_BUDGET = 4_000_000


class _State:
    """Vector in M_D (x) H stored as integer blocks per word length, divided by scale."""

    __slots__ = ("blocks", "scale")

    def __init__(self, blocks: dict, scale: int):
        self.blocks = blocks  # length -> (re, im) arrays of shape (n_len, D, D)
        self.scale = scale


class FreeEngine:
    """Applies P to I_D (x) Omega in the full Fock space (semicircular model,
    s_i = l_i + l_i*) or in l^2 of the free group (Haar model, left
    translations), with basis vectors of each length stored densely."""

    def __init__(self, P: NCPoly, model, budget: int | None = None):
        self.model = FreeModel.parse(model)
        if self.model is FreeModel.SEMICIRCULAR and P.has_stars():
            raise DomainError("starred letter in a semicircular polynomial")
        self.P = P
        self.D = P.D
        self.budget = DEFAULT_BUDGET if budget is None else budget
        gens = sorted(set(P.generators_used()) | set(P.adjoint().generators_used()))
        self.index = {g: k for k, g in enumerate(gens)}
        self.rank = max(len(gens), 1)
        den = 1
        for A in P.terms.values():
            den = math.lcm(den, A.den)
        self.den = den
        self.terms = []
        for w, A in P.terms.items():
            f = den // A.den
            self.terms.append((w, A.re.astype(object) * f, A.im.astype(object) * f))
        self.amax = sum(max(_absmax(re), _absmax(im)) * (2 ** len(w)) for w, re, im in self.terms)
        self.q0 = P.degree

    # basis bookkeeping ------------------------------------------------------
    def count(self, length: int) -> int:
        if length == 0:
            return 1
        if self.model is FreeModel.SEMICIRCULAR:
            return self.rank ** length
        k = 2 * self.rank
        return k * (k - 1) ** (length - 1)

    def size_for_power(self, p: int) -> int:
        return sum(self.count(l) for l in range(p * self.q0 + 1)) * self.D * self.D

    def vacuum(self) -> _State:
        eye = np.eye(self.D, dtype=np.int64)[None, :, :]
        return _State({0: (eye.copy(), np.zeros_like(eye))}, 1)

    # letter actions -----------------------------------------------------------
    def _letter(self, blocks: dict, a: Letter) -> dict:
        c = self.index[a.generator]
        if self.model is FreeModel.SEMICIRCULAR:
            return self._semi_letter(blocks, c)
        return self._haar_letter(blocks, 2 * c + (1 if a.starred else 0))

    def _semi_letter(self, blocks: dict, c: int) -> dict:
        r = self.rank
        out: dict = {}
        for l, (re, im) in blocks.items():
            n = r ** l
            # creation prepends letter c
            nre = np.zeros((n * r,) + re.shape[1:], dtype=re.dtype)
            nim = np.zeros_like(nre)
            nre[c * n:(c + 1) * n] = re
            nim[c * n:(c + 1) * n] = im
            _acc(out, l + 1, nre, nim)
            if l > 0:
                m = n // r
                _acc(out, l - 1, re[c * m:(c + 1) * m], im[c * m:(c + 1) * m])
        return out

    def _haar_letter(self, blocks: dict, a: int) -> dict:
        k = 2 * self.rank
        inv = a ^ 1
        out: dict = {}
        for l, (re, im) in blocks.items():
            if l == 0:
                nre = np.zeros((k,) + re.shape[1:], dtype=re.dtype)
                nim = np.zeros_like(nre)
                nre[a] = re[0]
                nim[a] = im[0]
                _acc(out, 1, nre, nim)
                continue
            B = (k - 1) ** (l - 1)
            nre = np.zeros((k * (k - 1) ** l,) + re.shape[1:], dtype=re.dtype)
            nim = np.zeros_like(nre)
            for f in range(k):
                src_re = re[f * B:(f + 1) * B]
                src_im = im[f * B:(f + 1) * B]
                if f == inv:
                    if l == 1:
                        _acc(out, 0, src_re, src_im)
                        continue
                    B2 = B // (k - 1)
                    cre = np.zeros((k * B2,) + re.shape[1:], dtype=re.dtype)
                    cim = np.zeros_like(cre)
                    for t in range(k - 1):
                        cabs = t if t < (f ^ 1) else t + 1
                        cre[cabs * B2:(cabs + 1) * B2] = src_re[t * B2:(t + 1) * B2]
                        cim[cabs * B2:(cabs + 1) * B2] = src_im[t * B2:(t + 1) * B2]
                    _acc(out, l - 1, cre, cim)
                else:
                    rel = f if f < inv else f - 1
                    base = a * (k - 1) ** l + rel * B
                    nre[base:base + B] = src_re
                    nim[base:base + B] = src_im
            _acc(out, l + 1, nre, nim)
        return out

    def apply(self, st: _State) -> _State:
        total: dict = {}
        big = self._needs_object(st)
        for w, are, aim in self.terms:
            blocks = st.blocks
            if big:
                blocks = {l: (x.astype(object), y.astype(object)) for l, (x, y) in blocks.items()}
            for a in reversed(w):
                blocks = self._letter(blocks, a)
            for l, (re, im) in blocks.items():
                if not big:
                    ar, ai = are.astype(np.int64), aim.astype(np.int64)
                else:
                    ar, ai = are, aim
                nre = np.matmul(ar, re) - np.matmul(ai, im)
                nim = np.matmul(ar, im) + np.matmul(ai, re)
                _acc(total, l, nre, nim)
        return _State(total, st.scale * self.den)

    def _needs_object(self, st: _State) -> bool:
        m = 0
        for re, im in st.blocks.values():
            if re.dtype == object:
                return True
            m = max(m, _absmax(re), _absmax(im))
        return m * self.amax * 2 * self.D >= (1 << 62) or self.D > 4

    def power_state(self, p: int) -> _State:
        if self.size_for_power(p) > self.budget:
            raise SizeCapError(f"basis for P^{p} exceeds budget {self.budget}")
        st = self.vacuum()
        for _ in range(p):
            st = self.apply(st)
        return st

    def iter_powers(self, p_max: int):
        """Yield (p, state of P^p) while within budget."""
        st = self.vacuum()
        yield 0, st
        for p in range(1, p_max + 1):
            if self.size_for_power(p) > self.budget:
                return
            st = self.apply(st)
            yield p, st

    def pairing(self, Z: _State, Y: _State):
        """(1/D) sum_w tr(Z_w^* Y_w) as an exact rational."""
        re_tot = 0
        im_tot = 0
        for l, (yr, yi) in Y.blocks.items():
            if l not in Z.blocks:
                continue
            zr, zi = Z.blocks[l]
            re_tot += _dot(zr, yr) + _dot(zi, yi)
            im_tot += _dot(zr, yi) - _dot(zi, yr)
        den = self.D * Z.scale * Y.scale
        return _real_or_complex(Fraction(re_tot, den), Fraction(im_tot, den))

    def norm_sq(self, Y: _State) -> Fraction:
        tot = 0
        for yr, yi in Y.blocks.values():
            tot += _dot(yr, yr) + _dot(yi, yi)
        return Fraction(tot, self.D * Y.scale * Y.scale)


def _absmax(a: np.ndarray) -> int:
    if a.size == 0:
        return 0
    if a.dtype == object:
        return max(abs(int(v)) for v in a.flat)
    return int(np.abs(a).max())


def _dot(a: np.ndarray, b: np.ndarray) -> int:
    if a.size == 0:
        return 0
    if a.dtype != object and b.dtype != object:
        if max(_absmax(a), _absmax(b)) < (1 << 20) and a.size < (1 << 22):
            return int(np.sum(a * b))
    return int(np.dot(a.astype(object).ravel(), b.astype(object).ravel()))


def _acc(out: dict, l: int, re: np.ndarray, im: np.ndarray):
    if l in out:
        ore, oim = out[l]
        if ore.dtype != re.dtype:
            ore, oim, re, im = (x.astype(object) for x in (ore, oim, re, im))
        out[l] = (ore + re, oim + im)
    else:
        out[l] = (re.copy(), im.copy())


def free_even_moments(P: NCPoly, model, p_max: int, budget: int | None = None) -> list[Fraction]:
    """[m_0, m_2, ..., m_{2p}] with m_{2p} = ||P^p (I (x) Omega)||^2 / D, for
    self-adjoint P, stopping early when the basis budget is exhausted."""
    eng = FreeEngine(P, model, budget=budget)
    out = []
    for _, st in eng.iter_powers(p_max):
        out.append(eng.norm_sq(st))
    return out


# ---------------------------------------------------------------------------
# norm of the free limit
# ---------------------------------------------------------------------------

KAPPA = {FreeModel.SEMICIRCULAR: 2, FreeModel.HAAR_UNITARY: 1}


def crude_norm_bound(P: NCPoly, model) -> float:
    """Triangle bound sum_w ||A_w|| kappa^|w| (kappa = 2 semicircular, 1 unitary)."""
    kappa = KAPPA[FreeModel.parse(model)]
    return float(sum(A.op_norm() * kappa ** len(w) for w, A in P.terms.items()))


@dataclass(frozen=True)
class FreeLimit:
    model: FreeModel
    moments: list  # exact even moments m_0, m_2, ..., m_{2p}
    norm_bracket: tuple
    rigorous_lower: float
    crude_upper: float
    estimate: float
    margin: float
    fit_residual: float
    p_used: int
    log_fit: float = float("nan")

    @property
    def lower(self) -> float:
        return self.norm_bracket[0]

    @property
    def upper(self) -> float:
        return self.norm_bracket[1]

    @property
    def width(self) -> float:
        return self.norm_bracket[1] - self.norm_bracket[0]

    def to_dict(self) -> dict:
        return {
            "model": self.model.value,
            "moments": [f"{m.numerator}/{m.denominator}" for m in self.moments],
            "norm_bracket": list(self.norm_bracket),
            "rigorous_lower": self.rigorous_lower,
            "crude_upper": self.crude_upper,
            "estimate": self.estimate,
            "margin": self.margin,
            "fit_residual": self.fit_residual,
            "p_used": self.p_used,
            "log_fit": self.log_fit,
        }


def _root(m: Fraction, k: int) -> float:
    """m**(1/k) for a positive rational of any size."""
    return math.exp((math.log(m.numerator) - math.log(m.denominator)) / k)


def _ratio_fit(moments, lo: int, hi: int, order: int = 2):
    """Least-squares fit m_{2p}/m_{2p-2} ~ sum_{k<=order} c_k p^-k; returns (sqrt(c0), rms residual)."""
    ps = np.arange(lo, hi + 1, dtype=float)
    r = np.array([float(moments[p] / moments[p - 1]) for p in range(lo, hi + 1)])
    X = np.stack([ps ** -k for k in range(order + 1)], axis=1)
    coef, *_ = np.linalg.lstsq(X, r, rcond=None)
    resid = float(np.sqrt(np.mean((X @ coef - r) ** 2)))
    return math.sqrt(max(coef[0], 0.0)), resid


def _log_fit(moments, lo: int, hi: int) -> float:
    ps = np.arange(lo, hi + 1, dtype=float)
    y = np.array([_root(moments[p], 2 * p) for p in range(lo, hi + 1)])
    X = np.stack([np.ones_like(ps), -np.log(ps) / ps], axis=1)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return float(coef[0])


def free_norm_estimate(P: NCPoly, model, p_max: int = 64, budget: int | None = None) -> FreeLimit:
    """Bracket for ||P(s)|| or ||P(u, u*)|| from exact even moments.

    The centre comes from a fit of successive moment ratios over the top half
    of p, m_{2p}/m_{2p-2} ~ c0 + c1/p + c2/p^2 (so ||.|| ~ sqrt(c0)).  The
    margin adds the change when the 1/p^2 term is dropped, the change under a
    window shifted by one, and the fit residual.  The fit
    m_{2p}^{1/2p} ~ L - a log(p)/p is reported as ``log_fit`` only; it
    converges too slowly to bound anything.  The bracket is clipped to
    [max_p m_{2p}^{1/2p}, crude triangle bound].  It is an estimate, not a
    certificate.
    """
    model = FreeModel.parse(model)
    if p_max < 4:
        raise DomainError("p_max must be >= 4")
    unitary = model is FreeModel.HAAR_UNITARY
    if not P.is_self_adjoint("unitary" if unitary else "hermitian"):
        raise NotSelfAdjointError("norm estimation needs a self-adjoint polynomial")
    Pw = P.reduced() if unitary else P
    moments = free_even_moments(Pw, model, p_max, budget)
    p_used = len(moments) - 1
    if p_used < 4:
        raise SizeCapError(f"only {p_used} even moments fit in the basis budget; need 4")
    crude = crude_norm_bound(P, model)
    if all(m == 0 for m in moments[1:]):
        return FreeLimit(model, moments, (0.0, 0.0), 0.0, crude, 0.0, 0.0, 0.0, p_used)
    rig = max(_root(moments[p], 2 * p) for p in range(1, p_used + 1) if moments[p] > 0)
    lo = max(2, p_used // 2)
    center, resid = _ratio_fit(moments, lo, p_used, 2)
    coarse, _ = _ratio_fit(moments, lo, p_used, 1)
    shifted, _ = _ratio_fit(moments, max(2, lo - 1), p_used - 1, 2)
    log_est = _log_fit(moments, lo, p_used)
    resid_norm = resid / (2 * center) if center > 0 else resid
    margin = abs(center - coarse) + abs(center - shifted) + resid_norm
    lower = max(rig, center - margin)
    upper = min(crude, center + margin)
    if upper < lower:
        upper = lower
    return FreeLimit(model, moments, (lower, upper), rig, crude, center, margin, resid, p_used, log_est)

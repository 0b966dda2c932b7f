"""Univariate polynomials with exact rational coefficients, Chebyshev series,
classical polynomial inequalities and smooth test functions.

Exact objects (:class:`Poly`) never round; the floating helpers (``evalf``,
:func:`sup_norm`, :class:`ChebSeries`) work in double precision.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
import scipy.fft
import scipy.optimize
from numpy.polynomial import chebyshev as npcheb

from .errors import DomainError, EvaluationError, IncompleteBasisError

_EPS = np.finfo(float).eps


def _frac(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, str):
        return Fraction(c)
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    if isinstance(c, (float, np.floating)):
        return Fraction(float(c))
    if isinstance(c, np.integer):
        return Fraction(int(c))
    raise TypeError(f"cannot convert {c!r} to an exact rational")


class Poly:
    """Dense univariate polynomial over the rationals, lowest degree first.

    The zero polynomial is stored as ``(0,)`` so that ``degree == len(coeffs) - 1``
    always holds.
    """

    __slots__ = ("coeffs", "_float")

    def __init__(self, coeffs: Iterable = (0,)):
        cs = [_frac(c) for c in coeffs]
        while len(cs) > 1 and cs[-1] == 0:
            cs.pop()
        if not cs:
            cs = [Fraction(0)]
        self.coeffs: tuple[Fraction, ...] = tuple(cs)
        self._float = None

    # constructors -------------------------------------------------------
    @classmethod
    def x(cls) -> "Poly":
        return cls((0, 1))

    @classmethod
    def const(cls, c) -> "Poly":
        return cls((c,))

    @classmethod
    def monomial(cls, n: int, c=1) -> "Poly":
        return cls([0] * n + [c])

    # basic properties ---------------------------------------------------
    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return self.degree == 0 and self.coeffs[0] == 0

    def __len__(self) -> int:
        return len(self.coeffs)

    def __getitem__(self, k: int) -> Fraction:
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return Fraction(0)

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.coeffs == other.coeffs
        if isinstance(other, (int, Fraction)):
            return self.coeffs == (Fraction(other),)
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        return f"Poly({[str(c) for c in self.coeffs]})"

    def __str__(self) -> str:
        terms = []
        for k, c in enumerate(self.coeffs):
            if c == 0:
                continue
            mon = "" if k == 0 else ("x" if k == 1 else f"x^{k}")
            coef = str(c)
            if mon and c == 1:
                coef = ""
            elif mon and c == -1:
                coef = "-"
            elif mon:
                coef = f"({c})*" if c.denominator != 1 or c < 0 else f"{c}*"
            terms.append(coef + mon)
        return " + ".join(terms) if terms else "0"

    # arithmetic -----------------------------------------------------------
    def _coerce(self, other) -> "Poly":
        return other if isinstance(other, Poly) else Poly.const(other)

    def __add__(self, other) -> "Poly":
        other = self._coerce(other)
        n = max(len(self), len(other))
        return Poly(self[k] + other[k] for k in range(n))

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly(-c for c in self.coeffs)

    def __sub__(self, other) -> "Poly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Poly":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            c = _frac(other)
            return Poly(c * a for a in self.coeffs)
        out = [Fraction(0)] * (len(self) + len(other) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return Poly(out)

    __rmul__ = __mul__

    def __truediv__(self, c) -> "Poly":
        c = _frac(c)
        return Poly(a / c for a in self.coeffs)

    def __pow__(self, n: int) -> "Poly":
        if n < 0:
            raise DomainError("negative power of a polynomial")
        result, base = Poly.const(1), self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __call__(self, x):
        """Horner evaluation; exact for rationals, floating for floats/arrays."""
        if isinstance(x, (int, Fraction)):
            acc = Fraction(0)
            for c in reversed(self.coeffs):
                acc = acc * x + c
            return acc
        return self.evalf(x)

    def evalf(self, x):
        return np.polynomial.polynomial.polyval(x, self.float_coeffs)

    @property
    def float_coeffs(self) -> np.ndarray:
        if self._float is None:
            self._float = np.array([float(c) for c in self.coeffs])
        return self._float

    def deriv(self, k: int = 1) -> "Poly":
        cs = list(self.coeffs)
        for _ in range(k):
            cs = [i * cs[i] for i in range(1, len(cs))] or [0]
        return Poly(cs)

    def compose(self, inner: "Poly") -> "Poly":
        acc = Poly.const(0)
        for c in reversed(self.coeffs):
            acc = acc * inner + c
        return acc

    def shift_scale(self, center, scale) -> "Poly":
        """Return ``t -> self(center + scale * t)``."""
        return self.compose(Poly((_frac(center), _frac(scale))))

    def truncate(self, n: int) -> "Poly":
        """Keep monomials of degree < n."""
        return Poly(self.coeffs[:max(n, 1)])

    def reflect(self) -> "Poly":
        """Return ``x -> self(-x)``."""
        return Poly(c if k % 2 == 0 else -c for k, c in enumerate(self.coeffs))

    def odd_part_is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs[1::2])

    def series_div(self, denom: "Poly", n: int) -> "Poly":
        """First ``n`` Taylor coefficients at 0 of ``self / denom`` (exact)."""
        d0 = denom[0]
        if d0 == 0:
            raise DomainError("power-series division by a polynomial vanishing at 0")
        out: list[Fraction] = []
        for k in range(n):
            acc = self[k]
            for i in range(1, min(k, denom.degree) + 1):
                acc -= denom[i] * out[k - i]
            out.append(acc / d0)
        return Poly(out)

    def eval_inverse_ints(self, ns: Iterable[int]) -> list[Fraction]:
        """Exact values ``self(1/N)`` using integer Horner arithmetic."""
        den = 1
        for c in self.coeffs:
            den = den * c.denominator // math.gcd(den, c.denominator)
        ints = [int(c * den) for c in self.coeffs]
        q = self.degree
        out = []
        for n in ns:
            if n == 0:
                raise DomainError("cannot evaluate at 1/0")
            # Horner from the lowest coefficient gives sum_i c_i n^(q-i)
            acc = 0
            for c in ints:
                acc = acc * n + c
            out.append(Fraction(acc, den * n ** q))
        return out

    def to_chebyshev(self, radius=1) -> list[Fraction]:
        """Exact coefficients a_j with ``self(x) = sum_j a_j T_j(x / radius)``."""
        k = _frac(radius)
        scaled = [c * k ** i for i, c in enumerate(self.coeffs)]
        return monomial_to_chebyshev(scaled)

    # serialization --------------------------------------------------------
    def to_json(self) -> str:
        return json.dumps([f"{c.numerator}/{c.denominator}" for c in self.coeffs])

    @classmethod
    def from_json(cls, text: str) -> "Poly":
        data = json.loads(text)
        if not isinstance(data, list) or not data:
            raise DomainError("polynomial JSON must be a non-empty array")
        try:
            return cls(Fraction(str(c)) for c in data)
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"malformed coefficient in polynomial JSON: {exc}") from exc


def monomial_to_chebyshev(coeffs: Sequence) -> list[Fraction]:
    """Exact change of basis from monomials x^n to Chebyshev T_j."""
    n_max = len(coeffs) - 1
    out = [Fraction(0)] * (n_max + 1)
    for n, c in enumerate(coeffs):
        c = _frac(c)
        if c == 0:
            continue
        # x^n = 2^{1-n} sum_{k < n/2} C(n,k) T_{n-2k} + 2^{-n} C(n, n/2) T_0
        for k in range(n // 2 + 1):
            j = n - 2 * k
            w = Fraction(math.comb(n, k), 2 ** n)
            if j != 0:
                w *= 2
            out[j] += c * w
    return out


def chebyshev_to_monomial(cheb: Sequence, radius=1) -> Poly:
    acc = Poly.const(0)
    for j, a in enumerate(cheb):
        a = _frac(a)
        if a:
            acc = acc + cheb_poly("first", j) * a
    return acc.compose(Poly((0, Fraction(1) / _frac(radius))))


@lru_cache(maxsize=None)
def cheb_poly(kind: str, j: int) -> Poly:
    """Chebyshev polynomial T_j (``kind='first'``) or U_j (``'second'``)."""
    if j < 0:
        raise DomainError("Chebyshev index must be nonnegative")
    if kind not in ("first", "second"):
        raise DomainError(f"unknown Chebyshev kind {kind!r}")
    if j == 0:
        return Poly.const(1)
    if j == 1:
        return Poly((0, 1)) if kind == "first" else Poly((0, 2))
    two_x = Poly((0, 2))
    return two_x * cheb_poly(kind, j - 1) - cheb_poly(kind, j - 2)


# ---------------------------------------------------------------------------
# Chebyshev series of black-box functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChebSeries:
    """Truncated expansion ``sum_j coeffs[j] T_j(x / radius)`` on [-radius, radius].

    ``tail`` holds the magnitudes of the coefficients that were computed and
    dropped (zero at retained indices); ``noise_floor`` estimates the
    per-coefficient quadrature error of the retained ones.
    """

    radius: float
    coeffs: np.ndarray
    truncation_error: float
    noise_floor: float = 0.0
    tail: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __call__(self, x):
        return npcheb.chebval(np.asarray(x, dtype=float) / self.radius, self.coeffs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1


def cheb_expand(f: Callable, K: float, nodes: int = 4096, tol: float = 1e-14) -> ChebSeries:
    if nodes < 64 or nodes & (nodes - 1):
        raise DomainError("node count must be a power of two >= 64")
    if K <= 0:
        raise DomainError("radius must be positive")
    theta = np.pi * (np.arange(nodes) + 0.5) / nodes
    xs = K * np.cos(theta)
    try:
        vals = np.asarray(f(xs), dtype=float)
        if vals.shape != xs.shape:
            raise ValueError
    except (TypeError, ValueError):
        vals = np.array([float(f(x)) for x in xs])
    if not np.all(np.isfinite(vals)):
        raise EvaluationError("function returned a non-finite value on [-K, K]")
    a = scipy.fft.dct(vals, type=2) / nodes
    a[0] /= 2
    mags = np.abs(a)
    fmax = float(np.max(np.abs(vals))) if vals.size else 0.0
    noise = max(float(mags[nodes // 2:].max()), 4 * _EPS * max(fmax, 1e-300))
    keep = mags >= tol
    if keep.any():
        last = int(np.nonzero(keep)[0][-1])
    else:
        last = 0
    coeffs = np.where(keep, a, 0.0)[: last + 1]
    tail = np.where(keep, 0.0, mags)
    trunc = float(tail.sum()) + noise * (last + 1)
    return ChebSeries(float(K), coeffs, trunc, noise, tail)


# ---------------------------------------------------------------------------
# norms and inequalities
# ---------------------------------------------------------------------------


def sup_norm(h: Poly, a: float, b: float) -> float:
    """max |h| over [a, b]: Chebyshev-node grid plus bounded local refinement."""
    if a > b:
        raise DomainError("sup_norm needs a <= b")
    if a == b or h.degree == 0:
        return float(abs(h(_frac(a))))
    center = (_frac(a) + _frac(b)) / 2
    half = (_frac(b) - _frac(a)) / 2
    # re-expanding in Chebyshev form on [a, b] keeps float evaluation stable
    cheb = np.array([float(c) for c in h.shift_scale(center, half).to_chebyshev(1)])
    g = lambda t: npcheb.chebval(t, cheb)  # noqa: E731
    n = 8 * h.degree + 64
    grid = np.concatenate(([-1.0], np.cos(np.pi * (np.arange(n) + 0.5) / n)[::-1], [1.0]))
    vals = np.abs(g(grid))
    best = float(vals.max())
    for idx in np.argsort(vals)[-4:]:
        lo = grid[max(idx - 1, 0)]
        hi = grid[min(idx + 1, len(grid) - 1)]
        if hi <= lo:
            continue
        res = scipy.optimize.minimize_scalar(
            lambda t: -abs(g(t)), bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-13},
        )
        best = max(best, float(-res.fun))
    return best


def bernstein_rhs(q: int, delta: float, m: int, x: float) -> float:
    """Bound factor (2q / (delta * sqrt(1 - (x/delta)^2)))^m on |h^(m)(x)| / ||h||."""
    if m < 1:
        raise DomainError("derivative order must be >= 1")
    if abs(x) >= delta:
        raise DomainError("Bernstein bound needs |x| < delta")
    return (2 * q / (delta * math.sqrt(1 - (x / delta) ** 2))) ** m


def extrapolation_bound(h: Poly, K: float, x: float) -> float:
    """(2|x|/K)^q ||h||_[-K,K], an upper bound for |h(x)| outside [-K, K]."""
    if abs(x) <= K:
        raise DomainError("extrapolation bound needs |x| > K")
    return (2 * abs(x) / K) ** h.degree * sup_norm(h, -K, K)


# ---------------------------------------------------------------------------
# test functions
# ---------------------------------------------------------------------------


def _irwin_hall_pieces(n: int) -> list[np.ndarray]:
    """Float coefficients (in the local variable s in [0,1]) of the Irwin-Hall
    CDF of n uniform variables on each unit interval [k, k+1]."""
    pieces = []
    fact = math.factorial(n)
    for k in range(n):
        local = Poly.const(0)
        for i in range(k + 1):
            # (k - i + s)^n
            term = Poly((k - i, 1)) ** n
            local = local + term * Fraction((-1) ** i * math.comb(n, i), fact)
        pieces.append(np.array([float(c) for c in local.coeffs] + [0.0] * (n + 1 - len(local))))
    return pieces


def _series_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Truncated product of Taylor jets stored along the last axis."""
    order = a.shape[-1]
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    for i in range(order):
        out[..., i:] += a[..., i : i + 1] * b[..., : order - i]
    return out


@dataclass(frozen=True)
class TestFunction:
    """Even smooth step: 0 on |x| <= rho + eps/2, 1 on |x| >= rho + eps.

    Realized as a hard step convolved with ``m + 1`` box kernels of width
    ``eps / (2(m+1))``, i.e. an Irwin-Hall CDF in the rescaled variable, so it
    is C^m with a bounded (m+1)-st derivative.
    """

    __test__ = False  # not a pytest class

    m: int
    radius: float
    rho: float
    eps: float
    series: ChebSeries | None = field(default=None, repr=False, compare=False)

    @property
    def n_boxes(self) -> int:
        return self.m + 1

    @property
    def box_width(self) -> float:
        return self.eps / (2 * self.n_boxes)

    @property
    def ramp_start(self) -> float:
        return self.rho + self.eps / 2

    def _pieces(self):
        return _irwin_hall_pieces_cached(self.n_boxes)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        y = (np.abs(x) - self.ramp_start) / self.box_width
        n = self.n_boxes
        out = np.where(y >= n, 1.0, 0.0)
        inside = (y > 0) & (y < n)
        if np.any(inside):
            yi = y[inside]
            k = np.minimum(np.floor(yi).astype(int), n - 1)
            s = yi - k
            pieces = np.stack(self._pieces())  # (n, n+1)
            coefs = pieces[k]
            acc = np.zeros_like(s)
            for c in coefs.T[::-1]:
                acc = acc * s + c
            out[inside] = np.clip(acc, 0.0, 1.0)
        return out if out.ndim else float(out)

    def theta_derivative(self, order: int, theta) -> np.ndarray:
        """Exact d^order/dtheta^order of f(theta) = chi(K cos theta) via Taylor jets."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        o = order + 1
        i = np.arange(o)
        fact = np.array([math.factorial(int(v)) for v in i], dtype=float)
        # jet of K cos(theta + t) in t
        gjet = self.radius * np.cos(theta[:, None] + i[None, :] * np.pi / 2) / fact[None, :]
        sign = np.sign(gjet[:, 0])
        absjet = gjet * np.where(sign == 0, 1.0, sign)[:, None]
        y0 = (absjet[:, 0] - self.ramp_start) / self.box_width
        n = self.n_boxes
        out = np.zeros(theta.shape)
        inside = (y0 > 0) & (y0 < n)
        if np.any(inside):
            yjet = absjet[inside] / self.box_width
            yjet[:, 0] = y0[inside]
            k = np.minimum(np.floor(y0[inside]).astype(int), n - 1)
            sjet = yjet.copy()
            sjet[:, 0] -= k
            pieces = np.stack(self._pieces())[k]  # (B, n+1)
            acc = np.zeros_like(sjet)
            for c in pieces.T[::-1]:
                acc = _series_mul(acc, sjet)
                acc[:, 0] += c
            out[inside] = acc[:, order] * math.factorial(order)
        return out

    def derivative_bound(self, k: int) -> float:
        """Envelope 8^{k+1} m^k (K/eps)^{k+1} for the (k+1)-st theta-derivative."""
        return 8.0 ** (k + 1) * self.m ** k * (self.radius / self.eps) ** (k + 1)


@lru_cache(maxsize=None)
def _irwin_hall_pieces_cached(n: int):
    return tuple(_irwin_hall_pieces(n))


def build_test_function(m: int, K: float, rho: float, eps: float,
                        nodes: int = 4096, tol: float = 1e-14) -> TestFunction:
    if m < 1:
        raise DomainError("smoothness order m must be >= 1")
    if eps <= 0 or rho < 0:
        raise DomainError("need eps > 0 and rho >= 0")
    if not rho + eps < K:
        raise DomainError("need rho + eps < K")
    bare = TestFunction(m, float(K), float(rho), float(eps))
    return TestFunction(m, float(K), float(rho), float(eps), cheb_expand(bare, K, nodes, tol))


# ---------------------------------------------------------------------------
# functionals on Chebyshev series
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FunctionalValue:
    value: float
    error: float


def apply_functional(values_on_basis, h: ChebSeries,
                     growth: Callable[[int], float] | None = None) -> FunctionalValue:
    """nu(h) = sum_j a_j nu(T_j(x/K)) for a linear functional given on the basis.

    ``values_on_basis[j]`` is nu(T_j(./K)). ``growth(j)`` bounds |nu(T_j(./K))|
    for indices whose coefficient was dropped or is only known up to the
    series noise floor; without it the largest supplied basis value is used.
    """
    if isinstance(values_on_basis, Mapping):
        lookup = values_on_basis
        known = set(values_on_basis)
    else:
        lookup = list(values_on_basis)
        known = set(range(len(lookup)))
    total = 0.0
    for j, a in enumerate(h.coeffs):
        if a == 0:
            continue
        if j not in known:
            raise IncompleteBasisError(j)
        total += float(a) * float(lookup[j])
    if growth is None:
        env = max((abs(float(lookup[j])) for j in known), default=1.0)
        growth = lambda j: env  # noqa: E731
    err = 0.0
    tail = h.tail
    for j in np.nonzero(tail)[0]:
        err += float(tail[j]) * growth(int(j))
    err += h.noise_floor * sum(growth(j) for j in range(len(h.coeffs)))
    return FunctionalValue(float(total), float(err))

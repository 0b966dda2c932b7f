"""Bounding polynomials from their values at 1/N, equispaced (Rakhmanov-type)
checks, and the polynomial approximations behind the rational Bernstein
inequality.

Wherever the underlying inequalities only promise an unnamed universal
constant, the functions here return the measured ratio; callers compare it to
a configured cap.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError
from .poly import Poly, cheb_poly, sup_norm

DEFAULT_CAP = 100.0


@dataclass(frozen=True)
class InterpReport:
    q: int
    delta: float
    ratio: float  # sup over [0, delta] divided by sup over the 1/N samples
    n_samples_used: int

    def to_dict(self) -> dict:
        return asdict(self)


def n_cap(q: int, delta: float) -> int:
    return max(10 * q, math.ceil(4 / delta))


def inverse_integer_ratio(h: Poly, delta: float) -> InterpReport:
    """||h||_[0, delta] / sup{|h(1/N)| : 1/N <= 2 delta, N <= N_cap}."""
    q = max(h.degree, 1)
    if not 0 < delta <= 1 / (24 * q):
        raise DomainError(f"delta must lie in (0, 1/(24 q)] = (0, {1 / (24 * q):.3g}]")
    n_lo = math.ceil(1 / (2 * delta))
    ns = range(max(n_lo, 1), n_cap(q, delta) + 1)
    vals = h.eval_inverse_ints(ns)
    sample_sup = max(abs(v) for v in vals)
    norm = sup_norm(h, 0.0, delta)
    if sample_sup == 0:
        ratio = 1.0 if norm == 0 else math.inf
    else:
        ratio = norm / float(sample_sup)
    return InterpReport(q, float(delta), ratio, len(vals))


def optimality_example(q: int) -> Poly:
    """h_q(x) = T_q(q x) prod_{j<=q} (1 - j x): bounded by 1 at every 1/N but
    large on [0, c/q]."""
    if q < 1:
        raise DomainError("q must be >= 1")
    h = cheb_poly("first", q).compose(Poly((0, q)))
    for j in range(1, q + 1):
        h = h * Poly((1, -j))
    return h


def rakhmanov_ratio(h: Poly, M: int) -> float:
    """||h||_[-1/2, 1/2] / max_k |h(-1 + (2k-1)/(2M))|, k = 1..2M."""
    if M < 1 or h.degree > M:
        raise DomainError("need 1 <= deg h <= M")
    xs = [Fraction(-1) + Fraction(2 * k - 1, 2 * M) for k in range(1, 2 * M + 1)]
    sample = max(abs(h(x)) for x in xs)
    norm = sup_norm(h, -0.5, 0.5)
    if sample == 0:
        return 1.0 if norm == 0 else math.inf
    return norm / float(sample)


def approx_inverse_shifted_power(q: int) -> Poly:
    """Degree-7q Taylor truncation of 1/(2+x)^q at 0."""
    if q < 1:
        raise DomainError("q must be >= 1")
    # 1/(2+x)^q = 2^-q sum_k binom(-q, k) (x/2)^k
    coeffs = [Fraction((-1) ** k * math.comb(q + k - 1, k), 2 ** (q + k)) for k in range(7 * q + 1)]
    return Poly(coeffs)


def gq_poly(q: int) -> Poly:
    """prod_{j<=q} (1 - (j x)^2)^floor(q/j)."""
    if q < 1:
        raise DomainError("q must be >= 1")
    acc = Poly.const(1)
    for j in range(1, q + 1):
        acc = acc * Poly((1, 0, -(j * j))) ** (q // j)
    return acc


def approx_inverse_gq(q: int, b: int) -> Poly:
    """Degree-2bq Taylor truncation of 1/g_q at 0."""
    if q < 1 or b < 1:
        raise DomainError("need q >= 1 and b >= 1")
    return Poly.const(1).series_div(gq_poly(q), 2 * b * q + 1)


def grid(a: float, b: float, degree: int) -> np.ndarray:
    """Uniform-norm verification grid: 32 points per degree, at least 1024."""
    return np.linspace(a, b, max(1024, 32 * max(degree, 1)))


@dataclass(frozen=True)
class BernsteinReport:
    q: int
    p: int
    m: int
    coefficient: Fraction  # r^(m)(0) / m!, exact
    sample_norm: float  # sup over I_q (truncated at N_cap) of |r(1/N)|
    rhs: float  # (e^-p (Cp)^m + (Cp)^(2m) / m!) * sample_norm
    kappa: float  # smallest C' with |coef| <= (C'p)^(2m)/m! * sample_norm

    @property
    def holds(self) -> bool:
        return abs(float(self.coefficient)) <= self.rhs

    def to_dict(self) -> dict:
        d = asdict(self)
        d["coefficient"] = str(self.coefficient)
        d["holds"] = self.holds
        return d


def rational_bernstein_check(f: Poly, q: int, m: int, C: float = 1.0) -> BernsteinReport:
    """Exact m-th Taylor coefficient of r = f/g_q next to the inequality's
    right-hand side with constant C (the sample sup is over |N| > q, both signs)."""
    if m < 1:
        raise DomainError("m must be >= 1")
    if q < 1:
        raise DomainError("q must be >= 1")
    g = gq_poly(q)
    p = max(f.degree, q)
    coef = f.series_div(g, m + 1)[m]
    cap = max(10 * p, 200)
    ns = list(range(q + 1, cap + 1))
    fv = f.eval_inverse_ints(ns) + f.eval_inverse_ints([-n for n in ns])
    gv = g.eval_inverse_ints(ns) + g.eval_inverse_ints([-n for n in ns])
    sample = max(abs(float(a / b)) for a, b in zip(fv, gv))
    sample = max(sample, abs(float(f[0])))  # r(0) is the limit of the samples
    rhs = (math.exp(-p) * (C * p) ** m + (C * p) ** (2 * m) / math.factorial(m)) * sample
    if coef == 0 or sample == 0:
        kappa = 0.0
    else:
        kappa = (abs(float(coef)) * math.factorial(m) / sample) ** (1 / (2 * m)) / p
    return BernsteinReport(q, p, m, coef, sample, rhs, kappa)

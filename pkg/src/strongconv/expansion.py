"""Taylor coefficients of encoded spectral statistics at x = 0 and what they
say about spectra.

For a polynomial h the coefficients nu_k (Gaussian) and mu_k (Haar unitary)
are exact rationals.  For a smooth h given as a Chebyshev series the
functional is applied term by term on the basis T_j(x/K); the error bar uses
the dropped coefficients and a growth envelope for |nu_k(T_j)| measured on
the exactly computed basis values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DomainError
from .genus import Ensemble, gue_power_polynomial, spectral_statistic_poly, word_polynomial
from .ncpoly import FreeModel, Letter, NCPoly, crude_norm_bound, free_norm_estimate
from .poly import ChebSeries, FunctionalValue, Poly, apply_functional, build_test_function
from .weingarten import reconstruct_psi, reconstruct_psi_orthogonal


def _kind(ensemble) -> str:
    key = str(getattr(ensemble, "value", ensemble)).strip().lower().replace("_", "-")
    if key in ("gue", "goe"):
        return key
    if key in ("haar-u", "haaru", "u", "unitary"):
        return "haar-u"
    raise DomainError(f"expansions are available for GUE, GOE and Haar-U, not {ensemble!r}")


@dataclass
class ExpansionResult:
    ensemble: str
    order: int
    coeffs: list
    errors: list | None = None
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "ensemble": self.ensemble,
            "order": self.order,
            "coeffs": [str(c) if isinstance(c, Fraction) else float(c) for c in self.coeffs],
            "errors": None if self.errors is None else [float(e) for e in self.errors],
            "meta": self.meta,
        }


def nu_coeffs(ensemble, P: NCPoly, h: Poly, m: int) -> ExpansionResult:
    """First m Taylor coefficients of Phi_h (GUE or GOE), exact."""
    kind = _kind(ensemble)
    if kind == "haar-u":
        raise DomainError("use mu_coeffs for Haar unitaries")
    phi = spectral_statistic_poly(kind, P, h).poly
    return ExpansionResult(kind, m, [phi[k] for k in range(m)], None, {"phi_degree": phi.degree})


def mu_coeffs(P: NCPoly, h: Poly, m: int) -> ExpansionResult:
    """First m Taylor coefficients of Psi_h = f_h / g_{q q0}, by exact series division."""
    psi = reconstruct_psi(P, h)
    t = psi.taylor(m)
    return ExpansionResult("haar-u", m, [t[k] for k in range(m)], None, dict(psi.info))


def dual_value(kind: str, P: NCPoly, h: Poly, N: int) -> Fraction:
    """GSE value Phi^GOE_h(-1/(2N)) or Sp(N) value Psi^O_h(-1/(2N))."""
    x = Fraction(-1, 2 * N)
    if kind == "gse":
        return spectral_statistic_poly(Ensemble.GOE, P, h).poly(x)
    if kind == "haar-sp":
        return reconstruct_psi_orthogonal(P, h)(x)
    raise DomainError(f"no dual encoding for {kind!r}")


# ---------------------------------------------------------------------------
# functionals on the Chebyshev basis
# ---------------------------------------------------------------------------


def _scalar_affine(P: NCPoly):
    """(a, b, generator, symmetric_pair) if P = a x_g + b (or a (u_g + u_g*) + b)
    with D = 1 and real a, b; otherwise None."""
    if P.D != 1:
        return None
    vals = {}
    for w, A in P.terms.items():
        re, im = A.trace()
        if im:
            return None
        vals[w] = re
    b = vals.pop((), Fraction(0))
    gens = {a.generator for w in vals for a in w}
    if len(gens) != 1 or any(len(w) != 1 for w in vals):
        return None
    g = gens.pop()
    plain = vals.get((Letter(g, False),), Fraction(0))
    star = vals.get((Letter(g, True),), Fraction(0))
    if star == 0:
        return plain, b, g, False
    if plain == star:
        return plain, b, g, True
    return None


def power_statistics(ensemble, P: NCPoly, n_max: int, k_max: int) -> list[list[Fraction]]:
    """table[k][n] = coefficient of x^k in the encoded statistic of P^n, n <= n_max."""
    kind = _kind(ensemble)
    aff = _scalar_affine(P)
    table = [[Fraction(0)] * (n_max + 1) for _ in range(k_max + 1)]
    if aff is not None and (kind != "haar-u") == (not aff[3]):
        a, b, g, _ = aff
        base = []  # coefficient lists of E tr x^i for the single letter
        for i in range(n_max + 1):
            if kind == "haar-u":
                # (u + u*)^i has trace expectation binom(i, i/2) at every N
                base.append([Fraction(math.comb(i, i // 2) if i % 2 == 0 else 0)])
            elif kind == "gue":
                base.append(list(gue_power_polynomial(i).coeffs))
            else:
                base.append(list(word_polynomial(kind, [1] * i).poly.coeffs) if i else [Fraction(1)])
        for n in range(n_max + 1):
            for i in range(n + 1):
                c = math.comb(n, i) * a ** i * b ** (n - i)
                if c == 0:
                    continue
                for k in range(min(k_max + 1, len(base[i]))):
                    table[k][n] += c * base[i][k]
        return table
    for n in range(n_max + 1):
        hn = Poly.monomial(n)
        if kind == "haar-u":
            coeffs = list(reconstruct_psi(P, hn).taylor(k_max + 1).coeffs) if n else [Fraction(1)]
        else:
            coeffs = list(spectral_statistic_poly(kind, P, hn).poly.coeffs)
        for k in range(min(k_max + 1, len(coeffs))):
            table[k][n] = coeffs[k]
    return table


def chebyshev_basis_values(moments: Sequence[Fraction], K, J: int) -> list[Fraction]:
    """L(T_j(x/K)) for j <= J, exactly, from L(x^n) for n <= J."""
    if len(moments) < J + 1:
        raise DomainError("need moments up to the top Chebyshev index")
    K = Fraction(K)
    a, b = K.numerator, K.denominator
    den = 1
    for m in moments[: J + 1]:
        den = den * m.denominator // math.gcd(den, m.denominator)
    # L(T_j(x/K)) = sum_i c_ji m_i b^i a^(J-i) / (a^J den)
    w = np.empty(J + 1, dtype=object)
    for i in range(J + 1):
        m = moments[i]
        w[i] = m.numerator * (den // m.denominator) * b ** i * a ** (J - i)
    scale = a ** J * den
    out = []
    prev = np.zeros(J + 1, dtype=object)  # T_0
    prev[0] = 1
    out.append(Fraction(int(w[0]), scale))
    if J == 0:
        return out
    cur = np.zeros(J + 1, dtype=object)  # T_1
    cur[1] = 1
    out.append(Fraction(int(w[1]), scale))
    for j in range(2, J + 1):
        nxt = np.zeros(J + 1, dtype=object)
        nxt[1: j + 1] = 2 * cur[:j]
        nxt[: j - 1] -= prev[: j - 1]
        prev, cur = cur, nxt
        out.append(Fraction(int(np.dot(cur[: j + 1], w[: j + 1])), scale))
    return out


@dataclass
class BasisTable:
    ensemble: str
    K: float
    values: list  # values[k][j] exact
    envelope: list  # A_k with |nu_k(T_j)| <= A_k j^(2k) / k! on the computed range

    def growth(self, k: int):
        A = self.envelope[k]
        return lambda j: A * max(j, 1) ** (2 * k) / math.factorial(k)


def basis_table(ensemble, P: NCPoly, K: float, J: int, k_max: int) -> BasisTable:
    kind = _kind(ensemble)
    stats = power_statistics(kind, P, J, k_max)
    values = [chebyshev_basis_values(stats[k], K, J) for k in range(k_max + 1)]
    env = []
    for k in range(k_max + 1):
        fk = math.factorial(k)
        env.append(max((abs(float(v)) * fk / max(j, 1) ** (2 * k) for j, v in enumerate(values[k])),
                       default=0.0))
    return BasisTable(kind, float(K), values, env)


def nu_smooth(ensemble, P: NCPoly, chi: ChebSeries, k: int, table: BasisTable | None = None) -> FunctionalValue:
    """nu_k (or mu_k) of a Chebyshev series with an error bound."""
    kind = _kind(ensemble)
    model = FreeModel.HAAR_UNITARY if kind == "haar-u" else FreeModel.SEMICIRCULAR
    crude = crude_norm_bound(P, model)
    if chi.radius < crude:
        raise DomainError(f"series radius {chi.radius} is below the crude norm bound {crude}")
    if table is None or table.K != chi.radius or len(table.values) <= k \
            or len(table.values[k]) < len(chi.coeffs):
        table = basis_table(kind, P, chi.radius, chi.degree, k)
    vals = [float(v) for v in table.values[k]]
    return apply_functional(vals, chi, growth=table.growth(k))


# ---------------------------------------------------------------------------
# support test
# ---------------------------------------------------------------------------


@dataclass
class SupportReport:
    epsilon: float
    k_max: int
    values: list
    tolerances: list
    passed: bool
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "k_max": self.k_max, "values": self.values,
                "tolerances": self.tolerances, "pass": self.passed, "meta": self.meta}


def _dyadic_ceil(x: float, denom: int = 64) -> float:
    return math.ceil(x * denom) / denom


def support_test(ensemble, P: NCPoly, eps: float, k_max: int = 3, m: int = 12,
                 nodes: int = 1024, p_max: int = 64) -> SupportReport:
    """Apply nu_k, k <= k_max, to a smooth step vanishing on
    |x| <= (1 + eps/2) ||X_F|| (upper end of the free norm bracket); the
    support property says every value is zero up to the truncation error."""
    kind = _kind(ensemble)
    if not 0 < eps <= 1:
        raise DomainError("eps must lie in (0, 1]")
    model = FreeModel.HAAR_UNITARY if kind == "haar-u" else FreeModel.SEMICIRCULAR
    lim = free_norm_estimate(P, model, p_max=p_max)
    if lim.width > eps / 4:
        raise DomainError(f"norm bracket width {lim.width:.3g} exceeds eps/4")
    rho = lim.upper
    eps_tf = eps * rho
    crude = crude_norm_bound(P, model)
    K = _dyadic_ceil(max(1.25 * crude, 1.05 * (rho + eps_tf)))
    tf = build_test_function(m, K, rho, eps_tf, nodes=nodes)
    chi = tf.series
    table = basis_table(kind, P, K, chi.degree, k_max)
    values, tols = [], []
    for k in range(k_max + 1):
        fv = nu_smooth(kind, P, chi, k, table)
        values.append(fv.value)
        tols.append(fv.error)
    passed = all(abs(v) <= t for v, t in zip(values, tols))
    meta = {"bracket": [lim.lower, lim.upper], "K": K, "m": m, "nodes": nodes,
            "series_degree": chi.degree, "plateau": [rho * (1 + eps / 2), rho * (1 + eps)],
            "envelope": table.envelope, "noise_floor": chi.noise_floor}
    return SupportReport(eps, k_max, values, tols, passed, meta)


def negative_control(ensemble, P: NCPoly, inner: float, outer: float, K: float,
                     m: int = 12, nodes: int = 1024) -> FunctionalValue:
    """nu_0 of the bump 1 - chi, equal to 1 on |x| <= inner and 0 past outer."""
    kind = _kind(ensemble)
    if not (0 <= 2 * inner - outer and inner < outer):
        raise DomainError("need 0 <= 2 inner - outer and inner < outer")
    K = _dyadic_ceil(K)
    chi = build_test_function(m, K, 2 * inner - outer, 2 * (outer - inner), nodes=nodes).series
    coeffs = -chi.coeffs.copy()
    coeffs[0] += 1.0
    bump = ChebSeries(chi.radius, coeffs, chi.truncation_error, chi.noise_floor, chi.tail)
    return nu_smooth(kind, P, bump, 0)


# ---------------------------------------------------------------------------
# duality and theorem bounds
# ---------------------------------------------------------------------------


@dataclass
class DualityRow:
    N: int
    predicted: float
    mc_mean: float
    standard_error: float
    z: float


def duality_report(kind: str, P: NCPoly, h: Poly, N_list: Sequence[int], replicas: int = 20000,
                   seed: int = 0, threads: int = 1) -> list[DualityRow]:
    """Predicted dual values against Monte Carlo for GSE (kind="gse") or Sp(N)
    (kind="haar-sp")."""
    from .sampler import SampleSpec, sample_trace_stats

    hf = h.float_coeffs
    rows = []
    for N in N_list:
        pred = float(dual_value(kind, P, h, N))
        spec = SampleSpec(kind, N, P, replicas, seed)
        vals = sample_trace_stats(spec, lambda ev: np.polynomial.polynomial.polyval(ev, hf), threads)
        mean = float(np.mean(vals))
        se = float(np.std(vals, ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
        z = (mean - pred) / se if se > 0 else (0.0 if mean == pred else math.inf)
        rows.append(DualityRow(N, pred, mean, se, z))
    return rows


def gue_self_duality(P: NCPoly, h: Poly, N: int) -> Fraction:
    """Phi_h(1/N) - Phi_h(-1/N), which vanishes exactly."""
    phi = spectral_statistic_poly(Ensemble.GUE, P, h).poly
    return phi(Fraction(1, N)) - phi(Fraction(-1, N))


def theorem_bound(theorem: str, N: float, eps: float, q0: int = 1, r: int = 1, c: float = 1.0) -> float:
    """(N/(c eps)) exp(-c N eps^2) for Gaussian ensembles, with an extra
    1/log^2(N eps^2) in the exponent for Haar unitaries.  The constant c
    (which depends on q0 and r) is supplied by the caller.  The log factor is
    floored at 1 so the bound stays monotone for small N eps^2."""
    if not 0 < eps <= 1:
        raise DomainError("eps must lie in (0, 1]")
    if c <= 0 or N <= 0 or q0 < 1 or r < 1:
        raise DomainError("need c > 0, N > 0, q0 >= 1 and r >= 1")
    pre = N / (c * eps)
    if theorem == "gauss":
        return pre * math.exp(-c * N * eps * eps)
    if theorem == "haar":
        lg = max(math.log(N * eps * eps), 1.0)
        return pre * math.exp(-c * N * eps * eps / (lg * lg))
    raise DomainError(f"unknown theorem {theorem!r}; use 'gauss' or 'haar'")


def is_vacuous(bound: float) -> bool:
    return bound >= 1.0

"""Reproducible Monte Carlo for the Gaussian, Haar and Hayes ensembles.

Every random matrix is drawn from its own Philox stream keyed by
``(seed, replica, matrix index)``, so results do not depend on the order in
which replicas run or on the number of worker threads.  Quaternionic
matrices (GSE, Sp) live in the interleaved 2N x 2N complex representation
where each quaternion a + b i + c j + d k is the block
[[a + b i, c + d i], [-c + d i, a - b i]].
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionMismatchError, DomainError, SizeCapError
from .ncpoly import NCPoly, Word, make_word

DENSE_CAP = 4000
ITERATIVE_CAP = 20000
POWER_ITERATIONS = 60
POWER_TOL = 1e-6
Z95 = 1.959963984540054


class SampleEnsemble(str, Enum):
    GUE = "gue"
    GOE = "goe"
    GSE = "gse"
    HAAR_U = "haar-u"
    HAAR_O = "haar-o"
    HAAR_SP = "haar-sp"
    HAYES_GUE = "hayes-gue"

    @classmethod
    def parse(cls, value) -> "SampleEnsemble":
        if isinstance(value, SampleEnsemble):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {"haaru": "haar-u", "haaro": "haar-o", "haarsp": "haar-sp", "u": "haar-u",
                   "o": "haar-o", "sp": "haar-sp", "hayes": "hayes-gue", "hayesgue": "hayes-gue"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise DomainError(f"unknown ensemble {value!r}") from None

    @property
    def quaternionic(self) -> bool:
        return self in (SampleEnsemble.GSE, SampleEnsemble.HAAR_SP)


# ---------------------------------------------------------------------------
# streams and variates
# ---------------------------------------------------------------------------


def stream(seed: int, replica: int, index: int) -> np.random.Generator:
    """Counter-based generator for one matrix of one replica."""
    ss = np.random.SeedSequence(int(seed) & ((1 << 64) - 1), spawn_key=(int(replica), int(index)))
    return np.random.Generator(np.random.Philox(ss))


def normals(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard normal variates by Box-Muller on the stream's uniforms."""
    n = int(np.prod(shape))
    m = (n + 1) // 2
    u1 = 1.0 - rng.random(m)  # (0, 1]
    u2 = rng.random(m)
    rad = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate((rad * np.cos(2 * np.pi * u2), rad * np.sin(2 * np.pi * u2)))[:n]
    return z.reshape(shape)


def complex_normals(rng, shape) -> np.ndarray:
    """E|z|^2 = 1."""
    g = normals(rng, (2,) + tuple(shape))
    return (g[0] + 1j * g[1]) / math.sqrt(2)


def quaternion_to_complex(z1: np.ndarray, z2: np.ndarray) -> np.ndarray:
    """Interleaved 2N x 2N complex form of the quaternion matrix z1 + z2 j."""
    N = z1.shape[0]
    out = np.empty((2 * N, 2 * N), dtype=complex)
    out[0::2, 0::2] = z1
    out[0::2, 1::2] = z2
    out[1::2, 0::2] = -np.conj(z2)
    out[1::2, 1::2] = np.conj(z1)
    return out


def symplectic_form(N: int) -> np.ndarray:
    J = np.zeros((2 * N, 2 * N))
    J[0::2, 1::2] = np.eye(N)
    J[1::2, 0::2] = -np.eye(N)
    return J


# ---------------------------------------------------------------------------
# ensembles
# ---------------------------------------------------------------------------


def sample_gaussian(kind, N: int, rng: np.random.Generator) -> np.ndarray:
    """GUE / GOE (N x N) or GSE (2N x 2N complex form), normalized so the
    limiting spectrum is [-2, 2]."""
    kind = SampleEnsemble.parse(kind)
    if N < 1:
        raise DomainError("N must be >= 1")
    if kind is SampleEnsemble.GUE:
        A = complex_normals(rng, (N, N))
        return (A + A.conj().T) / math.sqrt(2 * N)
    if kind is SampleEnsemble.GOE:
        G = normals(rng, (N, N))
        return (G + G.T) / math.sqrt(2 * N)
    if kind is SampleEnsemble.GSE:
        g = normals(rng, (4, N, N))
        z1 = g[0] + 1j * g[1]
        z2 = g[2] + 1j * g[3]
        M = quaternion_to_complex(z1, z2)
        # off-diagonal components get variance 1/(4N), real diagonal 1/(2N)
        return (M + M.conj().T) / (2 * math.sqrt(2 * N))
    raise DomainError(f"{kind.value} is not a Gaussian ensemble")


def _phase_fix(Z: np.ndarray) -> np.ndarray:
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R)
    if np.any(np.abs(d) < 1e-300):
        raise np.linalg.LinAlgError("rank-deficient Ginibre draw")
    return Q * (d / np.abs(d))[None, :]


def sample_haar(kind, N: int, rng: np.random.Generator) -> np.ndarray:
    """Haar unitary (N), orthogonal (N) or compact symplectic (2N complex form)
    via QR of a Ginibre matrix with the R-diagonal made positive."""
    kind = SampleEnsemble.parse(kind)
    if N < 1:
        raise DomainError("N must be >= 1")
    for _ in range(8):
        try:
            if kind is SampleEnsemble.HAAR_U:
                return _phase_fix(complex_normals(rng, (N, N)))
            if kind is SampleEnsemble.HAAR_O:
                return _phase_fix(normals(rng, (N, N))).real
            if kind is SampleEnsemble.HAAR_SP:
                # Gram-Schmidt commutes with the quaternionic structure when the
                # columns come in (v, J conj v) pairs, as in the interleaved form.
                z = complex_normals(rng, (2, N, N))
                return _phase_fix(quaternion_to_complex(z[0], z[1]))
        except np.linalg.LinAlgError:
            continue
        raise DomainError(f"{kind.value} is not a Haar ensemble")
    raise np.linalg.LinAlgError("repeated QR breakdown")  # pragma: no cover


def hayes_sample(r: int, N: int, rng_for: Callable[[int], np.random.Generator]) -> list[np.ndarray]:
    """[G_1 x I, ..., G_r x I, I x H_1, ..., I x H_r] from 2r independent GUE draws."""
    if r < 1:
        raise DomainError("r must be >= 1")
    if N * N > ITERATIVE_CAP:
        raise SizeCapError(f"Hayes dimension {N * N} exceeds cap {ITERATIVE_CAP}")
    eye = np.eye(N)
    left = [np.kron(sample_gaussian("gue", N, rng_for(i)), eye) for i in range(r)]
    right = [np.kron(eye, sample_gaussian("gue", N, rng_for(r + i))) for i in range(r)]
    return left + right


def draw_matrices(ensemble, N: int, count: int, seed: int, replica: int) -> list[np.ndarray]:
    ens = SampleEnsemble.parse(ensemble)
    if ens is SampleEnsemble.HAYES_GUE:
        if count % 2:
            raise DimensionMismatchError("the Hayes model needs an even alphabet (r left, r right)")
        return hayes_sample(count // 2, N, lambda i: stream(seed, replica, i))
    if ens in (SampleEnsemble.GUE, SampleEnsemble.GOE, SampleEnsemble.GSE):
        return [sample_gaussian(ens, N, stream(seed, replica, i)) for i in range(count)]
    return [sample_haar(ens, N, stream(seed, replica, i)) for i in range(count)]


# ---------------------------------------------------------------------------
# assembly and spectral quantities
# ---------------------------------------------------------------------------


def _word_matrix(w: Word, mats: Sequence[np.ndarray], cache: dict) -> np.ndarray:
    if w in cache:
        return cache[w]
    if len(w) == 1:
        a = w[0]
        M = mats[a.generator - 1]
        out = M.conj().T if a.starred else M
    else:
        out = _word_matrix(w[:-1], mats, cache) @ _word_matrix(w[-1:], mats, cache)
    cache[w] = out
    return out


def assemble(P: NCPoly, matrices: Sequence[np.ndarray]) -> np.ndarray:
    """sum_w A_w (x) w(matrices), of dimension D * n."""
    if len(matrices) != P.r:
        raise DimensionMismatchError(f"P has {P.r} generators but {len(matrices)} matrices were given")
    if not matrices:
        raise DimensionMismatchError("need at least one matrix to fix the dimension")
    n = matrices[0].shape[0]
    if any(M.shape != (n, n) for M in matrices):
        raise DimensionMismatchError("matrices must be square of one common size")
    out = np.zeros((P.D * n, P.D * n), dtype=complex)
    cache: dict = {}
    eye = np.eye(n)
    for w, A in P.terms.items():
        W = eye if not w else _word_matrix(w, matrices, cache)
        out += np.kron(A.to_complex(), W)
    return out


def _check_self_adjoint(M: np.ndarray):
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatchError("matrix must be square")
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    if M.size and float(np.max(np.abs(M - M.conj().T))) > 1e-10 * scale:
        raise DomainError("matrix is not self-adjoint")


def power_norm(M: np.ndarray, iterations: int = POWER_ITERATIONS, tol: float = POWER_TOL,
               seed: int = 0) -> float:
    """Largest |eigenvalue| of a self-adjoint matrix by power iteration on M."""
    v = np.random.default_rng(seed).standard_normal(M.shape[0]).astype(M.dtype)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iterations):
        w = M @ (M @ v)
        nrm = float(np.linalg.norm(w))
        if nrm == 0:
            return 0.0
        new = math.sqrt(nrm)
        v = w / nrm
        if abs(new - est) <= tol * max(new, 1.0):
            return new
        est = new
    return est


def op_norm(M: np.ndarray, return_method: bool = False):
    """Operator norm of a self-adjoint matrix (dense eigensolver up to dimension
    4000, power iteration above, flagged through ``return_method``)."""
    _check_self_adjoint(M)
    dim = M.shape[0]
    if dim > ITERATIVE_CAP:
        raise SizeCapError(f"dimension {dim} exceeds cap {ITERATIVE_CAP}")
    if dim <= DENSE_CAP:
        ev = np.linalg.eigvalsh(M)
        val, method = float(max(abs(ev[0]), abs(ev[-1]))), "dense"
    else:
        val, method = power_norm(M), "power"
    return (val, method) if return_method else val


def trace_stat(h: Callable, M: np.ndarray) -> float:
    """Normalized trace of h(M) = mean of h over the eigenvalues."""
    _check_self_adjoint(M)
    if M.shape[0] > DENSE_CAP:
        raise SizeCapError(f"dimension {M.shape[0]} exceeds dense cap {DENSE_CAP}")
    ev = np.linalg.eigvalsh(M)
    return float(np.mean(h(ev)))


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------


def wilson(hits: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n <= 0:
        return (0.0, 1.0)
    if hits == 0:
        return (0.0, min(1.0, z * z / (n + z * z)))
    p = hits / n
    den = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return (max(0.0, centre - half), min(1.0, centre + half))


@dataclass
class EmpiricalStats:
    n: int
    mean: float
    variance: float
    median: float
    standard_error: float
    quantiles: dict = field(default_factory=dict)
    tail_counts: dict = field(default_factory=dict)  # threshold -> (hits, n, (lo, hi))
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_samples(cls, values, thresholds: Sequence[float] = (), meta=None) -> "EmpiricalStats":
        v = np.asarray(values, dtype=float)
        n = len(v)
        if n == 0:
            raise DomainError("no samples")
        var = float(np.var(v, ddof=1)) if n > 1 else 0.0
        qs = {str(q): float(np.quantile(v, q)) for q in (0.05, 0.25, 0.5, 0.75, 0.95)}
        tails = {}
        for t in thresholds:
            hits = int(np.count_nonzero(v >= t))
            tails[float(t)] = (hits, n, wilson(hits, n))
        return cls(n, float(np.mean(v)), var, float(np.median(v)), math.sqrt(var / n), qs, tails,
                   dict(meta or {}))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tail_counts"] = {str(k): {"hits": h, "n": n, "ci": list(ci)}
                            for k, (h, n, ci) in self.tail_counts.items()}
        return d


@dataclass(frozen=True)
class SampleSpec:
    ensemble: SampleEnsemble
    N: int
    P: NCPoly
    replicas: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "ensemble", SampleEnsemble.parse(self.ensemble))
        if self.replicas < 1:
            raise DomainError("replicas must be >= 1")
        if self.N < 1:
            raise DomainError("N must be >= 1")


def _map_replicas(fn, replicas: int, threads: int):
    if threads <= 1:
        return [fn(i) for i in range(replicas)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(replicas)))


def sample_norms(spec: SampleSpec, threads: int = 1) -> np.ndarray:
    """||P(X^N)|| for every replica, in replica order."""
    def one(i):
        mats = draw_matrices(spec.ensemble, spec.N, spec.P.r, spec.seed, i)
        return op_norm(assemble(spec.P, mats))
    return np.array(_map_replicas(one, spec.replicas, threads))


def sample_trace_stats(spec: SampleSpec, h: Callable, threads: int = 1) -> np.ndarray:
    def one(i):
        mats = draw_matrices(spec.ensemble, spec.N, spec.P.r, spec.seed, i)
        return trace_stat(h, assemble(spec.P, mats))
    return np.array(_map_replicas(one, spec.replicas, threads))


def mc_word_moments(ensemble, words, N: int, r: int, replicas: int, seed: int,
                    threads: int = 1) -> list[tuple[complex, float]]:
    """(mean, standard error) of the normalized trace of each word; the
    standard error combines real and imaginary parts."""
    words = [make_word(w) for w in words]
    if any(a.generator > r for w in words for a in w):
        raise DimensionMismatchError("word uses a generator beyond r")

    def one(i):
        mats = draw_matrices(ensemble, N, r, seed, i)
        dim = mats[0].shape[0]
        cache: dict = {}
        return [np.trace(_word_matrix(w, mats, cache)) / dim if w else 1.0 for w in words]

    vals = np.array(_map_replicas(one, replicas, threads), dtype=complex)  # (R, W)
    mean = vals.mean(axis=0)
    if replicas > 1:
        se = np.sqrt((vals.real.var(axis=0, ddof=1) + vals.imag.var(axis=0, ddof=1)) / replicas)
    else:
        se = np.zeros(len(words))
    return [(complex(m), float(s)) for m, s in zip(mean, se)]


def tail_probability(spec: SampleSpec, eps: float, norm_target: float, threads: int = 1,
                     norms: np.ndarray | None = None) -> EmpiricalStats:
    """Frequency of ||X^N|| >= (1 + eps) * norm_target, with a Wilson interval."""
    if norms is None:
        norms = sample_norms(spec, threads)
    thr = (1 + eps) * norm_target
    return EmpiricalStats.from_samples(norms, [thr], {"N": spec.N, "eps": eps, "target": norm_target,
                                                      "seed": spec.seed, "ensemble": spec.ensemble.value})


@dataclass
class ConcentrationReport:
    N: int
    median: float
    eps: list
    frequencies: list
    upper_deviation: list
    lower_deviation: list
    exponent: float  # slope of log frequency against eps^2
    exponent_per_N: float

    def to_dict(self) -> dict:
        return asdict(self)


def concentration_probe(spec: SampleSpec, eps_grid: Sequence[float], threads: int = 1,
                        norms: np.ndarray | None = None) -> ConcentrationReport:
    """Deviation frequencies P[| ||X|| - med | > eps] and a fitted Gaussian-tail exponent."""
    if spec.replicas < 1000:
        raise DomainError("concentration probes need at least 1000 replicas")
    if norms is None:
        norms = sample_norms(spec, threads)
    med = float(np.median(norms))
    dev = norms - med
    eps = sorted(float(e) for e in eps_grid)
    freq = [float(np.mean(np.abs(dev) > e)) for e in eps]
    up = [float(np.mean(dev > e)) for e in eps]
    lo = [float(np.mean(dev < -e)) for e in eps]
    pts = [(e * e, math.log(f)) for e, f in zip(eps, freq) if f > 0]
    if len(pts) >= 2:
        x, y = np.array(pts).T
        slope = float(np.polyfit(x, y, 1)[0])
    else:
        slope = float("nan")
    return ConcentrationReport(spec.N, med, eps, freq, up, lo, slope, slope / spec.N)

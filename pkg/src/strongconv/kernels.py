"""Enumeration kernels: Wick pairings / gluings and products of per-generator
slot matchings, each reduced to a histogram of index-loop counts.

Every kernel works on *slots*: position k of a word owns slot 2k (row index)
and slot 2k+1 (column index).  The trace identifies the column of position k
with the row of position k+1 (cyclically); a pairing identifies further
slots.  Free index sums are the orbits of the group generated by the two
involutions, so each configuration contributes N**orbits.

Two implementations exist for each kernel: a numba one and a vectorized numpy
one.  ``_backend.USE_NUMBA`` picks which the public functions call; both are
importable for testing and benchmarking.  Results are integer histograms, so
the two paths must agree exactly.
"""
from __future__ import annotations

import math

import numpy as np

from . import _backend
from .errors import SizeCapError

try:
    import numba
    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

MAX_GAUSS_LENGTH = 16
MAX_PRODUCT_COMBOS = 20_000_000
_CHUNK = 1 << 14


def trace_involution(length: int) -> np.ndarray:
    """Slot involution gluing column of position k to row of position k+1."""
    tau = np.empty(2 * length, dtype=np.int64)
    for k in range(length):
        a, b = 2 * k + 1, 2 * ((k + 1) % length)
        tau[a] = b
        tau[b] = a
    return tau


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------

def _count_orbits_py(sigma, tau, visited):
    S = sigma.shape[0]
    for s in range(S):
        visited[s] = 0
    orbits = 0
    for s in range(S):
        if visited[s]:
            continue
        orbits += 1
        x = s
        while True:
            visited[x] = 1
            y = tau[x]
            visited[y] = 1
            x = sigma[y]
            if x == s:
                break
    return orbits


def _gauss_hist_py(labels, twisted):
    L = labels.shape[0]
    n = L // 2
    S = 2 * L
    hist = np.zeros(n + 2, dtype=np.int64)
    tau = np.empty(S, dtype=np.int64)
    for k in range(L):
        a = 2 * k + 1
        b = 2 * ((k + 1) % L)
        tau[a] = b
        tau[b] = a
    partner = -np.ones(L, dtype=np.int64)
    si = np.zeros(n + 1, dtype=np.int64)
    cj = np.zeros(n + 1, dtype=np.int64)
    sigma = np.empty(S, dtype=np.int64)
    visited = np.zeros(S, dtype=np.int64)
    d = 0
    si[0] = 0
    cj[0] = 0
    while True:
        if d == n:
            nt = 1 << n if twisted else 1
            for mask in range(nt):
                for t in range(n):
                    k = si[t]
                    l = cj[t]
                    if (mask >> t) & 1:
                        sigma[2 * k] = 2 * l
                        sigma[2 * l] = 2 * k
                        sigma[2 * k + 1] = 2 * l + 1
                        sigma[2 * l + 1] = 2 * k + 1
                    else:
                        sigma[2 * k] = 2 * l + 1
                        sigma[2 * l + 1] = 2 * k
                        sigma[2 * k + 1] = 2 * l
                        sigma[2 * l] = 2 * k + 1
                loops = _count_orbits_nb(sigma, tau, visited)
                hist[loops] += 1
            if d == 0:
                break
            d -= 1
            partner[si[d]] = -1
            partner[cj[d]] = -1
        i = si[d]
        j = cj[d] + 1 if cj[d] > i else i + 1
        while j < L and (partner[j] != -1 or labels[j] != labels[i]):
            j += 1
        if j < L:
            cj[d] = j
            partner[i] = j
            partner[j] = i
            nxt = i + 1
            while nxt < L and partner[nxt] != -1:
                nxt += 1
            d += 1
            if d < n:
                si[d] = nxt
                cj[d] = nxt
        else:
            if d == 0:
                break
            d -= 1
            partner[si[d]] = -1
            partner[cj[d]] = -1
    return hist


def _product_hist_py(tau, opt_pairs, opt_np, gen_start, gen_nopt, max_loops):
    S = tau.shape[0]
    G = gen_nopt.shape[0]
    total = 1
    for g in range(G):
        total *= gen_nopt[g]
    hist = np.zeros((total, max_loops + 1), dtype=np.int64)
    sigma = np.empty(S, dtype=np.int64)
    visited = np.zeros(S, dtype=np.int64)
    for c in range(total):
        rem = c
        for g in range(G - 1, -1, -1):
            choice = rem % gen_nopt[g]
            rem //= gen_nopt[g]
            o = gen_start[g] + choice
            for t in range(opt_np[o]):
                a = opt_pairs[o, t, 0]
                b = opt_pairs[o, t, 1]
                sigma[a] = b
                sigma[b] = a
        loops = _count_orbits_nb(sigma, tau, visited)
        hist[c, loops] += 1
    return hist


if _HAVE_NUMBA:
    _count_orbits_nb = numba.njit(cache=True)(_count_orbits_py)
    _gauss_hist_nb = numba.njit(cache=True)(_gauss_hist_py)
    _product_hist_nb = numba.njit(cache=True)(_product_hist_py)
else:  # pragma: no cover
    _count_orbits_nb = _count_orbits_py


# ---------------------------------------------------------------------------
# numpy kernels
# ---------------------------------------------------------------------------

def count_orbits_batch(sigma: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """Orbits of <sigma_b, tau> for each row b, via cycle counting of sigma o tau.

    Both maps are fixed-point-free involutions, so every orbit splits into
    exactly two cycles of the composite.
    """
    B, S = sigma.shape
    f = np.take_along_axis(sigma, np.broadcast_to(tau, (B, S)), axis=1)
    lab = np.broadcast_to(np.arange(S), (B, S)).copy()
    p = f
    for _ in range(max(1, math.ceil(math.log2(S))) + 1):
        lab = np.minimum(lab, np.take_along_axis(lab, p, axis=1))
        p = np.take_along_axis(p, p, axis=1)
    cycles = np.count_nonzero(lab == np.arange(S), axis=1)
    return cycles // 2


def label_pairings(labels) -> np.ndarray:
    """All perfect matchings of positions pairing equal labels, shape (P, n, 2)."""
    labels = list(labels)
    L = len(labels)
    out: list[list[tuple[int, int]]] = []

    def rec(free: list[int], acc: list[tuple[int, int]]):
        if not free:
            out.append(list(acc))
            return
        i = free[0]
        for idx in range(1, len(free)):
            j = free[idx]
            if labels[j] == labels[i]:
                acc.append((i, j))
                rec(free[1:idx] + free[idx + 1:], acc)
                acc.pop()

    if L % 2 == 0:
        rec(list(range(L)), [])
    n = L // 2
    if not out:
        return np.zeros((0, n, 2), dtype=np.int64)
    return np.array(out, dtype=np.int64).reshape(len(out), n, 2)


def _gauss_hist_np(labels, twisted):
    labels = np.asarray(labels)
    L = len(labels)
    n = L // 2
    hist = np.zeros(n + 2, dtype=np.int64)
    pairs = label_pairings(labels)
    if pairs.shape[0] == 0:
        return hist
    tau = trace_involution(L)
    S = 2 * L
    k = pairs[:, :, 0]
    l = pairs[:, :, 1]
    masks = np.arange(1 << n) if twisted else np.zeros(1, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(n)[None, :]) & 1).astype(bool)  # (M, n)
    for start in range(0, pairs.shape[0], max(1, _CHUNK // len(masks))):
        kk = k[start:start + max(1, _CHUNK // len(masks))]
        ll = l[start:start + kk.shape[0]]
        P = kk.shape[0]
        M = len(masks)
        tw = np.broadcast_to(bits[None, :, :], (P, M, n))
        K = np.broadcast_to(kk[:, None, :], (P, M, n))
        Lp = np.broadcast_to(ll[:, None, :], (P, M, n))
        # row slot of k goes to row (twisted) or column (untwisted) slot of l
        a_src = np.concatenate([2 * K, 2 * K + 1], axis=2)
        a_dst = np.concatenate([np.where(tw, 2 * Lp, 2 * Lp + 1),
                                np.where(tw, 2 * Lp + 1, 2 * Lp)], axis=2)
        sigma = np.empty((P, M, S), dtype=np.int64)
        src = a_src.reshape(P * M, 2 * n)
        dst = a_dst.reshape(P * M, 2 * n)
        sig = sigma.reshape(P * M, S)
        np.put_along_axis(sig, src, dst, axis=1)
        np.put_along_axis(sig, dst, src, axis=1)
        orbits = count_orbits_batch(sig, tau)
        hist += np.bincount(orbits, minlength=n + 2)[: n + 2]
    return hist


def _product_hist_np(tau, opt_pairs, opt_np, gen_start, gen_nopt, max_loops):
    S = tau.shape[0]
    G = len(gen_nopt)
    total = int(np.prod(gen_nopt)) if G else 1
    hist = np.zeros((total, max_loops + 1), dtype=np.int64)
    radix = np.ones(G, dtype=np.int64)
    for g in range(G - 2, -1, -1):
        radix[g] = radix[g + 1] * gen_nopt[g + 1]
    for start in range(0, total, _CHUNK):
        c = np.arange(start, min(total, start + _CHUNK))
        sig = np.empty((len(c), S), dtype=np.int64)
        for g in range(G):
            choice = (c // radix[g]) % gen_nopt[g]
            o = gen_start[g] + choice
            npairs = int(opt_np[gen_start[g]])
            pr = opt_pairs[o, :npairs, :]  # (B, npairs, 2)
            np.put_along_axis(sig, pr[:, :, 0], pr[:, :, 1], axis=1)
            np.put_along_axis(sig, pr[:, :, 1], pr[:, :, 0], axis=1)
        orbits = count_orbits_batch(sig, tau)
        hist[c, orbits] += 1
    return hist


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def gauss_loop_histogram(labels, twisted: bool = False, backend: str | None = None) -> np.ndarray:
    """hist[l] = number of label-matching gluings with l index loops.

    ``twisted`` additionally enumerates the 2**n orientation choices per pair
    (real symmetric entries); otherwise only orientation-reversing gluings.
    """
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    L = labels.shape[0]
    if L > MAX_GAUSS_LENGTH:
        raise SizeCapError(f"word length {L} exceeds enumeration cap {MAX_GAUSS_LENGTH}")
    if L == 0:
        h = np.zeros(2, dtype=np.int64)
        h[1] = 1
        return h
    if L % 2:
        return np.zeros(L // 2 + 2, dtype=np.int64)
    backend = backend or _backend.backend_name()
    if backend == "numba":
        return _gauss_hist_nb(labels, bool(twisted))
    return _gauss_hist_np(labels, bool(twisted))


def pack_options(tau, gen_options):
    """Flatten per-generator option lists (each option a list of slot pairs)."""
    gen_nopt = np.array([len(opts) for opts in gen_options], dtype=np.int64)
    total_opts = int(gen_nopt.sum())
    maxp = max((len(o) for opts in gen_options for o in opts), default=0)
    opt_pairs = np.zeros((max(total_opts, 1), max(maxp, 1), 2), dtype=np.int64)
    opt_np = np.zeros(max(total_opts, 1), dtype=np.int64)
    gen_start = np.zeros(len(gen_options), dtype=np.int64)
    o = 0
    for g, opts in enumerate(gen_options):
        gen_start[g] = o
        for opt in opts:
            for t, (a, b) in enumerate(opt):
                opt_pairs[o, t] = (a, b)
            opt_np[o] = len(opt)
            o += 1
    return np.ascontiguousarray(tau, dtype=np.int64), opt_pairs, opt_np, gen_start, gen_nopt


def product_loop_histogram(tau, gen_options, backend: str | None = None) -> np.ndarray:
    """hist[c, l]: for each combination c of one option per generator (mixed
    radix, first generator most significant), 1 at its loop count l.

    Each option is a list of slot pairs; the chosen options together must
    form a perfect matching of all slots.
    """
    packed = pack_options(tau, gen_options)
    total = int(np.prod(packed[4])) if len(gen_options) else 1
    if total > MAX_PRODUCT_COMBOS:
        raise SizeCapError(f"{total} configurations exceed cap {MAX_PRODUCT_COMBOS}")
    max_loops = len(tau) // 2
    backend = backend or _backend.backend_name()
    if backend == "numba":
        return _product_hist_nb(*packed, max_loops)
    return _product_hist_np(*packed, max_loops)

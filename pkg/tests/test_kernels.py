import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from strongconv import _backend
from strongconv.errors import SizeCapError
from strongconv.genus import gue_power_polynomial
from strongconv.kernels import (
    count_orbits_batch,
    gauss_loop_histogram,
    label_pairings,
    product_loop_histogram,
    trace_involution,
)
from strongconv.ncpoly import make_word
from strongconv.poly import Poly
from strongconv.weingarten import _gen_positions, _perms

label_lists = st.lists(st.integers(1, 3), min_size=0, max_size=10).filter(lambda l: len(l) % 2 == 0)


def _unitary_options(word):
    w = make_word(word)
    opts = []
    for plain, starred in _gen_positions(w):
        L = len(plain)
        opts.append([[(2 * plain[i], 2 * starred[a[i]] + 1) for i in range(L)]
                     + [(2 * plain[i] + 1, 2 * starred[b[i]]) for i in range(L)]
                     for a in _perms(L) for b in _perms(L)])
    return trace_involution(len(w)), opts


def test_trace_involution_is_involution():
    tau = trace_involution(5)
    assert np.array_equal(tau[tau], np.arange(10))
    assert tau[1] == 2 and tau[9] == 0


def test_label_pairings_count():
    assert len(label_pairings([1] * 8)) == 105
    assert len(label_pairings([1, 2, 1, 2])) == 1
    assert len(label_pairings([1, 2, 2])) == 0


@given(label_lists, st.booleans())
def test_numba_and_numpy_histograms_agree(labels, twisted):
    a = gauss_loop_histogram(labels, twisted, backend="numba")
    b = gauss_loop_histogram(labels, twisted, backend="numpy")
    assert np.array_equal(a, b)
    # total mass = pairings (times 2^n orientations when twisted)
    n = len(labels) // 2
    assert a.sum() == len(label_pairings(labels)) * (2 ** n if twisted else 1)


@pytest.mark.parametrize("word", ["1,1*", "1,2,1*,2*", "1,1*,1,1*,1,1*", "1,1,1*,2,1*,2*"])
def test_product_histograms_agree(word):
    tau, opts = _unitary_options(word)
    a = product_loop_histogram(tau, opts, backend="numba")
    b = product_loop_histogram(tau, opts, backend="numpy")
    assert np.array_equal(a, b)


def test_count_orbits_batch_single_cycle():
    tau = trace_involution(2)
    sigma = np.array([[1, 0, 3, 2], [3, 2, 1, 0]])
    # sigma pairs each position's row with its own column -> two loops; crossing -> one loop
    out = count_orbits_batch(sigma, tau)
    assert list(out) == [2, 1] or list(out) == [1, 2]


@pytest.mark.parametrize("n", range(0, 17, 2))
def test_harer_zagier_matches_enumeration(n):
    hist = gauss_loop_histogram([1] * n)
    k = n // 2
    enum = [int(hist[k + 1 - e]) if 0 <= k + 1 - e < len(hist) else 0 for e in range(k + 2)]
    assert gue_power_polynomial(n) == Poly(enum)


def test_size_cap():
    with pytest.raises(SizeCapError):
        gauss_loop_histogram([1] * 18)


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, STRONGCONV_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "from strongconv import backend_name; print(backend_name())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    assert _backend.backend_name() in ("numba", "numpy")

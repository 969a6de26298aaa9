import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metldpc import _kernels
from metldpc.spectrum import check_constellation_poly
from metldpc.polynomial import DegreeCap, SparsePoly, poly_mul, poly_pow

pytestmark = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")


def _flatten(factors):
    exps, coefs, ptr, counts = [], [], [0], []
    for terms, m in factors:
        for e, c in terms:
            exps.append(e)
            coefs.append(c)
        ptr.append(len(exps))
        counts.append(m)
    return (
        np.array(exps, np.int64),
        np.array(coefs, np.int64),
        np.array(ptr, np.int64),
        np.array(counts, np.int64),
    )


@given(
    st.lists(st.tuples(st.integers(1, 4), st.integers(0, 3), st.integers(1, 5)), min_size=1, max_size=3),
    st.integers(2, 9),
    st.integers(2, 9),
)
@settings(max_examples=40, deadline=None)
def test_modular_power_product_backends_agree(spec, c0, c1):
    factors = []
    for d0, d1, m in spec:
        f = check_constellation_poly((d0, d1))
        factors.append(([(e, int(c)) for e, c in f], m))
    shape = (c0, c1)
    args = _flatten(factors)
    p = _kernels._PRIMES[0]
    saved = _kernels.get_backend()
    try:
        _kernels.set_backend("numba")
        nb = _kernels.power_product_mod(shape, *args, p)
        _kernels.set_backend("numpy")
        nu = _kernels.power_product_mod(shape, *args, p)
    finally:
        _kernels.set_backend(saved)
    assert np.array_equal(nb, nu)


@given(st.lists(st.tuples(st.integers(1, 3), st.integers(0, 2), st.integers(1, 6)), min_size=1, max_size=3))
@settings(max_examples=30, deadline=None)
def test_exact_power_product_matches_sparse_arithmetic(spec):
    shape = (7, 5)
    cap = DegreeCap((6, 4))
    poly = SparsePoly.constant(2, 1)
    factors = []
    bits = 1
    for d0, d1, m in spec:
        f = check_constellation_poly((d0, d1))
        factors.append(([(e, int(c)) for e, c in f], m))
        poly = poly_mul(poly, poly_pow(f, m, cap), cap)
        bits += m * (d0 + d1 - 1)
    arr = _kernels.exact_power_product(shape, factors, bits)
    for idx in np.ndindex(*shape):
        assert int(arr[idx]) == int(dict(poly.items()).get(idx, 0))


def test_crt_reconstructs_large_integers():
    primes = _kernels._PRIMES[:4]
    values = [0, 1, 2**100 + 12345, 3**60]
    res = [np.array([v % p for v in values], np.int64) for p in primes]
    out = _kernels.crt_reconstruct(res, primes)
    assert [int(x) for x in out] == values


def test_backend_switching():
    saved = _kernels.get_backend()
    try:
        _kernels.set_backend("numpy")
        assert _kernels.get_backend() == "numpy"
        with pytest.raises(ValueError):
            _kernels.set_backend("cuda")
    finally:
        _kernels.set_backend(saved)


def test_env_flag_selects_numpy(tmp_path):
    import subprocess
    import sys

    code = "from metldpc import _kernels; print(_kernels.get_backend())"
    env = {"METLDPC_DISABLE_NUMBA": "1", "PATH": "/usr/bin:/bin"}
    import os

    env.update({k: v for k, v in os.environ.items() if k not in env})
    res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert res.stdout.strip() == "numpy"

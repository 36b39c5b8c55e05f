import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anelastic import kernels
from anelastic.density import EVEN, ODD
from anelastic.spectral import SpectralField, enforce_reality, multiply_fields


def random_pair(m, seed):
    rng = np.random.default_rng(seed)
    shape = (2 * m + 1, m + 1)
    v = enforce_reality(rng.normal(size=shape) + 1j * rng.normal(size=shape))
    w = enforce_reality(rng.normal(size=shape) + 1j * rng.normal(size=shape))
    w[:, 0] = 0
    return v, w


def oracle(v, w):
    """``u . grad`` of each component through generic field products."""
    m = v.shape[1] - 1
    V, W = SpectralField(EVEN, v), SpectralField(ODD, w)
    gv = multiply_fields(V, V.dx()) + multiply_fields(W, V.dz())
    gw = multiply_fields(V, W.dx()) + multiply_fields(W, W.dz())
    rows = slice(m, 3 * m + 1)  # |k1| <= m out of the band-2m result
    return gv.coeffs[rows], gw.coeffs[rows]


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**31))
def test_numpy_backend_matches_oracle(m, seed):
    v, w = random_pair(m, seed)
    gv, gw = kernels.advect(v, w, backend="numpy")
    ev, ew = oracle(v, w)
    np.testing.assert_allclose(gv, ev, atol=1e-11)
    np.testing.assert_allclose(gw, ew, atol=1e-11)


@pytest.mark.skipif("cython" not in kernels.BACKENDS, reason="compiled extension not built")
@settings(max_examples=25, deadline=None)
@given(st.integers(1, 14), st.integers(0, 2**31))
def test_backends_agree(m, seed):
    v, w = random_pair(m, seed)
    a = kernels.advect(v, w, backend="cython")
    b = kernels.advect(v, w, backend="numpy")
    for x, y in zip(a, b):
        np.testing.assert_allclose(x, y, atol=1e-11 * max(1.0, np.abs(y).max()))


def test_output_shape_and_reality():
    v, w = random_pair(4, 0)
    gv, gw = kernels.advect(v, w)
    assert gv.shape == gw.shape == (9, 9)
    np.testing.assert_allclose(gv, np.conj(gv[::-1]), atol=1e-13)
    assert np.all(gw[:, 0] == 0)


def test_pure_python_switch():
    env = dict(os.environ, ANELASTIC_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from anelastic import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_unknown_backend():
    v, w = random_pair(2, 1)
    with pytest.raises(ValueError):
        kernels.advect(v, w, backend="fortran")

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frostlab import kernels
from frostlab import _pykernels as py

try:
    from frostlab import _ckernels as cy
except ImportError:  # pragma: no cover
    cy = None

needs_compiled = pytest.mark.skipif(cy is None, reason="compiled extension not built")


def _cloud(seed, n=300, dim=2):
    rng = np.random.default_rng(seed)
    return rng.random((n, dim)), rng.random(n) / n


@needs_compiled
@pytest.mark.parametrize("eps", [0.0, 1e-3, 0.05])
@pytest.mark.parametrize("dim", [1, 2, 3])
def test_riesz_rows_backends_agree(eps, dim):
    x, w = _cloud(1, dim=dim)
    a = py.riesz_rows(x, w, 0.7, eps)
    b = cy.riesz_rows(x, w, 0.7, eps)
    np.testing.assert_allclose(a, b, rtol=1e-12)


@needs_compiled
def test_riesz_rows_threads_bitwise():
    x, w = _cloud(2, n=700)
    a = cy.riesz_rows(x, w, 1.1, 0.01, 1)
    b = cy.riesz_rows(x, w, 1.1, 0.01, 4)
    assert np.array_equal(a, b)


@needs_compiled
def test_riesz_potential_backends_agree():
    x, w = _cloud(3)
    probes = np.random.default_rng(4).random((50, 2)) * 1.5 - 0.25
    np.testing.assert_allclose(py.riesz_potential(x, w, probes, 0.5, 0.0),
                               cy.riesz_potential(x, w, probes, 0.5, 0.0), rtol=1e-12)


@needs_compiled
@pytest.mark.parametrize("dim", [1, 2, 3])
def test_linear_bin_backends_agree(dim):
    u, w = _cloud(5, n=1000, dim=dim)
    shape = (23,) * dim
    a = py.linear_bin(u, w, np.full(dim, -0.1), 0.06, shape)
    b = cy.linear_bin(u, w, np.full(dim, -0.1), 0.06, shape)
    np.testing.assert_allclose(a, b, atol=1e-15)


@needs_compiled
@pytest.mark.parametrize("args", [(3, 1, 1.5, 0.8), (5, 2, 4.2, 1.3), (2, 1, 1.9, 0.6)])
def test_p_grid_max_backends_agree(args):
    assert py.p_grid_max(*args, 120) == cy.p_grid_max(*args, 120)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(1, 60), st.floats(0.05, 0.5))
def test_linear_bin_preserves_mass(dim, n, h):
    rng = np.random.default_rng(n)
    u = rng.random((n, dim))
    w = rng.random(n)
    shape = (int(np.ceil(1.2 / h)) + 2,) * dim
    grid = kernels.linear_bin(u, w, np.full(dim, -0.1), h, shape)
    assert grid.sum() == pytest.approx(w.sum(), rel=1e-12)
    assert grid.min() >= 0.0


@settings(max_examples=40, deadline=None)
# eps is 0 (diagonal excluded) or large enough that eps^-s stays finite
@given(st.integers(2, 40), st.floats(0.1, 2.5), st.one_of(st.just(0.0), st.floats(1e-6, 0.2)))
def test_riesz_rows_symmetric_energy(n, s, eps):
    rng = np.random.default_rng(n)
    x = rng.random((n, 2))
    w = rng.random(n)
    rows = kernels.riesz_rows(x, w, s, eps)
    # sum_i w_i sum_j w_j k(x_i - x_j) is a symmetric bilinear form
    diff = x[:, None] - x[None]
    r = np.sqrt((diff ** 2).sum(-1))
    k = np.maximum(r, eps) ** -s if eps > 0 else np.where(r > 0, r, np.inf) ** -s
    assert float(w @ rows) == pytest.approx(float(w @ k @ w), rel=1e-10)


def _backend_in_subprocess(env_value):
    env = dict(os.environ)
    env.pop("FROSTLAB_PURE_PYTHON", None)
    if env_value is not None:
        env["FROSTLAB_PURE_PYTHON"] = env_value
    out = subprocess.run([sys.executable, "-c", "import frostlab.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    return out.stdout.strip()


def test_pure_python_env_selects_fallback():
    assert _backend_in_subprocess("1") == "python"


@needs_compiled
def test_default_selects_compiled():
    assert _backend_in_subprocess(None) == "compiled"
    assert _backend_in_subprocess("0") == "compiled"


def test_backend_lookup():
    assert kernels.backend("python") is py
    with pytest.raises(ValueError):
        kernels.backend("fortran")

import os
import subprocess
import sys

import numpy as np
import pytest

from paulithresh import _kernels_py, kernels
from paulithresh.concat import exact_n1_in_n2_entropy, rep_level_entropy
from paulithresh.channel import NoiseFamily

try:
    from paulithresh import _ckernels
except ImportError:  # pragma: no cover - extension not built
    _ckernels = None

needs_cython = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")


def _random_features(rng, nu, nf):
    def block(k):
        a = rng.normal(-3, 2, k)
        ab = rng.normal(-3, 2, k)
        r = -rng.exponential(1.0, k)
        rb = -rng.exponential(1.0, k)
        lg = -rng.exponential(2.0, k)
        a[rng.random(k) < 0.1] = -np.inf
        r[rng.random(k) < 0.1] = -np.inf
        return a, ab, r, rb, lg

    return (*block(nu), *block(nf))


@needs_cython
@pytest.mark.parametrize("seed", range(8))
def test_cython_matches_numpy(seed):
    rng = np.random.default_rng(seed)
    feats = _random_features(rng, int(rng.integers(1, 300)), int(rng.integers(1, 300)))
    a = _kernels_py.grid_entropy(*feats, 1.5)
    b = _ckernels.grid_entropy(*feats, 1.5)
    assert b == pytest.approx(a, rel=1e-12, abs=1e-300)


def test_empty_grid():
    e = np.array([])
    one = np.zeros(1)
    assert _kernels_py.grid_entropy(e, e, e, e, e, one, one, one, one, one, 0.0) == 0.0


@needs_cython
def test_backends_agree_on_level():
    c = NoiseFamily.depolarizing()(0.0636)
    a = exact_n1_in_n2_entropy(5, 30, c, backend="numpy")
    b = exact_n1_in_n2_entropy(5, 30, c, backend="cython")
    assert a == pytest.approx(b, abs=1e-13)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.backend("fortran")


def test_numpy_backend_selectable():
    assert kernels.backend("numpy") is _kernels_py
    w = np.array([0.6, 0.4])
    ch = np.array([[0.9, 0.05, 0.02, 0.03], [0.7, 0.1, 0.1, 0.1]])
    assert rep_level_entropy(w, ch, 6, "phase", backend="numpy") > 0


def test_pure_environment_flag():
    env = dict(os.environ, PAULITHRESH_PURE="1")
    out = subprocess.run([sys.executable, "-c", "from paulithresh import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True).stdout.strip()
    assert out == "numpy"


@needs_cython
def test_default_is_compiled():
    if os.environ.get("PAULITHRESH_PURE"):
        pytest.skip("fallback forced by environment")
    assert kernels.BACKEND == "cython"

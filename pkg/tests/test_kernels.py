import os
import subprocess
import sys

import numpy as np
import pytest

from folnerlab import _fallback, kernels

_kernels = pytest.importorskip("folnerlab._kernels", reason="compiled extension not built")


def direct_lognorm(mats, word):
    p = np.eye(mats.shape[1])
    for w in word:
        p = p @ mats[w]
    return np.log(np.abs(p).sum(axis=1).max())


@pytest.mark.parametrize("r", [2, 3])
def test_compiled_matches_fallback(r):
    rng = np.random.default_rng(r)
    mats = rng.uniform(0.1, 2.0, size=(3, r, r))
    words = rng.integers(0, 3, size=(7, 300))
    for name in ("prefix_lognorms", "product_lognorms"):
        a = getattr(_fallback, name)(mats, words)
        b = getattr(_kernels, name)(mats, words)
        assert a.shape == b.shape and np.max(np.abs(a - b)) <= 1e-9
    for m in (1, 2, 5, 17, 300):
        a, b = _fallback.window_lognorms(mats, words, m), _kernels.window_lognorms(mats, words, m)
        assert a.shape == b.shape and np.max(np.abs(a - b)) <= 1e-9


def test_against_direct_products():
    mats = np.array([[[2.0, 1.0], [1.0, 1.0]], [[1.0, 1.0], [1.0, 2.0]]])
    rng = np.random.default_rng(0)
    words = rng.integers(0, 2, size=(3, 30))
    for mod in (_fallback, _kernels):
        pre = mod.prefix_lognorms(mats, words)
        win = mod.window_lognorms(mats, words, 6)
        for s in range(3):
            for j in (0, 5, 29):
                assert pre[s, j] == pytest.approx(direct_lognorm(mats, words[s, :j + 1]), rel=1e-12)
            for j in (0, 10, 24):
                assert win[s, j] == pytest.approx(direct_lognorm(mats, words[s, j:j + 6]), rel=1e-12)
        assert np.allclose(mod.product_lognorms(mats, words), pre[:, -1], rtol=1e-12)


def test_long_products_do_not_overflow():
    mats = np.array([[[2.0, 1.0], [1.0, 1.0]]])
    words = np.zeros((2, 5000), dtype=np.intp)
    lam = np.log((3 + np.sqrt(5)) / 2)
    for mod in (_fallback, _kernels):
        out = mod.product_lognorms(mats, words)
        assert np.all(np.isfinite(out))
        assert out[0] / 5000 == pytest.approx(lam, abs=1e-3)


def test_input_validation():
    with pytest.raises(ValueError):
        _fallback.prefix_lognorms(np.ones((2, 2, 3)), np.zeros((1, 2), dtype=int))
    with pytest.raises(ValueError):
        _fallback.prefix_lognorms(np.ones((2, 2, 2)), np.full((1, 2), 5))


def test_backend_selection_env():
    assert kernels.BACKEND == ("numpy" if os.environ.get("FOLNERLAB_PURE") == "1" else "cython")
    code = "import folnerlab; print(folnerlab.BACKEND)"
    env = dict(os.environ, FOLNERLAB_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"

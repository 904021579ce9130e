import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aerolay import _kernels_py, kernels
from aerolay.config import AntennaConfig

compiled = pytest.importorskip("aerolay._kernels", reason="extension not built")


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 400), st.integers(1, 20), st.booleans(), st.integers(0, 2**32 - 1))
def test_backends_agree(n, n_drops, with_gain, seed):
    rng = np.random.default_rng(seed)
    owner = rng.integers(0, n_drops, n)
    r = rng.uniform(0.0, 2e4, n)
    states = rng.integers(0, 2, n).astype(np.int8)
    amp = rng.exponential(1e-3, n)
    args = (owner, r, -23.5, states, amp, (2520.0, 90.0), (2.2, 3.9), AntennaConfig() if with_gain else None, 25.0, 1.5, n_drops)
    a = kernels.received_power_sum(*args, impl=_kernels_py)
    b = kernels.received_power_sum(*args, impl=compiled)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=0)


def test_empty_population():
    out = kernels.received_power_sum(np.zeros(0, np.int64), np.zeros(0), 0.0, np.zeros(0, np.int8), np.zeros(0), (1, 1), (2, 3), None, 25, 100, 3)
    assert np.array_equal(out, np.zeros(3))


def test_pure_python_switch():
    env = dict(os.environ, AEROLAY_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import aerolay.kernels as k; print(k.BACKEND)"], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "numpy"
    assert kernels.BACKEND == "cython"

from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest

from robustimp import kernels
from robustimp.oracle import SamplerConfig, sample_belief_batch, sample_utility_batch

needs_ext = pytest.mark.skipif(not kernels.HAVE_EXTENSION, reason="compiled extension not built")


def batch(seed, size=500, n=4, m=3, concave=True):
    rng = np.random.default_rng(seed)
    cfg = SamplerConfig()
    ub = sample_utility_batch(cfg, size, rng, concave=concave)
    beliefs = sample_belief_batch(cfg, n, size, rng)
    payoffs = rng.uniform(-12, 12, size=(m, n))
    return ub, beliefs, payoffs


class TestReference:
    def test_numpy_matches_scalar_evaluation(self):
        ub, beliefs, payoffs = batch(1, size=60)
        eu = kernels.py_batch_expected_utilities(ub.xs, ub.ys, ub.left, ub.right, payoffs,
                                                 beliefs)
        for t in range(len(ub)):
            u = ub.row(t)
            for i, x in enumerate(payoffs):
                assert eu[t, i] == pytest.approx(float(beliefs[t] @ u(x)), rel=1e-12, abs=1e-12)

    def test_chain_index(self):
        ub, beliefs, payoffs = batch(2)
        eu = kernels.py_batch_expected_utilities(ub.xs, ub.ys, ub.left, ub.right, payoffs,
                                                 beliefs)
        t = kernels.py_first_chain_violation(ub.xs, ub.ys, ub.left, ub.right, payoffs, beliefs,
                                             1e-9)
        ok = (eu[:, 0] > eu[:, 2:].max(axis=1) + 1e-9) & (eu[:, 2:].max(axis=1) > eu[:, 1] + 1e-9)
        assert t == (int(np.flatnonzero(ok)[0]) if ok.any() else -1)


@needs_ext
class TestBackendAgreement:
    @pytest.mark.parametrize("seed", range(5))
    @pytest.mark.parametrize("concave", [True, False])
    def test_expected_utilities(self, seed, concave):
        ub, beliefs, payoffs = batch(seed, concave=concave)
        args = (ub.xs, ub.ys, ub.left, ub.right, payoffs, beliefs)
        np.testing.assert_allclose(kernels.c_batch_expected_utilities(*args),
                                   kernels.py_batch_expected_utilities(*args),
                                   rtol=1e-12, atol=1e-12)

    @pytest.mark.parametrize("seed", range(10))
    def test_first_violation(self, seed):
        ub, beliefs, payoffs = batch(seed, m=3 + seed % 3, n=2 + seed % 4)
        args = (ub.xs, ub.ys, ub.left, ub.right, payoffs, beliefs, 1e-9)
        assert kernels.first_chain_violation(*args) == kernels.py_first_chain_violation(*args)

    def test_no_hit(self):
        ub, beliefs, _ = batch(3)
        payoffs = np.array([[0.0] * 4, [1.0] * 4, [0.5] * 4])
        args = (ub.xs, ub.ys, ub.left, ub.right, payoffs, beliefs, 1e-9)
        assert kernels.first_chain_violation(*args) == -1


def test_env_forces_pure_python():
    code = "import robustimp.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, ROBUSTIMP_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True)
    assert out.stdout.strip() == "numpy"

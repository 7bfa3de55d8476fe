from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robustimp.core import mixture
from robustimp.errors import DomainError
from robustimp.lottery import Lottery, lp_feasible
from robustimp.oracle import (
    SamplerConfig,
    falsify,
    falsify_superiority,
    fourier_motzkin_feasible,
    grid_lottery_oracle,
    sample_belief,
    sample_belief_batch,
    sample_concave_utility,
    sample_monotone_utility,
    sample_utility_batch,
)
from robustimp.superiority import check_b_superior, revalidate_witness

A = np.array([1.0, 0.0])
B = np.array([0.0, 1.0])


class TestSamplerConfig:
    @pytest.mark.parametrize("kwargs", [
        {"trials": 0}, {"knot_count": (3, 2)}, {"payoff_range": (1.0, 1.0)},
        {"pairwise_bias": 1.5}, {"kink_rate": -0.1},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(DomainError):
            SamplerConfig(**kwargs)


class TestUtilitySampler:
    def test_seed_reproduces_knots(self):
        cfg = SamplerConfig(seed=42)
        u1 = sample_concave_utility(cfg, np.random.default_rng(42))
        u2 = sample_concave_utility(cfg, np.random.default_rng(42))
        assert u1.xs.tobytes() == u2.xs.tobytes()
        assert u1.ys.tobytes() == u2.ys.tobytes()
        assert (u1.left_slope, u1.right_slope) == (u2.left_slope, u2.right_slope)

    def test_every_concave_sample_validates(self):
        rng = np.random.default_rng(0)
        ub = sample_utility_batch(SamplerConfig(), 2000, rng, concave=True)
        for t in range(len(ub)):
            u = ub.row(t)
            assert u.concave
            assert np.all(np.diff(u.slopes) <= 1e-12 * u.slopes[:-1])
            assert np.all(u.slopes > 0)

    def test_monotone_samples_increasing(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            u = sample_monotone_utility(SamplerConfig(), rng)
            assert np.all(u.slopes > 0)

    def test_extreme_kinks_are_common(self):
        rng = np.random.default_rng(5)
        ub = sample_utility_batch(SamplerConfig(), 10_000, rng, concave=True)
        ratios = np.array([s.max() / s.min() for s in (ub.row(t).slopes for t in range(len(ub)))])
        assert np.mean(ratios >= 1e3) >= 0.10


class TestBeliefSampler:
    @given(st.integers(2, 6), st.integers(0, 2**32), st.floats(0, 1))
    def test_on_simplex(self, n, seed, bias):
        cfg = SamplerConfig(pairwise_bias=bias)
        mu = sample_belief(cfg, n, np.random.default_rng(seed))
        assert np.all(mu.probs >= 0)
        assert abs(mu.probs.sum() - 1) <= 1e-12

    def test_pairwise_bias_one(self):
        P = sample_belief_batch(SamplerConfig(pairwise_bias=1.0), 4, 500, np.random.default_rng(3))
        assert np.all(np.count_nonzero(P, axis=1) <= 2)
        assert np.mean(np.count_nonzero(P, axis=1) == 2) == 1.0

    def test_reproducible(self):
        cfg = SamplerConfig()
        a = sample_belief(cfg, 3, np.random.default_rng(9))
        b = sample_belief(cfg, 3, np.random.default_rng(9))
        assert a == b


class TestFalsify:
    def test_extreme_found(self):
        ahat = np.array([1.5, -0.5])
        w = falsify_superiority(A, B, ahat, "concave", SamplerConfig(seed=7, trials=10_000))
        assert w is not None
        assert not check_b_superior(A, B, ahat).holds
        assert revalidate_witness(w, A, B, ahat)
        assert w.utility.concave

    def test_mixture_survives(self):
        ahat = mixture(A, B, 0.4)
        assert falsify_superiority(A, B, ahat, "concave", SamplerConfig(seed=7)) is None

    def test_monotone_class_refutes_mixture(self):
        w = falsify_superiority(A, B, [0.4, 0.6], "monotone", SamplerConfig(seed=7))
        assert w is not None
        assert w.violated_claim == "not-b-better"
        assert revalidate_witness(w, A, B, [0.4, 0.6])

    def test_unknown_class(self):
        with pytest.raises(DomainError):
            falsify(A, [B], A, "convex", SamplerConfig(trials=10))

    @pytest.mark.parametrize("seed", [0, 3, 11])
    def test_worker_count_does_not_matter(self, seed):
        rng = np.random.default_rng(seed)
        a, b = rng.uniform(-5, 5, 4), rng.uniform(-5, 5, 4)
        ahat = 0.5 * (a + b) + rng.normal(0, 1.5, 4)
        cfg = SamplerConfig(seed=seed, trials=20_000)
        w1 = falsify(a, [b], ahat, "concave", cfg, workers=1)
        w4 = falsify(a, [b], ahat, "concave", cfg, workers=4)
        assert (w1 is None) == (w4 is None)
        if w1 is not None:
            assert w1.note == w4.note
            assert w1.belief == w4.belief
            assert w1.utility == w4.utility

    def test_many_alternatives_claim(self):
        c = np.array([0.45, 0.45])
        w = falsify(A, [B, c], [1.5, -0.5], "concave", SamplerConfig(seed=1))
        assert w is not None and w.violated_claim == "not-B-superior"
        assert revalidate_witness(w, A, [B, c], [1.5, -0.5])


class TestFourierMotzkin:
    def test_trivial(self):
        assert fourier_motzkin_feasible(np.zeros((0, 2)), np.zeros(0))
        assert not fourier_motzkin_feasible([[1.0]], [-1.0])
        assert fourier_motzkin_feasible([[1.0, 1.0], [-1.0, 0.0]], [1.0, -0.5])
        assert not fourier_motzkin_feasible([[1.0, 1.0], [-1.0, -1.0]], [1.0, -2.0])

    def test_agrees_with_simplex(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            A_ = rng.integers(-3, 4, size=(5, 5)).astype(float)
            c = rng.integers(-3, 4, size=5).astype(float)
            assert fourier_motzkin_feasible(A_, c) == lp_feasible(A_, c).feasible


class TestGridOracle:
    def test_step_range(self):
        L = Lottery.from_atoms({0.0: 1.0})
        with pytest.raises(DomainError):
            grid_lottery_oracle(L, L, L, step=0.5)

    def test_identical_lotteries(self):
        L = Lottery.from_atoms({1.0: 0.75, 0.0: 0.25})
        assert grid_lottery_oracle(L, L, Lottery.from_atoms({0.0: 0.5, 1.0: 0.5}))

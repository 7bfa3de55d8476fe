from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robustimp.errors import DomainError, ResourceError
from robustimp.lottery import (
    ConvexWeight,
    Lottery,
    check_B_improves,
    fosd,
    improvement_system,
    induce,
    lp_feasible,
    mix,
    mixture_dominates,
    sosd,
)
from robustimp.oracle import fourier_motzkin_feasible, grid_lottery_oracle


def lotteries(max_atoms=4):
    return st.lists(st.tuples(st.integers(-5, 5).map(float), st.floats(0.01, 1.0)),
                    min_size=1, max_size=max_atoms).map(
        lambda atoms: Lottery(np.array([x for x, _ in atoms]),
                              np.array([p for _, p in atoms]) / sum(p for _, p in atoms)))


class TestLottery:
    def test_induce(self):
        assert induce([1, 0], [0.75, 0.25]).atoms == {0.0: 0.25, 1.0: 0.75}
        assert induce([1, 1], [0.3, 0.7]).atoms == {1.0: pytest.approx(1.0)}
        L = induce([0, 1, 0], [0.2, 0.5, 0.3])
        assert L.atoms[0.0] == pytest.approx(0.5) and L.atoms[1.0] == pytest.approx(0.5)

    def test_invalid(self):
        with pytest.raises(DomainError):
            Lottery(np.array([0.0, 1.0]), np.array([0.5, 0.6]))
        with pytest.raises(DomainError):
            Lottery(np.array([0.0]), np.array([-1.0]))

    def test_cdf_and_integral(self):
        L = Lottery.from_atoms({0.0: 0.5, 2.0: 0.5})
        np.testing.assert_allclose(L.cdf([-1, 0, 1, 2]), [0, 0.5, 0.5, 1])
        np.testing.assert_allclose(L.integrated_cdf([0, 1, 2, 3]), [0, 0.5, 1.0, 2.0])
        assert L.mean() == pytest.approx(1.0)

    def test_mix(self):
        L = mix([(0.5, Lottery.from_atoms({0.0: 1.0})), (0.5, Lottery.from_atoms({1.0: 1.0}))])
        assert L.atoms == {0.0: 0.5, 1.0: 0.5}

    def test_convex_weight(self):
        assert ConvexWeight([0.2, 0.3]).rest == pytest.approx(0.5)
        with pytest.raises(DomainError):
            ConvexWeight([0.7, 0.7])


class TestDominance:
    def test_examples(self):
        x = Lottery.from_atoms({0.0: 0.3, 1.0: 0.7})
        y = Lottery.from_atoms({0.0: 0.5, 1.0: 0.5})
        assert fosd(x, y)
        c = Lottery.from_atoms({0.5: 1.0})
        assert sosd(c, y) and not fosd(c, y)
        assert fosd(y, y) and sosd(y, y)

    @given(lotteries(), lotteries())
    def test_fosd_implies_sosd(self, x, y):
        if fosd(x, y):
            assert sosd(x, y)

    @given(lotteries(), lotteries(), lotteries())
    def test_transitive(self, x, y, z):
        for rel in (fosd, sosd):
            if rel(x, y) and rel(y, z):
                assert rel(x, z, 1e-8)

    @given(lotteries())
    def test_reflexive(self, x):
        assert fosd(x, x) and sosd(x, x)


class TestLP:
    def test_empty(self):
        res = lp_feasible(np.zeros((0, 2)), np.zeros(0))
        assert res.feasible
        np.testing.assert_array_equal(res.x, [0, 0])

    def test_infeasible(self):
        assert not lp_feasible([[1.0]], [-1.0]).feasible

    def test_feasible_point_checks(self):
        A = np.array([[1.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
        c = np.array([1.0, -0.25, -0.25])
        res = lp_feasible(A, c)
        assert res.feasible
        assert np.all(A @ res.x <= c + 1e-9) and np.all(res.x >= 0)

    def test_resource_limit(self):
        with pytest.raises(ResourceError):
            lp_feasible(np.zeros((5001, 1)), np.zeros(5001))

    def test_matches_fourier_motzkin(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            A = rng.integers(-4, 5, size=(5, 5)).astype(float)
            c = rng.integers(-4, 5, size=5).astype(float)
            res = lp_feasible(A, c)
            assert res.feasible == fourier_motzkin_feasible(A, c)
            if res.feasible:
                assert np.all(A @ res.x <= c + 1e-8)

    def test_degenerate_cycling_instance(self):
        # Beale's cycling example (scaled to integers) with an objective cut
        A = np.array([[25, -6000, -4, 900], [50, -9000, -2, 300], [0, 0, 1, 0],
                      [-75, 15000, -2, 600]], dtype=float)
        c = np.array([0.0, 0.0, 1.0, -5.0])
        res = lp_feasible(A, c)
        assert res.feasible == fourier_motzkin_feasible(A, c)


class TestCheckBImproves:
    L_A = Lottery.from_atoms({1.0: 0.75, 0.0: 0.25})
    L_B = Lottery.from_atoms({1.0: 0.25, 0.0: 0.75})

    def test_identical(self):
        v = check_B_improves(self.L_A, self.L_A, [self.L_B])
        assert v.holds
        lam = v.certificate["weights"][0]
        assert mixture_dominates(self.L_A, self.L_A, [self.L_B], 0, lam)

    def test_ahat_dominates_b(self):
        ahat = Lottery.from_atoms({1.0: 0.5, 0.0: 0.5})
        v = check_B_improves(self.L_A, ahat, [self.L_B], "monotone")
        assert v.holds
        A, c = improvement_system(self.L_A, ahat, [self.L_B], 0, "monotone")
        assert np.all(A @ np.zeros(1) <= c + 1e-12)

    @pytest.mark.parametrize("cls", ["risk-averse", "monotone"])
    def test_sure_thing_matches_grid(self, cls):
        ahat = Lottery.from_atoms({0.55: 1.0})
        v = check_B_improves(self.L_A, ahat, [self.L_B], cls)
        grid = grid_lottery_oracle(self.L_A, ahat, self.L_B,
                                   "concave" if cls == "risk-averse" else "monotone")
        assert v.holds == grid

    def test_certificates_revalidate(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            n, m = int(rng.integers(2, 5)), int(rng.integers(1, 4))
            mu = rng.dirichlet(np.ones(n))
            L_a, L_h = induce(rng.normal(size=n), mu), induce(rng.normal(size=n), mu)
            others = [induce(rng.normal(size=n), mu) for _ in range(m)]
            for cls in ("risk-averse", "monotone"):
                v = check_B_improves(L_a, L_h, others, cls)
                for b, lam in v.certificate["weights"].items():
                    if lam is not None:
                        assert mixture_dominates(L_a, L_h, others, b, lam, cls, 1e-7)

    def test_needs_alternative(self):
        with pytest.raises(DomainError):
            check_B_improves(self.L_A, self.L_A, [])

    def test_unknown_class(self):
        with pytest.raises(DomainError):
            check_B_improves(self.L_A, self.L_A, [self.L_B], "convex")

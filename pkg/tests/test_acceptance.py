"""End-to-end acceptance checks. Each test records one PASS/FAIL line."""

from __future__ import annotations

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from robustimp.core import DEFAULT_EPS, DecisionProblem, SqrtUtility, UtilityFn
from robustimp.infoacq import (
    CostPotential,
    choice_probability,
    derivatives,
    foc_residuals,
    posterior_bounds,
    reproduce_three_state,
)
from robustimp.knownutil import check_u_improves
from robustimp.lottery import check_B_improves, improvement_system, induce
from robustimp.multi import check_B_superior, witness_not_B_superior
from robustimp.oracle import SamplerConfig, falsify, grid_lottery_oracle, lp_u_improves
from robustimp.plotting import line_data
from robustimp.superiority import (
    check_b_better,
    check_b_superior,
    revalidate_witness,
    witness_not_b_better,
    witness_not_b_superior,
)

from conftest import random_finite_problem, random_line_problem, random_triple

SUITE_SIZE = 1000
SUITE_SEED = 1


def _line_instance(rng):
    p = random_line_problem(rng)
    ids = p.action_ids
    a_id = ids[int(rng.integers(len(ids)))]
    a = p[a_id]
    others = [p[k] for k in ids if k != a_id]
    b = others[int(rng.integers(len(others)))]
    lam = rng.uniform()
    ahat = lam * a + (1 - lam) * b + rng.normal(0, 0.3, p.n) * rng.choice([0.0, 0.1, 1.0])
    return p, a_id, ahat


def _witness_ok(w, a, alts, ahat):
    return w.kind == "strict-chain" and w.margin > DEFAULT_EPS and revalidate_witness(w, a, alts,
                                                                                       ahat)


def test_three_state_reproduction(acceptance):
    t = time.perf_counter()
    p, p_hat = reproduce_three_state()
    dt = time.perf_counter() - t
    ok = (isinstance(p, Fraction) and isinstance(p_hat, Fraction)
          and (p, p_hat) == (Fraction(33, 40), Fraction(3, 4)) and dt < 1.0)
    assert acceptance("three-state reproduction", ok, f"p={p}, p_hat={p_hat}, {dt * 1e3:.1f} ms")


def test_symmetric_entropy_instance(acceptance):
    cost = CostPotential.entropy(1.0)
    L, H = posterior_bounds(1.0, -1.0, cost)
    e = math.e
    r = foc_residuals(1.0, -1.0, cost, L, H)
    p = choice_probability([1.0, -1.0], cost, 0.5)
    ok = (abs(L - 1 / (1 + e)) < 1e-8 and abs(H - e / (1 + e)) < 1e-8
          and max(map(abs, r)) < 1e-10 and p == 0.5)
    assert acceptance("two-state symmetric entropy instance", ok,
                      f"L={L:.12f}, H={H:.12f}, residuals={r[0]:.1e},{r[1]:.1e}, p={p!r}")


def test_checker_oracle_concordance(acceptance):
    rng = np.random.default_rng(SUITE_SEED)
    t = time.perf_counter()
    problems = []
    counts = {"superior": [0, 0], "better": [0, 0], "B-superior": [0, 0]}
    checks = (("superior", check_b_superior, witness_not_b_superior, "concave"),
              ("better", check_b_better, witness_not_b_better, "monotone"))
    for i in range(SUITE_SIZE):
        a, b, ahat = random_triple(rng)
        cfg = SamplerConfig(seed=i, trials=10_000)
        for key, check, witness, cls in checks:
            holds = check(a, b, ahat).holds
            counts[key][holds] += 1
            found = falsify(a, [b], ahat, cls, cfg)
            if holds and found is not None:
                problems.append((key, i, "oracle found a counterexample"))
            if not holds and not _witness_ok(witness(a, b, ahat), a, [b], ahat):
                problems.append((key, i, "witness did not revalidate"))
        p, a_id, ahat = _line_instance(rng)
        a = p[a_id]
        others = [p[k] for k in p.action_ids if k != a_id]
        holds = check_B_superior(p, a_id, ahat).holds
        counts["B-superior"][holds] += 1
        if holds and falsify(a, others, ahat, "concave", cfg) is not None:
            problems.append(("B-superior", i, "oracle found a counterexample"))
        if not holds and not _witness_ok(witness_not_B_superior(p, a_id, ahat), a, others, ahat):
            problems.append(("B-superior", i, "witness did not revalidate"))
    dt = time.perf_counter() - t
    summary = ", ".join(f"{k} holds {v[1]}/fails {v[0]}" for k, v in counts.items())
    ok = not problems and dt < 120
    assert acceptance("checker/oracle concordance", ok,
                      f"{len(problems)} contradictions, {summary}, {dt:.1f} s"), problems[:10]


def test_inclusion_and_mixture_closure(acceptance):
    rng = np.random.default_rng(SUITE_SEED)
    bad = []
    for i in range(SUITE_SIZE):
        a, b, ahat = random_triple(rng)
        if check_b_better(a, b, ahat).holds and not check_b_superior(a, b, ahat).holds:
            bad.append(("inclusion", i))
        for lam in (*rng.uniform(0, 1, 3), 1.0):
            if lam <= 0:
                continue
            mixed = lam * a + (1 - lam) * b
            if not check_b_superior(a, b, mixed).holds:
                bad.append(("closure", i, float(lam)))
    assert acceptance("better-implies-superior inclusion and mixture closure", not bad,
                      f"{SUITE_SIZE} triples, {len(bad)} counterexamples"), bad[:10]


def _feasible_width(A, c):
    """Length of ``{lam in [0, 1] : A[:, 0] lam <= c}``."""
    lo, hi = 0.0, 1.0
    for coef, rhs in zip(A[:, 0], c):
        if coef > 0:
            hi = min(hi, rhs / coef)
        elif coef < 0:
            lo = max(lo, rhs / coef)
        elif rhs < 0:
            return 0.0
    return max(0.0, hi - lo)


def test_lottery_lp_vs_grid(acceptance):
    rng = np.random.default_rng(5)
    total, thin, bad, feasible = 0, [], [], 0
    for i in range(200):
        a, b, ahat = random_triple(rng)
        mu = rng.dirichlet(np.ones(a.shape[0]))
        L_a, L_b, L_h = induce(a, mu), induce(b, mu), induce(ahat, mu)
        for cls, grid_cls in (("risk-averse", "concave"), ("monotone", "monotone")):
            total += 1
            lp = check_B_improves(L_a, L_h, [L_b], cls).holds
            grid = grid_lottery_oracle(L_a, L_h, L_b, grid_cls, step=1e-3)
            feasible += lp
            if lp != grid:
                width = _feasible_width(*improvement_system(L_a, L_h, [L_b], 0, cls))
                (thin if width < 2e-3 else bad).append((i, cls, lp, grid, width))
    ok = not bad and len(thin) < 0.05 * total
    assert acceptance("lottery LP vs grid search", ok,
                      f"{total} comparisons ({feasible} feasible), {len(thin)} thin-set "
                      f"disagreements {thin}, {len(bad)} other"), bad[:10]


def test_known_utility_vs_lp(acceptance):
    rng = np.random.default_rng(6)
    bad, holds = [], 0
    for i in range(200):
        n, m = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        p = random_finite_problem(rng, n, m)
        a = p["x0"]
        b = p[f"x{int(rng.integers(1, m))}"]
        ahat = rng.uniform(0, 1) * a + rng.uniform(0, 1) * (b - a) * 0.3 + rng.normal(0, 0.5, n)
        v = check_u_improves("x0", ahat, p).holds
        holds += v
        if v != lp_u_improves("x0", ahat, p):
            bad.append(i)
    assert acceptance("known-utility vertex check vs LP", not bad,
                      f"200 instances ({holds} hold), {len(bad)} disagreements"), bad


def _rescale(x, alpha, beta):
    return alpha * np.asarray(x) + beta


def test_affine_invariance(acceptance):
    rng = np.random.default_rng(7)
    flips, n_checks = [], 0
    for i in range(40):
        a, b, ahat = random_triple(rng)
        p, a_id, phat = _line_instance(rng)
        base = (check_b_superior(a, b, ahat).holds, check_b_better(a, b, ahat).holds,
                check_B_superior(p, a_id, phat).holds)
        for _ in range(50):
            alpha = float(np.exp(rng.uniform(np.log(0.1), np.log(10.0))))
            beta = float(rng.uniform(-10, 10))
            a2, b2, h2 = (_rescale(x, alpha, beta) for x in (a, b, ahat))
            p2 = DecisionProblem(p.states, {k: _rescale(p[k], alpha, beta) for k in p.action_ids})
            got = (check_b_superior(a2, b2, h2).holds, check_b_better(a2, b2, h2).holds,
                   check_B_superior(p2, a_id, _rescale(phat, alpha, beta)).holds)
            n_checks += 3
            if got != base:
                flips.append((i, alpha, beta, base, got))
    assert acceptance("affine invariance", not flips,
                      f"40 instances x 50 rescalings, {n_checks} verdicts, {len(flips)} flips"), \
        flips[:5]


def test_comparative_statics(acceptance):
    rng = np.random.default_rng(8)
    h = 1e-5
    worst, nonmono = 0.0, []
    for i in range(100):
        a0, a1 = rng.uniform(0.2, 2), -rng.uniform(0.2, 2)
        cost = CostPotential.entropy(float(rng.uniform(0.3, 3)))
        d = derivatives(a0, a1, cost)
        for k, (d0, d1) in enumerate(((h, 0), (0, h))):
            Lp, Hp = posterior_bounds(a0 + d0, a1 + d1, cost)
            Lm, Hm = posterior_bounds(a0 - d0, a1 - d1, cost)
            for name, fd in ((f"dL_dalpha{k}", (Lp - Lm) / (2 * h)),
                             (f"dH_dalpha{k}", (Hp - Hm) / (2 * h))):
                worst = max(worst, abs(fd - d[name]) / abs(d[name]))
        L, H = posterior_bounds(a0, a1, cost)
        mu0 = float(rng.uniform(L, H))
        p0 = [choice_probability([x, a1], cost, mu0) for x in np.linspace(a0 - 0.15, a0 + 1, 40)]
        p1 = [choice_probability([a0, x], cost, mu0) for x in np.linspace(a1 - 1, a1 + 0.15, 40)]
        if np.any(np.diff(p0) < -1e-12) or np.any(np.diff(p1) < -1e-12):
            nonmono.append(i)
    ok = worst < 1e-4 and not nonmono
    assert acceptance("comparative statics", ok,
                      f"100 instances, max relative FD error {worst:.2e}, "
                      f"{len(nonmono)} monotonicity violations")


def test_indifference_markers(acceptance):
    a, b = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    sqrt_ok = True
    for lam in np.linspace(0.05, 0.95, 19):
        m = line_data(a, b, lam * a + (1 - lam) * b, SqrtUtility()).markers["utility"]
        sqrt_ok &= m["mu_hat"] >= m["mu_bar"]
    kinked = UtilityFn.kinked(0.0, 1.0, 0.1)
    m = line_data(a, b, [1.5, -0.5], kinked).markers["utility"]
    kink_ok = (m["mu_hat"] == pytest.approx(0.2, abs=1e-12)
               and m["mu_bar"] == pytest.approx(0.5, abs=1e-12))
    assert acceptance("indifference markers", bool(sqrt_ok and kink_ok),
                      f"sqrt mixtures ordered: {bool(sqrt_ok)}, kinked mu_hat={m['mu_hat']:.6f} "
                      f"mu_bar={m['mu_bar']:.6f}")

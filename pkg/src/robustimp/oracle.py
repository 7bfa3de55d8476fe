"""Brute-force cross-checks that share no logic with the characterizations.

The samplers draw random increasing (optionally concave) piecewise-linear
utilities and beliefs; the falsifiers search them for a ranking
``a > best alternative > ahat``. Sampling can refute a robustness claim but
never confirm one.

Trials are split into fixed-size chunks, chunk ``c`` drawing from the stream
``SeedSequence([seed, c])``. The first hit is the one with the lowest global
trial index, so results do not depend on the number of worker threads.
"""

from __future__ import annotations

from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from robustimp import kernels
from robustimp.core import DEFAULT_EPS, Belief, UtilityFn, as_payoffs, expected_utility
from robustimp.errors import DomainError, ResourceError
from robustimp.lottery import fosd, mix, sosd
from robustimp.superiority import Witness, revalidate_witness

UtilityClass = Literal["concave", "monotone"]

CHUNK = 2048


@dataclass(frozen=True)
class SamplerConfig:
    seed: int = 0
    knot_count: tuple[int, int] = (1, 5)
    payoff_range: tuple[float, float] = (-10.0, 10.0)
    trials: int = 10_000
    pairwise_bias: float = 0.5
    kink_rate: float = 0.2
    # fit knot range to the payoffs under test instead of payoff_range
    adapt_range: bool = True

    def __post_init__(self):
        lo, hi = self.knot_count
        if not 1 <= lo <= hi:
            raise DomainError("knot_count must be a nonempty range of positive integers")
        if not self.payoff_range[0] < self.payoff_range[1]:
            raise DomainError("payoff_range must be nonempty")
        if self.trials < 1:
            raise DomainError("trials must be at least 1")
        if not 0.0 <= self.pairwise_bias <= 1.0 or not 0.0 <= self.kink_rate <= 1.0:
            raise DomainError("probabilities must lie in [0, 1]")


@dataclass(frozen=True)
class UtilityBatch:
    """``T`` piecewise-linear utilities as padded knot arrays."""

    xs: NDArray[np.float64]
    ys: NDArray[np.float64]
    left: NDArray[np.float64]
    right: NDArray[np.float64]
    counts: NDArray[np.int64]
    concave: bool

    def __len__(self) -> int:
        return self.xs.shape[0]

    def row(self, t: int) -> UtilityFn:
        k = int(self.counts[t])
        return UtilityFn(self.xs[t, :k], self.ys[t, :k], float(self.left[t]),
                         float(self.right[t]), concave=self.concave)


def sample_utility_batch(cfg: SamplerConfig, size: int, rng: np.random.Generator,
                         concave: bool = True,
                         payoff_range: tuple[float, float] | None = None) -> UtilityBatch:
    lo, hi = payoff_range or cfg.payoff_range
    kmin, kmax = cfg.knot_count
    counts = rng.integers(kmin, kmax + 1, size=size)
    idx = np.arange(kmax)
    xs = np.where(idx < counts[:, None], rng.uniform(lo, hi, size=(size, kmax)), np.inf)
    xs.sort(axis=1)
    last = np.take_along_axis(xs, (counts - 1)[:, None], axis=1)
    xs = np.where(idx < counts[:, None], xs, last)

    # counts[t] + 1 slopes per row: left, counts-1 segments, right
    sidx = np.arange(kmax + 1)
    valid = sidx <= counts[:, None]
    slopes = np.exp(rng.normal(0.0, 1.0, size=(size, kmax + 1)))
    kink = rng.random(size) < cfg.kink_rate
    cut = rng.integers(1, counts + 1)
    factor = 10.0 ** -rng.uniform(3.0, 5.0, size=size)
    if concave:
        slopes = np.where(valid, slopes, -np.inf)
        slopes = -np.sort(-slopes, axis=1)
        slopes = np.where(kink[:, None] & (sidx >= cut[:, None]), slopes * factor[:, None], slopes)
    else:
        # either side of the cut can be the flat one
        flip = rng.random(size) < 0.5
        below = sidx < cut[:, None]
        flat = np.where(flip[:, None], below, ~below)
        slopes = np.where(kink[:, None] & flat, slopes * factor[:, None], slopes)
    slopes = np.where(valid, slopes, 0.0)

    ys = np.zeros_like(xs)
    seg = np.where(idx[1:] < counts[:, None], slopes[:, 1:kmax], 0.0) * np.diff(xs, axis=1)
    ys[:, 1:] = np.cumsum(seg, axis=1)
    left = slopes[:, 0]
    right = np.take_along_axis(slopes, counts[:, None], axis=1)[:, 0]
    return UtilityBatch(xs, ys, left, right, counts, concave)


def sample_belief_batch(cfg: SamplerConfig, n: int, size: int,
                        rng: np.random.Generator) -> NDArray[np.float64]:
    if n < 2:
        raise DomainError("beliefs need at least two states")
    flat = rng.exponential(size=(size, n))
    flat /= flat.sum(axis=1, keepdims=True)
    first = rng.integers(0, n, size=size)
    second = (first + rng.integers(1, n, size=size)) % n
    w = rng.random(size)
    edge = np.zeros((size, n))
    rows = np.arange(size)
    edge[rows, first] = 1.0 - w
    edge[rows, second] = w
    use_edge = rng.random(size) < cfg.pairwise_bias
    return np.where(use_edge[:, None], edge, flat)


def sample_concave_utility(cfg: SamplerConfig, rng: np.random.Generator) -> UtilityFn:
    """One random concave increasing utility; 20% (``kink_rate``) carry a sharp kink."""
    return sample_utility_batch(cfg, 1, rng, concave=True).row(0)


def sample_monotone_utility(cfg: SamplerConfig, rng: np.random.Generator) -> UtilityFn:
    return sample_utility_batch(cfg, 1, rng, concave=False).row(0)


def sample_belief(cfg: SamplerConfig, n: int, rng: np.random.Generator) -> Belief:
    """Uniform draw from the simplex, or (with ``pairwise_bias``) from a random edge."""
    p = sample_belief_batch(cfg, n, 1, rng)[0]
    return Belief(p / p.sum())


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, chunk]))


def falsify(a: ArrayLike, alternatives: Sequence[ArrayLike], ahat: ArrayLike,
            utility_class: UtilityClass = "concave", cfg: SamplerConfig = SamplerConfig(),
            eps: float = DEFAULT_EPS, claim: str | None = None, workers: int = 1):
    """Search random ``(u, belief)`` for ``a > max(alternatives) > ahat``.

    Returns a :class:`~robustimp.superiority.Witness` (revalidated from
    scratch) or ``None`` after ``cfg.trials`` draws.
    """
    a = as_payoffs(a)
    ahat = as_payoffs(ahat, a.shape[0])
    alts = np.vstack([as_payoffs(b, a.shape[0]) for b in alternatives])
    payoffs = np.ascontiguousarray(np.vstack([a, ahat, alts]))
    n = a.shape[0]
    concave = utility_class == "concave"
    if utility_class not in ("concave", "monotone"):
        raise DomainError(f"unknown utility class {utility_class!r}")
    if claim is None:
        claim = ("not-b-superior" if concave else "not-b-better") if alts.shape[0] == 1 \
            else "not-B-superior"
    prange = None
    if cfg.adapt_range and payoffs.max() > payoffs.min():
        prange = (float(payoffs.min()), float(payoffs.max()))

    n_chunks = -(-cfg.trials // CHUNK)

    def run(chunk: int):
        size = min(CHUNK, cfg.trials - chunk * CHUNK)
        rng = _chunk_rng(cfg.seed, chunk)
        ub = sample_utility_batch(cfg, size, rng, concave=concave, payoff_range=prange)
        beliefs = sample_belief_batch(cfg, n, size, rng)
        t = kernels.first_chain_violation(ub.xs, ub.ys, ub.left, ub.right, payoffs, beliefs, eps)
        return chunk, t, ub, beliefs

    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        for start in range(0, n_chunks, max(1, workers)):
            wave = range(start, min(n_chunks, start + max(1, workers)))
            results = list(pool.map(run, wave)) if pool else [run(c) for c in wave]
            for chunk, t, ub, beliefs in results:
                if t < 0:
                    continue
                u = ub.row(t)
                belief = Belief(beliefs[t] / beliefs[t].sum())
                eu_a = expected_utility(a, belief, u)
                eu_b = max(expected_utility(b, belief, u) for b in alts)
                eu_h = expected_utility(ahat, belief, u)
                w = Witness(u, belief, eu_a, eu_b, eu_h, claim,
                            note=f"sampled trial {chunk * CHUNK + t} (seed {cfg.seed})")
                if revalidate_witness(w, a, alts, ahat, eps):
                    return w
    finally:
        if pool:
            pool.shutdown()
    return None


def falsify_superiority(a: ArrayLike, b: ArrayLike, ahat: ArrayLike,
                        utility_class: UtilityClass = "concave",
                        cfg: SamplerConfig = SamplerConfig(), eps: float = DEFAULT_EPS,
                        workers: int = 1):
    """Monte Carlo refutation of b-superiority (concave) or b-betterness (monotone)."""
    return falsify(a, [b], ahat, utility_class, cfg, eps, workers=workers)


# ---------------------------------------------------------------------------
# Lottery oracles


def grid_lottery_oracle(L_a, L_ahat, L_b, utility_class: UtilityClass = "concave",
                        step: float = 1e-3, eps: float = DEFAULT_EPS) -> bool:
    """True iff some grid weight makes ``lam L_b + (1-lam) L_ahat`` dominate ``lam L_a + (1-lam) L_b``."""
    if not 0.0 < step <= 0.1:
        raise DomainError("grid step must lie in (0, 0.1]")
    dom = sosd if utility_class == "concave" else fosd
    m = int(round(1.0 / step))
    for k in range(m + 1):
        lam = min(1.0, k * step)
        left = mix([(lam, L_b), (1.0 - lam, L_ahat)])
        right = mix([(lam, L_a), (1.0 - lam, L_b)])
        if dom(left, right, eps):
            return True
    return False


# ---------------------------------------------------------------------------
# Fourier-Motzkin feasibility


MAX_FM_ROWS = 200_000


def fourier_motzkin_feasible(A: ArrayLike, c: ArrayLike, nonneg: bool = True) -> bool:
    """Exact feasibility of ``A x <= c`` (and ``x >= 0``) by eliminating variables.

    Works in rational arithmetic, so float inputs are converted exactly.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    c = np.asarray(c, dtype=float).ravel()
    m, d = A.shape if A.size else (0, A.shape[1] if A.ndim == 2 else 0)
    rows = [([Fraction(v) for v in A[i]], Fraction(c[i])) for i in range(m)]
    if nonneg:
        for j in range(d):
            rows.append(([Fraction(-1 if k == j else 0) for k in range(d)], Fraction(0)))
    for j in range(d):
        pos, neg, zero = [], [], []
        for coef, rhs in rows:
            (pos if coef[j] > 0 else neg if coef[j] < 0 else zero).append((coef, rhs))
        new = list(zero)
        for cp, rp in pos:
            for cn, rn in neg:
                sp, sn = cp[j], -cn[j]
                coef = [sn * x + sp * y for x, y in zip(cp, cn)]
                new.append((coef, sn * rp + sp * rn))
        rows = _dedupe(new)
        if len(rows) > MAX_FM_ROWS:
            raise ResourceError(f"Fourier-Motzkin blew up to {len(rows)} rows")
    return all(rhs >= 0 for _, rhs in rows)


def _dedupe(rows):
    seen = {}
    for coef, rhs in rows:
        if all(x == 0 for x in coef):
            key = ("const",)
            prev = seen.get(key)
            if prev is None or rhs < prev[1]:
                seen[key] = (coef, rhs)
            continue
        scale = max(abs(x) for x in coef)
        key = tuple(x / scale for x in coef)
        r = rhs / scale
        prev = seen.get(key)
        if prev is None or r < prev[1]:
            seen[key] = ([x for x in key], r)
    return list(seen.values())


# ---------------------------------------------------------------------------
# Known-utility oracles (independent LP solver)


def lp_u_improves(a_id: str, ahat: ArrayLike, problem, eps: float = DEFAULT_EPS) -> bool:
    """Direct test of the improvement definition by linear programming.

    For every alternative ``b`` minimizes ``E_mu (ahat - b)`` over beliefs at
    which ``a_id`` is optimal; also requires ``ahat`` strictly best wherever
    ``a_id`` is uniquely best.
    """
    from scipy.optimize import linprog

    a = problem[a_id]
    ahat = as_payoffs(ahat, problem.n)
    labels = [k for k in problem.action_ids if k != a_id]
    others = problem.matrix(labels)
    best = others.max(axis=0)
    uniq = a > best + eps
    if np.any(ahat[uniq] <= best[uniq] + eps):
        return False
    A_ub = others - a
    n = problem.n
    for b in others:
        res = linprog(ahat - b, A_ub=A_ub, b_ub=np.zeros(len(labels)),
                      A_eq=np.ones((1, n)), b_eq=[1.0], bounds=[(0, None)] * n, method="highs")
        if res.status != 0:
            raise DomainError(f"linprog failed: {res.message}")
        if res.fun < -eps:
            return False
    return True


def lp_vertex_probe(a_id: str, problem, directions: int = 64, seed: int = 0) -> NDArray[np.float64]:
    """Vertices of the optimality polytope hit by minimizing random linear objectives."""
    from scipy.optimize import linprog

    rng = np.random.default_rng(seed)
    a = problem[a_id]
    labels = [k for k in problem.action_ids if k != a_id]
    A_ub = problem.matrix(labels) - a
    n = problem.n
    hits = []
    for _ in range(directions):
        res = linprog(rng.normal(size=n), A_ub=A_ub, b_ub=np.zeros(len(labels)),
                      A_eq=np.ones((1, n)), b_eq=[1.0], bounds=[(0, None)] * n,
                      method="highs-ds")
        if res.status == 0 and not any(np.max(np.abs(res.x - h)) <= 1e-7 for h in hits):
            hits.append(res.x)
    return np.array(hits)

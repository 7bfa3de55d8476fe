"""Choice probabilities when the agent can buy information first.

Two states, two actions, and a uniformly posterior-separable information
cost with potential ``c``. After normalizing ``u(b) = 0`` the focal action
pays ``alpha0`` in state 0 and ``alpha1`` in state 1; ``mu`` is always the
probability of state 1. The optimal signal either reveals nothing or splits
the prior into posteriors ``mu_L < mu_H``, with the focal action taken at
``mu_L``.

The module also replays a three-state example in exact rational arithmetic
where a dominating action is chosen less often.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.typing import ArrayLike
from scipy.optimize import brentq
from scipy.special import expit, xlogy

from robustimp.core import DEFAULT_EPS, Belief, Utility, as_payoffs, dominates
from robustimp.errors import AssumptionError, DataError, DomainError, NumericalFailure
from robustimp.superiority import Verdict

FOC_TOL = 1e-10
EDGE = 1e-15


def _entropy_bounds(alpha0: float, alpha1: float, kappa: float) -> tuple[float, float]:
    # the log-odds x of mu_L solves softplus(x + d) - softplus(x) = alpha0 / kappa
    s, d = alpha0 / kappa, (alpha0 - alpha1) / kappa
    x = math.log(math.expm1(s)) - s - math.log(math.expm1(d - s))
    return expit(x), expit(x + d)


@dataclass(frozen=True, eq=False)
class CostPotential:
    """Strictly convex potential ``c`` on (0, 1) with its first two derivatives.

    ``dc_inv`` inverts ``dc``; when omitted it is found by bracketing.
    """

    c: Callable[[float], float]
    dc: Callable[[float], float]
    d2c: Callable[[float], float]
    kappa: float = 1.0
    name: str = "custom"
    dc_inv: Callable[[float], float] | None = None
    params: dict = field(default_factory=dict)
    # optional closed-form (mu_L, mu_H) used as the Newton starting point
    bounds: Callable[[float, float], tuple[float, float]] | None = None

    def __post_init__(self):
        if not self.kappa > 0:
            raise DomainError("kappa must be positive")
        probe = np.linspace(0.0, 1.0, 1002)[1:-1]
        if not all(self.d2c(float(m)) > 0 for m in probe):
            raise DomainError(f"cost potential {self.name!r} is not strictly convex on (0, 1)")

    @classmethod
    def entropy(cls, kappa: float = 1.0) -> CostPotential:
        """``kappa * (mu ln mu + (1 - mu) ln(1 - mu))``: mutual-information cost."""
        k = float(kappa)
        return cls(
            c=lambda m: k * float(xlogy(m, m) + xlogy(1 - m, 1 - m)),
            dc=lambda m: k * math.log(m / (1 - m)),
            d2c=lambda m: k / (m * (1 - m)),
            kappa=k,
            name="entropy",
            dc_inv=lambda y: 1.0 / (1.0 + math.exp(-y / k)) if y > -700 * k else 0.0,
            params={"family": "entropy", "kappa": k},
            bounds=lambda a0, a1: _entropy_bounds(a0, a1, k),
        )

    def mirrored(self) -> CostPotential:
        """The same cost with the two states relabelled (``mu -> 1 - mu``)."""
        inv = None
        if self.dc_inv is not None:
            f = self.dc_inv
            inv = lambda y: 1.0 - f(-y)  # noqa: E731
        return CostPotential(
            c=lambda m: self.c(1 - m), dc=lambda m: -self.dc(1 - m),
            d2c=lambda m: self.d2c(1 - m), kappa=self.kappa, name=self.name + "-mirrored",
            dc_inv=inv, params=self.params)

    def inverse_dc(self, y: float) -> float:
        """``mu`` with ``dc(mu) == y``, clamped to [0, 1] when ``y`` is out of range."""
        if self.dc_inv is not None:
            return min(1.0, max(0.0, float(self.dc_inv(y))))
        lo, hi = EDGE, 1.0 - EDGE
        if y <= self.dc(lo):
            return 0.0
        if y >= self.dc(hi):
            return 1.0
        return brentq(lambda m: self.dc(m) - y, lo, hi, xtol=1e-15, rtol=1e-15)

    def bregman(self, mu: float, mu0: float) -> float:
        return self.c(mu) - self.c(mu0) - self.dc(mu0) * (mu - mu0)


@dataclass(frozen=True, eq=False)
class PosteriorPlan:
    """A Bayes-plausible split of the prior and the action taken at each posterior."""

    posteriors: tuple[Belief, ...]
    weights: tuple[float, ...]
    action_at: tuple[str, ...]
    p: float
    focal: str = "a"

    def __post_init__(self):
        if not (len(self.posteriors) == len(self.weights) == len(self.action_at)):
            raise DomainError("posteriors, weights and actions must align")
        if abs(sum(self.weights) - 1.0) > 1e-12 or min(self.weights) < 0:
            raise DomainError("weights must be a probability vector")

    @property
    def mean(self) -> np.ndarray:
        return sum(w * q.probs for w, q in zip(self.weights, self.posteriors))

    def to_dict(self) -> dict:
        return {
            "posteriors": [q.probs.tolist() for q in self.posteriors],
            "weights": list(self.weights),
            "action_at": list(self.action_at),
            "p": self.p,
            "focal": self.focal,
        }


def _two_state(mu: float) -> Belief:
    return Belief(np.array([1.0 - mu, mu]))


def _line(alpha0: float, alpha1: float, mu: float) -> float:
    return alpha0 + (alpha1 - alpha0) * mu


def corner_focal(alpha0: float, alpha1: float, cost: CostPotential, mu0: float) -> bool:
    """Is learning nothing and taking the focal action optimal at ``mu0``?

    Holds iff the focal payoff line plus the Bregman gap of ``c`` at ``mu0``
    stays nonnegative on [0, 1]. The sum is convex, so its minimum is where
    ``dc(mu) = dc(mu0) + alpha0 - alpha1`` (or an endpoint).
    """
    if _line(alpha0, alpha1, mu0) < 0:
        return False
    g = lambda m: _line(alpha0, alpha1, m) + cost.bregman(m, mu0)  # noqa: E731
    m = cost.inverse_dc(cost.dc(mu0) + alpha0 - alpha1)
    return min(g(m), g(0.0), g(1.0)) >= -FOC_TOL


def corner_other(alpha0: float, alpha1: float, cost: CostPotential, mu0: float) -> bool:
    """Mirror of :func:`corner_focal` for learning nothing and taking the other action."""
    if _line(alpha0, alpha1, mu0) > 0:
        return False
    g = lambda m: cost.bregman(m, mu0) - _line(alpha0, alpha1, m)  # noqa: E731
    m = cost.inverse_dc(cost.dc(mu0) + alpha1 - alpha0)
    return min(g(m), g(0.0), g(1.0)) >= -FOC_TOL


def foc_residuals(alpha0: float, alpha1: float, cost: CostPotential,
                  mu_L: float, mu_H: float) -> tuple[float, float]:
    c, dc = cost.c, cost.dc
    r1 = alpha1 - alpha0 - dc(mu_L) + dc(mu_H)
    r2 = dc(mu_L) * mu_L - dc(mu_H) * mu_H + c(mu_H) + alpha0 - c(mu_L)
    return r1, r2


def _newton(alpha0, alpha1, cost, L, H, max_iter=100):
    r = np.array(foc_residuals(alpha0, alpha1, cost, L, H))
    for _ in range(max_iter):
        if np.max(np.abs(r)) < 1e-13:
            return L, H
        cL, cH = cost.d2c(L), cost.d2c(H)
        J = np.array([[-cL, cH], [cL * L, -cH * H]])
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            return None
        t = 1.0
        while t > 1e-12:
            nL, nH = L + t * step[0], H + t * step[1]
            if 0 < nL < nH < 1:
                nr = np.array(foc_residuals(alpha0, alpha1, cost, nL, nH))
                if np.max(np.abs(nr)) < np.max(np.abs(r)):
                    L, H, r = nL, nH, nr
                    break
            t *= 0.5
        else:
            # no descent left: accept if already at rounding level
            break
    return (L, H) if np.max(np.abs(r)) < residual_floor(cost, L, H) else None


def _bisect(alpha0, alpha1, cost):
    gap = alpha0 - alpha1
    H_of = lambda L: cost.inverse_dc(cost.dc(L) + gap)  # noqa: E731

    def F(L):
        H = H_of(L)
        return foc_residuals(alpha0, alpha1, cost, L, H)[1]

    lo = EDGE
    hi = cost.inverse_dc(cost.dc(1.0 - EDGE) - gap)
    if not lo < hi:
        return None
    flo, fhi = F(lo), F(hi)
    if flo * fhi > 0:
        return None
    L = brentq(F, lo, hi, xtol=1e-16, rtol=1e-15, maxiter=500)
    return L, H_of(L)


def posterior_bounds(alpha0: float, alpha1: float, cost: CostPotential) -> tuple[float, float]:
    """Solve the two first-order conditions for ``(mu_L, mu_H)``."""
    if not alpha0 > 0 > alpha1:
        raise DomainError("need the focal action strictly better in state 0 and worse in state 1")
    gap = alpha0 - alpha1
    if cost.bounds is not None:
        try:
            L0, H0 = cost.bounds(alpha0, alpha1)
        except (OverflowError, ValueError):
            L0, H0 = 0.0, 1.0
    else:
        L0 = cost.inverse_dc(cost.dc(0.5) - 0.5 * gap)
        H0 = cost.inverse_dc(cost.dc(0.5) + 0.5 * gap)
    sol = None
    if 0 < L0 < H0 < 1:
        sol = _newton(alpha0, alpha1, cost, L0, H0)
    if sol is None:
        sol = _bisect(alpha0, alpha1, cost)
    if sol is None:
        raise NumericalFailure(f"no interior solution for alpha=({alpha0}, {alpha1}) "
                               f"with cost {cost.name}; bracket ({L0}, {H0})")
    L, H = sol
    if not 0.0 < L < H < 1.0:
        raise NumericalFailure(f"posteriors ({L}, {H}) are not representable inside (0, 1)")
    r = foc_residuals(alpha0, alpha1, cost, L, H)
    if max(abs(r[0]), abs(r[1])) >= residual_floor(cost, L, H):
        raise NumericalFailure(f"first-order residuals {r} at ({L}, {H})")
    return L, H


def residual_floor(cost: CostPotential, L: float, H: float) -> float:
    """Residual tolerance: ``FOC_TOL``, or the rounding floor of ``(L, H)`` if larger.

    Near 0 or 1 a one-ulp change in a posterior moves ``dc`` by ``d2c * ulp``,
    which can exceed ``FOC_TOL`` for a perfectly rounded solution.
    """
    floor = 4.0 * (cost.d2c(L) * np.spacing(L) + cost.d2c(H) * np.spacing(H))
    return max(FOC_TOL, float(floor))


def solve_two_state(alpha0: float, alpha1: float, cost: CostPotential, mu0: float,
                    focal: str = "a", other: str = "b") -> PosteriorPlan:
    """Optimal learning and choice for payoffs ``(alpha0, alpha1)`` against zero."""
    if not 0.0 < mu0 < 1.0:
        raise DomainError("prior must lie strictly inside (0, 1)")
    if not alpha0 > 0 > alpha1:
        raise DomainError("need the focal action strictly better in state 0 and worse in state 1")
    if corner_focal(alpha0, alpha1, cost, mu0):
        return PosteriorPlan((_two_state(mu0),), (1.0,), (focal,), 1.0, focal)
    if corner_other(alpha0, alpha1, cost, mu0):
        return PosteriorPlan((_two_state(mu0),), (1.0,), (other,), 0.0, focal)
    L, H = posterior_bounds(alpha0, alpha1, cost)
    if mu0 <= L:
        return PosteriorPlan((_two_state(mu0),), (1.0,), (focal,), 1.0, focal)
    if mu0 >= H:
        return PosteriorPlan((_two_state(mu0),), (1.0,), (other,), 0.0, focal)
    p = float((H - mu0) / (H - L))
    return PosteriorPlan((_two_state(L), _two_state(H)), (p, 1.0 - p), (focal, other), p, focal)


def derivatives(alpha0: float, alpha1: float, cost: CostPotential) -> dict[str, float]:
    """Implicit-function derivatives of ``mu_L`` and ``mu_H`` in each payoff."""
    L, H = posterior_bounds(alpha0, alpha1, cost)
    cL, cH, w = cost.d2c(L), cost.d2c(H), H - L
    return {
        "dL_dalpha1": H / (cL * w),
        "dH_dalpha1": L / (cH * w),
        "dL_dalpha0": (1 - H) / (cL * w),
        "dH_dalpha0": (1 - L) / (cH * w),
    }


def _binary(a, b, ahat):
    a = as_payoffs(a)
    if a.shape[0] != 2:
        raise DomainError("selection comparisons are defined for two states")
    return a, as_payoffs(b, 2), as_payoffs(ahat, 2)


def check_selected_more(a: ArrayLike, b: ArrayLike, ahat: ArrayLike,
                        eps: float = DEFAULT_EPS) -> Verdict:
    """Is ``ahat`` chosen (against ``b``) at least as often as ``a`` under every cost, prior and utility?"""
    a, b, ahat = _binary(a, b, ahat)
    if dominates(a, b, "weak", eps) or dominates(b, a, "weak", eps):
        raise AssumptionError("one of a and b weakly dominates the other")
    if dominates(ahat, a, "weak", eps):
        return Verdict(True, "ahat dominates a", {"dominates": "a"})
    if dominates(ahat, b, "weak", eps):
        return Verdict(True, "ahat dominates b", {"dominates": "b"})
    return Verdict(False, "ahat dominates neither a nor b", None)


def choice_probability(alpha: ArrayLike, cost: CostPotential, mu0: float) -> float:
    """Probability of choosing an action with normalized payoffs ``alpha`` over the zero action."""
    a0, a1 = float(alpha[0]), float(alpha[1])
    if a0 >= 0 and a1 >= 0:
        return 1.0
    if a0 <= 0 and a1 <= 0:
        return 0.0
    if a0 > 0 > a1:
        return solve_two_state(a0, a1, cost, mu0).p
    # focal action wins in state 1: relabel states
    return solve_two_state(a1, a0, cost.mirrored(), 1.0 - mu0).p


def selection_comparison(a: ArrayLike, b: ArrayLike, ahat: ArrayLike, u: Utility | None,
                         cost: CostPotential, mu0: float) -> tuple[float, float]:
    """Choice probabilities ``(p, p_hat)`` of ``a`` and ``ahat`` against ``b``."""
    a, b, ahat = _binary(a, b, ahat)
    f = (lambda x: np.asarray(x, dtype=float)) if u is None else (lambda x: np.asarray(u(x), dtype=float))
    ub = f(b)
    return (choice_probability(f(a) - ub, cost, mu0),
            choice_probability(f(ahat) - ub, cost, mu0))


@dataclass(frozen=True)
class ReversalSearch:
    """Outcome of a grid search for ``p > p_hat``; ``hit`` is ``(kappa, mu0, p, p_hat)``."""

    hit: tuple[float, float, float, float] | None
    evaluated: int
    skipped: tuple[tuple[float, float], ...]


def find_selection_reversal(a: ArrayLike, b: ArrayLike, ahat: ArrayLike, u: Utility | None = None,
                            kappas: Sequence[float] = (0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0),
                            priors: Sequence[float] | None = None,
                            tol: float = 1e-9) -> ReversalSearch:
    """Smallest ``(kappa, mu0)`` on the grid with ``p > p_hat + tol`` under entropy cost.

    Grid points whose posteriors round to 0 or 1 in double precision are
    skipped and listed.
    """
    priors = np.linspace(0.01, 0.99, 99) if priors is None else priors
    skipped = []
    count = 0
    for k in sorted(kappas):
        cost = CostPotential.entropy(k)
        for m in sorted(priors):
            try:
                p, ph = selection_comparison(a, b, ahat, u, cost, float(m))
            except NumericalFailure:
                skipped.append((float(k), float(m)))
                continue
            count += 1
            if p > ph + tol:
                return ReversalSearch((float(k), float(m), p, ph), count, tuple(skipped))
    return ReversalSearch(None, count, tuple(skipped))


# ---------------------------------------------------------------------------
# Three-state example (exact)


def solve_bayes_weights(posteriors: Sequence[Sequence[Fraction]],
                        prior: Sequence[Fraction]) -> list[Fraction]:
    """Weights ``w >= 0`` with ``sum(w) = 1`` and ``sum_i w_i q_i = prior``, exactly.

    Posteriors and prior list the probabilities of every state but the
    first. The (possibly overdetermined) system must have a unique,
    consistent solution.
    """
    k = len(posteriors)
    rows = [[Fraction(1)] * k + [Fraction(1)]]
    for j in range(len(prior)):
        rows.append([Fraction(q[j]) for q in posteriors] + [Fraction(prior[j])])
    r = 0
    pivots = []
    for col in range(k):
        piv = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = 1 / rows[r][col]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
    if any(all(x == 0 for x in row[:-1]) and row[-1] != 0 for row in rows):
        raise DataError("posteriors cannot average to the prior")
    if len(pivots) < k:
        raise DataError("Bayes-plausibility weights are not unique")
    w = [Fraction(0)] * k
    for i, col in enumerate(pivots):
        w[col] = rows[i][-1]
    if any(x < 0 for x in w):
        raise DataError(f"negative Bayes-plausibility weight in {w}")
    return w


def _value(alpha: Sequence[Fraction], q: Sequence[Fraction]) -> Fraction:
    full = [1 - sum(q), *q]
    return sum(x * y for x, y in zip(alpha, full))


def support_choice_probability(alpha: Sequence[Fraction], support: Sequence[Sequence[Fraction]],
                               prior: Sequence[Fraction]) -> Fraction:
    """Exact probability of choosing the focal action (payoffs ``alpha`` vs zero) given the support.

    Ties at a posterior go to the focal action.
    """
    w = solve_bayes_weights(support, prior)
    return sum((wi for wi, q in zip(w, support) if _value(alpha, q) >= 0), Fraction(0))


F = Fraction
THREE_STATE = {
    "prior": (F(3, 20), F(1, 5)),
    "alpha": (F(0), F(-1), F(1)),
    "alpha_hat": (F(0), F(-1), F(3, 2)),
    "support": ((F(2, 25), F(1, 5)), (F(12, 25), F(1, 5))),
    "support_hat": ((F(1, 50), F(53, 200)), (F(27, 50), F(1, 200))),
}


def reproduce_three_state() -> tuple[Fraction, Fraction]:
    """Choice probabilities of ``a`` and of the dominating ``ahat`` in the fixed three-state example."""
    d = THREE_STATE
    p = support_choice_probability(d["alpha"], d["support"], d["prior"])
    p_hat = support_choice_probability(d["alpha_hat"], d["support_hat"], d["prior"])
    return p, p_hat

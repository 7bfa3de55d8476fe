"""Robust improvement when the agent's belief is known.

Fixing the belief turns every action into a finite lottery. ``ahat``
improves on ``a`` against the alternatives ``L_1 .. L_m`` iff, for each
``b``, some convex weight makes a mixture of the alternatives and ``ahat``
dominate the matching mixture of ``a`` and ``b``. Dominance is first order
for monotone agents and second order for risk-averse ones; either way the
mixture distribution functions are affine in the weights, so each ``b`` is a
small linear feasibility problem.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from robustimp.core import BELIEF_TOL, DEFAULT_EPS, Belief, _frozen, as_payoffs
from robustimp.errors import DomainError, NumericalFailure, ResourceError
from robustimp.superiority import Verdict

DominanceClass = Literal["monotone", "risk-averse", "concave"]

LP_TOL = 1e-9
MAX_LP_ROWS = 5_000
MAX_LP_COLS = 5_000


@dataclass(frozen=True, eq=False)
class Lottery:
    """Finite-support lottery with merged, ascending payouts."""

    payouts: NDArray[np.float64]
    probs: NDArray[np.float64]

    def __post_init__(self):
        x = np.asarray(self.payouts, dtype=float).ravel()
        p = np.asarray(self.probs, dtype=float).ravel()
        if x.shape != p.shape or x.size == 0:
            raise DomainError("payouts and probabilities must be nonempty and of equal length")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(p)):
            raise DomainError("lottery entries must be finite")
        if np.any(p < 0):
            raise DomainError("probabilities must be nonnegative")
        if abs(p.sum() - 1.0) > BELIEF_TOL:
            raise DomainError(f"probabilities sum to {p.sum()!r}, not 1")
        order = np.argsort(x, kind="stable")
        x, p = x[order], p[order]
        ux, inv = np.unique(x, return_inverse=True)
        up = np.zeros(ux.shape)
        np.add.at(up, inv, p)
        keep = up > 0
        object.__setattr__(self, "payouts", _frozen(ux[keep]))
        object.__setattr__(self, "probs", _frozen(up[keep]))

    @classmethod
    def from_atoms(cls, atoms: Mapping[float, float] | Iterable[tuple[float, float]]) -> Lottery:
        items = list(atoms.items()) if isinstance(atoms, Mapping) else list(atoms)
        return cls(np.array([x for x, _ in items], dtype=float),
                   np.array([p for _, p in items], dtype=float))

    @property
    def atoms(self) -> dict[float, float]:
        return {float(x): float(p) for x, p in zip(self.payouts, self.probs)}

    def mean(self) -> float:
        return float(self.payouts @ self.probs)

    def cdf(self, t: ArrayLike) -> NDArray[np.float64]:
        t = np.asarray(t, dtype=float)
        return np.sum(self.probs * (self.payouts <= t[..., None]), axis=-1)

    def integrated_cdf(self, t: ArrayLike) -> NDArray[np.float64]:
        """``int_{-inf}^t F(s) ds``, exact for a step CDF."""
        t = np.asarray(t, dtype=float)
        return np.sum(self.probs * np.maximum(t[..., None] - self.payouts, 0.0), axis=-1)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Lottery):
            return NotImplemented
        return (self.payouts.shape == other.payouts.shape
                and np.array_equal(self.payouts, other.payouts)
                and np.array_equal(self.probs, other.probs))

    def __hash__(self) -> int:
        return hash((self.payouts.tobytes(), self.probs.tobytes()))

    def __repr__(self) -> str:
        return f"Lottery({self.atoms})"


@dataclass(frozen=True)
class ConvexWeight:
    """Nonnegative weights summing to at most one."""

    lam: NDArray[np.float64]

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float).ravel()
        if np.any(lam < -LP_TOL) or lam.sum() > 1.0 + LP_TOL:
            raise DomainError(f"not a convex weight: {lam.tolist()}")
        object.__setattr__(self, "lam", _frozen(np.clip(lam, 0.0, None)))

    @property
    def rest(self) -> float:
        return max(0.0, 1.0 - float(self.lam.sum()))

    def to_list(self) -> list[float]:
        return self.lam.tolist()


def induce(payoffs: ArrayLike, belief: Belief | ArrayLike) -> Lottery:
    """The lottery an action yields under ``belief``."""
    p = belief.probs if isinstance(belief, Belief) else Belief(np.asarray(belief, dtype=float)).probs
    x = as_payoffs(payoffs, p.shape[0])
    return Lottery(x, p)


def mix(parts: Sequence[tuple[float, Lottery]]) -> Lottery:
    """Compound lottery ``sum_i w_i L_i``; weights must sum to one."""
    xs, ps = [], []
    for w, L in parts:
        if w < 0:
            raise DomainError("mixture weights must be nonnegative")
        if w > 0:
            xs.append(L.payouts)
            ps.append(w * L.probs)
    p = np.concatenate(ps)
    return Lottery(np.concatenate(xs), p / p.sum())


def support_grid(*lotteries: Lottery) -> NDArray[np.float64]:
    return np.unique(np.concatenate([L.payouts for L in lotteries]))


def _profile(L: Lottery, grid: NDArray, second_order: bool) -> NDArray:
    return L.integrated_cdf(grid) if second_order else L.cdf(grid)


def fosd(x: Lottery, y: Lottery, eps: float = DEFAULT_EPS) -> bool:
    """``x`` first-order stochastically dominates ``y`` (weakly)."""
    g = support_grid(x, y)
    return bool(np.all(x.cdf(g) <= y.cdf(g) + eps))


def sosd(x: Lottery, y: Lottery, eps: float = DEFAULT_EPS) -> bool:
    """``x`` second-order stochastically dominates ``y`` (weakly).

    Integrated CDFs are piecewise linear with kinks only at support points,
    so comparing them there is exact.
    """
    g = support_grid(x, y)
    return bool(np.all(x.integrated_cdf(g) <= y.integrated_cdf(g) + eps))


# ---------------------------------------------------------------------------
# Phase-1 simplex


@dataclass(frozen=True)
class LPResult:
    feasible: bool
    x: NDArray[np.float64] | None
    iterations: int
    infeasibility: float


def lp_feasible(A: ArrayLike, c: ArrayLike, tol: float = LP_TOL,
                max_iter: int | None = None) -> LPResult:
    """Find ``x >= 0`` with ``A x <= c`` by a phase-1 tableau simplex.

    Bland's smallest-index rule picks both the entering and the leaving
    column, so the method cannot cycle. ``tol`` is the pivot and feasibility
    tolerance.
    """
    A = np.asarray(A, dtype=float)
    c = np.asarray(c, dtype=float).ravel()
    if A.ndim != 2:
        A = A.reshape(c.shape[0], -1)
    m, d = A.shape
    if c.shape[0] != m:
        raise DomainError("A and c disagree on the number of constraints")
    if m > MAX_LP_ROWS or d > MAX_LP_COLS:
        raise ResourceError(f"LP of size {m}x{d} exceeds the {MAX_LP_ROWS}x{MAX_LP_COLS} limit")
    if m == 0:
        return LPResult(True, np.zeros(d), 0, 0.0)
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(c))):
        raise DomainError("LP data must be finite")

    neg = np.flatnonzero(c < 0)
    k = neg.size
    ncol = d + m + k
    T = np.zeros((m, ncol + 1))
    T[:, :d] = A
    T[:, d:d + m] = np.eye(m)
    T[:, -1] = c
    T[neg] *= -1.0
    basis = list(range(d, d + m))
    for j, i in enumerate(neg):
        T[i, d + m + j] = 1.0
        basis[i] = d + m + j
    cost = np.zeros(ncol)
    cost[d + m:] = 1.0

    limit = max_iter if max_iter is not None else 50 * (m + ncol) + 100
    it = 0
    while True:
        cb = cost[basis]
        reduced = cost - cb @ T[:, :-1]
        entering = next((j for j in range(ncol) if reduced[j] < -tol), None)
        if entering is None:
            break
        col = T[:, entering]
        rows = np.flatnonzero(col > tol)
        if rows.size == 0:
            # phase-1 objective is bounded below by zero; an unbounded ray cannot occur
            raise NumericalFailure("phase-1 simplex found an unbounded direction")
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol * max(1.0, abs(best))]
        leave = min(ties, key=lambda r: basis[r])
        T[leave] /= T[leave, entering]
        for r in range(m):
            if r != leave and T[r, entering] != 0.0:
                T[r] -= T[r, entering] * T[leave]
        basis[leave] = entering
        it += 1
        if it > limit:
            raise NumericalFailure(f"phase-1 simplex did not terminate in {limit} pivots")

    values = np.zeros(ncol)
    for r, j in enumerate(basis):
        values[j] = T[r, -1]
    infeas = float(values[d + m:].sum())
    x = np.clip(values[:d], 0.0, None)
    scale = max(1.0, float(np.abs(c).max()))
    ok = infeas <= tol * scale and bool(np.all(A @ x <= c + 10 * tol * scale))
    return LPResult(ok, x if ok else None, it, infeas)


# ---------------------------------------------------------------------------
# Known-belief improvement


def _second_order(cls: DominanceClass) -> bool:
    if cls in ("risk-averse", "concave"):
        return True
    if cls == "monotone":
        return False
    raise DomainError(f"unknown dominance class {cls!r}")


def improvement_system(L_a: Lottery, L_ahat: Lottery, others: Sequence[Lottery], b: int,
                       cls: DominanceClass = "risk-averse") -> tuple[NDArray, NDArray]:
    """Constraints ``A lam <= c`` for alternative ``b`` (index into ``others``).

    Rows are the dominance inequalities at every merged support point, then
    ``sum(lam) <= 1``.
    """
    second = _second_order(cls)
    grid = support_grid(L_a, L_ahat, *others)
    Fa = _profile(L_a, grid, second)
    Fh = _profile(L_ahat, grid, second)
    Fb = _profile(others[b], grid, second)
    Fi = np.stack([_profile(L, grid, second) for L in others], axis=1)
    # sum_i lam_i (F_i - F_ahat - F_a + F_b) <= F_b - F_ahat
    A = Fi - (Fh + Fa - Fb)[:, None]
    c = Fb - Fh
    A = np.vstack([A, np.ones((1, len(others)))])
    c = np.append(c, 1.0)
    return A, c


def mixture_dominates(L_a: Lottery, L_ahat: Lottery, others: Sequence[Lottery], b: int,
                      lam: ArrayLike, cls: DominanceClass = "risk-averse",
                      eps: float = DEFAULT_EPS) -> bool:
    """Recheck a weight by building both compound lotteries explicitly."""
    w = ConvexWeight(lam)
    left = mix([*zip(w.lam, others), (w.rest, L_ahat)])
    right = mix([(float(w.lam.sum()), L_a), (w.rest, others[b])])
    return (sosd if _second_order(cls) else fosd)(left, right, eps)


def check_B_improves(L_a: Lottery, L_ahat: Lottery, others: Sequence[Lottery],
                     cls: DominanceClass = "risk-averse", eps: float = DEFAULT_EPS) -> Verdict:
    """Does ``L_ahat`` improve on ``L_a`` against every lottery in ``others``?

    The certificate maps each alternative index to its :class:`ConvexWeight`
    (or ``None``) and lists alternatives whose feasibility is decided only
    within ``eps`` of the boundary.
    """
    others = list(others)
    if not others:
        raise DomainError("need at least one alternative lottery")
    weights: dict[int, ConvexWeight | None] = {}
    borderline = []
    failed = None
    for b in range(len(others)):
        A, c = improvement_system(L_a, L_ahat, others, b, cls)
        # slack goes on the dominance rows only; the weight row stays exact
        slack = np.append(np.ones(len(c) - 1), 0.0)
        res = lp_feasible(A, c + eps * slack)
        if res.feasible:
            # undo pivot round-off on the weight row before certifying
            weights[b] = ConvexWeight(res.x / max(1.0, float(res.x.sum())))
            if not lp_feasible(A, c - eps * slack).feasible:
                borderline.append(b)
        else:
            weights[b] = None
            if failed is None:
                failed = b
            if lp_feasible(A, c + (10 * eps + 1e-7) * slack).feasible:
                borderline.append(b)
    cert = {"weights": {b: (w.to_list() if w is not None else None) for b, w in weights.items()},
            "borderline": borderline, "class": cls}
    if failed is not None:
        return Verdict(False, f"no convex weight works for alternative {failed}", cert)
    return Verdict(True, "a convex weight exists for every alternative", cert)

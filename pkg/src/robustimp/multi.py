"""Robust improvement against a finite set of alternatives.

Every pairwise condition from :mod:`robustimp.superiority` must hold against
each alternative, and ``ahat`` must strictly beat the best alternative
wherever ``a`` does. The equivalence needs two assumptions on the decision
problem, richness and single-peakedness, which :func:`check_assumptions`
verifies before any verdict is returned.
"""

from __future__ import annotations

import itertools
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from robustimp.core import (
    DEFAULT_EPS,
    Belief,
    DecisionProblem,
    StatePartition,
    UtilityFn,
    as_payoffs,
    dominates,
    mixture,
    partition,
)
from robustimp.errors import AssumptionError, DomainError, NumericalFailure, RelationHoldsError
from robustimp.oracle import SamplerConfig, falsify
from robustimp.superiority import (
    MAX_KINK_HALVINGS,
    LambdaInterval,
    Verdict,
    Witness,
    _tie_state_witness,
    certify,
)


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of the richness and single-peakedness scans.

    ``rich_states`` maps each action to a state where it is the unique
    maximizer, or ``None``. ``violation`` is the first ``(action, state,
    state)`` triple breaking single-peakedness.
    """

    rich: bool
    rich_states: dict[str, int | None] = field(default_factory=dict)
    single_peaked: bool = True
    violation: tuple[str, int, int] | None = None

    @property
    def ok(self) -> bool:
        return self.rich and self.single_peaked

    def to_dict(self) -> dict:
        return {
            "rich": self.rich,
            "rich_states": dict(self.rich_states),
            "single_peaked": self.single_peaked,
            "violation": list(self.violation) if self.violation else None,
        }


def partition_against(a: ArrayLike, others: ArrayLike, eps: float = DEFAULT_EPS) -> StatePartition:
    """Partition states by comparing ``a`` with the statewise best of ``others``."""
    return partition(a, np.max(np.atleast_2d(others), axis=0), eps)


def _edge_envelope_gap(x_t: float, x_tp: float, bt: NDArray, btp: NDArray) -> float:
    """``max`` over ``lam`` in [0, 1] of the line ``x`` minus the upper envelope of the ``b`` lines.

    The gap is concave and piecewise linear in ``lam``, so it peaks at an
    endpoint or where two envelope lines cross.
    """
    lams = {0.0, 1.0}
    k = bt.shape[0]
    for i in range(k):
        for j in range(i + 1, k):
            # lam*bt_i + (1-lam)*btp_i == lam*bt_j + (1-lam)*btp_j
            den = (bt[i] - btp[i]) - (bt[j] - btp[j])
            if den != 0.0:
                lam = (btp[j] - btp[i]) / den
                if 0.0 < lam < 1.0:
                    lams.add(float(lam))
    lam = np.array(sorted(lams))
    x = lam * x_t + (1 - lam) * x_tp
    env = np.max(lam[:, None] * bt[None, :] + (1 - lam[:, None]) * btp[None, :], axis=1)
    return float(np.max(x - env))


def check_assumptions(problem: DecisionProblem, eps: float = DEFAULT_EPS,
                      actions: Sequence[str] | None = None) -> AssumptionReport:
    """Scan ``problem`` (optionally restricted to ``actions``) for richness and single-peakedness."""
    ids = list(actions) if actions is not None else list(problem.action_ids)
    if len(ids) < 2:
        raise DomainError("need at least two actions")
    M = problem.matrix(ids)
    n = M.shape[1]
    rich_states: dict[str, int | None] = {}
    violation = None
    for i, aid in enumerate(ids):
        a = M[i]
        B = np.delete(M, i, axis=0)
        best = B.max(axis=0)
        uniq = np.flatnonzero(a > best + eps)
        rich_states[aid] = int(uniq[0]) if uniq.size else None
        if violation is not None:
            continue
        for t, tp in itertools.combinations(range(n), 2):
            if _edge_envelope_gap(a[t], a[tp], B[:, t], B[:, tp]) >= -eps:
                continue
            if np.any((B[:, t] >= a[t] - eps) & (B[:, tp] >= a[tp] - eps)):
                continue
            violation = (aid, t, tp)
            break
    rich = all(s is not None for s in rich_states.values())
    return AssumptionReport(rich, rich_states, violation is None, violation)


def _resolve(problem: DecisionProblem, a_id: str, B: Sequence[str] | None) -> list[str]:
    if a_id not in problem.actions:
        raise DomainError(f"unknown action {a_id!r}")
    if B is None:
        B = [k for k in problem.action_ids if k != a_id]
    B = list(B)
    if not B:
        raise DomainError("B must contain at least one alternative")
    if a_id in B:
        raise DomainError("B must not contain the incumbent action")
    for k in B:
        if k not in problem.actions:
            raise DomainError(f"unknown action {k!r}")
    return B


def _require_assumptions(problem, a_id, B, eps) -> AssumptionReport:
    report = check_assumptions(problem, eps, [a_id, *B])
    if not report.ok:
        what = []
        if not report.rich:
            lacking = [k for k, s in report.rich_states.items() if s is None]
            what.append(f"richness fails for {', '.join(lacking)}")
        if not report.single_peaked:
            aid, t, tp = report.violation
            what.append(f"single-peakedness fails for {aid} on states ({t}, {tp})")
        raise AssumptionError("; ".join(what), report=report)
    return report


def crossing_weight(x: NDArray, b: NDArray, theta: int, theta_p: int, u=None) -> float:
    """Weight on ``theta_p`` where ``x`` stops beating ``b`` on the edge; ``inf`` if never."""
    f = (lambda v: v) if u is None else u
    gain = float(f(x[theta])) - float(f(b[theta]))
    loss = float(f(b[theta_p])) - float(f(x[theta_p]))
    if gain <= 0.0:
        return 0.0
    if loss <= 0.0:
        return np.inf
    return gain / (gain + loss)


def boundary_action(problem: DecisionProblem, a_id: str, theta: int, theta_p: int,
                    B: Sequence[str] | None = None, eps: float = DEFAULT_EPS) -> str:
    """First alternative ``a`` ties with when moving belief from ``theta`` to ``theta_p``."""
    B = _resolve(problem, a_id, B)
    _require_assumptions(problem, a_id, B, eps)
    a = problem[a_id]
    part = partition_against(a, problem.matrix(B), eps)
    if theta not in part.a_states or theta_p not in part.b_states:
        raise AssumptionError(
            f"need a uniquely best at state {theta} and beaten at state {theta_p}")
    best = None
    for k in sorted(B):
        b = problem[k]
        if b[theta_p] <= a[theta_p] + eps:
            continue
        dominated = any(
            j != k and problem[j][theta] >= b[theta] and problem[j][theta_p] >= b[theta_p]
            and (problem[j][theta] > b[theta] or problem[j][theta_p] > b[theta_p])
            for j in B)
        if dominated:
            continue
        g = crossing_weight(a, b, theta, theta_p)
        if best is None or g < best[0] - eps:
            best = (g, k)
    if best is None:
        raise AssumptionError(f"no alternative overtakes a on states ({theta}, {theta_p})")
    return best[1]


def mixture_interval(a: NDArray, b: NDArray, ahat: NDArray, eps: float) -> LambdaInterval:
    """Weights ``lam`` with ``ahat >= lam*a + (1-lam)*b`` on states where ``a`` and ``b`` differ."""
    part = partition(a, b, eps)
    lower, upper = 0.0, 1.0
    if part.a_states:
        A = np.array(part.a_states)
        upper = min(1.0, float(np.min((ahat[A] - b[A]) / (a[A] - b[A]))))
    if part.b_states:
        Bs = np.array(part.b_states)
        lower = max(0.0, float(np.max((b[Bs] - ahat[Bs]) / (b[Bs] - a[Bs]))))
    return LambdaInterval(lower, upper, lower <= upper + eps)


def check_B_superior(problem: DecisionProblem, a_id: str, ahat: ArrayLike,
                     B: Sequence[str] | None = None, eps: float = DEFAULT_EPS) -> Verdict:
    """Is ``ahat`` an improvement on ``a_id`` against every alternative in ``B`` at once?

    Raises :class:`AssumptionError` (carrying the report) when the problem
    restricted to ``a_id`` and ``B`` is not rich and single-peaked.
    """
    B = _resolve(problem, a_id, B)
    report = _require_assumptions(problem, a_id, B, eps)
    a = problem[a_id]
    ahat = as_payoffs(ahat, problem.n)
    M = problem.matrix(B)
    best = M.max(axis=0)
    part = partition(a, best, eps)
    for s in part.a_states:
        if not ahat[s] > best[s] + eps:
            return Verdict(False, f"ahat does not strictly beat every alternative in state {s}, "
                           "where a does", {"state": s, "assumptions": report.to_dict()})
    per_b = {}
    failed = None
    for k, b in zip(B, M):
        iv = mixture_interval(a, b, ahat, eps)
        lam = iv.midpoint
        ok = iv.feasible and dominates(ahat, mixture(a, b, lam), "weak", eps)
        per_b[k] = {"lambda_lower": iv.lower, "lambda_upper": iv.upper,
                    "lambda": lam if ok else None, "holds": ok}
        if not ok and failed is None:
            failed = k
    cert = {"per_alternative": per_b, "assumptions": report.to_dict()}
    if failed is not None:
        c = per_b[failed]
        return Verdict(False, f"ahat dominates no mixture of a and {failed} "
                       f"(needs lambda >= {c['lambda_lower']:.6g} and <= {c['lambda_upper']:.6g})",
                       {**cert, "alternative": failed})
    return Verdict(True, "ahat dominates a mixture of a and each alternative", cert)


def _edge_utilities(a, ahat, M, theta, theta_p, iota):
    yield None
    kinks = sorted({float(a[theta_p]), float(ahat[theta_p]), *map(float, M[:, theta_p])})
    schedule = [iota] if iota is not None else []
    schedule += [2.0 ** -k for k in range(1, MAX_KINK_HALVINGS + 1)]
    for it in schedule:
        for x in kinks:
            yield UtilityFn.kinked(x, 1.0, it)


def _edge_witness(a, ahat, M, theta, theta_p, eps, iota) -> Witness | None:
    n = a.shape[0]
    for u in _edge_utilities(a, ahat, M, theta, theta_p, iota):
        g_bar = min(crossing_weight(a, b, theta, theta_p, u) for b in M)
        g_hat = min(crossing_weight(ahat, b, theta, theta_p, u) for b in M)
        if not np.isfinite(g_bar) or not g_hat < g_bar - eps:
            continue
        w = certify(u if u is not None else UtilityFn.identity(),
                    Belief.two_point(n, theta, theta_p, 0.5 * (g_bar + g_hat)),
                    a, list(M), ahat, "not-B-superior", eps,
                    note=f"edge ({theta}, {theta_p})")
        if w is not None:
            return w
    return None


def witness_not_B_superior(problem: DecisionProblem, a_id: str, ahat: ArrayLike,
                           B: Sequence[str] | None = None, eps: float = DEFAULT_EPS,
                           iota: float | None = None, fallback_trials: int = 100_000) -> Witness:
    """Concave utility and belief under which ``a`` beats all of ``B`` but ``ahat`` does not."""
    B = _resolve(problem, a_id, B)
    if check_B_superior(problem, a_id, ahat, B, eps).holds:
        raise RelationHoldsError("ahat is B-superior to a; no witness exists")
    a = problem[a_id]
    ahat = as_payoffs(ahat, problem.n)
    M = problem.matrix(B)
    part = partition_against(a, M, eps)
    alts = list(M)
    n = problem.n

    for s in part.a_states:
        best = M[:, s].max()
        if not ahat[s] > best + eps:
            belief = Belief.degenerate(n, s)
            for kind in ("strict-chain", "tie"):
                w = certify(UtilityFn.identity(), belief, a, alts, ahat, "not-B-superior", eps,
                            kind=kind, note=f"point mass on state {s}")
                if w is not None:
                    return w

    for s in part.c_states:
        if ahat[s] < a[s] - eps:
            for t in part.a_states:
                w = _tie_state_witness(a, alts, ahat, s, t, "not-B-superior", eps)
                if w is not None:
                    return w

    for t in part.a_states:
        for tp in part.b_states:
            w = _edge_witness(a, ahat, M, t, tp, eps, iota)
            if w is not None:
                return w

    w = falsify(a, alts, ahat, "concave", SamplerConfig(seed=0, trials=fallback_trials), eps)
    if w is not None:
        return w
    raise NumericalFailure("no certified witness found on any edge or by sampling")

"""Robust improvement of one action over another against a single alternative.

``check_b_superior`` decides whether every risk-averse agent who (strictly)
prefers ``a`` to ``b`` also (strictly) prefers ``ahat`` to ``b``, whatever the
agent's belief. ``check_b_better`` is the same question over all increasing
utilities. When a relation fails, the ``witness_*`` functions build a concrete
utility and two-point belief under which ``a`` beats ``b`` and ``b`` beats
``ahat``.
"""

from __future__ import annotations

import dataclasses
import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from robustimp.core import (
    DEFAULT_EPS,
    Belief,
    Utility,
    UtilityFn,
    as_payoffs,
    dominates,
    expected_utility,
    mixture,
    partition,
)
from robustimp.errors import (
    AssumptionError,
    DegeneracyError,
    DomainError,
    NumericalFailure,
    RelationHoldsError,
)

Claim = Literal["not-b-superior", "not-b-better", "not-B-superior"]

MAX_KINK_HALVINGS = 60


@dataclass(frozen=True)
class Verdict:
    """Outcome of a characterization check.

    ``certificate`` holds whatever makes the verdict checkable without rerunning:
    a mixture weight, per-alternative intervals, vertex lists, and so on.
    """

    holds: bool
    reason: str = ""
    certificate: Any = None

    def __bool__(self) -> bool:
        return self.holds


@dataclass(frozen=True)
class LambdaInterval:
    """Mixture weights for which ``ahat`` dominates ``lam*a + (1-lam)*b``."""

    lower: float
    upper: float
    feasible: bool

    @property
    def midpoint(self) -> float:
        return min(1.0, max(0.0, 0.5 * (self.lower + self.upper)))


@dataclass(frozen=True, eq=False)
class Witness:
    """A utility and belief under which ``a`` beats ``b`` but ``b`` beats ``ahat``.

    ``kind="strict-chain"`` certifies ``eu_a > eu_b + eps`` and
    ``eu_b > eu_ahat + eps``. ``kind="tie"`` is used when ``ahat`` ties ``b``
    (within ``eps``) where ``a`` strictly beats it, which breaks only the
    strict-preference half of the definition; then the certificate is
    ``eu_a > eu_b + eps`` and ``eu_ahat <= eu_b + eps``.
    """

    utility: Utility
    belief: Belief
    eu_a: float
    eu_b: float
    eu_ahat: float
    violated_claim: Claim
    kind: Literal["strict-chain", "tie"] = "strict-chain"
    note: str = ""

    @property
    def margin(self) -> float:
        return min(self.eu_a - self.eu_b, self.eu_b - self.eu_ahat)

    def to_dict(self) -> dict:
        u = self.utility
        udict = u.to_dict() if hasattr(u, "to_dict") else {"repr": repr(u)}
        return {
            "violated_claim": self.violated_claim,
            "kind": self.kind,
            "utility": udict,
            "belief": self.belief.probs.tolist(),
            "eu_a": self.eu_a,
            "eu_b": self.eu_b,
            "eu_ahat": self.eu_ahat,
            "note": self.note,
        }


def _eus(u: Utility, belief: Belief, a, alternatives: Sequence, ahat) -> tuple[float, float, float]:
    eu_alts = [expected_utility(b, belief, u) for b in alternatives]
    return expected_utility(a, belief, u), max(eu_alts), expected_utility(ahat, belief, u)


def revalidate_witness(w: Witness, a: ArrayLike, alternatives: ArrayLike | Sequence[ArrayLike],
                       ahat: ArrayLike, eps: float = DEFAULT_EPS) -> bool:
    """Recompute a witness's expectations from scratch and test its inequality chain.

    ``alternatives`` is either the single action ``b`` or a list of actions,
    in which case the best of them plays the role of ``b``.
    """
    alts = np.atleast_2d(np.asarray(alternatives, dtype=float))
    u = w.utility
    if w.violated_claim == "not-b-superior" or w.violated_claim == "not-B-superior":
        if not getattr(u, "concave", False):
            return False
    if isinstance(u, UtilityFn) and not np.all(u.slopes > 0):
        return False
    eu_a, eu_b, eu_h = _eus(u, w.belief, a, list(alts), ahat)
    tol = 1e-9 * max(1.0, abs(eu_a), abs(eu_b), abs(eu_h))
    if max(abs(eu_a - w.eu_a), abs(eu_b - w.eu_b), abs(eu_h - w.eu_ahat)) > tol:
        return False
    if w.kind == "strict-chain":
        return eu_a > eu_b + eps and eu_b > eu_h + eps
    return eu_a > eu_b + eps and eu_h <= eu_b + eps


def certify(u: UtilityFn, belief: Belief, a, alternatives: Sequence, ahat, claim: Claim,
            eps: float, kind: str = "strict-chain", note: str = "") -> Witness | None:
    """Package ``(u, belief)`` as a witness if its chain is strict.

    A strict chain whose margin does not clear ``eps`` is rescaled by a power
    of two; positive rescaling keeps the utility in its class.
    """
    eu_a, eu_b, eu_h = _eus(u, belief, a, alternatives, ahat)
    if kind == "strict-chain":
        margin = min(eu_a - eu_b, eu_b - eu_h)
    else:
        margin = eu_a - eu_b
    if not margin > 0:
        return None
    if margin <= eps:
        u = u.scaled(2.0 ** math.ceil(math.log2(2.0 * eps / margin)))
        eu_a, eu_b, eu_h = _eus(u, belief, a, alternatives, ahat)
    w = Witness(u, belief, eu_a, eu_b, eu_h, claim, kind, note)
    if not revalidate_witness(w, a, np.vstack(alternatives), ahat, eps):
        return None
    return w


def _triple(a, b, ahat) -> tuple[NDArray, NDArray, NDArray]:
    a = as_payoffs(a)
    b = as_payoffs(b, a.shape[0])
    ahat = as_payoffs(ahat, a.shape[0])
    return a, b, ahat


def _require_no_dominance(a, b, eps):
    part = partition(a, b, eps)
    if not part.a_states:
        raise AssumptionError("action b weakly dominates action a", report=part)
    if not part.b_states:
        raise AssumptionError("action a weakly dominates action b", report=part)
    return part


def lambda_interval(a: ArrayLike, b: ArrayLike, ahat: ArrayLike,
                    eps: float = DEFAULT_EPS) -> LambdaInterval:
    """Range of mixture weights ``ahat`` dominates on the states where ``a`` and ``b`` differ.

    ``lower`` is not clipped at 1 and may exceed it, which is how an empty
    range shows up.
    """
    a, b, ahat = _triple(a, b, ahat)
    part = _require_no_dominance(a, b, eps)
    A = np.array(part.a_states)
    B = np.array(part.b_states)
    upper = min(1.0, float(np.min((ahat[A] - b[A]) / (a[A] - b[A]))))
    lower = max(0.0, float(np.max((b[B] - ahat[B]) / (b[B] - a[B]))))
    return LambdaInterval(lower, upper, lower <= upper + eps)


def check_b_superior(a: ArrayLike, b: ArrayLike, ahat: ArrayLike,
                     eps: float = DEFAULT_EPS) -> Verdict:
    """Is ``ahat`` preferred to ``b`` by every risk-averse agent who prefers ``a``?

    Holds iff ``ahat`` strictly beats ``b`` wherever ``a`` does and ``ahat``
    weakly dominates some mixture of ``a`` and ``b``.
    """
    a, b, ahat = _triple(a, b, ahat)
    part = _require_no_dominance(a, b, eps)
    for s in part.a_states:
        if not ahat[s] > b[s] + eps:
            return Verdict(False, f"ahat does not strictly beat b in state {s}, where a beats b",
                           {"state": s})
    for s in part.c_states:
        if ahat[s] < a[s] - eps:
            return Verdict(False, f"ahat falls below a in state {s}, where a ties b",
                           {"state": s})
    iv = lambda_interval(a, b, ahat, eps)
    cert = {"lambda_lower": iv.lower, "lambda_upper": iv.upper}
    if not iv.feasible:
        return Verdict(False, "no mixture of a and b is dominated by ahat "
                       f"(needs lambda >= {iv.lower:.6g} and <= {iv.upper:.6g})", cert)
    lam = iv.midpoint
    if not dominates(ahat, mixture(a, b, lam), "weak", eps):
        return Verdict(False, f"ahat does not dominate the lambda={lam:.6g} mixture", cert)
    return Verdict(True, "ahat dominates a mixture of a and b", {**cert, "lambda": lam})


def check_b_better(a: ArrayLike, b: ArrayLike, ahat: ArrayLike,
                   eps: float = DEFAULT_EPS) -> Verdict:
    """Same question as :func:`check_b_superior` over all increasing utilities."""
    a, b, ahat = _triple(a, b, ahat)
    part = _require_no_dominance(a, b, eps)
    for s in part.a_states:
        if not ahat[s] > b[s] + eps:
            return Verdict(False, f"ahat does not strictly beat b in state {s}, where a beats b",
                           {"state": s})
    if dominates(ahat, a, "weak", eps):
        return Verdict(True, "ahat dominates a", {"dominates": "a", "lambda": 1.0})
    if dominates(ahat, b, "weak", eps):
        return Verdict(True, "ahat dominates b", {"dominates": "b", "lambda": 0.0})
    return Verdict(False, "ahat dominates neither a nor b", None)


def two_point_indifference(a: ArrayLike, b: ArrayLike, u: Utility | None,
                           theta: int, theta_p: int, eps: float = DEFAULT_EPS) -> float:
    """Weight on ``theta_p`` at which ``a`` and ``b`` are indifferent on the edge {theta, theta_p}.

    Requires ``a`` better than ``b`` at ``theta`` and worse at ``theta_p``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if not (a[theta] > b[theta] and a[theta_p] < b[theta_p]):
        raise DomainError(f"need a > b at state {theta} and a < b at state {theta_p}")
    f = (lambda x: x) if u is None else u
    gain = float(f(a[theta])) - float(f(b[theta]))
    loss = float(f(b[theta_p])) - float(f(a[theta_p]))
    den = gain + loss
    if den <= eps:
        raise DegeneracyError(
            f"utility differences on states ({theta}, {theta_p}) vanish (denominator {den:.3g})")
    return gain / den


def _kink_schedule(iota: float | None):
    if iota is not None:
        yield float(iota)
    for k in range(1, MAX_KINK_HALVINGS + 1):
        yield 2.0 ** -k


def pair_witness(a, b, ahat, theta: int, theta_p: int, claim: Claim, eps: float,
                 alternatives: Sequence | None = None, iota: float | None = None) -> Witness:
    """Concave witness on the edge {theta, theta_p} for a pairwise-mixture violation.

    Risk neutrality suffices when ``ahat``'s indifference point lies strictly
    before ``a``'s; otherwise utility is flattened above ``a[theta_p]`` with
    slope ``iota``, shrunk until the two indifference points separate.
    """
    n = a.shape[0]
    alts = [b] if alternatives is None else list(alternatives)
    lhs = (b[theta_p] - a[theta_p]) * (ahat[theta] - b[theta])
    rhs = (a[theta] - b[theta]) * (b[theta_p] - ahat[theta_p])
    if lhs < rhs:
        u = UtilityFn.identity()
        mu_bar = two_point_indifference(a, b, None, theta, theta_p, 0.0)
        mu_hat = two_point_indifference(ahat, b, None, theta, theta_p, 0.0)
        belief = Belief.two_point(n, theta, theta_p, 0.5 * (mu_bar + mu_hat))
        w = certify(u, belief, a, alts, ahat, claim, eps,
                    note=f"risk-neutral on states ({theta}, {theta_p})")
        if w is not None:
            return w
    last_gap = None
    for iota_k in _kink_schedule(iota):
        u = UtilityFn.kinked(a[theta_p], 1.0, iota_k)
        try:
            mu_bar = two_point_indifference(a, b, u, theta, theta_p, 0.0)
            mu_hat = two_point_indifference(ahat, b, u, theta, theta_p, 0.0)
        except (DegeneracyError, DomainError):
            continue
        last_gap = mu_bar - mu_hat
        if mu_bar > mu_hat + eps:
            belief = Belief.two_point(n, theta, theta_p, 0.5 * (mu_bar + mu_hat))
            w = certify(u, belief, a, alts, ahat, claim, eps,
                        note=f"kink at {a[theta_p]:.6g}, slope above {iota_k:.3g}, "
                             f"states ({theta}, {theta_p})")
            if w is not None:
                return w
    raise NumericalFailure(
        f"kinked utility never separated states ({theta}, {theta_p}); last gap {last_gap!r}")


def _degenerate_or_tie(a, alts, ahat, state, claim, eps, note) -> Witness | None:
    n = a.shape[0]
    belief = Belief.degenerate(n, state)
    u = UtilityFn.identity()
    w = certify(u, belief, a, alts, ahat, claim, eps, note=note)
    if w is None:
        w = certify(u, belief, a, alts, ahat, claim, eps, kind="tie",
                    note=note + " (tie: only strict preference breaks)")
    return w


def _tie_state_witness(a, alts, ahat, tie_state, a_state, claim, eps) -> Witness | None:
    """Two-point belief mixing a tie state where ``ahat`` loses with a state ``a`` wins."""
    n = a.shape[0]
    best_alt = np.max(np.vstack(alts), axis=0)
    gain = a[a_state] - best_alt[a_state]
    deficit = best_alt[tie_state] - ahat[tie_state]
    surplus = ahat[a_state] - best_alt[a_state]
    t = deficit / (gain + deficit + max(surplus, 0.0))
    for _ in range(60):
        belief = Belief.two_point(n, tie_state, a_state, t)
        w = certify(UtilityFn.identity(), belief, a, alts, ahat, claim, eps,
                    note=f"risk-neutral on states ({tie_state}, {a_state})")
        if w is not None:
            return w
        t *= 0.5
    return None


def witness_not_b_superior(a: ArrayLike, b: ArrayLike, ahat: ArrayLike,
                           eps: float = DEFAULT_EPS, iota: float | None = None) -> Witness:
    """Concave utility and belief ranking ``a`` over ``b`` over ``ahat``.

    ``iota`` optionally fixes the first slope tried for the kinked utility.
    """
    a, b, ahat = _triple(a, b, ahat)
    if check_b_superior(a, b, ahat, eps).holds:
        raise RelationHoldsError("ahat is b-superior to a; no witness exists")
    part = partition(a, b, eps)
    claim: Claim = "not-b-superior"

    bad_a = [s for s in part.a_states if not ahat[s] > b[s] + eps]
    if bad_a:
        s = min(bad_a, key=lambda k: ahat[k] - b[k])
        w = _degenerate_or_tie(a, [b], ahat, s, claim, eps, f"point mass on state {s}")
        if w is not None:
            return w

    bad_c = [s for s in part.c_states if ahat[s] < a[s] - eps]
    if bad_c:
        s = min(bad_c, key=lambda k: ahat[k] - a[k])
        for t in sorted(part.a_states, key=lambda k: -(a[k] - b[k])):
            w = _tie_state_witness(a, [b], ahat, s, t, claim, eps)
            if w is not None:
                return w

    pairs = []
    for t in part.a_states:
        up = min(1.0, (ahat[t] - b[t]) / (a[t] - b[t]))
        for tp in part.b_states:
            lo = max(0.0, (b[tp] - ahat[tp]) / (b[tp] - a[tp]))
            pairs.append((lo - up, t, tp))
    pairs.sort(key=lambda x: (-x[0], x[1], x[2]))
    failures = []
    for gap, t, tp in pairs:
        if gap <= 0:
            break
        try:
            return pair_witness(a, b, ahat, t, tp, claim, eps, iota=iota)
        except NumericalFailure as exc:
            failures.append(str(exc))
    raise NumericalFailure("no certified witness found: " + ("; ".join(failures) or
                           "no violating state pair"))


def witness_not_b_better(a: ArrayLike, b: ArrayLike, ahat: ArrayLike,
                         eps: float = DEFAULT_EPS, iota: float | None = None) -> Witness:
    """Increasing (possibly convex) utility and belief ranking ``a`` over ``b`` over ``ahat``."""
    a, b, ahat = _triple(a, b, ahat)
    if check_b_better(a, b, ahat, eps).holds:
        raise RelationHoldsError("ahat is b-better than a; no witness exists")
    if not check_b_superior(a, b, ahat, eps).holds:
        w = witness_not_b_superior(a, b, ahat, eps, iota)
        return dataclasses.replace(w, violated_claim="not-b-better")
    part = partition(a, b, eps)
    thetas = [s for s in part.a_states if b[s] + eps < ahat[s] < a[s] - eps]
    primes = [s for s in part.b_states if a[s] + eps < ahat[s] < b[s] - eps]
    if not thetas or not primes:
        raise NumericalFailure("no state pair with ahat strictly between a and b on both states")
    thetas.sort(key=lambda s: -(a[s] - ahat[s]))
    primes.sort(key=lambda s: -(b[s] - ahat[s]))
    n = a.shape[0]
    last_gap = None
    for t in thetas:
        for tp in primes:
            for iota_k in _kink_schedule(iota):
                # flat below ahat[t] (slope iota), identity above: convex, not concave
                u = UtilityFn.kinked(ahat[t], iota_k, 1.0)
                mu_bar = two_point_indifference(a, b, u, t, tp, 0.0)
                mu_hat = two_point_indifference(ahat, b, u, t, tp, 0.0)
                last_gap = mu_bar - mu_hat
                if mu_bar > mu_hat + eps:
                    belief = Belief.two_point(n, t, tp, 0.5 * (mu_bar + mu_hat))
                    w = certify(u, belief, a, [b], ahat, "not-b-better", eps,
                                note=f"kink at {ahat[t]:.6g}, slope below {iota_k:.3g}, "
                                     f"states ({t}, {tp})")
                    if w is not None:
                        return w
    raise NumericalFailure(f"kinked utility never separated indifference points; last gap {last_gap!r}")


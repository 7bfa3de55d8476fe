"""Robust improvement when the agent's utility is known.

With utility fixed (risk neutral after transforming payoffs), the beliefs at
which ``a`` is optimal form a polytope ``P_a`` in the simplex. ``ahat``
improves on ``a`` exactly when it strictly beats the alternatives in every
state where ``a`` is uniquely best, and matches ``a`` in expectation at every
vertex of each facet where ``a`` ties an alternative.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from robustimp.core import DEFAULT_EPS, Belief, DecisionProblem, Utility, as_payoffs, transform_payoffs
from robustimp.errors import AssumptionError, DegeneracyError, DomainError, ResourceError
from robustimp.superiority import Verdict

MAX_STATES = 8
MAX_SUBSETS = 250_000
FEAS_TOL = 1e-9
DEDUP_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class BeliefPolytope:
    """Beliefs where one action is optimal.

    Half-spaces are ``normal @ mu <= offset``; the first ``len(labels) - n``
    come from alternatives (``labels`` names them), the last ``n`` are the
    simplex facets ``mu_s >= 0``. The constraint ``sum(mu) == 1`` is implicit.
    """

    action: str
    normals: NDArray[np.float64]
    offsets: NDArray[np.float64]
    labels: tuple[str, ...]
    vertices: tuple[Belief, ...]
    dim: int

    @property
    def n(self) -> int:
        return self.normals.shape[1]

    @property
    def halfspaces(self) -> list[tuple[NDArray[np.float64], float]]:
        return [(self.normals[i], float(self.offsets[i])) for i in range(len(self.offsets))]

    def vertex_array(self) -> NDArray[np.float64]:
        return np.array([v.probs for v in self.vertices])

    def contains(self, mu: ArrayLike, tol: float = FEAS_TOL) -> bool:
        mu = np.asarray(mu, dtype=float)
        return bool(abs(mu.sum() - 1.0) <= tol and np.all(self.normals @ mu <= self.offsets + tol))

    def to_dict(self) -> dict:
        return {
            "action": self.action,
            "dim": self.dim,
            "vertices": [v.probs.tolist() for v in self.vertices],
        }


def _affine_dim(points: NDArray, tol: float = 1e-9) -> int:
    if len(points) == 0:
        return -1
    if len(points) == 1:
        return 0
    diffs = points[1:] - points[0]
    return int(np.linalg.matrix_rank(diffs, tol=tol))


def _require_no_weak_dominance(problem: DecisionProblem, eps: float):
    ids = problem.action_ids
    for x, y in itertools.permutations(ids, 2):
        if np.all(problem[x] >= problem[y] - eps):
            raise AssumptionError(f"action {y} is weakly dominated by action {x}")


def _prepare(problem: DecisionProblem, a_id: str, u: Utility | None) -> DecisionProblem:
    if a_id not in problem.actions:
        raise DomainError(f"unknown action {a_id!r}")
    if len(problem.action_ids) < 2:
        raise DomainError("need at least two actions")
    if problem.n > MAX_STATES:
        raise ResourceError(f"{problem.n} states exceeds the {MAX_STATES}-state limit")
    return problem if u is None else problem.transformed(u)


def polytope_of(a_id: str, problem: DecisionProblem, eps: float = DEFAULT_EPS,
                u: Utility | None = None) -> BeliefPolytope:
    """Vertices of the optimality region of ``a_id`` by exhaustive basis enumeration."""
    problem = _prepare(problem, a_id, u)
    _require_no_weak_dominance(problem, eps)
    n = problem.n
    a = problem[a_id]
    labels = tuple(k for k in problem.action_ids if k != a_id)
    normals = np.vstack([problem[k] - a for k in labels] + [-np.eye(n)])
    offsets = np.zeros(normals.shape[0])
    total = math.comb(normals.shape[0], n - 1)
    if total > MAX_SUBSETS:
        raise ResourceError(f"{total} constraint subsets exceeds the {MAX_SUBSETS} limit")

    scale = max(1.0, float(np.abs(normals).max()))
    found: list[NDArray] = []
    for rows in itertools.combinations(range(normals.shape[0]), n - 1):
        M = np.vstack([normals[list(rows)], np.ones((1, n))])
        if np.linalg.matrix_rank(M, tol=1e-10 * scale) < n:
            continue
        mu = np.linalg.solve(M, np.append(offsets[list(rows)], 1.0))
        if np.any(normals @ mu > offsets + FEAS_TOL * scale):
            continue
        mu = np.clip(mu, 0.0, None)
        mu /= mu.sum()
        if any(np.max(np.abs(mu - v)) <= DEDUP_TOL for v in found):
            continue
        found.append(mu)
    if not found:
        raise DegeneracyError(f"action {a_id} is optimal at no belief")
    found.sort(key=lambda v: tuple(-v))
    V = np.array(found)
    dim = _affine_dim(V)
    if dim < n - 1:
        raise DegeneracyError(f"optimality region of {a_id} has dimension {dim} < {n - 1}")
    return BeliefPolytope(a_id, normals, offsets, labels, tuple(Belief(v) for v in V), dim)


def face_vertices(poly: BeliefPolytope, b_id: str, tol: float = FEAS_TOL) -> NDArray[np.float64]:
    """Vertices of the polytope lying on the indifference hyperplane with ``b_id``."""
    i = poly.labels.index(b_id)
    V = poly.vertex_array()
    scale = max(1.0, float(np.abs(poly.normals[i]).max()))
    on = np.abs(V @ poly.normals[i]) <= tol * scale
    return V[on]


def a_relevant(a_id: str, problem: DecisionProblem, eps: float = DEFAULT_EPS,
               u: Utility | None = None, poly: BeliefPolytope | None = None) -> list[str]:
    """Alternatives whose indifference hyperplane cuts a facet of the polytope."""
    poly = poly if poly is not None else polytope_of(a_id, problem, eps, u)
    n = poly.n
    return [b for b in poly.labels if _affine_dim(face_vertices(poly, b)) == n - 2]


def uniquely_optimal_states(a: NDArray, others: NDArray, eps: float) -> list[int]:
    return [int(s) for s in np.flatnonzero(a > others.max(axis=0) + eps)]


def check_u_improves(a_id: str, ahat: ArrayLike, problem: DecisionProblem,
                     eps: float = DEFAULT_EPS, u: Utility | None = None) -> Verdict:
    """Does ``ahat`` keep (and strictly keep) every belief at which ``a_id`` is chosen?

    A known utility ``u`` is applied to all payoffs, ``ahat`` included,
    before the risk-neutral test.
    """
    poly = polytope_of(a_id, problem, eps, u)
    work = _prepare(problem, a_id, u)
    ahat = as_payoffs(ahat, problem.n)
    if u is not None:
        ahat = transform_payoffs(ahat, u)
    a = work[a_id]
    others = work.matrix(list(poly.labels))
    best = others.max(axis=0)
    for s in uniquely_optimal_states(a, others, eps):
        if not ahat[s] > best[s] + eps:
            return Verdict(False, f"ahat does not strictly beat every alternative in state {s}, "
                           "where a is uniquely optimal", {"state": s})
    relevant = a_relevant(a_id, problem, eps, poly=poly)
    faces = {}
    worst = None
    for b in relevant:
        V = face_vertices(poly, b)
        gaps = V @ (ahat - a)
        faces[b] = {"vertices": V.tolist(), "gaps": gaps.tolist()}
        k = int(np.argmin(gaps))
        if worst is None or gaps[k] < worst[0]:
            worst = (float(gaps[k]), b, V[k])
    cert = {"relevant": relevant, "faces": faces, "polytope": poly.to_dict()}
    if worst is not None and worst[0] < -eps:
        return Verdict(False, f"ahat falls short of a by {-worst[0]:.6g} at vertex "
                       f"{np.round(worst[2], 12).tolist()} of the face shared with {worst[1]}",
                       {**cert, "vertex": worst[2].tolist(), "alternative": worst[1]})
    return Verdict(True, "ahat matches or beats a at every relevant facet vertex", cert)

"""Decision problems, beliefs, piecewise-linear utilities and expected utility.

Everything here is immutable once built. Payoff vectors are plain 1-D float
arrays indexed by state; the state order of a :class:`DecisionProblem` is the
order used everywhere else.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from robustimp.errors import DimensionError, DomainError

DEFAULT_EPS = 1e-9
BELIEF_TOL = 1e-12

Utility = Callable[[ArrayLike], "NDArray[np.float64] | float"]


def as_payoffs(x: ArrayLike, n: int | None = None) -> NDArray[np.float64]:
    """Coerce ``x`` to a finite 1-D float vector (optionally of length ``n``)."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise DimensionError(f"payoff vector must be 1-D, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise DimensionError(f"expected {n} payoffs, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("payoffs must be finite")
    return arr


def _frozen(arr: NDArray[np.float64]) -> NDArray[np.float64]:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DecisionProblem:
    """A finite set of states and named actions with state-indexed payoffs."""

    states: tuple[str, ...]
    actions: Mapping[str, NDArray[np.float64]]

    def __init__(self, states: Iterable[object], actions: Mapping[str, ArrayLike]):
        states = tuple(str(s) for s in states)
        if len(states) < 2:
            raise DomainError("a decision problem needs at least two states")
        if len(set(states)) != len(states):
            raise DomainError("state labels must be unique")
        built = {}
        for name, pay in actions.items():
            name = str(name)
            if name in built:
                raise DomainError(f"duplicate action id {name!r}")
            built[name] = _frozen(as_payoffs(pay, len(states)))
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "actions", MappingProxyType(built))

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def action_ids(self) -> tuple[str, ...]:
        return tuple(self.actions)

    def __getitem__(self, action_id: str) -> NDArray[np.float64]:
        try:
            return self.actions[action_id]
        except KeyError:
            raise KeyError(f"unknown action {action_id!r}") from None

    def matrix(self, ids: Sequence[str] | None = None) -> NDArray[np.float64]:
        """Payoffs stacked as an ``(len(ids), n)`` array."""
        ids = self.action_ids if ids is None else ids
        return np.vstack([self[i] for i in ids])

    def transformed(self, ubar: Utility) -> DecisionProblem:
        """Apply a known baseline utility to every payoff (lower-bound hook)."""
        return DecisionProblem(
            self.states, {k: transform_payoffs(v, ubar) for k, v in self.actions.items()}
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DecisionProblem):
            return NotImplemented
        return (
            self.states == other.states
            and list(self.actions) == list(other.actions)
            and all(np.array_equal(self.actions[k], other.actions[k]) for k in self.actions)
        )

    def __hash__(self) -> int:
        return hash((self.states, tuple(self.actions)))


@dataclass(frozen=True)
class Belief:
    """A probability vector over the states of a problem."""

    probs: NDArray[np.float64]

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.shape[0] < 1:
            raise DimensionError("belief must be a non-empty 1-D vector")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise DomainError("belief entries must be finite and nonnegative")
        if abs(p.sum() - 1.0) > BELIEF_TOL:
            raise DomainError(f"belief must sum to 1 (got {p.sum()!r})")
        object.__setattr__(self, "probs", _frozen(p))

    @classmethod
    def degenerate(cls, n: int, state: int) -> Belief:
        p = np.zeros(n)
        p[state] = 1.0
        return cls(p)

    @classmethod
    def two_point(cls, n: int, first: int, second: int, weight_second: float) -> Belief:
        """Belief on the edge between ``first`` and ``second``."""
        if not 0.0 <= weight_second <= 1.0:
            raise DomainError("edge weight must lie in [0, 1]")
        p = np.zeros(n)
        p[first] += 1.0 - weight_second
        p[second] += weight_second
        return cls(p)

    @property
    def n(self) -> int:
        return self.probs.shape[0]

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Belief):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    def __hash__(self) -> int:
        return hash(self.probs.tobytes())


@dataclass(frozen=True, eq=False)
class UtilityFn:
    """Continuous, strictly increasing piecewise-linear utility of money.

    Defined by knots ``(xs[i], ys[i])`` with linear extrapolation of slope
    ``left_slope`` below ``xs[0]`` and ``right_slope`` above ``xs[-1]``. With
    ``concave=True`` construction fails unless the slope sequence
    ``left_slope, segment slopes..., right_slope`` is nonincreasing.
    """

    xs: NDArray[np.float64]
    ys: NDArray[np.float64]
    left_slope: float = 1.0
    right_slope: float = 1.0
    concave: bool = False

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float).ravel()
        ys = np.asarray(self.ys, dtype=float).ravel()
        if xs.shape != ys.shape or xs.size == 0:
            raise DimensionError("knot x and y arrays must be non-empty and equal length")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise DomainError("knots must be finite")
        if np.any(np.diff(xs) <= 0):
            raise DomainError("knot x-coordinates must be strictly increasing")
        object.__setattr__(self, "xs", _frozen(xs))
        object.__setattr__(self, "ys", _frozen(ys))
        object.__setattr__(self, "left_slope", float(self.left_slope))
        object.__setattr__(self, "right_slope", float(self.right_slope))
        slopes = self._raw_slopes()
        if not np.all(slopes > 0) or not np.all(np.isfinite(slopes)):
            raise DomainError("utility must be strictly increasing (all slopes > 0)")
        if self.concave:
            # slack: rounding of dy / dx grows as knots get close
            ay = np.abs(ys)
            seg_err = 4 * np.finfo(float).eps * (ay[:-1] + ay[1:]) / np.diff(xs)
            err = np.concatenate(([0.0], seg_err, [0.0]))
            slack = err[:-1] + err[1:] + 1e-12 * np.maximum(slopes[:-1], slopes[1:])
            if np.any(np.diff(slopes) > slack):
                raise DomainError("concave utility needs nonincreasing slopes")

    @property
    def segment_slopes(self) -> NDArray[np.float64]:
        return np.diff(self.ys) / np.diff(self.xs)

    def _raw_slopes(self) -> NDArray[np.float64]:
        return np.concatenate(([self.left_slope], self.segment_slopes, [self.right_slope]))

    @property
    def slopes(self) -> NDArray[np.float64]:
        """All slopes from left extrapolation to right extrapolation.

        For concave utilities rounding noise is removed so the sequence is
        exactly nonincreasing.
        """
        s = self._raw_slopes()
        return np.minimum.accumulate(s) if self.concave else s

    @property
    def knots(self) -> list[tuple[float, float]]:
        return list(zip(self.xs.tolist(), self.ys.tolist()))

    def __call__(self, x: ArrayLike):
        xv = np.asarray(x, dtype=float)
        out = np.interp(xv, self.xs, self.ys)
        lo = xv < self.xs[0]
        hi = xv > self.xs[-1]
        out = np.where(lo, self.ys[0] + self.left_slope * (xv - self.xs[0]), out)
        out = np.where(hi, self.ys[-1] + self.right_slope * (xv - self.xs[-1]), out)
        return float(out) if np.ndim(out) == 0 else out

    @classmethod
    def identity(cls) -> UtilityFn:
        return cls(np.array([0.0]), np.array([0.0]), 1.0, 1.0, concave=True)

    @classmethod
    def kinked(cls, kink: float, slope_below: float, slope_above: float,
               value_at_kink: float | None = None) -> UtilityFn:
        """Two-piece linear utility; concave iff ``slope_below >= slope_above``."""
        y = float(kink) if value_at_kink is None else float(value_at_kink)
        return cls(
            np.array([float(kink)]), np.array([y]), slope_below, slope_above,
            concave=slope_below >= slope_above,
        )

    @classmethod
    def from_slopes(cls, x0: float, y0: float, breakpoints: Sequence[float],
                    slopes: Sequence[float], concave: bool = False) -> UtilityFn:
        """Build from a start knot, later breakpoints and the ``len(breakpoints)+2`` slopes.

        ``slopes[0]`` is the left extrapolation slope, ``slopes[-1]`` the right one.
        """
        if len(slopes) != len(breakpoints) + 2:
            raise DimensionError("need len(breakpoints) + 2 slopes")
        xs = [float(x0), *map(float, breakpoints)]
        ys = [float(y0)]
        for i in range(1, len(xs)):
            ys.append(ys[-1] + slopes[i] * (xs[i] - xs[i - 1]))
        return cls(np.array(xs), np.array(ys), slopes[0], slopes[-1], concave=concave)

    def scaled(self, factor: float) -> UtilityFn:
        """Positive rescaling ``factor * u``; stays in the same utility class."""
        if factor <= 0:
            raise DomainError("scale factor must be positive")
        return UtilityFn(self.xs, self.ys * factor, self.left_slope * factor,
                         self.right_slope * factor, self.concave)

    def to_dict(self) -> dict:
        return {
            "knots": [list(k) for k in self.knots],
            "left_slope": self.left_slope,
            "right_slope": self.right_slope,
            "concave": self.concave,
        }

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, UtilityFn):
            return NotImplemented
        return (np.array_equal(self.xs, other.xs) and np.array_equal(self.ys, other.ys)
                and self.left_slope == other.left_slope
                and self.right_slope == other.right_slope
                and self.concave == other.concave)

    def __hash__(self) -> int:
        return hash((self.xs.tobytes(), self.ys.tobytes(), self.left_slope, self.right_slope))


@dataclass(frozen=True)
class SqrtUtility:
    """``u(x) = sqrt(shift + x) + offset``; concave, defined for ``x > -shift``."""

    shift: float = 1.0
    offset: float = -3.0
    concave: bool = field(default=True, init=False)

    def __call__(self, x: ArrayLike):
        xv = np.asarray(x, dtype=float)
        if np.any(xv + self.shift < 0):
            raise DomainError(f"sqrt utility undefined below {-self.shift}")
        out = np.sqrt(self.shift + xv) + self.offset
        return float(out) if np.ndim(out) == 0 else out

    def to_dict(self) -> dict:
        return {"family": "sqrt", "shift": self.shift, "offset": self.offset}


@dataclass(frozen=True)
class StatePartition:
    """States where ``a`` beats ``b`` / loses to ``b`` / ties with ``b``."""

    a_states: tuple[int, ...]
    b_states: tuple[int, ...]
    c_states: tuple[int, ...]


def _belief_vector(belief: Belief | ArrayLike) -> NDArray[np.float64]:
    return belief.probs if isinstance(belief, Belief) else np.asarray(belief, dtype=float)


def expected_utility(payoffs: ArrayLike, belief: Belief | ArrayLike, u: Utility | None = None) -> float:
    """``sum_s belief[s] * u(payoffs[s])``; ``u=None`` means risk neutral."""
    x = np.asarray(payoffs, dtype=float)
    p = _belief_vector(belief)
    if x.shape != p.shape:
        raise DimensionError(f"payoffs {x.shape} and belief {p.shape} differ in length")
    vals = x if u is None else np.asarray(u(x), dtype=float)
    return float(np.dot(p, vals))


def partition(a: ArrayLike, b: ArrayLike, eps: float = DEFAULT_EPS) -> StatePartition:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionError("payoff vectors differ in length")
    diff = a - b
    tie = np.abs(diff) <= eps
    return StatePartition(
        tuple(np.flatnonzero(~tie & (diff > 0)).tolist()),
        tuple(np.flatnonzero(~tie & (diff < 0)).tolist()),
        tuple(np.flatnonzero(tie).tolist()),
    )


def mixture(a: ArrayLike, b: ArrayLike, lam: float) -> NDArray[np.float64]:
    """State-wise convex combination ``lam * a + (1 - lam) * b``."""
    if not 0.0 <= lam <= 1.0 or math.isnan(lam):
        raise DomainError(f"mixture weight {lam!r} outside [0, 1]")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionError("payoff vectors differ in length")
    return lam * a + (1.0 - lam) * b


def dominates(x: ArrayLike, y: ArrayLike,
              mode: Literal["weak", "strict-somewhere"] = "weak",
              eps: float = DEFAULT_EPS) -> bool:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DimensionError("payoff vectors differ in length")
    weak = bool(np.all(x >= y - eps))
    if mode == "weak":
        return weak
    if mode == "strict-somewhere":
        return weak and bool(np.any(x > y + eps))
    raise ValueError(f"unknown dominance mode {mode!r}")


def transform_payoffs(payoffs: ArrayLike, ubar: Utility) -> NDArray[np.float64]:
    """Map payoffs through a known baseline utility before any robustness check.

    If the agent's utility is known to be a concave increasing transform of
    ``ubar``, every characterization applies verbatim to the transformed
    payoffs.
    """
    return as_payoffs(np.asarray(ubar(np.asarray(payoffs, dtype=float)), dtype=float).ravel())

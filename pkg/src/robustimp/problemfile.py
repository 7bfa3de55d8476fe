"""JSON problem files: parsing, validation and serialization.

A problem file is a UTF-8 JSON object::

    {
      "schema": "robustimp/problem-v1",
      "states": ["low", "high"],
      "actions": {"a": [1, 0], "b": [0, 1]},
      "incumbent": "a",
      "candidate": [0.4, 0.6],
      "utility": {"family": "sqrt", "shift": 1, "offset": -3},
      "prior": [0.5, 0.5],
      "cost": {"family": "entropy", "kappa": 1.0}
    }

Numbers may be JSON numbers or exact fractions written as strings
(``"3/20"``). Only ``schema``, ``states`` and ``actions`` are required.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib.resources import files
from pathlib import Path
from typing import Any

import numpy as np

from robustimp.core import Belief, DecisionProblem, SqrtUtility, Utility, UtilityFn
from robustimp.errors import ParseError, RobustImpError
from robustimp.infoacq import CostPotential

SCHEMA = "robustimp/problem-v1"
FIELDS = ("schema", "states", "actions", "candidate", "incumbent", "utility", "prior", "cost",
          "application", "description")


def _number(value: Any, where: str) -> Fraction:
    if isinstance(value, bool):
        raise ParseError(f"{where}: expected a number, got a boolean")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not np.isfinite(value):
            raise ParseError(f"{where}: number must be finite")
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"{where}: cannot read {value!r} as a number") from None
    raise ParseError(f"{where}: expected a number, got {type(value).__name__}")


def _vector(value: Any, where: str, n: int | None = None) -> list[Fraction]:
    if not isinstance(value, list):
        raise ParseError(f"{where}: expected a list of numbers")
    out = [_number(v, f"{where}[{i}]") for i, v in enumerate(value)]
    if n is not None and len(out) != n:
        raise ParseError(f"{where}: expected {n} entries, got {len(out)}")
    return out


def _floats(xs: list[Fraction]) -> np.ndarray:
    return np.array([float(x) for x in xs])


def parse_utility(obj: Any, where: str = "utility") -> Utility:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    family = obj.get("family", "piecewise")
    try:
        if family == "sqrt":
            return SqrtUtility(float(_number(obj.get("shift", 1), f"{where}.shift")),
                               float(_number(obj.get("offset", -3), f"{where}.offset")))
        if family == "kinked":
            return UtilityFn.kinked(float(_number(obj["kink"], f"{where}.kink")),
                                    float(_number(obj["slope_below"], f"{where}.slope_below")),
                                    float(_number(obj["slope_above"], f"{where}.slope_above")))
        if family == "piecewise":
            knots = obj["knots"]
            if not isinstance(knots, list) or not knots:
                raise ParseError(f"{where}.knots: expected a nonempty list of [x, y] pairs")
            xs, ys = [], []
            for i, k in enumerate(knots):
                if not isinstance(k, list) or len(k) != 2:
                    raise ParseError(f"{where}.knots[{i}]: expected an [x, y] pair")
                xs.append(float(_number(k[0], f"{where}.knots[{i}][0]")))
                ys.append(float(_number(k[1], f"{where}.knots[{i}][1]")))
            return UtilityFn(np.array(xs), np.array(ys),
                             float(_number(obj.get("left_slope", 1), f"{where}.left_slope")),
                             float(_number(obj.get("right_slope", 1), f"{where}.right_slope")),
                             bool(obj.get("concave", False)))
    except KeyError as exc:
        raise ParseError(f"{where}: missing field {exc.args[0]!r}") from None
    except ParseError:
        raise
    except RobustImpError as exc:
        raise ParseError(f"{where}: {exc}") from None
    raise ParseError(f"{where}.family: unknown utility family {family!r}")


@dataclass(frozen=True, eq=False)
class ProblemFile:
    """A parsed problem file; ``raw`` keeps the JSON values for exact round trips."""

    states: tuple[str, ...]
    actions: dict[str, list[Fraction]]
    candidate: list[Fraction] | None = None
    incumbent: str | None = None
    utility: Utility | None = None
    prior: list[Fraction] | None = None
    cost: dict | None = None
    application: str | None = None
    raw: dict = field(default_factory=dict)

    @property
    def problem(self) -> DecisionProblem:
        return DecisionProblem(self.states, {k: _floats(v) for k, v in self.actions.items()})

    @property
    def n(self) -> int:
        return len(self.states)

    def candidate_payoffs(self) -> np.ndarray:
        if self.candidate is None:
            raise ParseError("candidate: field is required for this command")
        return _floats(self.candidate)

    def incumbent_id(self) -> str:
        if self.incumbent is not None:
            return self.incumbent
        return next(iter(self.actions))

    def alternatives(self, against: str | None = None) -> list[str]:
        a = self.incumbent_id()
        if against is not None:
            if against not in self.actions or against == a:
                raise ParseError(f"--against: {against!r} is not an alternative action")
            return [against]
        return [k for k in self.actions if k != a]

    def belief(self) -> Belief:
        if self.prior is None:
            raise ParseError("prior: field is required for this command")
        return Belief(_floats(self.prior))

    def cost_potential(self) -> CostPotential:
        if self.cost is None:
            raise ParseError("cost: field is required for this command")
        if self.cost.get("family") != "entropy":
            raise ParseError(f"cost.family: {self.cost.get('family')!r} has no potential")
        return CostPotential.entropy(float(_number(self.cost.get("kappa", 1), "cost.kappa")))

    def to_dict(self) -> dict:
        return dict(self.raw)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: Any) -> ProblemFile:
        if not isinstance(d, dict):
            raise ParseError("top level: expected a JSON object")
        unknown = sorted(set(d) - set(FIELDS))
        if unknown:
            raise ParseError(f"{unknown[0]}: unknown field")
        if d.get("schema") != SCHEMA:
            raise ParseError(f"schema: expected {SCHEMA!r}, got {d.get('schema')!r}")
        states = d.get("states")
        if not isinstance(states, list) or len(states) < 2:
            raise ParseError("states: expected a list of at least two labels")
        states = tuple(str(s) for s in states)
        if len(set(states)) != len(states):
            raise ParseError("states: labels must be unique")
        n = len(states)
        acts = d.get("actions")
        if not isinstance(acts, dict) or not acts:
            raise ParseError("actions: expected a nonempty object of payoff lists")
        actions = {str(k): _vector(v, f"actions.{k}", n) for k, v in acts.items()}
        candidate = _vector(d["candidate"], "candidate", n) if "candidate" in d else None
        incumbent = d.get("incumbent")
        if incumbent is not None and incumbent not in actions:
            raise ParseError(f"incumbent: {incumbent!r} is not an action")
        utility = parse_utility(d["utility"]) if "utility" in d else None
        prior = _vector(d["prior"], "prior", n) if "prior" in d else None
        if prior is not None and (min(prior) < 0 or abs(float(sum(prior)) - 1) > 1e-12):
            raise ParseError("prior: must be a probability vector")
        cost = d.get("cost")
        if cost is not None:
            if not isinstance(cost, dict) or cost.get("family") not in ("entropy", "support"):
                raise ParseError("cost.family: expected 'entropy' or 'support'")
            if cost["family"] == "entropy":
                k = _number(cost.get("kappa", 1), "cost.kappa")
                if k <= 0:
                    raise ParseError("cost.kappa: must be positive")
            else:
                sup = cost.get("supports")
                if not isinstance(sup, dict) or not sup:
                    raise ParseError("cost.supports: expected an object of posterior lists")
                for k, posts in sup.items():
                    if not isinstance(posts, list) or not posts:
                        raise ParseError(f"cost.supports.{k}: expected a list of posteriors")
                    for i, q in enumerate(posts):
                        _vector(q, f"cost.supports.{k}[{i}]", n)
        application = d.get("application")
        if application not in (None, "trade"):
            raise ParseError(f"application: unknown value {application!r}")
        try:
            DecisionProblem(states, {k: _floats(v) for k, v in actions.items()})
        except RobustImpError as exc:
            raise ParseError(f"actions: {exc}") from None
        return cls(states, actions, candidate, incumbent, utility, prior, cost, application,
                   raw=json.loads(json.dumps(d)))

    @classmethod
    def loads(cls, text: str, source: str = "<string>") -> ProblemFile:
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
        try:
            return cls.from_dict(d)
        except ParseError as exc:
            raise ParseError(f"{source}: {exc}") from None

    @classmethod
    def load(cls, path: str | Path) -> ProblemFile:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ParseError(f"{path}: {exc.strerror}") from None
        return cls.loads(text, str(path))

    def supports(self, action: str) -> list[list[Fraction]]:
        if self.cost is None or self.cost.get("family") != "support":
            raise ParseError("cost: a 'support' cost is required for this command")
        try:
            posts = self.cost["supports"][action]
        except KeyError:
            raise ParseError(f"cost.supports.{action}: missing") from None
        return [_vector(q, f"cost.supports.{action}", self.n) for q in posts]


def bundled_path(name: str) -> Path:
    """Path of a bundled example problem."""
    return Path(str(files("robustimp") / "data" / name))


def bundled_names() -> list[str]:
    return sorted(p.name for p in files("robustimp").joinpath("data").iterdir()
                  if p.name.endswith(".json"))

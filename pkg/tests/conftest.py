from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from robustimp.core import DecisionProblem
from robustimp.errors import DegeneracyError
from robustimp.knownutil import polytope_of
from robustimp.multi import check_assumptions

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_triple(rng: np.random.Generator, n: int | None = None, lo: float = -10.0,
                  hi: float = 10.0):
    """Random ``(a, b, ahat)`` with neither of ``a``, ``b`` dominating the other.

    ``ahat`` is drawn from a mixture of shapes so both verdicts occur often:
    a perturbed mixture of ``a`` and ``b``, a perturbation of ``a`` or ``b``,
    or an unrelated draw.
    """
    n = int(rng.integers(2, 6)) if n is None else n
    while True:
        a = rng.uniform(lo, hi, n)
        b = rng.uniform(lo, hi, n)
        if np.any(a > b + 1e-6) and np.any(b > a + 1e-6):
            break
    kind = rng.integers(4)
    if kind == 0:
        lam = rng.uniform()
        ahat = lam * a + (1 - lam) * b + rng.uniform(-0.2, 1.0, n)
    elif kind == 1:
        ahat = (a if rng.uniform() < 0.5 else b) + rng.uniform(-0.5, 1.0, n)
    elif kind == 2:
        lam = rng.uniform()
        ahat = lam * a + (1 - lam) * b + rng.normal(0.0, 2.0, n)
    else:
        ahat = rng.uniform(lo, hi, n)
    return a, b, np.clip(ahat, lo, hi)


def random_line_problem(rng: np.random.Generator, n: int | None = None, m: int | None = None,
                        tries: int = 200):
    """A rich, single-peaked quadratic-loss problem on random states and actions."""
    for _ in range(tries):
        nn = int(rng.integers(3, 6)) if n is None else n
        mm = int(rng.integers(2, min(nn, 4) + 1)) if m is None else m
        states = np.sort(rng.uniform(0.0, 1.0, nn))
        xs = np.sort(rng.choice(states, mm, replace=False) + rng.normal(0.0, 0.02, mm))
        actions = {f"x{i}": -(x - states) ** 2 * 10.0 for i, x in enumerate(xs)}
        problem = DecisionProblem([f"s{j}" for j in range(nn)], actions)
        if check_assumptions(problem).ok:
            return problem
    raise RuntimeError("no rich single-peaked instance found")


def random_finite_problem(rng: np.random.Generator, n: int, m: int) -> DecisionProblem:
    """Actions ``x0..x{m-1}`` with no weak dominance and a nondegenerate region for ``x0``."""
    while True:
        M = rng.uniform(-5, 5, size=(m, n))
        if any(np.all(M[i] >= M[j]) for i in range(m) for j in range(m) if i != j):
            continue
        p = DecisionProblem([str(s) for s in range(n)], {f"x{i}": M[i] for i in range(m)})
        try:
            polytope_of("x0", p)
        except DegeneracyError:
            continue
        return p


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(label: str, ok: bool, detail: str = "") -> bool:
        line = f"{'PASS' if ok else 'FAIL'}  {label}" + (f": {detail}" if detail else "")
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)

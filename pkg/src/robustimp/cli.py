"""Command-line interface.

Exit codes: 0 the relation holds, 1 it fails, 2 a structural assumption is
violated, 3 the problem file is malformed, 4 any other error (domain or
numerical).
"""

from __future__ import annotations

import dataclasses
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any

import click
import numpy as np

from robustimp import infoacq, knownutil, lottery, multi, superiority
from robustimp.core import DEFAULT_EPS
from robustimp.errors import AssumptionError, ParseError, RelationHoldsError, RobustImpError
from robustimp.oracle import SamplerConfig, falsify
from robustimp.plotting import line_data
from robustimp.problemfile import ProblemFile, bundled_names, bundled_path

EXIT_HOLDS, EXIT_FAILS, EXIT_ASSUMPTION, EXIT_PARSE, EXIT_ERROR = 0, 1, 2, 3, 4

CRITERIA = {
    "superior": "mixture dominance against one alternative (concave utility, unknown belief)",
    "better": "dominance of a or b (increasing utility, unknown belief)",
    "multi": "mixture dominance against every alternative (rich, single-peaked problem)",
    "lottery": "convex-weight stochastic dominance (known belief)",
    "knownutil": "facet-vertex rotation (known utility, unknown belief)",
    "selected-more": "dominance of a or b (costly information, two states)",
    "falsify": "Monte Carlo search over utilities and beliefs",
}


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, Fraction):
        return str(x)
    if hasattr(x, "to_dict"):
        return _jsonable(x.to_dict())
    if dataclasses.is_dataclass(x) and not isinstance(x, type):
        return {f.name: _jsonable(getattr(x, f.name)) for f in dataclasses.fields(x)}
    return x


def _text(report: dict) -> str:
    lines = [f"{report['command']}: {report['verdict'].upper()}"]
    if report.get("reason"):
        lines.append(f"  reason: {report['reason']}")
    if report.get("criterion"):
        lines.append(f"  criterion: {report['criterion']}")
    for key in ("results", "certificate", "witness", "markers", "output"):
        if report.get(key) is not None:
            body = json.dumps(_jsonable(report[key]), indent=2, sort_keys=True)
            lines.append(f"  {key}: " + body.replace("\n", "\n  "))
    return "\n".join(lines)


def _emit(report: dict, fmt: str) -> None:
    report = _jsonable(report)
    click.echo(json.dumps(report, indent=2, sort_keys=True) if fmt == "json" else _text(report))


def _finish(report: dict, fmt: str, code: int) -> None:
    report["exit_code"] = code
    _emit(report, fmt)
    sys.exit(code)


def _run(command: str, fmt: str, body) -> None:
    """Run ``body`` and map library exceptions onto exit codes."""
    try:
        report, code = body()
    except ParseError as exc:
        _finish({"command": command, "verdict": "error", "reason": str(exc)}, fmt, EXIT_PARSE)
    except AssumptionError as exc:
        _finish({"command": command, "verdict": "assumptions-violated", "reason": str(exc),
                 "certificate": _jsonable(exc.report) if exc.report is not None else None},
                fmt, EXIT_ASSUMPTION)
    except (RobustImpError, ValueError, ArithmeticError, OSError) as exc:
        _finish({"command": command, "verdict": "error", "reason": f"{type(exc).__name__}: {exc}"},
                fmt, EXIT_ERROR)
    _finish(report, fmt, code)


def _verdict_report(command: str, v, witness=None, **extra) -> tuple[dict, int]:
    report = {"command": command, "verdict": "holds" if v.holds else "fails", "reason": v.reason,
              "criterion": CRITERIA[command], "certificate": v.certificate,
              "witness": witness.to_dict() if witness is not None else None, **extra}
    return report, EXIT_HOLDS if v.holds else EXIT_FAILS


def _safe_witness(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs), None
    except (RelationHoldsError, RobustImpError) as exc:
        return None, str(exc)


common = [
    click.option("--epsilon", type=float, default=DEFAULT_EPS, show_default=True,
                 help="Tolerance for payoff comparisons."),
    click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text",
                 show_default=True),
]


def _common(f):
    for opt in reversed(common):
        f = opt(f)
    return f


def _problem_arg(f):
    return click.argument("problem_file", type=click.Path(dir_okay=False))(f)


def _load(path: str) -> ProblemFile:
    p = Path(path)
    if not p.exists() and (p.name in bundled_names() or f"{p.name}.json" in bundled_names()):
        p = bundled_path(p.name if p.name.endswith(".json") else f"{p.name}.json")
    return ProblemFile.load(p)


@click.group()
@click.version_option(package_name="robustimp")
def main():
    """Decide whether a candidate action robustly improves on an incumbent."""


@main.command("examples")
def examples_cmd():
    """List the bundled example problems (usable by name in place of a path)."""
    for name in bundled_names():
        click.echo(str(bundled_path(name)))


@main.group("check")
def check():
    """Decide a robustness relation and print a certificate or witness."""


def _pair(pf: ProblemFile, against: str | None):
    a_id = pf.incumbent_id()
    alts = pf.alternatives(against)
    if len(alts) != 1:
        raise ParseError("--against: needed when the file has more than two actions")
    return pf.problem[a_id], pf.problem[alts[0]], pf.candidate_payoffs(), a_id, alts[0]


def _trade_report(command: str, pf: ProblemFile, eps: float, checker, witness_fn):
    # buyer: accept (v - gamma) vs outside option 0; seller: accept gamma vs keeping the asset v
    gamma = pf.problem[pf.incumbent_id()]
    v = pf.problem[pf.alternatives()[0]]
    g_hat = pf.candidate_payoffs()
    sides = {
        "buyer": (v - gamma, np.zeros_like(v), v - g_hat),
        "seller": (gamma, v, g_hat),
    }
    results = {}
    holds = True
    for side, (a, b, ahat) in sides.items():
        vd = checker(a, b, ahat, eps)
        w = None if vd.holds else _safe_witness(witness_fn, a, b, ahat, eps)[0]
        results[side] = {"holds": vd.holds, "reason": vd.reason, "certificate": vd.certificate,
                         "witness": w.to_dict() if w is not None else None}
        holds = holds and vd.holds
    report = {"command": command, "verdict": "holds" if holds else "fails",
              "reason": "acceptable to both parties" if holds else "some party may walk away",
              "criterion": CRITERIA[command], "results": results}
    return report, EXIT_HOLDS if holds else EXIT_FAILS


@check.command("superior")
@_problem_arg
@click.option("--against", default=None, help="Alternative action id.")
@_common
def check_superior(problem_file, against, epsilon, fmt):
    """Robust improvement for every concave utility and belief."""
    def body():
        pf = _load(problem_file)
        if pf.application == "trade":
            return _trade_report("superior", pf, epsilon, superiority.check_b_superior,
                                 superiority.witness_not_b_superior)
        a, b, ahat, a_id, b_id = _pair(pf, against)
        v = superiority.check_b_superior(a, b, ahat, epsilon)
        w = None if v.holds else _safe_witness(superiority.witness_not_b_superior, a, b, ahat,
                                               epsilon)[0]
        return _verdict_report("superior", v, w, incumbent=a_id, alternative=b_id)
    _run("superior", fmt, body)


@check.command("better")
@_problem_arg
@click.option("--against", default=None, help="Alternative action id.")
@_common
def check_better(problem_file, against, epsilon, fmt):
    """Robust improvement for every increasing utility and belief."""
    def body():
        pf = _load(problem_file)
        if pf.application == "trade":
            return _trade_report("better", pf, epsilon, superiority.check_b_better,
                                 superiority.witness_not_b_better)
        a, b, ahat, a_id, b_id = _pair(pf, against)
        v = superiority.check_b_better(a, b, ahat, epsilon)
        w = None if v.holds else _safe_witness(superiority.witness_not_b_better, a, b, ahat,
                                               epsilon)[0]
        return _verdict_report("better", v, w, incumbent=a_id, alternative=b_id)
    _run("better", fmt, body)


@check.command("multi")
@_problem_arg
@_common
def check_multi(problem_file, epsilon, fmt):
    """Robust improvement against all other actions at once."""
    def body():
        pf = _load(problem_file)
        a_id = pf.incumbent_id()
        ahat = pf.candidate_payoffs()
        v = multi.check_B_superior(pf.problem, a_id, ahat, None, epsilon)
        w = None if v.holds else _safe_witness(multi.witness_not_B_superior, pf.problem, a_id,
                                               ahat, None, epsilon)[0]
        return _verdict_report("multi", v, w, incumbent=a_id)
    _run("multi", fmt, body)


@check.command("lottery")
@_problem_arg
@click.option("--class", "cls", type=click.Choice(["concave", "monotone"]), default="concave",
              show_default=True)
@_common
def check_lottery(problem_file, cls, epsilon, fmt):
    """Robust improvement for a known belief (the file's prior)."""
    def body():
        pf = _load(problem_file)
        mu = pf.belief()
        a_id = pf.incumbent_id()
        alts = pf.alternatives()
        L_a = lottery.induce(pf.problem[a_id], mu)
        L_h = lottery.induce(pf.candidate_payoffs(), mu)
        others = [lottery.induce(pf.problem[k], mu) for k in alts]
        v = lottery.check_B_improves(L_a, L_h, others,
                                     "risk-averse" if cls == "concave" else "monotone", epsilon)
        cert = dict(v.certificate)
        cert["weights"] = {alts[int(k)]: w for k, w in cert["weights"].items()}
        cert["borderline"] = [alts[int(k)] for k in cert["borderline"]]
        cert["alternatives"] = alts
        v = superiority.Verdict(v.holds, v.reason, cert)
        return _verdict_report("lottery", v, incumbent=a_id)
    _run("lottery", fmt, body)


@check.command("knownutil")
@_problem_arg
@_common
def check_knownutil(problem_file, epsilon, fmt):
    """Robust improvement for a known utility (the file's utility, else risk neutral)."""
    def body():
        pf = _load(problem_file)
        a_id = pf.incumbent_id()
        v = knownutil.check_u_improves(a_id, pf.candidate_payoffs(), pf.problem, epsilon,
                                       pf.utility)
        return _verdict_report("knownutil", v, incumbent=a_id)
    _run("knownutil", fmt, body)


@check.command("selected-more")
@_problem_arg
@click.option("--against", default=None, help="Alternative action id.")
@_common
def check_selected_more(problem_file, against, epsilon, fmt):
    """Is the candidate chosen at least as often when information is costly?"""
    def body():
        pf = _load(problem_file)
        if pf.cost is not None and pf.cost.get("family") == "support":
            return _support_report(pf, against)
        a, b, ahat, a_id, b_id = _pair(pf, against)
        v = infoacq.check_selected_more(a, b, ahat, epsilon)
        extra = {}
        if pf.cost is not None and pf.prior is not None:
            mu0 = float(pf.prior[1])
            p, p_hat = infoacq.selection_comparison(a, b, ahat, pf.utility, pf.cost_potential(),
                                                    mu0)
            extra["choice_probabilities"] = {"p": p, "p_hat": p_hat, "prior_state1": mu0}
        return _verdict_report("selected-more", v, incumbent=a_id, alternative=b_id, **extra)
    _run("selected-more", fmt, body)


def _support_report(pf: ProblemFile, against: str | None):
    a_id = pf.incumbent_id()
    b_id = pf.alternatives(against)[0] if against or len(pf.actions) == 2 else None
    if b_id is None:
        raise ParseError("--against: needed when the file has more than two actions")
    prior = pf.prior
    if prior is None:
        raise ParseError("prior: field is required for this command")
    b = pf.actions[b_id]
    alpha = [x - y for x, y in zip(pf.actions[a_id], b)]
    alpha_hat = [x - y for x, y in zip(pf.candidate or [], b)]
    if len(alpha_hat) != pf.n:
        raise ParseError("candidate: field is required for this command")
    p = infoacq.support_choice_probability(alpha, [q[1:] for q in pf.supports(a_id)], prior[1:])
    p_hat = infoacq.support_choice_probability(alpha_hat,
                                               [q[1:] for q in pf.supports("candidate")],
                                               prior[1:])
    holds = p_hat >= p
    report = {"command": "selected-more", "verdict": "holds" if holds else "fails",
              "reason": f"p = {p}, p_hat = {p_hat}", "criterion": CRITERIA["selected-more"],
              "certificate": {"p": str(p), "p_hat": str(p_hat)}, "incumbent": a_id,
              "alternative": b_id}
    return report, EXIT_HOLDS if holds else EXIT_FAILS


@main.command("plot")
@_problem_arg
@click.argument("out_path", type=click.Path(dir_okay=False))
@click.option("--image-format", type=click.Choice(["csv", "svg"]), default=None,
              help="Output format; inferred from OUT_PATH's suffix when omitted.")
@click.option("--against", default=None, help="Alternative action id.")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text",
              show_default=True)
def plot_cmd(problem_file, out_path, image_format, against, fmt):
    """Write expected-utility lines of a two-state problem as CSV or SVG."""
    def body():
        pf = _load(problem_file)
        a, b, ahat, a_id, b_id = _pair(pf, against)
        kind = image_format or Path(out_path).suffix.lstrip(".").lower()
        if kind not in ("csv", "svg"):
            raise ParseError(f"--image-format: cannot infer a format from {out_path!r}")
        data = line_data(a, b, ahat, pf.utility)
        Path(out_path).write_text(data.to_csv() if kind == "csv" else data.to_svg(),
                                  encoding="utf-8")
        return {"command": "plot", "verdict": "written", "output": str(out_path),
                "markers": data.markers, "rows": len(data.mu)}, EXIT_HOLDS
    _run("plot", fmt, body)


@main.command("falsify")
@_problem_arg
@click.option("--trials", type=int, default=10_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--class", "cls", type=click.Choice(["concave", "monotone"]), default="concave",
              show_default=True)
@click.option("--against", default=None, help="Alternative action id (default: all others).")
@click.option("--workers", type=int, default=1, show_default=True)
@_common
def falsify_cmd(problem_file, trials, seed, cls, against, workers, epsilon, fmt):
    """Search random utilities and beliefs for a ranking a > alternatives > candidate."""
    def body():
        pf = _load(problem_file)
        a = pf.problem[pf.incumbent_id()]
        alts = [pf.problem[k] for k in pf.alternatives(against)]
        cfg = SamplerConfig(seed=seed, trials=trials)
        w = falsify(a, alts, pf.candidate_payoffs(), cls, cfg, epsilon, workers=workers)
        report = {"command": "falsify", "criterion": CRITERIA["falsify"],
                  "verdict": "fails" if w is not None else "holds",
                  "reason": (f"counterexample found ({w.note})" if w is not None
                             else f"no counterexample in {trials} trials (not a proof)"),
                  "witness": w.to_dict() if w is not None else None,
                  "certificate": {"trials": trials, "seed": seed, "class": cls}}
        return report, EXIT_FAILS if w is not None else EXIT_HOLDS
    _run("falsify", fmt, body)


if __name__ == "__main__":  # pragma: no cover
    main()

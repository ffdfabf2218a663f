"""
RunReport assembly, CSV rows and the plain-text table printed by the CLI.

CSV column order is part of the output contract; append new columns at the end.
"""
import csv
import itertools
from typing import Dict, Iterable, List, Optional, TextIO

from app.markov.crowds import CrowdsReport
from app.markov.errors import InvalidParams
from app.markov.scalar import INFINITY, ExtScalar, format_scalar
from app.markov.simulate import Estimate, JointCounts
from app.markov.zeroconf import ZeroconfReport
from app.schemas import ResultValue, RunReport


ZEROCONF_CSV_COLUMNS = [
    "N", "p", "q", "r", "E", "mode",
    "p_err_closed", "p_err_solver", "p_err_delta",
    "cost_closed", "cost_solver", "cost_delta",
    "expected_steps", "p_err_within_bound", "cost_within_bound", "ae_term",
]

CROWDS_CSV_COLUMNS = [
    "J", "H", "p_f", "mode",
    "hit_closed", "hit_solver", "hit_delta",
    "first_eq_last_closed", "first_eq_last_solver", "first_eq_last_delta",
    "joint_max_delta", "innocence_threshold", "probable_innocence",
    "mi_exact", "mi_bound", "mi_within_bound",
    "last_jondo_uniform", "first_last_independent",
]


def value(name: str, number: ExtScalar, provenance: str) -> ResultValue:
    return ResultValue(name=name, value=format_scalar(number), provenance=provenance, approx=_approx(number))


def _approx(number) -> Optional[float]:
    # JSON has no infinity
    return None if number is INFINITY else float(number)


def estimate_values(name: str, estimate: Estimate) -> List[ResultValue]:
    return [
        ResultValue(name=f"{name}.simulated", value=repr(estimate.mean), provenance="simulation", approx=estimate.mean),
        ResultValue(name=f"{name}.std_error", value=repr(estimate.std_error), provenance="simulation", approx=estimate.std_error),
        ResultValue(name=f"{name}.samples", value=str(estimate.samples_used), provenance="simulation"),
        ResultValue(name=f"{name}.censored", value=str(estimate.censored), provenance="simulation"),
    ]


def _is_zero(number) -> bool:
    return number == 0


def zeroconf_run_report(report: ZeroconfReport, command: str = "zeroconf") -> RunReport:
    params = report.params
    results = [
        value("p_err_start.closed", report.p_err_closed, "closed-form"),
        value("p_err_start.solver", report.p_err_solver, "solver"),
        value("p_err_start.delta", report.p_err_delta, "solver"),
    ]
    for row in report.probes:
        results += [
            value(f"p_err_probe[{row.n}].closed", row.closed, "closed-form"),
            value(f"p_err_probe[{row.n}].solver", row.solver, "solver"),
            value(f"p_err_probe[{row.n}].delta", row.delta, "solver"),
        ]
    results += [
        value("expected_cost.closed", report.cost_closed, "closed-form"),
        value("expected_cost.solver", report.cost_solver, "solver"),
        value("expected_cost.delta", report.cost_delta, "solver"),
        value("expected_steps.solver", report.expected_steps, "solver"),
    ]
    if report.error_estimate is not None:
        results += estimate_values("p_err_start", report.error_estimate)
    if report.cost_estimate is not None:
        results += estimate_values("expected_cost", report.cost_estimate)

    exact_match = params.mode.value == "exact" and all(
        _is_zero(d) for d in [report.p_err_delta, report.cost_delta] + [row.delta for row in report.probes]
    )
    verdicts = {f"ae_term[{state}]": ok for state, ok in report.ae_term.items()}
    verdicts.update({
        "p_err_within_stated_bound": report.error_within_bound,
        "cost_within_stated_bound": report.cost_within_bound,
        "closed_matches_solver": exact_match,
    })
    return RunReport(
        command=command,
        parameters={
            "N": str(params.N),
            "p": format_scalar(params.p),
            "q": format_scalar(params.q),
            "r": format_scalar(params.r),
            "E": format_scalar(params.E),
        },
        mode=params.mode.value,
        results=results,
        verdicts=verdicts,
        flags=list(report.flags),
    )


def zeroconf_csv_row(report: ZeroconfReport) -> Dict[str, str]:
    params = report.params
    return {
        "N": str(params.N),
        "p": format_scalar(params.p),
        "q": format_scalar(params.q),
        "r": format_scalar(params.r),
        "E": format_scalar(params.E),
        "mode": params.mode.value,
        "p_err_closed": format_scalar(report.p_err_closed),
        "p_err_solver": format_scalar(report.p_err_solver),
        "p_err_delta": format_scalar(report.p_err_delta),
        "cost_closed": format_scalar(report.cost_closed),
        "cost_solver": format_scalar(report.cost_solver),
        "cost_delta": format_scalar(report.cost_delta),
        "expected_steps": format_scalar(report.expected_steps),
        "p_err_within_bound": str(report.error_within_bound).lower(),
        "cost_within_bound": str(report.cost_within_bound).lower(),
        "ae_term": str(all(report.ae_term.values())).lower(),
    }


def crowds_run_report(report: CrowdsReport, counts: Optional[JointCounts] = None, command: str = "crowds") -> RunReport:
    params = report.params
    results = [
        value("hit_colls.closed", report.hit_closed, "closed-form"),
        value("hit_colls.solver", report.hit_solver, "solver"),
        value("hit_colls.delta", report.hit_delta, "solver"),
        value("first_eq_last.closed", report.first_eq_last_closed, "closed-form"),
        value("first_eq_last.solver", report.first_eq_last_solver, "solver"),
        value("first_eq_last.delta", report.first_eq_last_delta, "solver"),
    ]
    for (i, l), closed in sorted(report.joint_closed.items()):
        results += [
            value(f"joint[{i},{l}].closed", closed, "closed-form"),
            value(f"joint[{i},{l}].solver", report.joint_solver[(i, l)], "solver"),
        ]
    results += [
        value("joint.max_delta", report.joint_max_delta, "solver"),
        value("innocence.threshold", report.innocence.threshold, "closed-form"),
        ResultValue(name="mi.exact", value=repr(report.mi_exact), provenance="closed-form", approx=report.mi_exact),
        ResultValue(name="mi.bound", value=repr(report.mi_bound), provenance="closed-form", approx=report.mi_bound),
        value("expected_route_steps.solver", report.expected_route_steps, "solver"),
    ]
    for jondo in params.jondos:
        results.append(value(f"last_jondo[{jondo}].solver", report.last_jondo.get(jondo), "solver"))

    flags = list(report.flags)
    if counts is not None:
        for (i, l) in sorted(report.joint_closed):
            results += estimate_values(f"joint[{i},{l}]", counts.cell(i, l))
        results += [
            ResultValue(name="simulation.hits", value=str(counts.hits), provenance="simulation"),
            ResultValue(name="simulation.shape_violations", value=str(counts.shape_violations), provenance="simulation"),
        ]
        if counts.empty:
            flags.append("no sampled route hit a collaborator")

    exact_match = params.mode.value == "exact" and all(
        _is_zero(d) for d in (report.hit_delta, report.first_eq_last_delta, report.joint_max_delta)
    )
    verdicts = {
        "probable_innocence": report.innocence.holds,
        "mi_within_bound": report.mi_within_bound,
        "ae_end": report.ae_end,
        "last_jondo_uniform": report.last_jondo_uniform,
        "first_last_independent": report.first_last_independent,
        "first_ncoll_independent": report.first_ncoll_independent,
        "closed_matches_solver": exact_match,
    }
    if counts is not None:
        verdicts["route_shapes_ok"] = counts.shape_violations == 0
    return RunReport(
        command=command,
        parameters={
            "jondos": ",".join(params.jondos),
            "colls": ",".join(sorted(params.colls)),
            "J": str(params.J),
            "H": str(params.H),
            "p_f": format_scalar(params.p_f),
            "init": ",".join(f"{j}:{format_scalar(params.weight(j))}" for j in params.honest),
        },
        mode=params.mode.value,
        results=results,
        verdicts=verdicts,
        flags=flags,
    )


def crowds_csv_row(report: CrowdsReport) -> Dict[str, str]:
    params = report.params
    return {
        "J": str(params.J),
        "H": str(params.H),
        "p_f": format_scalar(params.p_f),
        "mode": params.mode.value,
        "hit_closed": format_scalar(report.hit_closed),
        "hit_solver": format_scalar(report.hit_solver),
        "hit_delta": format_scalar(report.hit_delta),
        "first_eq_last_closed": format_scalar(report.first_eq_last_closed),
        "first_eq_last_solver": format_scalar(report.first_eq_last_solver),
        "first_eq_last_delta": format_scalar(report.first_eq_last_delta),
        "joint_max_delta": format_scalar(report.joint_max_delta),
        "innocence_threshold": format_scalar(report.innocence.threshold),
        "probable_innocence": str(report.innocence.holds).lower(),
        "mi_exact": repr(report.mi_exact),
        "mi_bound": repr(report.mi_bound),
        "mi_within_bound": str(report.mi_within_bound).lower(),
        "last_jondo_uniform": str(report.last_jondo_uniform).lower(),
        "first_last_independent": str(report.first_last_independent).lower(),
    }


def write_csv(rows: Iterable[Dict[str, str]], columns: List[str], stream: TextIO) -> None:
    writer = csv.DictWriter(stream, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)


def report_csv_rows(report: RunReport) -> List[Dict[str, str]]:
    return [
        {"name": item.name, "value": item.value, "provenance": item.provenance}
        for item in report.results
    ]


REPORT_CSV_COLUMNS = ["name", "value", "provenance"]


def render_table(report: RunReport) -> str:
    lines = [f"{report.command} ({report.mode})"]
    for key, text in report.parameters.items():
        lines.append(f"  {key} = {text}")
    width = max((len(item.name) for item in report.results), default=0)
    for item in report.results:
        approx = f"  ~{item.approx:.6g}" if item.approx is not None and "/" in item.value else ""
        lines.append(f"  {item.name.ljust(width)}  {item.value}{approx}  [{item.provenance}]")
    for key, ok in report.verdicts.items():
        lines.append(f"  {key}: {'yes' if ok else 'no'}")
    for flag in report.flags:
        lines.append(f"  ! {flag}")
    if report.timing_seconds is not None:
        lines.append(f"  took {report.timing_seconds:.3f}s")
    return "\n".join(lines)


def parse_sweep(text: str, allowed: Iterable[str]) -> List[Dict[str, str]]:
    """`p=1/100,1/10;probes=1,2,3` -> the grid points in row-major order."""
    allowed = set(allowed)
    axes = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise InvalidParams(f"sweep axis {part!r} must look like name=v1,v2", flag="sweep")
        name, values = part.split("=", 1)
        name = name.strip()
        if name not in allowed:
            raise InvalidParams(f"cannot sweep over {name!r}", flag="sweep")
        points = [v.strip() for v in values.split(",") if v.strip()]
        if not points:
            raise InvalidParams(f"sweep axis {name!r} has no values", flag="sweep")
        axes.append((name, points))
    if not axes:
        raise InvalidParams("empty sweep", flag="sweep")
    names = [name for name, _ in axes]
    return [dict(zip(names, combo)) for combo in itertools.product(*(points for _, points in axes))]

"""
Command layer shared by the click CLI and the HTTP routers.

Every command takes already-parsed primitives, builds the chains, runs the
analyses and returns a RunReport. Errors are MarkovError subclasses; the
callers map them to exit codes or HTTP statuses.
"""
import json
import logging
from typing import Dict, List, Mapping, Optional, Tuple

from sqlalchemy.orm import Session

from app import config
from app.markov import crowds, zeroconf
from app.markov.analysis import (
    UntilQuery,
    certify_ae_until,
    expected_cost_until,
    expected_hitting_time,
    until_prob_is_zero,
    until_probability,
)
from app.markov.chain import MarkovChain, RewardChain
from app.markov.crowds import CrowdsParams, CrowdsReport, build_crowds, crowds_report
from app.markov.errors import InvalidParams, ModelParseError, ModelValidationError
from app.markov.loader import build_model, parse_state_set, parse_until, raw_row_sums
from app.markov.scalar import FLOAT_ROW_TOLERANCE, Arithmetic, Scalar, is_one, parse_scalar
from app.markov.simulate import SimConfig, estimate_cost, estimate_joint_first_last, estimate_until
from app.markov.zeroconf import ZeroconfParams, ZeroconfReport, zeroconf_report
from app.models import RunRecord
from app.reports import crowds_run_report, estimate_values, parse_sweep, value, zeroconf_run_report
from app.schemas import ModelFile, ResultValue, RunRecordOut, RunReport

logger = logging.getLogger(__name__)

ZEROCONF_SWEEP_AXES = ("probes", "p", "q", "hosts", "r", "E")
CROWDS_SWEEP_AXES = ("jondos", "colls", "pf")
SIMULATE_PRESETS = ("zeroconf:typical", "zeroconf:paper-typical", "crowds:three-jondo", "crowds:fig3")


def _number(raw, mode: Arithmetic, flag: str) -> Scalar:
    try:
        return parse_scalar(raw, mode)
    except ModelParseError as exc:
        raise InvalidParams(exc.message, flag=flag) from None


def _integer(raw, flag: str) -> int:
    try:
        return int(raw)
    except (TypeError, ValueError):
        raise InvalidParams(f"{raw!r} is not an integer", flag=flag) from None


def sim_config(seed: Optional[int] = None, samples: Optional[int] = None, max_steps: Optional[int] = None) -> SimConfig:
    return SimConfig(
        seed=config.default_seed() if seed is None else seed,
        samples=config.default_samples() if samples is None else samples,
        max_steps=config.default_max_steps() if max_steps is None else max_steps,
    )


# === validate / solve ===
def validate_command(model: ModelFile, mode: Arithmetic) -> Tuple[RunReport, Optional[ModelValidationError]]:
    """
    Parse errors propagate. Semantic failures come back next to a report
    holding the raw row sums of every state that does not sum to one.
    """
    report = RunReport(
        command="validate",
        parameters={"states": str(len(model.states)), "edges": str(len(model.transitions))},
        mode=mode.value,
    )
    try:
        _, rchain = build_model(model, mode)
    except ModelValidationError as exc:
        sums = raw_row_sums(model, mode)
        report.results = [
            value(f"row_sum[{state}]", total, "solver")
            for state, total in sums.items()
            if not is_one(total, mode, FLOAT_ROW_TOLERANCE)
        ]
        report.verdicts = {"valid": False}
        report.flags = [exc.message]
        return report, exc
    report.parameters["rewards"] = str(len(model.rewards))
    report.verdicts = {"valid": True, "has_rewards": rchain is not None}
    return report, None


def solve_command(
    model: ModelFile,
    until: str,
    start: str,
    mode: Arithmetic,
    cost: Optional[str] = None,
    hitting: Optional[str] = None,
) -> RunReport:
    chain, rchain = build_model(model, mode)
    chain.index(start)
    phi, psi = parse_until(until, chain)
    query = UntilQuery.of(phi, psi, start)

    results = [value("until_probability", until_probability(chain, query), "solver")]
    verdicts = {
        "prob_is_zero": until_prob_is_zero(chain, query),
        "almost_sure": certify_ae_until(chain, query),
    }
    if cost is not None:
        if rchain is None:
            raise InvalidParams("model declares no rewards", flag="cost")
        results.append(value("expected_cost", expected_cost_until(rchain, parse_state_set(cost, chain), start), "solver"))
    if hitting is not None:
        results.append(value("expected_hitting_time", expected_hitting_time(chain, parse_state_set(hitting, chain), start), "solver"))

    parameters = {"until": until, "start": start, "states": str(chain.size)}
    if cost is not None:
        parameters["cost"] = cost
    if hitting is not None:
        parameters["hitting"] = hitting
    return RunReport(command="solve", parameters=parameters, mode=mode.value, results=results, verdicts=verdicts)


# === zeroconf ===
def zeroconf_params(
    mode: Arithmetic,
    preset: Optional[str] = None,
    probes=None,
    p=None,
    q=None,
    hosts=None,
    r=None,
    E=None,
) -> ZeroconfParams:
    base: Dict[str, object] = {}
    if preset is not None:
        if preset not in zeroconf.PRESETS:
            raise InvalidParams(f"unknown preset {preset!r}", flag="preset")
        base = dict(zeroconf.PRESETS[preset])
        if hosts is not None:
            base.pop("q")
    if q is not None and hosts is not None:
        raise InvalidParams("give either q or hosts, not both", flag="hosts")

    N = base.get("N") if probes is None else probes
    if N is None:
        raise InvalidParams("required", flag="probes")
    if hosts is not None:
        q_value = zeroconf.collision_probability(_integer(hosts, "hosts"), mode)
    else:
        q_value = base.get("q") if q is None else q
    for flag, raw in (("p", base.get("p") if p is None else p), ("q", q_value)):
        if raw is None:
            raise InvalidParams("required", flag=flag)

    return ZeroconfParams(
        N=_integer(N, "probes"),
        p=_number(base.get("p") if p is None else p, mode, "p"),
        q=_number(q_value, mode, "q"),
        r=_number(base.get("r", 0) if r is None else r, mode, "r"),
        E=_number(base.get("E", 0) if E is None else E, mode, "E"),
        mode=mode,
    )


def zeroconf_command(mode: Arithmetic, samples: Optional[int] = None, seed: Optional[int] = None,
                     max_steps: Optional[int] = None, **params) -> RunReport:
    sim = sim_config(seed, samples, max_steps) if samples is not None else None
    report = zeroconf_report(zeroconf_params(mode, **params), sim)
    run = zeroconf_run_report(report)
    if sim is not None:
        run.parameters.update({"seed": str(sim.seed), "samples": str(sim.samples), "max_steps": str(sim.max_steps)})
    return run


def zeroconf_sweep(sweep: str, mode: Arithmetic, **params) -> List[ZeroconfReport]:
    points = parse_sweep(sweep, ZEROCONF_SWEEP_AXES)
    logger.info("zeroconf sweep over %d points", len(points))
    reports = []
    for point in points:
        merged = dict(params)
        merged.update(point)
        if "hosts" in point:
            merged["q"] = None
        if "q" in point:
            merged["hosts"] = None
        reports.append(zeroconf_report(zeroconf_params(mode, **merged)))
    return reports


# === crowds ===
def crowds_params(
    mode: Arithmetic,
    preset: Optional[str] = None,
    jondos=None,
    colls=None,
    pf=None,
    init: Optional[Mapping[str, str]] = None,
) -> CrowdsParams:
    if preset is not None:
        if preset not in crowds.PRESETS:
            raise InvalidParams(f"unknown preset {preset!r}", flag="preset")
        values = crowds.PRESETS[preset]
        return CrowdsParams.create(
            values["jondos"],
            values["colls"],
            _number(values["p_f"] if pf is None else pf, mode, "pf"),
            {k: _number(v, mode, "init") for k, v in init.items()} if init else None,
            mode,
        )
    for flag, raw in (("jondos", jondos), ("colls", colls), ("pf", pf)):
        if raw is None:
            raise InvalidParams("required", flag=flag)
    weights = {k: _number(v, mode, "init") for k, v in init.items()} if init else None
    return CrowdsParams.from_counts(_integer(jondos, "jondos"), _integer(colls, "colls"), _number(pf, mode, "pf"), weights, mode)


def crowds_command(mode: Arithmetic, samples: Optional[int] = None, seed: Optional[int] = None,
                   max_steps: Optional[int] = None, **params) -> RunReport:
    crowd = crowds_params(mode, **params)
    report = crowds_report(crowd)
    sim = sim_config(seed, samples, max_steps) if samples is not None else None
    counts = None
    if sim is not None:
        counts = estimate_joint_first_last(build_crowds(crowd), crowd.colls, crowd.honest, sim)
    run = crowds_run_report(report, counts)
    if sim is not None:
        run.parameters.update({"seed": str(sim.seed), "samples": str(sim.samples), "max_steps": str(sim.max_steps)})
    return run


def crowds_sweep(sweep: str, mode: Arithmetic, **params) -> List[CrowdsReport]:
    points = parse_sweep(sweep, CROWDS_SWEEP_AXES)
    logger.info("crowds sweep over %d points", len(points))
    reports = []
    for point in points:
        merged = dict(params)
        merged.update(point)
        reports.append(crowds_report(crowds_params(mode, **merged)))
    return reports


# === simulate ===
def preset_chain(name: str, mode: Arithmetic) -> Tuple[MarkovChain, Optional[RewardChain], str]:
    family, _, preset = name.partition(":")
    if family == "zeroconf" and preset in zeroconf.PRESETS:
        rchain = zeroconf.build_zeroconf(zeroconf.preset(preset, mode))
        return rchain.chain, rchain, zeroconf.START
    if family == "crowds" and preset in crowds.PRESETS:
        return build_crowds(crowds.preset(preset, mode)), None, crowds.START
    raise InvalidParams(f"unknown preset {name!r}; choose from {', '.join(SIMULATE_PRESETS)}", flag="preset")


def simulate_command(
    event: str,
    mode: Arithmetic,
    model: Optional[ModelFile] = None,
    preset: Optional[str] = None,
    start: Optional[str] = None,
    seed: Optional[int] = None,
    samples: Optional[int] = None,
    max_steps: Optional[int] = None,
) -> RunReport:
    if (model is None) == (preset is None):
        raise InvalidParams("give exactly one of a model file or a preset", flag="preset")
    if model is not None:
        chain, rchain = build_model(model, mode)
        if start is None:
            raise InvalidParams("required with a model file", flag="start")
    else:
        chain, rchain, default_start = preset_chain(preset, mode)
        start = start or default_start
    chain.index(start)
    cfg = sim_config(seed, samples, max_steps)

    kind, _, target = event.partition(":")
    results: List[ResultValue]
    if kind == "until":
        phi, psi = parse_until(target, chain)
        query = UntilQuery.of(phi, psi, start)
        estimate = estimate_until(chain, query, cfg)
        results = estimate_values("until_probability", estimate)
        results.append(value("until_probability.solver", until_probability(chain, query), "solver"))
    elif kind == "cost":
        if rchain is None:
            raise InvalidParams("model declares no rewards", flag="event")
        phi = parse_state_set(target, chain)
        estimate = estimate_cost(rchain, phi, start, cfg)
        results = estimate_values("expected_cost", estimate)
        results.append(value("expected_cost.solver", expected_cost_until(rchain, phi, start), "solver"))
    else:
        raise InvalidParams(f"event {event!r} must be until:PHI=>PSI or cost:PHI", flag="event")

    solver = results[-1].approx
    verdicts = {} if solver is None else {"solver_within_3_sigma": estimate.within(solver)}
    flags = []
    if estimate.censored:
        flags.append(f"{estimate.censored} of {estimate.samples_used} paths censored at {cfg.max_steps} steps")
    return RunReport(
        command="simulate",
        parameters={
            "source": preset or "model",
            "start": start,
            "event": event,
            "seed": str(cfg.seed),
            "samples": str(cfg.samples),
            "max_steps": str(cfg.max_steps),
        },
        mode=mode.value,
        results=results,
        verdicts=verdicts,
        flags=flags,
    )


# === run history ===
def save_report(db: Session, report: RunReport) -> RunRecord:
    record = RunRecord(
        command=report.command,
        mode=report.mode,
        report_json=report.model_dump_json(),
    )
    db.add(record)
    db.commit()
    db.refresh(record)
    logger.info("saved %s run as #%d", report.command, record.run_id)
    return record


def record_out(record: RunRecord) -> RunRecordOut:
    return RunRecordOut(
        run_id=record.run_id,
        command=record.command,
        mode=record.mode,
        created_at=record.created_at,
        report=RunReport.model_validate(json.loads(record.report_json)),
    )


def list_runs(db: Session, command: Optional[str] = None, limit: int = 50) -> List[RunRecord]:
    query = db.query(RunRecord)
    if command is not None:
        query = query.filter(RunRecord.command == command)
    return query.order_by(RunRecord.run_id.desc()).limit(limit).all()


def get_run(db: Session, run_id: int) -> Optional[RunRecord]:
    return db.query(RunRecord).filter(RunRecord.run_id == run_id).first()


def preset_catalog() -> Dict[str, Dict[str, Dict[str, str]]]:
    return {
        "zeroconf": {name: {k: str(v) for k, v in values.items()} for name, values in zeroconf.PRESETS.items()},
        "crowds": {
            name: {"jondos": ",".join(values["jondos"]), "colls": ",".join(values["colls"]), "p_f": values["p_f"]}
            for name, values in crowds.PRESETS.items()
        },
    }


"""
Route establishment in the Crowds anonymity protocol.

States: Start, Init j for every honest jondo, Mix j for every jondo, End.
Start picks the initiator from `init`, the initiator forwards to a uniform
jondo, every Mix state forwards again with probability p_f (uniform next
jondo) or contacts the server (End).
"""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, Mapping, Optional, Sequence, Tuple

from app.markov.analysis import (
    Distribution,
    UntilQuery,
    certify_ae_until,
    conditional_probability,
    entry_edge_distribution,
    expected_hitting_time,
    until_probability,
)
from app.markov.chain import MarkovChain, validate_chain
from app.markov.errors import InvalidParams, NotHonestJondo
from app.markov.info import JointDistribution, factorizes, mutual_information
from app.markov.scalar import (
    FLOAT_ROW_TOLERANCE,
    INFINITY,
    Arithmetic,
    ExtScalar,
    Scalar,
    parse_scalar,
    total,
    zero,
)

logger = logging.getLogger(__name__)

START = "Start"
END = "End"
_INIT = "Init "
_MIX = "Mix "


def init_label(jondo: str) -> str:
    return _INIT + jondo


def mix_label(jondo: str) -> str:
    return _MIX + jondo


def is_init(label: str) -> bool:
    return label.startswith(_INIT)


def is_mix(label: str) -> bool:
    return label.startswith(_MIX)


def jondo_of(label: str) -> str:
    if is_init(label):
        return label[len(_INIT):]
    if is_mix(label):
        return label[len(_MIX):]
    raise ValueError(f"{label!r} does not reference a jondo")


@dataclass(frozen=True)
class CrowdsDerived:
    J: int
    H: int


@dataclass(frozen=True)
class CrowdsParams:
    jondos: Tuple[str, ...]
    colls: FrozenSet[str]
    p_f: Scalar
    init: Mapping[str, Scalar]
    mode: Arithmetic = Arithmetic.EXACT

    def __post_init__(self):
        if not self.jondos:
            raise InvalidParams("jondos must be nonempty", flag="jondos")
        if len(set(self.jondos)) != len(self.jondos):
            raise InvalidParams("jondo labels must be unique", flag="jondos")
        if not self.colls:
            raise InvalidParams("colls must be nonempty", flag="colls")
        if not self.colls < frozenset(self.jondos):
            raise InvalidParams("colls must be a strict subset of jondos", flag="colls")
        if not 0 < self.p_f < 1:
            raise InvalidParams("need 0 < p_f < 1", flag="pf")
        for jondo, weight in self.init.items():
            if jondo not in self.jondos:
                raise InvalidParams(f"init names unknown jondo {jondo!r}", flag="init")
            if weight < 0:
                raise InvalidParams(f"init {jondo!r} is negative", flag="init")
            if jondo in self.colls and weight != 0:
                raise InvalidParams(f"collaborator {jondo!r} cannot initiate", flag="init")
        mass = total(self.init.values(), self.mode)
        if self.mode == Arithmetic.EXACT and mass != 1:
            raise InvalidParams(f"init sums to {mass}", flag="init")
        if self.mode == Arithmetic.FLOAT and abs(mass - 1.0) > FLOAT_ROW_TOLERANCE:
            raise InvalidParams(f"init sums to {mass}", flag="init")

    @classmethod
    def create(
        cls,
        jondos: Sequence[str],
        colls: Iterable[str],
        p_f,
        init: Optional[Mapping[str, object]] = None,
        mode: Arithmetic = Arithmetic.EXACT,
    ) -> "CrowdsParams":
        colls = frozenset(colls)
        honest = [j for j in jondos if j not in colls]
        if init is None:
            weights = {j: _ratio(1, len(honest), mode) for j in honest} if honest else {}
        else:
            weights = {j: parse_scalar(v, mode) for j, v in init.items()}
        return cls(
            jondos=tuple(jondos),
            colls=colls,
            p_f=parse_scalar(p_f, mode),
            init=weights,
            mode=mode,
        )

    @classmethod
    def from_counts(cls, jondos: int, colls: int, p_f, init=None, mode: Arithmetic = Arithmetic.EXACT) -> "CrowdsParams":
        if jondos < 1:
            raise InvalidParams("need at least one jondo", flag="jondos")
        if colls < 1 or colls > jondos:
            raise InvalidParams(f"colls must lie in 1..{jondos}", flag="colls")
        if colls == jondos:
            raise InvalidParams("colls must be a strict subset of jondos", flag="colls")
        labels = [f"J{k}" for k in range(1, jondos - colls + 1)] + [f"C{k}" for k in range(1, colls + 1)]
        return cls.create(labels, labels[jondos - colls:], p_f, init, mode)

    @property
    def honest(self) -> Tuple[str, ...]:
        return tuple(j for j in self.jondos if j not in self.colls)

    @property
    def J(self) -> int:
        return len(self.jondos)

    @property
    def H(self) -> int:
        return len(self.jondos) - len(self.colls)

    def derived(self) -> CrowdsDerived:
        return CrowdsDerived(J=self.J, H=self.H)

    def weight(self, jondo: str) -> Scalar:
        return self.init.get(jondo, zero(self.mode))


PRESETS: Dict[str, dict] = {
    "three-jondo": {"jondos": ["J1", "J2", "J3"], "colls": ["J3"], "p_f": "1/2"},
}
PRESETS["fig3"] = PRESETS["three-jondo"]


def preset(name: str, mode: Arithmetic = Arithmetic.EXACT) -> CrowdsParams:
    try:
        values = PRESETS[name]
    except KeyError:
        raise InvalidParams(f"unknown preset {name!r}", flag="preset") from None
    return CrowdsParams.create(values["jondos"], values["colls"], values["p_f"], mode=mode)


def _ratio(a: int, b: int, mode: Arithmetic) -> Scalar:
    return Fraction(a, b) if mode == Arithmetic.EXACT else a / b


def states(params: CrowdsParams) -> Tuple[str, ...]:
    return (
        (START,)
        + tuple(init_label(j) for j in params.honest)
        + tuple(mix_label(j) for j in params.jondos)
        + (END,)
    )


def build_crowds(params: CrowdsParams) -> MarkovChain:
    mode = params.mode
    step = _ratio(1, params.J, mode)
    forward = params.p_f * step
    trans: Dict[Tuple[str, str], Scalar] = {}
    for j in params.honest:
        trans[(START, init_label(j))] = params.weight(j)
        for k in params.jondos:
            trans[(init_label(j), mix_label(k))] = step
    for j in params.jondos:
        for k in params.jondos:
            trans[(mix_label(j), mix_label(k))] = forward
        trans[(mix_label(j), END)] = 1 - params.p_f
    trans[(END, END)] = _ratio(1, 1, mode)
    return validate_chain(states(params), trans, mode)


def collaborator_states(params: CrowdsParams) -> FrozenSet[str]:
    return frozenset(mix_label(c) for c in params.colls)


# === Closed forms ===
def prob_hit_colls(params: CrowdsParams) -> Scalar:
    h = _ratio(params.H, params.J, params.mode)
    return (1 - h) / (1 - h * params.p_f)


def _require_honest(params: CrowdsParams, *jondos: str) -> None:
    for jondo in jondos:
        if jondo not in params.honest:
            raise NotHonestJondo(jondo)


def joint_first_last(params: CrowdsParams, i: str, l: str) -> Scalar:
    """Pr(first-jondo = i ∧ last-ncoll = l | hit-colls)."""
    _require_honest(params, i, l)
    cell = params.p_f * _ratio(1, params.J, params.mode)
    if i == l:
        cell += 1 - _ratio(params.H, params.J, params.mode) * params.p_f
    return params.weight(i) * cell


def joint_first_last_table(params: CrowdsParams) -> JointDistribution:
    return JointDistribution(
        mass={(i, l): joint_first_last(params, i, l) for i in params.honest for l in params.honest}
    )


def prob_first_eq_last(params: CrowdsParams) -> Scalar:
    return 1 - _ratio(params.H - 1, params.J, params.mode) * params.p_f


@dataclass(frozen=True)
class ProbableInnocence:
    holds: bool
    threshold: ExtScalar


def probable_innocence(params: CrowdsParams) -> ProbableInnocence:
    if params.H == 1:
        return ProbableInnocence(holds=False, threshold=INFINITY)
    threshold = _ratio(params.J, 2 * (params.H - 1), params.mode)
    return ProbableInnocence(holds=params.p_f >= threshold, threshold=threshold)


def mi_exact(params: CrowdsParams) -> float:
    return mutual_information(joint_first_last_table(params))


def mi_bound(params: CrowdsParams) -> float:
    return float(prob_first_eq_last(params)) * math.log2(params.H)


# === Solver-side counterparts ===
def prob_hit_colls_solver(params: CrowdsParams, chain: Optional[MarkovChain] = None) -> Scalar:
    chain = chain or build_crowds(params)
    query = UntilQuery.of(chain.states, collaborator_states(params), START)
    return until_probability(chain, query)


def first_ncoll_joint_solver(params: CrowdsParams, chain: Optional[MarkovChain] = None) -> JointDistribution:
    """
    Conditional law of (first-jondo, last-ncoll) given hit-colls, read off the
    entry edges into the collaborator Mix states from each Init state.
    """
    chain = chain or build_crowds(params)
    target = collaborator_states(params)
    mode = params.mode
    joint: Dict[Tuple[str, str], Scalar] = {(i, l): zero(mode) for i in params.honest for l in params.honest}
    for i in params.honest:
        weight = chain.prob(START, init_label(i))
        if weight == 0:
            continue
        edges = entry_edge_distribution(chain, target, init_label(i))
        for (pred, _), mass in edges.mass.items():
            joint[(i, jondo_of(pred))] += weight * mass
    hit = prob_hit_colls_solver(params, chain)
    return JointDistribution(
        mass={cell: conditional_probability(mass, hit, mode) for cell, mass in joint.items()}
    )


def prob_first_eq_last_solver(params: CrowdsParams, chain: Optional[MarkovChain] = None) -> Scalar:
    joint = first_ncoll_joint_solver(params, chain)
    return total((joint.get(i, i) for i in params.honest), params.mode)


def first_last_jondo_joint(params: CrowdsParams, chain: Optional[MarkovChain] = None) -> JointDistribution:
    """Unconditional law of (initiator, jondo contacting the server)."""
    chain = chain or build_crowds(params)
    mode = params.mode
    joint: Dict[Tuple[str, str], Scalar] = {(i, l): zero(mode) for i in params.honest for l in params.jondos}
    for i in params.honest:
        weight = chain.prob(START, init_label(i))
        if weight == 0:
            continue
        edges = entry_edge_distribution(chain, {END}, init_label(i))
        for (pred, _), mass in edges.mass.items():
            joint[(i, jondo_of(pred))] += weight * mass
    return JointDistribution(mass=joint)


def last_jondo_distribution(params: CrowdsParams, chain: Optional[MarkovChain] = None) -> Distribution:
    chain = chain or build_crowds(params)
    edges = entry_edge_distribution(chain, {END}, START)
    mass: Dict[str, Scalar] = {}
    for (pred, _), value in edges.mass.items():
        jondo = jondo_of(pred)
        mass[jondo] = mass.get(jondo, zero(params.mode)) + value
    return Distribution(mass=mass, never=edges.never, mode=params.mode)


def is_uniform(distribution: Distribution, support: Sequence[str], mode: Arithmetic) -> bool:
    expected = _ratio(1, len(support), mode)
    for label in support:
        value = distribution.get(label)
        if mode == Arithmetic.EXACT and value != expected:
            return False
        if mode == Arithmetic.FLOAT and abs(value - expected) > FLOAT_ROW_TOLERANCE:
            return False
    return True


# === Report ===
@dataclass
class CrowdsReport:
    params: CrowdsParams
    hit_closed: Scalar
    hit_solver: Scalar
    first_eq_last_closed: Scalar
    first_eq_last_solver: Scalar
    joint_closed: Dict[Tuple[str, str], Scalar]
    joint_solver: Dict[Tuple[str, str], Scalar]
    innocence: ProbableInnocence
    mi_exact: float
    mi_bound: float
    ae_end: bool
    expected_route_steps: ExtScalar
    last_jondo: Distribution
    last_jondo_uniform: bool
    first_last_independent: bool
    first_ncoll_independent: bool
    flags: list = field(default_factory=list)

    @property
    def hit_delta(self) -> Scalar:
        return self.hit_solver - self.hit_closed

    @property
    def first_eq_last_delta(self) -> Scalar:
        return self.first_eq_last_solver - self.first_eq_last_closed

    @property
    def joint_max_delta(self) -> Scalar:
        deltas = [abs(self.joint_solver[cell] - value) for cell, value in self.joint_closed.items()]
        return max(deltas) if deltas else zero(self.params.mode)

    @property
    def mi_within_bound(self) -> bool:
        return self.mi_exact <= self.mi_bound + 1e-9


def crowds_report(params: CrowdsParams) -> CrowdsReport:
    chain = build_crowds(params)
    joint_closed = joint_first_last_table(params)
    joint_solver = first_ncoll_joint_solver(params, chain)
    last = last_jondo_distribution(params, chain)
    report = CrowdsReport(
        params=params,
        hit_closed=prob_hit_colls(params),
        hit_solver=prob_hit_colls_solver(params, chain),
        first_eq_last_closed=prob_first_eq_last(params),
        first_eq_last_solver=total((joint_solver.get(i, i) for i in params.honest), params.mode),
        joint_closed=dict(joint_closed.mass),
        joint_solver=dict(joint_solver.mass),
        innocence=probable_innocence(params),
        mi_exact=mi_exact(params),
        mi_bound=mi_bound(params),
        ae_end=certify_ae_until(chain, UntilQuery.of(chain.states, {END}, START)),
        expected_route_steps=expected_hitting_time(chain, {END}, START),
        last_jondo=last,
        last_jondo_uniform=is_uniform(last, params.jondos, params.mode),
        first_last_independent=factorizes(first_last_jondo_joint(params, chain)),
        first_ncoll_independent=factorizes(joint_solver),
    )
    if not report.mi_within_bound:
        report.flags.append("mutual information exceeds its bound")
        logger.warning("mi %.6f exceeds bound %.6f", report.mi_exact, report.mi_bound)
    return report

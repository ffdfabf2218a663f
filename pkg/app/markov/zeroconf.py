"""
ZeroConf IPv4 link-local address allocation as a Markov reward chain.

A new host picks an address; with probability q it is already used and the
host runs N + 1 probe rounds (Probe 0 .. Probe N). Each round loses the
probe or its answer with probability p. A collision survives all rounds
only with probability p^{N+1}, which ends in Error.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

from app.markov.analysis import (
    UntilQuery,
    certify_ae_until,
    expected_cost_until,
    expected_hitting_time,
    until_probabilities,
)
from app.markov.chain import RewardChain, validate_chain, validate_reward
from app.markov.errors import IndexOutOfRange, InvalidParams
from app.markov.scalar import Arithmetic, ExtScalar, Scalar, one, parse_scalar, total
from app.markov.simulate import Estimate, SimConfig, estimate_cost, estimate_until

logger = logging.getLogger(__name__)

ADDRESS_POOL = 65024
START = "Start"
OK = "Ok"
ERROR = "Error"

ERROR_BOUND = Fraction(1, 10**13)
COST_BOUND = Fraction(7, 1000)


def probe(n: int) -> str:
    return f"Probe {n}"


@dataclass(frozen=True)
class ZeroconfParams:
    N: int
    p: Scalar
    q: Scalar
    r: Scalar
    E: Scalar
    mode: Arithmetic = Arithmetic.EXACT

    def __post_init__(self):
        if self.N < 0:
            raise InvalidParams("probe count N must be a natural number", flag="probes")
        if not 0 < self.p < 1:
            raise InvalidParams("need 0 < p < 1", flag="p")
        if not 0 < self.q < 1:
            raise InvalidParams("need 0 < q < 1", flag="q")
        if self.r < 0:
            raise InvalidParams("need r >= 0", flag="r")
        if self.E < 0:
            raise InvalidParams("need E >= 0", flag="E")

    @classmethod
    def create(cls, N: int, p, q, r=0, E=0, mode: Arithmetic = Arithmetic.EXACT) -> "ZeroconfParams":
        return cls(
            N=int(N),
            p=parse_scalar(p, mode),
            q=parse_scalar(q, mode),
            r=parse_scalar(r, mode),
            E=parse_scalar(E, mode),
            mode=mode,
        )


def collision_probability(hosts: int, mode: Arithmetic = Arithmetic.EXACT) -> Scalar:
    """q for `hosts` hosts already holding one of the 65024 link-local addresses."""
    if hosts < 1 or hosts >= ADDRESS_POOL:
        raise InvalidParams(f"hosts must lie in 1..{ADDRESS_POOL - 1}", flag="hosts")
    q = Fraction(hosts, ADDRESS_POOL)
    return q if mode == Arithmetic.EXACT else float(q)


PRESETS: Dict[str, dict] = {
    "typical": {"N": 2, "p": "1/100", "q": "16/65024", "r": "1/500", "E": "3600"},
}
PRESETS["paper-typical"] = PRESETS["typical"]


def preset(name: str, mode: Arithmetic = Arithmetic.EXACT) -> ZeroconfParams:
    try:
        values = PRESETS[name]
    except KeyError:
        raise InvalidParams(f"unknown preset {name!r}", flag="preset") from None
    return ZeroconfParams.create(mode=mode, **values)


def states(N: int) -> Tuple[str, ...]:
    """Start, Ok, Error, then Probe 0 .. Probe N."""
    return (START, OK, ERROR) + tuple(probe(n) for n in range(N + 1))


def split_sum(f: Callable[[str], Scalar], N: int, mode: Arithmetic = Arithmetic.EXACT) -> Scalar:
    """Σ_S f = f Start + f Ok + f Error + Σ_{n ≤ N} f (Probe n)."""
    head = f(START) + f(OK) + f(ERROR)
    return head + total((f(probe(n)) for n in range(N + 1)), mode)


def build_zeroconf(params: ZeroconfParams) -> RewardChain:
    N, p, q, r = params.N, params.p, params.q, params.r
    trans: Dict[Tuple[str, str], Scalar] = {
        (START, probe(0)): q,
        (START, OK): 1 - q,
        (OK, OK): one(params.mode),
        (ERROR, ERROR): one(params.mode),
    }
    cost: Dict[Tuple[str, str], Scalar] = {
        (START, probe(0)): r,
        (START, OK): r * (N + 1),
    }
    for n in range(N + 1):
        nxt = probe(n + 1) if n < N else ERROR
        trans[(probe(n), nxt)] = p
        trans[(probe(n), START)] = 1 - p
        cost[(probe(n), nxt)] = r if n < N else params.E
    chain = validate_chain(states(N), trans, params.mode)
    return validate_reward(chain, cost)


# === Closed forms ===
def p_err_closed(params: ZeroconfParams) -> Scalar:
    lost = params.p ** (params.N + 1)
    return (params.q * lost) / (1 - params.q * (1 - lost))


def p_err_probe_closed(params: ZeroconfParams, n: int) -> Scalar:
    if n < 0 or n > params.N:
        raise IndexOutOfRange(n, params.N)
    lost = params.p ** (params.N - n + 1)
    return lost + (1 - lost) * p_err_closed(params)


def expected_cost_closed(params: ZeroconfParams) -> Scalar:
    """
    C_fin Start = [q·(r + p^{N+1}·E + r·p·(1 − p^N)/(1 − p)) + (1 − q)·r·(N + 1)]
                  / (1 − q + q·p^{N+1})
    """
    N, p, q, r, E = params.N, params.p, params.q, params.r, params.E
    lost = p ** (N + 1)
    collision = q * (r + lost * E + r * p * (1 - p ** N) / (1 - p))
    fresh = (1 - q) * r * (N + 1)
    return (collision + fresh) / (1 - q + q * lost)


# === Report ===
@dataclass
class ProbeRow:
    n: int
    closed: Scalar
    solver: Scalar

    @property
    def delta(self) -> Scalar:
        return self.solver - self.closed


@dataclass
class ZeroconfReport:
    params: ZeroconfParams
    p_err_closed: Scalar
    p_err_solver: Scalar
    probes: List[ProbeRow]
    cost_closed: Scalar
    cost_solver: ExtScalar
    expected_steps: ExtScalar
    ae_term: Dict[str, bool]
    error_estimate: Optional[Estimate] = None
    cost_estimate: Optional[Estimate] = None
    flags: List[str] = field(default_factory=list)

    @property
    def p_err_delta(self) -> Scalar:
        return self.p_err_solver - self.p_err_closed

    @property
    def cost_delta(self) -> Scalar:
        return self.cost_solver - self.cost_closed

    @property
    def error_within_bound(self) -> bool:
        return self.p_err_closed <= ERROR_BOUND

    @property
    def cost_within_bound(self) -> bool:
        return self.cost_solver <= COST_BOUND


def zeroconf_report(params: ZeroconfParams, sim: Optional[SimConfig] = None) -> ZeroconfReport:
    rchain = build_zeroconf(params)
    chain = rchain.chain
    every = chain.states
    terminal = {OK, ERROR}
    p_err = until_probabilities(chain, every, {ERROR})
    report = ZeroconfReport(
        params=params,
        p_err_closed=p_err_closed(params),
        p_err_solver=p_err[START],
        probes=[ProbeRow(n, p_err_probe_closed(params, n), p_err[probe(n)]) for n in range(params.N + 1)],
        cost_closed=expected_cost_closed(params),
        cost_solver=expected_cost_until(rchain, terminal, START),
        expected_steps=expected_hitting_time(chain, terminal, START),
        ae_term={s: certify_ae_until(chain, UntilQuery.of(every, terminal, s)) for s in every},
    )
    if sim is not None:
        report.error_estimate = estimate_until(chain, UntilQuery.of(every, {ERROR}, START), sim)
        report.cost_estimate = estimate_cost(rchain, terminal, START, sim)

    if not report.error_within_bound:
        report.flags.append(
            f"P_err Start = {float(report.p_err_closed):.6e} exceeds the stated bound 1e-13"
        )
        logger.warning("error probability %.6e above stated bound", float(report.p_err_closed))
    if not report.cost_within_bound:
        report.flags.append(f"expected cost {float(report.cost_solver):.6g} exceeds 0.007")
    return report

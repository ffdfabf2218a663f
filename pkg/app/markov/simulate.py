"""
Seeded Monte Carlo sampling over any chain: the statistical oracle for the exact solver.

Path `i` of a run with seed `s` always draws from `SplitMix64.for_path(s, i)`,
so any split of the sample range aggregates to the same counts.
"""
import logging
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Callable, Collection, Dict, Iterator, List, Optional, Tuple

import numpy as np

from app.markov.analysis import UntilQuery, positive_until_states
from app.markov.chain import MarkovChain, RewardChain
from app.markov.crowds import END, START, is_init, is_mix, jondo_of
from app.markov.errors import InvalidConfig
from app.markov.rng import SplitMix64

logger = logging.getLogger(__name__)

DEFAULT_MAX_STEPS = 10_000


@dataclass(frozen=True)
class SimConfig:
    seed: int
    samples: int
    max_steps: int = DEFAULT_MAX_STEPS

    def __post_init__(self):
        if self.samples < 1:
            raise InvalidConfig("samples must be at least 1", flag="samples")
        if self.max_steps < 1:
            raise InvalidConfig("max_steps must be at least 1", flag="max-steps")


@dataclass(frozen=True)
class Estimate:
    mean: float
    std_error: float
    samples_used: int
    censored: int

    @property
    def decided(self) -> int:
        return self.samples_used - self.censored

    def within(self, value: float, sigmas: float = 3.0) -> bool:
        return abs(self.mean - float(value)) <= sigmas * self.std_error


@dataclass(frozen=True)
class PathSample:
    states: Tuple[str, ...]
    seed: Optional[int] = None
    path_index: Optional[int] = None

    def edges(self) -> List[Tuple[str, str]]:
        return list(zip(self.states, self.states[1:]))


class _Walker:
    """Rows converted once to float cumulative sums for inverse-CDF sampling."""

    def __init__(self, chain: MarkovChain):
        self.chain = chain
        self.cumulative: List[List[float]] = []
        self.targets: List[List[int]] = []
        for row in chain.rows:
            acc = 0.0
            cum = []
            for _, p in row:
                acc += float(p)
                cum.append(acc)
            self.cumulative.append(cum)
            self.targets.append([j for j, _ in row])

    def step(self, i: int, rng: SplitMix64) -> int:
        cum = self.cumulative[i]
        k = bisect_right(cum, rng.random())
        if k >= len(cum):
            k = len(cum) - 1
        return self.targets[i][k]


def sample_path(
    chain: MarkovChain,
    start: str,
    rng: SplitMix64,
    stop: Optional[Callable[[str], bool]] = None,
    horizon: int = DEFAULT_MAX_STEPS,
    walker: Optional[_Walker] = None,
) -> PathSample:
    """Samples from `start` until `stop` holds for the last state or the path has `horizon` states."""
    walker = walker or _Walker(chain)
    current = chain.index(start)
    states = [start]
    while len(states) < horizon and not (stop is not None and stop(states[-1])):
        current = walker.step(current, rng)
        states.append(chain.states[current])
    return PathSample(states=tuple(states))


def sample_paths(
    chain: MarkovChain,
    start: str,
    cfg: SimConfig,
    stop: Optional[Callable[[str], bool]] = None,
) -> Iterator[PathSample]:
    walker = _Walker(chain)
    for i in range(cfg.samples):
        path = sample_path(chain, start, SplitMix64.for_path(cfg.seed, i), stop, cfg.max_steps + 1, walker)
        yield PathSample(states=path.states, seed=cfg.seed, path_index=i)


def estimate_until(chain: MarkovChain, query: UntilQuery, cfg: SimConfig) -> Estimate:
    psi = chain.indices(query.psi)
    # outside Ψ and this set the until event can no longer happen
    alive = chain.indices(positive_until_states(chain, query.phi, query.psi))
    start = chain.index(query.start)
    walker = _Walker(chain)
    successes = 0
    censored = 0
    for i in range(cfg.samples):
        rng = SplitMix64.for_path(cfg.seed, i)
        current = start
        steps = 0
        while True:
            if current in psi:
                successes += 1
                break
            if current not in alive:
                break
            if steps >= cfg.max_steps:
                censored += 1
                break
            current = walker.step(current, rng)
            steps += 1
    decided = cfg.samples - censored
    logger.info("until estimate: %d samples, %d censored", cfg.samples, censored)
    if decided == 0:
        return Estimate(mean=0.0, std_error=0.0, samples_used=cfg.samples, censored=censored)
    mean = successes / decided
    return Estimate(
        mean=mean,
        std_error=math.sqrt(mean * (1.0 - mean) / decided),
        samples_used=cfg.samples,
        censored=censored,
    )


def estimate_cost(rchain: RewardChain, phi: Collection[str], start: str, cfg: SimConfig) -> Estimate:
    chain = rchain.chain
    target = chain.indices(phi)
    origin = chain.index(start)
    walker = _Walker(chain)
    costs = {key: float(value) for key, value in rchain.costs.items()}
    values: List[float] = []
    censored = 0
    for i in range(cfg.samples):
        rng = SplitMix64.for_path(cfg.seed, i)
        current = origin
        accumulated = 0.0
        steps = 0
        while current not in target and steps < cfg.max_steps:
            nxt = walker.step(current, rng)
            accumulated += costs.get((current, nxt), 0.0)
            current = nxt
            steps += 1
        if current in target:
            values.append(accumulated)
        else:
            censored += 1
    logger.info("cost estimate: %d samples, %d censored", cfg.samples, censored)
    if not values:
        return Estimate(mean=0.0, std_error=0.0, samples_used=cfg.samples, censored=censored)
    sample = np.asarray(values, dtype=float)
    std_error = float(sample.std(ddof=1) / math.sqrt(len(sample))) if len(sample) > 1 else 0.0
    return Estimate(mean=float(sample.mean()), std_error=std_error, samples_used=cfg.samples, censored=censored)


# === Route functionals on sampled Crowds paths ===
# A route is the path after Start: Init j, Mix ..., End, End, ...

def _route(path: PathSample) -> Tuple[str, ...]:
    return path.states[1:] if path.states and path.states[0] == START else path.states


def mixing_length(path: PathSample) -> Optional[int]:
    """(least n with ω n = End) − 2; None when End is not reached."""
    route = _route(path)
    if END not in route:
        return None
    return route.index(END) - 2


def first_jondo(path: PathSample) -> Optional[str]:
    route = _route(path)
    return jondo_of(route[0]) if route else None


def last_jondo(path: PathSample) -> Optional[str]:
    length = mixing_length(path)
    if length is None or length < 0:
        return None
    return jondo_of(_route(path)[length + 1])


def first_coll(path: PathSample, colls: Collection[str]) -> Optional[int]:
    for n, label in enumerate(_route(path)):
        if is_mix(label) and jondo_of(label) in colls:
            return n - 1
    return None


def hit_colls(path: PathSample, colls: Collection[str]) -> bool:
    return first_coll(path, colls) is not None


def last_ncoll(path: PathSample, colls: Collection[str]) -> Optional[str]:
    index = first_coll(path, colls)
    if index is None:
        return None
    return jondo_of(_route(path)[index])


def route_shape_ok(path: PathSample, honest: Collection[str]) -> bool:
    """Init of an honest jondo, then Mix states, then End forever (within the sampled prefix)."""
    route = _route(path)
    if not route or not is_init(route[0]) or jondo_of(route[0]) not in honest:
        return False
    length = mixing_length(path)
    if length is None:
        return all(is_mix(label) for label in route[1:])
    if length < 0:
        return False
    if not all(is_mix(label) for label in route[1:length + 2]):
        return False
    return all(label == END for label in route[length + 2:])


@dataclass
class JointCounts:
    counts: Dict[Tuple[str, str], int] = field(default_factory=dict)
    samples: int = 0
    hits: int = 0
    censored: int = 0
    shape_violations: int = 0

    @property
    def empty(self) -> bool:
        return self.hits == 0

    def cell(self, first: str, last: str) -> Estimate:
        if self.hits == 0:
            return Estimate(mean=0.0, std_error=0.0, samples_used=0, censored=self.censored)
        p = self.counts.get((first, last), 0) / self.hits
        return Estimate(
            mean=p,
            std_error=math.sqrt(p * (1.0 - p) / self.hits),
            samples_used=self.hits,
            censored=0,
        )


def estimate_joint_first_last(
    chain: MarkovChain,
    colls: Collection[str],
    honest: Collection[str],
    cfg: SimConfig,
    tail: int = 1,
) -> JointCounts:
    """
    Empirical joint of (first-jondo, last-ncoll) over paths that hit a
    collaborator. Every path is sampled until End plus `tail` further steps
    and checked against the route shape.
    """
    walker = _Walker(chain)
    start = chain.index(START)
    result = JointCounts(samples=cfg.samples)
    colls = frozenset(colls)
    honest = frozenset(honest)
    for i in range(cfg.samples):
        rng = SplitMix64.for_path(cfg.seed, i)
        current = start
        states = [START]
        remaining = None
        while len(states) <= cfg.max_steps:
            current = walker.step(current, rng)
            label = chain.states[current]
            states.append(label)
            if remaining is None and label == END:
                remaining = tail
            elif remaining is not None:
                remaining -= 1
            if remaining == 0 or (remaining is not None and tail == 0):
                break
        path = PathSample(states=tuple(states), seed=cfg.seed, path_index=i)
        if END not in states:
            result.censored += 1
        if not route_shape_ok(path, honest):
            result.shape_violations += 1
        last = last_ncoll(path, colls)
        if last is not None:
            key = (first_jondo(path), last)
            result.counts[key] = result.counts.get(key, 0) + 1
            result.hits += 1
    if result.empty:
        logger.warning("no sampled path hit a collaborator (%d samples)", cfg.samples)
    return result


def prefix_frequencies(chain: MarkovChain, start: str, cfg: SimConfig, length: int) -> Dict[Tuple[str, ...], int]:
    """Counts of the first `length` states after start over all sampled paths."""
    counts: Dict[Tuple[str, ...], int] = {}
    walker = _Walker(chain)
    for i in range(cfg.samples):
        path = sample_path(chain, start, SplitMix64.for_path(cfg.seed, i), horizon=length + 1, walker=walker)
        key = path.states[1:]
        counts[key] = counts.get(key, 0) + 1
    return counts

"""
Graph analysis and exact solving on validated chains.

All path queries are about start·ω: the start state sits at index 0 of the
path and the first transition leaves it. `reachable` needs at least one
transition, so s ∈ reachable(Φ, s) only through a cycle whose intermediate
states lie in Φ.
"""
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Set, Tuple

from app.markov.chain import MarkovChain, RewardChain
from app.markov.errors import (
    ConditionHasZeroProbability,
    InvalidDistribution,
    StartInTarget,
)
from app.markov.linalg import solve
from app.markov.scalar import (
    FLOAT_ROW_TOLERANCE,
    INFINITY,
    Arithmetic,
    ExtScalar,
    Scalar,
    is_one,
    one,
    total,
    zero,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class UntilQuery:
    phi: FrozenSet[str]
    psi: FrozenSet[str]
    start: str

    @classmethod
    def of(cls, phi: Iterable[str], psi: Iterable[str], start: str) -> "UntilQuery":
        return cls(frozenset(phi), frozenset(psi), start)


@dataclass(frozen=True)
class Distribution:
    mass: Mapping[str, Scalar]
    never: Scalar
    mode: Arithmetic = Arithmetic.EXACT

    def total(self) -> Scalar:
        return total(list(self.mass.values()) + [self.never], self.mode)

    def get(self, label: str) -> Scalar:
        return self.mass.get(label, zero(self.mode))


@dataclass(frozen=True)
class EdgeDistribution:
    mass: Mapping[Tuple[str, str], Scalar]
    never: Scalar
    mode: Arithmetic = Arithmetic.EXACT

    def total(self) -> Scalar:
        return total(list(self.mass.values()) + [self.never], self.mode)

    def entry_marginal(self) -> Distribution:
        """Sums out the predecessor."""
        entries: Dict[str, Scalar] = {}
        for (_, entry), value in self.mass.items():
            entries[entry] = entries.get(entry, zero(self.mode)) + value
        return Distribution(mass=entries, never=self.never, mode=self.mode)

    def predecessor_marginal(self) -> Distribution:
        preds: Dict[str, Scalar] = {}
        for (pred, _), value in self.mass.items():
            preds[pred] = preds.get(pred, zero(self.mode)) + value
        return Distribution(mass=preds, never=self.never, mode=self.mode)


def _reachable_indices(chain: MarkovChain, phi: FrozenSet[int], s: int) -> Set[int]:
    found: Set[int] = set()
    stack: List[int] = []
    for j, _ in chain.rows[s]:
        if j not in found:
            found.add(j)
            if j in phi:
                stack.append(j)
    while stack:
        u = stack.pop()
        for v, _ in chain.rows[u]:
            if v not in found:
                found.add(v)
                if v in phi:
                    stack.append(v)
    return found


def reachable(chain: MarkovChain, phi: Iterable[str], s: str) -> FrozenSet[str]:
    phi_idx = chain.indices(phi)
    return chain.labels(_reachable_indices(chain, phi_idx, chain.index(s)))


def _zero_start(chain: MarkovChain, phi: FrozenSet[int], psi: FrozenSet[int], s: int) -> bool:
    if s in psi:
        return False
    if s not in phi:
        return True
    return not (_reachable_indices(chain, phi - psi, s) & psi)


def until_prob_is_zero(chain: MarkovChain, query: UntilQuery) -> bool:
    phi = chain.indices(query.phi)
    psi = chain.indices(query.psi)
    return _zero_start(chain, phi, psi, chain.index(query.start))


def certify_ae_until(chain: MarkovChain, query: UntilQuery) -> bool:
    """
    Sufficient condition for AE start·ω ∈ until Φ Ψ under state fairness.
    False means "not certified", not "fails with positive probability".
    """
    phi = chain.indices(query.phi)
    psi = chain.indices(query.psi)
    start = chain.index(query.start)
    if start not in phi:
        return False
    inner = phi - psi
    reached = _reachable_indices(chain, inner, start)
    if not reached <= (phi | psi):
        return False
    for t in (reached | {start}) - psi:
        if not (_reachable_indices(chain, inner, t) & psi):
            return False
    return True


def _positive_states(chain: MarkovChain, phi: FrozenSet[int], psi: FrozenSet[int]) -> Set[int]:
    """States outside Ψ from which until Φ Ψ has positive probability (backward search)."""
    preds = chain.predecessors()
    inner = phi - psi
    positive: Set[int] = set()
    queue = deque(psi)
    seen = set(psi)
    while queue:
        v = queue.popleft()
        for u in preds[v]:
            if u in inner and u not in seen:
                seen.add(u)
                positive.add(u)
                queue.append(u)
    return positive


def positive_until_states(chain: MarkovChain, phi: Iterable[str], psi: Iterable[str]) -> FrozenSet[str]:
    return chain.labels(_positive_states(chain, chain.indices(phi), chain.indices(psi)))


def _until_vector(chain: MarkovChain, phi: FrozenSet[int], psi: FrozenSet[int]) -> List[Scalar]:
    mode = chain.mode
    x = [zero(mode)] * chain.size
    for s in psi:
        x[s] = one(mode)
    unknown = sorted(_positive_states(chain, phi, psi))
    if not unknown:
        return x
    position = {s: k for k, s in enumerate(unknown)}
    matrix: List[Dict[int, Scalar]] = []
    rhs: List[List[Scalar]] = []
    for s in unknown:
        row: Dict[int, Scalar] = {position[s]: one(mode)}
        b = zero(mode)
        for t, p in chain.rows[s]:
            if t in psi:
                b += p
            elif t in position:
                row[position[t]] = row.get(position[t], zero(mode)) - p
        matrix.append(row)
        rhs.append([b])
    solution = solve(matrix, rhs, mode)
    for s in unknown:
        x[s] = solution[position[s]][0]
    return x


def until_probabilities(chain: MarkovChain, phi: Iterable[str], psi: Iterable[str]) -> Dict[str, Scalar]:
    """The whole vector s ↦ Pr_s(start·ω ∈ until Φ Ψ)."""
    x = _until_vector(chain, chain.indices(phi), chain.indices(psi))
    return {label: x[i] for i, label in enumerate(chain.states)}


def until_probability(chain: MarkovChain, query: UntilQuery) -> Scalar:
    x = _until_vector(chain, chain.indices(query.phi), chain.indices(query.psi))
    return x[chain.index(query.start)]


def _expected_accumulation(chain: MarkovChain, target: FrozenSet[int], start: int, reward) -> ExtScalar:
    mode = chain.mode
    if start in target:
        return zero(mode)
    everything = frozenset(range(chain.size))
    reach = _until_vector(chain, everything, target)
    if not is_one(reach[start], mode):
        return INFINITY
    # successors of a probability-one state are probability-one states
    unknown = sorted(s for s in range(chain.size) if s not in target and is_one(reach[s], mode))
    position = {s: k for k, s in enumerate(unknown)}
    matrix: List[Dict[int, Scalar]] = []
    rhs: List[List[Scalar]] = []
    for s in unknown:
        row: Dict[int, Scalar] = {position[s]: one(mode)}
        b = zero(mode)
        for t, p in chain.rows[s]:
            b += p * reward(s, t)
            if t in position:
                row[position[t]] = row.get(position[t], zero(mode)) - p
        matrix.append(row)
        rhs.append([b])
    solution = solve(matrix, rhs, mode)
    return solution[position[start]][0]


def expected_hitting_time(chain: MarkovChain, phi: Iterable[str], start: str) -> ExtScalar:
    unit = one(chain.mode)
    return _expected_accumulation(chain, chain.indices(phi), chain.index(start), lambda s, t: unit)


def expected_cost_until(rchain: RewardChain, phi: Iterable[str], start: str) -> ExtScalar:
    chain = rchain.chain
    return _expected_accumulation(chain, chain.indices(phi), chain.index(start), rchain.cost_at)


def _pre_entry_visits(chain: MarkovChain, target: FrozenSet[int], start: int) -> Tuple[List[int], List[Scalar]]:
    """
    Expected visits to each non-target state before the first entry into
    target, for paths from start. Only states that can still reach target
    count; y solves y·(I − P_UU) = e_start.
    """
    everything = frozenset(range(chain.size))
    unknown = sorted(_positive_states(chain, everything, target))
    if start not in unknown:
        return [], []
    position = {s: k for k, s in enumerate(unknown)}
    mode = chain.mode
    # transposed system: row for u collects τ(s, u) over s ∈ U
    matrix: List[Dict[int, Scalar]] = [{k: one(mode)} for k in range(len(unknown))]
    for s in unknown:
        for t, p in chain.rows[s]:
            if t in position:
                k = position[t]
                matrix[k][position[s]] = matrix[k].get(position[s], zero(mode)) - p
    rhs = [[one(mode) if s == start else zero(mode)] for s in unknown]
    solution = solve(matrix, rhs, mode)
    return unknown, [solution[k][0] for k in range(len(unknown))]


def first_entry_distribution(chain: MarkovChain, target: Iterable[str], start: str) -> Distribution:
    mode = chain.mode
    target_idx = chain.indices(target)
    s = chain.index(start)
    if s in target_idx:
        return Distribution(mass={start: one(mode)}, never=zero(mode), mode=mode)
    edges = entry_edge_distribution(chain, target, start)
    return edges.entry_marginal()


def entry_edge_distribution(chain: MarkovChain, target: Iterable[str], start: str) -> EdgeDistribution:
    mode = chain.mode
    target_idx = chain.indices(target)
    s = chain.index(start)
    if s in target_idx:
        raise StartInTarget(start)
    unknown, visits = _pre_entry_visits(chain, target_idx, s)
    mass: Dict[Tuple[str, str], Scalar] = {}
    for u, y in zip(unknown, visits):
        for c, p in chain.rows[u]:
            if c in target_idx:
                value = y * p
                if value != 0:
                    mass[(chain.states[u], chain.states[c])] = value
    never = one(mode) - total(mass.values(), mode)
    if mode == Arithmetic.FLOAT and abs(never) <= FLOAT_ROW_TOLERANCE:
        never = max(never, 0.0)
    return EdgeDistribution(mass=mass, never=never, mode=mode)


def conditional_probability(p_joint: Scalar, p_cond: Scalar, mode: Optional[Arithmetic] = None) -> Scalar:
    if p_cond == 0:
        raise ConditionHasZeroProbability()
    slack = FLOAT_ROW_TOLERANCE if mode == Arithmetic.FLOAT or isinstance(p_cond, float) else 0
    if p_joint < -slack or p_joint > p_cond + slack or p_cond > 1 + slack:
        raise InvalidDistribution(f"need 0 <= {p_joint} <= {p_cond} <= 1")
    return p_joint / p_cond

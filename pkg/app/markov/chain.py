"""
Validated Markov chains and Markov reward chains over a finite labelled state set.

Chains are immutable once validated. State labels are the external identity of
a state, indices are internal.
"""
import logging
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Dict, FrozenSet, Iterable, List, Mapping, Sequence, Tuple

from app.markov.errors import (
    DuplicateState,
    EmptyStateSpace,
    NegativeCost,
    NegativeProbability,
    RowSumNotOne,
    UnknownState,
)
from app.markov.scalar import (
    FLOAT_ROW_TOLERANCE,
    Arithmetic,
    Scalar,
    coerce,
    one,
    total,
    zero,
)

logger = logging.getLogger(__name__)

Edge = Tuple[str, str]


@dataclass(frozen=True)
class StateId:
    index: int
    label: str


@dataclass(frozen=True)
class MarkovChain:
    states: Tuple[str, ...]
    trans: Mapping[Tuple[int, int], Scalar]
    mode: Arithmetic
    # rows[i] = ((j, tau i j), ...) sorted by j, only positive entries
    rows: Tuple[Tuple[Tuple[int, Scalar], ...], ...] = field(repr=False)
    _index: Mapping[str, int] = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.states)

    def state(self, label: str) -> StateId:
        return StateId(self.index(label), label)

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise UnknownState(label) from None

    def indices(self, labels: Iterable[str]) -> FrozenSet[int]:
        return frozenset(self.index(label) for label in labels)

    def labels(self, indices: Iterable[int]) -> FrozenSet[str]:
        return frozenset(self.states[i] for i in indices)

    def __contains__(self, label: object) -> bool:
        return label in self._index

    def prob(self, source: str, target: str) -> Scalar:
        return self.trans.get((self.index(source), self.index(target)), zero(self.mode))

    def row(self, label: str) -> Dict[str, Scalar]:
        return {self.states[j]: value for j, value in self.rows[self.index(label)]}

    def edges(self) -> List[Tuple[str, str, Scalar]]:
        return [(self.states[i], self.states[j], v) for (i, j), v in sorted(self.trans.items())]

    def predecessors(self) -> Tuple[Tuple[int, ...], ...]:
        preds: List[List[int]] = [[] for _ in self.states]
        for (i, j) in self.trans:
            preds[j].append(i)
        return tuple(tuple(sorted(p)) for p in preds)


@dataclass(frozen=True)
class RewardChain:
    chain: MarkovChain
    costs: Mapping[Tuple[int, int], Scalar]

    @property
    def mode(self) -> Arithmetic:
        return self.chain.mode

    @property
    def states(self) -> Tuple[str, ...]:
        return self.chain.states

    def cost(self, source: str, target: str) -> Scalar:
        key = (self.chain.index(source), self.chain.index(target))
        return self.costs.get(key, zero(self.mode))

    def cost_at(self, i: int, j: int) -> Scalar:
        return self.costs.get((i, j), zero(self.mode))


def validate_chain(
    states: Sequence[str],
    trans: Mapping[Edge, object],
    mode: Arithmetic = Arithmetic.EXACT,
) -> MarkovChain:
    """
    Checks a transition table and returns an immutable chain.
    Never repairs: explicit zero entries are dropped, everything else must
    already be a valid row-stochastic matrix.
    """
    if len(states) == 0:
        raise EmptyStateSpace()

    index: Dict[str, int] = {}
    for label in states:
        if label in index:
            raise DuplicateState(label)
        index[label] = len(index)

    entries: Dict[Tuple[int, int], Scalar] = {}
    for (source, target), raw in trans.items():
        if source not in index:
            raise UnknownState(source)
        if target not in index:
            raise UnknownState(target)
        value = coerce(raw, mode)
        if value < 0:
            raise NegativeProbability(source, target, value)
        if value == 0:
            continue
        entries[(index[source], index[target])] = value

    rows: List[List[Tuple[int, Scalar]]] = [[] for _ in states]
    for (i, j), value in sorted(entries.items()):
        rows[i].append((j, value))

    for i, row in enumerate(rows):
        row_sum = total((v for _, v in row), mode)
        if mode == Arithmetic.EXACT:
            ok = row_sum == 1
        else:
            ok = abs(row_sum - 1.0) <= FLOAT_ROW_TOLERANCE
        if not ok:
            raise RowSumNotOne(states[i], row_sum)

    logger.debug("validated chain: %d states, %d edges, %s mode", len(states), len(entries), mode.value)
    return MarkovChain(
        states=tuple(states),
        trans=MappingProxyType(entries),
        mode=mode,
        rows=tuple(tuple(r) for r in rows),
        _index=MappingProxyType(index),
    )


def validate_reward(chain: MarkovChain, cost: Mapping[Edge, object]) -> RewardChain:
    entries: Dict[Tuple[int, int], Scalar] = {}
    for (source, target), raw in cost.items():
        value = coerce(raw, chain.mode)
        if value < 0:
            raise NegativeCost(source, target, value)
        key = (chain.index(source), chain.index(target))
        if value != 0:
            entries[key] = value
    return RewardChain(chain=chain, costs=MappingProxyType(entries))


def successors(chain: MarkovChain, s: str) -> FrozenSet[str]:
    return frozenset(chain.states[j] for j, _ in chain.rows[chain.index(s)])


def path_prefix_prob(chain: MarkovChain, start: str, prefix: Sequence[str]) -> Scalar:
    """Probability of the cylinder of paths from `start` that begin with `prefix`."""
    current = chain.index(start)
    result = one(chain.mode)
    for label in prefix:
        nxt = chain.index(label)
        result = result * chain.trans.get((current, nxt), zero(chain.mode))
        current = nxt
    return result

"""Seeded random rational chains checked against the solver's defining identities."""
import itertools
import random
from fractions import Fraction

import pytest

from app.markov.analysis import (
    UntilQuery,
    certify_ae_until,
    expected_hitting_time,
    until_prob_is_zero,
    until_probabilities,
)
from app.markov.chain import path_prefix_prob, successors
from app.markov.scalar import INFINITY
from tests.conftest import make_chain

CHAINS = 200
HORIZON = 12


def random_chain(rng: random.Random):
    n = rng.randint(1, 6)
    states = [f"s{k}" for k in range(n)]
    edges = {}
    for source in states:
        support = rng.sample(states, rng.randint(1, n))
        weights = [rng.randint(1, 9) for _ in support]
        for target, weight in zip(support, weights):
            edges[(source, target)] = Fraction(weight, sum(weights))
    return make_chain(states, edges)


def random_subset(rng: random.Random, states):
    return frozenset(s for s in states if rng.random() < 0.5)


def cases():
    rng = random.Random(20240101)
    for k in range(CHAINS):
        chain = random_chain(rng)
        phi = random_subset(rng, chain.states) | {rng.choice(chain.states)}
        psi = random_subset(rng, chain.states)
        yield pytest.param(chain, phi, psi, id=f"chain{k}")


CASES = list(cases())


def bounded_until(chain, phi, psi, start):
    """(mass decided true within HORIZON steps, mass still undecided)."""
    if start in psi:
        return Fraction(1), Fraction(0)
    if start not in phi:
        return Fraction(0), Fraction(0)
    running = {start: Fraction(1)}
    hit = Fraction(0)
    for _ in range(HORIZON):
        nxt = {}
        for s, mass in running.items():
            for t, p in chain.row(s).items():
                if t in psi:
                    hit += mass * p
                elif t in phi:
                    nxt[t] = nxt.get(t, Fraction(0)) + mass * p
        running = nxt
    return hit, sum(running.values(), Fraction(0))


@pytest.mark.parametrize("chain, phi, psi", CASES)
def test_bellman_identity_has_zero_residual(chain, phi, psi):
    x = until_probabilities(chain, phi, psi)
    for s in chain.states:
        if s in psi:
            assert x[s] == 1
        elif s not in phi:
            assert x[s] == 0
        else:
            assert x[s] == sum((p * x[t] for t, p in chain.row(s).items()), Fraction(0))


@pytest.mark.parametrize("chain, phi, psi", CASES)
def test_agrees_with_bounded_prefixes(chain, phi, psi):
    x = until_probabilities(chain, phi, psi)
    for s in chain.states:
        hit, undecided = bounded_until(chain, phi, psi, s)
        assert hit <= x[s] <= hit + undecided


@pytest.mark.parametrize("chain, phi, psi", CASES)
def test_zero_criterion_matches_solver(chain, phi, psi):
    x = until_probabilities(chain, phi, psi)
    for s in chain.states:
        assert until_prob_is_zero(chain, UntilQuery.of(phi, psi, s)) == (x[s] == 0)


@pytest.mark.parametrize("chain, phi, psi", CASES[:50])
def test_monotone_in_target(chain, phi, psi):
    x = until_probabilities(chain, phi, psi)
    y = until_probabilities(chain, phi, psi | {chain.states[0]})
    assert all(x[s] <= y[s] for s in chain.states)


@pytest.mark.parametrize("chain, phi, psi", CASES[:50])
def test_monotone_in_constraint(chain, phi, psi):
    x = until_probabilities(chain, phi, psi)
    for extra in chain.states:
        y = until_probabilities(chain, phi | {extra}, psi)
        assert all(x[s] <= y[s] for s in chain.states)


@pytest.mark.parametrize("chain, phi, psi", CASES[:50])
def test_certified_queries_hold_almost_surely(chain, phi, psi):
    x = until_probabilities(chain, phi, psi)
    for s in chain.states:
        if certify_ae_until(chain, UntilQuery.of(phi, psi, s)):
            assert x[s] == 1
            assert expected_hitting_time(chain, psi, s) is not INFINITY


@pytest.mark.parametrize("chain, phi, psi", CASES[:20])
def test_short_prefixes_enumerate_the_cylinders(chain, phi, psi):
    start = chain.states[0]
    for length in range(1, 4):
        mass = sum(
            (path_prefix_prob(chain, start, prefix) for prefix in itertools.product(chain.states, repeat=length)),
            Fraction(0),
        )
        assert mass == 1
    first = {prefix[0] for prefix in itertools.product(chain.states, repeat=1)
             if path_prefix_prob(chain, start, prefix) > 0}
    assert first == successors(chain, start)

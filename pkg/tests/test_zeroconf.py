import itertools
from fractions import Fraction

import pytest

from app.markov.analysis import UntilQuery, expected_cost_until, until_probabilities, until_probability
from app.markov.errors import IndexOutOfRange, InvalidParams
from app.markov.scalar import INFINITY, Arithmetic
from app.markov.zeroconf import (
    COST_BOUND,
    ERROR,
    ERROR_BOUND,
    OK,
    START,
    ZeroconfParams,
    build_zeroconf,
    collision_probability,
    expected_cost_closed,
    p_err_closed,
    p_err_probe_closed,
    preset,
    probe,
    split_sum,
    states,
    zeroconf_report,
)

ODD_TENTHS = [Fraction(k, 10) for k in (1, 3, 5, 7, 9)]
GRID = list(itertools.product(range(5), ODD_TENTHS, ODD_TENTHS))
TYPICAL_P_ERR = Fraction(1, 4063000001)
TYPICAL_COST = Fraction(243836202, 40630000010)


@pytest.mark.parametrize("N, p, q", GRID)
def test_p_err_matches_closed_form(N, p, q):
    params = ZeroconfParams.create(N, p, q)
    chain = build_zeroconf(params).chain
    solver = until_probability(chain, UntilQuery.of(chain.states, {ERROR}, START))
    assert solver - (q * p ** (N + 1)) / (1 - q * (1 - p ** (N + 1))) == 0
    assert solver == p_err_closed(params)


@pytest.mark.parametrize("N, p, q", GRID)
def test_p_err_per_probe(N, p, q):
    params = ZeroconfParams.create(N, p, q)
    chain = build_zeroconf(params).chain
    vector = until_probabilities(chain, chain.states, {ERROR})
    for n in range(N + 1):
        assert vector[probe(n)] == p_err_probe_closed(params, n)


@pytest.mark.parametrize("N, p, q", GRID[::5])
@pytest.mark.parametrize("r, E", list(itertools.product([0, Fraction(1, 2), 3600], repeat=2)))
def test_expected_cost_matches_closed_form(N, p, q, r, E):
    params = ZeroconfParams.create(N, p, q, r, E)
    rchain = build_zeroconf(params)
    assert expected_cost_until(rchain, {ERROR, OK}, START) == expected_cost_closed(params)


def test_typical_values():
    params = preset("typical")
    assert params.q == Fraction(1, 4064)
    assert p_err_closed(params) == TYPICAL_P_ERR
    assert float(TYPICAL_P_ERR) == pytest.approx(2.4612e-10, rel=1e-4)
    cost = expected_cost_until(build_zeroconf(params), {ERROR, OK}, START)
    assert cost == TYPICAL_COST
    assert cost <= COST_BOUND


def test_paper_typical_is_an_alias_of_typical():
    assert preset("paper-typical") == preset("typical")
    assert preset("paper-typical", Arithmetic.FLOAT) == preset("typical", Arithmetic.FLOAT)


def test_error_bound_audit_is_flagged_not_failed():
    report = zeroconf_report(preset("typical"))
    assert report.p_err_solver == TYPICAL_P_ERR
    assert report.p_err_delta == 0
    assert not report.error_within_bound
    assert TYPICAL_P_ERR > ERROR_BOUND
    assert report.cost_within_bound
    assert any("exceeds" in flag for flag in report.flags)


def test_report_covers_every_probe_and_state():
    report = zeroconf_report(ZeroconfParams.create(3, "1/10", "1/2", 1, 5))
    assert [row.n for row in report.probes] == [0, 1, 2, 3]
    assert all(row.delta == 0 for row in report.probes)
    assert report.cost_delta == 0
    assert set(report.ae_term) == set(states(3))
    assert all(report.ae_term.values())
    assert report.expected_steps is not INFINITY


def test_n1_half_values():
    report = zeroconf_report(ZeroconfParams.create(1, "1/2", "1/2", 1, 0))
    assert report.p_err_solver == Fraction(1, 5)
    assert report.cost_solver == Fraction(14, 5)
    assert report.expected_steps == Fraction(14, 5)


def test_probe_index_out_of_range():
    params = ZeroconfParams.create(2, "1/2", "1/2")
    with pytest.raises(IndexOutOfRange):
        p_err_probe_closed(params, 3)
    with pytest.raises(IndexOutOfRange):
        p_err_probe_closed(params, -1)


@pytest.mark.parametrize(
    "kwargs, flag",
    [
        (dict(N=1, p=1, q="1/2"), "p"),
        (dict(N=1, p=0, q="1/2"), "p"),
        (dict(N=1, p="1/2", q=1), "q"),
        (dict(N=-1, p="1/2", q="1/2"), "probes"),
        (dict(N=1, p="1/2", q="1/2", r=-1), "r"),
        (dict(N=1, p="1/2", q="1/2", E="-1/2"), "E"),
    ],
)
def test_invalid_params_name_the_flag(kwargs, flag):
    with pytest.raises(InvalidParams) as info:
        ZeroconfParams.create(**kwargs)
    assert info.value.flag == flag


def test_hosts_helper():
    assert collision_probability(16) == Fraction(16, 65024)
    assert collision_probability(16, Arithmetic.FLOAT) == 16 / 65024
    with pytest.raises(InvalidParams):
        collision_probability(0)


def test_split_sum_enumerates_states():
    assert split_sum(lambda s: 1, 4) == 8
    assert split_sum(lambda s: Fraction(1, 2) if s.startswith("Probe") else 0, 2) == Fraction(3, 2)


def test_float_mode_agrees_with_exact():
    exact = zeroconf_report(preset("typical"))
    approx = zeroconf_report(preset("typical", Arithmetic.FLOAT))
    assert approx.p_err_solver == pytest.approx(float(exact.p_err_solver), rel=1e-9)
    assert approx.cost_solver == pytest.approx(float(exact.cost_solver), rel=1e-9)

import math
from fractions import Fraction

import pytest

from app.markov.analysis import UntilQuery, certify_ae_until, expected_hitting_time
from app.markov.crowds import (
    END,
    START,
    CrowdsParams,
    build_crowds,
    crowds_report,
    first_last_jondo_joint,
    first_ncoll_joint_solver,
    joint_first_last,
    last_jondo_distribution,
    mi_bound,
    mi_exact,
    preset,
    prob_first_eq_last,
    prob_first_eq_last_solver,
    prob_hit_colls,
    prob_hit_colls_solver,
    probable_innocence,
)
from app.markov.errors import InvalidParams, NotHonestJondo
from app.markov.info import factorizes
from app.markov.scalar import INFINITY, Arithmetic

PF = [Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)]
GRID = [(J, C, pf) for J in range(3, 9) for C in range(1, J - 1) for pf in PF]


def params_for(J, C, pf, mode=Arithmetic.EXACT):
    return CrowdsParams.from_counts(J, C, pf, mode=mode)


@pytest.mark.parametrize("J, C, pf", GRID)
def test_hit_colls_matches_closed_form(J, C, pf):
    params = params_for(J, C, pf)
    H = Fraction(J - C, J)
    assert prob_hit_colls_solver(params) == prob_hit_colls(params) == (1 - H) / (1 - H * pf)


@pytest.mark.parametrize("J, C, pf", GRID)
def test_joint_first_last_matches_closed_form(J, C, pf):
    params = params_for(J, C, pf)
    solver = first_ncoll_joint_solver(params)
    for i in params.honest:
        for l in params.honest:
            assert solver.get(i, l) == joint_first_last(params, i, l)
    assert prob_first_eq_last_solver(params) == prob_first_eq_last(params) == 1 - Fraction(params.H - 1, J) * pf


@pytest.mark.parametrize("J, C, pf", GRID)
def test_route_terminates_almost_surely(J, C, pf):
    params = params_for(J, C, pf)
    chain = build_crowds(params)
    assert certify_ae_until(chain, UntilQuery.of(chain.states, {END}, START))
    assert expected_hitting_time(chain, {END}, START) is not INFINITY


@pytest.mark.parametrize("J, C, pf", GRID)
def test_first_and_last_jondo_are_independent(J, C, pf):
    params = params_for(J, C, pf)
    assert factorizes(first_last_jondo_joint(params))
    last = last_jondo_distribution(params)
    assert last.never == 0
    assert all(last.get(j) == Fraction(1, J) for j in params.jondos)


def boundary_points():
    for J in range(3, 9):
        for C in range(1, J - 1):
            H = J - C
            threshold = Fraction(J, 2 * (H - 1))
            if threshold < 1:
                yield J, C, threshold


@pytest.mark.parametrize("J, C, pf", GRID + list(boundary_points()))
def test_probable_innocence(J, C, pf):
    params = params_for(J, C, pf)
    verdict = probable_innocence(params)
    diagonal = prob_first_eq_last(params)
    if verdict.holds:
        assert diagonal <= Fraction(1, 2)
    if params.H > 1 and pf < verdict.threshold:
        assert diagonal > Fraction(1, 2)


@pytest.mark.parametrize("J, C, pf", list(boundary_points()))
def test_innocence_boundary_is_exactly_one_half(J, C, pf):
    params = params_for(J, C, pf)
    assert probable_innocence(params).holds
    assert prob_first_eq_last(params) == Fraction(1, 2)


@pytest.mark.parametrize("J, C, pf", GRID)
def test_mutual_information_bound(J, C, pf):
    params = params_for(J, C, pf)
    assert mi_exact(params) <= mi_bound(params) + 1e-9
    assert mi_bound(params) == pytest.approx(float(prob_first_eq_last(params)) * math.log2(params.H))


def test_single_honest_jondo_leaks_nothing():
    params = params_for(3, 2, Fraction(1, 2))
    assert params.H == 1
    assert mi_exact(params) == 0
    assert mi_bound(params) == 0
    assert not probable_innocence(params).holds
    assert probable_innocence(params).threshold is INFINITY


def test_three_jondos_one_collaborator():
    params = preset("three-jondo")
    assert prob_hit_colls(params) == Fraction(1, 2)
    assert prob_first_eq_last(params) == Fraction(5, 6)
    assert joint_first_last(params, "J1", "J1") == Fraction(5, 12)
    assert joint_first_last(params, "J1", "J2") == Fraction(1, 12)
    assert mi_exact(params) == pytest.approx(0.34998, abs=1e-4)
    assert mi_bound(params) == pytest.approx(5 / 6)


def test_counts_generate_labels():
    params = CrowdsParams.from_counts(5, 2, "1/2")
    assert params.jondos == ("J1", "J2", "J3", "C1", "C2")
    assert params.colls == {"C1", "C2"}
    assert params.init == {"J1": Fraction(1, 3), "J2": Fraction(1, 3), "J3": Fraction(1, 3)}


def test_probable_innocence_at_threshold():
    params = params_for(10, 2, Fraction(5, 7))
    verdict = probable_innocence(params)
    assert verdict.threshold == Fraction(10, 14)
    assert verdict.holds


def test_non_uniform_initiator():
    params = CrowdsParams.create(["J1", "J2", "J3"], ["J3"], "1/2", {"J1": "1/4", "J2": "3/4"})
    solver = first_ncoll_joint_solver(params)
    assert solver.get("J2", "J2") == joint_first_last(params, "J2", "J2") == Fraction(3, 4) * Fraction(5, 6)
    assert prob_first_eq_last_solver(params) == Fraction(5, 6)


@pytest.mark.parametrize(
    "args, flag",
    [
        ((["J1", "J2"], ["J1", "J2"], "1/2"), "colls"),
        ((["J1", "J2"], [], "1/2"), "colls"),
        ((["J1", "J2"], ["J3"], "1/2"), "colls"),
        ((["J1", "J2"], ["J2"], "1"), "pf"),
        ((["J1", "J1"], ["J1"], "1/2"), "jondos"),
    ],
)
def test_invalid_params(args, flag):
    with pytest.raises(InvalidParams) as info:
        CrowdsParams.create(*args)
    assert info.value.flag == flag


def test_invalid_counts_and_init():
    with pytest.raises(InvalidParams):
        CrowdsParams.from_counts(2, 2, "1/2")
    with pytest.raises(InvalidParams):
        CrowdsParams.create(["J1", "J2"], ["J2"], "1/2", {"J1": "1/2", "J2": "1/2"})
    with pytest.raises(InvalidParams):
        CrowdsParams.create(["J1", "J2", "J3"], ["J3"], "1/2", {"J1": "1/2", "J2": "1/3"})


def test_collaborator_is_not_a_valid_cell():
    with pytest.raises(NotHonestJondo):
        joint_first_last(preset("three-jondo"), "J3", "J1")


def test_report_cross_checks():
    report = crowds_report(params_for(6, 2, Fraction(3, 4)))
    assert report.hit_delta == 0
    assert report.first_eq_last_delta == 0
    assert report.joint_max_delta == 0
    assert report.ae_end
    assert report.last_jondo_uniform
    assert report.first_last_independent
    assert not report.first_ncoll_independent
    assert report.mi_within_bound
    assert report.flags == []


def test_float_report_agrees_with_exact():
    exact = crowds_report(preset("three-jondo"))
    approx = crowds_report(preset("three-jondo", Arithmetic.FLOAT))
    assert approx.hit_solver == pytest.approx(float(exact.hit_solver), rel=1e-9)
    assert approx.first_eq_last_solver == pytest.approx(float(exact.first_eq_last_solver), rel=1e-9)
    assert approx.mi_exact == pytest.approx(exact.mi_exact, rel=1e-9)


@pytest.mark.parametrize("J, C, pf", [(4, 1, Fraction(1, 2)), (7, 1, Fraction(1, 2)), (6, 3, Fraction(1, 4))])
def test_initiator_and_last_honest_jondo_are_dependent(J, C, pf):
    report = crowds_report(params_for(J, C, pf))
    assert report.first_last_independent
    assert not report.first_ncoll_independent
    assert report.mi_exact > 0


def test_fig3_is_an_alias_of_three_jondo():
    assert preset("fig3") == preset("three-jondo")

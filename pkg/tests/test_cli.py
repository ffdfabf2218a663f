import csv
import io
import json
from fractions import Fraction

import pytest
from click.testing import CliRunner

from app.cli import cli
from app.markov.errors import EXIT_IO, EXIT_MODEL, EXIT_PARAMS, EXIT_PARSE, EXIT_UNKNOWN_STATE, EXIT_USAGE
from app.reports import CROWDS_CSV_COLUMNS, ZEROCONF_CSV_COLUMNS


@pytest.fixture
def runner():
    return CliRunner()


def run_json(runner, args):
    result = runner.invoke(cli, args + ["--json"])
    assert result.exit_code == 0, result.output
    return json.loads(result.stdout)


def results(report):
    return {item["name"]: item for item in report["results"]}


def test_solve_zeroconf_error_probability(runner, models_dir):
    report = run_json(runner, ["solve", str(models_dir / "zeroconf-n1.json"), "--until", "ALL=>Error", "--start", "Start"])
    assert results(report)["until_probability"]["value"] == "1/5"
    assert results(report)["until_probability"]["provenance"] == "solver"
    assert report["verdicts"] == {"prob_is_zero": False, "almost_sure": False}
    assert report["mode"] == "exact"


def test_solve_with_cost_and_hitting(runner, models_dir):
    report = run_json(runner, [
        "solve", str(models_dir / "zeroconf-n1.json"), "--until", "ALL=>Ok,Error", "--start", "Start",
        "--cost", "Ok,Error", "--hitting", "Ok,Error",
    ])
    values = results(report)
    assert values["until_probability"]["value"] == "1/1"
    assert values["expected_cost"]["value"] == "14/5"
    assert values["expected_hitting_time"]["value"] == "14/5"
    assert report["verdicts"]["almost_sure"]


def test_solve_start_in_target(runner, models_dir):
    report = run_json(runner, ["solve", str(models_dir / "zeroconf-n1.json"), "--until", "ALL=>Start", "--start", "Start"])
    assert results(report)["until_probability"]["value"] == "1/1"


def test_solve_unknown_start(runner, models_dir):
    result = runner.invoke(cli, ["solve", str(models_dir / "zeroconf-n1.json"), "--until", "ALL=>Error", "--start", "X"])
    assert result.exit_code == EXIT_UNKNOWN_STATE
    assert json.loads(result.stderr)["error"] == "UnknownState"


def test_solve_requires_until(runner, models_dir):
    result = runner.invoke(cli, ["solve", str(models_dir / "zeroconf-n1.json"), "--start", "Start"])
    assert result.exit_code == EXIT_USAGE


def test_validate_ok(runner, models_dir):
    result = runner.invoke(cli, ["validate", str(models_dir / "crowds-three-jondo.json")])
    assert result.exit_code == 0
    assert "valid: yes" in result.stdout


def test_validate_row_sum(runner, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"states": ["a", "b"], "transitions": [
        {"from": "a", "to": "a", "prob": "1/2"}, {"from": "a", "to": "b", "prob": "1/3"},
        {"from": "b", "to": "b", "prob": "1"}]}))
    result = runner.invoke(cli, ["validate", str(path), "--json"])
    assert result.exit_code == EXIT_MODEL
    report = json.loads(result.stdout)
    assert report["verdicts"]["valid"] is False
    assert results(report)["row_sum[a]"]["value"] == "5/6"
    assert "row_sum[b]" not in results(report)
    assert "'a'" in json.loads(result.stderr)["message"]


def test_validate_negative_reward(runner, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"states": ["a", "b"], "transitions": [
        {"from": "a", "to": "b", "prob": 1}, {"from": "b", "to": "b", "prob": 1}],
        "rewards": [{"from": "a", "to": "b", "cost": "-2"}]}))
    result = runner.invoke(cli, ["validate", str(path)])
    assert result.exit_code == EXIT_MODEL
    error = json.loads(result.stderr)
    assert error["error"] == "NegativeCost"
    assert "'a' -> 'b'" in error["message"]


def test_validate_io_and_parse_errors(runner, tmp_path):
    assert runner.invoke(cli, ["validate", str(tmp_path / "nothing.json")]).exit_code == EXIT_IO
    path = tmp_path / "broken.json"
    path.write_text("{")
    assert runner.invoke(cli, ["validate", str(path)]).exit_code == EXIT_PARSE


def test_zeroconf_with_hosts(runner):
    report = run_json(runner, ["zeroconf", "--hosts", "16", "--probes", "2", "--p", "1/100", "--r", "1/500", "--E", "3600"])
    values = results(report)
    assert report["parameters"]["q"] == "1/4064"
    assert values["p_err_start.closed"]["value"] == "1/4063000001"
    assert values["p_err_start.solver"]["value"] == "1/4063000001"
    assert values["expected_cost.solver"]["approx"] <= 0.007
    assert report["verdicts"]["cost_within_stated_bound"]
    assert not report["verdicts"]["p_err_within_stated_bound"]
    assert report["verdicts"]["closed_matches_solver"]
    assert report["flags"]


def test_zeroconf_preset_matches_flags(runner):
    by_preset = run_json(runner, ["zeroconf", "--preset", "typical"])
    by_flags = run_json(runner, ["zeroconf", "--probes", "2", "--p", "0.01", "--q", "16/65024", "--r", "1/500", "--E", "3600"])
    assert by_preset["results"] == by_flags["results"]


def test_zeroconf_invalid_p(runner):
    result = runner.invoke(cli, ["zeroconf", "--probes", "1", "--p", "1", "--q", "1/2"])
    assert result.exit_code == EXIT_PARAMS
    assert "p:" in json.loads(result.stderr)["message"]


def test_zeroconf_q_and_hosts_conflict(runner):
    result = runner.invoke(cli, ["zeroconf", "--probes", "1", "--p", "1/2", "--q", "1/2", "--hosts", "3"])
    assert result.exit_code == EXIT_PARAMS


def test_zeroconf_sweep_rows(runner):
    result = runner.invoke(cli, ["zeroconf", "--q", "1/2", "--sweep", "p=1/100,1/10;probes=1,2,3"])
    assert result.exit_code == 0, result.output
    rows = list(csv.reader(io.StringIO(result.stdout)))
    assert rows[0] == ZEROCONF_CSV_COLUMNS
    assert len(rows) == 7
    assert [(row[0], row[1]) for row in rows[1:]] == [
        ("1", "1/100"), ("2", "1/100"), ("3", "1/100"), ("1", "1/10"), ("2", "1/10"), ("3", "1/10"),
    ]
    assert all(row[ZEROCONF_CSV_COLUMNS.index("p_err_delta")] == "0/1" for row in rows[1:])


def test_zeroconf_bad_sweep_axis(runner):
    result = runner.invoke(cli, ["zeroconf", "--q", "1/2", "--sweep", "pf=1/2"])
    assert result.exit_code == EXIT_PARAMS


def test_exact_and_float_agree(runner):
    exact = results(run_json(runner, ["zeroconf", "--preset", "typical", "--exact"]))
    approx = results(run_json(runner, ["zeroconf", "--preset", "typical", "--float"]))
    for name in ("p_err_start.solver", "expected_cost.solver", "expected_steps.solver"):
        assert approx[name]["approx"] == pytest.approx(exact[name]["approx"], rel=1e-9)


def test_crowds_three_jondos(runner):
    report = run_json(runner, ["crowds", "--jondos", "3", "--colls", "1", "--pf", "1/2"])
    values = results(report)
    assert values["hit_colls.closed"]["value"] == "1/2"
    assert values["first_eq_last.closed"]["value"] == "5/6"
    assert values["joint.max_delta"]["value"] == "0/1"
    assert values["mi.exact"]["approx"] <= values["mi.bound"]["approx"]
    assert report["parameters"]["jondos"] == "J1,J2,C1"


def test_crowds_invalid_colls(runner):
    result = runner.invoke(cli, ["crowds", "--jondos", "2", "--colls", "2", "--pf", "1/2"])
    assert result.exit_code == EXIT_PARAMS


def test_crowds_probable_innocence(runner):
    report = run_json(runner, ["crowds", "--jondos", "10", "--colls", "2", "--pf", "5/7"])
    assert report["verdicts"]["probable_innocence"]
    assert results(report)["innocence.threshold"]["value"] == "5/7"


def test_crowds_init_file(runner, tmp_path):
    path = tmp_path / "init.json"
    path.write_text(json.dumps({"J1": "1/4", "J2": "3/4"}))
    report = run_json(runner, ["crowds", "--jondos", "3", "--colls", "1", "--pf", "1/2", "--init", str(path)])
    assert results(report)["joint[J2,J2].closed"]["value"] == "5/8"


def test_crowds_sweep(runner):
    result = runner.invoke(cli, ["crowds", "--colls", "1", "--pf", "1/2", "--sweep", "jondos=3,5,8"])
    assert result.exit_code == 0, result.output
    rows = list(csv.DictReader(io.StringIO(result.stdout)))
    assert list(rows[0]) == CROWDS_CSV_COLUMNS
    assert [row["J"] for row in rows] == ["3", "5", "8"]
    hits = [Fraction(row["hit_closed"]) for row in rows]
    assert hits == [Fraction(1, 2), Fraction(1, 3), Fraction(2, 9)]


def test_crowds_with_simulation(runner):
    report = run_json(runner, ["crowds", "--preset", "three-jondo", "--samples", "2000", "--seed", "4"])
    assert report["verdicts"]["route_shapes_ok"]
    assert results(report)["joint[J1,J1].simulated"]["provenance"] == "simulation"


def test_simulate_is_byte_identical(runner, models_dir):
    args = ["simulate", str(models_dir / "zeroconf-n1.json"), "--start", "Start",
            "--event", "until:ALL=>Error", "--seed", "9", "--samples", "3000", "--json"]
    first = runner.invoke(cli, args)
    second = runner.invoke(cli, args)
    assert first.exit_code == 0, first.output
    assert first.stdout == second.stdout
    report = json.loads(first.stdout)
    assert results(report)["until_probability.solver"]["value"] == "1/5"
    assert results(report)["until_probability.censored"]["value"] == "0"


def test_simulate_absorbed_paths_are_not_censored(runner, models_dir):
    report = run_json(runner, ["simulate", str(models_dir / "zeroconf-n1.json"), "--start", "Start",
                               "--event", "until:ALL=>Error", "--seed", "9", "--samples", "3000", "--max-steps", "200"])
    by_name = results(report)
    assert by_name["until_probability.censored"]["value"] == "0"
    assert abs(by_name["until_probability.simulated"]["approx"] - 0.2) <= 4 * by_name["until_probability.std_error"]["approx"]


def test_simulate_zero_samples_is_usage_error(runner, models_dir):
    result = runner.invoke(cli, ["simulate", str(models_dir / "zeroconf-n1.json"), "--start", "Start",
                                 "--event", "until:ALL=>Error", "--samples", "0"])
    assert result.exit_code == EXIT_USAGE


def test_simulate_preset_cost(runner):
    report = run_json(runner, ["simulate", "--preset", "zeroconf:typical", "--event", "cost:Ok,Error",
                               "--samples", "500", "--seed", "2"])
    assert report["parameters"]["start"] == "Start"
    assert "expected_cost.simulated" in results(report)


def test_simulate_bad_event(runner):
    result = runner.invoke(cli, ["simulate", "--preset", "crowds:three-jondo", "--event", "reach:End", "--samples", "10"])
    assert result.exit_code == EXIT_PARAMS


def test_timing_only_on_request(runner):
    plain = run_json(runner, ["crowds", "--preset", "three-jondo"])
    timed = run_json(runner, ["crowds", "--preset", "three-jondo", "--timing"])
    assert plain["timing_seconds"] is None
    assert timed["timing_seconds"] >= 0


def test_csv_report(runner):
    result = runner.invoke(cli, ["crowds", "--preset", "three-jondo", "--csv"])
    rows = list(csv.DictReader(io.StringIO(result.stdout)))
    assert {"name": "hit_colls.closed", "value": "1/2", "provenance": "closed-form"} in rows


def test_save_and_history(runner):
    saved = runner.invoke(cli, ["crowds", "--preset", "three-jondo", "--save"])
    assert saved.exit_code == 0
    assert "saved as run #" in saved.stderr
    history = runner.invoke(cli, ["history", "--json", "--command", "crowds"])
    records = json.loads(history.stdout)
    assert records[0]["command"] == "crowds"
    assert records[0]["report"]["verdicts"]["ae_end"]


def test_export_round_trip(runner, tmp_path):
    out = tmp_path / "three-jondo.json"
    result = runner.invoke(cli, ["export", "crowds:three-jondo", "-o", str(out)])
    assert result.exit_code == 0
    assert runner.invoke(cli, ["validate", str(out)]).exit_code == 0
    report = run_json(runner, ["solve", str(out), "--until", "ALL=>Mix J3", "--start", "Start"])
    assert results(report)["until_probability"]["value"] == "1/2"


def test_float_overflow_in_model_is_a_parse_error(runner, tmp_path):
    path = tmp_path / "huge.json"
    path.write_text(json.dumps({"states": ["a"], "transitions": [{"from": "a", "to": "a", "prob": 1}],
                                "rewards": [{"from": "a", "to": "a", "cost": "1e400"}]}))
    result = runner.invoke(cli, ["validate", str(path), "--float"])
    assert result.exit_code == EXIT_PARSE
    assert json.loads(result.stderr)["error"] == "ModelParseError"


def test_invalid_environment_setting(runner):
    result = runner.invoke(cli, ["crowds", "--preset", "three-jondo"], env={"MARKOV_ARITHMETIC": "bogus"})
    assert result.exit_code == EXIT_PARAMS
    error = json.loads(result.stderr)
    assert error["error"] == "InvalidConfig"
    assert "MARKOV_ARITHMETIC" in error["message"]


def test_invalid_sample_count_in_environment(runner, models_dir):
    result = runner.invoke(cli, ["validate", str(models_dir / "zeroconf-n1.json")], env={"MARKOV_SAMPLES": "many"})
    assert result.exit_code == EXIT_PARAMS
    assert json.loads(result.stderr)["error"] == "InvalidConfig"


def test_preset_aliases(runner):
    alias = run_json(runner, ["zeroconf", "--preset", "paper-typical"])
    assert results(alias) == results(run_json(runner, ["zeroconf", "--preset", "typical"]))
    crowds = run_json(runner, ["crowds", "--preset", "fig3"])
    assert results(crowds) == results(run_json(runner, ["crowds", "--preset", "three-jondo"]))
    simulated = run_json(runner, ["simulate", "--preset", "crowds:fig3", "--event", "until:ALL=>End",
                                  "--samples", "200", "--seed", "1"])
    assert results(simulated)["until_probability.solver"]["value"] == "1/1"

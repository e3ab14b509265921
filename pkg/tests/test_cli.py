import csv
import io
import json

import pytest
from click.testing import CliRunner

from fleetdim.cli import (COMPARE_COLUMNS, RESTORATION_COLUMNS, SWEEP_COLUMNS,
                          TRANSIENT_COLUMNS, cli, fmt, main)
from fleetdim.model import ZoneConfig

ZONE = {"n": 2, "T": 5.0, "C": 1, "mu_c": 2.5, "lambda_c": [3.0, 2.0], "p": [0.4, 0.6]}


@pytest.fixture
def runner():
    return CliRunner()


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def header(text):
    return next(csv.reader(io.StringIO(text)))


def test_dimension_from_zone_file(runner, tmp_path):
    res = runner.invoke(cli, ["dimension", "--config", write(tmp_path, "z.json", {"zone": ZONE})])
    assert res.exit_code == 0, res.output
    doc = json.loads(res.output)
    assert doc["result"]["lambda_v_star"] == 5.4
    assert doc["result"]["candidate_was_feasible"] is True
    assert len(doc["result"]["q"]) == 2


def test_emitted_zone_round_trips(runner, tmp_path):
    res = runner.invoke(cli, ["dimension", "--total-demand", "5", "--T", "5", "--C", "40",
                              "--soc-kind", "gaussian"])
    zone_doc = json.loads(res.output)["zone"]
    zone = ZoneConfig.from_dict(zone_doc)
    again = runner.invoke(cli, ["dimension", "--config",
                                write(tmp_path, "z.json", {"zone": zone_doc})])
    assert ZoneConfig.from_dict(json.loads(again.output)["zone"]) == zone
    assert json.loads(again.output)["result"] == json.loads(res.output)["result"]


def test_invalid_zone_exit_1(runner, tmp_path):
    bad = {**ZONE, "p": [0.7, 0.5]}
    res = runner.invoke(cli, ["dimension", "--config", write(tmp_path, "z.json", {"zone": bad})])
    assert res.exit_code == 1
    assert "sum(p)=1.2" in res.output


def test_unknown_config_field_exit_1(runner, tmp_path):
    res = runner.invoke(cli, ["dimension", "--config",
                              write(tmp_path, "z.json", {"zone": ZONE, "zoom": 1})])
    assert res.exit_code == 1 and "unknown" in res.output
    res = runner.invoke(cli, ["dimension", "--config",
                              write(tmp_path, "y.json", {"zone": {**ZONE, "Tee": 1}})])
    assert res.exit_code == 1


def test_both_input_sources_rejected(runner, tmp_path):
    res = runner.invoke(cli, ["dimension", "--config", write(tmp_path, "z.json", {"zone": ZONE}),
                              "--T", "5"])
    assert res.exit_code == 1


def test_class_count_too_small_exit_2(runner):
    res = runner.invoke(cli, ["dimension", "--total-demand", "5", "--T", "5", "--C", "40",
                              "--n", "3", "--soc-kind", "gaussian"])
    assert res.exit_code == 2
    assert "minimum class count 5" in res.output


def test_infeasible_model_exit_2(runner):
    res = runner.invoke(cli, ["dimension", "--total-demand", "5", "--T", "5", "--C", "40",
                              "--soc-kind", "decreasing"])
    assert res.exit_code == 2


def test_usage_errors_exit_1():
    with pytest.raises(SystemExit) as exc:
        main(["dimension", "--no-such-flag"])
    assert exc.value.code == 1


def test_dimension_csv(runner):
    res = runner.invoke(cli, ["dimension", "--total-demand", "2", "--T", "5", "--C", "40",
                              "--soc-kind", "gaussian", "--format", "csv"])
    assert res.exit_code == 0
    rows = list(csv.DictReader(io.StringIO(res.output)))
    assert rows[0]["candidate_was_feasible"] == "true"


def test_simulate_reports_gap(runner, tmp_path):
    cfg = {"zone": ZONE, "horizon": 20000, "seed": 3}
    res = runner.invoke(cli, ["simulate", "--config", write(tmp_path, "s.json", cfg)])
    assert res.exit_code == 0, res.output
    rep = json.loads(res.output)["report"]
    assert len(rep["response_gap"]) == 2 and all(g is not None for g in rep["response_gap"])


def test_simulate_is_byte_identical(runner, tmp_path):
    cfg = write(tmp_path, "s.json", {"zone": ZONE, "horizon": 5000})
    outs = []
    for k in range(2):
        out = tmp_path / f"o{k}.json"
        assert runner.invoke(cli, ["simulate", "--config", cfg, "--seed", "9",
                                   "--mode", "network", "--out", str(out)]).exit_code == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_simulate_horizon_not_above_warmup(runner, tmp_path):
    cfg = write(tmp_path, "s.json", {"zone": ZONE})
    res = runner.invoke(cli, ["simulate", "--config", cfg, "--horizon", "100", "--warmup", "100"])
    assert res.exit_code == 1


def test_sweep_schema_and_order(runner, tmp_path):
    cfg = {"template": {"total_demand": 1, "T": 5, "C": 40},
           "grid": {"T": [10, 2.5, 5], "total_demand": [2, 1]},
           "soc_kinds": ["decreasing", "gaussian"]}
    res = runner.invoke(cli, ["sweep", "--config", write(tmp_path, "w.json", cfg),
                              "--format", "csv"])
    assert res.exit_code == 0, res.output
    assert header(res.output) == SWEEP_COLUMNS
    rows = list(csv.DictReader(io.StringIO(res.output)))
    assert len(rows) == 12
    keys = [(r["soc_kind"], float(r["T"]), float(r["total_demand"])) for r in rows]
    assert keys == sorted(keys)
    assert {"T", "total_demand", "soc_kind", "lambda_v_star"} <= set(rows[0])


def test_compare_schema(runner):
    res = runner.invoke(cli, ["compare", "--total-demand", "3", "--T", "10", "--C", "40",
                              "--soc-kind", "gaussian", "--param", "T", "5,10",
                              "--format", "csv"])
    assert res.exit_code == 0, res.output
    assert header(res.output) == COMPARE_COLUMNS


def test_resilience_two_tables(runner, tmp_path):
    cfg = {"transient": {"template": {"total_demand": 5, "T": 5, "C": 40}, "lambda_v": 8,
                         "C_grid": [20, 40]},
           "restoration": {"template": {"total_demand": 8, "T": 10, "C": 40},
                           "C_grid": [30, 40], "n_cap": 20}}
    out = tmp_path / "fig5.csv"
    res = runner.invoke(cli, ["resilience", "--config", write(tmp_path, "r.json", cfg),
                              "--format", "csv", "--out", str(out)])
    assert res.exit_code == 0, res.output
    assert header((tmp_path / "fig5.transient.csv").read_text()) == TRANSIENT_COLUMNS
    assert header((tmp_path / "fig5.restoration.csv").read_text()) == RESTORATION_COLUMNS
    res = runner.invoke(cli, ["resilience", "--config", write(tmp_path, "r.json", cfg)])
    doc = json.loads(res.output)
    assert set(doc) == {"transient", "restoration"}


def test_number_format():
    assert fmt(1 / 3) == "0.333333333"
    assert fmt(float("inf")) == "inf"
    assert fmt(None) == ""
    assert fmt([0.5, 1.0]) == "0.5;1"
    assert fmt(True) == "true"

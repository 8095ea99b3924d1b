import csv
import json
import math

import pytest

from isac.config import ExperimentConfig, config_hash
from isac.evaluation import ChanceCheck, ResultRecord
from isac.placement import AOTrace
from isac.reporting import (
    CHANCE_COLUMNS,
    TRACE_COLUMNS,
    RunManifest,
    fmt,
    results_header,
    write_chance,
    write_results,
    write_trace,
)


def _records():
    return [
        ResultRecord("proposed", 0, "", "", power_w=2.5e-3, feasible=True, iterations=4,
                     rank_one=(True, True), outage_hat=(0.0098,), runtime_s=1.25),
        ResultRecord("baseline_fixed", 0, "", "", power_w=math.nan, feasible=False,
                     outage_hat=(math.nan,)),
    ]


def test_header_order():
    assert results_header(2) == [
        "scheme", "seed", "sweep_name", "sweep_value", "power_w", "power_dbm", "feasible",
        "iterations", "rank_one_all", "outage_hat_1", "outage_hat_2", "runtime_s",
    ]


def test_fmt():
    assert fmt(True) == "true"
    assert fmt(False) == "false"
    assert fmt(math.nan) == ""
    assert fmt(1e-5) == "1e-05"
    assert fmt(0.1 + 0.2) == "0.3"
    assert fmt(7) == "7"


def test_results_rows(tmp_path):
    path = write_results(tmp_path / "results.csv", _records(), n_targets=1)
    rows = list(csv.DictReader(path.open(encoding="utf-8")))
    assert rows[0]["scheme"] == "proposed"
    assert rows[0]["power_w"] == "0.0025"
    assert float(rows[0]["power_dbm"]) == pytest.approx(10 * math.log10(2.5))
    assert rows[0]["rank_one_all"] == "true"
    assert rows[0]["outage_hat_1"] == "0.0098"
    assert rows[0]["runtime_s"] == ""
    assert rows[1]["feasible"] == "false"
    assert rows[1]["power_w"] == "" and rows[1]["power_dbm"] == ""


def test_runtime_only_when_asked(tmp_path):
    path = write_results(tmp_path / "results.csv", _records(), n_targets=1, record_runtime=True)
    rows = list(csv.DictReader(path.open(encoding="utf-8")))
    assert rows[0]["runtime_s"] == "1.25"


def test_trace_and_chance_files(tmp_path):
    trace = AOTrace()
    trace.record(
        objective_watts=1.0, binary_violation=0.25, penalty_comm=0.0, penalty_radar=0.0,
        penalty_binary=0.0, penalty_pairs=0.0, tau1=10.0, tau2=10.0, tau3=0.1, tau4=0.1,
        solver_status="optimal", accepted=True,
    )
    path = write_trace(tmp_path / "trace_0.csv", [("10 dB", trace)])
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].split(",") == list(TRACE_COLUMNS)
    assert lines[1].startswith("10 dB,0,1,0.25,")

    check = ChanceCheck(0, 1, value_w=9.0, threshold_w=8.0, closed_form=0.009, empirical=0.0091, band=0.013)
    path = write_chance(tmp_path / "chance.csv", [check])
    rows = list(csv.DictReader(path.open(encoding="utf-8")))
    assert list(rows[0]) == list(CHANCE_COLUMNS)
    assert rows[0]["within_band"] == "true"


def test_manifest(tmp_path):
    cfg = ExperimentConfig(seeds=(0, 1))
    manifest = RunManifest("isac_run", cfg, outputs=["results.csv"], extra={"note": "x"})
    path = manifest.write(tmp_path)
    document = json.loads(path.read_text(encoding="utf-8"))
    assert document["command"] == "isac_run"
    assert document["config_hash"] == config_hash(cfg)
    assert document["seeds"] == [0, 1]
    assert document["tool_version"]
    assert document["finished_at"]
    assert document["note"] == "x"
    assert document["config"]["run.seeds"] == [0, 1]

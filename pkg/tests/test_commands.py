import csv
import io
import json

import pytest
from django.core.management import call_command
from django.core.management.base import CommandError

from isac.management.commands._common import EXIT_CONFIG, EXIT_FLAGGED, EXIT_GUARD, parse_seeds


def _call(name, **options):
    stdout = io.StringIO()
    call_command(name, stdout=stdout, workers=1, log="quiet", **options)
    return stdout.getvalue()


def test_parse_seeds():
    assert parse_seeds("0,1,2") == (0, 1, 2)
    assert parse_seeds("0-3,7") == (0, 1, 2, 3, 7)
    with pytest.raises(ValueError):
        parse_seeds("a-b")


def test_isac_run_writes_artifacts(tmp_path, toy_config_file):
    out = tmp_path / "run"
    output = _call("isac_run", config=toy_config_file(), out=out)
    assert "no flagged failures" in output
    for name in ("results.csv", "trace_0.csv", "manifest.json", "metrics.prom"):
        assert (out / name).exists()
    rows = list(csv.DictReader((out / "results.csv").open(encoding="utf-8")))
    assert [(r["scheme"], r["seed"], r["feasible"]) for r in rows] == [("proposed", "0", "true")]
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["command"] == "isac_run"
    assert "isac_conic_solves_total" in (out / "metrics.prom").read_text(encoding="utf-8")


def test_isac_run_exports_the_channel(tmp_path, toy_config_file):
    out = tmp_path / "run"
    _call("isac_run", config=toy_config_file(), out=out, export_channel=True)
    document = json.loads((out / "channel_0.json").read_text(encoding="utf-8"))
    assert {k: document["header"][k] for k in ("K", "M", "N", "seed")} == {"K": 1, "M": 4, "N": 2, "seed": 0}
    assert len(document["H_hat_block"][0]) == 4
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert "channel_0.json" in manifest["outputs"]


def test_isac_baseline(tmp_path, toy_config_file):
    out = tmp_path / "baseline"
    _call("isac_baseline", config=toy_config_file(), out=out, scheme="baseline_as", seeds="0-1")
    rows = list(csv.DictReader((out / "results.csv").open(encoding="utf-8")))
    assert [(r["scheme"], r["seed"]) for r in rows] == [("baseline_as", "0"), ("baseline_as", "1")]


def test_reruns_are_byte_identical(tmp_path, toy_config_file):
    config = toy_config_file()
    for name in ("first", "second"):
        _call("isac_baseline", config=config, out=tmp_path / name, scheme="baseline_fixed")
    first = (tmp_path / "first" / "results.csv").read_bytes()
    assert first == (tmp_path / "second" / "results.csv").read_bytes()


def test_bad_config_exit_code(tmp_path, toy_config_file):
    with pytest.raises(CommandError) as excinfo:
        _call("isac_run", config=toy_config_file(**{"sensing.outage": 2.0}), out=tmp_path)
    assert excinfo.value.returncode == EXIT_CONFIG


def test_too_few_samples_is_a_config_error(tmp_path, toy_config_file):
    with pytest.raises(CommandError) as excinfo:
        _call("isac_run", config=toy_config_file(), out=tmp_path, samples=500)
    assert excinfo.value.returncode == EXIT_CONFIG


def test_oracle_guard_exit_code(tmp_path, toy_config_file):
    config = toy_config_file(**{"grid.a": 2.0, "grid.d": "0.01 m"})
    with pytest.raises(CommandError) as excinfo:
        _call("isac_oracle", config=config, out=tmp_path)
    assert excinfo.value.returncode == EXIT_GUARD


def test_chance_check_needs_a_target(tmp_path, toy_config_file):
    config = toy_config_file(
        **{"system.n_targets": 0, "targets.elevation": [], "targets.azimuth": [], "targets.range": []}
    )
    with pytest.raises(CommandError) as excinfo:
        _call("isac_verify_chance", config=config, out=tmp_path)
    assert excinfo.value.returncode == EXIT_CONFIG


def test_verify_chance_takes_samples_from_config(tmp_path, toy_config_file):
    out = tmp_path / "chance"
    try:
        _call("isac_verify_chance", config=toy_config_file(**{"run.mc_samples": 20_000}), out=out)
    except CommandError as exc:
        # an outage above the band is a flagged run, not a crash
        assert exc.returncode == EXIT_FLAGGED
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["chance"]["samples"] == 20_000


@pytest.mark.slow
def test_verify_chance_within_band(tmp_path, toy_config_file):
    out = tmp_path / "chance"
    _call("isac_verify_chance", config=toy_config_file(**{"run.seeds": [0, 1, 2]}), out=out, samples=100_000)
    rows = list(csv.DictReader((out / "chance.csv").open(encoding="utf-8")))
    assert len(rows) == 3
    assert all(r["within_band"] == "true" for r in rows)

import json
import math
from pathlib import Path

import pytest

from isac.config import (
    ExperimentConfig,
    config_from_mapping,
    config_hash,
    dump_config,
    parse_config,
)
from isac.errors import ConfigError

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "empty.json"
    path.write_text("  \n", encoding="utf-8")
    assert parse_config(path) == ExperimentConfig()
    assert parse_config(None) == ExperimentConfig()


def test_quantities_are_converted():
    cfg = config_from_mapping(
        {"sensing": {"snr_threshold": "10 dB"}, "channel.noise_var": "-80 dBm", "system.wavelength": None,
         "system.carrier_frequency": "6 GHz"}
    )
    assert cfg.sensing_snr == pytest.approx(10.0)
    assert cfg.noise_var == pytest.approx(1e-11)
    assert cfg.lam == pytest.approx(299_792_458.0 / 6e9)


def test_unknown_key_reports_its_path():
    with pytest.raises(ConfigError) as excinfo:
        config_from_mapping({"grid": {"pitch": 0.01}})
    assert excinfo.value.key == "grid.pitch"


@pytest.mark.parametrize("outage", [0.0, 1.5, -0.2])
def test_outage_out_of_range(outage):
    with pytest.raises(ConfigError) as excinfo:
        config_from_mapping({"sensing.outage": outage})
    assert excinfo.value.key == "sensing.outage"


@pytest.mark.parametrize(
    "document, key",
    [
        ({"system.n_targets": 2}, "targets.elevation"),
        ({"system.n_antennas": 2.5}, "system.n_antennas"),
        ({"run.schemes": ["proposed", "magic"]}, "run.schemes"),
        ({"run.mc_samples": 500}, "run.mc_samples"),
        ({"sweep.axis": "grid.d", "sweep.values": [0.01]}, "sweep.axis"),
        ({"sweep.values": [1, 2]}, "sweep.values"),
        ({"targets.azimuth": ["120 deg"]}, "targets"),
        ({"channel.sinr_threshold": "ten"}, "channel.sinr_threshold"),
        ({"profile": "lab"}, "profile"),
    ],
)
def test_invalid_values(document, key):
    with pytest.raises(ConfigError) as excinfo:
        config_from_mapping(document)
    assert excinfo.value.key == key


def test_bad_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError) as excinfo:
        parse_config(path)
    assert excinfo.value.key == "config"


def test_dump_reads_back():
    cfg = config_from_mapping({"targets.azimuth": ["17 deg"], "run.seeds": [3, 4], "beam.mse_cap": 2.5})
    assert config_from_mapping(json.loads(json.dumps(dump_config(cfg)))) == cfg


def test_hash_ignores_key_order(tmp_path):
    first = tmp_path / "a.json"
    second = tmp_path / "b.json"
    first.write_text(json.dumps({"grid.a": 1.0, "run.seeds": [0, 1]}), encoding="utf-8")
    second.write_text(json.dumps({"run": {"seeds": [0, 1]}, "grid.a": 1.0}), encoding="utf-8")
    assert config_hash(parse_config(first)) == config_hash(parse_config(second))
    assert config_hash(parse_config(first)) != config_hash(ExperimentConfig())


def test_paper_profile():
    cfg = config_from_mapping({}, profile="paper")
    assert (cfg.n_antennas, cfg.n_targets, cfg.a) == (4, 2, 2.0)
    assert cfg.target_elevations == pytest.approx((0.0, math.pi / 6))
    assert cfg.target_azimuths == pytest.approx((0.0, math.pi / 6))
    assert cfg.target_ranges == pytest.approx((10.0, 25.0))
    # explicit keys win over the profile
    assert config_from_mapping({"system.n_antennas": 3}, profile="paper").n_antennas == 3


def test_shipped_paper_config_matches_profile_targets():
    from_file = parse_config(CONFIG_DIR / "paper.json")
    profile = config_from_mapping({}, profile="paper")
    assert from_file.target_elevations == pytest.approx(profile.target_elevations)
    assert from_file.target_azimuths == pytest.approx(profile.target_azimuths)
    assert from_file.target_ranges == pytest.approx(profile.target_ranges)


def test_sweep_points_and_order():
    cfg = config_from_mapping({"sweep.axis": "sensing.snr_threshold", "sweep.values": ["0 dB", "5 dB", "10 dB"]})
    assert [display for display, _ in cfg.sweep_points] == ["0 dB", "5 dB", "10 dB"]
    assert cfg.hardest_first() == [2, 1, 0]
    assert cfg.at("5 dB").sensing_snr == pytest.approx(10**0.5)

    grid = config_from_mapping({"grid.d": 0.03, "sweep.axis": "grid.a", "sweep.values": [0.5, 1.0, 1.5]})
    assert grid.hardest_first() == [0, 1, 2]
    assert [display for display, _ in grid.sweep_points] == ["0.5", "1", "1.5"]

    plain = ExperimentConfig()
    assert plain.sweep_points == [("", None)]
    assert plain.at(None) is plain


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIG_DIR.glob("*.json")))
def test_shipped_configs_parse(name):
    cfg = parse_config(CONFIG_DIR / name)
    assert cfg.seeds

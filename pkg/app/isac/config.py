"""Experiment configuration: flat dotted-key JSON files over named profiles.

Every field of :class:`ExperimentConfig` declares its config key and how raw
values are converted (``kind``). Quantities go through :mod:`isac.units`, so
``"10 dB"``, ``"-80 dBm"``, ``"5 GHz"`` and ``"30 deg"`` are all accepted.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError, InvalidParameterError
from .units import deg, parse_quantity

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT = 299_792_458.0

SCHEMES = ("proposed", "baseline_fixed", "baseline_as", "oracle")

# axis key -> True when a larger value makes the instance harder
SWEEP_AXES = {
    "sensing.snr_threshold": True,
    "channel.sinr_threshold": True,
    "sensing.outage": False,
    "grid.a": False,
}


def _key(key: str, kind: str, default: Any) -> Any:
    return field(default=default, metadata={"key": key, "kind": kind})


@dataclass(frozen=True)
class ExperimentConfig:
    profile: str = _key("profile", "str", "desk")

    n_antennas: int = _key("system.n_antennas", "int", 2)
    n_users: int = _key("system.n_users", "int", 2)
    n_targets: int = _key("system.n_targets", "int", 1)
    carrier_frequency: float = _key("system.carrier_frequency", "frequency", 5e9)
    wavelength: float | None = _key("system.wavelength", "optional_length", 0.06)

    a: float = _key("grid.a", "float", 0.5)
    d: float = _key("grid.d", "length", 0.01)
    d_min: float = _key("grid.d_min", "length", 0.015)

    pathloss_exponent: float = _key("channel.pathloss_exponent", "float", 2.2)
    reference_loss: float = _key("channel.reference_loss", "ratio", 1e-3)
    n_paths: int = _key("channel.n_paths", "int", 8)
    user_distance_min: float = _key("channel.user_distance_min", "length", 10.0)
    user_distance_max: float = _key("channel.user_distance_max", "length", 50.0)
    noise_var: float = _key("channel.noise_var", "power", 1e-11)
    sinr_threshold: float = _key("channel.sinr_threshold", "ratio", 10.0)

    echo_noise_var: float = _key("sensing.noise_var", "power", 1e-11)
    sensing_snr: float = _key("sensing.snr_threshold", "ratio", 10.0)
    outage: float = _key("sensing.outage", "probability", 0.01)
    mean_rcs: float = _key("sensing.mean_rcs", "float", 1.0)

    target_elevations: tuple[float, ...] = _key("targets.elevation", "angles", (0.0,))
    target_azimuths: tuple[float, ...] = _key("targets.azimuth", "angles", (deg(30.0),))
    target_ranges: tuple[float, ...] = _key("targets.range", "floats", (2.0,))

    n_elevation: int = _key("beam.n_elevation", "int", 31)
    n_azimuth: int = _key("beam.n_azimuth", "int", 31)
    half_width_elevation: float = _key("beam.half_width_elevation", "angle", deg(5.0))
    half_width_azimuth: float = _key("beam.half_width_azimuth", "angle", deg(5.0))
    mse_cap: float | None = _key("beam.mse_cap", "optional_float", None)
    mse_factor: float = _key("beam.mse_factor", "float", 10.0)

    seeds: tuple[int, ...] = _key("run.seeds", "ints", tuple(range(20)))
    schemes: tuple[str, ...] = _key("run.schemes", "strs", ("proposed", "baseline_fixed", "baseline_as"))
    mc_samples: int = _key("run.mc_samples", "int", 100_000)

    sweep_axis: str = _key("sweep.axis", "str", "none")
    sweep_values: tuple[Any, ...] = _key("sweep.values", "raw_list", ())

    ao_max_iterations: int = _key("ao.max_iterations", "int", 30)
    ao_tolerance: float = _key("ao.tolerance", "float", 1e-3)
    ao_restarts: int = _key("ao.restarts", "int", 2)
    ao_penalties: tuple[float, ...] = _key("ao.penalties", "floats", (10.0, 10.0, 0.1, 0.1))
    ao_penalty_growth: float = _key("ao.penalty_growth", "float", 2.0)
    ao_headroom: bool = _key("ao.headroom", "bool", True)
    ao_repair_candidates: int = _key("ao.repair_candidates", "int", 5)

    solver_backend: str | None = _key("solver.backend", "optional_str", None)
    solver_feasibility_tol: float | None = _key("solver.feasibility_tol", "optional_float", None)
    solver_psd_tol: float | None = _key("solver.psd_tol", "optional_float", None)

    def __post_init__(self) -> None:
        _validate(self)

    @property
    def lam(self) -> float:
        """Carrier wavelength; an explicit ``system.wavelength`` wins over the frequency."""
        return self.wavelength if self.wavelength is not None else SPEED_OF_LIGHT / self.carrier_frequency

    @property
    def sweep_points(self) -> list[tuple[str, Any]]:
        """(display value, raw value) per sweep cell; a single unnamed cell without a sweep."""
        if self.sweep_axis == "none":
            return [("", None)]
        return [(_display(raw), raw) for raw in self.sweep_values]

    def at(self, raw: Any) -> "ExperimentConfig":
        """Copy with the swept parameter set to ``raw`` (given in the axis' config units)."""
        if self.sweep_axis == "none" or raw is None:
            return self
        spec = _FIELDS[self.sweep_axis]
        return replace(self, **{spec.name: _convert(self.sweep_axis, spec.metadata["kind"], raw)})

    def hardest_first(self) -> list[int]:
        """Indices of the sweep cells ordered from the most to the least demanding."""
        points = self.sweep_points
        if self.sweep_axis == "none":
            return [0]
        name = _FIELDS[self.sweep_axis].name
        values = [getattr(self.at(raw), name) for _, raw in points]
        harder_when_larger = SWEEP_AXES[self.sweep_axis]
        return sorted(range(len(values)), key=lambda i: -values[i] if harder_when_larger else values[i])


_FIELDS = {f.metadata["key"]: f for f in fields(ExperimentConfig)}

PROFILES: dict[str, dict[str, Any]] = {
    "desk": {},
    "paper": {
        "system.n_antennas": 4,
        "system.n_targets": 2,
        "grid.a": 2,
        "targets.elevation": [0.0, 30.0],
        "targets.azimuth": [0.0, 30.0],
        "targets.range": [10.0, 25.0],
        "beam.n_elevation": 61,
        "beam.n_azimuth": 61,
    },
}


def _display(raw: Any) -> str:
    if isinstance(raw, float):
        return f"{raw:.10g}"
    return str(raw)


def _fail(key: str, message: str) -> ConfigError:
    return ConfigError(key, message)


def _number(key: str, raw: Any, kind: str = "ratio") -> float:
    try:
        return parse_quantity(raw, kind)
    except InvalidParameterError as exc:
        raise _fail(key, str(exc)) from None


def _integer(key: str, raw: Any) -> int:
    if isinstance(raw, bool) or not (
        isinstance(raw, int) or (isinstance(raw, float) and raw.is_integer())
    ):
        raise _fail(key, f"expected an integer, got {raw!r}")
    return int(raw)


def _sequence(key: str, raw: Any) -> list:
    if isinstance(raw, (str, bytes)) or not isinstance(raw, (list, tuple)):
        raise _fail(key, f"expected a list, got {raw!r}")
    return list(raw)


def _convert(key: str, kind: str, raw: Any) -> Any:
    if kind == "str":
        if not isinstance(raw, str):
            raise _fail(key, f"expected a string, got {raw!r}")
        return raw
    if kind == "optional_str":
        return None if raw is None else _convert(key, "str", raw)
    if kind == "bool":
        if not isinstance(raw, bool):
            raise _fail(key, f"expected true or false, got {raw!r}")
        return raw
    if kind == "int":
        return _integer(key, raw)
    if kind in ("float", "ratio", "power", "probability", "frequency", "length"):
        return _number(key, raw)
    if kind in ("optional_length", "optional_float"):
        return None if raw is None else _number(key, raw)
    if kind == "angle":
        return _number(key, raw, "angle")
    if kind == "angles":
        return tuple(_number(key, item, "angle") for item in _sequence(key, raw))
    if kind == "floats":
        return tuple(_number(key, item) for item in _sequence(key, raw))
    if kind == "ints":
        return tuple(_integer(key, item) for item in _sequence(key, raw))
    if kind == "strs":
        return tuple(_convert(key, "str", item) for item in _sequence(key, raw))
    if kind == "raw_list":
        return tuple(_sequence(key, raw))
    raise _fail(key, f"unknown value kind {kind!r}")


def _positive(cfg: ExperimentConfig, *names: str) -> None:
    for name in names:
        value = getattr(cfg, name)
        if not (isinstance(value, (int, float)) and value > 0 and math.isfinite(value)):
            raise _fail(_key_of(name), f"must be positive, got {value!r}")


def _key_of(name: str) -> str:
    return next(f.metadata["key"] for f in fields(ExperimentConfig) if f.name == name)


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.profile not in PROFILES:
        raise _fail("profile", f"unknown profile {cfg.profile!r}; choose from {sorted(PROFILES)}")
    _positive(
        cfg,
        "n_antennas", "n_users", "carrier_frequency", "a", "d", "pathloss_exponent",
        "reference_loss", "n_paths", "user_distance_min", "noise_var", "sinr_threshold",
        "echo_noise_var", "sensing_snr", "mean_rcs", "n_elevation", "n_azimuth", "mse_factor",
        "mc_samples", "ao_max_iterations", "ao_tolerance", "ao_penalty_growth",
        "ao_repair_candidates",
    )
    if cfg.wavelength is not None:
        _positive(cfg, "wavelength")
    if cfg.n_targets < 0:
        raise _fail("system.n_targets", "must be non-negative")
    if cfg.d_min < 0:
        raise _fail("grid.d_min", "must be non-negative")
    if cfg.user_distance_max < cfg.user_distance_min:
        raise _fail("channel.user_distance_max", "must not be below channel.user_distance_min")
    if not 0.0 < cfg.outage < 1.0:
        raise _fail("sensing.outage", f"must lie in (0, 1), got {cfg.outage!r}")
    for name in ("target_elevations", "target_azimuths", "target_ranges"):
        if len(getattr(cfg, name)) != cfg.n_targets:
            raise _fail(_key_of(name), f"needs {cfg.n_targets} entries (system.n_targets)")
    if any(r <= 0 for r in cfg.target_ranges):
        raise _fail("targets.range", "target ranges must be positive")
    if any(abs(angle) > math.pi / 2 + 1e-12 for angle in cfg.target_elevations + cfg.target_azimuths):
        raise _fail("targets", "target angles must lie in [-90, 90] degrees")
    if cfg.half_width_elevation < 0 or cfg.half_width_azimuth < 0:
        raise _fail("beam", "beam half-widths must be non-negative")
    if cfg.mse_cap is not None and cfg.mse_cap <= 0:
        raise _fail("beam.mse_cap", "must be positive")
    if cfg.mc_samples < 10_000:
        raise _fail("run.mc_samples", f"needs at least 10000 samples, got {cfg.mc_samples}")
    if cfg.ao_restarts < 0:
        raise _fail("ao.restarts", "must be non-negative")
    if len(cfg.ao_penalties) != 4 or min(cfg.ao_penalties) <= 0:
        raise _fail("ao.penalties", "needs four positive factors")
    if not cfg.seeds:
        raise _fail("run.seeds", "needs at least one seed")
    if any(seed < 0 for seed in cfg.seeds):
        raise _fail("run.seeds", "seeds must be non-negative")
    unknown = [s for s in cfg.schemes if s not in SCHEMES]
    if unknown or not cfg.schemes:
        raise _fail("run.schemes", f"unknown schemes {unknown}; choose from {list(SCHEMES)}")
    if cfg.sweep_axis != "none":
        if cfg.sweep_axis not in SWEEP_AXES:
            raise _fail("sweep.axis", f"cannot sweep {cfg.sweep_axis!r}; choose from {sorted(SWEEP_AXES)}")
        if not cfg.sweep_values:
            raise _fail("sweep.values", "a sweep needs at least one value")
        kind = _FIELDS[cfg.sweep_axis].metadata["kind"]
        for raw in cfg.sweep_values:
            value = _convert(cfg.sweep_axis, kind, raw)
            if cfg.sweep_axis == "sensing.outage" and not 0.0 < value < 1.0:
                raise _fail("sweep.values", f"outage {raw!r} outside (0, 1)")
            if value <= 0:
                raise _fail("sweep.values", f"swept value {raw!r} must be positive")
    elif cfg.sweep_values:
        raise _fail("sweep.values", "values given without sweep.axis")


def _flatten(document: Mapping[str, Any], prefix: str = "") -> dict[str, Any]:
    flat: dict[str, Any] = {}
    for key, value in document.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, Mapping):
            flat.update(_flatten(value, f"{dotted}."))
        else:
            flat[dotted] = value
    return flat


def config_from_mapping(document: Mapping[str, Any], profile: str | None = None) -> ExperimentConfig:
    flat = _flatten(document)
    unknown = sorted(key for key in flat if key not in _FIELDS)
    if unknown:
        raise _fail(unknown[0], "unknown configuration key")
    name = flat.get("profile", profile) or "desk"
    if name not in PROFILES:
        raise _fail("profile", f"unknown profile {name!r}; choose from {sorted(PROFILES)}")
    merged = {**PROFILES[name], **flat, "profile": name}
    values = {}
    for key, raw in merged.items():
        spec = _FIELDS[key]
        values[spec.name] = _convert(key, spec.metadata["kind"], raw)
    try:
        cfg = ExperimentConfig(**values)
    except InvalidParameterError as exc:
        raise _fail("config", str(exc)) from None
    if name == "paper":
        logger.warning(
            "paper_profile_selected",
            extra={"event": "paper_profile_selected", "N": cfg.n_antennas, "a": cfg.a},
        )
    return cfg


def parse_config(path: str | Path | None, profile: str | None = None) -> ExperimentConfig:
    """Read a config file; a missing path or an empty file yields the profile defaults."""
    if path is None:
        return config_from_mapping({}, profile)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _fail("config", f"cannot read {path}: {exc.strerror}") from None
    if not text.strip():
        return config_from_mapping({}, profile)
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise _fail("config", f"{path} is not valid JSON: {exc.msg} (line {exc.lineno})") from None
    if not isinstance(document, dict):
        raise _fail("config", "top level must be an object")
    return config_from_mapping(document, profile)


def _dump_value(kind: str, value: Any) -> Any:
    if value is None:
        return None
    if kind == "angle":
        return f"{value!r} rad"
    if kind == "angles":
        return [f"{v!r} rad" for v in value]
    if kind in ("floats", "ints", "strs", "raw_list"):
        return list(value)
    return value


def dump_config(cfg: ExperimentConfig) -> dict[str, Any]:
    """Flat dotted-key mapping that :func:`config_from_mapping` reads back to ``cfg``."""
    return {
        f.metadata["key"]: _dump_value(f.metadata["kind"], getattr(cfg, f.name))
        for f in fields(ExperimentConfig)
    }


def config_hash(cfg: ExperimentConfig) -> str:
    canonical = json.dumps(dump_config(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

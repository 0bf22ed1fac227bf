"""JSON configuration: schema, validation, defaults.

A config file has up to six sections (model, grid, sim, scan, analysis,
report), each optional; a missing section falls back to the reference
preset. Every key carries its unit in the name: *_rad_s for angular
frequency standard deviations, *_s for times, *_hz for rates. Unknown
keys are rejected, and every error names the offending field by its
dotted path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .eventsim import SimConfig
from .model import FrequencyGrid, SourceModel
from .spectral import CavityFilter, ScanConfig

VALID_PROPAGATION = ("linear", "quadrature")
VALID_METHODS = ("fit", "moments")


@dataclass(frozen=True)
class AnalysisConfig:
    """Histogram and scan analysis settings."""

    t_bin_s: float = 1e-9
    max_delay_s: float = 1e-6
    method: str = "fit"
    floor_subtract: bool = True
    n_bootstrap: int = 200
    g2c_windows_s: tuple = tuple(np.arange(30e-9, 301e-9, 30e-9))
    marginal_bootstrap: int = 50

    def __post_init__(self):
        if not self.t_bin_s > 0:
            raise ValidationError("analysis.t_bin_s: must be positive")
        if self.max_delay_s < 10 * self.t_bin_s:
            raise ValidationError(
                "analysis.max_delay_s: must cover at least 10 bins")
        if self.method not in VALID_METHODS:
            raise ValidationError(
                f"analysis.method: must be one of {VALID_METHODS}")
        if self.n_bootstrap < 0 or self.marginal_bootstrap < 0:
            raise ValidationError("analysis.*bootstrap: must be >= 0")
        if any(w <= 0 for w in self.g2c_windows_s):
            raise ValidationError("analysis.g2c_windows_s: must be positive")


@dataclass
class Config:
    """Complete run configuration."""

    model: SourceModel
    grid: FrequencyGrid
    sim: SimConfig
    scan: ScanConfig
    analysis: AnalysisConfig
    propagation: str = "quadrature"

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "grid": {"n_points": self.grid.n_points,
                     "span_rad_s": self.grid.span},
            "sim": {
                "pair_rate_hz": self.sim.pair_rate,
                "efficiency_stokes": self.sim.efficiency_stokes,
                "efficiency_anti_stokes": self.sim.efficiency_anti_stokes,
                "uncorrelated_stokes_hz": self.sim.uncorrelated_stokes,
                "uncorrelated_anti_stokes_hz": self.sim.uncorrelated_anti_stokes,
                "cycle_period_s": self.sim.cycle_period_s,
                "generation_window_s": self.sim.generation_window_s,
                "run_length_s": self.sim.run_length_s,
                "seed": self.sim.seed,
            },
            "scan": self.scan.to_dict(),
            "analysis": {
                "t_bin_s": self.analysis.t_bin_s,
                "max_delay_s": self.analysis.max_delay_s,
                "method": self.analysis.method,
                "floor_subtract": self.analysis.floor_subtract,
                "n_bootstrap": self.analysis.n_bootstrap,
                "g2c_windows_s": list(self.analysis.g2c_windows_s),
                "marginal_bootstrap": self.analysis.marginal_bootstrap,
            },
            "report": {"propagation": self.propagation},
        }


def _require_keys(section: dict, known: set, path: str) -> None:
    for key in section:
        if key not in known:
            raise ValidationError(f"{path}.{key}: unknown field")


def _number(section: dict, key: str, path: str, default=None):
    if key not in section:
        if default is None:
            raise ValidationError(f"{path}.{key}: required field missing")
        return default
    val = section[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ValidationError(f"{path}.{key}: must be a number")
    return float(val)


def _parse_model(section: dict) -> SourceModel:
    _require_keys(section, {"profile", "single_bandwidth_rad_s", "gain_floor",
                            "pump_sigma_rad_s", "coupling_sigma_rad_s",
                            "central_detunings_rad_s"}, "model")
    try:
        return SourceModel.from_dict(section)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"model: {exc}") from exc


def _parse_grid(section: dict) -> FrequencyGrid:
    _require_keys(section, {"n_points", "span_rad_s"}, "grid")
    n = section.get("n_points")
    if not isinstance(n, int) or isinstance(n, bool):
        raise ValidationError("grid.n_points: must be an integer")
    return FrequencyGrid(n_points=n,
                         span=_number(section, "span_rad_s", "grid"))


def _parse_sim(section: dict, default: SimConfig) -> SimConfig:
    known = {"pair_rate_hz", "efficiency_stokes", "efficiency_anti_stokes",
             "uncorrelated_stokes_hz", "uncorrelated_anti_stokes_hz",
             "cycle_period_s", "generation_window_s", "run_length_s", "seed"}
    _require_keys(section, known, "sim")
    seed = section.get("seed", default.seed)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ValidationError("sim.seed: must be an integer")
    return SimConfig(
        pair_rate=_number(section, "pair_rate_hz", "sim", default.pair_rate),
        efficiency_stokes=_number(section, "efficiency_stokes", "sim",
                                  default.efficiency_stokes),
        efficiency_anti_stokes=_number(section, "efficiency_anti_stokes",
                                       "sim", default.efficiency_anti_stokes),
        uncorrelated_stokes=_number(section, "uncorrelated_stokes_hz", "sim",
                                    default.uncorrelated_stokes),
        uncorrelated_anti_stokes=_number(section, "uncorrelated_anti_stokes_hz",
                                         "sim",
                                         default.uncorrelated_anti_stokes),
        cycle_period_s=_number(section, "cycle_period_s", "sim",
                               default.cycle_period_s),
        generation_window_s=_number(section, "generation_window_s", "sim",
                                    default.generation_window_s),
        run_length_s=_number(section, "run_length_s", "sim",
                             default.run_length_s),
        seed=seed,
    )


def _parse_scan(section: dict, default: ScanConfig) -> ScanConfig:
    known = {"half_span_rad_s", "step_rad_s", "dwell_s",
             "coincidence_window_s", "cavity"}
    _require_keys(section, known, "scan")
    cav_section = section.get("cavity", default.cavity.to_dict())
    _require_keys(cav_section, {"fwhm_rad_s", "peak_transmission"},
                  "scan.cavity")
    cavity = CavityFilter(
        fwhm=_number(cav_section, "fwhm_rad_s", "scan.cavity",
                     default.cavity.fwhm),
        peak_transmission=_number(cav_section, "peak_transmission",
                                  "scan.cavity",
                                  default.cavity.peak_transmission))
    return ScanConfig(
        half_span=_number(section, "half_span_rad_s", "scan",
                          default.half_span),
        step=_number(section, "step_rad_s", "scan", default.step),
        dwell_s=_number(section, "dwell_s", "scan", default.dwell_s),
        coincidence_window_s=_number(section, "coincidence_window_s", "scan",
                                     default.coincidence_window_s),
        cavity=cavity,
    )


def _parse_analysis(section: dict, default: AnalysisConfig) -> AnalysisConfig:
    known = {"t_bin_s", "max_delay_s", "method", "floor_subtract",
             "n_bootstrap", "g2c_windows_s", "marginal_bootstrap"}
    _require_keys(section, known, "analysis")
    method = section.get("method", default.method)
    if not isinstance(method, str):
        raise ValidationError("analysis.method: must be a string")
    floor_subtract = section.get("floor_subtract", default.floor_subtract)
    if not isinstance(floor_subtract, bool):
        raise ValidationError("analysis.floor_subtract: must be a boolean")
    windows = section.get("g2c_windows_s", list(default.g2c_windows_s))
    if (not isinstance(windows, (list, tuple)) or
            any(isinstance(w, bool) or not isinstance(w, (int, float))
                for w in windows)):
        raise ValidationError("analysis.g2c_windows_s: must be a number list")
    for key in ("n_bootstrap", "marginal_bootstrap"):
        val = section.get(key, getattr(default, key))
        if not isinstance(val, int) or isinstance(val, bool):
            raise ValidationError(f"analysis.{key}: must be an integer")
    return AnalysisConfig(
        t_bin_s=_number(section, "t_bin_s", "analysis", default.t_bin_s),
        max_delay_s=_number(section, "max_delay_s", "analysis",
                            default.max_delay_s),
        method=method, floor_subtract=floor_subtract,
        n_bootstrap=section.get("n_bootstrap", default.n_bootstrap),
        g2c_windows_s=tuple(float(w) for w in windows),
        marginal_bootstrap=section.get("marginal_bootstrap",
                                       default.marginal_bootstrap),
    )


def validate_config(data: dict) -> Config:
    """Build a Config from a parsed JSON dict, preset defaults filled in."""
    from . import presets

    if not isinstance(data, dict):
        raise ValidationError("config: top level must be an object")
    _require_keys(data, {"model", "grid", "sim", "scan", "analysis",
                         "report"}, "config")
    for name in ("model", "grid", "sim", "scan", "analysis", "report"):
        if name in data and not isinstance(data[name], dict):
            raise ValidationError(f"{name}: must be an object")

    model = (_parse_model(data["model"]) if "model" in data
             else presets.reference_model())
    grid = (_parse_grid(data["grid"]) if "grid" in data
            else presets.reference_grid())
    sim = _parse_sim(data.get("sim", {}), presets.reference_sim_config())
    scan = _parse_scan(data.get("scan", {}), presets.reference_scan_config())
    analysis = _parse_analysis(data.get("analysis", {}),
                               presets.reference_analysis())
    report = data.get("report", {})
    _require_keys(report, {"propagation"}, "report")
    propagation = report.get("propagation", "quadrature")
    if propagation not in VALID_PROPAGATION:
        raise ValidationError(
            f"report.propagation: must be one of {VALID_PROPAGATION}")
    return Config(model=model, grid=grid, sim=sim, scan=scan,
                  analysis=analysis, propagation=propagation)


def load_config(path) -> Config:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config: {path} is not valid JSON: {exc}") from exc
    return validate_config(data)


def read_tagged(entry, expect_unit: str, path: str,
                require_error: bool = False) -> tuple[float, float]:
    """Read a {"value", "error", "unit"} measurement, checking the unit.

    Returns (value, error); error defaults to 0 unless required.
    """
    if not isinstance(entry, dict):
        raise ValidationError(f"{path}: must be an object with value and unit")
    for key in entry:
        if key not in ("value", "error", "unit"):
            raise ValidationError(f"{path}.{key}: unknown field")
    if "value" not in entry:
        raise ValidationError(f"{path}.value: required field missing")
    if entry.get("unit") != expect_unit:
        raise ValidationError(
            f"{path}.unit: expected {expect_unit!r}, got {entry.get('unit')!r}")
    value = entry["value"]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{path}.value: must be a number")
    if "error" in entry:
        err = entry["error"]
        if isinstance(err, bool) or not isinstance(err, (int, float)):
            raise ValidationError(f"{path}.error: must be a number")
        if err < 0:
            raise ValidationError(f"{path}.error: must be >= 0")
    elif require_error:
        raise ValidationError(f"{path}.error: required field missing")
    else:
        err = 0.0
    return float(value), float(err)

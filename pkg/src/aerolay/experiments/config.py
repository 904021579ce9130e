"""Flat ``key = value`` experiment files.

Blank lines and ``#`` comments are ignored.  Every key is optional; an
empty file yields the default urban scenario.  Unknown keys are rejected.

Scenario keys and defaults (system-parameter table):

=====================  ==============  ==================================
key                    default         table row
=====================  ==============  ==================================
lambda_b               5e-6            BS density (per m^2)
lambda_u               1e-6            UAV-pair density (per m^2)
mean_u2u_distance      100             mean U2U distance (m)
r_max_u2u              500             max U2U distance (m, gap choice)
h_b / h_u / h_g        25 / 100 / 1.5  heights (m)
sharing_mode           underlay        spectrum sharing
eta_u                  0.1             UAV PRB fraction
n_prbs                 50              PRBs
bandwidth_hz           10e6            system bandwidth
prb_bandwidth_hz       180e3           PRB bandwidth
carrier_ghz            2.0             carrier frequency
noise_psd_dbm_hz       -174            thermal noise
noise_figure_db        7               noise figure
p_max_dbm              24              max UE power
rho_u_dbm / rho_g_dbm  -58 / -58       power-control target
epsilon_u / epsilon_g  0.6 / 0.6       compensation factor
n_elements             8               BS array elements
downtilt_deg           102             electrical downtilt
element_gain_max_db    8               element gain (gap choice)
spacing_wavelengths    0.5             element spacing
los_a1/los_a2/los_a3   0.3/500/20      ITU urban constants
=====================  ==============  ==================================

Run keys: ``sweep_variable`` (T, eta_u, lambda_u, epsilon_u, rate_T),
``sweep_values`` (comma list), ``engines`` (analytical, montecarlo),
``links`` (u2u, gue_ul), ``threshold_db`` (-5), ``n_drops`` (200000),
``seed`` (1), ``output`` (prefix).
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..config import AntennaConfig, ConfigError, LosModel, ScenarioConfig

SWEEP_VARIABLES = ("T", "eta_u", "lambda_u", "epsilon_u", "rate_T")
ENGINES = ("analytical", "montecarlo")
LINKS = ("u2u", "gue_ul")

_SCENARIO_KEYS = {f.name: f.type for f in dataclasses.fields(ScenarioConfig) if f.name not in ("antenna", "los_model", "links")}
_ANTENNA_KEYS = {f.name for f in dataclasses.fields(AntennaConfig)}
_LOS_KEYS = {"los_a1": "a1", "los_a2": "a2", "los_a3": "a3", "los_extent_m": "extent_m"}
_RUN_KEYS = {"sweep_variable", "sweep_values", "engines", "links", "threshold_db", "n_drops", "seed", "output"}


@dataclass
class ExperimentSpec:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    sweep_variable: str = "T"
    sweep_values: tuple = tuple(float(t) for t in range(-10, 31))
    engines: tuple = ENGINES
    links: tuple = LINKS
    threshold_db: float = -5.0
    n_drops: int = 200_000
    seed: int = 1
    output: str = "aerolay"

    def __post_init__(self):
        if self.sweep_variable not in SWEEP_VARIABLES:
            raise ConfigError(f"sweep_variable: must be one of {', '.join(SWEEP_VARIABLES)}")
        if not self.sweep_values:
            raise ConfigError("sweep_values: must be non-empty")
        if not all(math.isfinite(v) for v in self.sweep_values):
            raise ConfigError("sweep_values: must be finite")
        if not self.engines or set(self.engines) - set(ENGINES):
            raise ConfigError(f"engines: non-empty subset of {', '.join(ENGINES)}")
        if not self.links or set(self.links) - set(LINKS):
            raise ConfigError(f"links: non-empty subset of {', '.join(LINKS)}")
        if self.n_drops < 1:
            raise ConfigError("n_drops: must be >= 1")

    @property
    def bandwidth_u(self) -> float:
        return self.scenario.bandwidth_u

    @property
    def bandwidth_g(self) -> float:
        return self.scenario.bandwidth_g


def _number(key, text):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None


def _integer(key, text):
    x = _number(key, text)
    if x != int(x):
        raise ConfigError(f"{key}: expected an integer, got {text!r}")
    return int(x)


def _list(text):
    return tuple(item.strip() for item in text.split(",") if item.strip())


def parse_pairs(text: str) -> dict:
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in pairs:
            raise ConfigError(f"{key}: given twice (line {lineno})")
        pairs[key] = value
    return pairs


def spec_from_pairs(pairs: dict) -> ExperimentSpec:
    unknown = set(pairs) - set(_SCENARIO_KEYS) - _ANTENNA_KEYS - set(_LOS_KEYS) - _RUN_KEYS
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(sorted(unknown))}")
    scen, ant, los, run = {}, {}, {}, {}
    for key, value in pairs.items():
        if key == "sharing_mode":
            scen[key] = value.lower()
        elif key in ("n_prbs",):
            scen[key] = _integer(key, value)
        elif key in _SCENARIO_KEYS:
            scen[key] = _number(key, value)
        elif key == "n_elements":
            ant[key] = _integer(key, value)
        elif key in _ANTENNA_KEYS:
            ant[key] = _number(key, value)
        elif key in _LOS_KEYS:
            los[_LOS_KEYS[key]] = _number(key, value)
        elif key in ("sweep_variable", "output"):
            run[key] = value
        elif key in ("engines", "links"):
            run[key] = _list(value)
        elif key == "sweep_values":
            run[key] = tuple(_number(key, v) for v in _list(value))
        elif key == "threshold_db":
            run[key] = _number(key, value)
        else:
            run[key] = _integer(key, value)
    if scen.get("sharing_mode", "underlay") not in ("underlay", "overlay"):
        raise ConfigError("sharing_mode: must be underlay or overlay")
    try:
        scenario = ScenarioConfig(antenna=AntennaConfig(**ant), los_model=LosModel(**los), **scen)
    except ConfigError as exc:
        raise ConfigError(str(exc)) from None
    return ExperimentSpec(scenario=scenario, **run)


def load_config(path) -> ExperimentSpec:
    """Read and validate an experiment file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return spec_from_pairs(parse_pairs(path.read_text()))

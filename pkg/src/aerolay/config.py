"""Scenario configuration: deployment, channel, power-control and sharing parameters.

Everything is stored in the units users think in (dB, dBm, meters, per-m^2
densities) and converted to linear scale exactly once, in
:meth:`ScenarioConfig.__post_init__`.  All downstream math reads the linear
attributes.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from functools import cached_property
from typing import Mapping


class ConfigError(ValueError):
    """Raised when a configuration value violates its constraint."""


class NodeKind(Enum):
    UAV_TX = "uav_tx"
    UAV_RX = "uav_rx"
    GUE = "gue"
    BS = "bs"


class State(IntEnum):
    LOS = 0
    NLOS = 1

    @property
    def tag(self) -> str:
        return "los" if self is State.LOS else "nlos"


class LinkKind(Enum):
    """The four radio links of the model, named ``<tx><rx>``."""

    UU = ("uu", NodeKind.UAV_TX, NodeKind.UAV_RX)
    GU = ("gu", NodeKind.GUE, NodeKind.UAV_RX)
    UB = ("ub", NodeKind.UAV_TX, NodeKind.BS)
    GB = ("gb", NodeKind.GUE, NodeKind.BS)

    def __init__(self, tag, tx, rx):
        self.tag = tag
        self.tx = tx
        self.rx = rx

    @classmethod
    def from_nodes(cls, tx: NodeKind, rx: NodeKind) -> "LinkKind":
        for link in cls:
            if link.tx is tx and link.rx is rx:
                return link
        raise ConfigError(f"no link kind for {tx.value} -> {rx.value}")

    @classmethod
    def from_tag(cls, tag: str) -> "LinkKind":
        for link in cls:
            if link.tag == tag:
                return link
        raise ConfigError(f"unknown link kind {tag!r}")


class SharingMode(Enum):
    UNDERLAY = "underlay"
    OVERLAY = "overlay"


def db2lin(x):
    return 10.0 ** (x / 10.0)


def lin2db(x):
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class StateParams:
    """Propagation parameters of one link kind in one propagation state."""

    ref_path_loss_db: float
    path_loss_exponent: float
    fading_m: int

    @property
    def ref_path_loss(self) -> float:
        return db2lin(self.ref_path_loss_db)

    @property
    def fading_b(self) -> float:
        """Fitted constant of the single-exponential fading CDF surrogate."""
        from .channel import fit_fading_b

        return fit_fading_b(self.fading_m)


@dataclass(frozen=True)
class LinkParams:
    los: StateParams
    nlos: StateParams

    def __post_init__(self):
        if self.los.path_loss_exponent > self.nlos.path_loss_exponent:
            raise ConfigError("LoS path-loss exponent must not exceed the NLoS one")
        for sp in (self.los, self.nlos):
            if int(sp.fading_m) != sp.fading_m or sp.fading_m < 1:
                raise ConfigError(f"fading m must be a positive integer, got {sp.fading_m}")
            if sp.path_loss_exponent <= 0:
                raise ConfigError("path-loss exponent must be positive")

    def __getitem__(self, state: State) -> StateParams:
        return self.los if State(state) is State.LOS else self.nlos


@dataclass(frozen=True)
class LosModel:
    """ITU building-statistics LoS model.

    ``overrides`` pins the LoS probability of selected links to a constant,
    e.g. ``{LinkKind.UU: 1.0}`` for the all-LoS UAV regime.
    """

    a1: float = 0.3
    a2: float = 500.0
    a3: float = 20.0
    extent_m: float = 100e3
    overrides: Mapping[LinkKind, float] = field(default_factory=dict)

    def __post_init__(self):
        if min(self.a1, self.a2, self.a3) <= 0:
            raise ConfigError("ITU constants a1, a2, a3 must be positive")
        for link, p in self.overrides.items():
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"LoS override for {link.tag} must be in [0, 1]")

    @property
    def spacing(self) -> float:
        """Distance between consecutive step breakpoints, in meters."""
        return 1000.0 / math.sqrt(self.a1 * self.a2)


@dataclass(frozen=True)
class AntennaConfig:
    n_elements: int = 8
    downtilt_deg: float = 102.0
    element_gain_max_db: float = 8.0
    spacing_wavelengths: float = 0.5

    def __post_init__(self):
        if self.n_elements < 1:
            raise ConfigError("n_elements must be >= 1")
        if not 0.0 < self.downtilt_deg < 180.0:
            raise ConfigError("downtilt_deg must lie in (0, 180)")


@dataclass(frozen=True)
class PowerControlParams:
    p_max_total_dbm: float = 24.0
    rho_dbm: float = -58.0
    epsilon: float = 0.6
    n_prbs_used: float = 50.0

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError("epsilon must lie in [0, 1]")
        if not self.n_prbs_used > 0:
            raise ConfigError("n_prbs_used must be positive")

    @property
    def cap_mw(self) -> float:
        """Per-PRB power cap ``P_max / n_x`` in mW."""
        return db2lin(self.p_max_total_dbm) / self.n_prbs_used

    @property
    def rho_mw(self) -> float:
        return db2lin(self.rho_dbm)


def table1_link_params(carrier_ghz: float = 2.0, h_u: float = 100.0) -> dict[LinkKind, LinkParams]:
    """Urban 3GPP-style propagation rows used as defaults."""
    fc = 20.0 * math.log10(carrier_ghz)
    aerial_nlos_ref = -17.5 + 20.0 * math.log10(40.0 * math.pi * carrier_ghz / 3.0)
    lh = math.log10(h_u)
    return {
        LinkKind.GB: LinkParams(StateParams(28.0 + fc, 2.2, 3), StateParams(13.54 + fc, 3.9, 1)),
        LinkKind.UB: LinkParams(StateParams(28.0 + fc, 2.2, 5), StateParams(aerial_nlos_ref, 4.6 - 0.7 * lh, 1)),
        LinkKind.GU: LinkParams(
            StateParams(30.9 + fc, 2.225 - 0.05 * lh, 3), StateParams(32.4 + fc, 4.32 - 0.76 * lh, 1)
        ),
        LinkKind.UU: LinkParams(StateParams(28.0 + fc, 2.2, 5), StateParams(aerial_nlos_ref, 4.6 - 0.7 * lh, 1)),
    }


@dataclass(frozen=True)
class ScenarioConfig:
    """Full scenario.  Defaults reproduce the urban system-parameter table.

    ``links`` left as ``None`` is filled from :func:`table1_link_params` using
    the configured carrier frequency and UAV height.
    """

    lambda_b: float = 5e-6
    lambda_u: float = 1e-6
    mean_u2u_distance: float = 100.0
    r_max_u2u: float = 500.0
    h_b: float = 25.0
    h_u: float = 100.0
    h_g: float = 1.5
    sharing_mode: SharingMode = SharingMode.UNDERLAY
    eta_u: float = 0.1
    n_prbs: int = 50
    bandwidth_hz: float = 10e6
    prb_bandwidth_hz: float = 180e3
    carrier_ghz: float = 2.0
    noise_psd_dbm_hz: float = -174.0
    noise_figure_db: float = 7.0
    p_max_dbm: float = 24.0
    rho_u_dbm: float = -58.0
    rho_g_dbm: float = -58.0
    epsilon_u: float = 0.6
    epsilon_g: float = 0.6
    antenna: AntennaConfig = field(default_factory=AntennaConfig)
    los_model: LosModel = field(default_factory=LosModel)
    links: Mapping[LinkKind, LinkParams] | None = None

    def __post_init__(self):
        if isinstance(self.sharing_mode, str):
            object.__setattr__(self, "sharing_mode", SharingMode(self.sharing_mode))
        if self.links is None:
            object.__setattr__(self, "links", table1_link_params(self.carrier_ghz, self.h_u))
        if set(self.links) != set(LinkKind):
            raise ConfigError("link parameters must cover exactly uu, gu, ub, gb")
        for name in ("h_b", "h_u", "h_g"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.lambda_b < 0 or self.lambda_u < 0:
            raise ConfigError("densities must be non-negative")
        if not self.mean_u2u_distance > 0:
            raise ConfigError("mean_u2u_distance must be positive")
        if not self.r_max_u2u > 0:
            raise ConfigError("r_max_u2u must be positive")
        if not 0.0 <= self.eta_u <= 1.0:
            raise ConfigError(f"eta_u must lie in [0, 1], got {self.eta_u}")
        if self.n_prbs < 1 or self.bandwidth_hz <= 0 or self.prb_bandwidth_hz <= 0:
            raise ConfigError("n_prbs, bandwidth_hz and prb_bandwidth_hz must be positive")
        for name in ("epsilon_u", "epsilon_g"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")

    def replace(self, **changes) -> "ScenarioConfig":
        """Copy with changes; re-derives default link rows when ``h_u``/``carrier_ghz`` move."""
        if self.links == table1_link_params(self.carrier_ghz, self.h_u) and "links" not in changes:
            changes["links"] = None
        return dataclasses.replace(self, **changes)

    # -- derived, linear-scale quantities -----------------------------------

    @property
    def overlay(self) -> bool:
        return self.sharing_mode is SharingMode.OVERLAY

    @property
    def sigma_u(self) -> float:
        """Rayleigh scale of the U2U pair distance."""
        return math.sqrt(2.0 / math.pi) * self.mean_u2u_distance

    @property
    def sigma_g(self) -> float:
        """Rayleigh scale of the GUE-to-serving-BS distance."""
        return 1.0 / math.sqrt(2.0 * math.pi * self.lambda_b)

    @property
    def lambda_g(self) -> float:
        return self.lambda_b

    @property
    def eta_g(self) -> float:
        return 1.0 - self.eta_u if self.overlay else 1.0

    @property
    def uav_interferer_density(self) -> float:
        """Density of UAVs active on an observed UAV PRB."""
        return self.lambda_u if self.overlay else self.eta_u * self.lambda_u

    @property
    def uav_density_on_gue_prb(self) -> float:
        return 0.0 if self.overlay else self.eta_u * self.lambda_u

    @property
    def gue_density_on_uav_prb(self) -> float:
        return 0.0 if self.overlay else self.lambda_b

    @property
    def bandwidth_u(self) -> float:
        return self.eta_u * self.bandwidth_hz

    @property
    def bandwidth_g(self) -> float:
        return self.eta_g * self.bandwidth_hz

    @property
    def power_u(self) -> PowerControlParams:
        return PowerControlParams(self.p_max_dbm, self.rho_u_dbm, self.epsilon_u, max(self.eta_u * self.n_prbs, 1e-300))

    @property
    def power_g(self) -> PowerControlParams:
        return PowerControlParams(self.p_max_dbm, self.rho_g_dbm, self.epsilon_g, max(self.eta_g * self.n_prbs, 1e-300))

    @cached_property
    def noise_mw(self) -> float:
        return db2lin(self.noise_psd_dbm_hz + 10.0 * math.log10(self.prb_bandwidth_hz) + self.noise_figure_db)

    def height(self, node: NodeKind) -> float:
        if node is NodeKind.BS:
            return self.h_b
        if node is NodeKind.GUE:
            return self.h_g
        return self.h_u

    def heights(self, link: LinkKind) -> tuple[float, float]:
        return self.height(link.tx), self.height(link.rx)

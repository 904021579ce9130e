"""Coverage analysis of UAV-to-UAV links sharing uplink spectrum with ground users."""
from .config import (
    AntennaConfig,
    ConfigError,
    LinkKind,
    LinkParams,
    LosModel,
    NodeKind,
    PowerControlParams,
    ScenarioConfig,
    SharingMode,
    State,
    StateParams,
)

__version__ = "0.1.0"

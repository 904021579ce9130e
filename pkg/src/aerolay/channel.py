"""Deterministic channel primitives shared by the analytical and simulation engines.

Geometry convention: zenith angles are measured from the upward vertical at
the BS.  A GUE below the BS antenna therefore sees ``theta > pi/2`` and a UAV
above it ``theta < pi/2``; a 102 degree electrical downtilt points the main
lobe 12 degrees below the horizon::

            z (theta = 0)
            |      . UAV  (theta < 90)
            |    .
        BS  *---------------- horizon (theta = 90)
            |  `  .
            |      `  GUE (theta > 90)
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from .config import AntennaConfig, LinkKind, LosModel, NodeKind, PowerControlParams, ScenarioConfig, State, db2lin

_SINGULAR = 1e-9


# -- line of sight -----------------------------------------------------------


def los_exact(model: LosModel, h_x: float, h_y: float, r):
    """Term-by-term ITU product for 2-D distance ``r`` (scalar or array).

    Heights are reordered so that the taller end plays the role of ``h_x``.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("2-D distance must be non-negative")
    h_hi, h_lo = max(h_x, h_y), min(h_x, h_y)
    n_terms = np.floor(r * math.sqrt(model.a1 * model.a2) / 1000.0).astype(np.int64)
    kmax = int(n_terms.max()) if n_terms.size else 0
    table = _product_table(h_hi, h_lo, model.a3, max(64, 1 << kmax.bit_length()))
    out = table[n_terms]
    return out if out.ndim else float(out)


@lru_cache(maxsize=64)
def _product_table(h_hi, h_lo, a3, n):
    """Exact product for 0..n-1 terms (the product depends on r only via the term count)."""
    vals = np.ones(n)
    for k in range(1, n):
        j = np.arange(k)
        h = h_hi - (j + 0.5) * (h_hi - h_lo) / k
        vals[k] = np.prod(-np.expm1(-(h**2) / (2.0 * a3**2)))
    vals.flags.writeable = False
    return vals


class LosGrid:
    """Step table of the LoS probability for one link kind.

    Cell ``i`` covers ``[i*spacing, (i+1)*spacing)`` and holds the value of
    the exact product there (the product depends on ``r`` only through the
    integer number of terms, so the table is exact inside its extent).  Past
    the last breakpoint the final value is held.
    """

    def __init__(self, model: LosModel, h_x: float, h_y: float, override: float | None = None):
        self.spacing = model.spacing
        n_cells = int(math.ceil(model.extent_m / self.spacing)) + 1
        self.breakpoints = np.arange(n_cells + 1) * self.spacing
        if override is not None:
            self.values = np.full(n_cells, float(override))
        else:
            self.values = build_los_table(model, h_x, h_y, n_cells)

    @property
    def extent(self) -> float:
        return float(self.breakpoints[-1])

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        idx = np.minimum(r / self.spacing, len(self.values) - 1).astype(np.int64)
        return self.values[idx]

    @property
    def tail_value(self) -> float:
        return float(self.values[-1])


def build_los_table(model: LosModel, h_x: float, h_y: float, n_cells: int) -> np.ndarray:
    """Exact LoS probability for 0..n_cells-1 product terms."""
    return _product_table(max(h_x, h_y), min(h_x, h_y), model.a3, n_cells).copy()


def los_grid(cfg: ScenarioConfig, link: LinkKind) -> LosGrid:
    cache = cfg.__dict__.setdefault("_los_grids", {})
    if link not in cache:
        h_x, h_y = cfg.heights(link)
        cache[link] = LosGrid(cfg.los_model, h_x, h_y, cfg.los_model.overrides.get(link))
    return cache[link]


def los_probability(cfg: ScenarioConfig, link: LinkKind, r):
    """Step-function LoS probability of ``link`` at 2-D distance ``r``."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("2-D distance must be non-negative")
    out = los_grid(cfg, link)(r)
    return out if out.ndim else float(out)


def state_probability(cfg: ScenarioConfig, link: LinkKind, state: State, r):
    p = los_probability(cfg, link, r)
    return p if State(state) is State.LOS else 1.0 - p


# -- path loss and antennas --------------------------------------------------


def height_difference(cfg: ScenarioConfig, link: LinkKind) -> float:
    h_x, h_y = cfg.heights(link)
    return h_x - h_y


def distance_3d(cfg: ScenarioConfig, link: LinkKind, r):
    return np.hypot(r, height_difference(cfg, link))


def path_loss(cfg: ScenarioConfig, link: LinkKind, state: State, r):
    """Linear path loss ``tau_ref * d**alpha`` at 2-D distance ``r``."""
    d = distance_3d(cfg, link, r)
    if np.any(d <= 0):
        raise ValueError(f"co-located nodes on link {link.tag}: 3-D distance is zero")
    sp = cfg.links[link][state]
    return sp.ref_path_loss * d**sp.path_loss_exponent


def array_factor(theta, antenna: AntennaConfig):
    """Normalized array factor of the vertical uniform linear array."""
    theta = np.asarray(theta, dtype=float)
    n = antenna.n_elements
    x = math.pi * antenna.spacing_wavelengths * (np.cos(theta) - math.cos(math.radians(antenna.downtilt_deg)))
    den = np.sin(x)
    singular = np.abs(den) < _SINGULAR
    safe = np.where(singular, 1.0, den)
    out = np.where(singular, float(n), np.sin(n * x) ** 2 / (n * safe**2))
    return out if out.ndim else float(out)


def element_gain(theta, antenna: AntennaConfig):
    out = db2lin(antenna.element_gain_max_db) * np.sin(np.asarray(theta, dtype=float)) ** 2
    return out if np.ndim(out) else float(out)


def bs_antenna_gain(theta, antenna: AntennaConfig):
    """Total linear BS gain at zenith angle ``theta`` (radians)."""
    return array_factor(theta, antenna) * element_gain(theta, antenna)


def zenith_angle(r, h_node: float, h_bs: float):
    """Zenith angle at the BS towards a node at 2-D distance ``r`` and height ``h_node``."""
    return np.arctan2(r, h_node - h_bs)


def antenna_gain(cfg: ScenarioConfig, link: LinkKind, r):
    """Link antenna gain; only BS ends contribute (UAVs and GUEs are 0 dBi)."""
    if link.rx is not NodeKind.BS:
        return np.ones_like(np.asarray(r, dtype=float)) if np.ndim(r) else 1.0
    theta = zenith_angle(r, cfg.height(link.tx), cfg.h_b)
    return bs_antenna_gain(theta, cfg.antenna)


def large_scale_loss(cfg: ScenarioConfig, link: LinkKind, state: State, r):
    """Large-scale fading ``zeta = path loss / antenna gain`` (linear)."""
    return path_loss(cfg, link, state, r) / antenna_gain(cfg, link, r)


# -- small-scale fading ------------------------------------------------------


def fading_cdf_exact(m: int, omega):
    """Nakagami-m power CDF (Gamma(m, 1/m))."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("fading power must be non-negative")
    mw = m * omega
    term = np.ones_like(mw)
    acc = np.ones_like(mw)
    for i in range(1, m):
        term = term * mw / i
        acc = acc + term
    out = 1.0 - acc * np.exp(-mw)
    return out if out.ndim else float(out)


def fading_cdf_approx(m: int, b: float, omega):
    out = (-np.expm1(-b * np.asarray(omega, dtype=float))) ** m
    return out if np.ndim(out) else float(out)


FIT_GRID = np.logspace(-3, 1, 200)


@lru_cache(maxsize=None)
def fading_fit(m: int) -> tuple[float, float]:
    """Least-squares ``b`` for ``(1 - exp(-b w))**m`` and its sup-norm CDF gap on the fit grid."""
    if m < 1 or int(m) != m:
        raise ValueError("m must be a positive integer")
    exact = fading_cdf_exact(m, FIT_GRID)
    if m == 1:
        return 1.0, 0.0

    def sse(b):
        return float(np.sum((fading_cdf_approx(m, b, FIT_GRID) - exact) ** 2))

    res = minimize_scalar(sse, bounds=(0.5, float(m) + 1.0), method="bounded", options={"xatol": 1e-12})
    b = float(res.x)
    return b, float(np.max(np.abs(fading_cdf_approx(m, b, FIT_GRID) - exact)))


def fit_fading_b(m: int) -> float:
    return fading_fit(int(m))[0]


def sample_fading(m: int, rng: np.random.Generator, size=None):
    """Unit-mean Gamma(m, 1/m) fading power draws."""
    return rng.gamma(m, 1.0 / m, size=size)


def link_fading_m(cfg: ScenarioConfig, link: LinkKind, state: State) -> int:
    return int(cfg.links[link][state].fading_m)


# -- power and noise ---------------------------------------------------------


def tx_power(pc: PowerControlParams, zeta):
    """Fractional power control per PRB, in mW."""
    out = np.minimum(pc.cap_mw, pc.rho_mw * np.asarray(zeta, dtype=float) ** pc.epsilon)
    return out if np.ndim(out) else float(out)


def noise_per_prb(cfg: ScenarioConfig) -> float:
    """Thermal noise power over one PRB, in mW."""
    return cfg.noise_mw

"""Drop-based Monte Carlo simulator, free of the analytical approximations.

Each drop conditions on a typical receiver at the origin and realizes every
interferer explicitly: its position, its own serving-link distance and LoS
state (hence its power-control output), the LoS state and fading of its link
to the typical receiver.  NLoS interferers are kept and UAV powers are never
replaced by their mean.

Populations are simulated inside a per-population disk; the mean received
power from beyond the disk is added as a deterministic far-field term (the
fluctuation of that far sum is negligible, its mean is not for the
``alpha = 2.2`` LoS UAV links).

Randomness: drops are grouped in fixed-size blocks, and every (block,
population) pair owns its own ``SeedSequence`` child, so results depend
only on the seed, never on thread count, and changing one population's
parameters leaves the draws of the others untouched.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import channel
from .config import LinkKind, ScenarioConfig, State
from .kernels import received_power_sum
from .quadrature import fixed_rule, geometric_edges

BLOCK = 1000
WINDOW_FLOOR_M = 5000.0
_STREAMS = {"typical": 0, "uav": 1, "gue": 2}


@dataclass(frozen=True)
class SimEstimate:
    mean: float
    ci_halfwidth_95: float
    n_drops: int
    seed: int


@dataclass
class DropStats:
    """Per-drop signal, per-population interference and noise (all mW)."""

    signal: np.ndarray
    interference: dict
    noise: float
    far_field: dict = field(default_factory=dict)

    @property
    def total_interference(self):
        total = np.zeros_like(self.signal)
        for key in sorted(self.interference):
            total = total + self.interference[key] + self.far_field.get(key, 0.0)
        return total

    @property
    def sinr(self):
        with np.errstate(divide="ignore"):
            return self.signal / (self.noise + self.total_interference)


@dataclass
class DropSample:
    """One realization around the typical receiver at the origin.

    ``uav_rx_offsets``/``link_states``/``fading`` describe the typical
    link (distance, LoS=0/NLoS=1, power gain); interferer point sets are
    2-D positions in meters.  ``bs_points`` only contains the typical BS:
    the other BSs enter solely through each GUE's own serving distance.
    """

    link: str
    bs_points: np.ndarray
    gue_points: np.ndarray
    uav_tx_points: np.ndarray
    uav_rx_offsets: np.ndarray
    link_states: np.ndarray
    fading: np.ndarray
    sinr: float


def window_radius(density: float, scale: float = 1.0) -> float:
    if density <= 0:
        return 0.0
    return scale * max(WINDOW_FLOOR_M, 10.0 / math.sqrt(density * math.pi))


def thread_count() -> int:
    env = os.environ.get("AEROLAY_THREADS")
    n = os.cpu_count() or 1
    return max(1, min(n, int(env))) if env else n


# -- point processes -----------------------------------------------------------


class RadialDensity:
    """Isotropic density ``lam(r)`` with a tabulated inverse radial CDF."""

    def __init__(self, fn, n_grid=1 << 16):
        self.fn = fn
        self.n_grid = n_grid
        self._cache = {}

    def tables(self, radius):
        """Total mass in the disk and radii at evenly spaced cumulative-mass levels."""
        if radius not in self._cache:
            r = np.linspace(0.0, radius, self.n_grid)
            mass = 2.0 * math.pi * r * self.fn(r)
            cum = np.concatenate([[0.0], np.cumsum(0.5 * (mass[1:] + mass[:-1]) * np.diff(r))])
            levels = np.linspace(0.0, cum[-1], self.n_grid)
            self._cache[radius] = (float(cum[-1]), np.interp(levels, cum, r))
        return self._cache[radius]

    def inverse(self, radius, u):
        _, inv = self.tables(radius)
        pos = u * (len(inv) - 1)
        i = np.minimum(pos.astype(np.int64), len(inv) - 2)
        t = pos - i
        return inv[i] * (1.0 - t) + inv[i + 1] * t


def _sample_ppp_batch(density, radius, n_drops, rng):
    """Points of ``n_drops`` independent realizations in a disk; returns (owner drop, r, angle)."""
    if radius <= 0 or (not isinstance(density, RadialDensity) and density <= 0):
        return np.zeros(0, np.int64), np.zeros(0), np.zeros(0)
    if isinstance(density, RadialDensity):
        mean, _ = density.tables(radius)
    else:
        mean = density * math.pi * radius**2
    counts = rng.poisson(mean, size=n_drops)
    owner = np.repeat(np.arange(n_drops), counts)
    u = rng.random(owner.size)
    if isinstance(density, RadialDensity):
        r = density.inverse(radius, u)
    else:
        r = radius * np.sqrt(u)
    angle = rng.uniform(0.0, 2.0 * math.pi, owner.size)
    return owner, r, angle


def sample_ppp(density, window_radius, rng):
    """One PPP realization in a disk as an ``(n, 2)`` array of positions (m).

    ``density`` is a constant (per m^2) or a :class:`RadialDensity`.
    """
    _, r, angle = _sample_ppp_batch(density, window_radius, 1, rng)
    return np.column_stack([r * np.cos(angle), r * np.sin(angle)])


def _gue_bs_fn(lam):
    return lambda r: lam * -np.expm1(-lam * math.pi * r**2)


def gue_bs_density(cfg: ScenarioConfig) -> RadialDensity:
    """Density of co-channel GUEs seen from the typical BS."""
    cache = cfg.__dict__.setdefault("_gue_bs_density", {})
    if cfg.lambda_b not in cache:
        cache[cfg.lambda_b] = RadialDensity(_gue_bs_fn(cfg.lambda_b))
    return cache[cfg.lambda_b]


# -- link helpers ---------------------------------------------------------------


def _draw_states(cfg, link, r, rng):
    """LoS (0) / NLoS (1) states from the exact ITU product."""
    h_x, h_y = cfg.heights(link)
    p = channel.los_exact(cfg.los_model, h_x, h_y, r) if link not in cfg.los_model.overrides else (
        np.full(np.shape(r), cfg.los_model.overrides[link])
    )
    return (rng.random(np.shape(r)) >= p).astype(np.int8)


def _zeta(cfg, link, states, r):
    """Large-scale loss per element with per-element state."""
    sp_l, sp_n = cfg.links[link][State.LOS], cfg.links[link][State.NLOS]
    d = channel.distance_3d(cfg, link, r)
    loss = np.where(
        states == 0, sp_l.ref_path_loss * d**sp_l.path_loss_exponent, sp_n.ref_path_loss * d**sp_n.path_loss_exponent
    )
    return loss / channel.antenna_gain(cfg, link, r)


def _fading(cfg, link, states, rng):
    m_l = channel.link_fading_m(cfg, link, State.LOS)
    m_n = channel.link_fading_m(cfg, link, State.NLOS)
    out = np.empty(states.shape)
    los = states == 0
    out[los] = channel.sample_fading(m_l, rng, int(los.sum()))
    out[~los] = channel.sample_fading(m_n, rng, int((~los).sum()))
    return out


def _uav_pair_distance(cfg, rng, size):
    s = cfg.sigma_u
    mass = -math.expm1(-(cfg.r_max_u2u**2) / (2.0 * s * s))
    r = s * np.sqrt(-2.0 * np.log1p(-rng.random(size) * mass))
    assert np.all(r <= cfg.r_max_u2u)
    return r


def _gue_serving_distance(cfg, rng, size, below=None):
    """Rayleigh serving distance, optionally conditioned on being below ``below``."""
    s = cfg.sigma_g
    u = rng.random(size)
    if below is None:
        return s * np.sqrt(-2.0 * np.log1p(-u))
    mass = -np.expm1(-(below**2) / (2.0 * s * s))
    return s * np.sqrt(-2.0 * np.log1p(-u * mass))


def _uav_powers(cfg, rng, size):
    r = _uav_pair_distance(cfg, rng, size)
    st = _draw_states(cfg, LinkKind.UU, r, rng)
    return channel.tx_power(cfg.power_u, _zeta(cfg, LinkKind.UU, st, r))


def _gue_powers(cfg, rng, size, below=None):
    r = _gue_serving_distance(cfg, rng, size, below)
    st = _draw_states(cfg, LinkKind.GB, r, rng)
    return channel.tx_power(cfg.power_g, _zeta(cfg, LinkKind.GB, st, r))


def _population(cfg, link, density, owner, r, power, rng, n_drops):
    """Aggregate received power per drop from one explicitly realized population."""
    states = _draw_states(cfg, link, r, rng)
    fading = _fading(cfg, link, states, rng)
    sp_l, sp_n = cfg.links[link][State.LOS], cfg.links[link][State.NLOS]
    return received_power_sum(
        owner,
        r,
        channel.height_difference(cfg, link),
        states,
        power * fading,
        (sp_l.ref_path_loss, sp_n.ref_path_loss),
        (sp_l.path_loss_exponent, sp_n.path_loss_exponent),
        cfg.antenna if link.rx.value == "bs" else None,
        cfg.h_b,
        cfg.height(link.tx),
        n_drops,
    )


# -- far field ------------------------------------------------------------------


def uav_mean_power_numeric(cfg: ScenarioConfig) -> float:
    cache = cfg.__dict__.setdefault("_mean_power", {})
    if "uav_mean_power_numeric" not in cache:
        cache["uav_mean_power_numeric"] = _uav_mean_power_numeric(cfg)
    return cache["uav_mean_power_numeric"]


def _uav_mean_power_numeric(cfg):
    """Mean UAV power by brute-force quadrature over the pair-distance law."""
    nodes, w = fixed_rule(np.linspace(0.0, cfg.r_max_u2u, 201), order=12)
    s2 = cfg.sigma_u**2
    f = nodes / s2 * np.exp(-(nodes**2) / (2 * s2)) / -math.expm1(-(cfg.r_max_u2u**2) / (2 * s2))
    p = channel.los_exact(cfg.los_model, cfg.h_u, cfg.h_u, nodes) if LinkKind.UU not in cfg.los_model.overrides else (
        cfg.los_model.overrides[LinkKind.UU]
    )
    pl = channel.tx_power(cfg.power_u, channel.large_scale_loss(cfg, LinkKind.UU, State.LOS, nodes))
    pn = channel.tx_power(cfg.power_u, channel.large_scale_loss(cfg, LinkKind.UU, State.NLOS, nodes))
    return float(np.sum(w * f * (p * pl + (1 - p) * pn)))


def gue_mean_power_numeric(cfg: ScenarioConfig) -> float:
    cache = cfg.__dict__.setdefault("_mean_power", {})
    if "gue_mean_power_numeric" not in cache:
        cache["gue_mean_power_numeric"] = _gue_mean_power_numeric(cfg)
    return cache["gue_mean_power_numeric"]


def _gue_mean_power_numeric(cfg):
    s = cfg.sigma_g
    nodes, w = fixed_rule(np.linspace(0.0, s * math.sqrt(80.0), 401), order=12)
    f = nodes / s**2 * np.exp(-(nodes**2) / (2 * s * s))
    p = channel.los_exact(cfg.los_model, cfg.h_b, cfg.h_g, nodes)
    pl = channel.tx_power(cfg.power_g, channel.large_scale_loss(cfg, LinkKind.GB, State.LOS, nodes))
    pn = channel.tx_power(cfg.power_g, channel.large_scale_loss(cfg, LinkKind.GB, State.NLOS, nodes))
    return float(np.sum(w * f * (p * pl + (1 - p) * pn)))


def far_field_mean(cfg: ScenarioConfig, link: LinkKind, density: float, mean_power: float, radius: float) -> float:
    """Mean received power from a homogeneous population beyond ``radius``."""
    if density <= 0 or radius <= 0:
        return 0.0
    cache = cfg.__dict__.setdefault("_far_field", {})
    key = (link, radius)
    if key not in cache:
        cache[key] = _far_field_unit(cfg, link, radius)
    return density * mean_power * cache[key]


def _far_field_unit(cfg, link, radius):
    grid = channel.los_grid(cfg, link)
    extent = max(grid.extent, radius)
    nodes, w = fixed_rule(geometric_edges(radius, extent, 1.02), order=8)
    p = grid(nodes)
    gain = channel.antenna_gain(cfg, link, nodes)
    total = 0.0
    dh = channel.height_difference(cfg, link)
    for state, ps in ((State.LOS, p), (State.NLOS, 1.0 - p)):
        sp = cfg.links[link][state]
        d = np.hypot(nodes, dh)
        total += float(np.sum(w * 2 * math.pi * nodes * ps * gain / (sp.ref_path_loss * d**sp.path_loss_exponent)))
        p_end = float(ps[-1])
        if p_end > 0:
            if sp.path_loss_exponent <= 2.0:
                raise ValueError(f"far-field interference diverges on link {link.tag} ({state.tag})")
            g_end = float(gain[-1])
            total += 2 * math.pi * p_end * g_end / sp.ref_path_loss * (extent**2 + dh**2) ** (
                1 - sp.path_loss_exponent / 2
            ) / (sp.path_loss_exponent - 2)
    return total


# -- drops ----------------------------------------------------------------------


def _streams(seed, block):
    return {
        name: np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block, k))))
        for name, k in _STREAMS.items()
    }


def _u2u_block(cfg, n, rngs, scale, keep=False):
    typ = rngs["typical"]
    r0 = _uav_pair_distance(cfg, typ, n)
    st0 = _draw_states(cfg, LinkKind.UU, r0, typ)
    zeta0 = _zeta(cfg, LinkKind.UU, st0, r0)
    psi0 = _fading(cfg, LinkKind.UU, st0, typ)
    signal = channel.tx_power(cfg.power_u, zeta0) * psi0 / zeta0
    interference, extra = {}, {}

    lam_u = cfg.lambda_u
    p_active = 1.0 if cfg.overlay else cfg.eta_u
    w_u = window_radius(lam_u * p_active, scale)
    rng = rngs["uav"]
    owner, r, ang = _sample_ppp_batch(lam_u, w_u, n, rng)
    active = rng.random(owner.size) < p_active
    owner, r, ang = owner[active], r[active], ang[active]
    power = _uav_powers(cfg, rng, owner.size)
    interference["uav"] = _population(cfg, LinkKind.UU, lam_u, owner, r, power, rng, n)
    extra["uav"] = (owner, r, ang)

    far = {"uav": far_field_mean(cfg, LinkKind.UU, lam_u * p_active, uav_mean_power_numeric(cfg), w_u)}
    if not cfg.overlay:
        lam_g = cfg.lambda_b
        w_g = window_radius(lam_g, scale)
        rng = rngs["gue"]
        owner, r, ang = _sample_ppp_batch(lam_g, w_g, n, rng)
        power = _gue_powers(cfg, rng, owner.size)
        interference["gue"] = _population(cfg, LinkKind.GU, lam_g, owner, r, power, rng, n)
        far["gue"] = far_field_mean(cfg, LinkKind.GU, lam_g, gue_mean_power_numeric(cfg), w_g)
        extra["gue"] = (owner, r, ang)
    stats = DropStats(signal, interference, cfg.noise_mw, far)
    if keep:
        return stats, {"r0": r0, "st0": st0, "psi0": psi0, "points": extra}
    return stats


def _gue_block(cfg, n, rngs, scale, keep=False):
    typ = rngs["typical"]
    r0 = _gue_serving_distance(cfg, typ, n)
    st0 = _draw_states(cfg, LinkKind.GB, r0, typ)
    zeta0 = _zeta(cfg, LinkKind.GB, st0, r0)
    psi0 = _fading(cfg, LinkKind.GB, st0, typ)
    signal = channel.tx_power(cfg.power_g, zeta0) * psi0 / zeta0
    interference, extra, far = {}, {}, {}

    w_g = window_radius(cfg.lambda_b, scale)
    rng = rngs["gue"]
    owner, r, ang = _sample_ppp_batch(gue_bs_density(cfg), w_g, n, rng)
    power = _gue_powers(cfg, rng, owner.size, below=r)
    interference["gue"] = _population(cfg, LinkKind.GB, cfg.lambda_b, owner, r, power, rng, n)
    far["gue"] = far_field_mean(cfg, LinkKind.GB, cfg.lambda_b, gue_mean_power_numeric(cfg), w_g)
    extra["gue"] = (owner, r, ang)

    if not cfg.overlay and cfg.eta_u > 0:
        lam_u = cfg.lambda_u
        w_u = window_radius(lam_u * cfg.eta_u, scale)
        rng = rngs["uav"]
        owner, r, ang = _sample_ppp_batch(lam_u, w_u, n, rng)
        active = rng.random(owner.size) < cfg.eta_u
        owner, r, ang = owner[active], r[active], ang[active]
        power = _uav_powers(cfg, rng, owner.size)
        interference["uav"] = _population(cfg, LinkKind.UB, lam_u, owner, r, power, rng, n)
        far["uav"] = far_field_mean(cfg, LinkKind.UB, lam_u * cfg.eta_u, uav_mean_power_numeric(cfg), w_u)
        extra["uav"] = (owner, r, ang)
    stats = DropStats(signal, interference, cfg.noise_mw, far)
    if keep:
        return stats, {"r0": r0, "st0": st0, "psi0": psi0, "points": extra}
    return stats


_BLOCKS = {"u2u": _u2u_block, "gue_ul": _gue_block}


def simulate(cfg: ScenarioConfig, link: str, n_drops: int, seed: int, window_scale=1.0, threads=None) -> DropStats:
    """Run ``n_drops`` drops for ``link`` (``"u2u"`` or ``"gue_ul"``)."""
    if n_drops < 1:
        raise ValueError("n_drops must be >= 1")
    if link not in _BLOCKS:
        raise ValueError(f"unknown link {link!r}")
    if link == "u2u" and cfg.eta_u <= 0:
        raise ValueError("U2U simulation needs eta_u > 0")
    if link == "gue_ul" and cfg.eta_g <= 0:
        raise ValueError("GUE simulation needs a non-empty GUE band")
    fn = _BLOCKS[link]
    sizes = [min(BLOCK, n_drops - s) for s in range(0, n_drops, BLOCK)]

    def run(b):
        return fn(cfg, sizes[b], _streams(seed, b), window_scale)

    threads = threads or thread_count()
    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(run, range(len(sizes))))
    else:
        parts = [run(b) for b in range(len(sizes))]
    keys = sorted(set().union(*(p.interference for p in parts)))
    return DropStats(
        np.concatenate([p.signal for p in parts]),
        {k: np.concatenate([p.interference[k] for p in parts]) for k in keys},
        parts[0].noise,
        parts[0].far_field,
    )


def _estimate(hits: np.ndarray, n: int, seed: int) -> SimEstimate:
    p = float(hits.mean())
    return SimEstimate(p, 1.96 * math.sqrt(p * (1.0 - p) / n), n, seed)


def coverage_from_sinr(sinr, t_db, seed=0):
    """Empirical CCDF of SINR samples at threshold(s) ``t_db``."""
    ratios = 10.0 ** (np.atleast_1d(np.asarray(t_db, dtype=float)) / 10.0)
    return [_estimate(sinr > t, len(sinr), seed) for t in ratios]


def estimate_coverage(cfg: ScenarioConfig, link: str, t_db, n_drops: int, seed: int, **kw):
    """Fraction of drops with SINR above ``t_db``; a list for array thresholds."""
    sinr = simulate(cfg, link, n_drops, seed, **kw).sinr
    out = coverage_from_sinr(sinr, t_db, seed)
    return out[0] if np.ndim(t_db) == 0 else out


def empirical_laplace(cfg: ScenarioConfig, link: str, population: str, s, n_drops: int, seed: int, **kw):
    """Sample mean of ``exp(-s I)`` over drops for one interferer population."""
    stats = simulate(cfg, link, n_drops, seed, **kw)
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s_arr < 0):
        raise ValueError("s must be non-negative")
    if population not in stats.interference:
        out = np.ones(s_arr.shape)
    else:
        total = stats.interference[population] + stats.far_field.get(population, 0.0)
        out = np.array([np.mean(np.exp(-si * total)) if si > 0 else 1.0 for si in s_arr])
    return float(out[0]) if np.ndim(s) == 0 else out


def mean_tx_power_samples(cfg: ScenarioConfig, n: int, seed: int) -> float:
    """Sample mean of UAV transmit power over pair distances and LoS states."""
    rng = np.random.Generator(np.random.PCG64(seed))
    return float(np.mean(_uav_powers(cfg, rng, n)))


def _single_drop(cfg, link, rng):
    if isinstance(rng, np.random.Generator):
        seed = int(rng.integers(0, 2**63))
    else:
        seed = int(rng)
    stats, raw = _BLOCKS[link](cfg, 1, _streams(seed, 0), 1.0, keep=True)
    pts = {}
    for key, (owner, r, ang) in raw["points"].items():
        pts[key] = np.column_stack([r * np.cos(ang), r * np.sin(ang)])
    empty = np.zeros((0, 2))
    return DropSample(
        link=link,
        bs_points=np.zeros((1, 2)),
        gue_points=pts.get("gue", empty),
        uav_tx_points=pts.get("uav", empty),
        uav_rx_offsets=np.asarray(raw["r0"]) if link == "u2u" else np.zeros(0),
        link_states=np.asarray(raw["st0"]),
        fading=np.asarray(raw["psi0"]),
        sinr=float(stats.sinr[0]),
    )


def run_drop_u2u(cfg: ScenarioConfig, rng) -> DropSample:
    """One U2U drop; ``rng`` is a Generator or an integer seed."""
    return _single_drop(cfg, "u2u", rng)


def run_drop_gue_ul(cfg: ScenarioConfig, rng) -> DropSample:
    """One GUE uplink drop (typical BS at the origin)."""
    return _single_drop(cfg, "gue_ul", rng)

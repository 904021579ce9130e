"""Semi-analytical coverage of the U2U link and the GUE uplink.

The interference Laplace functionals are evaluated from the PPP probability
generating functional: for a population of density ``lam`` observed through
link ``xy`` in state ``s``,

    -log L(z) = 2 pi lam sum_a w_a int_{f_a}^inf p_s(r) [1 - (1 + z P_a / (m zeta_s(r)))^-m] r dr

where ``(P_a, w_a, f_a)`` are transmit-power atoms with their probability
mass and the radius below which that interferer cannot sit (GUEs are never
closer to the observed BS than to their own).  Integrating the step LoS
profile cell by cell is the same sum as weighting the partial integrals by
LoS-probability differences at the breakpoints.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import comb, gamma as gamma_fn, gammainc

from . import channel
from .config import LinkKind, ScenarioConfig, State
from .quadrature import LogTable, adaptive_quad, fixed_rule, geometric_edges

RTOL = 1e-6
ATOL = 1e-10
_LIN_TOL = 1e-8
_COLUMN_CHUNK = 32


def db_to_ratio(t_db):
    return 10.0 ** (np.asarray(t_db, dtype=float) / 10.0)


# -- mean UAV transmit power -------------------------------------------------


def _pair_mass(cfg: ScenarioConfig) -> float:
    return -math.expm1(-(cfg.r_max_u2u**2) / (2.0 * cfg.sigma_u**2))


def power_cap_radius(cfg: ScenarioConfig, state: State) -> float:
    """U2U distance beyond which a UAV transmits at its per-PRB cap."""
    sp = cfg.links[LinkKind.UU][state]
    pc = cfg.power_u
    if pc.epsilon == 0.0:
        return math.inf if pc.rho_mw < pc.cap_mw else 0.0
    return (1.0 / sp.ref_path_loss) ** (1.0 / sp.path_loss_exponent) * (pc.cap_mw / pc.rho_mw) ** (
        1.0 / (sp.path_loss_exponent * pc.epsilon)
    )


def _lower_gamma(a, y):
    return gammainc(a, y) * gamma_fn(a)


def _check_pair_config(cfg):
    if cfg.sigma_u <= 0 or cfg.r_max_u2u <= 0:
        raise ValueError("sigma_u and r_max_u2u must be positive")
    if channel.height_difference(cfg, LinkKind.UU) != 0.0:
        raise ValueError("closed-form mean power assumes co-altitude UAV pairs")


def mean_uav_tx_power(cfg: ScenarioConfig) -> float:
    """Mean per-PRB UAV transmit power (mW) over pair distance and link state.

    Per LoS cell ``[r_i, r_{i+1})`` the fractional-control part is an
    incomplete-gamma difference and the capped part an exponential
    difference, split at the cap radius of each state.
    """
    _check_pair_config(cfg)
    two_s2 = 2.0 * cfg.sigma_u**2
    mass = _pair_mass(cfg)
    pc = cfg.power_u
    grid = channel.los_grid(cfg, LinkKind.UU)
    edges = grid.breakpoints[grid.breakpoints < cfg.r_max_u2u]
    lo = edges
    hi = np.append(edges[1:], cfg.r_max_u2u)
    p_los = grid(lo)
    total = 0.0
    for state in State:
        sp = cfg.links[LinkKind.UU][state]
        p = p_los if state is State.LOS else 1.0 - p_los
        r_m = power_cap_radius(cfg, state)
        ae = sp.path_loss_exponent * pc.epsilon
        a = 1.0 + ae / 2.0
        c0 = two_s2 ** (ae / 2.0) * pc.rho_mw * sp.ref_path_loss**pc.epsilon / mass
        hi_f = np.minimum(hi, r_m)
        lo_c = np.maximum(lo, r_m)
        frac = np.where(hi_f > lo, _lower_gamma(a, hi_f**2 / two_s2) - _lower_gamma(a, lo**2 / two_s2), 0.0)
        capped = np.where(hi > lo_c, np.exp(-(lo_c**2) / two_s2) - np.exp(-(hi**2) / two_s2), 0.0)
        total += float(np.sum(p * (c0 * frac + pc.cap_mw * capped / mass)))
    return total


def mean_uav_tx_power_los(cfg: ScenarioConfig) -> float:
    """Mean UAV power when every U2U link is LoS (two-term closed form)."""
    _check_pair_config(cfg)
    two_s2 = 2.0 * cfg.sigma_u**2
    mass = _pair_mass(cfg)
    pc = cfg.power_u
    sp = cfg.links[LinkKind.UU][State.LOS]
    ae = sp.path_loss_exponent * pc.epsilon
    c1 = two_s2 ** (ae / 2.0) * pc.rho_mw * sp.ref_path_loss**pc.epsilon / mass
    r_m = min(power_cap_radius(cfg, State.LOS), cfg.r_max_u2u)
    y_m, y_big = r_m**2 / two_s2, cfg.r_max_u2u**2 / two_s2
    return c1 * _lower_gamma(1.0 + ae / 2.0, y_m) + pc.cap_mw / mass * (math.exp(-y_m) - math.exp(-y_big))


# -- radial transforms and Laplace kernels -----------------------------------


class RadialTransform:
    """``J(x) = int_0^inf p_s(r) [1 - (1 + x c(r))^-m] r dr`` for one link and state.

    ``c(r) = g(r) / (m tau_ref d(r)^alpha)``.  Beyond the LoS grid extent the
    integrand is integrated on geometric panels until ``x c(r)`` is below
    1e-8, after which the linearized power-law tail is added in closed form.
    """

    def __init__(self, cfg: ScenarioConfig, link: LinkKind, state: State):
        self.cfg, self.link, self.state = cfg, link, State(state)
        sp = cfg.links[link][self.state]
        self.alpha = sp.path_loss_exponent
        self.tau = sp.ref_path_loss
        self.m = int(sp.fading_m)
        self.dh = channel.height_difference(cfg, link)
        self.grid = channel.los_grid(cfg, link)
        vals = self.grid.values if self.state is State.LOS else 1.0 - self.grid.values
        self.p_tail = float(vals[-1])
        nz = np.nonzero(vals > 0)[0]
        self.n_cells = int(nz[-1]) + 1 if len(nz) else 0
        self.table = LogTable(self.direct)
        self.truncation_radius = 0.0
        if self.p_tail > 0 and self.alpha <= 2.0:
            raise ValueError(
                f"interference integral diverges for link {link.tag} ({self.state.tag}): "
                f"path-loss exponent {self.alpha} <= 2 on an unbounded tail"
            )

    def p(self, r):
        p = self.grid(r)
        return p if self.state is State.LOS else 1.0 - p

    def c(self, r):
        d = np.hypot(r, self.dh)
        return channel.antenna_gain(self.cfg, self.link, r) / (self.m * self.tau * d**self.alpha)

    def _phi_weighted(self, r, x):
        y = self.c(r)[:, None] * x[None, :]
        return (self.p(r) * r)[:, None] * -np.expm1(-self.m * np.log1p(y))

    def _far_radius(self, x_max):
        r = max(self.grid.extent, 1.0)
        while x_max * self.m * self.c(np.array([r]))[0] > _LIN_TOL:
            r *= 2.0
        return r

    def direct(self, x):
        """Evaluate ``J`` at each entry of ``x`` (no tabulation)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros(x.shape)
        for s in range(0, len(x), _COLUMN_CHUNK):
            out[s : s + _COLUMN_CHUNK] = self._direct_chunk(x[s : s + _COLUMN_CHUNK])
        return out

    def _direct_chunk(self, x):
        if self.n_cells == 0 or not np.any(x > 0):
            return np.zeros(x.shape)
        edges = self.grid.breakpoints[: self.n_cells + 1]
        if self.p_tail > 0:
            r_far = self._far_radius(float(x.max()))
            self.truncation_radius = max(self.truncation_radius, r_far)
            edges = np.concatenate([edges, geometric_edges(edges[-1], r_far)[1:]])
        total = adaptive_quad(
            lambda r: self._phi_weighted(r, x), edges, RTOL, ATOL, label=f"J_{self.link.tag}^{self.state.tag}"
        )
        if self.p_tail > 0:
            r_far = edges[-1]
            g = channel.antenna_gain(self.cfg, self.link, np.array([r_far]))[0]
            tail = (r_far**2 + self.dh**2) ** (1.0 - self.alpha / 2.0) / (self.alpha - 2.0)
            total = total + self.p_tail * x * g / self.tau * tail
        return total

    def partial(self, upper, x):
        """``int_0^upper`` of the same integrand; ``upper`` and ``x`` are matched 1-D arrays."""
        spacing = self.grid.spacing
        upper = np.asarray(upper, dtype=float)
        x = np.asarray(x, dtype=float)
        full_cells = (upper / spacing).astype(np.int64)
        n_full = int(full_cells.max()) if len(full_cells) else 0
        out = np.zeros(len(x))
        if n_full > 0:
            edges = np.arange(n_full + 1) * spacing
            per_cell = adaptive_quad(
                lambda r: self._phi_weighted(r, x), edges, RTOL, ATOL, label=f"K_{self.link.tag}", panel_totals=True
            )
            mask = np.arange(n_full)[:, None] < full_cells[None, :]
            out += np.sum(per_cell * mask, axis=0)
        lo = full_cells * spacing
        nodes, weights = fixed_rule(np.array([0.0, 1.0]), order=16)
        r = lo[:, None] + (upper - lo)[:, None] * nodes[None, :]
        y = self.c(r.ravel()).reshape(r.shape) * x[:, None]
        f = self.p(r) * r * -np.expm1(-self.m * np.log1p(y))
        out += (upper - lo) * np.sum(f * weights[None, :], axis=1)
        return out


@dataclass
class PowerAtoms:
    """Discrete transmit-power law of an interferer population."""

    power: np.ndarray
    weight: np.ndarray
    floor: np.ndarray | None = None


@dataclass
class LaplaceKernel:
    """One interferer population seen by one receiver.

    ``exponent(s)`` returns ``-log L(s)``; ``laplace(s)`` returns ``L(s)``.
    """

    cfg: ScenarioConfig
    link: LinkKind
    density: float
    atoms: PowerAtoms
    states: tuple[State, ...] = (State.LOS,)
    transforms: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        keep = self.atoms.weight > 1e-15
        self.atoms = PowerAtoms(
            self.atoms.power[keep],
            self.atoms.weight[keep],
            None if self.atoms.floor is None else self.atoms.floor[keep],
        )
        for s in self.states:
            self.transforms[s] = RadialTransform(self.cfg, self.link, s)
        self._table = LogTable(lambda z: self._exponent(z, tabulated=True))

    def radial_density(self, r):
        """Effective interferer density at 2-D distance ``r`` of the receiver."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if self.atoms.floor is None:
            return np.full(r.shape, self.density * self.atoms.weight.sum())
        beyond = r[:, None] > self.atoms.floor[None, :]
        return self.density * (beyond * self.atoms.weight[None, :]).sum(axis=1)

    def _exponent(self, z, tabulated=False):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        if self.density == 0.0:
            return np.zeros(z.shape)
        x = z[:, None] * self.atoms.power[None, :]
        acc = np.zeros(z.shape)
        for s in self.states:
            tr = self.transforms[s]
            j = tr.table(x.ravel()) if tabulated else tr.direct(x.ravel())
            j = j.reshape(x.shape)
            if self.atoms.floor is not None:
                fl = np.broadcast_to(self.atoms.floor[None, :], x.shape)
                j = j - tr.partial(fl.ravel(), x.ravel()).reshape(x.shape)
                j = np.maximum(j, 0.0)
            acc += j @ self.atoms.weight
        return 2.0 * math.pi * self.density * acc

    def exponent(self, s, tabulated=False):
        s = np.asarray(s, dtype=float)
        if np.any(s < 0):
            raise ValueError("Laplace argument must be non-negative")
        flat = s.ravel()
        if self.density == 0.0:
            return np.zeros(s.shape)
        out = self._table(flat) if tabulated else self._exponent(flat)
        return out.reshape(s.shape)

    def laplace(self, s, tabulated=False):
        return np.exp(-self.exponent(s, tabulated))

    @property
    def truncation_radius(self) -> float:
        return max((t.truncation_radius for t in self.transforms.values()), default=0.0)


def laplace_interference(kernel: LaplaceKernel, s):
    """Laplace functional ``E[exp(-s I)]`` of the kernel's interference."""
    out = kernel.laplace(s)
    return float(out) if np.ndim(out) == 0 else out


def _gue_serving_atoms(cfg: ScenarioConfig, order=8):
    """Power atoms of a GUE over its Rayleigh serving distance and serving-link state."""
    sigma = cfg.sigma_g
    r_hi = sigma * math.sqrt(2.0 * 40.0)
    grid = channel.los_grid(cfg, LinkKind.GB)
    edges = grid.breakpoints[grid.breakpoints < r_hi]
    edges = np.append(edges, r_hi)
    nodes, wq = fixed_rule(edges, order)
    f = nodes / sigma**2 * np.exp(-(nodes**2) / (2.0 * sigma**2))
    p_los = grid(nodes)
    power, weight, floor = [], [], []
    for state in State:
        zeta = channel.large_scale_loss(cfg, LinkKind.GB, state, nodes)
        power.append(channel.tx_power(cfg.power_g, zeta))
        weight.append(wq * f * (p_los if state is State.LOS else 1.0 - p_los))
        floor.append(nodes)
    return np.concatenate(power), np.concatenate(weight), np.concatenate(floor)


def uav_kernel(cfg: ScenarioConfig, receiver: str, density=None, states=(State.LOS,), power=None) -> LaplaceKernel:
    """UAV interferers at the typical U2U receiver (``"u2u"``) or BS (``"bs"``), at mean power."""
    link = LinkKind.UU if receiver == "u2u" else LinkKind.UB
    if density is None:
        density = cfg.uav_interferer_density if receiver == "u2u" else cfg.uav_density_on_gue_prb
    if power is None:
        power = mean_uav_tx_power(cfg) if density > 0 else 0.0
    return LaplaceKernel(cfg, link, density, PowerAtoms(np.array([power]), np.array([1.0])), tuple(states))


def gue_kernel(cfg: ScenarioConfig, receiver: str, density=None, states=None) -> LaplaceKernel:
    """GUE interferers at the typical U2U receiver (``"u2u"``) or BS (``"bs"``).

    At the BS every interferer is farther away than its own serving distance,
    which reproduces the non-homogeneous density ``lam_b (1 - exp(-lam_b pi r^2))``.
    """
    power, weight, floor = _gue_serving_atoms(cfg)
    if receiver == "u2u":
        density = cfg.gue_density_on_uav_prb if density is None else density
        states = states or (State.LOS,)
        return LaplaceKernel(cfg, LinkKind.GU, density, PowerAtoms(power, weight), tuple(states))
    density = cfg.lambda_b if density is None else density
    states = states or (State.LOS, State.NLOS)
    return LaplaceKernel(cfg, LinkKind.GB, density, PowerAtoms(power, weight, floor), tuple(states))


# -- coverage ---------------------------------------------------------------


def _binomial_terms(m: int, b: float):
    return [(i, comb(m, i, exact=True) * (-1) ** (i + 1), i * b) for i in range(1, m + 1)]


def _conditional_coverage(base, thresholds, m, b, noise, kernels):
    """Binomial-expansion coverage given the serving link; ``base = zeta / P``."""
    cov = np.zeros((len(base), len(thresholds)))
    for _, coef, ib in _binomial_terms(m, b):
        z = ib * base[:, None] * thresholds[None, :]
        expo = z * noise
        for k in kernels:
            expo = expo + k.exponent(z, tabulated=True)
        cov += coef * np.exp(-expo)
    return cov


def u2u_coverage_general(cfg: ScenarioConfig, t_db, uav_density: float, gue_density: float, nlos_interference=False):
    """U2U coverage under explicit interferer densities (UAVs on the PRB, GUEs on the PRB).

    By default only LoS interferers are counted; ``nlos_interference=True``
    keeps the NLoS ones as well (a diagnostic, slower and not the closed model).
    """
    thresholds = db_to_ratio(np.atleast_1d(t_db))
    _check_pair_config(cfg)
    if cfg.eta_u <= 0:
        raise ValueError("U2U coverage needs eta_u > 0")
    sp = cfg.links[LinkKind.UU][State.LOS]
    m = int(sp.fading_m)
    b = channel.fit_fading_b(m)
    states = (State.LOS, State.NLOS) if nlos_interference else (State.LOS,)
    kernels = []
    if uav_density > 0:
        kernels.append(uav_kernel(cfg, "u2u", uav_density, states=states))
    if gue_density > 0:
        kernels.append(gue_kernel(cfg, "u2u", gue_density, states=states))
    sigma2 = cfg.sigma_u**2
    mass = _pair_mass(cfg)
    noise = cfg.noise_mw

    def integrand(r):
        zeta = channel.large_scale_loss(cfg, LinkKind.UU, State.LOS, r)
        power = channel.tx_power(cfg.power_u, zeta)
        f = r * np.exp(-(r**2) / (2.0 * sigma2)) / (sigma2 * mass) * channel.los_probability(cfg, LinkKind.UU, r)
        return f[:, None] * _conditional_coverage(zeta / power, thresholds, m, b, noise, kernels)

    grid = channel.los_grid(cfg, LinkKind.UU)
    edges = np.append(grid.breakpoints[grid.breakpoints < cfg.r_max_u2u], cfg.r_max_u2u)
    cov = adaptive_quad(integrand, edges, RTOL, ATOL, label="u2u coverage")
    return np.clip(cov, 0.0, 1.0), kernels


def u2u_coverage(cfg: ScenarioConfig, t_db, nlos_interference=False):
    """U2U coverage probability at SINR threshold(s) ``t_db`` (dB)."""
    gue = 0.0 if cfg.overlay else cfg.lambda_b
    cov, _ = u2u_coverage_general(cfg, t_db, cfg.uav_interferer_density, gue, nlos_interference)
    return float(cov[0]) if np.ndim(t_db) == 0 else cov


def gue_coverage_general(cfg: ScenarioConfig, t_db, uav_density: float):
    """GUE uplink coverage with an explicit density of UAVs active on the GUE PRB."""
    thresholds = db_to_ratio(np.atleast_1d(t_db))
    if cfg.lambda_b <= 0:
        raise ValueError("GUE coverage needs lambda_b > 0")
    if cfg.eta_g <= 0:
        raise ValueError("GUE coverage needs a non-empty GUE band")
    kernels = [gue_kernel(cfg, "bs")]
    if uav_density > 0:
        kernels.insert(0, uav_kernel(cfg, "bs", uav_density))
    lam = cfg.lambda_b
    noise = cfg.noise_mw
    r_hi = cfg.sigma_g * math.sqrt(2.0 * 40.0)
    grid = channel.los_grid(cfg, LinkKind.GB)
    edges = np.append(grid.breakpoints[grid.breakpoints < r_hi], r_hi)
    total = np.zeros(len(thresholds))
    for state in State:
        m = channel.link_fading_m(cfg, LinkKind.GB, state)
        b = channel.fit_fading_b(m)

        def integrand(r, state=state, m=m, b=b):
            zeta = channel.large_scale_loss(cfg, LinkKind.GB, state, r)
            power = channel.tx_power(cfg.power_g, zeta)
            f = 2.0 * math.pi * lam * r * np.exp(-lam * math.pi * r**2)
            f = f * channel.state_probability(cfg, LinkKind.GB, state, r)
            return f[:, None] * _conditional_coverage(zeta / power, thresholds, m, b, noise, kernels)

        total = total + adaptive_quad(integrand, edges, RTOL, ATOL, label=f"gue coverage ({state.tag})")
    return np.clip(total, 0.0, 1.0), kernels


def gue_coverage(cfg: ScenarioConfig, t_db):
    """GUE uplink coverage probability at SINR threshold(s) ``t_db`` (dB)."""
    cov, _ = gue_coverage_general(cfg, t_db, cfg.uav_density_on_gue_prb)
    return float(cov[0]) if np.ndim(t_db) == 0 else cov


LINKS = ("u2u", "gue_ul")


def link_bandwidth(cfg: ScenarioConfig, link: str) -> float:
    bw = cfg.bandwidth_u if link == "u2u" else cfg.bandwidth_g
    if bw <= 0:
        raise ValueError(f"{link} has no bandwidth with eta_u={cfg.eta_u} in {cfg.sharing_mode.value}")
    return bw


def rate_to_sinr_db(cfg: ScenarioConfig, link: str, rate_bps):
    """SINR threshold (dB) equivalent to a rate threshold; ``-inf`` for rate 0."""
    ratio = np.expm1(np.asarray(rate_bps, dtype=float) / link_bandwidth(cfg, link) * math.log(2.0))
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(ratio)


def coverage(cfg: ScenarioConfig, link: str, t_db):
    if link == "u2u":
        return u2u_coverage(cfg, t_db)
    if link == "gue_ul":
        return gue_coverage(cfg, t_db)
    raise ValueError(f"unknown link {link!r}")


def rate_ccdf(cfg: ScenarioConfig, link: str, rate_bps):
    """``P[rate > rate_bps]`` through the SINR threshold ``2^(rate/B) - 1``."""
    t_db = np.atleast_1d(rate_to_sinr_db(cfg, link, rate_bps))
    out = np.ones(t_db.shape)
    finite = np.isfinite(t_db)
    if finite.any():
        out[finite] = coverage(cfg, link, t_db[finite])
    return float(out[0]) if np.ndim(rate_bps) == 0 else out


@dataclass
class CoverageCurve:
    thresholds: np.ndarray
    probabilities: np.ndarray
    kind: str
    link: str
    mode: str
    ci_halfwidth: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.thresholds = np.asarray(self.thresholds, dtype=float)
        self.probabilities = np.asarray(self.probabilities, dtype=float)


def coverage_curve(cfg: ScenarioConfig, link: str, t_db) -> CoverageCurve:
    t_db = np.asarray(t_db, dtype=float)
    if link == "u2u":
        if cfg.overlay:
            cov, ks = u2u_coverage_general(cfg, t_db, cfg.lambda_u, 0.0)
        else:
            cov, ks = u2u_coverage_general(cfg, t_db, cfg.eta_u * cfg.lambda_u, cfg.lambda_b)
    else:
        cov, ks = gue_coverage_general(cfg, t_db, cfg.uav_density_on_gue_prb)
    meta = {"truncation_radius_m": max((k.truncation_radius for k in ks), default=0.0)}
    return CoverageCurve(t_db, cov, "analytical", link, cfg.sharing_mode.value, metadata=meta)

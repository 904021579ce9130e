import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from aerolay import analytical as an
from aerolay import channel
from aerolay.config import LinkKind, LosModel, ScenarioConfig, SharingMode, State

T_GRID = np.arange(-10.0, 31.0, 5.0)


def quad_exponent(cfg, link, state, density, power, s, r_far=1e14):
    """2 pi lam int p (1 - (1 + s P g / (m tau d^a))^-m) r dr with scipy.

    Cell by cell near the origin, decade by decade in log r further out, and
    the elementary linear-regime tail past ``r_far``.
    """
    sp = cfg.links[link][state]
    dh = channel.height_difference(cfg, link)
    grid = channel.los_grid(cfg, link)

    def c(r):
        return channel.antenna_gain(cfg, link, r) / (sp.ref_path_loss * math.hypot(r, dh) ** sp.path_loss_exponent)

    def f(r):
        p = channel.state_probability(cfg, link, state, r)
        # expm1/log1p: the far tail sits at s P c ~ 1e-20
        return p * -math.expm1(-sp.fading_m * math.log1p(s * power * c(r) / sp.fading_m)) * r

    near = grid.breakpoints[:400]
    total = sum(quad(f, a, b, limit=200, epsrel=1e-12, epsabs=0)[0] for a, b in zip(near[:-1], near[1:]))
    decades = np.geomspace(near[-1], r_far, 60)
    total += sum(
        quad(lambda u: f(math.exp(u)) * math.exp(u), math.log(a), math.log(b), epsrel=1e-12, epsabs=0)[0]
        for a, b in zip(decades[:-1], decades[1:])
    )
    p_end = channel.state_probability(cfg, link, state, r_far)
    total += p_end * s * power * c(r_far) * r_far**2 / (sp.path_loss_exponent - 2)
    return 2 * math.pi * density * total


class TestMeanPower:
    def test_eps_zero(self):
        cfg = ScenarioConfig(epsilon_u=0.0)
        assert an.mean_uav_tx_power(cfg) == pytest.approx(10 ** (-5.8), rel=1e-12)

    def test_eps_zero_capped(self):
        cfg = ScenarioConfig(epsilon_u=0.0, rho_u_dbm=30.0)
        assert an.mean_uav_tx_power(cfg) == pytest.approx(cfg.power_u.cap_mw, rel=1e-12)

    def test_against_quadrature(self, cfg):
        s2 = cfg.sigma_u**2
        mass = -math.expm1(-(cfg.r_max_u2u**2) / (2 * s2))

        def f(r):
            p = channel.los_probability(cfg, LinkKind.UU, r)
            out = 0.0
            for st_, w in ((State.LOS, p), (State.NLOS, 1 - p)):
                out += w * channel.tx_power(cfg.power_u, channel.large_scale_loss(cfg, LinkKind.UU, st_, r))
            return out * r / s2 * math.exp(-r * r / (2 * s2)) / mass

        edges = list(channel.los_grid(cfg, LinkKind.UU).breakpoints[:7]) + [cfg.r_max_u2u]
        ref = sum(quad(f, a, b, epsrel=1e-12, points=[an.power_cap_radius(cfg, State.LOS)] if a < an.power_cap_radius(cfg, State.LOS) < b else None)[0] for a, b in zip(edges[:-1], edges[1:]))
        assert an.mean_uav_tx_power(cfg) == pytest.approx(ref, rel=1e-8)

    def test_remark_limits(self):
        los = LosModel(overrides={LinkKind.UU: 1.0})
        never = ScenarioConfig(los_model=los, r_max_u2u=50.0, epsilon_u=0.1)
        assert an.power_cap_radius(never, State.LOS) > never.r_max_u2u
        always = ScenarioConfig(los_model=los, rho_u_dbm=60.0)
        assert an.mean_uav_tx_power_los(always) == pytest.approx(always.power_u.cap_mw, rel=1e-10)

    @settings(max_examples=15, deadline=None)
    @given(st.floats(0.2, 1.0), st.floats(-70, -40), st.floats(50, 300))
    def test_remark1_equals_general(self, eps, rho, mean_d):
        cfg = ScenarioConfig(
            los_model=LosModel(overrides={LinkKind.UU: 1.0}), epsilon_u=eps, rho_u_dbm=rho, mean_u2u_distance=mean_d, r_max_u2u=5 * mean_d
        )
        assert an.mean_uav_tx_power_los(cfg) == pytest.approx(an.mean_uav_tx_power(cfg), rel=1e-9)

    def test_bad_pair_config(self):
        from aerolay.config import ConfigError

        with pytest.raises(ConfigError):
            ScenarioConfig(r_max_u2u=0.0)


class TestLaplace:
    def test_zero(self, cfg_full):
        for k in (an.uav_kernel(cfg_full, "u2u"), an.gue_kernel(cfg_full, "bs"), an.gue_kernel(cfg_full, "u2u")):
            assert an.laplace_interference(k, 0.0) == 1.0

    def test_empty_population(self):
        k = an.uav_kernel(ScenarioConfig(lambda_u=0.0), "u2u")
        assert an.laplace_interference(k, 1e9) == 1.0

    @pytest.mark.parametrize("link,state,receiver", [(LinkKind.UU, State.LOS, "u2u"), (LinkKind.UU, State.NLOS, "u2u"), (LinkKind.UB, State.LOS, "bs")])
    def test_uav_kernel_vs_scipy(self, cfg_full, link, state, receiver):
        p = an.mean_uav_tx_power(cfg_full)
        k = an.uav_kernel(cfg_full, receiver, states=(state,))
        for s in (1e6, 1e9, 1e12):
            want = quad_exponent(cfg_full, link, state, k.density, p, s)
            assert k.exponent(np.array([s]), tabulated=False)[0] == pytest.approx(want, rel=1e-5)
            assert k.exponent(np.array([s]), tabulated=True)[0] == pytest.approx(want, rel=1e-4)

    def test_nonincreasing(self, cfg_full):
        s = np.logspace(3, 14, 60)
        for k in (an.uav_kernel(cfg_full, "u2u"), an.gue_kernel(cfg_full, "bs")):
            assert np.all(np.diff(an.laplace_interference(k, s)) <= 1e-15)

    def test_gue_floor_equals_nonhomogeneous_density(self):
        # with fixed GUE power, conditioning on R < r is the density lam(1 - exp(-lam pi r^2))
        cfg = ScenarioConfig(epsilon_g=0.0)
        k = an.gue_kernel(cfg, "bs", states=(State.LOS,))
        sp = cfg.links[LinkKind.GB].los
        p = cfg.power_g.rho_mw
        lam = cfg.lambda_b
        s = 1e10

        def f(r):
            c = channel.antenna_gain(cfg, LinkKind.GB, r) / (sp.ref_path_loss * math.hypot(r, 23.5) ** sp.path_loss_exponent)
            dens = lam * -math.expm1(-lam * math.pi * r * r)
            return 2 * math.pi * dens * channel.los_probability(cfg, LinkKind.GB, r) * (1 - (1 + s * p * c / 3) ** -3) * r

        edges = channel.los_grid(cfg, LinkKind.GB).breakpoints[:60]
        want = sum(quad(f, a, b, epsrel=1e-10)[0] for a, b in zip(edges[:-1], edges[1:]))
        assert k.exponent(np.array([s]), tabulated=False)[0] == pytest.approx(want, rel=2e-3)

    def test_divergent_tail(self):
        links = dict(ScenarioConfig().links)
        from aerolay.config import LinkParams, StateParams

        links[LinkKind.UU] = LinkParams(StateParams(34.0, 2.0, 5), StateParams(21.0, 3.2, 1))
        cfg = ScenarioConfig(links=links, los_model=LosModel(overrides={LinkKind.UU: 1.0}))
        with pytest.raises(ValueError, match="uu"):
            an.uav_kernel(cfg, "u2u", power=1.0).exponent(np.array([1e9]))


class TestCoverage:
    def test_limits(self, cfg):
        assert an.u2u_coverage(ScenarioConfig(lambda_u=1e-9, lambda_b=1e-9), -60.0) > 1 - 1e-3
        assert an.gue_coverage(cfg, -60.0) > 1 - 1e-3

    def test_noise_free_isolated(self):
        cfg = ScenarioConfig(sharing_mode="overlay", lambda_u=1e-14, noise_psd_dbm_hz=-300.0)
        # the signal integral only covers LoS pairs, P[LoS] ~ 1 - 3e-6 inside r_max
        assert an.u2u_coverage(cfg, 0.0) == pytest.approx(1.0, abs=1e-5)

    @pytest.mark.parametrize("mode", ["underlay", "overlay"])
    def test_monotone(self, mode):
        cfg = ScenarioConfig(sharing_mode=mode, eta_u=0.3)
        for link in an.LINKS:
            c = an.coverage(cfg, link, T_GRID)
            assert np.all(np.diff(c) <= 1e-12) and np.all((c >= 0) & (c <= 1))

    def test_corollary1(self):
        over = ScenarioConfig(sharing_mode="overlay", eta_u=0.3)
        under = ScenarioConfig(sharing_mode="underlay", eta_u=0.3)
        a = an.u2u_coverage(over, T_GRID)
        b, _ = an.u2u_coverage_general(under, T_GRID, under.lambda_u, 0.0)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=0)

    def test_corollary2_and_eta_zero(self):
        over = ScenarioConfig(sharing_mode="overlay", eta_u=0.0)
        under = ScenarioConfig(sharing_mode="underlay", eta_u=0.0)
        np.testing.assert_allclose(an.gue_coverage(under, T_GRID), an.gue_coverage(over, T_GRID), rtol=1e-12, atol=0)
        u = ScenarioConfig(eta_u=0.4)
        np.testing.assert_allclose(an.gue_coverage_general(u, T_GRID, 0.0)[0], an.gue_coverage(u.replace(lambda_u=0.0), T_GRID), rtol=1e-12, atol=0)

    def test_overlay_gue_ignores_uavs(self):
        a = an.gue_coverage(ScenarioConfig(sharing_mode="overlay", lambda_u=1e-6), T_GRID)
        b = an.gue_coverage(ScenarioConfig(sharing_mode="overlay", lambda_u=5e-6, epsilon_u=0.8), T_GRID)
        assert np.array_equal(a, b)

    def test_density_monotone(self):
        base = ScenarioConfig(eta_u=0.5)
        lam_b = [an.u2u_coverage(base.replace(lambda_b=x), 0.0) for x in (2e-6, 5e-6, 1e-5)]
        lam_u = [an.u2u_coverage(base.replace(lambda_u=x), 0.0) for x in (1e-6, 3e-6, 1e-5)]
        assert lam_b[0] >= lam_b[1] >= lam_b[2]
        assert lam_u[0] >= lam_u[1] >= lam_u[2]

    def test_eta_zero_u2u_rejected(self):
        with pytest.raises(ValueError):
            an.u2u_coverage(ScenarioConfig(eta_u=0.0), 0.0)

    def test_curve_metadata(self, cfg):
        c = an.coverage_curve(cfg, "u2u", T_GRID)
        assert c.kind == "analytical" and c.metadata["truncation_radius_m"] > 1e4


class TestRate:
    def test_zero_rate(self, cfg):
        assert an.rate_ccdf(cfg, "u2u", 0.0) == 1.0

    def test_rate_equals_bandwidth(self, cfg):
        b = an.link_bandwidth(cfg, "gue_ul")
        assert an.rate_ccdf(cfg, "gue_ul", b) == pytest.approx(an.gue_coverage(cfg, 0.0), rel=1e-12)

    def test_mapping(self, cfg):
        r = np.array([1e4, 1e5, 1e6])
        b = cfg.bandwidth_u
        want = an.u2u_coverage(cfg, 10 * np.log10(2 ** (r / b) - 1))
        np.testing.assert_allclose(an.rate_ccdf(cfg, "u2u", r), want, rtol=1e-12)

    def test_no_bandwidth(self):
        with pytest.raises(ValueError):
            an.rate_ccdf(ScenarioConfig(sharing_mode="overlay", eta_u=1.0), "gue_ul", 1e5)

import math

import numpy as np
import pytest

from helpers import (
    accel_cartesian,
    accel_from_potential,
    propagate_cartesian,
    random_orbit,
)
from swarmnav.constants import DEG, J2, MU_EARTH, R_EARTH
from swarmnav.dynamics import (
    KEPLER_ONLY,
    ConfigError,
    ForceModelConfig,
    apply_impulse,
    gve_rates,
    j2_accel_eci,
    j2_secular_rates,
    propagate_mean_arrays,
    propagate_numeric,
    propagate_roe_mean_arrays,
)
from swarmnav.orbits import (
    AbsoluteOrbit,
    apply_roe_arrays,
    cartesian_to_oe,
    oe_to_cartesian,
    roe_from_pair_arrays,
    wrap_angle,
)
from test_orbits import ROE_SV2_IT_M, SV4_IT


def test_j2_accel_matches_potential_gradient():
    rng = np.random.default_rng(0)
    for _ in range(20):
        pos, _ = oe_to_cartesian(random_orbit(rng))
        oracle = accel_from_potential(pos)
        assert np.allclose(j2_accel_eci(pos), oracle, rtol=0, atol=1e-10)
        total = j2_accel_eci(pos) - MU_EARTH / np.linalg.norm(pos) ** 3 * pos
        assert np.allclose(total, accel_cartesian(pos), rtol=1e-12)


class TestGveRates:
    def test_unperturbed(self):
        rates = gve_rates(SV4_IT.as_array(), np.zeros(3))
        assert np.allclose(rates[:5], 0.0)
        assert rates[5] == pytest.approx(SV4_IT.n, rel=1e-14)

    def test_along_track_sma_rate(self):
        orb = AbsoluteOrbit(7.0e6, 0.0, 0.0, 1.2, 0.4, 0.9)
        dy = 1e-4
        rates = gve_rates(orb.as_array(), np.array([0.0, dy, 0.0]))
        assert rates[0] == pytest.approx(2.0 * dy / orb.n, rel=1e-12)

    def test_against_cartesian_finite_differences(self):
        # osculating-element rates from central differences through a
        # perturbed Cartesian trajectory (J2 + constant-RTN acceleration)
        rng = np.random.default_rng(4)
        delta = 0.125
        for _ in range(12):
            state = random_orbit(rng, e_max=0.05)
            accel = rng.uniform(-1.0, 1.0, 3) * 1e-3
            pos, vel = oe_to_cartesian(state)
            pp, vp = propagate_cartesian(pos, vel, delta, delta / 8, True, accel)
            pm, vm = propagate_cartesian(pos, vel, -delta, delta / 8, True, accel)
            el_plus = cartesian_to_oe(pp, vp)
            el_minus = cartesian_to_oe(pm, vm)
            fd = (el_plus - el_minus) / (2.0 * delta)
            fd[4] = wrap_angle(el_plus[4] - el_minus[4]) / (2.0 * delta)
            fd[5] = wrap_angle(el_plus[5] - el_minus[5]) / (2.0 * delta)
            from swarmnav.dynamics import gve_matrix, perturb_accel_rtn

            total_rtn = accel + perturb_accel_rtn(state, ForceModelConfig(step=10.0))
            rates = gve_rates(state, total_rtn)
            # relative to the per-component sensitivity scale so rates that
            # happen to cross zero do not demand sub-roundoff agreement
            char = np.abs(gve_matrix(state)) @ np.abs(total_rtn)
            assert np.all(np.abs(rates - fd) < 1e-6 * (np.abs(fd) + char))


class TestPropagateNumeric:
    def test_identity(self):
        s = SV4_IT.as_array()
        out = propagate_numeric(s, 100.0, 100.0, ForceModelConfig())
        assert np.array_equal(out, s)

    def test_step_validation(self):
        with pytest.raises(ConfigError):
            ForceModelConfig(step=0.0)

    def test_kepler_conservation_10_orbits(self):
        s = SV4_IT.as_array()
        t1 = 10.0 * SV4_IT.period
        out = propagate_numeric(s, 0.0, t1, KEPLER_ONLY)
        assert np.allclose(out[:5], s[:5], rtol=1e-9, atol=1e-12)
        assert out[5] == pytest.approx(s[5] + SV4_IT.n * t1, rel=1e-9)

    def test_polar_j2_has_no_node_drift(self):
        orb = AbsoluteOrbit(6.945e6, 0.001, 0.0, math.pi / 2, 0.3, 0.0)
        out = propagate_numeric(orb.as_array(), 0.0, orb.period, ForceModelConfig(step=10.0))
        assert abs(out[4] - 0.3) < 1e-10

    def test_j2_node_drift_matches_secular_formula(self):
        orb = SV4_IT
        n_orbits = 3
        out = propagate_numeric(
            orb.as_array(), 0.0, n_orbits * orb.period, ForceModelConfig(step=10.0)
        )
        p = orb.a * (1 - orb.e**2)
        analytic = -1.5 * J2 * orb.n * (R_EARTH / p) ** 2 * math.cos(orb.i)
        drift = (out[4] - orb.raan) / (n_orbits * orb.period)
        assert drift == pytest.approx(analytic, rel=0.02)

    def test_rk4_order(self):
        # halving the step scales one-orbit error by ~2^4
        orb = SV4_IT
        t1 = orb.period
        ref = propagate_numeric(orb.as_array(), 0.0, t1, ForceModelConfig(step=3.75))
        scale = np.array([orb.a, 1, 1, 1, 1, 1])

        def err(step):
            out = propagate_numeric(orb.as_array(), 0.0, t1, ForceModelConfig(step=step))
            return np.linalg.norm((out - ref) / scale)

        ratio = err(60.0) / err(30.0)
        assert 12.0 <= ratio <= 20.0

    def test_segmented_equals_direct_on_step_multiples(self):
        cfg = ForceModelConfig(step=10.0)
        s = SV4_IT.as_array()
        direct = propagate_numeric(s, 0.0, 600.0, cfg)
        mid = propagate_numeric(s, 0.0, 250.0, cfg)
        segmented = propagate_numeric(mid, 250.0, 600.0, cfg)
        assert np.array_equal(direct, segmented)

    def test_drag_shrinks_orbit(self):
        cfg = ForceModelConfig(enable_j2=False, enable_drag=True, step=10.0)
        out = propagate_numeric(SV4_IT.as_array(), 0.0, SV4_IT.period, cfg)
        assert out[0] < SV4_IT.a


class TestMeanModel:
    def test_identity(self):
        s = SV4_IT.as_array()
        assert np.allclose(propagate_mean_arrays(s, 0.0), s)

    def test_zero_roe_stays_zero(self):
        obs = SV4_IT.as_array()
        _, roe = propagate_roe_mean_arrays(obs, np.zeros(6), 5 * SV4_IT.period)
        assert np.allclose(roe, 0.0, atol=1e-15)

    def test_sun_synchronous_anchor(self):
        # independent astronomy anchor: an 800 km circular orbit is
        # sun-synchronous (node rate = 2*pi per tropical year) near i=98.6 deg
        a = R_EARTH + 800.0e3
        target_rate = 2.0 * math.pi / (365.2422 * 86400.0)
        n = math.sqrt(MU_EARTH / a**3)
        cos_i = -target_rate / (1.5 * J2 * n * (R_EARTH / a) ** 2)
        i_ss = math.degrees(math.acos(cos_i))
        assert i_ss == pytest.approx(98.6, abs=0.1)
        raan_dot, _, _ = j2_secular_rates(np.array([a, 0, 0, math.radians(i_ss), 0, 0]))
        assert raan_dot == pytest.approx(target_rate, rel=1e-6)

    def test_mean_matches_numeric_node_drift(self):
        orb = SV4_IT
        t1 = 5 * orb.period
        numeric = propagate_numeric(orb.as_array(), 0.0, t1, ForceModelConfig(step=10.0))
        mean = propagate_mean_arrays(orb.as_array(), t1)
        assert mean[4] - orb.raan == pytest.approx(numeric[4] - orb.raan, rel=0.02)

    def test_dlambda_keplerian_drift_vs_numeric(self):
        # a*da = 21 m => a*ddlambda ~ -1.5*(2*pi)*21 m per orbit; compare the
        # closed-form model against two Kepler-only numeric propagations
        obs = SV4_IT.as_array()
        roe = ROE_SV2_IT_M / SV4_IT.a
        tgt = apply_roe_arrays(obs, roe)
        t1 = SV4_IT.period
        obs_n = propagate_numeric(obs, 0.0, t1, KEPLER_ONLY)
        tgt_n = propagate_numeric(tgt, 0.0, t1, KEPLER_ONLY)
        droe_numeric = roe_from_pair_arrays(obs_n, tgt_n) - roe
        _, roe_mean = propagate_roe_mean_arrays(obs, roe, t1, include_j2=False)
        drift_numeric = droe_numeric[1] * SV4_IT.a
        drift_mean = (roe_mean[1] - roe[1]) * SV4_IT.a
        assert drift_numeric == pytest.approx(-1.5 * 2 * math.pi * 21.0, rel=0.05)
        assert drift_mean == pytest.approx(drift_numeric, rel=0.05)

    def test_roe_drift_two_orbits_all_table_rows(self):
        from test_orbits import ROE_SV2_PSE_M, ROE_SV3_IT_M, ROE_SV3_PSE_M, SV4_PSE

        for obs_orbit, roe_m in [
            (SV4_IT, ROE_SV2_IT_M),
            (SV4_IT, ROE_SV3_IT_M),
            (SV4_PSE, ROE_SV2_PSE_M),
            (SV4_PSE, ROE_SV3_PSE_M),
        ]:
            obs = obs_orbit.as_array()
            roe = roe_m / obs_orbit.a
            tgt = apply_roe_arrays(obs, roe)
            t1 = 2.0 * obs_orbit.period
            obs_n = propagate_numeric(obs, 0.0, t1, KEPLER_ONLY)
            tgt_n = propagate_numeric(tgt, 0.0, t1, KEPLER_ONLY)
            droe_numeric = (roe_from_pair_arrays(obs_n, tgt_n) - roe) * obs_orbit.a
            _, roe_mean = propagate_roe_mean_arrays(obs, roe, t1, include_j2=False)
            droe_mean = (roe_mean - roe) * obs_orbit.a
            drift = np.linalg.norm(droe_numeric)
            assert np.linalg.norm(droe_mean - droe_numeric) < 0.05 * drift


def test_impulse_matches_cartesian_kick():
    rng = np.random.default_rng(9)
    state = random_orbit(rng, e_max=0.01)
    dv_rtn = np.array([0.0, 0.01, 0.005])
    kicked = apply_impulse(state, dv_rtn)
    pos, vel = oe_to_cartesian(state)
    from helpers import rtn_basis

    vel2 = vel + rtn_basis(pos, vel).T @ dv_rtn
    oracle = cartesian_to_oe(pos, vel2)
    scale = np.array([state[0], 1, 1, 1, 1, 1])
    assert np.max(np.abs(kicked - oracle) / scale) < 1e-7

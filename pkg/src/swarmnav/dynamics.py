"""Orbit dynamics: perturbed GVE integration and the fast J2-secular model.

Two propagation routes are provided.  :func:`propagate_numeric` integrates
the Gauss variational equations with RK4 under a configurable force model
(J2, exponential-atmosphere cannonball drag) and serves as truth and as the
filter's observer propagator.  :func:`propagate_mean_j2` /
:func:`propagate_roe_j2` are the closed-form secular models used inside
tracking and batch estimation where speed matters.

Array cores accept stacked states ``(..., 6)`` and leave raan/u unwrapped
so that integration and sigma-point averaging stay continuous; wrap at the
type boundary only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from swarmnav.constants import J2, MU_EARTH, R_EARTH
from swarmnav.orbits import (
    AbsoluteOrbit,
    RelativeOrbit,
    _orbit_geometry,
    apply_roe_arrays,
    oe_to_cartesian,
    roe_from_pair_arrays,
    rtn_matrix,
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExponentialAtmosphere:
    """rho(h) = rho0 * exp(-(h - h0) / scale_height), h above R_EARTH [m]."""

    rho0: float = 1.0e-13  # kg/m^3 near 570 km
    h0: float = 570.0e3
    scale_height: float = 65.0e3

    def density(self, h: np.ndarray) -> np.ndarray:
        return self.rho0 * np.exp(-(np.asarray(h) - self.h0) / self.scale_height)


@dataclass(frozen=True)
class ForceModelConfig:
    enable_j2: bool = True
    enable_drag: bool = False
    # combined cannonball parameter 0.5 * Cd * A / m [m^2/kg]
    drag_coeff_area_mass: float = 0.015
    atmosphere: ExponentialAtmosphere = field(default_factory=ExponentialAtmosphere)
    step: float = 30.0

    def __post_init__(self):
        if not 1.0 <= self.step <= 120.0:
            raise ConfigError(f"RK4 step must lie in [1, 120] s, got {self.step}")
        if self.drag_coeff_area_mass < 0.0 or self.atmosphere.rho0 < 0.0:
            raise ConfigError("drag parameters must be nonnegative")


TRUTH_FORCES = ForceModelConfig(step=10.0)
ESTIMATOR_FORCES = ForceModelConfig(step=30.0)
KEPLER_ONLY = ForceModelConfig(enable_j2=False, step=10.0)


def j2_accel_eci(pos: np.ndarray) -> np.ndarray:
    """J2 perturbing acceleration in the inertial frame for stacked positions."""
    p = np.asarray(pos, dtype=float)
    r2 = np.sum(p * p, axis=-1)
    r = np.sqrt(r2)
    z2_r2 = (p[..., 2] ** 2) / r2
    k = 1.5 * J2 * MU_EARTH * R_EARTH**2 / (r2 * r2 * r)
    ax = k * p[..., 0] * (5.0 * z2_r2 - 1.0)
    ay = k * p[..., 1] * (5.0 * z2_r2 - 1.0)
    az = k * p[..., 2] * (5.0 * z2_r2 - 3.0)
    return np.stack([ax, ay, az], axis=-1)


def perturb_accel_rtn(state: np.ndarray, cfg: ForceModelConfig) -> np.ndarray:
    """Perturbing acceleration expressed in the observer RTN frame [m/s^2]."""
    pos, vel = oe_to_cartesian(state)
    acc = np.zeros_like(pos)
    if cfg.enable_j2:
        acc = acc + j2_accel_eci(pos)
    if cfg.enable_drag:
        h = np.linalg.norm(pos, axis=-1) - R_EARTH
        rho = cfg.atmosphere.density(h)
        vmag = np.linalg.norm(vel, axis=-1, keepdims=True)
        acc = acc - (cfg.drag_coeff_area_mass * rho)[..., None] * vmag * vel
    rot = rtn_matrix(pos, vel)
    return np.einsum("...ij,...j->...i", rot, acc)


def gve_matrix(state: np.ndarray) -> np.ndarray:
    """GVE matrix G(alpha) mapping RTN accelerations to element rates, (...,6,3)."""
    s = np.asarray(state, dtype=float)
    a = s[..., 0]
    ex, ey, inc = s[..., 1], s[..., 2], s[..., 3]
    e, _, f, r, p, u_t = _orbit_geometry(s)
    if np.any(e >= 1.0 - 1e-9):
        raise ValueError("GVE requires an elliptic orbit (e < 1)")
    h = np.sqrt(MU_EARTH * p)
    eta = np.sqrt(1.0 - e * e)
    sf, cf = np.sin(f), np.cos(f)
    su, cu = np.sin(u_t), np.cos(u_t)
    cot_i = np.cos(inc) / np.sin(inc)

    z = np.zeros_like(a)
    g = np.empty(s.shape[:-1] + (6, 3))
    g[..., 0, 0] = 2.0 * a * a * e * sf / h
    g[..., 0, 1] = 2.0 * a * a * p / (r * h)
    g[..., 0, 2] = z
    g[..., 1, 0] = p * su / h
    g[..., 1, 1] = ((p + r) * cu + r * ex) / h
    g[..., 1, 2] = ey * r * su * cot_i / h
    g[..., 2, 0] = -p * cu / h
    g[..., 2, 1] = ((p + r) * su + r * ey) / h
    g[..., 2, 2] = -ex * r * su * cot_i / h
    g[..., 3, 0] = z
    g[..., 3, 1] = z
    g[..., 3, 2] = r * cu / h
    g[..., 4, 0] = z
    g[..., 4, 1] = z
    g[..., 4, 2] = r * su / (h * np.sin(inc))
    g[..., 5, 0] = -(e / (1.0 + eta)) * p * cf / h - 2.0 * r * eta / h
    g[..., 5, 1] = (e / (1.0 + eta)) * (p + r) * sf / h
    g[..., 5, 2] = -r * su * cot_i / h
    return g


def gve_rates(state: np.ndarray, accel_rtn: np.ndarray) -> np.ndarray:
    """Element rates d(alpha)/dt including the Keplerian mean-motion term."""
    s = np.asarray(state, dtype=float)
    d = np.asarray(accel_rtn, dtype=float)
    if np.any(np.linalg.norm(np.atleast_2d(d), axis=-1) >= 1.0):
        raise ValueError("perturbing acceleration magnitude must be < 1 m/s^2")
    rates = np.einsum("...ij,...j->...i", gve_matrix(s), d)
    rates[..., 5] += np.sqrt(MU_EARTH / s[..., 0] ** 3)
    return rates


def _deriv(state: np.ndarray, cfg: ForceModelConfig) -> np.ndarray:
    if cfg.enable_j2 or cfg.enable_drag:
        d = perturb_accel_rtn(state, cfg)
    else:
        d = np.zeros(state.shape[:-1] + (3,))
    return gve_rates(state, d)


def propagate_numeric(
    state: np.ndarray, t_from: float, t_to: float, cfg: ForceModelConfig
) -> np.ndarray:
    """Fixed-step RK4 integration of the GVE over [t_from, t_to].

    Accepts stacked states; raan/u returned unwrapped.  Deterministic: the
    step sequence depends only on (t_to - t_from) and cfg.step.
    """
    if t_to < t_from:
        raise ValueError("propagation requires t_to >= t_from")
    s = np.array(state, dtype=float, copy=True)
    remaining = t_to - t_from
    n_full, partial = divmod(remaining, cfg.step)
    steps = [cfg.step] * int(round(n_full))
    if partial > 1e-12:
        steps.append(partial)
    for hstep in steps:
        k1 = _deriv(s, cfg)
        k2 = _deriv(s + 0.5 * hstep * k1, cfg)
        k3 = _deriv(s + 0.5 * hstep * k2, cfg)
        k4 = _deriv(s + hstep * k3, cfg)
        s = s + (hstep / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return s


def propagate_orbit(
    orbit: AbsoluteOrbit, t_from: float, t_to: float, cfg: ForceModelConfig
) -> AbsoluteOrbit:
    return AbsoluteOrbit.from_array(propagate_numeric(orbit.as_array(), t_from, t_to, cfg))


# ---------------------------------------------------------------------------
# Analytic J2-secular mean-element model
# ---------------------------------------------------------------------------


def j2_secular_rates(state: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Secular (raan_dot, u_dot) under J2 for stacked mean element states.

    u_dot includes the Keplerian mean motion.
    """
    s = np.asarray(state, dtype=float)
    a = s[..., 0]
    e2 = s[..., 1] ** 2 + s[..., 2] ** 2
    inc = s[..., 3]
    eta = np.sqrt(1.0 - e2)
    p = a * (1.0 - e2)
    n = np.sqrt(MU_EARTH / a**3)
    k = 0.75 * J2 * n * (R_EARTH / p) ** 2
    ci = np.cos(inc)
    raan_dot = -2.0 * k * ci
    argp_dot = k * (5.0 * ci * ci - 1.0)
    m_dot = n + k * eta * (3.0 * ci * ci - 1.0)
    return raan_dot, argp_dot + m_dot, argp_dot


def propagate_mean_arrays(state: np.ndarray, dt, include_j2: bool = True) -> np.ndarray:
    """Closed-form mean-element propagation (Kepler + optional J2 secular).

    ``dt`` may be scalar or broadcastable to the stacked state shape.
    raan/u are returned unwrapped.
    """
    s = np.array(state, dtype=float, copy=True)
    dt = np.asarray(dt, dtype=float)
    if include_j2:
        raan_dot, u_dot, argp_dot = j2_secular_rates(s)
    else:
        raan_dot = np.zeros(s.shape[:-1])
        argp_dot = np.zeros(s.shape[:-1])
        u_dot = np.sqrt(MU_EARTH / s[..., 0] ** 3)
    dw = argp_dot * dt
    cw, sw = np.cos(dw), np.sin(dw)
    ex = s[..., 1] * cw - s[..., 2] * sw
    ey = s[..., 1] * sw + s[..., 2] * cw
    s[..., 1] = ex
    s[..., 2] = ey
    s[..., 4] = s[..., 4] + raan_dot * dt
    s[..., 5] = s[..., 5] + u_dot * dt
    return s


def propagate_mean_j2(orbit: AbsoluteOrbit, dt: float, include_j2: bool = True) -> AbsoluteOrbit:
    return AbsoluteOrbit.from_array(propagate_mean_arrays(orbit.as_array(), dt, include_j2))


def propagate_roe_mean_arrays(
    observer: np.ndarray, roe: np.ndarray, dt, include_j2: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """Propagate (observer, roe) jointly under the mean model.

    Returns the propagated observer elements and ROE.  Differential J2
    effects (delta-lambda drift, relative eccentricity-vector rotation,
    diy drift from delta-i) fall out of propagating both absolute states.
    """
    obs = np.asarray(observer, dtype=float)
    target = apply_roe_arrays(obs, np.asarray(roe, dtype=float))
    obs_t = propagate_mean_arrays(obs, dt, include_j2)
    tgt_t = propagate_mean_arrays(target, dt, include_j2)
    return obs_t, roe_from_pair_arrays(obs_t, tgt_t)


def propagate_roe_j2(
    observer: AbsoluteOrbit, roe: RelativeOrbit, dt: float, include_j2: bool = True
) -> RelativeOrbit:
    _, roe_t = propagate_roe_mean_arrays(observer.as_array(), roe.as_array(), dt, include_j2)
    return RelativeOrbit.from_array(roe_t)


def apply_impulse(state: np.ndarray, dv_rtn: np.ndarray) -> np.ndarray:
    """Instantaneous element jump from an RTN delta-v [m/s]."""
    return np.asarray(state, dtype=float) + gve_matrix(state) @ np.asarray(dv_rtn, dtype=float)

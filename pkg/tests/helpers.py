"""Independent oracles shared by the test suite.

Everything here deliberately avoids the element-space code paths under
test: propagation is Cartesian RK4, accelerations are re-derived from the
potential, and relative geometry is built by differencing two full orbits.
"""

from __future__ import annotations

import numpy as np

from swarmnav.constants import J2, MU_EARTH, R_EARTH

_ARCSEC = np.pi / (180.0 * 3600.0)


def j2_potential(pos: np.ndarray) -> float:
    """J2 zonal term of the geopotential (per unit mass)."""
    x, y, z = pos
    r = np.sqrt(x * x + y * y + z * z)
    return (MU_EARTH * J2 * R_EARTH**2 / (2.0 * r**3)) * (3.0 * z * z / (r * r) - 1.0)


def accel_from_potential(pos: np.ndarray, h: float = 10.0) -> np.ndarray:
    """J2 acceleration as the negative finite-difference potential gradient."""
    acc = np.zeros(3)
    for k in range(3):
        dp = np.zeros(3)
        dp[k] = h
        acc[k] = -(j2_potential(pos + dp) - j2_potential(pos - dp)) / (2.0 * h)
    return acc


def accel_cartesian(pos: np.ndarray, with_j2: bool = True) -> np.ndarray:
    """Analytic point-mass + J2 acceleration (independent re-derivation)."""
    x, y, z = pos
    r2 = x * x + y * y + z * z
    r = np.sqrt(r2)
    acc = -MU_EARTH / (r2 * r) * pos
    if with_j2:
        k = 1.5 * J2 * MU_EARTH * R_EARTH**2 / (r2 * r2 * r)
        acc = acc + k * np.array(
            [x * (5.0 * z * z / r2 - 1.0), y * (5.0 * z * z / r2 - 1.0), z * (5.0 * z * z / r2 - 3.0)]
        )
    return acc


def rtn_basis(pos: np.ndarray, vel: np.ndarray) -> np.ndarray:
    """Rows x/y/z of the inertial->RTN rotation, built from cross products."""
    x_hat = pos / np.linalg.norm(pos)
    h = np.cross(pos, vel)
    z_hat = h / np.linalg.norm(h)
    y_hat = np.cross(z_hat, x_hat)
    return np.stack([x_hat, y_hat, z_hat])


def propagate_cartesian(
    pos: np.ndarray,
    vel: np.ndarray,
    duration: float,
    step: float = 1.0,
    with_j2: bool = True,
    extra_accel_rtn=None,
) -> tuple[np.ndarray, np.ndarray]:
    """RK4 two-body (+J2, + optional constant-RTN accel) Cartesian propagation."""

    def deriv(state):
        p, v = state[:3], state[3:]
        acc = accel_cartesian(p, with_j2)
        if extra_accel_rtn is not None:
            acc = acc + rtn_basis(p, v).T @ np.asarray(extra_accel_rtn)
        return np.concatenate([v, acc])

    s = np.concatenate([np.asarray(pos, float), np.asarray(vel, float)])
    sign = 1.0 if duration >= 0 else -1.0
    n_full, rem = divmod(abs(duration), step)
    steps = [sign * step] * int(round(n_full)) + ([sign * rem] if rem > 1e-12 else [])
    for hh in steps:
        k1 = deriv(s)
        k2 = deriv(s + 0.5 * hh * k1)
        k3 = deriv(s + 0.5 * hh * k2)
        k4 = deriv(s + hh * k3)
        s = s + (hh / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return s[:3], s[3:]


def relative_rtn_truth(obs_state: np.ndarray, tgt_state: np.ndarray) -> np.ndarray:
    """Rectilinear RTN offset of target w.r.t. observer from element states."""
    from swarmnav.orbits import oe_to_cartesian

    po, vo = oe_to_cartesian(obs_state)
    pt, _ = oe_to_cartesian(tgt_state)
    return rtn_basis(po, vo) @ (pt - po)


def random_orbit(rng: np.random.Generator, e_max: float = 0.05) -> np.ndarray:
    """Random LEO-ish quasi-nonsingular element state."""
    a = rng.uniform(6.7e6, 7.4e6)
    e = rng.uniform(0.0, e_max)
    w = rng.uniform(-np.pi, np.pi)
    return np.array(
        [
            a,
            e * np.cos(w),
            e * np.sin(w),
            rng.uniform(0.3, np.pi - 0.3),
            rng.uniform(-np.pi, np.pi),
            rng.uniform(-np.pi, np.pi),
        ]
    )


def tangent_noise(rng: np.random.Generator, vec: np.ndarray, sigma: float) -> np.ndarray:
    """Perturb a unit vector by ~N(0, sigma) radians in its tangent plane."""
    v = vec / np.linalg.norm(vec)
    ref = np.array([1.0, 0.0, 0.0]) if abs(v[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    t1 = np.cross(v, ref)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(v, t1)
    out = v + sigma * rng.standard_normal() * t1 + sigma * rng.standard_normal() * t2
    return out / np.linalg.norm(out)


def brute_force_dbscan(points: np.ndarray, eps: float, min_pts: int) -> list[set]:
    """Set-semantics DBSCAN oracle: clusters via closure over core points."""
    pts = np.asarray(points, float)
    n = len(pts)
    d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
    neigh = [set(np.nonzero(d2[i] <= eps * eps)[0].tolist()) for i in range(n)]
    core = [i for i in range(n) if len(neigh[i]) >= min_pts]
    # connected components of the core-core reachability graph
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        parent[find(i)] = find(j)

    core_set = set(core)
    for i in core:
        for j in neigh[i]:
            if j in core_set:
                union(i, j)
    clusters: dict[int, set] = {}
    for i in core:
        clusters.setdefault(find(i), set()).add(i)
    # border points join the cluster of any core point that reaches them
    for i in range(n):
        if i in core_set:
            continue
        for j in sorted(core_set & neigh[i]):
            clusters[find(j)].add(i)
            break
    return list(clusters.values())

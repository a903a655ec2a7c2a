"""Orbit-element state types, rotating frames, and relative-orbit mappings.

Absolute states use the quasi-nonsingular element set
``[a, ex, ey, i, raan, u]`` with ``ex = e cos(argp)``, ``ey = e sin(argp)``
and ``u = argp + M`` (mean argument of latitude).  Relative states are the
dimensionless quasi-nonsingular relative orbit elements (ROE)
``[da, dlambda, dex, dey, dix, diy]`` of a target with respect to an
observer.  All angles are wrapped to (-pi, pi] at type boundaries; array
internals keep angles unwrapped so integrators stay continuous.

Array-layout convention: stacked element states are ``(..., 6)`` float
arrays in the order above.  Frame rotation matrices map inertial vectors
into the named frame (``v_frame = m @ v_inertial``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from swarmnav.constants import MU_EARTH

# Seconds past the simulation reference epoch (continuous, no leap seconds).
Epoch = float


class FrameError(ValueError):
    """Raised when a rotating frame cannot be constructed from the inputs."""


def wrap_angle(x):
    """Wrap angle(s) to (-pi, pi]."""
    w = -((-np.asarray(x) + np.pi) % (2.0 * np.pi) - np.pi)
    return w if isinstance(x, np.ndarray) else float(w)


def wrap_state(state: np.ndarray) -> np.ndarray:
    """Wrap the angular components (i kept in (0, pi), raan/u wrapped)."""
    out = np.array(state, dtype=float, copy=True)
    out[..., 4] = wrap_angle(out[..., 4])
    out[..., 5] = wrap_angle(out[..., 5])
    return out


@dataclass(frozen=True)
class AbsoluteOrbit:
    """Quasi-nonsingular absolute orbit elements of one spacecraft.

    a [m], ex/ey [-], i [rad] in (0, pi), raan/u [rad] in (-pi, pi].
    """

    a: float
    ex: float
    ey: float
    i: float
    raan: float
    u: float

    def __post_init__(self):
        if not np.isfinite(self.as_array()).all():
            raise ValueError("non-finite orbit elements")
        if self.a <= 0.0:
            raise ValueError(f"semimajor axis must be positive, got {self.a}")
        if self.ex**2 + self.ey**2 >= 1.0:
            raise ValueError("eccentricity vector magnitude must be < 1")
        if not 0.0 < self.i < math.pi:
            raise ValueError(f"inclination must lie in (0, pi), got {self.i}")
        object.__setattr__(self, "raan", wrap_angle(self.raan))
        object.__setattr__(self, "u", wrap_angle(self.u))

    @property
    def e(self) -> float:
        return math.hypot(self.ex, self.ey)

    @property
    def argp(self) -> float:
        return math.atan2(self.ey, self.ex) if self.e > 0.0 else 0.0

    @property
    def mean_anomaly(self) -> float:
        return wrap_angle(self.u - self.argp)

    @property
    def n(self) -> float:
        return math.sqrt(MU_EARTH / self.a**3)

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.n

    @property
    def true_anomaly(self) -> float:
        ecc = solve_kepler(np.array(self.mean_anomaly), np.array(self.e))
        return float(true_from_eccentric(ecc, np.array(self.e)))

    @property
    def radius(self) -> float:
        ecc = solve_kepler(np.array(self.mean_anomaly), np.array(self.e))
        return float(self.a * (1.0 - self.e * math.cos(ecc)))

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.ex, self.ey, self.i, self.raan, self.u])

    @classmethod
    def from_array(cls, arr) -> "AbsoluteOrbit":
        a, ex, ey, i, raan, u = np.asarray(arr, dtype=float)
        return cls(a, ex, ey, i, raan, u)

    def cartesian(self) -> tuple[np.ndarray, np.ndarray]:
        pos, vel = oe_to_cartesian(self.as_array())
        return pos, vel


@dataclass(frozen=True)
class RelativeOrbit:
    """Dimensionless quasi-nonsingular ROE of a target w.r.t. an observer."""

    da: float
    dlambda: float
    dex: float
    dey: float
    dix: float
    diy: float

    def __post_init__(self):
        if not np.isfinite(self.as_array()).all():
            raise ValueError("non-finite ROE")
        if abs(self.da) >= 0.1:
            raise ValueError(f"|da| must be < 0.1 at simulation scale, got {self.da}")

    @property
    def de_mag(self) -> float:
        return math.hypot(self.dex, self.dey)

    @property
    def de_phase(self) -> float:
        return math.atan2(self.dey, self.dex)

    @property
    def di_mag(self) -> float:
        return math.hypot(self.dix, self.diy)

    @property
    def di_phase(self) -> float:
        return math.atan2(self.diy, self.dix)

    def as_array(self) -> np.ndarray:
        return np.array([self.da, self.dlambda, self.dex, self.dey, self.dix, self.diy])

    def scaled_by(self, a: float) -> np.ndarray:
        """ROE in meters, ``a * delta`` convention used for reporting."""
        return a * self.as_array()

    @classmethod
    def from_array(cls, arr) -> "RelativeOrbit":
        return cls(*np.asarray(arr, dtype=float))

    @classmethod
    def from_meters(cls, arr_m, a: float) -> "RelativeOrbit":
        return cls.from_array(np.asarray(arr_m, dtype=float) / a)


@dataclass(frozen=True)
class FrameRotation:
    """Proper orthonormal rotation taking src-frame vectors to dst-frame."""

    matrix: np.ndarray
    src: str = "I"
    dst: str = "R"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (3, 3):
            raise FrameError(f"rotation matrix must be 3x3, got {m.shape}")
        if not np.allclose(m.T @ m, np.eye(3), atol=1e-12):
            raise FrameError("rotation matrix is not orthonormal to 1e-12")
        if np.linalg.det(m) < 0.0:
            raise FrameError("rotation matrix must be proper (det = +1)")
        object.__setattr__(self, "matrix", m)

    def apply(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v) @ self.matrix.T

    def inverse(self) -> "FrameRotation":
        return FrameRotation(self.matrix.T, src=self.dst, dst=self.src)

    def compose(self, other: "FrameRotation") -> "FrameRotation":
        """Rotation src=other.src -> dst=self.dst (self applied after other)."""
        return FrameRotation(self.matrix @ other.matrix, src=other.src, dst=self.dst)


@dataclass(frozen=True)
class CurvilinearState:
    """Curvilinear relative position: radial offset and angular separations."""

    dr: float
    theta: float
    phi: float

    def __post_init__(self):
        if not (abs(self.theta) < math.pi / 2 and abs(self.phi) < math.pi / 2):
            raise ValueError("angular separations must satisfy |Theta|, |Phi| < pi/2")


# ---------------------------------------------------------------------------
# Kepler problem and element/Cartesian conversions (vectorized cores)
# ---------------------------------------------------------------------------


def solve_kepler(mean_anomaly: np.ndarray, e: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    """Eccentric anomaly from mean anomaly by Newton iteration."""
    m = np.mod(np.asarray(mean_anomaly, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    e = np.asarray(e, dtype=float)
    ecc = np.where(e < 0.8, m, np.pi * np.sign(m) + (np.sign(m) == 0) * np.pi)
    ecc = np.array(ecc, dtype=float)
    for _ in range(50):
        f = ecc - e * np.sin(ecc) - m
        fp = 1.0 - e * np.cos(ecc)
        step = f / fp
        ecc = ecc - step
        if np.max(np.abs(step)) < tol:
            break
    return ecc


def true_from_eccentric(ecc: np.ndarray, e: np.ndarray) -> np.ndarray:
    return 2.0 * np.arctan2(
        np.sqrt(1.0 + e) * np.sin(ecc / 2.0), np.sqrt(1.0 - e) * np.cos(ecc / 2.0)
    )


def _orbit_geometry(state: np.ndarray):
    """Common derived scalars for stacked states: e, argp, f, r, p, u_true."""
    s = np.asarray(state, dtype=float)
    a, ex, ey = s[..., 0], s[..., 1], s[..., 2]
    e = np.hypot(ex, ey)
    argp = np.arctan2(ey, ex)
    m = s[..., 5] - argp
    ecc = solve_kepler(m, e)
    f = true_from_eccentric(ecc, e)
    r = a * (1.0 - e * np.cos(ecc))
    p = a * (1.0 - e * e)
    u_true = argp + f
    return e, argp, f, r, p, u_true


def oe_to_cartesian(state: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inertial position/velocity [m, m/s] from stacked element states."""
    s = np.asarray(state, dtype=float)
    a = s[..., 0]
    inc, raan = s[..., 3], s[..., 4]
    e, argp, f, r, p, _ = _orbit_geometry(s)

    cf, sf = np.cos(f), np.sin(f)
    sqmu_p = np.sqrt(MU_EARTH / p)
    # perifocal position/velocity
    rp = np.stack([r * cf, r * sf, np.zeros_like(r)], axis=-1)
    vp = np.stack([-sqmu_p * sf, sqmu_p * (e + cf), np.zeros_like(r)], axis=-1)

    co, so = np.cos(raan), np.sin(raan)
    ci, si = np.cos(inc), np.sin(inc)
    cw, sw = np.cos(argp), np.sin(argp)
    # rows of the perifocal->inertial direction cosine matrix
    r11 = co * cw - so * sw * ci
    r12 = -co * sw - so * cw * ci
    r21 = so * cw + co * sw * ci
    r22 = -so * sw + co * cw * ci
    r31 = sw * si
    r32 = cw * si

    def to_eci(vec):
        x, y = vec[..., 0], vec[..., 1]
        return np.stack([r11 * x + r12 * y, r21 * x + r22 * y, r31 * x + r32 * y], axis=-1)

    return to_eci(rp), to_eci(vp)


def cartesian_to_oe(pos: np.ndarray, vel: np.ndarray) -> np.ndarray:
    """Osculating quasi-nonsingular elements from inertial position/velocity."""
    r_vec = np.asarray(pos, dtype=float)
    v_vec = np.asarray(vel, dtype=float)
    r = np.linalg.norm(r_vec, axis=-1)
    v2 = np.sum(v_vec * v_vec, axis=-1)
    a = 1.0 / (2.0 / r - v2 / MU_EARTH)

    h_vec = np.cross(r_vec, v_vec)
    h = np.linalg.norm(h_vec, axis=-1)
    inc = np.arccos(np.clip(h_vec[..., 2] / h, -1.0, 1.0))
    raan = np.arctan2(h_vec[..., 0], -h_vec[..., 1])

    rv = np.sum(r_vec * v_vec, axis=-1)
    e_vec = ((v2 - MU_EARTH / r)[..., None] * r_vec - rv[..., None] * v_vec) / MU_EARTH
    e = np.linalg.norm(e_vec, axis=-1)

    # argument of latitude of the position (angle from ascending node)
    node = np.stack([np.cos(raan), np.sin(raan), np.zeros_like(raan)], axis=-1)
    cross_nr = np.cross(node, r_vec)
    u_true = np.arctan2(np.sum(cross_nr * h_vec, axis=-1) / h, np.sum(node * r_vec, axis=-1))

    cross_ne = np.cross(node, e_vec)
    argp = np.arctan2(np.sum(cross_ne * h_vec, axis=-1) / h, np.sum(node * e_vec, axis=-1))
    argp = np.where(e > 1e-15, argp, 0.0)

    f = u_true - argp
    ecc = np.arctan2(np.sqrt(1.0 - e * e) * np.sin(f), e + np.cos(f))
    m = ecc - e * np.sin(ecc)
    u = argp + m

    ex = e * np.cos(argp)
    ey = e * np.sin(argp)
    out = np.stack([a, ex, ey, inc, wrap_angle(raan), wrap_angle(u)], axis=-1)
    return out


# ---------------------------------------------------------------------------
# Rotating frames
# ---------------------------------------------------------------------------


def rtn_matrix(pos: np.ndarray, vel: np.ndarray) -> np.ndarray:
    """Rows of the inertial->RTN rotation for stacked pos/vel arrays."""
    p = np.asarray(pos, dtype=float)
    v = np.asarray(vel, dtype=float)
    pn = np.linalg.norm(p, axis=-1, keepdims=True)
    if np.any(pn == 0.0) or np.any(np.linalg.norm(v, axis=-1) == 0.0):
        raise FrameError("zero position or velocity vector")
    x_hat = p / pn
    h = np.cross(p, v)
    hn = np.linalg.norm(h, axis=-1, keepdims=True)
    if np.any(hn < 1e-9 * pn * np.linalg.norm(v, axis=-1, keepdims=True)):
        raise FrameError("position and velocity are parallel")
    z_hat = h / hn
    y_hat = np.cross(z_hat, x_hat)
    return np.stack([x_hat, y_hat, z_hat], axis=-2)


def rtn_frame(orbit: AbsoluteOrbit) -> FrameRotation:
    """Inertial->RTN rotation: x along position, z along angular momentum."""
    pos, vel = orbit.cartesian()
    return FrameRotation(rtn_matrix(pos, vel), src="I", dst="R")


def w_frame(orbit: AbsoluteOrbit) -> FrameRotation:
    """Inertial->W rotation: y along velocity, z shared with RTN."""
    pos, vel = orbit.cartesian()
    vn = np.linalg.norm(vel)
    if vn == 0.0:
        raise FrameError("zero velocity vector")
    y_hat = vel / vn
    h = np.cross(pos, vel)
    hn = np.linalg.norm(h)
    if hn == 0.0:
        raise FrameError("position and velocity are parallel")
    z_hat = h / hn
    x_hat = np.cross(y_hat, z_hat)
    return FrameRotation(np.stack([x_hat, y_hat, z_hat]), src="I", dst="W")


def flight_path_angle(orbit: AbsoluteOrbit) -> float:
    """Angle between RTN and W frames about the orbit normal."""
    e, f = orbit.e, orbit.true_anomaly
    return math.atan2(e * math.sin(f), 1.0 + e * math.cos(f))


# ---------------------------------------------------------------------------
# ROE mappings
# ---------------------------------------------------------------------------


def roe_from_pair_arrays(observer: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Vectorized ROE of target w.r.t. observer from stacked element states."""
    o = np.asarray(observer, dtype=float)
    t = np.asarray(target, dtype=float)
    ci, si = np.cos(o[..., 3]), np.sin(o[..., 3])
    draan = wrap_angle(t[..., 4] - o[..., 4])
    return np.stack(
        [
            (t[..., 0] - o[..., 0]) / o[..., 0],
            wrap_angle(t[..., 5] - o[..., 5]) + draan * ci,
            t[..., 1] - o[..., 1],
            t[..., 2] - o[..., 2],
            t[..., 3] - o[..., 3],
            draan * si,
        ],
        axis=-1,
    )


def apply_roe_arrays(observer: np.ndarray, roe: np.ndarray) -> np.ndarray:
    """Vectorized inverse of :func:`roe_from_pair_arrays`."""
    o = np.asarray(observer, dtype=float)
    d = np.asarray(roe, dtype=float)
    ci, si = np.cos(o[..., 3]), np.sin(o[..., 3])
    draan = d[..., 5] / si
    return np.stack(
        [
            o[..., 0] * (1.0 + d[..., 0]),
            o[..., 1] + d[..., 2],
            o[..., 2] + d[..., 3],
            o[..., 3] + d[..., 4],
            wrap_angle(o[..., 4] + draan),
            wrap_angle(o[..., 5] + d[..., 1] - draan * ci),
        ],
        axis=-1,
    )


def roe_from_pair(observer: AbsoluteOrbit, target: AbsoluteOrbit) -> RelativeOrbit:
    return RelativeOrbit.from_array(
        roe_from_pair_arrays(observer.as_array(), target.as_array())
    )


def apply_roe(observer: AbsoluteOrbit, roe: RelativeOrbit) -> AbsoluteOrbit:
    return AbsoluteOrbit.from_array(apply_roe_arrays(observer.as_array(), roe.as_array()))


def roe_to_curvilinear(observer: AbsoluteOrbit, roe: RelativeOrbit) -> CurvilinearState:
    """First-order map from ROE to curvilinear offsets at the current u."""
    if observer.e > 0.05:
        raise ValueError("linear ROE map requires a near-circular observer (e <= 0.05)")
    dr, th, ph = _roe_to_curvilinear_arrays(
        observer.a, observer.u, np.asarray(roe.as_array())
    )
    return CurvilinearState(float(dr), float(th), float(ph))


def _roe_to_curvilinear_arrays(a_o, u_o, roe: np.ndarray):
    # first-order harmonic map at the current mean argument of latitude;
    # dlambda is the instantaneous value, so no da drift term appears here
    d = np.asarray(roe, dtype=float)
    cu, su = np.cos(u_o), np.sin(u_o)
    dr = a_o * (d[..., 0] - d[..., 2] * cu - d[..., 3] * su)
    theta = d[..., 1] + 2.0 * d[..., 2] * su - 2.0 * d[..., 3] * cu
    phi = d[..., 4] * su - d[..., 5] * cu
    return dr, theta, phi


def curvilinear_to_rect(a_o: float, c: CurvilinearState) -> np.ndarray:
    """Exact curvilinear-to-rectilinear RTN map."""
    rr = a_o + c.dr
    ct, st = math.cos(c.theta), math.sin(c.theta)
    cp, sp = math.cos(c.phi), math.sin(c.phi)
    return np.array([rr * ct * cp - a_o, rr * st * cp, rr * sp])


def roe_to_rtn_linear(observer: AbsoluteOrbit, roe: RelativeOrbit) -> np.ndarray:
    """Linearized ROE -> rectilinear RTN position [m] of the target.

    Composes the first-order curvilinear map with the exact
    curvilinear-to-rectilinear transform, so orbit-curvature error does not
    grow with along-track separation.
    """
    return curvilinear_to_rect(observer.a, roe_to_curvilinear(observer, roe))


# ---------------------------------------------------------------------------
# Quaternion helpers (scalar-last [x, y, z, w]) for attitude telemetry
# ---------------------------------------------------------------------------


def quat_from_matrix(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    t = np.trace(m)
    if t > 0.0:
        s = math.sqrt(t + 1.0) * 2.0
        w = 0.25 * s
        x = (m[2, 1] - m[1, 2]) / s
        y = (m[0, 2] - m[2, 0]) / s
        z = (m[1, 0] - m[0, 1]) / s
    else:
        k = int(np.argmax(np.diag(m)))
        if k == 0:
            s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
            x, y, z, w = 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s, (m[2, 1] - m[1, 2]) / s
        elif k == 1:
            s = math.sqrt(1.0 - m[0, 0] + m[1, 1] - m[2, 2]) * 2.0
            x, y, z, w = (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s, (m[0, 2] - m[2, 0]) / s
        else:
            s = math.sqrt(1.0 - m[0, 0] - m[1, 1] + m[2, 2]) * 2.0
            x, y, z, w = (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s, (m[1, 0] - m[0, 1]) / s
    q = np.array([x, y, z, w])
    if q[3] < 0.0:
        q = -q
    return q / np.linalg.norm(q)


def matrix_from_quat(q: np.ndarray) -> np.ndarray:
    x, y, z, w = np.asarray(q, dtype=float) / np.linalg.norm(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def rotation_angle(m: np.ndarray) -> float:
    """Rotation angle [rad] of a proper rotation matrix."""
    c = (np.trace(np.asarray(m)) - 1.0) / 2.0
    return math.acos(min(1.0, max(-1.0, c)))

"""Synthetic star-tracker scenes and their reduction to candidate bearings.

Scene generation projects catalog stars, sunlit targets, Poisson clutter
and detector hotspots into the camera frame of an observer whose boresight
tracks the (anti-)velocity direction.  Reduction mirrors the first phase of
the flight image pipeline: star identification against the catalog (oracle
matching with configurable failure rates), q-method attitude, and removal
of inertially-static and detector-static objects.  Whatever survives is a
candidate space-object bearing for the multi-target tracker.

The bearing convention follows the measurement model exactly:
``alpha = arcsin(v_y / |v|)``, ``eps = arctan2(v_x, v_z)`` for a camera
frame vector ``v`` with +z along the boresight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from swarmnav.constants import ARCSEC, DEG, R_EARTH
from swarmnav.orbits import Epoch, FrameRotation, oe_to_cartesian


class AttitudeError(RuntimeError):
    """Attitude solution unavailable for this frame (too few/bad stars)."""


@dataclass(frozen=True)
class CameraModel:
    n_px: tuple[int, int] = (1280, 1024)
    fov: tuple[float, float] = (12.0 * DEG, 10.0 * DEG)
    pixel_pitch: float = 5.3e-6
    focal_length: float = 30.0e-3
    bit_depth: int = 12

    def __post_init__(self):
        for k in range(2):
            geo = self.n_px[k] * self.pixel_pitch / self.focal_length
            if abs(geo - self.fov[k]) > 0.10 * self.fov[k]:
                raise ValueError("fov inconsistent with pixel geometry beyond 10%")

    def in_fov(self, v: np.ndarray) -> np.ndarray:
        """Mask of camera-frame vectors inside the rectangular FOV."""
        v = np.atleast_2d(v)
        zpos = v[:, 2] > 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            tx = np.abs(v[:, 0] / v[:, 2])
            ty = np.abs(v[:, 1] / v[:, 2])
        return zpos & (tx < math.tan(self.fov[0] / 2)) & (ty < math.tan(self.fov[1] / 2))


@dataclass(frozen=True)
class DetectionModel:
    """Range-driven detection probability, logistic in apparent magnitude."""

    p50_range: float = 100.0e3
    width: float = 0.5472
    mag_ref: float = 6.0

    def apparent_mag(self, rng_m: np.ndarray) -> np.ndarray:
        return self.mag_ref + 5.0 * np.log10(np.asarray(rng_m) / self.p50_range)

    def p_detect(self, rng_m: np.ndarray) -> np.ndarray:
        x = 5.0 * np.log10(np.asarray(rng_m) / self.p50_range) / self.width
        return 1.0 / (1.0 + np.exp(x))


@dataclass
class StarCatalog:
    vectors: np.ndarray  # (n, 3) inertial unit vectors
    mags: np.ndarray

    @classmethod
    def generate(cls, n: int = 2000, seed: int = 2024) -> "StarCatalog":
        rng = np.random.default_rng(seed)
        v = rng.standard_normal((n, 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        mags = rng.uniform(2.0, 6.5, n)
        return cls(v, mags)


@dataclass(frozen=True)
class SceneSource:
    v: np.ndarray  # unit vector in the camera frame
    mag: float


@dataclass
class SceneFrame:
    epoch: Epoch  # as tagged (includes any injected timing error)
    obs_id: str
    attitude: np.ndarray  # true inertial->camera rotation used to render
    sources: list[SceneSource]
    labels: list[str] = field(default_factory=list)  # truth sidecar, estimator-blind
    epoch_true: Epoch = 0.0


@dataclass(frozen=True)
class BearingMeasurement:
    epoch: Epoch
    obs_id: str
    alpha: float
    eps: float
    u_inertial: np.ndarray
    sigma: float

    def angles(self) -> np.ndarray:
        return np.array([self.alpha, self.eps])


def bearing_from_los(v: np.ndarray) -> tuple[float, float]:
    """(alpha, eps) bearing pair of a camera-frame line-of-sight vector."""
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ValueError("zero line-of-sight vector")
    alpha = math.asin(v[1] / norm)
    eps = math.atan2(v[0], v[2])
    return alpha, eps


def los_from_bearing(alpha: float, eps: float) -> np.ndarray:
    """Unit camera-frame vector reproducing the (alpha, eps) pair."""
    ca = math.cos(alpha)
    return np.array([ca * math.sin(eps), math.sin(alpha), ca * math.cos(eps)])


def boresight_attitude(pos: np.ndarray, vel: np.ndarray, sign: int) -> np.ndarray:
    """Commanded inertial->camera rotation with +z along sign * velocity.

    x stays along the orbit-radial axis of the velocity-aligned frame so
    the in-plane bearing angle maps to radial/along-track geometry.
    """
    y_w = vel / np.linalg.norm(vel)
    h = np.cross(pos, vel)
    z_w = h / np.linalg.norm(h)
    x_w = np.cross(y_w, z_w)
    # camera rows: x = x_w, y = -sign * z_w, z = sign * y_w (right-handed)
    return np.stack([x_w, -sign * z_w, sign * y_w])


def small_rotation(axis_angles: np.ndarray) -> np.ndarray:
    """Rotation matrix for a small rotation vector (exact Rodrigues form)."""
    th = np.linalg.norm(axis_angles)
    if th == 0.0:
        return np.eye(3)
    k = np.asarray(axis_angles) / th
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + math.sin(th) * kx + (1 - math.cos(th)) * (kx @ kx)


def tangent_perturb(vecs: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Perturb unit vectors by ~N(0, sigma^2) per tangent axis."""
    v = np.atleast_2d(vecs).astype(float)
    ref = np.where(np.abs(v[:, :1]) < 0.9, [[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])
    t1 = np.cross(v, ref)
    t1 /= np.linalg.norm(t1, axis=1, keepdims=True)
    t2 = np.cross(v, t1)
    noise = rng.standard_normal((len(v), 2)) * sigma
    out = v + noise[:, :1] * t1 + noise[:, 1:] * t2
    return out / np.linalg.norm(out, axis=1, keepdims=True)


def eclipsed(pos: np.ndarray, sun_dir: np.ndarray) -> bool:
    """Cylindrical Earth-shadow test for an inertial position [m]."""
    s = np.asarray(sun_dir) / np.linalg.norm(sun_dir)
    along = float(np.dot(pos, s))
    if along >= 0.0:
        return False
    perp = pos - along * s
    return float(np.linalg.norm(perp)) < R_EARTH


@dataclass
class SensingConfig:
    camera: CameraModel = field(default_factory=CameraModel)
    detection: DetectionModel = field(default_factory=DetectionModel)
    bearing_noise: float = 20.0 * ARCSEC
    attitude_noise: float = 30.0 * ARCSEC
    clutter_rate: float = 1.0
    hotspots: int = 2
    sun_dir: tuple[float, float, float] = (1.0, 0.0, 0.0)
    sun_exclusion: float = 20.0 * DEG
    eclipse_enabled: bool = True
    star_match_tol: float = 0.15 * DEG
    star_miss_rate: float = 0.01
    false_match_rate: float = 0.002
    static_tol: float = 60.0 * ARCSEC
    hotspot_tol: float = 30.0 * ARCSEC


def hotspot_directions(camera: CameraModel, n: int, seed: int = 77) -> np.ndarray:
    """Fixed detector-frame directions for injected hotspots."""
    rng = np.random.default_rng(seed)
    eps = rng.uniform(-camera.fov[0] / 2 * 0.8, camera.fov[0] / 2 * 0.8, n)
    alpha = rng.uniform(-camera.fov[1] / 2 * 0.8, camera.fov[1] / 2 * 0.8, n)
    return np.stack([los_from_bearing(a, e) for a, e in zip(alpha, eps)])


def render_scene(
    epoch: Epoch,
    obs_id: str,
    obs_state: np.ndarray,
    target_states: dict[str, np.ndarray],
    boresight_sign: int,
    catalog: StarCatalog,
    cfg: SensingConfig,
    rng: np.random.Generator,
    time_tag_offset: float = 0.0,
) -> SceneFrame | None:
    """One synthetic exposure; None when the sun violates the keep-out cone.

    Truth labels ride along in ``frame.labels`` for the metrics sidecar and
    the star-identification oracle; the tracker and filters never see them.
    """
    pos_o, vel_o = oe_to_cartesian(obs_state)
    att_cmd = boresight_attitude(pos_o, vel_o, boresight_sign)
    att_true = small_rotation(rng.standard_normal(3) * cfg.attitude_noise) @ att_cmd

    sun = np.asarray(cfg.sun_dir) / np.linalg.norm(cfg.sun_dir)
    boresight_i = att_true[2]
    if math.acos(np.clip(np.dot(boresight_i, sun), -1, 1)) < cfg.sun_exclusion:
        return None

    vecs: list[np.ndarray] = []
    mags: list[float] = []
    labels: list[str] = []

    # catalog stars
    stars_v = catalog.vectors @ att_true.T
    mask = cfg.camera.in_fov(stars_v)
    for idx in np.nonzero(mask)[0]:
        vecs.append(stars_v[idx])
        mags.append(float(catalog.mags[idx]))
        labels.append(f"star:{idx}")

    # targets: in FOV, sunlit, and detected per the range model
    for tid, st in sorted(target_states.items()):
        pos_t, _ = oe_to_cartesian(st)
        los = pos_t - pos_o
        rng_m = np.linalg.norm(los)
        v_cam = att_true @ (los / rng_m)
        if not cfg.camera.in_fov(v_cam)[0]:
            continue
        if cfg.eclipse_enabled and eclipsed(pos_t, sun):
            continue
        if rng.uniform() > cfg.detection.p_detect(rng_m):
            continue
        vecs.append(v_cam)
        mags.append(float(cfg.detection.apparent_mag(rng_m)))
        labels.append(f"target:{tid}")

    # Poisson clutter, uniform over the FOV
    for _ in range(rng.poisson(cfg.clutter_rate)):
        eps = rng.uniform(-cfg.camera.fov[0] / 2, cfg.camera.fov[0] / 2)
        alpha = rng.uniform(-cfg.camera.fov[1] / 2, cfg.camera.fov[1] / 2)
        vecs.append(los_from_bearing(alpha, eps))
        mags.append(float(rng.uniform(4.0, 7.0)))
        labels.append("clutter")

    # detector-fixed hotspots
    for v_hot in hotspot_directions(cfg.camera, cfg.hotspots):
        vecs.append(v_hot)
        mags.append(5.5)
        labels.append("hotspot")

    sources = []
    if vecs:
        arr = tangent_perturb(np.stack(vecs), cfg.bearing_noise, rng)
        # hotspots are detector artifacts, not optical sources: keep exact
        for k, lab in enumerate(labels):
            if lab == "hotspot":
                arr[k] = vecs[k]
        sources = [SceneSource(arr[k], mags[k]) for k in range(len(vecs))]

    return SceneFrame(
        epoch=epoch + time_tag_offset,
        obs_id=obs_id,
        attitude=att_true,
        sources=sources,
        labels=labels,
        epoch_true=epoch,
    )


def solve_attitude_qmethod(
    v_inertial: np.ndarray, v_sensor: np.ndarray, weights: np.ndarray | None = None
) -> tuple[FrameRotation, float]:
    """Optimal inertial->sensor rotation from matched vector pairs.

    Returns the rotation and the post-fit residual RMS [rad].  Raises
    :class:`AttitudeError` for underdetermined or collinear sets.
    """
    vi = np.atleast_2d(np.asarray(v_inertial, dtype=float))
    vs = np.atleast_2d(np.asarray(v_sensor, dtype=float))
    if len(vi) < 2:
        raise AttitudeError("q-method needs at least two vector pairs")
    w = np.ones(len(vi)) if weights is None else np.asarray(weights, dtype=float)
    vi = vi / np.linalg.norm(vi, axis=1, keepdims=True)
    vs = vs / np.linalg.norm(vs, axis=1, keepdims=True)

    # collinearity check on the inertial set
    gram = vi.T @ (vi * w[:, None])
    if np.linalg.matrix_rank(gram, tol=1e-10 * np.trace(gram)) < 2:
        raise AttitudeError("vector pairs are collinear")

    b = (vs * w[:, None]).T @ vi
    s = b + b.T
    z = np.array([b[1, 2] - b[2, 1], b[2, 0] - b[0, 2], b[0, 1] - b[1, 0]])
    sigma = np.trace(b)
    k = np.empty((4, 4))
    k[:3, :3] = s - sigma * np.eye(3)
    k[:3, 3] = z
    k[3, :3] = z
    k[3, 3] = sigma
    vals, vecs = np.linalg.eigh(k)
    q = vecs[:, -1]  # [x, y, z, w]
    x, y, zc, wq = q
    rot = np.array(
        [
            [1 - 2 * (y * y + zc * zc), 2 * (x * y + zc * wq), 2 * (x * zc - y * wq)],
            [2 * (x * y - zc * wq), 1 - 2 * (x * x + zc * zc), 2 * (y * zc + x * wq)],
            [2 * (x * zc + y * wq), 2 * (y * zc - x * wq), 1 - 2 * (x * x + y * y)],
        ]
    )
    resid = vs - vi @ rot.T
    rms = float(np.sqrt(np.mean(np.sum(resid**2, axis=1))))
    return FrameRotation(rot, src="I", dst="V"), rms


@dataclass(frozen=True)
class Candidate:
    """A non-stellar source reduced to an inertial bearing."""

    epoch: Epoch
    u_inertial: np.ndarray
    v_detector: np.ndarray
    mag: float


def identify_stars(
    frame: SceneFrame,
    catalog: StarCatalog,
    attitude_prior: np.ndarray,
    cfg: SensingConfig,
    rng: np.random.Generator,
) -> tuple[list[int], list[int], list[int]]:
    """Match sources to catalog stars via the prior attitude.

    Returns (matched source indices, matched catalog ids, swallowed source
    indices).  A swallowed source was wrongly declared stellar: it is
    removed from the candidate set but kept out of the attitude solution.
    Configured miss/false-match rates inject these identification faults.
    """
    if not frame.sources:
        return [], [], []
    src = np.stack([s.v for s in frame.sources])
    pred_inertial = src @ attitude_prior  # rows: A^T v = candidate inertial dirs
    dots = pred_inertial @ catalog.vectors.T
    best = np.argmax(dots, axis=1)
    best_dot = dots[np.arange(len(src)), best]
    sep = np.arccos(np.clip(best_dot, -1.0, 1.0))

    matched_src, matched_cat, swallowed = [], [], []
    for k in range(len(src)):
        is_match = sep[k] < cfg.star_match_tol
        if is_match and rng.uniform() < cfg.star_miss_rate:
            continue  # identification dropout: star leaks to the candidates
        if not is_match and rng.uniform() < cfg.false_match_rate:
            swallowed.append(k)
            continue
        if is_match:
            matched_src.append(k)
            matched_cat.append(int(best[k]))
    return matched_src, matched_cat, swallowed


def reduce_scene(
    frame: SceneFrame,
    catalog: StarCatalog,
    attitude_prior: np.ndarray,
    cfg: SensingConfig,
    rng: np.random.Generator,
) -> tuple[np.ndarray, float, list[Candidate]]:
    """Star-ID + attitude + candidate extraction for one frame.

    Returns (solved attitude, attitude residual RMS, candidates).
    """
    matched_src, matched_cat, swallowed = identify_stars(
        frame, catalog, attitude_prior, cfg, rng
    )
    if len(matched_src) < 2:
        raise AttitudeError("fewer than two identified stars")
    v_sensor = np.stack([frame.sources[k].v for k in matched_src])
    v_inertial = catalog.vectors[matched_cat]
    att, rms = solve_attitude_qmethod(v_inertial, v_sensor)
    if rms > 3.0 * max(cfg.bearing_noise, 1e-9) + 1e-9:
        raise AttitudeError(f"attitude residual {rms:.2e} exceeds 3x noise")

    removed = set(matched_src) | set(swallowed)
    cands = []
    for k, s in enumerate(frame.sources):
        if k in removed:
            continue
        cands.append(
            Candidate(
                epoch=frame.epoch,
                u_inertial=att.matrix.T @ s.v,
                v_detector=s.v,
                mag=s.mag,
            )
        )
    return att.matrix, rms, cands


class StaticObjectFilter:
    """Rejects inertially-static unknowns and detector-fixed hotspots.

    Keeps a short history of candidate directions; a candidate matching the
    previous frames within tolerance in the inertial frame (uncatalogued
    star) or in the detector frame (hotspot) is removed.
    """

    def __init__(self, cfg: SensingConfig, history: int = 4):
        self.cfg = cfg
        self.history = history
        self._inertial: list[np.ndarray] = []
        self._detector: list[np.ndarray] = []

    def __call__(self, cands: list[Candidate]) -> list[Candidate]:
        ready = len(self._inertial) >= 1
        out = []
        for c in cands:
            static_inertial = any(
                len(prev) and np.min(np.arccos(np.clip(prev @ c.u_inertial, -1, 1))) < self.cfg.static_tol
                for prev in self._inertial
            )
            static_detector = any(
                len(prev) and np.min(np.arccos(np.clip(prev @ c.v_detector, -1, 1))) < self.cfg.hotspot_tol
                for prev in self._detector
            )
            if ready and not (static_inertial or static_detector):
                out.append(c)
        self._inertial.append(
            np.stack([c.u_inertial for c in cands]) if cands else np.zeros((0, 3))
        )
        self._detector.append(
            np.stack([c.v_detector for c in cands]) if cands else np.zeros((0, 3))
        )
        if len(self._inertial) > self.history:
            self._inertial.pop(0)
            self._detector.pop(0)
        return out

"""Geodetic unscented Kalman filter over the state [lon, lat, SOG, COG].

Prediction pushes symmetric sigma points through the great-circle state update;
the measurement model is linear, so the update is a conventional Kalman step in
Joseph form with per-field masking for incomplete reports.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._linalg import project_psd, sqrt_psd, symmetrize
from .geodesy import (EarthMode, EarthModel, GeoPoint, normalize_lon,
                      propagate_sphere_arrays, vincenty_direct_arrays,
                      wrap_bearing)
from .noise import ProcessNoiseParams, build_process_noise, default_measurement_noise

N_STATES = 4
SIGMA_W0 = 1.0 - N_STATES / 3.0           # -1/3 for the 4-state filter
SIGMA_WI = (1.0 - SIGMA_W0) / (2 * N_STATES)
SIGMA_SCALE = N_STATES / (1.0 - SIGMA_W0)  # 3.0

# Wide-but-proper covariance assigned when a track is born from its first report.
INITIAL_COV = np.diag([1e-4 ** 2, 1e-4 ** 2, 1.0 ** 2, 100.0 ** 2])

_PSD_TOL = 1e-9


class FactorizationFailure(RuntimeError):
    """Covariance too indefinite to factor even after PSD projection."""


class SingularInnovation(RuntimeError):
    """Innovation covariance not invertible (degenerate measurement noise)."""


def wrap_residual(predicted_cog: float, measured_cog: float) -> float:
    """Smallest signed angular difference measured - predicted, in [-180, 180)."""
    return (measured_cog - predicted_cog + 180.0) % 360.0 - 180.0


@dataclass(frozen=True)
class GeodeticState:
    lon: float
    lat: float
    sog: float
    cog: float

    def __post_init__(self):
        object.__setattr__(self, "lon", normalize_lon(self.lon))
        object.__setattr__(self, "cog", wrap_bearing(self.cog))

    def as_vector(self) -> np.ndarray:
        return np.array([self.lon, self.lat, self.sog, self.cog], dtype=float)

    @classmethod
    def from_vector(cls, x: np.ndarray) -> "GeodeticState":
        return cls(float(x[0]), float(x[1]), max(0.0, float(x[2])), float(x[3]))

    @property
    def position(self) -> GeoPoint:
        return GeoPoint(self.lon, self.lat)


@dataclass
class GaussianBelief:
    mean: GeodeticState
    cov: np.ndarray
    timestamp: float = 0.0


@dataclass(frozen=True)
class MotionModel:
    """Constant scalar inputs of the maneuver model; zero for constant velocity."""
    accel: float = 0.0      # m/s^2
    turn_rate: float = 0.0  # deg/s


@dataclass
class Measurement:
    """4-vector in state order with a per-field availability mask.

    Masked-out entries carry value 0 and contribute no residual.
    """
    z: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float).copy()
        self.mask = np.asarray(self.mask, dtype=bool).copy()
        self.z[~self.mask] = 0.0

    @classmethod
    def full(cls, lon: float, lat: float, sog: float, cog: float) -> "Measurement":
        return cls(np.array([lon, lat, sog, cog]), np.ones(4, dtype=bool))

    @classmethod
    def from_fields(cls, lon=None, lat=None, sog=None, cog=None) -> "Measurement":
        vals = [lon, lat, sog, cog]
        mask = np.array([v is not None for v in vals])
        z = np.array([0.0 if v is None else float(v) for v in vals])
        return cls(z, mask)


@dataclass
class SigmaPointSet:
    points: np.ndarray   # (9, 4)
    weights: np.ndarray  # (9,)


def sigma_points(belief: GaussianBelief) -> SigmaPointSet:
    """Symmetric 2N+1 sigma point set around the belief mean."""
    cov = symmetrize(belief.cov)
    if np.linalg.eigvalsh(cov)[0] < -_PSD_TOL:
        cov = project_psd(cov)
        if np.linalg.eigvalsh(cov)[0] < -_PSD_TOL:
            raise FactorizationFailure("covariance is indefinite")
    root = sqrt_psd(SIGMA_SCALE * cov)
    mean = belief.mean.as_vector()
    points = np.empty((2 * N_STATES + 1, N_STATES))
    points[0] = mean
    for i in range(N_STATES):
        points[1 + i] = mean + root[:, i]
        points[1 + N_STATES + i] = mean - root[:, i]
    weights = np.full(2 * N_STATES + 1, SIGMA_WI)
    weights[0] = SIGMA_W0
    return SigmaPointSet(points, weights)


def _propagate_points(points: np.ndarray, model: MotionModel, dt: float,
                      earth: EarthModel) -> np.ndarray:
    """Push raw sigma point vectors through the geodetic state update."""
    lon, lat, sog, cog = points.T
    dist = sog * dt
    brg = cog.copy()
    # a sigma point offset can drive SOG negative: travel the reverse bearing
    neg = dist < 0
    dist = np.abs(dist)
    brg[neg] = (brg[neg] + 180.0) % 360.0
    if earth.mode is EarthMode.ELLIPSOID:
        lon2, lat2, _, _ = vincenty_direct_arrays(
            lon, lat, brg, dist, earth.semi_major, earth.flattening)
    else:
        lon2, lat2 = propagate_sphere_arrays(lon, lat, brg, dist, earth.sphere_radius)
    sog2 = np.maximum(0.0, sog + model.accel * dt)
    cog2 = (cog + model.turn_rate * dt) % 360.0
    return np.column_stack([lon2, lat2, sog2, cog2])


def _weighted_mean(points: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weighted sigma point mean; longitude and course averaged circularly."""
    mean = weights @ points
    # longitude: average offsets relative to the central point to stay
    # well-defined across the dateline seam
    dlon = (points[:, 0] - points[0, 0] + 180.0) % 360.0 - 180.0
    mean[0] = normalize_lon(points[0, 0] + weights @ dlon)
    cog = np.radians(points[:, 3])
    mean[3] = np.degrees(np.arctan2(weights @ np.sin(cog), weights @ np.cos(cog))) % 360.0
    return mean


def _residuals(points: np.ndarray, mean: np.ndarray) -> np.ndarray:
    res = points - mean
    res[:, 0] = (res[:, 0] + 180.0) % 360.0 - 180.0
    res[:, 3] = (res[:, 3] + 180.0) % 360.0 - 180.0
    return res


def predict(belief: GaussianBelief, model: MotionModel, dt: float, q: np.ndarray,
            earth: EarthModel | None = None) -> GaussianBelief:
    """A priori belief after propagating every sigma point through dt seconds."""
    earth = earth or EarthModel.sphere()
    sp = sigma_points(belief)
    transformed = _propagate_points(sp.points, model, dt, earth)
    mean = _weighted_mean(transformed, sp.weights)
    res = _residuals(transformed, mean)
    cov = (sp.weights[:, None] * res).T @ res + np.asarray(q, dtype=float)
    cov = project_psd(symmetrize(cov))
    return GaussianBelief(GeodeticState.from_vector(mean), cov, belief.timestamp + dt)


def update(prior: GaussianBelief, meas: Measurement, r: np.ndarray) -> GaussianBelief:
    """Joseph-form linear update with masked fields carrying zero residual."""
    r = np.asarray(r, dtype=float)
    h = np.diag(meas.mask.astype(float))
    p = symmetrize(prior.cov)
    x = prior.mean.as_vector()

    innov_cov = h @ p @ h.T + r
    try:
        innov_inv = np.linalg.inv(innov_cov)
    except np.linalg.LinAlgError as exc:
        raise SingularInnovation("innovation covariance is singular") from exc

    y = meas.z - h @ x
    y[0] = wrap_residual(0.0, y[0])
    y[3] = wrap_residual(0.0, y[3])
    y[~meas.mask] = 0.0

    k = p @ h.T @ innov_inv
    x_post = x + k @ y
    x_post[3] %= 360.0
    ikh = np.eye(N_STATES) - k @ h
    p_post = symmetrize(ikh @ p @ ikh.T + k @ r @ k.T)
    return GaussianBelief(GeodeticState.from_vector(x_post), p_post, prior.timestamp)


def initial_belief(meas: Measurement, timestamp: float = 0.0) -> GaussianBelief:
    """Track birth rule: mean from the first report, wide proper covariance."""
    x = meas.z.copy()
    state = GeodeticState(float(x[0]), float(x[1]), max(0.0, float(x[2])), float(x[3]))
    return GaussianBelief(state, INITIAL_COV.copy(), timestamp)


class GeodeticUkf:
    """Stateful filter instance: one tracked vessel, sequential predict/update."""

    def __init__(self, belief: GaussianBelief,
                 model: MotionModel | None = None,
                 process_params: ProcessNoiseParams | None = None,
                 measurement_noise: np.ndarray | None = None,
                 earth: EarthModel | None = None):
        self.belief = belief
        self.model = model or MotionModel()
        self.process_params = process_params or ProcessNoiseParams()
        self.measurement_noise = (default_measurement_noise()
                                  if measurement_noise is None else measurement_noise)
        self.earth = earth or EarthModel.sphere()

    @classmethod
    def from_first_measurement(cls, meas: Measurement, timestamp: float = 0.0,
                               **kwargs) -> "GeodeticUkf":
        return cls(initial_belief(meas, timestamp), **kwargs)

    def predict(self, dt: float) -> GaussianBelief:
        # Q is rebuilt every step from the current latitude/course estimate
        q = build_process_noise(self.process_params, self.belief.mean.lat,
                                self.belief.mean.cog, dt)
        self.belief = predict(self.belief, self.model, dt, q, self.earth)
        return self.belief

    def update(self, meas: Measurement) -> GaussianBelief:
        self.belief = update(self.belief, meas, self.measurement_noise)
        return self.belief

"""Measurement and process noise covariance construction, and the linear
wave-theory kinematics used to size the process disturbance amplitude."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._linalg import project_psd, symmetrize
from .geodesy import DomainError

STANDARD_GRAVITY = 9.80665

# Stationary-vessel position std devs (deg) and GNSS compass SOG/COG std devs.
MEAS_STD_LON_DEG = 1.90e-5
MEAS_STD_LAT_DEG = 1.45e-5
MEAS_STD_SOG_MPS = 0.05
MEAS_STD_COG_DEG = 0.2

METERS_PER_DEGREE = 111319.5


def default_measurement_noise() -> np.ndarray:
    """Diagonal 4x4 measurement covariance in (deg^2, deg^2, (m/s)^2, deg^2)."""
    return np.diag([MEAS_STD_LON_DEG ** 2, MEAS_STD_LAT_DEG ** 2,
                    MEAS_STD_SOG_MPS ** 2, MEAS_STD_COG_DEG ** 2])


@dataclass(frozen=True)
class ProcessNoiseParams:
    """Parameters of the latitude/course dependent process noise covariance.

    ``position_dt_factor`` keeps the per-entry dt factor on the position
    diagonals (in addition to the overall dt scaling); set False to scale the
    position variances by dt only once.
    """

    zeta0: float = 2.0                    # disturbance amplitude, meters
    lon_scale: float = METERS_PER_DEGREE  # meters per degree of longitude at the equator
    sigma_sog: float = 0.08               # m/s
    sigma_cog: float = 1.2                # degrees
    position_dt_factor: bool = True

    def __post_init__(self):
        if min(self.zeta0, self.lon_scale, self.sigma_sog, self.sigma_cog) <= 0:
            raise DomainError("process noise parameters must be strictly positive")


def build_process_noise(params: ProcessNoiseParams, lat_deg: float, cog_deg: float,
                        dt: float) -> np.ndarray:
    """Assemble the 4x4 process noise covariance for one prediction step.

    The longitude std dev grows as 1/cos(lat) so that a fixed metric
    disturbance maps to the correct angular variance at any latitude.  The
    speed-position cross terms flip influence with the instantaneous course.
    The result is symmetrized and PSD-projected.
    """
    if abs(lat_deg) >= 90.0:
        raise DomainError("|lat| must be < 90 for longitude process noise")
    if dt <= 0:
        raise DomainError("dt must be positive")
    lat = math.radians(lat_deg)
    cog = math.radians(cog_deg)
    sigma_lon = params.zeta0 / (params.lon_scale * math.cos(lat))
    sigma_lat = params.zeta0 / params.lon_scale

    pos_dt = dt if params.position_dt_factor else 1.0
    cross_lon = (sigma_lon * math.sin(cog)) ** 2
    cross_lat = (sigma_lat * math.cos(cog)) ** 2
    q = np.array([
        [sigma_lon ** 2 * pos_dt, 0.0, cross_lon, 0.0],
        [0.0, sigma_lat ** 2 * pos_dt, cross_lat, 0.0],
        [cross_lon, cross_lat, params.sigma_sog ** 2, 0.0],
        [0.0, 0.0, 0.0, params.sigma_cog ** 2],
    ]) * dt
    return project_psd(symmetrize(q))


@dataclass(frozen=True)
class WaveKinematics:
    significant_height: float  # m
    peak_period: float         # s
    orbital_radius: float      # m
    orbital_speed: float       # m/s


def _solve_wavenumber(omega: float, depth: float, g: float) -> float:
    """Wavenumber from the linear dispersion relation w^2 = g k tanh(k h)."""
    target = omega * omega
    lo = target / g  # tanh <= 1 implies root >= w^2/g
    hi = lo
    while g * hi * math.tanh(hi * depth) < target:
        hi *= 2.0
    while hi - lo > 1e-12 * hi:
        mid = 0.5 * (lo + hi)
        if g * mid * math.tanh(mid * depth) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def wave_orbital_kinematics(height: float, period: float, depth: float = 1000.0,
                            g: float = STANDARD_GRAVITY) -> WaveKinematics:
    """Orbital radius and max particle speed of a progressive surface wave."""
    if height < 0 or period <= 0 or depth <= 0:
        raise DomainError("require H >= 0, T > 0, depth > 0")
    omega = 2.0 * math.pi / period
    k = _solve_wavenumber(omega, depth, g)
    coth = math.cosh(k * depth) / math.sinh(k * depth)
    zeta = abs(-(height / 2.0) * coth)
    u_max = g * period * height * k / (4.0 * math.pi) * coth
    return WaveKinematics(height, period, zeta, u_max)


# Beaufort scale rows used for the fully-developed sea-state table:
# (scale, significant height m, peak period s).
BEAUFORT_SEA_STATES = [
    (4, 1.0, 5.0),
    (5, 2.0, 7.1),
    (6, 3.3, 9.1),
    (7, 5.3, 11.5),
    (8, 8.2, 14.3),
    (9, 11.4, 16.9),
    (10, 15.5, 19.7),
]

"""Truth-trajectory generation, AIS report synthesis, and filter scoring.

Truth states evolve only through kinematics: white noise enters through the
speed and course used for each step, never directly through position.  A
straight segment therefore follows one great circle exactly when noise-free,
because the course is carried forward as the arrival bearing of each step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .ekf import PlanarEkf, TangentPlane
from .geodesy import (GeoPoint, great_circle_final_bearing, great_circle_inverse,
                      propagate_sphere, vincenty_inverse, NonConvergenceError)
from .noise import METERS_PER_DEGREE
from .ukf import GeodeticUkf, Measurement

STRAIGHT = "straight"
TURN = "turn"


@dataclass(frozen=True)
class TrajectorySegment:
    kind: str
    duration: float       # seconds
    speed: float          # m/s
    turn_rate: float = 0.0  # deg/s, turn segments only

    def __post_init__(self):
        if self.kind not in (STRAIGHT, TURN):
            raise ValueError(f"unknown segment kind {self.kind!r}")
        if self.duration <= 0 or self.speed < 0:
            raise ValueError("segment duration must be > 0 and speed >= 0")


@dataclass(frozen=True)
class Scenario:
    start: GeoPoint
    initial_cog: float
    segments: tuple[TrajectorySegment, ...]
    truth_rate_hz: float = 1.0
    ais_interval: float = 6.0
    sog_noise: float = 0.1      # process jitter injected into SOG, m/s
    cog_noise: float = 0.5      # process jitter injected into COG, deg
    meas_noise: tuple[float, float, float, float] = (1.90e-5, 1.45e-5, 0.05, 0.2)
    seed: int = 0
    name: str = "scenario"

    def __post_init__(self):
        if self.ais_interval < 1.0 / self.truth_rate_hz:
            raise ValueError("ais_interval must be >= one truth step")

    @property
    def duration(self) -> float:
        return sum(s.duration for s in self.segments)


@dataclass
class TruthTrajectory:
    t: np.ndarray
    lon: np.ndarray
    lat: np.ndarray
    sog: np.ndarray
    cog: np.ndarray

    def __len__(self):
        return len(self.t)

    def state_vector(self, i: int) -> np.ndarray:
        return np.array([self.lon[i], self.lat[i], self.sog[i], self.cog[i]])


def generate_truth(scenario: Scenario, rng: np.random.Generator | None = None
                   ) -> TruthTrajectory:
    """Truth states at t = 0, dt, ..., duration - dt (dt = 1/truth_rate_hz)."""
    rng = np.random.default_rng(scenario.seed) if rng is None else rng
    dt = 1.0 / scenario.truth_rate_hz
    n = int(math.floor(scenario.duration * scenario.truth_rate_hz + 1e-9))

    segments = list(scenario.segments)
    seg_idx = 0
    seg_time_left = segments[0].duration
    pos = scenario.start
    course = scenario.initial_cog % 360.0

    t = np.arange(n) * dt
    lon = np.empty(n)
    lat = np.empty(n)
    sog = np.empty(n)
    cog = np.empty(n)

    for k in range(n):
        seg = segments[seg_idx]
        jitter_s = rng.normal(0.0, scenario.sog_noise) if scenario.sog_noise else 0.0
        jitter_c = rng.normal(0.0, scenario.cog_noise) if scenario.cog_noise else 0.0
        speed = max(0.0, seg.speed + jitter_s)
        course_used = (course + jitter_c) % 360.0

        lon[k], lat[k] = pos.lon, pos.lat
        sog[k] = speed
        cog[k] = course_used

        # advance one output step, splitting at segment boundaries
        remaining = dt
        while remaining > 1e-12:
            seg = segments[seg_idx]
            # the final segment absorbs any sub-step overrun caused by a
            # non-integer total duration
            last_segment = seg_idx + 1 == len(segments)
            tau = remaining if last_segment and seg_time_left < remaining \
                else min(remaining, seg_time_left)
            speed = max(0.0, seg.speed + jitter_s)
            course_used = (course + jitter_c) % 360.0
            dist = speed * tau
            new_pos = propagate_sphere(pos, course_used, dist)
            if dist > 1e-9:
                arrival = great_circle_final_bearing(pos, new_pos)
            else:
                arrival = course_used
            course = (arrival - jitter_c + seg.turn_rate * tau) % 360.0
            pos = new_pos
            remaining -= tau
            seg_time_left -= tau
            if seg_time_left <= 1e-12 and seg_idx + 1 < len(segments):
                seg_idx += 1
                seg_time_left = segments[seg_idx].duration
    return TruthTrajectory(t, lon, lat, sog, cog)


def sample_ais(truth: TruthTrajectory, scenario: Scenario,
               rng: np.random.Generator | None = None
               ) -> list[tuple[float, Measurement]]:
    """Noisy AIS reports at every ais_interval multiple of the truth timeline."""
    rng = np.random.default_rng(scenario.seed + 1) if rng is None else rng
    dt = 1.0 / scenario.truth_rate_hz
    stride = int(round(scenario.ais_interval / dt))
    stds = np.asarray(scenario.meas_noise, dtype=float)
    out = []
    for i in range(0, len(truth), stride):
        z = truth.state_vector(i)
        if stds.any():
            z = z + rng.normal(0.0, stds)
        z[2] = max(0.0, z[2])
        z[3] %= 360.0
        out.append((float(truth.t[i]), Measurement(z, np.ones(4, dtype=bool))))
    return out


@dataclass
class RunMetrics:
    rmse_lon: float
    rmse_lat: float
    rmse_sog: float
    rmse_cog: float
    rmse_pos_m: float
    frac_within_3sigma: float
    max_cov_trace: float
    median_cov_trace: float


@dataclass
class FilterRunRecord:
    """Per-step estimates for one filter over one scenario run."""
    t: np.ndarray
    est: np.ndarray       # (n, 4) lon, lat, sog, cog
    err_pos_m: np.ndarray
    sigma3_m: np.ndarray
    cov_trace: np.ndarray


def _position_error_m(lon1, lat1, lon2, lat2) -> float:
    p1, p2 = GeoPoint(float(lon1), float(lat1)), GeoPoint(float(lon2), float(lat2))
    try:
        dist, _ = vincenty_inverse(p1, p2)
    except NonConvergenceError:
        dist, _ = great_circle_inverse(p1, p2)
    return dist


def _metrics(truth: TruthTrajectory, record: FilterRunRecord, idx: np.ndarray
             ) -> RunMetrics:
    res = record.est[idx] - np.column_stack(
        [truth.lon[idx], truth.lat[idx], truth.sog[idx], truth.cog[idx]])
    res[:, 3] = (res[:, 3] + 180.0) % 360.0 - 180.0
    rmse = np.sqrt(np.mean(res ** 2, axis=0))
    return RunMetrics(
        rmse_lon=float(rmse[0]), rmse_lat=float(rmse[1]),
        rmse_sog=float(rmse[2]), rmse_cog=float(rmse[3]),
        rmse_pos_m=float(np.sqrt(np.mean(record.err_pos_m[idx] ** 2))),
        frac_within_3sigma=float(np.mean(record.err_pos_m[idx] < record.sigma3_m[idx])),
        max_cov_trace=float(np.max(record.cov_trace[idx])),
        median_cov_trace=float(np.median(record.cov_trace[idx])),
    )


def _position_sigma3_m(p00: float, p11: float, lat_deg: float) -> float:
    m_lon = METERS_PER_DEGREE * math.cos(math.radians(lat_deg))
    m_lat = METERS_PER_DEGREE
    return 3.0 * math.sqrt(max(0.0, p00) * m_lon ** 2 + max(0.0, p11) * m_lat ** 2)


@dataclass
class ComparisonRun:
    scenario: Scenario
    truth: TruthTrajectory
    ukf: FilterRunRecord | None
    ekf: FilterRunRecord | None
    ukf_metrics: RunMetrics | None
    ekf_metrics: RunMetrics | None


def run_comparison(scenario: Scenario, filters: str = "both",
                   filter_rate_hz: float = 1.0) -> ComparisonRun:
    """Run the geodetic and planar filters on one shared measurement stream."""
    if filters not in ("ukf", "ekf", "both"):
        raise ValueError("filters must be 'ukf', 'ekf', or 'both'")
    truth = generate_truth(scenario)
    measurements = dict()
    for tm, meas in sample_ais(truth, scenario):
        measurements[round(tm * filter_rate_hz)] = meas

    first_key = min(measurements)
    first_meas = measurements[first_key]
    run_ukf = filters in ("ukf", "both")
    run_ekf = filters in ("ekf", "both")

    ukf = GeodeticUkf.from_first_measurement(first_meas) if run_ukf else None
    ekf = (PlanarEkf.from_first_measurement(first_meas,
                                            plane=TangentPlane(scenario.start))
           if run_ekf else None)

    dt = 1.0 / filter_rate_hz
    stride = int(round((1.0 / scenario.truth_rate_hz) / dt)) or 1
    n_steps = len(truth)
    idx_scale = int(round(scenario.truth_rate_hz * dt))

    def new_record():
        return FilterRunRecord(truth.t.copy(), np.zeros((n_steps, 4)),
                               np.zeros(n_steps), np.zeros(n_steps),
                               np.zeros(n_steps))

    rec_ukf = new_record() if run_ukf else None
    rec_ekf = new_record() if run_ekf else None

    def record_ukf(i):
        b = ukf.belief
        rec_ukf.est[i] = b.mean.as_vector()
        rec_ukf.err_pos_m[i] = _position_error_m(b.mean.lon, b.mean.lat,
                                                 truth.lon[i], truth.lat[i])
        rec_ukf.sigma3_m[i] = _position_sigma3_m(b.cov[0, 0], b.cov[1, 1], b.mean.lat)
        rec_ukf.cov_trace[i] = np.trace(b.cov)

    def record_ekf(i):
        pos = ekf.geodetic_position()
        rec_ekf.est[i] = [pos.lon, pos.lat, ekf.state.sog, ekf.cog_deg]
        rec_ekf.err_pos_m[i] = _position_error_m(pos.lon, pos.lat,
                                                 truth.lon[i], truth.lat[i])
        rec_ekf.sigma3_m[i] = 3.0 * math.sqrt(
            max(0.0, ekf.p[0, 0]) + max(0.0, ekf.p[1, 1]))
        rec_ekf.cov_trace[i] = np.trace(ekf.p)

    if run_ukf:
        record_ukf(first_key * idx_scale if idx_scale else first_key)
    if run_ekf:
        record_ekf(first_key * idx_scale if idx_scale else first_key)

    for k in range(first_key + 1, int(round(truth.t[-1] / dt)) + 1):
        if run_ukf:
            ukf.predict(dt)
        if run_ekf:
            ekf.predict(dt)
        meas = measurements.get(k)
        if meas is not None:
            if run_ukf:
                ukf.update(meas)
            if run_ekf:
                ekf.update(meas)
        i = k * idx_scale
        if i < n_steps:
            if run_ukf:
                record_ukf(i)
            if run_ekf:
                record_ekf(i)

    scored = np.arange(first_key * (idx_scale or 1), n_steps)
    ukf_metrics = _metrics(truth, rec_ukf, scored) if run_ukf else None
    ekf_metrics = _metrics(truth, rec_ekf, scored) if run_ekf else None
    return ComparisonRun(scenario, truth, rec_ukf, rec_ekf, ukf_metrics, ekf_metrics)


# ---------------------------------------------------------------------------
# Canonical scenarios
# ---------------------------------------------------------------------------

def boston_departure_scenario(seed: int = 0, ais_interval: float = 6.0) -> Scenario:
    """Eastbound harbor departure at 7 m/s with several constant-turn arcs."""
    speed = 7.0
    segments = (
        TrajectorySegment(STRAIGHT, 120.0, speed),
        TrajectorySegment(TURN, 45.0, speed, turn_rate=0.8),
        TrajectorySegment(STRAIGHT, 90.0, speed),
        TrajectorySegment(TURN, 60.0, speed, turn_rate=-0.6),
        TrajectorySegment(STRAIGHT, 120.0, speed),
        TrajectorySegment(TURN, 45.0, speed, turn_rate=0.5),
        TrajectorySegment(STRAIGHT, 120.0, speed),
    )
    return Scenario(start=GeoPoint(-71.0237, 42.3469), initial_cog=90.0,
                    segments=segments, ais_interval=ais_interval, seed=seed,
                    name="boston-departure")


def lawnmower_scenario(ais_interval: float, n_legs: int = 10, seed: int = 0,
                       straight_len: float = 855.0, turn_radius: float = 50.0,
                       speed: float = 15.0) -> Scenario:
    """Survey pattern: parallel straights joined by 180-degree turns."""
    straight_time = straight_len / speed
    turn_time = math.pi * turn_radius / speed
    turn_rate = 180.0 / turn_time
    segments = []
    for leg in range(n_legs):
        segments.append(TrajectorySegment(STRAIGHT, straight_time, speed))
        sign = 1.0 if leg % 2 == 0 else -1.0
        segments.append(TrajectorySegment(TURN, turn_time, speed,
                                          turn_rate=sign * turn_rate))
    return Scenario(start=GeoPoint(-70.9, 42.3), initial_cog=0.0,
                    segments=tuple(segments), ais_interval=ais_interval,
                    seed=seed, name=f"lawnmower-{int(ais_interval)}s")


def stability_sweep(intervals=range(2, 69), n_legs: int = 10, seed: int = 0
                    ) -> list[tuple[float, ComparisonRun]]:
    """Lawnmower runs over a range of AIS update intervals (shared seed)."""
    out = []
    for interval in intervals:
        run = run_comparison(lawnmower_scenario(float(interval), n_legs, seed))
        out.append((float(interval), run))
    return out


# ---------------------------------------------------------------------------
# Scenario file format: key = value lines plus a [segments] table
# ---------------------------------------------------------------------------

def parse_scenario(text: str, name: str = "scenario") -> Scenario:
    keys: dict[str, float] = {}
    segments: list[TrajectorySegment] = []
    in_segments = False
    for raw_line in text.splitlines():
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.lower() == "[segments]":
            in_segments = True
            continue
        if in_segments:
            parts = line.split()
            if len(parts) not in (3, 4):
                raise ValueError(f"bad segment row: {raw_line!r}")
            kind, duration, speed = parts[0].lower(), float(parts[1]), float(parts[2])
            rate = float(parts[3]) if len(parts) == 4 and parts[3] != "-" else 0.0
            segments.append(TrajectorySegment(kind, duration, speed, rate))
        else:
            if "=" not in line:
                raise ValueError(f"bad scenario line: {raw_line!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            keys[key.lower()] = float(value)
    if not segments:
        raise ValueError("scenario has no segments")
    return Scenario(
        start=GeoPoint(keys["start_lon"], keys["start_lat"]),
        initial_cog=keys.get("initial_cog", 0.0),
        segments=tuple(segments),
        truth_rate_hz=keys.get("truth_rate_hz", 1.0),
        ais_interval=keys.get("ais_interval", 6.0),
        sog_noise=keys.get("sog_noise", 0.1),
        cog_noise=keys.get("cog_noise", 0.5),
        meas_noise=(keys.get("meas_lon_noise", 1.90e-5),
                    keys.get("meas_lat_noise", 1.45e-5),
                    keys.get("meas_sog_noise", 0.05),
                    keys.get("meas_cog_noise", 0.2)),
        seed=int(keys.get("seed", 0)),
        name=name,
    )


def load_scenario(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read(), name=path)


def format_scenario(s: Scenario) -> str:
    lines = [
        f"start_lon = {s.start.lon}",
        f"start_lat = {s.start.lat}",
        f"initial_cog = {s.initial_cog}",
        f"truth_rate_hz = {s.truth_rate_hz}",
        f"ais_interval = {s.ais_interval}",
        f"sog_noise = {s.sog_noise}",
        f"cog_noise = {s.cog_noise}",
        f"meas_lon_noise = {s.meas_noise[0]}",
        f"meas_lat_noise = {s.meas_noise[1]}",
        f"meas_sog_noise = {s.meas_noise[2]}",
        f"meas_cog_noise = {s.meas_noise[3]}",
        f"seed = {s.seed}",
        "",
        "[segments]",
        "# kind duration_s speed_mps turn_rate_dps",
    ]
    for seg in s.segments:
        rate = "-" if seg.kind == STRAIGHT else repr(seg.turn_rate)
        lines.append(f"{seg.kind} {seg.duration} {seg.speed} {rate}")
    return "\n".join(lines) + "\n"

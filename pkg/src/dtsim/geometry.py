"""Lookahead geometry on a spherical, non-rotating Earth.

Look angles are measured off-nadir at the spacecraft, positive toward the
velocity direction.  Ground speed is an input rather than derived from the
orbit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

EARTH_RADIUS_KM = 6371.0
HORIZON_MARGIN_DEG = 0.5


class GeometryError(ValueError):
    """Pointing request that has no valid ground intersection."""


@dataclass(frozen=True)
class OrbitConfig:
    altitude_km: float = 500.0
    ground_speed_km_s: float = 7.5
    earth_radius_km: float = EARTH_RADIUS_KM

    def __post_init__(self):
        for name in ("altitude_km", "ground_speed_km_s", "earth_radius_km"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")

    @property
    def angular_radius_deg(self) -> float:
        """Off-nadir angle of the geometric horizon."""
        return math.degrees(
            math.asin(self.earth_radius_km / (self.earth_radius_km + self.altitude_km))
        )


@dataclass(frozen=True)
class LookaheadGeometry:
    look_angle_deg: float
    central_angle_rad: float
    ground_distance_km: float
    lead_time_s: float


@dataclass(frozen=True)
class GroundFootprint:
    along_track_center_km: float
    across_track_center_km: float
    along_track_extent_km: float
    across_track_extent_km: float

    def __post_init__(self):
        if not (self.along_track_extent_km > 0 and self.across_track_extent_km > 0):
            raise ValueError("footprint extents must be > 0")


def _check_look_angle(look_angle_deg: float) -> None:
    if not math.isfinite(look_angle_deg) or look_angle_deg < 0 or look_angle_deg >= 90:
        raise GeometryError(f"look angle must be in [0, 90) deg, got {look_angle_deg!r}")


def lead_time(orbit: OrbitConfig, look_angle_deg: float) -> LookaheadGeometry:
    """Solve the spacecraft / Earth-centre / target triangle.

    With ``sin(rho) = Re / (Re + h)`` the elevation at the target is
    ``eps = acos(sin(eta) / sin(rho))`` and the Earth central angle is
    ``lam = 90 deg - eta - eps``.  The ground arc ``Re * lam`` is covered at
    the ground speed, giving the time until the target passes nadir.
    """
    _check_look_angle(look_angle_deg)
    sin_rho = orbit.earth_radius_km / (orbit.earth_radius_km + orbit.altitude_km)
    eta = math.radians(look_angle_deg)
    sin_eta = math.sin(eta)
    if sin_eta > sin_rho:
        raise GeometryError(
            f"look angle {look_angle_deg} deg points above the horizon "
            f"({orbit.angular_radius_deg:.3f} deg)"
        )
    if look_angle_deg > orbit.angular_radius_deg - HORIZON_MARGIN_DEG:
        raise GeometryError(
            f"look angle {look_angle_deg} deg is within {HORIZON_MARGIN_DEG} deg "
            f"of the horizon ({orbit.angular_radius_deg:.3f} deg)"
        )
    elevation = math.acos(min(1.0, sin_eta / sin_rho))
    central = max(0.0, math.pi / 2 - eta - elevation)
    distance = orbit.earth_radius_km * central
    return LookaheadGeometry(
        look_angle_deg=look_angle_deg,
        central_angle_rad=central,
        ground_distance_km=distance,
        lead_time_s=distance / orbit.ground_speed_km_s,
    )


def flat_earth_lead_time(orbit: OrbitConfig, look_angle_deg: float) -> float:
    """``h * tan(eta) / v``: the flat-ground cross-check model."""
    _check_look_angle(look_angle_deg)
    return orbit.altitude_km * math.tan(math.radians(look_angle_deg)) / orbit.ground_speed_km_s


def footprint_at(
    orbit: OrbitConfig,
    along_track_pos_km: float,
    pointing_across_track_deg: float,
    sensor_fov_deg: float,
    along_fov_deg: float | None = None,
) -> GroundFootprint:
    """Flat-Earth projection of a sensor field of view.

    The footprint is centred on the boresight intersection
    ``h * tan(pointing)``; its across-track extent spans the projected FOV
    edges.  ``along_fov_deg`` defaults to the across-track FOV (square
    detector).
    """
    if along_fov_deg is None:
        along_fov_deg = sensor_fov_deg
    if sensor_fov_deg <= 0 or along_fov_deg <= 0:
        raise GeometryError("sensor FOV must be > 0")
    half = sensor_fov_deg / 2.0
    if abs(pointing_across_track_deg) + half >= 90 or along_fov_deg / 2.0 >= 90:
        raise GeometryError(
            f"pointing {pointing_across_track_deg} deg with FOV {sensor_fov_deg} deg "
            "does not intersect the ground"
        )
    h = orbit.altitude_km
    p = math.radians(pointing_across_track_deg)
    lo = h * math.tan(p - math.radians(half))
    hi = h * math.tan(p + math.radians(half))
    return GroundFootprint(
        along_track_center_km=along_track_pos_km,
        across_track_center_km=h * math.tan(p),
        along_track_extent_km=2.0 * h * math.tan(math.radians(along_fov_deg / 2.0)),
        across_track_extent_km=hi - lo,
    )

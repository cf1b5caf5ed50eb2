import math

import pytest
from hypothesis import given, strategies as st

from dtsim.geometry import (
    GeometryError,
    OrbitConfig,
    flat_earth_lead_time,
    footprint_at,
    lead_time,
)
from oracles import lead_time_by_ray_march

ORBIT = OrbitConfig(altitude_km=500.0, ground_speed_km_s=7.5)

# Frozen from the ray-march oracle (bisection on the look ray / sphere intersection).
ORACLE_LEAD_S = {
    40.0: 57.623501829109955,
    45.0: 69.59367425657055,
    50.0: 84.60732222895587,
}


@pytest.mark.parametrize("angle,expected", sorted(ORACLE_LEAD_S.items()))
def test_lead_time_matches_ray_march(angle, expected):
    assert lead_time(ORBIT, angle).lead_time_s == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("angle,rough", [(45.0, 69.3), (40.0, 57.4), (50.0, 84.7)])
def test_lead_time_near_quoted_approximations(angle, rough):
    assert lead_time(ORBIT, angle).lead_time_s == pytest.approx(rough, rel=0.005)


def test_nadir_has_zero_lead():
    g = lead_time(ORBIT, 0.0)
    assert g.lead_time_s == 0 and g.central_angle_rad == 0


@given(st.floats(0.0, 60.0))
def test_oracle_agreement_over_angles(angle):
    expected = lead_time_by_ray_march(500.0, 7.5, angle)
    assert lead_time(ORBIT, angle).lead_time_s == pytest.approx(expected, rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("angle", [90.0, 95.0, -1.0, math.nan, 68.5, 67.6])
def test_rejects_bad_or_near_horizon_angles(angle):
    with pytest.raises(GeometryError):
        lead_time(ORBIT, angle)


def test_horizon_is_about_68_degrees_at_500_km():
    assert ORBIT.angular_radius_deg == pytest.approx(68.0071, abs=1e-4)
    lead_time(ORBIT, 67.4)


def test_flat_earth_values():
    assert flat_earth_lead_time(ORBIT, 45.0) == pytest.approx(500 / 7.5, rel=1e-15)
    assert flat_earth_lead_time(ORBIT, 0.0) == 0.0
    assert flat_earth_lead_time(ORBIT, 50.0) == pytest.approx(79.45023950628, rel=1e-11)


@given(st.floats(0.5, 66.0), st.floats(0.5, 66.0))
def test_spherical_exceeds_flat_and_both_increase(a, b):
    lo, hi = sorted((a, b))
    assert lead_time(ORBIT, lo).lead_time_s >= flat_earth_lead_time(ORBIT, lo)
    if hi - lo > 1e-9:
        assert lead_time(ORBIT, hi).lead_time_s > lead_time(ORBIT, lo).lead_time_s
        assert flat_earth_lead_time(ORBIT, hi) > flat_earth_lead_time(ORBIT, lo)


@given(st.floats(0.0, 66.0), st.floats(0.5, 20.0))
def test_lead_time_inverse_in_speed(angle, speed):
    slow = lead_time(OrbitConfig(500.0, speed), angle).lead_time_s
    fast = lead_time(OrbitConfig(500.0, 2 * speed), angle).lead_time_s
    assert fast == slow / 2


@given(st.floats(0.0, 66.0))
def test_round_trip_consistency(angle):
    g = lead_time(ORBIT, angle)
    assert g.ground_distance_km == pytest.approx(ORBIT.earth_radius_km * g.central_angle_rad, rel=1e-12, abs=0)
    assert g.lead_time_s == pytest.approx(g.ground_distance_km / ORBIT.ground_speed_km_s, rel=1e-12, abs=0)


def test_orbit_validation():
    with pytest.raises(ValueError):
        OrbitConfig(altitude_km=0)
    with pytest.raises(ValueError):
        OrbitConfig(ground_speed_km_s=-1)


def test_footprint_nadir_symmetric():
    fp = footprint_at(ORBIT, 12.0, 0.0, 1.0)
    assert fp.along_track_center_km == 12.0
    assert fp.across_track_center_km == 0.0
    assert fp.across_track_extent_km == pytest.approx(2 * 500 * math.tan(math.radians(0.5)))


def test_footprint_offset_and_mirror():
    fp = footprint_at(ORBIT, 0.0, 10.0, 1e-6)
    assert fp.across_track_center_km == pytest.approx(88.1634903542, rel=1e-10)
    mirror = footprint_at(ORBIT, 0.0, -10.0, 1e-6)
    assert mirror.across_track_center_km == -fp.across_track_center_km
    assert mirror.across_track_extent_km == pytest.approx(fp.across_track_extent_km, rel=1e-12)


def test_footprint_rejects_out_of_range_pointing():
    with pytest.raises(GeometryError):
        footprint_at(ORBIT, 0.0, 85.0, 12.0)

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dtsim.geometry import GroundFootprint
from dtsim.scene import SceneRaster
from dtsim.sensor import (
    CaptureRequest,
    NoCoverageError,
    ReadoutModel,
    capture,
    crop_window,
    footprint_of,
    full_frame_readout_time,
    readout_time,
)


def make_scene(bands=4, h=100, w=100, gsd=0.5):
    rng = np.random.default_rng(0)
    return SceneRaster(rng.random((bands, h, w)), gsd_km=gsd, origin_km=(10.0, -w * gsd / 2))


def test_full_capture_is_identity():
    scene = make_scene()
    out = capture(scene, CaptureRequest(footprint_of(scene)))
    assert np.array_equal(out.values, scene.values)
    assert out.origin_km == scene.origin_km and out.gsd_km == scene.gsd_km


def test_decimation_halves_each_axis():
    scene = make_scene()
    out = capture(scene, CaptureRequest(footprint_of(scene), decimation=2))
    assert (out.height, out.width) == (50, 50)
    assert out.gsd_km == 1.0


@given(st.integers(1, 40), st.integers(1, 40), st.integers(1, 9))
def test_output_shape_is_ceil(h, w, k):
    scene = make_scene(1, h, w)
    out = capture(scene, CaptureRequest(footprint_of(scene), decimation=k))
    assert (out.height, out.width) == (math.ceil(h / k), math.ceil(w / k))


def test_band_subset_index_mapping():
    scene = make_scene()
    # along [25, 45] km -> rows 30..69; across [-15, 15] km -> cols 20..79
    fp = GroundFootprint(35.0, 0.0, 20.0, 30.0)
    out = capture(scene, CaptureRequest(fp, decimation=3, band_subset=(3,)))
    r0, r1, c0, c1 = crop_window(scene, fp)
    assert (r0, r1, c0, c1) == (30, 70, 20, 80)
    # index-mapping oracle: output (i, j) is scene (r0 + 3i, c0 + 3j) in band 3
    for i in range(out.height):
        for j in range(out.width):
            assert out.values[0, i, j] == scene.values[3, r0 + 3 * i, c0 + 3 * j]
    assert out.bands == 1


def test_samples_come_verbatim_from_scene():
    scene = make_scene()
    fp = GroundFootprint(30.0, 3.3, 17.1, 9.9)
    out = capture(scene, CaptureRequest(fp, decimation=2, band_subset=(2, 0)))
    pool = set(scene.values.ravel().tolist())
    assert set(out.values.ravel().tolist()) <= pool


def test_no_overlap_raises():
    scene = make_scene()
    with pytest.raises(NoCoverageError):
        capture(scene, CaptureRequest(GroundFootprint(500.0, 0.0, 5.0, 5.0)))


@pytest.mark.parametrize(
    "kwargs",
    [dict(decimation=0), dict(decimation=1.5), dict(band_subset=()), dict(band_subset=(1, 1)), dict(band_subset=(-1,))],
)
def test_request_validation(kwargs):
    with pytest.raises(ValueError):
        CaptureRequest(GroundFootprint(0, 0, 1, 1), **kwargs)


def test_band_out_of_range():
    scene = make_scene(bands=2)
    with pytest.raises(ValueError):
        capture(scene, CaptureRequest(footprint_of(scene), band_subset=(2,)))


def test_smear_flag_accepted():
    scene = make_scene()
    out = capture(scene, CaptureRequest(footprint_of(scene), smear=True))
    assert np.array_equal(out.values, scene.values)


def test_readout_examples():
    model = ReadoutModel(2, 8_000_000, 0.5)
    assert readout_time(0, 4, model) == 0.5
    assert readout_time(1_000_000, 4, model) == pytest.approx(1.5, abs=1e-15)


def test_decimation_cuts_pixel_term_by_k_squared():
    pixel_term_only = ReadoutModel(fixed_overhead_s=0.0)
    for k in (2, 4, 8):
        full = full_frame_readout_time(1, 4, pixel_term_only)
        dec = full_frame_readout_time(k, 4, pixel_term_only)
        assert full / dec == k * k


def test_readout_strictly_decreasing():
    times = [full_frame_readout_time(k) for k in range(1, 65)]
    assert all(a > b for a, b in zip(times, times[1:]))
    by_bands = [full_frame_readout_time(1, b) for b in (4, 3, 2, 1)]
    assert all(a > b for a, b in zip(by_bands, by_bands[1:]))


def test_readout_model_validation():
    with pytest.raises(ValueError):
        ReadoutModel(bytes_per_sample=0)
    with pytest.raises(ValueError):
        ReadoutModel(fixed_overhead_s=-1)
    with pytest.raises(ValueError):
        readout_time(-1, 4)

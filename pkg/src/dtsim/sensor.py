"""Lookahead / nadir capture and instrument readout timing.

Readout defaults are fictional placeholders (the real instrument's rates
are not public); they are sized so that a full detector frame takes well
over ten seconds to transfer while a decimated one fits in a couple.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import GroundFootprint
from .scene import SceneRaster

# Fictional full detector frame used for readout comparisons.
FULL_FRAME_WIDTH_PX = 4096
FULL_FRAME_HEIGHT_PX = 4096


class NoCoverageError(ValueError):
    """Requested footprint does not overlap the scene."""


@dataclass(frozen=True)
class CaptureRequest:
    footprint: GroundFootprint
    decimation: int = 1
    band_subset: tuple[int, ...] | None = None  # None: all bands
    smear: bool = False  # accepted but not modelled

    def __post_init__(self):
        if int(self.decimation) != self.decimation or self.decimation < 1:
            raise ValueError(f"decimation must be an integer >= 1, got {self.decimation!r}")
        if self.band_subset is not None:
            subset = tuple(int(b) for b in self.band_subset)
            if not subset:
                raise ValueError("band_subset must be non-empty")
            if len(set(subset)) != len(subset):
                raise ValueError(f"band_subset has duplicates: {subset}")
            if min(subset) < 0:
                raise ValueError(f"band index out of range in {subset}")
            object.__setattr__(self, "band_subset", subset)


@dataclass(frozen=True)
class ReadoutModel:
    bytes_per_sample: float = 2.0
    link_rate_bytes_s: float = 8_000_000.0
    fixed_overhead_s: float = 0.5

    def __post_init__(self):
        if not self.bytes_per_sample > 0:
            raise ValueError("bytes_per_sample must be > 0")
        if not self.link_rate_bytes_s > 0:
            raise ValueError("link_rate_bytes_s must be > 0")
        if not self.fixed_overhead_s >= 0:
            raise ValueError("fixed_overhead_s must be >= 0")


def footprint_of(scene: SceneRaster) -> GroundFootprint:
    """Footprint covering the whole scene."""
    return GroundFootprint(
        along_track_center_km=scene.origin_km[0] + scene.height * scene.gsd_km / 2,
        across_track_center_km=scene.origin_km[1] + scene.width * scene.gsd_km / 2,
        along_track_extent_km=scene.height * scene.gsd_km,
        across_track_extent_km=scene.width * scene.gsd_km,
    )


def crop_window(scene: SceneRaster, footprint: GroundFootprint) -> tuple[int, int, int, int]:
    """Half-open ``(row0, row1, col0, col1)`` of pixels whose centres fall in the footprint."""

    def span(centers, mid, extent):
        inside = np.flatnonzero(np.abs(centers - mid) <= extent / 2 + 1e-9)
        if inside.size == 0:
            raise NoCoverageError("footprint does not overlap the scene")
        return int(inside[0]), int(inside[-1]) + 1

    r0, r1 = span(scene.row_centers_km(), footprint.along_track_center_km, footprint.along_track_extent_km)
    c0, c1 = span(scene.col_centers_km(), footprint.across_track_center_km, footprint.across_track_extent_km)
    return r0, r1, c0, c1


def capture(scene: SceneRaster, req: CaptureRequest) -> SceneRaster:
    """Nearest-pixel crop, then keep every k-th pixel from the crop's top-left."""
    bands = req.band_subset if req.band_subset is not None else tuple(range(scene.bands))
    if max(bands) >= scene.bands:
        raise ValueError(f"band_subset {bands} out of range for {scene.bands}-band scene")
    r0, r1, c0, c1 = crop_window(scene, req.footprint)
    k = req.decimation
    values = scene.values[list(bands), r0:r1:k, c0:c1:k]
    return SceneRaster(
        values.copy(),
        gsd_km=scene.gsd_km * k,
        origin_km=(scene.origin_km[0] + r0 * scene.gsd_km, scene.origin_km[1] + c0 * scene.gsd_km),
    )


def decimated_shape(height: int, width: int, decimation: int) -> tuple[int, int]:
    return math.ceil(height / decimation), math.ceil(width / decimation)


def readout_time(pixels: int, bands: int, model: ReadoutModel = ReadoutModel()) -> float:
    """Seconds to move ``pixels * bands`` samples off the instrument."""
    if pixels < 0 or bands < 0:
        raise ValueError("pixel and band counts must be >= 0")
    return pixels * bands * model.bytes_per_sample / model.link_rate_bytes_s + model.fixed_overhead_s


def full_frame_readout_time(decimation: int = 1, bands: int = 4, model: ReadoutModel = ReadoutModel()) -> float:
    h, w = decimated_shape(FULL_FRAME_HEIGHT_PX, FULL_FRAME_WIDTH_PX, decimation)
    return readout_time(h * w, bands, model)

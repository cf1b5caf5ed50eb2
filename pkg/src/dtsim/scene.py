"""Synthetic ground-truth scenes and the ``DTRAST01`` raster format.

Raster layout (all little-endian)::

    offset 0   8 bytes   magic b"DTRAST01"
    offset 8   u32       width
    offset 12  u32       height
    offset 16  u32       bands
    offset 20  f32[...]  samples, band-sequential, row-major within a band

Rows run along-track and columns across-track.  Geolocation (GSD and
origin) is not stored in the raster; it travels in the JSON Lines
ground-truth sidecar.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import SplitMix64

MAGIC = b"DTRAST01"
_HEADER = struct.Struct("<8sIII")
BAND_NAMES = ("red", "green", "blue", "nir")
RED, GREEN, BLUE, NIR = range(4)


class RasterFormatError(ValueError):
    """Malformed raster file."""


class BadMagicError(RasterFormatError):
    pass


class TruncatedRasterError(RasterFormatError):
    pass


class NonFiniteSampleError(RasterFormatError):
    pass


@dataclass
class SceneRaster:
    """Gridded multi-band samples in [0, 1], shape ``(bands, height, width)``."""

    values: np.ndarray
    gsd_km: float = 1.0
    origin_km: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float32)
        if values.ndim == 2:
            values = values[np.newaxis]
        if values.ndim != 3 or min(values.shape) < 1:
            raise ValueError(f"raster must be (bands, height, width) with all >= 1, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("raster samples must be finite")
        if values.min() < 0 or values.max() > 1:
            raise ValueError("raster samples must lie in [0, 1]")
        if not (math.isfinite(self.gsd_km) and self.gsd_km > 0):
            raise ValueError(f"gsd_km must be > 0, got {self.gsd_km!r}")
        self.values = values
        self.origin_km = (float(self.origin_km[0]), float(self.origin_km[1]))

    @property
    def bands(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]

    def row_centers_km(self) -> np.ndarray:
        return self.origin_km[0] + (np.arange(self.height) + 0.5) * self.gsd_km

    def col_centers_km(self) -> np.ndarray:
        return self.origin_km[1] + (np.arange(self.width) + 0.5) * self.gsd_km

    def digest(self) -> str:
        """Short SHA-256 of the encoded raster, used to tie log records to a scene."""
        return hashlib.sha256(encode_samples(self.values)).hexdigest()[:16]


@dataclass(frozen=True)
class Hotspot:
    row: int
    col: int
    sigma_px: float
    peak: float


@dataclass
class SyntheticScene:
    """A rendered raster plus whatever ground truth its generator knows."""

    raster: SceneRaster
    cloud_opacity: SceneRaster | None = None
    hotspots: list[Hotspot] = field(default_factory=list)
    abundances: np.ndarray | None = None
    endmember_names: tuple[str, ...] = ()


@dataclass
class EndmemberLibrary:
    names: tuple[str, ...]
    spectra: np.ndarray  # (n_endmembers, bands)

    def __post_init__(self):
        spectra = np.atleast_2d(np.asarray(self.spectra, dtype=np.float64))
        self.names = tuple(self.names)
        if spectra.shape[0] < 1:
            raise ValueError("library needs at least one endmember")
        if len(self.names) != spectra.shape[0]:
            raise ValueError("one name per endmember spectrum required")
        if not np.all(np.isfinite(spectra)) or spectra.min() < 0 or spectra.max() > 1:
            raise ValueError("endmember spectra must lie in [0, 1]")
        if np.any(np.all(spectra == 0, axis=1)):
            raise ValueError("endmember spectra must be non-zero")
        if len({row.tobytes() for row in spectra}) != spectra.shape[0]:
            raise ValueError("endmember spectra must be pairwise distinct")
        self.spectra = spectra

    @property
    def bands(self) -> int:
        return self.spectra.shape[1]

    @property
    def matrix(self) -> np.ndarray:
        """Endmember matrix with one column per material, shape (bands, n)."""
        return self.spectra.T

    def __len__(self):
        return self.spectra.shape[0]

    @classmethod
    def from_json(cls, path) -> EndmemberLibrary:
        doc = json.loads(Path(path).read_text())
        return cls(names=doc["names"], spectra=np.asarray(doc["spectra"], dtype=np.float64))


def _centered_origin(width: int, gsd_km: float) -> tuple[float, float]:
    return (0.0, -width * gsd_km / 2.0)


def _check_finite(**params) -> None:
    for name, value in params.items():
        if not math.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value!r}")


def _box_filter(a: np.ndarray, width: int) -> np.ndarray:
    """Separable moving average with reflected edges (cumsum based, order fixed)."""
    if width <= 1:
        return a.copy()
    lo = width // 2
    hi = width - 1 - lo
    out = a
    for axis in (0, 1):
        pad = [(0, 0), (0, 0)]
        pad[axis] = (lo, hi)
        padded = np.pad(out, pad, mode="symmetric")
        c = np.cumsum(padded, axis=axis)
        zero_shape = list(c.shape)
        zero_shape[axis] = 1
        c = np.concatenate([np.zeros(zero_shape), c], axis=axis)
        n = out.shape[axis]
        upper = np.take(c, np.arange(width, width + n), axis=axis)
        lower = np.take(c, np.arange(0, n), axis=axis)
        out = (upper - lower) / width
    return out


def generate_cloud_field(
    seed: int,
    width: int,
    height: int,
    coverage: float,
    correlation_px: float,
    gsd_km: float = 1.0,
) -> SceneRaster:
    """Single-band cloud opacity with an exactly realized cloudy fraction.

    White uniform noise is box filtered over ``correlation_px`` pixels and
    ranked (stable sort, so ties go to the lower pixel index).  The top
    ``round(coverage * W * H)`` ranks are cloudy with opacity in (0.5, 1];
    the rest are clear with opacity in [0, 0.5).
    """
    _check_finite(coverage=coverage, correlation_px=correlation_px, gsd_km=gsd_km)
    if not 0 <= coverage <= 1:
        raise ValueError(f"coverage must be in [0, 1], got {coverage}")
    if correlation_px < 1:
        raise ValueError(f"correlation_px must be >= 1, got {correlation_px}")
    if width < 1 or height < 1:
        raise ValueError("width and height must be >= 1")
    n = width * height
    noise = SplitMix64(seed).uniform_block(n).reshape(height, width)
    smooth = _box_filter(noise, int(round(correlation_px)))
    order = np.argsort(smooth.ravel(), kind="stable")
    n_cloudy = int(round(coverage * n))
    n_clear = n - n_cloudy
    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = np.arange(n)
    opacity = np.empty(n, dtype=np.float64)
    clear = ranks < n_clear
    if n_clear:
        opacity[clear] = 0.5 * ranks[clear] / n_clear
    if n_cloudy:
        opacity[~clear] = 0.5 + 0.5 * (ranks[~clear] - n_clear + 1) / n_cloudy
    return SceneRaster(
        opacity.reshape(1, height, width),
        gsd_km=gsd_km,
        origin_km=_centered_origin(width, gsd_km),
    )


# Ground is a per-pixel mix of two covers whose green band moves against red
# and blue, so stretched bare ground stays saturated and never reads as cloud.
VEGETATION_REFLECTANCE = (0.03, 0.10, 0.03, 0.40)
SOIL_REFLECTANCE = (0.15, 0.06, 0.08, 0.25)
GROUND_NOISE = 0.05
CLOUD_REFLECTANCE = (0.95, 0.95, 0.95, 0.90)


def render_cloud_scene(cloud_field: SceneRaster, seed: int) -> SyntheticScene:
    """Render a cloud opacity field bright and white over dark textured ground.

    Ground mixes vegetation and soil with a uniform per-pixel soil share,
    then gets +/-5 % per-band jitter.  Cloudy pixels (opacity > 0.5) blend
    toward white with weight ``0.8 + 0.4 * (opacity - 0.5)``; clear pixels
    show bare ground.
    """
    _, h, w = cloud_field.values.shape
    draws = SplitMix64(seed).uniform_block(5 * h * w).reshape(5, h, w)
    soil = draws[0]
    veg_r, soil_r = (np.asarray(v)[:, None, None] for v in (VEGETATION_REFLECTANCE, SOIL_REFLECTANCE))
    ground = ((1 - soil) * veg_r + soil * soil_r) * (1 - GROUND_NOISE + 2 * GROUND_NOISE * draws[1:])
    opacity = cloud_field.values[0].astype(np.float64)
    alpha = np.where(opacity > 0.5, 0.8 + 0.4 * (opacity - 0.5), 0.0)
    cloud = np.asarray(CLOUD_REFLECTANCE)[:, None, None]
    values = np.clip((1 - alpha) * ground + alpha * cloud, 0.0, 1.0)
    raster = SceneRaster(values, gsd_km=cloud_field.gsd_km, origin_km=cloud_field.origin_km)
    return SyntheticScene(raster=raster, cloud_opacity=cloud_field)


def generate_thermal_scene(
    seed: int,
    width: int,
    height: int,
    n_hotspots: int,
    hotspot_sigma_px: float,
    background_level: float,
    peak: float = 0.9,
    min_separation_px: float = 0.0,
    gsd_km: float = 1.0,
) -> SyntheticScene:
    """Uniform 4-band background plus Gaussian hotspots in the NIR band.

    Centres are integer pixels drawn row then column from the seeded stream;
    with ``min_separation_px`` draws closer than that to an accepted centre
    are rejected and redrawn.
    """
    _check_finite(hotspot_sigma_px=hotspot_sigma_px, background_level=background_level, peak=peak)
    if n_hotspots < 0:
        raise ValueError("n_hotspots must be >= 0")
    if not 0 <= background_level <= 1:
        raise ValueError("background_level must be in [0, 1]")
    if hotspot_sigma_px <= 0:
        raise ValueError("hotspot_sigma_px must be > 0")
    if peak < 0.9:
        raise ValueError("hotspot peak must be >= 0.9")
    rng = SplitMix64(seed)
    hotspots: list[Hotspot] = []
    attempts = 0
    while len(hotspots) < n_hotspots:
        attempts += 1
        if attempts > 1000 * max(1, n_hotspots):
            raise ValueError("cannot place hotspots with the requested separation")
        row = int(rng.random() * height)
        col = int(rng.random() * width)
        if any(math.hypot(row - s.row, col - s.col) < min_separation_px for s in hotspots):
            continue
        hotspots.append(Hotspot(row, col, float(hotspot_sigma_px), float(peak)))

    values = np.full((4, height, width), float(background_level))
    rows = np.arange(height)[:, None]
    cols = np.arange(width)[None, :]
    for spot in hotspots:
        d2 = (rows - spot.row) ** 2 + (cols - spot.col) ** 2
        values[NIR] += spot.peak * np.exp(-d2 / (2.0 * spot.sigma_px**2))
    raster = SceneRaster(
        np.clip(values, 0.0, 1.0), gsd_km=gsd_km, origin_km=_centered_origin(width, gsd_km)
    )
    return SyntheticScene(raster=raster, hotspots=hotspots)


def generate_spectral_scene(
    seed: int,
    width: int,
    height: int,
    library: EndmemberLibrary,
    abundance_map: np.ndarray,
    noise_sigma: float,
    gsd_km: float = 1.0,
) -> SyntheticScene:
    """Linear mixtures ``E @ a`` plus seeded Gaussian noise, clipped to [0, 1].

    ``abundance_map`` has shape ``(n_endmembers, height, width)``.
    """
    a = np.asarray(abundance_map, dtype=np.float64)
    if a.shape != (len(library), height, width):
        raise ValueError(
            f"abundance_map shape {a.shape} does not match "
            f"({len(library)}, {height}, {width})"
        )
    if np.any(a < 0) or np.any(a.sum(axis=0) > 1 + 1e-12):
        raise ValueError("abundances must be nonnegative with per-pixel sum <= 1")
    if not (math.isfinite(noise_sigma) and noise_sigma >= 0):
        raise ValueError("noise_sigma must be >= 0")
    mixed = np.tensordot(library.matrix, a, axes=(1, 0))
    if noise_sigma > 0:
        noise = SplitMix64(seed).normal_block(mixed.size).reshape(mixed.shape)
        mixed = mixed + noise_sigma * noise
    raster = SceneRaster(
        np.clip(mixed, 0.0, 1.0), gsd_km=gsd_km, origin_km=_centered_origin(width, gsd_km)
    )
    return SyntheticScene(raster=raster, abundances=a, endmember_names=library.names)


# -- raster file format -----------------------------------------------------

def encode_samples(values: np.ndarray) -> bytes:
    values = np.asarray(values)
    if values.ndim == 2:
        values = values[np.newaxis]
    bands, height, width = values.shape
    return _HEADER.pack(MAGIC, width, height, bands) + values.astype("<f4").tobytes()


def decode_samples(data: bytes) -> np.ndarray:
    """Parse raster bytes into a float32 array of shape (bands, height, width)."""
    if len(data) < len(MAGIC) or data[: len(MAGIC)] != MAGIC:
        raise BadMagicError("not a DTRAST01 raster (bad magic)")
    if len(data) < _HEADER.size:
        raise TruncatedRasterError(f"header truncated at {len(data)} bytes")
    _, width, height, bands = _HEADER.unpack_from(data)
    expected = _HEADER.size + 4 * width * height * bands
    if len(data) < expected:
        raise TruncatedRasterError(f"payload truncated: {len(data)} of {expected} bytes")
    if len(data) > expected:
        raise RasterFormatError(f"{len(data) - expected} trailing bytes after payload")
    values = np.frombuffer(data, dtype="<f4", offset=_HEADER.size)
    values = values.reshape(bands, height, width).astype(np.float32)
    if not np.all(np.isfinite(values)):
        raise NonFiniteSampleError("raster contains non-finite samples")
    return values


def write_array(values: np.ndarray, path) -> None:
    """Write any finite array (masks, score maps) in raster layout."""
    if not np.all(np.isfinite(values)):
        raise NonFiniteSampleError("refusing to write non-finite samples")
    Path(path).write_bytes(encode_samples(values))


def read_array(path) -> np.ndarray:
    return decode_samples(Path(path).read_bytes())


def write_raster(raster: SceneRaster, path) -> None:
    write_array(raster.values, path)


def read_raster(path, gsd_km: float = 1.0, origin_km: tuple[float, float] | None = None) -> SceneRaster:
    values = read_array(path)
    if origin_km is None:
        origin_km = _centered_origin(values.shape[2], gsd_km)
    return SceneRaster(values, gsd_km=gsd_km, origin_km=origin_km)


# -- ground-truth sidecar ---------------------------------------------------

def truth_records(scene: SyntheticScene) -> list[dict]:
    r = scene.raster
    records = [
        {
            "kind": "raster",
            "width": r.width,
            "height": r.height,
            "bands": r.bands,
            "gsd_km": r.gsd_km,
            "origin_km": list(r.origin_km),
        }
    ]
    if scene.cloud_opacity is not None:
        cloudy = scene.cloud_opacity.values[0] > 0.5
        records.append({"kind": "cloud_field", "cloud_fraction": float(cloudy.mean())})
    for i, spot in enumerate(scene.hotspots):
        records.append(
            {"kind": "hotspot", "id": i, "row": spot.row, "col": spot.col,
             "sigma_px": spot.sigma_px, "peak": spot.peak}
        )
    if scene.abundances is not None:
        for name, plane in zip(scene.endmember_names, scene.abundances):
            records.append({"kind": "abundance", "endmember": name, "values": plane.tolist()})
    return records


def write_truth(scene: SyntheticScene, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in truth_records(scene):
            fh.write(json.dumps(rec) + "\n")


def read_truth(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]

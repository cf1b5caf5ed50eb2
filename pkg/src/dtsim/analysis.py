"""Onboard image-analysis kernels.

Images are float arrays shaped ``(bands, height, width)`` with band order
red, green, blue, NIR.  Thresholds default to untuned surrogate values;
nothing here is calibrated against flight data.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import ndimage

from .scene import BLUE, GREEN, NIR, RED

T_BRIGHT = 0.6
T_SAT = 0.2
T_HOT = 0.8
T_RATIO = 2.0
SAM_THRESHOLD_RAD = 0.15
COVARIANCE_EPS = 1e-6
RATIO_FLOOR = 1e-6


class BandCountError(ValueError):
    pass


class DegenerateTargetError(ValueError):
    """Target spectrum coincides with the background mean."""


def _as_image(image) -> np.ndarray:
    a = np.asarray(image, dtype=np.float64)
    if a.ndim == 2:
        a = a[np.newaxis]
    if a.ndim != 3:
        raise ValueError(f"image must be (bands, height, width), got shape {a.shape}")
    return a


def _require_bands(image: np.ndarray, n: int = 4) -> None:
    if image.shape[0] != n:
        raise BandCountError(f"expected {n} bands (R, G, B, NIR), got {image.shape[0]}")


# -- preprocessing -----------------------------------------------------------

def stretch(image, p_low: float = 0.0, p_high: float = 100.0) -> np.ndarray:
    """Per-band affine map of the [p_low, p_high] percentile range onto [0, 1].

    Values outside the range are clipped.  A band whose percentile range
    collapses to a point maps to all zeros.
    """
    if not 0 <= p_low < p_high <= 100:
        raise ValueError(f"need 0 <= p_low < p_high <= 100, got ({p_low}, {p_high})")
    a = _as_image(image)
    out = np.zeros_like(a)
    for b in range(a.shape[0]):
        lo, hi = np.percentile(a[b], [p_low, p_high])
        if hi > lo:
            out[b] = np.clip((a[b] - lo) / (hi - lo), 0.0, 1.0)
    return out


# -- cloud masking -----------------------------------------------------------

@dataclass
class CloudMask:
    cloudy: np.ndarray
    width: int = field(init=False)
    height: int = field(init=False)
    cloud_fraction: float = field(init=False)

    def __post_init__(self):
        self.cloudy = np.asarray(self.cloudy, dtype=bool)
        self.height, self.width = self.cloudy.shape
        self.cloud_fraction = int(self.cloudy.sum()) / self.cloudy.size


def cloud_mask(image, t_bright: float = T_BRIGHT, t_sat: float = T_SAT) -> CloudMask:
    """Flag bright, colourless pixels.

    Brightness is the mean of R, G, B; saturation is ``(max - min) / max``
    over R, G, B (0 where max is 0).
    """
    a = _as_image(image)
    _require_bands(a)
    rgb = a[[RED, GREEN, BLUE]]
    brightness = rgb.mean(axis=0)
    top = rgb.max(axis=0)
    spread = top - rgb.min(axis=0)
    saturation = np.divide(spread, top, out=np.zeros_like(top), where=top > 0)
    return CloudMask((brightness > t_bright) & (saturation < t_sat))


# -- thermal anomalies -------------------------------------------------------

@dataclass(frozen=True)
class ThermalDetection:
    row: int
    col: int
    score: float


def thermal_anomalies(image, t_hot: float = T_HOT, t_ratio: float = T_RATIO) -> list[ThermalDetection]:
    """Hot NIR pixels relative to red, merged by 4-connectivity.

    A pixel fires when ``NIR > t_hot`` and ``NIR / max(red, 1e-6) > t_ratio``.
    Each connected group reports its highest-ratio pixel (lowest row-major
    index on ties).  Results are sorted by (row, col).
    """
    a = _as_image(image)
    _require_bands(a)
    nir = a[NIR]
    ratio = nir / np.maximum(a[RED], RATIO_FLOOR)
    hits = (nir > t_hot) & (ratio > t_ratio)
    labels, n = ndimage.label(hits)
    detections = []
    for k, window in enumerate(ndimage.find_objects(labels), start=1):
        member = labels[window] == k
        scores = np.where(member, ratio[window], -np.inf)
        r, c = np.unravel_index(int(np.argmax(scores)), scores.shape)
        row, col = window[0].start + r, window[1].start + c
        detections.append(ThermalDetection(int(row), int(col), float(ratio[row, col])))
    detections.sort(key=lambda d: (d.row, d.col))
    return detections


# -- spectral angle ----------------------------------------------------------

def spectral_angle(x, r) -> float:
    x = np.asarray(x, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    nx, nr = np.linalg.norm(x), np.linalg.norm(r)
    if nx == 0 or nr == 0:
        raise ValueError("spectral angle undefined for a zero vector")
    cos = float(np.dot(x, r) / (nx * nr))
    return math.acos(min(1.0, max(-1.0, cos)))


def spectral_angle_map(image, r) -> np.ndarray:
    """Per-pixel spectral angle; all-zero pixels get pi/2."""
    a = _as_image(image)
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (a.shape[0],):
        raise BandCountError(f"reference has {r.size} bands, image has {a.shape[0]}")
    nr = np.linalg.norm(r)
    if nr == 0:
        raise ValueError("spectral angle undefined for a zero reference")
    dots = np.tensordot(r, a, axes=(0, 0))
    norms = np.linalg.norm(a, axis=0)
    cos = np.divide(dots, norms * nr, out=np.zeros_like(dots), where=norms > 0)
    return np.arccos(np.clip(cos, -1.0, 1.0))


# -- matched filter ----------------------------------------------------------

@dataclass
class BackgroundStats:
    mean: np.ndarray
    covariance: np.ndarray
    eps: float = COVARIANCE_EPS

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.covariance = np.asarray(self.covariance, dtype=np.float64)
        n = self.mean.size
        if self.covariance.shape != (n, n):
            raise ValueError("covariance must be bands x bands")
        if not np.allclose(self.covariance, self.covariance.T, rtol=0, atol=1e-12):
            raise ValueError("covariance must be symmetric")

    def regularized(self) -> np.ndarray:
        return self.covariance + self.eps * np.eye(self.mean.size)

    @classmethod
    def estimate(cls, pixels, eps: float = COVARIANCE_EPS) -> BackgroundStats:
        """Sample mean and (N - 1)-normalized covariance of ``(N, bands)`` pixels."""
        pixels = np.asarray(pixels, dtype=np.float64)
        mean = pixels.mean(axis=0)
        if pixels.shape[0] > 1:
            centred = pixels - mean
            cov = centred.T @ centred / (pixels.shape[0] - 1)
            cov = 0.5 * (cov + cov.T)
        else:
            cov = np.zeros((pixels.shape[1], pixels.shape[1]))
        return cls(mean, cov, eps)


def _pixels(image: np.ndarray) -> np.ndarray:
    return image.reshape(image.shape[0], -1).T


def matched_filter_pixels(pixels, target, stats: BackgroundStats) -> np.ndarray:
    """Normalized matched-filter score for ``(N, bands)`` pixels.

    ``(x - mu)^T C^-1 (r - mu) / ((r - mu)^T C^-1 (r - mu))`` with
    ``C = Sigma + eps I``, so the target scores 1 and the mean scores 0.
    """
    pixels = np.atleast_2d(np.asarray(pixels, dtype=np.float64))
    d = np.asarray(target, dtype=np.float64) - stats.mean
    if not np.any(d):
        raise DegenerateTargetError("target equals the background mean")
    w = np.linalg.solve(stats.regularized(), d)
    denom = float(d @ w)
    if not denom > 0:
        raise DegenerateTargetError("target has zero whitened distance from the background")
    return ((pixels - stats.mean) @ w) / denom


def matched_filter(image, target, stats: BackgroundStats | None = None) -> np.ndarray:
    """Matched-filter score map; background statistics default to the image's own."""
    a = _as_image(image)
    px = _pixels(a)
    if stats is None:
        stats = BackgroundStats.estimate(px)
    return matched_filter_pixels(px, target, stats).reshape(a.shape[1:])


def score_image(image, scorer: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Apply any ``(N, bands) -> (N,)`` pixel scorer and reshape to a map."""
    a = _as_image(image)
    return np.asarray(scorer(_pixels(a)), dtype=np.float64).reshape(a.shape[1:])


# -- unmixing ----------------------------------------------------------------

def nnls(A, b, tol: float | None = None, max_iter: int | None = None) -> tuple[np.ndarray, float]:
    """Lawson-Hanson active-set solve of ``min ||A x - b||`` with ``x >= 0``.

    Returns ``(x, ||A x - b||)``.  Pivot ties (entering and leaving
    variables alike) go to the lowest index.  Sub-problems use the
    minimum-norm least-squares solution, so rank-deficient passive sets
    are tolerated.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    m, n = A.shape
    if tol is None:
        tol = 10 * max(m, n) * np.finfo(float).eps * max(1.0, np.abs(A).sum(axis=0).max()) * max(1.0, np.abs(b).max())
    if max_iter is None:
        max_iter = 3 * n + 10

    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    w = A.T @ (b - A @ x)
    for _ in range(max_iter):
        candidates = np.where(~passive, w, -np.inf)
        j = int(np.argmax(candidates))
        if passive.all() or candidates[j] <= tol:
            break
        passive[j] = True
        while True:
            z = np.zeros(n)
            cols = np.flatnonzero(passive)
            z[cols] = np.linalg.lstsq(A[:, cols], b, rcond=None)[0]
            if np.all(z[cols] > 0):
                x = z
                break
            blocked = passive & (z <= 0)
            ratios = np.full(n, np.inf)
            ratios[blocked] = x[blocked] / (x[blocked] - z[blocked])
            leave = int(np.argmin(ratios))
            x = x + ratios[leave] * (z - x)
            x[leave] = 0.0
            passive &= x > 0
            x[~passive] = 0.0
        w = A.T @ (b - A @ x)
    return x, float(np.linalg.norm(A @ x - b))


@dataclass(frozen=True)
class UnmixResult:
    abundances: np.ndarray
    residual: float


def unmix(x, library) -> UnmixResult:
    """Non-negative abundances of ``library`` endmembers in pixel ``x``."""
    E = library.matrix
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (E.shape[0],):
        raise BandCountError(f"pixel has {x.size} bands, library has {E.shape[0]}")
    if E.shape[1] > E.shape[0]:
        warnings.warn(
            f"{E.shape[1]} endmembers for {E.shape[0]} bands: abundances are not unique",
            stacklevel=2,
        )
    a, residual = nnls(E, x)
    return UnmixResult(a, residual)


def unmix_image(image, library) -> np.ndarray:
    """Abundance planes ``(n_endmembers, height, width)``."""
    a = _as_image(image)
    px = _pixels(a)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        planes = np.stack([unmix(p, library).abundances for p in px], axis=1)
    return planes.reshape((len(library),) + a.shape[1:])


# -- products ----------------------------------------------------------------

POLICIES = ("cloud_avoid", "cloud_seek", "thermal_hunt")
POLICY_BANDS = {
    "cloud_avoid": (RED, GREEN, BLUE),
    "cloud_seek": (RED, GREEN, BLUE),
    "thermal_hunt": (RED, NIR),
}


@dataclass
class AnalysisProduct:
    """What the lookahead analysis hands to targeting."""

    policy: str
    width: int
    height: int
    gsd_km: float
    origin_km: tuple[float, float]
    cloud_mask: CloudMask | None = None
    detections: list[ThermalDetection] = field(default_factory=list)
    score_map: np.ndarray | None = None


def analyze_lookahead(
    raster,
    policy: str,
    p_low: float = 0.0,
    p_high: float = 100.0,
    t_bright: float = T_BRIGHT,
    t_sat: float = T_SAT,
    t_hot: float = T_HOT,
    t_ratio: float = T_RATIO,
    band_indices: tuple[int, ...] | None = None,
) -> AnalysisProduct:
    """Stretch a captured raster and run the kernel the policy needs.

    ``band_indices`` names the sensor band held by each raster band when
    only a subset was read out; bands that were not read are zero-filled
    and must not be ones the policy's kernel uses.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}; expected one of {POLICIES}")
    img = stretch(raster.values, p_low, p_high)
    if band_indices is not None and tuple(band_indices) != (RED, GREEN, BLUE, NIR):
        missing = set(POLICY_BANDS[policy]) - set(band_indices)
        if missing:
            raise BandCountError(f"policy {policy} needs bands {sorted(missing)} which were not read")
        full = np.zeros((4,) + img.shape[1:])
        full[list(band_indices)] = img
        img = full
    product = AnalysisProduct(
        policy=policy,
        width=raster.width,
        height=raster.height,
        gsd_km=raster.gsd_km,
        origin_km=raster.origin_km,
    )
    if policy == "thermal_hunt":
        product.detections = thermal_anomalies(img, t_hot, t_ratio)
    else:
        product.cloud_mask = cloud_mask(img, t_bright, t_sat)
    return product

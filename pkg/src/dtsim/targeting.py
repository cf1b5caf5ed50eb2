"""Turn a lookahead analysis product into an across-track pointing choice."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .analysis import AnalysisProduct
from .geometry import OrbitConfig


@dataclass(frozen=True)
class TileScore:
    tile_index: int
    across_track_offset_deg: float
    score: float
    cloud_fraction: float | None = None
    col_start: int = 0
    col_stop: int = 0
    reachable: bool = True


@dataclass(frozen=True)
class PointingCommand:
    across_track_deg: float
    along_track_slew_deg: float
    fallback: bool = False
    tile_index: int = -1

    def __post_init__(self):
        if not 40.0 <= self.along_track_slew_deg <= 50.0:
            raise ValueError(
                f"along-track slew must be in [40, 50] deg, got {self.along_track_slew_deg}"
            )


def tile_bounds(width: int, n_tiles: int) -> list[tuple[int, int]]:
    """Column ranges of ``n_tiles`` near-equal across-track strips."""
    edges = [round(i * width / n_tiles) for i in range(n_tiles + 1)]
    return list(zip(edges[:-1], edges[1:]))


def tile_scores(
    product: AnalysisProduct,
    n_tiles: int,
    max_across_track_deg: float,
    orbit: OrbitConfig,
    reachable: Callable[[float], bool] | None = None,
) -> list[TileScore]:
    """Score each across-track strip of the lookahead image.

    cloud_avoid scores ``1 - cloud_fraction``, cloud_seek scores
    ``cloud_fraction`` and thermal_hunt the best detection ratio in the
    strip (0 when empty).  Tiles beyond ``max_across_track_deg`` or
    rejected by ``reachable`` come back with ``reachable=False``.
    """
    if n_tiles < 1 or n_tiles % 2 == 0:
        raise ValueError(f"n_tiles must be odd and >= 1, got {n_tiles}")
    if n_tiles > product.width:
        raise ValueError(f"{n_tiles} tiles do not fit a {product.width}-column image")
    scores = []
    for index, (c0, c1) in enumerate(tile_bounds(product.width, n_tiles)):
        center_km = product.origin_km[1] + (c0 + c1) / 2 * product.gsd_km
        offset = math.degrees(math.atan2(center_km, orbit.altitude_km))
        if n_tiles == 1:
            offset = 0.0
        fraction = None
        if product.policy == "thermal_hunt":
            hits = [d.score for d in product.detections if c0 <= d.col < c1]
            score = max(hits, default=0.0)
        else:
            if product.cloud_mask is None:
                raise ValueError(f"policy {product.policy} needs a cloud mask")
            strip = product.cloud_mask.cloudy[:, c0:c1]
            fraction = int(strip.sum()) / strip.size
            score = 1.0 - fraction if product.policy == "cloud_avoid" else fraction
        ok = abs(offset) <= max_across_track_deg
        if ok and reachable is not None:
            ok = bool(reachable(offset))
        scores.append(TileScore(index, offset, float(score), fraction, c0, c1, ok))
    return scores


def select_target(scores: list[TileScore], policy: str, lookahead_angle_deg: float) -> PointingCommand:
    """Best reachable tile; ties go to the smallest offset, then lowest index.

    Falls back to a nadir command when nothing is reachable or, for
    thermal_hunt, when no tile has a detection.
    """
    candidates = [s for s in scores if s.reachable]
    if not candidates or (policy == "thermal_hunt" and all(s.score <= 0 for s in candidates)):
        return PointingCommand(0.0, lookahead_angle_deg, fallback=True, tile_index=_center(scores))
    best = min(candidates, key=lambda s: (-s.score, abs(s.across_track_offset_deg), s.tile_index))
    return PointingCommand(best.across_track_offset_deg, lookahead_angle_deg, False, best.tile_index)


def _center(scores: list[TileScore]) -> int:
    if not scores:
        return 0
    return int(np.argmin([abs(s.across_track_offset_deg) for s in scores]))

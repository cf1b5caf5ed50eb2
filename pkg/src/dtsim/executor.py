"""One dynamic-targeting cycle: slew timing, phase scheduling, execution.

Times are seconds from the start of the lookahead acquisition.  Analysis
durations come from the configured budget, never from the wall clock, so
that a cycle's schedule is a pure function of its inputs.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

from . import analysis
from .geometry import LookaheadGeometry, OrbitConfig, footprint_at, lead_time
from .scene import SyntheticScene
from .sensor import CaptureRequest, ReadoutModel, capture, crop_window, footprint_of, readout_time
from .targeting import PointingCommand, select_target, tile_bounds, tile_scores


@dataclass(frozen=True)
class SpacecraftAgility:
    max_rate_deg_s: float = 1.0
    max_accel_deg_s2: float = 1.0
    settle_time_s: float = 1.0

    def __post_init__(self):
        if not self.max_rate_deg_s > 0:
            raise ValueError("max_rate_deg_s must be > 0")
        if not self.max_accel_deg_s2 > 0:
            raise ValueError("max_accel_deg_s2 must be > 0")
        if not self.settle_time_s >= 0:
            raise ValueError("settle_time_s must be >= 0")


@dataclass(frozen=True)
class PhaseBudget:
    acquire_s: float = 2.0
    transfer_s: float = 5.0
    analyze_s: float = 5.0
    decide_s: float = 0.5
    nadir_acquire_s: float = 2.0
    nadir_analyze_s: float = 5.0
    downlink_s: float = 3.0

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")


def _rest_to_rest(delta_deg: float, agility: SpacecraftAgility) -> float:
    """Bang-bang (trapezoid or triangle) rest-to-rest time, no settling."""
    if delta_deg <= 0:
        return 0.0
    w, a = agility.max_rate_deg_s, agility.max_accel_deg_s2
    if delta_deg >= w * w / a:
        return delta_deg / w + w / a
    return 2.0 * math.sqrt(delta_deg / a)


def slew_time(delta_deg: float, agility: SpacecraftAgility) -> float:
    """Rest-to-rest slew over ``delta_deg`` plus settling."""
    if not delta_deg >= 0:
        raise ValueError(f"slew angle must be >= 0, got {delta_deg!r}")
    return _rest_to_rest(delta_deg, agility) + agility.settle_time_s


SERIAL_PRECEDENCE = (
    ("acquire", "transfer"),
    ("transfer", "analyze"),
    ("analyze", "decide"),
    ("decide", "slew"),
    ("slew", "settle"),
    ("settle", "nadir_acquire"),
    ("nadir_acquire", "nadir_analyze"),
    ("nadir_analyze", "downlink"),
)
OVERLAP_PRECEDENCE = (
    ("acquire", "transfer"),
    ("transfer", "analyze"),
    ("analyze", "decide"),
    ("acquire", "slew_along"),
    ("decide", "slew_across"),
    ("slew_along", "settle"),
    ("slew_across", "settle"),
    ("settle", "nadir_acquire"),
    ("nadir_acquire", "nadir_analyze"),
    ("nadir_analyze", "downlink"),
)
POST_NADIR = ("nadir_acquire", "nadir_analyze", "downlink")


@dataclass
class CycleSchedule:
    phases: dict[str, tuple[float, float]]
    critical_path_s: float
    deadline_s: float
    lead_time_s: float
    feasible: bool
    overlap_used: bool

    @property
    def precedence(self):
        return OVERLAP_PRECEDENCE if self.overlap_used else SERIAL_PRECEDENCE

    def pre_nadir_end(self) -> float:
        return max(end for name, (_, end) in self.phases.items() if name not in POST_NADIR)

    @property
    def slack_s(self) -> float:
        return self.deadline_s - self.critical_path_s


def plan_cycle(
    geom: LookaheadGeometry,
    budgets: PhaseBudget,
    agility: SpacecraftAgility,
    command: PointingCommand,
    overlap: bool = False,
    margin_s: float = 5.0,
) -> CycleSchedule:
    """Lay out one cycle's phases and test them against the nadir deadline.

    Serial mode runs the along- and across-track return as one maneuver of
    angle ``hypot(along, across)`` after the decision.  Overlap mode starts
    the along-track component (known before analysis) right after the
    acquisition and the across-track component after the decision; both
    then share one settle.  Nadir acquisition starts once the slew has
    settled and the target has reached nadir.
    """
    if not margin_s >= 0:
        raise ValueError(f"margin_s must be >= 0, got {margin_s!r}")
    phases: dict[str, tuple[float, float]] = {}

    def put(name, start, duration):
        phases[name] = (start, start + duration)
        return start + duration

    t = put("acquire", 0.0, budgets.acquire_s)
    acquired = t
    t = put("transfer", t, budgets.transfer_s)
    t = put("analyze", t, budgets.analyze_s)
    decided = put("decide", t, budgets.decide_s)
    along = command.along_track_slew_deg
    across = abs(command.across_track_deg)
    if overlap:
        along_end = put("slew_along", acquired, _rest_to_rest(along, agility))
        across_end = put("slew_across", decided, _rest_to_rest(across, agility))
        settled = put("settle", max(along_end, across_end), agility.settle_time_s)
    else:
        moved = put("slew", decided, _rest_to_rest(math.hypot(along, across), agility))
        settled = put("settle", moved, agility.settle_time_s)
    deadline = geom.lead_time_s - margin_s
    t = put("nadir_acquire", max(settled, geom.lead_time_s), budgets.nadir_acquire_s)
    t = put("nadir_analyze", t, budgets.nadir_analyze_s)
    put("downlink", t, budgets.downlink_s)
    return CycleSchedule(
        phases=phases,
        critical_path_s=settled,
        deadline_s=deadline,
        lead_time_s=geom.lead_time_s,
        feasible=settled <= deadline,
        overlap_used=overlap,
    )


@dataclass(frozen=True)
class CycleConfig:
    """Everything a single cycle needs besides the scene and orbit."""

    lookahead_angle_deg: float = 45.0
    policy: str = "cloud_avoid"
    n_tiles: int = 5
    max_across_track_deg: float = 30.0
    overlap: bool = True
    margin_s: float = 5.0
    agility: SpacecraftAgility = field(default_factory=SpacecraftAgility)
    budgets: PhaseBudget = field(default_factory=PhaseBudget)
    readout: ReadoutModel = field(default_factory=ReadoutModel)
    decimation: int = 2
    band_subset: tuple[int, ...] | None = None
    readout_oversample: int = 32
    smear: bool = False
    stretch_low: float = 0.0
    stretch_high: float = 100.0
    t_bright: float = analysis.T_BRIGHT
    t_sat: float = analysis.T_SAT
    t_hot: float = analysis.T_HOT
    t_ratio: float = analysis.T_RATIO
    record_wall_time: bool = False
    cloud_free_threshold: float = 0.1


def _r(x: float | None, nd: int = 6) -> float | None:
    return None if x is None else round(float(x), nd)


def _nadir_truth(scene: SyntheticScene, orbit: OrbitConfig, config: CycleConfig, across_deg: float):
    """Ground-truth content of the nadir image pointed ``across_deg`` across-track."""
    raster = scene.raster
    (c0, c1) = tile_bounds(raster.width, config.n_tiles)[config.n_tiles // 2]
    h = orbit.altitude_km
    tile_km = (c1 - c0) * raster.gsd_km
    strip_km = raster.height * raster.gsd_km
    full = footprint_of(raster)
    fp = footprint_at(
        orbit,
        full.along_track_center_km,
        across_deg,
        sensor_fov_deg=2 * math.degrees(math.atan2(tile_km / 2, h)),
        along_fov_deg=2 * math.degrees(math.atan2(strip_km / 2, h)),
    )
    r0, r1, k0, k1 = crop_window(raster, fp)
    if scene.cloud_opacity is not None:
        cloud_fraction = float((scene.cloud_opacity.values[0, r0:r1, k0:k1] > 0.5).mean())
    else:
        cloud_fraction = 0.0
    captured = sum(1 for s in scene.hotspots if r0 <= s.row < r1 and k0 <= s.col < k1)
    image = capture(raster, CaptureRequest(fp))
    return cloud_fraction, captured, image


def _nadir_analysis(image, config: CycleConfig) -> dict:
    product = analysis.analyze_lookahead(
        image, config.policy, config.stretch_low, config.stretch_high,
        config.t_bright, config.t_sat, config.t_hot, config.t_ratio,
    )
    if product.cloud_mask is not None:
        return {"cloud_fraction": _r(product.cloud_mask.cloud_fraction)}
    return {"detections": len(product.detections)}


RECORD_FIELDS = (
    "cycle_id", "mode", "seed", "policy", "scene_hash", "status", "error",
    "look_angle_deg", "central_angle_rad", "ground_distance_km", "lead_time_s",
    "deadline_s", "phases", "critical_path_s", "slack_s", "overlap_used",
    "tile_scores", "chosen_tile", "across_track_deg", "fallback", "feasible",
    "captured_cloud_fraction", "cloud_free_threshold", "hotspots_total", "hotspots_captured",
    "nadir_analysis", "downlink_latency_s", "smear",
)


def _blank_record(cycle_id: int, mode: str, seed: int, config: CycleConfig, scene_hash) -> dict:
    rec = dict.fromkeys(RECORD_FIELDS)
    rec.update(
        cycle_id=cycle_id, mode=mode, seed=seed, policy=config.policy,
        scene_hash=scene_hash, status="ok",
        cloud_free_threshold=config.cloud_free_threshold,
        smear="requested_ignored" if config.smear else "off",
    )
    return rec


def failed_record(cycle_id: int, mode: str, seed: int, config: CycleConfig, error: str) -> dict:
    rec = _blank_record(cycle_id, mode, seed, config, None)
    rec.update(status="failed", error=error, feasible=False if mode == "dt" else None)
    return rec


def _fill_geometry(rec: dict, geom: LookaheadGeometry) -> None:
    rec.update(
        look_angle_deg=_r(geom.look_angle_deg),
        central_angle_rad=_r(geom.central_angle_rad, 9),
        ground_distance_km=_r(geom.ground_distance_km),
        lead_time_s=_r(geom.lead_time_s),
    )


def run_cycle(
    scene: SyntheticScene,
    orbit: OrbitConfig,
    config: CycleConfig,
    cycle_id: int = 0,
    seed: int = 0,
) -> dict:
    """Execute one full DT cycle and return its event-log record.

    Module errors become a ``status="failed"`` record instead of escaping.
    """
    scene_hash = scene.raster.digest()
    rec = _blank_record(cycle_id, "dt", seed, config, scene_hash)
    rec["hotspots_total"] = len(scene.hotspots)
    try:
        geom = lead_time(orbit, config.lookahead_angle_deg)
        _fill_geometry(rec, geom)

        req = CaptureRequest(
            footprint_of(scene.raster), config.decimation, config.band_subset, config.smear
        )
        look = capture(scene.raster, req)
        pixels = look.width * look.height * config.readout_oversample**2
        budgets = replace(config.budgets, transfer_s=readout_time(pixels, look.bands, config.readout))

        started = time.perf_counter()
        product = analysis.analyze_lookahead(
            look, config.policy, config.stretch_low, config.stretch_high,
            config.t_bright, config.t_sat, config.t_hot, config.t_ratio, req.band_subset,
        )
        wall = time.perf_counter() - started

        def reachable(offset_deg: float) -> bool:
            cmd = PointingCommand(offset_deg, config.lookahead_angle_deg)
            return plan_cycle(geom, budgets, config.agility, cmd, config.overlap, config.margin_s).feasible

        scores = tile_scores(product, config.n_tiles, config.max_across_track_deg, orbit, reachable)
        command = select_target(scores, config.policy, config.lookahead_angle_deg)
        schedule = plan_cycle(geom, budgets, config.agility, command, config.overlap, config.margin_s)
        if not schedule.feasible and not command.fallback:
            command = PointingCommand(0.0, config.lookahead_angle_deg, True, len(scores) // 2)
            schedule = plan_cycle(geom, budgets, config.agility, command, config.overlap, config.margin_s)

        cloud_fraction, captured, nadir_image = _nadir_truth(scene, orbit, config, command.across_track_deg)
        rec.update(
            deadline_s=_r(schedule.deadline_s),
            phases={k: [_r(a), _r(b)] for k, (a, b) in schedule.phases.items()},
            critical_path_s=_r(schedule.critical_path_s),
            slack_s=_r(schedule.slack_s),
            overlap_used=schedule.overlap_used,
            tile_scores=[
                {
                    "tile": s.tile_index,
                    "offset_deg": _r(s.across_track_offset_deg),
                    "score": _r(s.score),
                    "cloud_fraction": _r(s.cloud_fraction),
                    "reachable": s.reachable,
                }
                for s in scores
            ],
            chosen_tile=command.tile_index,
            across_track_deg=_r(command.across_track_deg),
            fallback=command.fallback,
            feasible=schedule.feasible,
            captured_cloud_fraction=_r(cloud_fraction),
            hotspots_captured=captured,
            nadir_analysis=_nadir_analysis(nadir_image, config),
            downlink_latency_s=_r(budgets.downlink_s),
        )
        if config.record_wall_time:
            rec["analysis_wall_s"] = wall
    except Exception as exc:  # noqa: BLE001 - a failed cycle must not abort the mission
        rec.update(status="failed", error=f"{type(exc).__name__}: {exc}", feasible=False)
    return rec


def run_baseline(
    scene: SyntheticScene,
    orbit: OrbitConfig,
    config: CycleConfig,
    cycle_id: int = 0,
    seed: int = 0,
) -> dict:
    """Nadir-only control: no lookahead, no slew, image whatever passes below."""
    rec = _blank_record(cycle_id, "baseline", seed, config, scene.raster.digest())
    rec["hotspots_total"] = len(scene.hotspots)
    try:
        cloud_fraction, captured, nadir_image = _nadir_truth(scene, orbit, config, 0.0)
        rec.update(
            chosen_tile=config.n_tiles // 2,
            across_track_deg=0.0,
            fallback=False,
            captured_cloud_fraction=_r(cloud_fraction),
            hotspots_captured=captured,
            nadir_analysis=_nadir_analysis(nadir_image, config),
            downlink_latency_s=_r(config.budgets.downlink_s),
        )
    except Exception as exc:  # noqa: BLE001
        rec.update(status="failed", error=f"{type(exc).__name__}: {exc}")
    return rec


def cloud_free(record: dict) -> bool:
    """A capture is cloud-free when its true cloud fraction is under the run's threshold."""
    value = record.get("captured_cloud_fraction")
    return record.get("status") == "ok" and value is not None and value < record["cloud_free_threshold"]

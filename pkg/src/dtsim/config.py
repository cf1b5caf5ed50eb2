"""Mission configuration: a sectioned ``key = value`` file.

Every key has a default, so an empty file is a valid configuration.
Unknown sections or keys are errors, as are values that break a
downstream precondition; messages name the offending ``section.key``.

Recognised keys (defaults in brackets)::

    [orbit]      altitude_km [500]  ground_speed_km_s [7.5]  earth_radius_km [6371]
    [lookahead]  angle_deg [45]  decimation [2]  band_subset [all]
                 readout_oversample [32]  smear [false]
    [readout]    bytes_per_sample [2]  link_rate_bytes_s [8e6]  fixed_overhead_s [0.5]
    [analysis]   stretch_low [0]  stretch_high [100]  t_bright [0.6]  t_sat [0.2]
                 t_hot [0.8]  t_ratio [2.0]  record_wall_time [false]
    [targeting]  policy [cloud_avoid]  n_tiles [5]  max_across_track_deg [30]
    [agility]    max_rate_deg_s [1]  max_accel_deg_s2 [1]  settle_time_s [1]
    [budgets]    acquire_s [2]  transfer_s [5]  analyze_s [5]  decide_s [0.5]
                 nadir_acquire_s [2]  nadir_analyze_s [5]  downlink_s [3]
    [schedule]   overlap [true]  margin_s [5]
    [scene]      width [160]  height [32]  gsd_km [0.5]  coverage [0.5]
                 correlation_px [32]  n_hotspots [2]  hotspot_sigma_px [1.5]
                 background_level [0.2]
    [mission]    n_cycles [200]  seed [1]  workers [1]  cloud_free_threshold [0.1]
    [output]     log []  metrics []

In a mission the transfer phase always comes from the readout model;
``budgets.transfer_s`` only matters when the scheduler is used directly.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, fields

from .analysis import POLICIES, POLICY_BANDS
from .executor import CycleConfig, PhaseBudget, SpacecraftAgility
from .geometry import GeometryError, OrbitConfig, lead_time
from .sensor import ReadoutModel


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SceneParams:
    width: int = 160
    height: int = 32
    gsd_km: float = 0.5
    coverage: float = 0.5
    correlation_px: float = 32.0
    n_hotspots: int = 2
    hotspot_sigma_px: float = 1.5
    background_level: float = 0.2


@dataclass(frozen=True)
class MissionConfig:
    orbit: OrbitConfig = field(default_factory=OrbitConfig)
    cycle: CycleConfig = field(default_factory=CycleConfig)
    scene: SceneParams = field(default_factory=SceneParams)
    n_cycles: int = 200
    seed: int = 1
    workers: int = 1
    cloud_free_threshold: float = 0.1
    log_path: str | None = None
    metrics_path: str | None = None


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"not an integer: {text!r}")
    return int(value)


def _float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"not finite: {text!r}")
    return value


def _bands(text: str):
    if text.strip().lower() in ("", "all"):
        return None
    return tuple(_int(t) for t in text.split(","))


def _str(text: str) -> str:
    return text.strip()


def _positive(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _unit(v):
    return 0 <= v <= 1


def _pct(v):
    return 0 <= v <= 100


def _any(v):
    return True


# (section, key) -> (parser, check, requirement text)
SCHEMA = {
    ("orbit", "altitude_km"): (_float, _positive, "> 0"),
    ("orbit", "ground_speed_km_s"): (_float, _positive, "> 0"),
    ("orbit", "earth_radius_km"): (_float, _positive, "> 0"),
    ("lookahead", "angle_deg"): (_float, lambda v: 40 <= v <= 50, "in [40, 50]"),
    ("lookahead", "decimation"): (_int, lambda v: v >= 1, ">= 1"),
    ("lookahead", "band_subset"): (_bands, _any, "a comma list of band indices or 'all'"),
    ("lookahead", "readout_oversample"): (_int, lambda v: v >= 1, ">= 1"),
    ("lookahead", "smear"): (_bool, _any, "a boolean"),
    ("readout", "bytes_per_sample"): (_float, _positive, "> 0"),
    ("readout", "link_rate_bytes_s"): (_float, _positive, "> 0"),
    ("readout", "fixed_overhead_s"): (_float, _nonneg, ">= 0"),
    ("analysis", "stretch_low"): (_float, _pct, "in [0, 100]"),
    ("analysis", "stretch_high"): (_float, _pct, "in [0, 100]"),
    ("analysis", "t_bright"): (_float, _unit, "in [0, 1]"),
    ("analysis", "t_sat"): (_float, _unit, "in [0, 1]"),
    ("analysis", "t_hot"): (_float, _unit, "in [0, 1]"),
    ("analysis", "t_ratio"): (_float, _positive, "> 0"),
    ("analysis", "record_wall_time"): (_bool, _any, "a boolean"),
    ("targeting", "policy"): (_str, lambda v: v in POLICIES, f"one of {', '.join(POLICIES)}"),
    ("targeting", "n_tiles"): (_int, lambda v: v >= 1 and v % 2 == 1, "odd and >= 1"),
    ("targeting", "max_across_track_deg"): (_float, lambda v: 0 <= v < 90, "in [0, 90)"),
    ("agility", "max_rate_deg_s"): (_float, _positive, "> 0"),
    ("agility", "max_accel_deg_s2"): (_float, _positive, "> 0"),
    ("agility", "settle_time_s"): (_float, _nonneg, ">= 0"),
    **{("budgets", f.name): (_float, _nonneg, ">= 0") for f in fields(PhaseBudget)},
    ("schedule", "overlap"): (_bool, _any, "a boolean"),
    ("schedule", "margin_s"): (_float, _nonneg, ">= 0"),
    ("scene", "width"): (_int, lambda v: v >= 1, ">= 1"),
    ("scene", "height"): (_int, lambda v: v >= 1, ">= 1"),
    ("scene", "gsd_km"): (_float, _positive, "> 0"),
    ("scene", "coverage"): (_float, _unit, "in [0, 1]"),
    ("scene", "correlation_px"): (_float, lambda v: v >= 1, ">= 1"),
    ("scene", "n_hotspots"): (_int, _nonneg, ">= 0"),
    ("scene", "hotspot_sigma_px"): (_float, _positive, "> 0"),
    ("scene", "background_level"): (_float, _unit, "in [0, 1]"),
    ("mission", "n_cycles"): (_int, _nonneg, ">= 0"),
    ("mission", "seed"): (_int, _nonneg, ">= 0"),
    ("mission", "workers"): (_int, lambda v: v >= 1, ">= 1"),
    ("mission", "cloud_free_threshold"): (_float, lambda v: 0 < v <= 1, "in (0, 1]"),
    ("output", "log"): (_str, _any, "a path"),
    ("output", "metrics"): (_str, _any, "a path"),
}


def _parse(sections: dict[str, dict[str, str]]) -> dict[tuple[str, str], object]:
    values = {}
    for section, items in sections.items():
        for key, raw in items.items():
            entry = SCHEMA.get((section, key))
            if entry is None:
                known = sorted(k for s, k in SCHEMA if s == section)
                hint = f" (known: {', '.join(known)})" if known else " (unknown section)"
                raise ConfigError(f"{section}.{key}: unknown key{hint}")
            parse, check, need = entry
            try:
                value = parse(raw)
            except ValueError as exc:
                raise ConfigError(f"{section}.{key}: {exc}") from None
            if not check(value):
                raise ConfigError(f"{section}.{key}: must be {need}, got {raw.strip()!r}")
            values[(section, key)] = value
    return values


def build_config(sections: dict[str, dict[str, str]]) -> MissionConfig:
    """Validate raw ``{section: {key: text}}`` and assemble a MissionConfig."""
    v = _parse(sections)

    def get(section, key, default):
        return v.get((section, key), default)

    def section(name, cls):
        kwargs = {f.name: v[(name, f.name)] for f in fields(cls) if (name, f.name) in v}
        return cls(**kwargs)

    orbit = section("orbit", OrbitConfig)
    agility = section("agility", SpacecraftAgility)
    budgets = section("budgets", PhaseBudget)
    readout = section("readout", ReadoutModel)
    scene = section("scene", SceneParams)
    d = CycleConfig()
    cycle = CycleConfig(
        lookahead_angle_deg=get("lookahead", "angle_deg", d.lookahead_angle_deg),
        policy=get("targeting", "policy", d.policy),
        n_tiles=get("targeting", "n_tiles", d.n_tiles),
        max_across_track_deg=get("targeting", "max_across_track_deg", d.max_across_track_deg),
        overlap=get("schedule", "overlap", d.overlap),
        margin_s=get("schedule", "margin_s", d.margin_s),
        agility=agility,
        budgets=budgets,
        readout=readout,
        decimation=get("lookahead", "decimation", d.decimation),
        band_subset=get("lookahead", "band_subset", d.band_subset),
        readout_oversample=get("lookahead", "readout_oversample", d.readout_oversample),
        smear=get("lookahead", "smear", d.smear),
        stretch_low=get("analysis", "stretch_low", d.stretch_low),
        stretch_high=get("analysis", "stretch_high", d.stretch_high),
        t_bright=get("analysis", "t_bright", d.t_bright),
        t_sat=get("analysis", "t_sat", d.t_sat),
        t_hot=get("analysis", "t_hot", d.t_hot),
        t_ratio=get("analysis", "t_ratio", d.t_ratio),
        record_wall_time=get("analysis", "record_wall_time", d.record_wall_time),
        cloud_free_threshold=get("mission", "cloud_free_threshold", d.cloud_free_threshold),
    )
    m = MissionConfig()
    config = MissionConfig(
        orbit=orbit,
        cycle=cycle,
        scene=scene,
        n_cycles=get("mission", "n_cycles", m.n_cycles),
        seed=get("mission", "seed", m.seed),
        workers=get("mission", "workers", m.workers),
        cloud_free_threshold=cycle.cloud_free_threshold,
        log_path=get("output", "log", None) or None,
        metrics_path=get("output", "metrics", None) or None,
    )
    validate(config)
    return config


def validate(config: MissionConfig) -> None:
    """Cross-field checks that individual keys cannot express."""
    c = config.cycle
    try:
        lead_time(config.orbit, c.lookahead_angle_deg)
    except GeometryError as exc:
        raise ConfigError(f"lookahead.angle_deg: {exc}") from None
    if c.stretch_low >= c.stretch_high:
        raise ConfigError("analysis.stretch_low: must be below analysis.stretch_high")
    if c.band_subset is not None:
        subset = c.band_subset
        if len(set(subset)) != len(subset) or min(subset) < 0 or max(subset) > 3:
            raise ConfigError(f"lookahead.band_subset: need unique indices in 0..3, got {subset}")
        missing = sorted(set(POLICY_BANDS[c.policy]) - set(subset))
        if missing:
            raise ConfigError(
                f"lookahead.band_subset: policy {c.policy} needs bands {missing}"
            )
    looked = -(-config.scene.width // c.decimation)
    if c.n_tiles > looked:
        raise ConfigError(
            f"targeting.n_tiles: {c.n_tiles} tiles exceed the {looked}-column lookahead image"
        )
    if c.n_tiles > config.scene.width:
        raise ConfigError("targeting.n_tiles: more tiles than scene columns")


def parse_text(text: str) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(
        interpolation=None, default_section="__no_defaults__", inline_comment_prefixes=("#", ";")
    )
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    return {name: dict(parser[name]) for name in parser.sections()}


def load_config(path) -> MissionConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return build_config(parse_text(text))


def loads_config(text: str) -> MissionConfig:
    return build_config(parse_text(text))

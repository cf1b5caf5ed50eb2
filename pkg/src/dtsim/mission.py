"""Mission driver: many DT cycles against a nadir-only baseline.

Each cycle index ``i`` gets its own scene from ``mix_seed(config.seed, i)``.
The DT cycle and the baseline see the same scene, and both log records
carry its hash.  Records are written in cycle order, DT before baseline,
whatever the worker count.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

from .config import MissionConfig
from .executor import cloud_free, failed_record, run_baseline, run_cycle
from .rng import mix_seed
from .scene import SyntheticScene, generate_cloud_field, generate_thermal_scene, render_cloud_scene

METRIC_FIELDS = (
    "cycles_total",
    "cycles_feasible",
    "dt_cloud_free_fraction",
    "baseline_cloud_free_fraction",
    "dt_hotspot_recall",
    "baseline_hotspot_recall",
    "mean_timeline_slack_s",
)


class ReportError(ValueError):
    pass


@dataclass(frozen=True)
class MissionMetrics:
    cycles_total: int = 0
    cycles_feasible: int = 0
    dt_cloud_free_fraction: float = 0.0
    baseline_cloud_free_fraction: float = 0.0
    dt_hotspot_recall: float = 0.0
    baseline_hotspot_recall: float = 0.0
    mean_timeline_slack_s: float = 0.0


def make_scene(config: MissionConfig, scene_seed: int) -> SyntheticScene:
    p = config.scene
    if config.cycle.policy == "thermal_hunt":
        return generate_thermal_scene(
            scene_seed, p.width, p.height, p.n_hotspots, p.hotspot_sigma_px,
            p.background_level, min_separation_px=4 * p.hotspot_sigma_px, gsd_km=p.gsd_km,
        )
    field = generate_cloud_field(scene_seed, p.width, p.height, p.coverage, p.correlation_px, p.gsd_km)
    return render_cloud_scene(field, mix_seed(scene_seed, 1))


def run_index(config: MissionConfig, index: int) -> tuple[dict, dict]:
    """DT and baseline records for one cycle index."""
    scene_seed = mix_seed(config.seed, index)
    try:
        scene = make_scene(config, scene_seed)
    except ValueError as exc:
        return (
            failed_record(index, "dt", scene_seed, config.cycle, f"scene: {exc}"),
            failed_record(index, "baseline", scene_seed, config.cycle, f"scene: {exc}"),
        )
    dt = run_cycle(scene, config.orbit, config.cycle, index, scene_seed)
    base = run_baseline(scene, config.orbit, config.cycle, index, scene_seed)
    return dt, base


def _run_index_star(args):
    return run_index(*args)


def run_cycles(config: MissionConfig, workers: int | None = None) -> list[dict]:
    workers = config.workers if workers is None else workers
    jobs = [(config, i) for i in range(config.n_cycles)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            pairs = list(pool.map(_run_index_star, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        pairs = [run_index(config, i) for i in range(config.n_cycles)]
    return [rec for pair in pairs for rec in pair]


def _fraction(num: int | float, den: int | float) -> float:
    return num / den if den else 0.0


def metrics_from_records(records: list[dict]) -> MissionMetrics:
    """Aggregate metrics; the single code path for both a run and a report."""
    dt = [r for r in records if r["mode"] == "dt"]
    base = [r for r in records if r["mode"] == "baseline"]
    slacks = [r["slack_s"] for r in dt if r.get("slack_s") is not None]

    def recall(recs):
        total = sum(r.get("hotspots_total") or 0 for r in recs)
        captured = sum(r.get("hotspots_captured") or 0 for r in recs)
        return _fraction(captured, total)

    return MissionMetrics(
        cycles_total=len(dt),
        cycles_feasible=sum(1 for r in dt if r.get("feasible") is True),
        dt_cloud_free_fraction=_fraction(sum(cloud_free(r) for r in dt), len(dt)),
        baseline_cloud_free_fraction=_fraction(sum(cloud_free(r) for r in base), len(base)),
        dt_hotspot_recall=recall(dt),
        baseline_hotspot_recall=recall(base),
        mean_timeline_slack_s=_fraction(sum(slacks), len(slacks)),
    )


def encode_record(record: dict) -> str:
    return json.dumps(record, separators=(",", ":"), allow_nan=False)


def metrics_csv(metrics: MissionMetrics) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(METRIC_FIELDS)
    row = asdict(metrics)
    writer.writerow([repr(row[k]) for k in METRIC_FIELDS])
    return buf.getvalue()


def run_mission(
    config: MissionConfig,
    log_path=None,
    metrics_path=None,
    workers: int | None = None,
) -> tuple[MissionMetrics, list[dict]]:
    """Run every cycle, optionally writing the JSONL log and CSV metrics."""
    records = run_cycles(config, workers)
    metrics = metrics_from_records(records)
    log_path = log_path or config.log_path
    metrics_path = metrics_path or config.metrics_path
    if log_path:
        with open(log_path, "w", encoding="utf-8", newline="\n") as fh:
            for rec in records:
                fh.write(encode_record(rec) + "\n")
    if metrics_path:
        with open(metrics_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(metrics_csv(metrics))
    return metrics, records


REQUIRED_KEYS = ("cycle_id", "mode", "status")


def read_log(log_path) -> list[dict]:
    records = []
    with open(log_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ReportError(f"{log_path}:{lineno}: malformed record ({exc.msg})") from None
            if not isinstance(rec, dict) or any(k not in rec for k in REQUIRED_KEYS):
                raise ReportError(f"{log_path}:{lineno}: record lacks {', '.join(REQUIRED_KEYS)}")
            if rec["mode"] not in ("dt", "baseline"):
                raise ReportError(f"{log_path}:{lineno}: unknown mode {rec['mode']!r}")
            if rec["status"] == "ok" and "cloud_free_threshold" not in rec:
                raise ReportError(f"{log_path}:{lineno}: record lacks cloud_free_threshold")
            records.append(rec)
    return records


def report(log_path) -> MissionMetrics:
    """Recompute the metrics of a finished run from its event log."""
    return metrics_from_records(read_log(log_path))


def summarize(metrics: MissionMetrics) -> str:
    m = metrics
    return "\n".join(
        [
            f"cycles:                 {m.cycles_total} ({m.cycles_feasible} feasible)",
            f"cloud-free captures:    DT {m.dt_cloud_free_fraction:.3f}  baseline {m.baseline_cloud_free_fraction:.3f}",
            f"hotspot recall:         DT {m.dt_hotspot_recall:.3f}  baseline {m.baseline_hotspot_recall:.3f}",
            f"mean timeline slack:    {m.mean_timeline_slack_s:.3f} s",
        ]
    )

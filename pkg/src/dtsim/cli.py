"""Command-line entry point: ``dtsim {geometry,scene,analyze,simulate,report}``.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import analysis
from .config import ConfigError, load_config
from .geometry import GeometryError, OrbitConfig, flat_earth_lead_time, lead_time
from .mission import ReportError, metrics_csv, report, run_mission, summarize
from .rng import SplitMix64
from .scene import (
    EndmemberLibrary,
    RasterFormatError,
    generate_cloud_field,
    generate_spectral_scene,
    generate_thermal_scene,
    read_array,
    render_cloud_scene,
    write_array,
    write_raster,
    write_truth,
)

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def cmd_geometry(args) -> int:
    orbit = OrbitConfig(args.altitude, args.speed, args.earth_radius)
    if args.sweep:
        start, stop, step = args.sweep
        angles = list(np.arange(start, stop + step / 2, step))
    else:
        angles = args.angles
    rows = []
    for angle in angles:
        g = lead_time(orbit, float(angle))
        rows.append(
            {
                "look_angle_deg": round(float(angle), 6),
                "central_angle_rad": g.central_angle_rad,
                "ground_distance_km": g.ground_distance_km,
                "lead_time_s": g.lead_time_s,
                "flat_lead_time_s": flat_earth_lead_time(orbit, float(angle)),
            }
        )
    if args.json:
        for row in rows:
            print(json.dumps(row))
        return EXIT_OK
    print(f"{'angle_deg':>10} {'central_rad':>12} {'ground_km':>10} {'lead_s':>8} {'flat_lead_s':>12}")
    for r in rows:
        print(
            f"{r['look_angle_deg']:10.2f} {r['central_angle_rad']:12.6f} {r['ground_distance_km']:10.2f} "
            f"{r['lead_time_s']:8.2f} {r['flat_lead_time_s']:12.2f}"
        )
    return EXIT_OK


def cmd_scene(args) -> int:
    if args.kind == "cloud":
        field = generate_cloud_field(args.seed, args.width, args.height, args.coverage, args.correlation, args.gsd)
        scene = render_cloud_scene(field, args.seed + 1)
        if args.opacity_out:
            write_raster(field, args.opacity_out)
    elif args.kind == "thermal":
        scene = generate_thermal_scene(
            args.seed, args.width, args.height, args.hotspots, args.sigma, args.background,
            min_separation_px=args.min_separation, gsd_km=args.gsd,
        )
    else:
        if not args.library:
            raise UsageError("scene --kind spectral requires --library")
        library = EndmemberLibrary.from_json(args.library)
        # random abundances with per-pixel sum in [0, 1]
        raw = SplitMix64(args.seed + 1).uniform_block((len(library) + 1) * args.height * args.width)
        raw = raw.reshape(len(library) + 1, args.height, args.width)
        abundances = raw[:-1] / raw.sum(axis=0)
        scene = generate_spectral_scene(args.seed, args.width, args.height, library, abundances, args.noise, args.gsd)
    write_raster(scene.raster, args.out)
    if args.truth:
        write_truth(scene, args.truth)
    print(f"wrote {args.out} ({scene.raster.bands}x{scene.raster.height}x{scene.raster.width}) hash {scene.raster.digest()}")
    return EXIT_OK


def _write_detections(path, detections) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for d in detections:
            fh.write(json.dumps({"row": d.row, "col": d.col, "score": d.score}) + "\n")


def cmd_analyze(args) -> int:
    image = read_array(args.input).astype(np.float64)
    if args.kernel != "stretch" and not args.no_stretch:
        image = analysis.stretch(image, args.p_low, args.p_high)
    kernel = args.kernel
    if kernel == "stretch":
        out = analysis.stretch(image, args.p_low, args.p_high)
    elif kernel == "cloud_mask":
        mask = analysis.cloud_mask(image, args.t_bright, args.t_sat)
        out = mask.cloudy.astype(np.float32)
        print(f"cloud_fraction {mask.cloud_fraction:.6f}")
    elif kernel == "thermal":
        detections = analysis.thermal_anomalies(image, args.t_hot, args.t_ratio)
        if args.detections:
            _write_detections(args.detections, detections)
        print(f"{len(detections)} detections")
        out = None
    elif kernel in ("sam", "matched_filter"):
        if args.target is None:
            raise UsageError(f"--kernel {kernel} requires --target")
        target = np.asarray(args.target)
        if kernel == "sam":
            out = analysis.spectral_angle_map(image, target)
        else:
            out = analysis.matched_filter(image, target)
    else:
        if not args.library:
            raise UsageError("--kernel unmix requires --library")
        out = analysis.unmix_image(image, EndmemberLibrary.from_json(args.library))
    if out is not None:
        if not args.output:
            raise UsageError(f"--kernel {kernel} requires --output")
        write_array(out, args.output)
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    log_path = args.log or config.log_path
    metrics_path = args.metrics or config.metrics_path
    if not log_path or not metrics_path:
        raise UsageError("simulate needs --log and --metrics (or [output] log/metrics in the config)")
    metrics, _ = run_mission(config, log_path, metrics_path, workers=args.workers)
    print(summarize(metrics))
    return EXIT_OK


def cmd_report(args) -> int:
    metrics = report(args.log)
    print(summarize(metrics))
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(metrics_csv(metrics))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dtsim", description="Dynamic targeting simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("geometry", help="lookahead lead-time table")
    g.add_argument("--altitude", type=float, default=500.0, help="orbit altitude, km")
    g.add_argument("--speed", type=float, default=7.5, help="ground speed, km/s")
    g.add_argument("--earth-radius", type=float, default=6371.0)
    g.add_argument("--angles", type=_floats, default=[40.0, 45.0, 50.0])
    g.add_argument("--sweep", type=float, nargs=3, metavar=("START", "STOP", "STEP"))
    g.add_argument("--json", action="store_true", help="one JSON object per angle")
    g.set_defaults(func=cmd_geometry)

    s = sub.add_parser("scene", help="generate a synthetic raster")
    s.add_argument("--kind", choices=("cloud", "thermal", "spectral"), default="cloud")
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--width", type=int, default=160)
    s.add_argument("--height", type=int, default=32)
    s.add_argument("--gsd", type=float, default=0.5)
    s.add_argument("--coverage", type=float, default=0.5)
    s.add_argument("--correlation", type=float, default=32.0)
    s.add_argument("--hotspots", type=int, default=2)
    s.add_argument("--sigma", type=float, default=1.5)
    s.add_argument("--background", type=float, default=0.2)
    s.add_argument("--min-separation", type=float, default=0.0)
    s.add_argument("--library", help="endmember library JSON {names, spectra}")
    s.add_argument("--noise", type=float, default=0.0)
    s.add_argument("--out", required=True)
    s.add_argument("--truth", help="ground-truth JSON Lines sidecar")
    s.add_argument("--opacity-out", help="also write the cloud opacity field (cloud kind)")
    s.set_defaults(func=cmd_scene)

    a = sub.add_parser("analyze", help="run one analysis kernel on a raster")
    a.add_argument("--input", required=True)
    a.add_argument(
        "--kernel", required=True,
        choices=("stretch", "cloud_mask", "thermal", "sam", "matched_filter", "unmix"),
    )
    a.add_argument("--output", help="raster for masks and score maps")
    a.add_argument("--detections", help="JSON Lines output for thermal detections")
    a.add_argument("--target", type=_floats)
    a.add_argument("--library")
    a.add_argument("--p-low", type=float, default=0.0)
    a.add_argument("--p-high", type=float, default=100.0)
    a.add_argument("--no-stretch", action="store_true")
    a.add_argument("--t-bright", type=float, default=analysis.T_BRIGHT)
    a.add_argument("--t-sat", type=float, default=analysis.T_SAT)
    a.add_argument("--t-hot", type=float, default=analysis.T_HOT)
    a.add_argument("--t-ratio", type=float, default=analysis.T_RATIO)
    a.set_defaults(func=cmd_analyze)

    m = sub.add_parser("simulate", help="run a mission from a config file")
    m.add_argument("--config", required=True)
    m.add_argument("--log")
    m.add_argument("--metrics")
    m.add_argument("--workers", type=int)
    m.set_defaults(func=cmd_simulate)

    r = sub.add_parser("report", help="recompute metrics from an event log")
    r.add_argument("--log", required=True)
    r.add_argument("--csv")
    r.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (UsageError, ConfigError, GeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ReportError, RasterFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

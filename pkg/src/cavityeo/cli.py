"""Command-line interface.

Subcommands: run, sweep, table1, match-fsr, check.  Exit codes: 0 success,
1 physics/solver failure, 2 configuration or usage error.  The default
output directory can be set with the CAVITYEO_OUTPUT_DIR environment
variable; everything else is flags.
"""

import argparse
import json
import logging
import os
import sys

from .constants import TWO_PI
from .errors import CavityEOError, ConfigError

log = logging.getLogger("cavityeo")


def _load(config_path, preset=None):
    from . import config as cfgmod

    if config_path is None:
        raw = {}
    else:
        cfg = cfgmod.load_config(config_path)
        raw = cfg  # already validated; re-validated after overrides below
    if preset is not None:
        raw = dict(raw)
        raw.setdefault("geometry", {})
        raw["geometry"] = dict(raw["geometry"])
        raw["geometry"]["preset"] = preset
        raw["geometry"].setdefault("overrides", {})
    return cfgmod.validate_config(raw)


def _out_dir(args):
    if args.output_dir:
        return args.output_dir
    return os.environ.get("CAVITYEO_OUTPUT_DIR", "runs")


def cmd_check(args):
    _load(args.config, args.preset)
    print("configuration ok")
    return 0


def cmd_run(args):
    from . import pipeline

    config = _load(args.config, args.preset)
    if args.output_dir:
        config["output"]["directory"] = args.output_dir
    formats = [args.format] if args.format else config["output"]["formats"]
    write_fields = config["output"]["write_fields"] or args.write_fields

    report = pipeline.run_pipeline(config, keep_fields=write_fields)
    out_dir = config["output"]["directory"] or _out_dir(args)
    out_dir = os.path.join(out_dir, report.report_id)
    written = pipeline.save_report(report, out_dir, formats, write_fields)
    print(pipeline.format_report_text(report), end="")
    for path in written:
        log.info("wrote %s", path)
    print(f"report files in {out_dir}")
    return 0


def cmd_sweep(args):
    from . import pipeline
    from .sweep import SweepSpec, sweep

    config = _load(args.config, args.preset)
    spec = SweepSpec(
        parameter=args.param,
        lo=args.range[0],
        hi=args.range[1],
        points=args.points,
        sampling="log" if args.log else "linear",
        objective=args.objective,
    )
    result = sweep(config, spec, jobs=args.jobs)

    out_dir = _out_dir(args)
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "sweep.csv")
    with open(csv_path, "w") as fh:
        fh.write("parameter,objective,status\n")
        for p in result.points:
            obj = "" if p.objective is None else repr(p.objective)
            fh.write(f"{p.value!r},{obj},{p.status}\n")
    manifest = {
        "parameter": spec.parameter,
        "objective": spec.objective,
        "sampling": spec.sampling,
        "points": [
            {"value": p.value, "objective": p.objective,
             "status": p.status, "report_id": p.report_id}
            for p in result.points
        ],
    }
    with open(os.path.join(out_dir, "sweep_manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    best = result.best()
    print(f"swept {spec.parameter} over [{spec.lo}, {spec.hi}] "
          f"({spec.points} points, objective {spec.objective})")
    print(f"best: {spec.parameter} = {best.value:.6g} -> "
          f"{spec.objective} = {best.objective:.6g}")
    print(f"curve written to {csv_path}")
    return 0


def cmd_table1(args):
    from . import pipeline

    if args.inject_g0:
        rows = pipeline.injected_rows()
        print(pipeline.emit_table1(rows), end="")
        return 0
    presets = args.presets.split(",") if args.presets else ["G1", "G2", "G3", "G4"]
    reports = []
    for preset in presets:
        log.info("running preset %s", preset)
        config = _load(args.config, preset.strip())
        reports.append(pipeline.run_pipeline(config))
    print(pipeline.emit_table1(reports), end="")
    return 0


def cmd_match_fsr(args):
    from . import config as cfgmod
    from . import optics

    config = _load(args.config, args.preset)
    geometry = cfgmod.build_geometry(config)
    polarization = cfgmod.resolve_polarization(config, geometry)
    omega_b = TWO_PI * config["converter"]["omega_b_over_2pi_hz"]
    omega_a = TWO_PI * config["converter"]["omega_a_over_2pi_hz"]
    resolution = config["solver"]["resolution_cells_per_um"] * 1e6
    radius = optics.match_fsr(
        geometry, omega_b, resolution, polarization=polarization,
        omega_target=omega_a, n_modes=int(config["solver"]["n_modes"]),
    )
    print(f"matched ring_major_radius_um: {radius * 1e6:.4f}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cavityeo",
        description="Cavity electro-optic microwave-to-optical converter "
                    "design calculator",
    )
    parser.add_argument("--verbose", action="store_true",
                        help="log stage progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument(
            "config", nargs=None if config_required else "?", default=None,
            help="YAML configuration file",
        )
        p.add_argument("--preset", choices=("G1", "G2", "G3", "G4"),
                       help="use a bundled geometry preset")
        p.add_argument("--output-dir", help="output directory "
                       "(default: $CAVITYEO_OUTPUT_DIR or ./runs)")
        p.add_argument("--format", choices=("csv", "json", "text"),
                       help="override output format")
        p.add_argument("--jobs", type=int, default=1,
                       help="parallel workers for sweeps")

    p_run = sub.add_parser("run", help="run the full pipeline")
    common(p_run, config_required=False)
    p_run.add_argument("--write-fields", action="store_true",
                       help="dump potential and mode profiles")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="sweep one configuration parameter")
    common(p_sweep, config_required=False)
    p_sweep.add_argument("--param", required=True,
                         help="dotted config path, e.g. geometry.overrides.d_um")
    p_sweep.add_argument("--range", nargs=2, type=float, required=True,
                         metavar=("LO", "HI"))
    p_sweep.add_argument("--points", type=int, default=11)
    p_sweep.add_argument("--log", action="store_true",
                         help="logarithmic sampling")
    p_sweep.add_argument("--objective", default="g0",
                         choices=("g0", "C0", "gamma_peak", "P_for_C1", "n_eq"))
    p_sweep.set_defaults(func=cmd_sweep)

    p_tab = sub.add_parser(
        "table1", help="geometry comparison table for the bundled layouts"
    )
    common(p_tab, config_required=False)
    p_tab.add_argument("--inject-g0", action="store_true",
                       help="use the reference coupling rates instead of "
                            "running the field solvers")
    p_tab.add_argument("--presets", help="comma-separated preset list")
    p_tab.set_defaults(func=cmd_table1)

    p_fsr = sub.add_parser(
        "match-fsr", help="adjust the ring radius to match the optical FSR "
                          "to the microwave frequency"
    )
    common(p_fsr, config_required=False)
    p_fsr.set_defaults(func=cmd_match_fsr)

    p_check = sub.add_parser("check", help="validate a configuration file")
    common(p_check)
    p_check.set_defaults(func=cmd_check)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2
    except CavityEOError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

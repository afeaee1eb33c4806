"""Command line front end: run, calibrate, export-figs, serve.

Exit codes: 0 success, 2 configuration error, 3 runtime contract
violation or simulation fault, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import orchestrator
from .errors import (AlphasoftError, CalibrationError, ConfigError,
                     ContractViolation, ReplayParseError, SignalIntegrityError,
                     SimulationFault)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_IO = 4


def _add_run_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="flat key=value config file")
    p.add_argument("--seed", type=int, help="run seed (overrides config file)")
    p.add_argument("--embodiment", choices=("character", "flower", "both"))
    p.add_argument("--scenario", type=Path, help="scenario file (open|closed,<s>)")
    p.add_argument("--replay", type=Path, help="raw-EEG CSV to replay")
    p.add_argument("--realtime", action="store_true",
                   help="pace the run to wall clock instead of free-running")
    p.add_argument("--guard", choices=("on", "off"),
                   help="low-pressure guard on the flower valve")
    p.add_argument("--out", type=Path, default=Path("out"),
                   help="output directory (default: out)")


def _build_config(args) -> orchestrator.RunConfig:
    cfg = orchestrator.RunConfig()
    if args.config:
        cfg = orchestrator.load_config(args.config, cfg)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.embodiment:
        overrides["embodiment"] = args.embodiment
    if getattr(args, "realtime", False):
        overrides["realtime"] = True
    if args.guard:
        overrides["guard"] = args.guard == "on"
    if args.scenario:
        overrides["scenario"] = str(args.scenario)
    if args.replay:
        overrides["replay"] = str(args.replay)
    return orchestrator.build_config(overrides, cfg)


def _cmd_run(args) -> int:
    config = _build_config(args)
    report = orchestrator.run(config, args.out)
    print(f"run complete: {report.duration_s:.1f} s, "
          f"{report.frames_emitted} frames, {report.alpha_events} alpha events")
    print(f"outputs in {args.out}: {', '.join(sorted(report.files))}")
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    config = _build_config(args)
    cal = orchestrator.calibrate_cmd(config, args.out)
    print(f"calibration written to {args.out / 'calibration.json'}: "
          f"p_ref={cal.p_ref:.6g} threshold={cal.threshold:.6g}")
    return EXIT_OK


def _cmd_export_figs(args) -> int:
    written = orchestrator.export_figures(args.out)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    from . import service
    config = _build_config(args)
    service.serve(config, bind=args.bind, port=args.port,
                  tcp_port=args.tcp_port, out_root=args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="alphasoft",
        description="Alpha-wave BCI pipeline with simulated soft embodiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a full scripted run")
    _add_run_flags(p_run)
    p_run.set_defaults(fn=_cmd_run)

    p_cal = sub.add_parser("calibrate", help="derive and persist a calibration")
    _add_run_flags(p_cal)
    p_cal.set_defaults(fn=_cmd_calibrate)

    p_figs = sub.add_parser("export-figs",
                            help="emit figure-data CSVs from a finished run")
    p_figs.add_argument("--out", type=Path, required=True,
                        help="the run's output directory")
    p_figs.set_defaults(fn=_cmd_export_figs)

    p_serve = sub.add_parser("serve", help="live control service for the dashboard")
    _add_run_flags(p_serve)
    p_serve.add_argument("--bind", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8787)
    p_serve.add_argument("--tcp-port", type=int, default=None,
                         help="also serve NDJSON snapshots on this plain TCP port")
    p_serve.set_defaults(fn=_cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, CalibrationError, ReplayParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ContractViolation, SignalIntegrityError, SimulationFault) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except AlphasoftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

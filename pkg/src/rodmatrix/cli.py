"""Command-line front door: render, serve, latency, gen-script, decode."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

from .framing import decode_stream
from .osc import DEFAULT_OSC_PORT, EndpointUnreachable, measure_latency
from .pipeline import (
    DEFAULT_SERVE_PORT,
    SessionConfig,
    load_session_config,
    parse_destination,
    run_render,
)
from .sensing import track
from .surface import ScriptError, parse_script

log = logging.getLogger("rodmatrix.cli")


def _log_level_from_env() -> int:
    name = os.environ.get("MATRIX_LOG", "WARNING").upper()
    return getattr(logging, name, logging.WARNING)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _cmd_render(args: argparse.Namespace) -> int:
    config = load_session_config(args.config)
    report = run_render(config)
    print(json.dumps(report, indent=2))
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    if args.config:
        config = load_session_config(args.config)
    else:
        config = SessionConfig(mode="additive")
    overrides = {}
    if args.port is not None:
        overrides["serve_port"] = args.port
    if args.osc_dest is not None:
        parse_destination(args.osc_dest)
        overrides["osc_destination"] = args.osc_dest
    if args.osc_listen is not None:
        overrides["osc_listen_port"] = args.osc_listen
    if overrides:
        config = replace(config, **overrides)
    from . import server

    log.info("serving on %s:%d", args.host, config.serve_port)
    server.serve(config, host=args.host)
    return 0


def _cmd_latency(args: argparse.Namespace) -> int:
    host, port = parse_destination(args.dest)
    try:
        stats = measure_latency(host, port, args.probes, timeout_s=args.timeout)
    except EndpointUnreachable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(stats.as_dict(), indent=2))
    # The musical use breaks down at half a second of round trip.
    return 1 if stats.median_ms >= 500.0 else 0


def _cmd_gen_script(args: argparse.Namespace) -> int:
    if args.kind in ("wave", "ramp"):
        script = {
            "duration_ms": args.duration_ms,
            "keyframes": [],
            "generators": [
                {
                    "kind": args.kind,
                    "axis": args.axis,
                    "freq_hz": args.freq,
                    "amplitude": args.amplitude,
                    "phase": args.phase,
                }
            ],
        }
    else:  # press
        if args.rod is None:
            raise ValueError("press scripts need --rod")
        if args.start_ms + args.hold_ms > args.duration_ms:
            raise ValueError("press must end before the script does")
        target = [{"rod_index": args.rod, "value": args.value}]
        script = {
            "duration_ms": args.duration_ms,
            "keyframes": [
                {"t_ms": args.start_ms, "targets": target},
                {"t_ms": args.start_ms + args.hold_ms, "targets": target},
            ],
            "generators": [],
        }
    parse_script(script)  # a generated script must always validate
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(script, fh, indent=2)
    print(json.dumps({"written": args.out, "kind": args.kind}))
    return 0


def _cmd_decode(args: argparse.Namespace) -> int:
    with open(args.infile, "rb") as fh:
        data = fh.read()
    if args.kind == "serial":
        frames, tallies = decode_stream(data)
        report = {
            "frames": len(frames),
            "tallies": tallies.as_dict(),
            "first_seq": frames[0].seq if frames else None,
            "last_seq": frames[-1].seq if frames else None,
        }
    else:  # phases: replay a raw two-bit sample capture through the tracker
        counter, invalid = track(data)
        report = {"samples": len(data), "counter": counter, "invalid": invalid}
    print(json.dumps(report, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rodmatrix",
        description="Simulated 12x12 rod surface: render sessions, serve live, probe links.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("render", help="render a scripted session to WAV plus a JSON report")
    p.add_argument("--config", required=True, help="session config JSON path")
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("serve", help="run a live WebSocket session")
    p.add_argument("--config", help="session config JSON path")
    p.add_argument("--port", type=int, help=f"WebSocket port (default {DEFAULT_SERVE_PORT})")
    p.add_argument("--osc-dest", help="forward frames to host:port over OSC")
    p.add_argument("--osc-listen", type=int, help=f"UDP ping port (default {DEFAULT_OSC_PORT})")
    p.add_argument("--host", default="127.0.0.1", help="bind address")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("latency", help="probe an OSC echo peer and report round-trip stats")
    p.add_argument("--dest", required=True, help="echo peer as host:port")
    p.add_argument("--probes", type=_positive_int, default=100)
    p.add_argument("--timeout", type=float, default=1.0, help="per-probe timeout in seconds")
    p.set_defaults(func=_cmd_latency)

    p = sub.add_parser("gen-script", help="write a gesture script for a named archetype")
    p.add_argument("--kind", required=True, choices=("wave", "press", "ramp"))
    p.add_argument("--out", required=True, help="output script path")
    p.add_argument("--duration-ms", type=_positive_int, default=10000)
    p.add_argument("--freq", type=float, default=0.5, help="generator frequency in Hz")
    p.add_argument("--amplitude", type=float, default=127.0)
    p.add_argument("--axis", choices=("row", "col"), default="col")
    p.add_argument("--phase", type=float, default=0.0)
    p.add_argument("--rod", type=int, help="rod index for press scripts")
    p.add_argument("--value", type=float, default=127.0, help="press depth in counts")
    p.add_argument("--start-ms", type=int, default=0)
    p.add_argument("--hold-ms", type=_positive_int, default=500)
    p.set_defaults(func=_cmd_gen_script)

    p = sub.add_parser("decode", help="parse an offline capture file")
    p.add_argument("--in", dest="infile", required=True, help="capture file path")
    p.add_argument("--kind", choices=("serial", "phases"), default="serial")
    p.set_defaults(func=_cmd_decode)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=_log_level_from_env())
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, ScriptError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Offline session pipeline: gesture script in, rendered WAV out.

Every tick takes the full path: simulate the surface, put the frame on
the serial wire, decode it back, and only then map the decoded frame to
synthesis controls. The wire detour is deliberate; a render doubles as
proof that the codec is transparent end to end.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

from .audio import DEFAULT_SAMPLE_RATE, AudioBuffer, read_wav, write_wav
from .framing import CodecTallies, StreamDecoder, SurfaceFrame, encode_frame
from .mapping import (
    ADDITIVE_MODES,
    GRANULAR_MODES,
    DrumState,
    MappingConfig,
    N_RODS,
    additive_spectrum,
    drum_triggers,
    granular_controls,
    parse_mapping_config,
)
from .surface import FRAME_PERIOD_MS, FRAME_RATE_HZ, RodGrid, load_script, snapshot, step_simulation
from .synth import (
    render_additive_bank,
    render_additive_ifft,
    render_granular,
    render_percussion,
)

ENGINE_MODES = ("additive", "granular", "drums")
ADDITIVE_METHODS = ("bank", "ifft")
DEFAULT_SERVE_PORT = 8765

_SESSION_KEYS = {
    "mode": str,
    "script": str,
    "output": str,
    "sample_rate": int,
    "osc_destination": str,
    "serve_port": int,
    "osc_listen_port": int,
    "mapping": dict,
    "source_wav": str,
    "additive_method": str,
}


@dataclass(frozen=True)
class SessionConfig:
    """Everything a render or serve session needs, straight from JSON."""

    mode: str
    script: str | None = None
    output: str | None = None
    sample_rate: int = DEFAULT_SAMPLE_RATE
    osc_destination: str | None = None
    serve_port: int = DEFAULT_SERVE_PORT
    osc_listen_port: int | None = None
    mapping: MappingConfig = field(default_factory=MappingConfig)
    source_wav: str | None = None
    additive_method: str = "bank"


def parse_destination(dest: str) -> tuple[str, int]:
    """Split a host:port string, validating the port."""
    host, sep, port_text = dest.rpartition(":")
    if not sep or not host:
        raise ValueError(f"destination {dest!r} is not host:port")
    try:
        port = int(port_text)
    except ValueError:
        raise ValueError(f"destination {dest!r} has a non-numeric port") from None
    if not 0 < port < 65536:
        raise ValueError(f"destination port {port} out of range")
    return host, port


def parse_session_config(data: dict) -> SessionConfig:
    """Parse and cross-validate a session config object."""
    if not isinstance(data, dict):
        raise ValueError("session config must be an object")
    unknown = set(data) - set(_SESSION_KEYS)
    if unknown:
        raise ValueError(f"unknown session config fields: {sorted(unknown)}")
    for key, types in _SESSION_KEYS.items():
        if key in data and (not isinstance(data[key], types) or isinstance(data[key], bool)):
            raise ValueError(f"session config {key} has wrong type")
    if "mode" not in data:
        raise ValueError("session config needs a mode")
    mode = data["mode"]
    if mode not in ENGINE_MODES:
        raise ValueError(f"mode {mode!r} not one of {ENGINE_MODES}")

    mapping_data = data.get("mapping", {})
    mapping = parse_mapping_config(mapping_data)
    if "mode" not in mapping_data:
        # Each engine picks its own natural submode when none is given.
        mapping = replace(mapping, mode="columns" if mode == "additive" else "order")
    if mode == "additive" and mapping.mode not in ADDITIVE_MODES:
        raise ValueError(f"additive sessions need a mapping mode in {ADDITIVE_MODES}")
    if mode == "granular" and mapping.mode not in GRANULAR_MODES:
        raise ValueError(f"granular sessions need a mapping mode in {GRANULAR_MODES}")

    sample_rate = data.get("sample_rate", DEFAULT_SAMPLE_RATE)
    if sample_rate <= 0:
        raise ValueError("sample_rate must be positive")
    serve_port = data.get("serve_port", DEFAULT_SERVE_PORT)
    if not 0 < serve_port < 65536:
        raise ValueError("serve_port out of range")
    listen_port = data.get("osc_listen_port")
    if listen_port is not None and not 0 <= listen_port < 65536:
        # Port 0 is allowed: the ping responder then binds ephemerally.
        raise ValueError("osc_listen_port out of range")
    destination = data.get("osc_destination")
    if destination is not None:
        parse_destination(destination)

    method = data.get("additive_method", "bank")
    if method not in ADDITIVE_METHODS:
        raise ValueError(f"additive_method {method!r} not one of {ADDITIVE_METHODS}")

    return SessionConfig(
        mode=mode,
        script=data.get("script"),
        output=data.get("output"),
        sample_rate=sample_rate,
        osc_destination=destination,
        serve_port=serve_port,
        osc_listen_port=listen_port,
        mapping=mapping,
        source_wav=data.get("source_wav"),
        additive_method=method,
    )


def load_session_config(path: str) -> SessionConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_session_config(json.load(fh))


def simulate_wire_frames(script, n_ticks: int | None = None) -> tuple[list[SurfaceFrame], CodecTallies, int]:
    """Run the surface for n ticks, round-tripping every frame on the wire.

    Returns the decoded frames, the codec tallies (all zero on a clean
    run), and the count of invalid quadrature transitions.
    """
    if n_ticks is None:
        n_ticks = max(1, round(script.duration_ms / FRAME_PERIOD_MS))
    grid = RodGrid()
    decoder = StreamDecoder()
    frames: list[SurfaceFrame] = []
    for k in range(n_ticks):
        step_simulation(grid, script, k * FRAME_PERIOD_MS)
        frame = snapshot(grid, k)
        decoded = decoder.feed(encode_frame(frame))
        if decoded != [frame]:
            raise RuntimeError("serial loopback corrupted a frame")
        frames.append(frame)
    decoder.close()
    return frames, decoder.tallies, grid.invalid_transitions


def synthesize(frames: Sequence[SurfaceFrame], config: SessionConfig) -> tuple[AudioBuffer, int]:
    """Map decoded frames to controls and render with the session engine.

    Returns the audio plus the number of percussion trigger events
    (zero for the continuous engines).
    """
    duration_s = len(frames) / FRAME_RATE_HZ
    knobs = config.mapping
    if config.mode == "additive":
        timeline = [additive_spectrum(f, knobs.mode, knobs.f0) for f in frames]
        render = render_additive_bank if config.additive_method == "bank" else render_additive_ifft
        return render(timeline, duration_s, config.sample_rate), 0
    if config.mode == "granular":
        if not config.source_wav:
            raise ValueError("granular sessions need source_wav")
        source = read_wav(config.source_wav)
        if source.sample_rate != config.sample_rate:
            raise ValueError(
                f"source sample rate {source.sample_rate} differs from session rate {config.sample_rate}"
            )
        timeline = [granular_controls(f, knobs.mode, knobs.l_min_ms, knobs.l_max_ms) for f in frames]
        return render_granular(source.samples, timeline, duration_s, config.sample_rate), 0

    state = DrumState(theta=knobs.theta, cooldown_ms=knobs.cooldown_ms, v_gain=knobs.v_gain)
    prev = SurfaceFrame(seq=0, positions=(0,) * N_RODS)
    events = []
    for k, frame in enumerate(frames):
        events.extend(drum_triggers(frame, prev, state, k * FRAME_PERIOD_MS))
        prev = frame
    return render_percussion(events, duration_s, config.sample_rate), len(events)


def run_render(config: SessionConfig) -> dict:
    """Render a whole session offline and write the WAV.

    The report is JSON-friendly and includes the codec tallies and the
    wall-clock cost per second of audio.
    """
    if not config.script:
        raise ValueError("render needs a script path in the session config")
    if not config.output:
        raise ValueError("render needs an output path in the session config")
    started = time.perf_counter()
    script = load_script(config.script)
    frames, tallies, invalid = simulate_wire_frames(script)
    audio, trigger_events = synthesize(frames, config)
    write_wav(audio, config.output)
    elapsed = time.perf_counter() - started
    duration_s = len(frames) / FRAME_RATE_HZ
    return {
        "mode": config.mode,
        "additive_method": config.additive_method,
        "frames": len(frames),
        "duration_s": duration_s,
        "sample_rate": config.sample_rate,
        "output": config.output,
        "codec_tallies": tallies.as_dict(),
        "invalid_transitions": invalid,
        "trigger_events": trigger_events,
        "peak_amplitude": audio.peak(),
        "render_seconds_per_audio_second": elapsed / duration_s,
    }

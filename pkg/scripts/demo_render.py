#!/usr/bin/env python3
"""Render one wave gesture through all three engines into ./demo_out.

Usage: python3 scripts/demo_render.py [seconds]
"""
import json
import pathlib
import sys

import numpy as np

from rodmatrix.audio import AudioBuffer, write_wav
from rodmatrix.pipeline import parse_session_config, run_render


def main() -> int:
    seconds = float(sys.argv[1]) if len(sys.argv) > 1 else 10.0
    out_dir = pathlib.Path("demo_out")
    out_dir.mkdir(exist_ok=True)

    script = {
        "duration_ms": int(seconds * 1000),
        "keyframes": [],
        "generators": [
            {"kind": "wave", "axis": "col", "freq_hz": 0.5, "amplitude": 127.0, "phase": 0.0}
        ],
    }
    script_path = out_dir / "wave.json"
    script_path.write_text(json.dumps(script, indent=2))

    # A bright two-partial loop gives the granular engine something to chew on.
    t = np.arange(int(3.6 * 44100)) / 44100
    source = 0.5 * np.sin(2 * np.pi * 220 * t) + 0.25 * np.sin(2 * np.pi * 327 * t)
    source_path = out_dir / "source.wav"
    write_wav(AudioBuffer(samples=source), str(source_path))

    for mode in ("additive", "granular", "drums"):
        cfg = {
            "mode": mode,
            "script": str(script_path),
            "output": str(out_dir / f"{mode}.wav"),
        }
        if mode == "granular":
            cfg["source_wav"] = str(source_path)
        report = run_render(parse_session_config(cfg))
        print(f"{mode:>9}: peak={report['peak_amplitude']:.3f} "
              f"events={report['trigger_events']} "
              f"cost={report['render_seconds_per_audio_second']:.3f}s/s "
              f"-> {report['output']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

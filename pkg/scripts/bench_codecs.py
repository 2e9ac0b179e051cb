#!/usr/bin/env python3
"""Throughput figures for the sensing fold and both wire codecs.

Usage: python3 scripts/bench_codecs.py
"""
import sys
import time

import numpy as np

from rodmatrix.framing import SurfaceFrame, decode_stream, encode_frame, link_budget
from rodmatrix.osc import decode_osc_frame, encode_osc_frame
from rodmatrix.sensing import encode_motion, track


def timed(label, fn):
    t0 = time.perf_counter()
    result = fn()
    dt = time.perf_counter() - t0
    print(f"{label:<38} {dt:8.3f}s  {result}")


def main() -> int:
    rng = np.random.default_rng(0)

    sweep = encode_motion(0, 127, 0b00) + encode_motion(127, 0, 0b10)
    stream = sweep * 4000  # ~1M transitions
    timed("quadrature track, 1.02M steps", lambda: track(stream))

    frames = [
        SurfaceFrame(seq=i % 128, positions=tuple(int(v) for v in rng.integers(0, 128, 144)))
        for i in range(5000)
    ]
    wire = b"".join(encode_frame(f) for f in frames)
    timed("serial decode, 5000 frames", lambda: len(decode_stream(wire)[0]))

    packets = [encode_osc_frame(f) for f in frames]
    timed("osc round trip, 5000 frames", lambda: sum(
        1 for p in packets if decode_osc_frame(p).seq >= 0
    ))

    stats = link_budget(57600, 147)
    print(f"\nlink budget @57.6kbaud/147B: {stats.max_fps:.2f} fps max, "
          f"{stats.utilization_at_30hz:.1%} line use at 30 Hz")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Simulated 12x12 bed of spring-returned rods.

Rods travel 4 inches; position is measured in 7-bit counts (0 = at rest,
up; 127 = fully depressed).  Targets come from gesture scripts or live
UI edits and are reached instantly (the driving hand sets the surface);
unheld rods relax back toward rest at a constant rate.  Each rod's
counter is maintained through the real quadrature chain, so every
simulated frame exercises encode_motion/track rather than shortcutting
to quantize().
"""
from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Mapping

from .framing import SurfaceFrame
from .sensing import encode_motion, track

GRID_ROWS = 12
GRID_COLS = 12
N_RODS = GRID_ROWS * GRID_COLS
TRAVEL_IN = 4.0
FULL_SCALE = 127
FRAME_RATE_HZ = 30.0
FRAME_PERIOD_MS = 1000.0 / FRAME_RATE_HZ
DEFAULT_RETURN_RATE = 500.0  # counts per second toward rest

GENERATOR_KINDS = ("wave", "press", "ramp")
AXES = ("row", "col")

# Script times are integer ms but tick times accumulate float error; span
# checks tolerate a sub-microsecond slop so exact keyframe endpoints hold.
_T_EPS_MS = 1e-6


class ScriptError(ValueError):
    """Raised when a gesture script fails validation."""


def quantize(depth: float) -> int:
    """Counter value for a depth in inches; round half up."""
    if not 0.0 <= depth <= TRAVEL_IN:
        raise ValueError(f"depth {depth} outside [0, {TRAVEL_IN}]")
    return int(math.floor(depth / TRAVEL_IN * FULL_SCALE + 0.5))


def depth_of(counts: float) -> float:
    """Inverse of quantize on the continuous scale."""
    return counts / FULL_SCALE * TRAVEL_IN


# ---------------------------------------------------------------------------
# Gesture scripts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Generator:
    kind: str
    axis: str
    freq_hz: float
    amplitude: float  # counts
    phase: float = 0.0  # radians


@dataclass(frozen=True)
class Keyframe:
    t_ms: int
    targets: tuple[tuple[int, float], ...]  # (rod_index, counts)


@dataclass
class GestureScript:
    """Validated script: keyframe envelopes plus periodic generators.

    A rod has a keyframe target while t lies between its first and last
    mention; between mentions the value is linearly interpolated, outside
    them the rod is released.  Generators contribute to every rod along
    their axis for the whole script duration.  Contributions sum and
    clamp to [0,127] counts.
    """

    duration_ms: int
    keyframes: tuple[Keyframe, ...] = ()
    generators: tuple[Generator, ...] = ()
    # per-rod (times, values) tracks compiled from the keyframes
    _tracks: dict[int, tuple[list[int], list[float]]] = field(
        default_factory=dict, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        tracks: dict[int, tuple[list[int], list[float]]] = {}
        for kf in self.keyframes:
            for rod, value in kf.targets:
                times, values = tracks.setdefault(rod, ([], []))
                times.append(kf.t_ms)
                values.append(value)
        self._tracks = tracks

    def target_counts(self, rod: int, t_ms: float) -> float | None:
        """Scripted target for one rod at time t, or None when released."""
        total = None
        track_ = self._tracks.get(rod)
        if track_ is not None:
            times, values = track_
            if times[0] - _T_EPS_MS <= t_ms <= times[-1] + _T_EPS_MS:
                j = bisect_right(times, t_ms)
                if j >= len(times):
                    total = values[-1]
                elif j == 0:  # pragma: no cover - guarded by the range check
                    total = values[0]
                else:
                    t0, t1 = times[j - 1], times[j]
                    v0, v1 = values[j - 1], values[j]
                    frac = 0.0 if t1 == t0 else (t_ms - t0) / (t1 - t0)
                    total = v0 + frac * (v1 - v0)
        if self.generators and -_T_EPS_MS <= t_ms <= self.duration_ms + _T_EPS_MS:
            row, col = divmod(rod, GRID_COLS)
            gen_sum = 0.0
            for gen in self.generators:
                k = col if gen.axis == "col" else row
                gen_sum += generator_value(gen, k, t_ms)
            total = gen_sum if total is None else total + gen_sum
        if total is None:
            return None
        return min(float(FULL_SCALE), max(0.0, total))

    def targets_at(self, t_ms: float) -> dict[int, float]:
        """All active rod targets at time t, in counts."""
        out: dict[int, float] = {}
        if self.generators and -_T_EPS_MS <= t_ms <= self.duration_ms + _T_EPS_MS:
            rods: range | set[int] = range(N_RODS)
        else:
            rods = set(self._tracks)
        for rod in rods:
            value = self.target_counts(rod, t_ms)
            if value is not None:
                out[rod] = value
        return out


def generator_value(gen: Generator, axis_index: int, t_ms: float) -> float:
    """One generator's contribution, in counts, at a grid line and time.

    All three kinds are periodic in u = freq*t + phase/2pi - k/12, a
    wave travelling one grid line per twelfth of a cycle: wave is a
    raised sine, ramp a rising sawtooth, press a half-duty square.
    """
    u = gen.freq_hz * (t_ms / 1000.0) + gen.phase / (2.0 * math.pi) - axis_index / 12.0
    cycle = u - math.floor(u)
    if gen.kind == "wave":
        return gen.amplitude * 0.5 * (1.0 + math.sin(2.0 * math.pi * u))
    if gen.kind == "ramp":
        return gen.amplitude * cycle
    if gen.kind == "press":
        return gen.amplitude if cycle < 0.5 else 0.0
    raise ScriptError(f"unknown generator kind {gen.kind!r}")  # pragma: no cover


def _require_keys(obj: dict, required: dict, optional: dict, where: str) -> None:
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise ScriptError(f"unknown fields in {where}: {sorted(unknown)}")
    missing = set(required) - set(obj)
    if missing:
        raise ScriptError(f"missing fields in {where}: {sorted(missing)}")


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScriptError(f"{where} must be an integer, got {value!r}")
    return value


def _as_number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScriptError(f"{where} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ScriptError(f"{where} must be finite")
    return float(value)


def parse_script(data: dict) -> GestureScript:
    """Validate a script dictionary; times are integer milliseconds."""
    if not isinstance(data, dict):
        raise ScriptError("script root must be an object")
    _require_keys(data, {"duration_ms": 1}, {"keyframes": 1, "generators": 1}, "script")
    duration = _as_int(data["duration_ms"], "duration_ms")
    if duration <= 0:
        raise ScriptError("duration_ms must be positive")

    keyframes: list[Keyframe] = []
    last_t: int | None = None
    for i, kf in enumerate(data.get("keyframes", [])):
        where = f"keyframes[{i}]"
        if not isinstance(kf, dict):
            raise ScriptError(f"{where} must be an object")
        _require_keys(kf, {"t_ms": 1, "targets": 1}, {}, where)
        t = _as_int(kf["t_ms"], f"{where}.t_ms")
        if t < 0:
            raise ScriptError(f"{where}.t_ms must be >= 0")
        if last_t is not None and t <= last_t:
            raise ScriptError("keyframe times must be strictly increasing")
        last_t = t
        targets = []
        seen: set[int] = set()
        if not isinstance(kf["targets"], list) or not kf["targets"]:
            raise ScriptError(f"{where}.targets must be a non-empty list")
        for j, tgt in enumerate(kf["targets"]):
            twhere = f"{where}.targets[{j}]"
            if not isinstance(tgt, dict):
                raise ScriptError(f"{twhere} must be an object")
            _require_keys(tgt, {"rod_index": 1, "value": 1}, {}, twhere)
            rod = _as_int(tgt["rod_index"], f"{twhere}.rod_index")
            if not 0 <= rod < N_RODS:
                raise ScriptError(f"{twhere}.rod_index {rod} outside [0,143]")
            if rod in seen:
                raise ScriptError(f"{twhere}: duplicate rod_index {rod}")
            seen.add(rod)
            value = _as_number(tgt["value"], f"{twhere}.value")
            if not 0 <= value <= FULL_SCALE:
                raise ScriptError(f"{twhere}.value {value} outside [0,127]")
            targets.append((rod, value))
        keyframes.append(Keyframe(t_ms=t, targets=tuple(targets)))

    generators: list[Generator] = []
    for i, gen in enumerate(data.get("generators", [])):
        where = f"generators[{i}]"
        if not isinstance(gen, dict):
            raise ScriptError(f"{where} must be an object")
        _require_keys(
            gen,
            {"kind": 1, "axis": 1, "freq_hz": 1, "amplitude": 1},
            {"phase": 1},
            where,
        )
        kind = gen["kind"]
        if kind not in GENERATOR_KINDS:
            raise ScriptError(f"{where}.kind {kind!r} not one of {GENERATOR_KINDS}")
        axis = gen["axis"]
        if axis not in AXES:
            raise ScriptError(f"{where}.axis {axis!r} not one of {AXES}")
        freq = _as_number(gen["freq_hz"], f"{where}.freq_hz")
        if freq < 0:
            raise ScriptError(f"{where}.freq_hz must be >= 0")
        amplitude = _as_number(gen["amplitude"], f"{where}.amplitude")
        if not 0 <= amplitude <= FULL_SCALE:
            raise ScriptError(f"{where}.amplitude {amplitude} outside [0,127]")
        phase = _as_number(gen.get("phase", 0.0), f"{where}.phase")
        generators.append(
            Generator(kind=kind, axis=axis, freq_hz=freq, amplitude=amplitude, phase=phase)
        )

    return GestureScript(
        duration_ms=duration,
        keyframes=tuple(keyframes),
        generators=tuple(generators),
    )


def load_script(path: str) -> GestureScript:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScriptError(f"not valid JSON: {exc}") from exc
    return parse_script(data)


# ---------------------------------------------------------------------------
# Grid simulation
# ---------------------------------------------------------------------------

@dataclass
class RodChannel:
    """One rod: continuous depth plus its tracked sensing state."""

    depth: float = 0.0  # inches, 0 = at rest
    target: float | None = None  # inches, None when released
    counter: int = 0
    phase: int = 0b00


class RodGrid:
    """The 144-rod surface, stepped one 30 Hz tick at a time."""

    def __init__(
        self,
        return_rate: float = DEFAULT_RETURN_RATE,
        frame_period_ms: float = FRAME_PERIOD_MS,
    ):
        if return_rate <= 0:
            raise ValueError("return_rate must be positive")
        self.rods = [RodChannel() for _ in range(N_RODS)]
        self.return_rate = return_rate
        self.frame_period_ms = frame_period_ms
        self.invalid_transitions = 0

    def advance(self, targets: Mapping[int, float]) -> None:
        """One tick: held rods take their targets, the rest spring back."""
        decay = self.return_rate * self.frame_period_ms / 1000.0  # counts/tick
        for i, rod in enumerate(self.rods):
            tgt = targets.get(i)
            if tgt is None:
                rod.target = None
                cur = rod.depth / TRAVEL_IN * FULL_SCALE
                if cur > 0.0:
                    rod.depth = depth_of(max(0.0, cur - decay))
            else:
                clamped = min(float(FULL_SCALE), max(0.0, float(tgt)))
                rod.target = depth_of(clamped)
                rod.depth = rod.target
            self._sense(rod)

    def _sense(self, rod: RodChannel) -> None:
        # Track the counter through the quadrature chain; with a clean
        # stream it lands exactly on quantize(depth).
        q = quantize(rod.depth)
        if q == rod.counter:
            return
        stream = encode_motion(rod.counter, q, rod.phase)
        counter, invalid = track(stream, rod.counter, rod.phase)
        rod.counter = counter
        rod.phase = stream[-1]
        self.invalid_transitions += invalid

    def positions(self) -> tuple[int, ...]:
        return tuple(rod.counter for rod in self.rods)


def step_simulation(grid: RodGrid, script: GestureScript | None, t_ms: float) -> RodGrid:
    """Advance the grid one tick to time t_ms under a script (or none)."""
    if t_ms < 0:
        raise ValueError("t_ms must be >= 0")
    targets = script.targets_at(t_ms) if script is not None else {}
    grid.advance(targets)
    return grid


def snapshot(grid: RodGrid, seq: int) -> SurfaceFrame:
    """Immutable frame of the current counters, seq wrapped mod 128."""
    return SurfaceFrame(seq=seq % 128, positions=grid.positions())

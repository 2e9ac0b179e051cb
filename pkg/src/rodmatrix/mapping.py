"""Mappings from surface frames to synthesis control data.

Three families, matching the three play modes: harmonic amplitude
vectors for additive synthesis, per-grain parameter planes for granular
synthesis, and gesture-feature-driven percussion triggers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .framing import SurfaceFrame

GRID = 12
N_RODS = 144
FULL_SCALE = 127

ADDITIVE_MODES = ("columns", "full")
GRANULAR_MODES = ("level", "length", "pitch", "order")

DEFAULT_F0 = 110.0
DEFAULT_L_MIN_MS = 20.0
DEFAULT_L_MAX_MS = 200.0
DEFAULT_GRAIN_MS = 50.0
DEFAULT_THETA = 4.0
DEFAULT_COOLDOWN_MS = 100.0
DEFAULT_V_GAIN = 8.0


@dataclass(frozen=True)
class HarmonicSpectrum:
    """Normalized harmonic amplitudes; amplitudes[k] drives harmonic k+1."""

    amplitudes: np.ndarray
    f0: float

    @property
    def k(self) -> int:
        return len(self.amplitudes)


def additive_spectrum(frame: SurfaceFrame, mode: str = "columns", f0: float = DEFAULT_F0) -> HarmonicSpectrum:
    """Surface heights to harmonic amplitudes.

    columns mode averages each of the 12 columns into one harmonic;
    full mode gives every rod its own harmonic (K = 144).
    """
    if mode not in ADDITIVE_MODES:
        raise ValueError(f"mode {mode!r} not one of {ADDITIVE_MODES}")
    if f0 <= 0:
        raise ValueError("f0 must be positive")
    heights = np.asarray(frame.positions, dtype=np.float64)
    if mode == "columns":
        amps = heights.reshape(GRID, GRID).mean(axis=0) / FULL_SCALE
    else:
        amps = heights / FULL_SCALE
    return HarmonicSpectrum(amplitudes=amps, f0=f0)


@dataclass(frozen=True)
class GrainControls:
    """Per-grain parameter planes; exactly one plane is driven per mode.

    rank[i] is grain i's playback position; ranks always form a
    permutation of 0..143.
    """

    gain: np.ndarray
    length_ms: np.ndarray
    pitch_ratio: np.ndarray
    rank: np.ndarray
    mode: str


def granular_controls(
    frame: SurfaceFrame,
    mode: str,
    l_min_ms: float = DEFAULT_L_MIN_MS,
    l_max_ms: float = DEFAULT_L_MAX_MS,
) -> GrainControls:
    """Surface heights to grain parameters; grain i is bound to rod i."""
    if mode not in GRANULAR_MODES:
        raise ValueError(f"mode {mode!r} not one of {GRANULAR_MODES}")
    if not 0 < l_min_ms <= l_max_ms:
        raise ValueError("need 0 < l_min_ms <= l_max_ms")
    h = np.asarray(frame.positions, dtype=np.float64) / FULL_SCALE
    gain = np.ones(N_RODS)
    length_ms = np.full(N_RODS, DEFAULT_GRAIN_MS)
    pitch_ratio = np.ones(N_RODS)
    rank = np.arange(N_RODS)
    if mode == "level":
        gain = h.copy()
    elif mode == "length":
        length_ms = l_min_ms + h * (l_max_ms - l_min_ms)
    elif mode == "pitch":
        # 2^(2h-1): bottom of travel is one octave down, top one octave up.
        pitch_ratio = np.exp2(2.0 * h - 1.0)
    else:
        # Tallest rod plays first; ties resolve by rod index.
        heights = np.asarray(frame.positions)
        order = np.lexsort((np.arange(N_RODS), -heights))
        rank = np.empty(N_RODS, dtype=np.int64)
        rank[order] = np.arange(N_RODS)
    return GrainControls(
        gain=gain, length_ms=length_ms, pitch_ratio=pitch_ratio, rank=rank, mode=mode
    )


@dataclass(frozen=True)
class GestureFeatures:
    activity: float  # mean absolute per-frame count change, 0..127
    excursion: int  # max count in the current frame, 0..127


def gesture_features(cur: SurfaceFrame, prev: SurfaceFrame) -> GestureFeatures:
    a = np.asarray(cur.positions, dtype=np.int64)
    b = np.asarray(prev.positions, dtype=np.int64)
    if a.shape != b.shape:
        raise ValueError("frames differ in shape")
    return GestureFeatures(
        activity=float(np.abs(a - b).mean()),
        excursion=int(a.max()),
    )


@dataclass(frozen=True)
class TriggerEvent:
    t_ms: float
    lane: int  # column 0..11
    velocity: int  # 1..127
    pitch_class: int  # 0..11


@dataclass
class DrumState:
    """Per-lane cooldown clocks plus the trigger tuning knobs."""

    theta: float = DEFAULT_THETA
    cooldown_ms: float = DEFAULT_COOLDOWN_MS
    v_gain: float = DEFAULT_V_GAIN
    last_fire_ms: list[float] = field(default_factory=lambda: [-math.inf] * GRID)


def drum_triggers(
    cur: SurfaceFrame,
    prev: SurfaceFrame,
    state: DrumState,
    t_ms: float,
) -> list[TriggerEvent]:
    """Fire lanes whose column motion crossed the threshold this frame.

    Velocity follows overall activity; pitch class falls as excursion
    grows, so gentle shallow play lands high and vigorous deep play low.
    """
    a = np.asarray(cur.positions, dtype=np.int64).reshape(GRID, GRID)
    b = np.asarray(prev.positions, dtype=np.int64).reshape(GRID, GRID)
    column_change = np.abs(a - b).mean(axis=0)
    feats = gesture_features(cur, prev)
    velocity = int(min(127, max(1, round(state.v_gain * feats.activity))))
    pitch_class = 11 - (feats.excursion * 12) // 128
    events: list[TriggerEvent] = []
    for lane in range(GRID):
        if column_change[lane] <= state.theta:
            continue
        if t_ms - state.last_fire_ms[lane] < state.cooldown_ms:
            continue
        state.last_fire_ms[lane] = t_ms
        events.append(
            TriggerEvent(t_ms=t_ms, lane=lane, velocity=velocity, pitch_class=pitch_class)
        )
    return events


@dataclass(frozen=True)
class MappingConfig:
    """The mapping knobs exposed in session config files."""

    mode: str = "columns"
    f0: float = DEFAULT_F0
    l_min_ms: float = DEFAULT_L_MIN_MS
    l_max_ms: float = DEFAULT_L_MAX_MS
    theta: float = DEFAULT_THETA
    cooldown_ms: float = DEFAULT_COOLDOWN_MS
    v_gain: float = DEFAULT_V_GAIN


_CONFIG_KEYS = {
    "mode": str,
    "f0": (int, float),
    "L_min_ms": (int, float),
    "L_max_ms": (int, float),
    "theta": (int, float),
    "cooldown_ms": (int, float),
    "v_gain": (int, float),
}


def parse_mapping_config(data: dict) -> MappingConfig:
    """Parse the JSON mapping block; unknown keys are rejected."""
    if not isinstance(data, dict):
        raise ValueError("mapping config must be an object")
    unknown = set(data) - set(_CONFIG_KEYS)
    if unknown:
        raise ValueError(f"unknown mapping config fields: {sorted(unknown)}")
    for key, types in _CONFIG_KEYS.items():
        if key in data and not isinstance(data[key], types):
            raise ValueError(f"mapping config {key} has wrong type")
    cfg = MappingConfig(
        mode=data.get("mode", "columns"),
        f0=float(data.get("f0", DEFAULT_F0)),
        l_min_ms=float(data.get("L_min_ms", DEFAULT_L_MIN_MS)),
        l_max_ms=float(data.get("L_max_ms", DEFAULT_L_MAX_MS)),
        theta=float(data.get("theta", DEFAULT_THETA)),
        cooldown_ms=float(data.get("cooldown_ms", DEFAULT_COOLDOWN_MS)),
        v_gain=float(data.get("v_gain", DEFAULT_V_GAIN)),
    )
    if cfg.mode not in ADDITIVE_MODES + GRANULAR_MODES:
        raise ValueError(f"mapping mode {cfg.mode!r} unknown")
    if cfg.f0 <= 0:
        raise ValueError("f0 must be positive")
    if not 0 < cfg.l_min_ms <= cfg.l_max_ms:
        raise ValueError("need 0 < L_min_ms <= L_max_ms")
    if cfg.theta < 0 or cfg.cooldown_ms < 0 or cfg.v_gain <= 0:
        raise ValueError("theta/cooldown_ms must be >= 0 and v_gain > 0")
    return cfg

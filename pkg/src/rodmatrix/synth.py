"""Offline synthesis engines driven by control-frame timelines.

Three renderers share a convention: controls arrive at the surface frame
rate (30 Hz) and audio comes back as a mono AudioBuffer. The additive
engine has two routes, a direct oscillator bank and an inverse-FFT
overlap-add renderer, which must agree on static spectra.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import signal

from .audio import DEFAULT_SAMPLE_RATE, AudioBuffer
from .framing import N_RODS
from .mapping import GrainControls, HarmonicSpectrum, TriggerEvent
from .surface import FRAME_RATE_HZ

DEFAULT_BLOCK_SIZE = 4410

# Percussion voice: exponential decay time constant and total hit length.
HIT_TAU_S = 0.150
HIT_LENGTH_S = 0.8
HIT_BASE_HZ = 200.0


def soft_clip(samples: np.ndarray) -> np.ndarray:
    """Identity when the signal already fits [-1, 1], else tanh limiting."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0 or np.max(np.abs(samples)) <= 1.0:
        return samples
    return np.tanh(samples)


def _check_timeline(timeline: Sequence[HarmonicSpectrum], sample_rate: int) -> tuple[np.ndarray, int, float]:
    if not timeline:
        raise ValueError("timeline must contain at least one spectrum")
    k = timeline[0].k
    f0 = timeline[0].f0
    for spectrum in timeline:
        if spectrum.k != k or spectrum.f0 != f0:
            raise ValueError("all spectra in a timeline must share k and f0")
    if k * f0 >= sample_rate / 2:
        raise ValueError("highest harmonic exceeds the Nyquist frequency")
    amps = np.stack([spectrum.amplitudes for spectrum in timeline])
    return amps, k, f0


def render_additive_bank(
    timeline: Sequence[HarmonicSpectrum],
    duration_s: float,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
    frame_rate_hz: float = FRAME_RATE_HZ,
) -> AudioBuffer:
    """Sum of k sine partials with per-sample interpolated amplitudes.

    Output gain is 1/k, so the result is bounded by 1.0 whenever every
    amplitude stays within [0, 1].
    """
    amps, k, f0 = _check_timeline(timeline, sample_rate)
    n = round(duration_s * sample_rate)
    t = np.arange(n) / sample_rate
    frame_t = np.arange(len(timeline)) / frame_rate_hz
    out = np.zeros(n)
    for h in range(k):
        column = amps[:, h]
        if not column.any():
            continue
        env = column[0] if len(column) == 1 else np.interp(t, frame_t, column)
        out += env * np.sin(2.0 * np.pi * (h + 1) * f0 * t)
    out /= k
    return AudioBuffer(samples=out, sample_rate=sample_rate)


def render_additive_ifft(
    timeline: Sequence[HarmonicSpectrum],
    duration_s: float,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
    frame_rate_hz: float = FRAME_RATE_HZ,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> AudioBuffer:
    """Inverse-FFT additive route: spectral blocks, 50% overlap-add.

    Each block places harmonic h on bin h*m where m is the integral
    number of fundamental periods per block. Bin values carry a phase
    rotation for the block's start offset so overlapping blocks stay
    sample-aligned; with the periodic Hann window at half-block hop the
    window sum is exactly one.
    """
    amps, k, f0 = _check_timeline(timeline, sample_rate)
    if block_size <= 0 or block_size % 2:
        raise ValueError("block_size must be a positive even number")
    m_float = f0 * block_size / sample_rate
    m = round(m_float)
    if m < 1 or abs(m_float - m) > 1e-9:
        raise ValueError("block_size must hold a whole number of fundamental periods")
    if k * m > block_size // 2:
        raise ValueError("highest harmonic bin exceeds the block's spectrum")

    hop = block_size // 2
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(block_size) / block_size)
    n = round(duration_s * sample_rate)
    base = block_size
    acc = np.zeros(n + 2 * block_size)
    harmonics = np.arange(1, k + 1)
    bins = harmonics * m
    n_frames = len(timeline)

    offset = -hop
    while offset < n:
        center_t = (offset + block_size / 2) / sample_rate
        frame = min(max(int(np.floor(center_t * frame_rate_hz + 0.5)), 0), n_frames - 1)
        spectrum = np.zeros(block_size // 2 + 1, dtype=complex)
        phase = 2.0 * np.pi * f0 * harmonics * offset / sample_rate
        spectrum[bins] = -0.5j * block_size * amps[frame] * np.exp(1j * phase)
        block = np.fft.irfft(spectrum, block_size)
        acc[offset + base : offset + base + block_size] += window * block
        offset += hop
    out = acc[base : base + n] / k
    return AudioBuffer(samples=out, sample_rate=sample_rate)


@dataclass(frozen=True)
class GrainDescriptor:
    """One playable slice of the source material."""

    source_offset: int
    length: int
    gain: float = 1.0
    pitch_ratio: float = 1.0
    window: str = "hann"


@dataclass(frozen=True)
class GrainEvent:
    """A grain placed on the output timeline by the scheduler."""

    start: int
    grain: int
    length: int
    gain: float
    pitch_ratio: float


def slice_grains(
    source: np.ndarray,
    n_grains: int = N_RODS,
    base_length_ms: float = 50.0,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
) -> list[GrainDescriptor]:
    """Evenly spread n_grains read offsets across the source."""
    source = np.asarray(source)
    if source.size == 0:
        raise ValueError("source material is empty")
    if n_grains < 1:
        raise ValueError("n_grains must be positive")
    length = max(2, round(base_length_ms / 1000.0 * sample_rate))
    return [
        GrainDescriptor(source_offset=int(np.floor(i * source.size / n_grains)), length=length)
        for i in range(n_grains)
    ]


def _playback_order(rank: np.ndarray) -> np.ndarray:
    return np.argsort(rank, kind="stable")


def schedule_grains(
    timeline: Sequence[GrainControls],
    n_samples: int,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
    frame_rate_hz: float = FRAME_RATE_HZ,
) -> list[GrainEvent]:
    """Sequence grains at 50% overlap, honouring the per-frame rank order.

    Grain g of frame controls c plays for c.length_ms[g] at c.gain[g] and
    c.pitch_ratio[g]; the next grain starts half a grain later. Only
    grains that fit the output window entirely are scheduled.
    """
    if not timeline:
        raise ValueError("timeline must contain at least one control frame")
    events: list[GrainEvent] = []
    t = 0.0
    step = 0
    cached_frame = -1
    order = None
    n_frames = len(timeline)
    while True:
        frame = min(int(t / sample_rate * frame_rate_hz), n_frames - 1)
        controls = timeline[frame]
        if frame != cached_frame:
            order = _playback_order(controls.rank)
            cached_frame = frame
        grain = int(order[step % N_RODS])
        length = max(2, round(float(controls.length_ms[grain]) / 1000.0 * sample_rate))
        if t + length > n_samples:
            break
        events.append(
            GrainEvent(
                start=round(t),
                grain=grain,
                length=length,
                gain=float(controls.gain[grain]),
                pitch_ratio=float(controls.pitch_ratio[grain]),
            )
        )
        t += length / 2.0
        step += 1
    return events


def render_grain(source: np.ndarray, offsets: Sequence[int], event: GrainEvent) -> np.ndarray:
    """Windowed, gained grain samples read at the event's pitch ratio.

    Reads wrap circularly and interpolate linearly between source samples.
    """
    source = np.asarray(source, dtype=np.float64)
    pos = (offsets[event.grain] + np.arange(event.length) * event.pitch_ratio) % source.size
    i0 = pos.astype(np.intp)
    frac = pos - i0
    i1 = (i0 + 1) % source.size
    samples = source[i0] * (1.0 - frac) + source[i1] * frac
    return event.gain * np.hanning(event.length) * samples


def render_granular(
    source: np.ndarray,
    timeline: Sequence[GrainControls],
    duration_s: float,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
    frame_rate_hz: float = FRAME_RATE_HZ,
) -> AudioBuffer:
    """Overlap-add granular resynthesis of the source material."""
    source = np.asarray(source, dtype=np.float64)
    if source.size == 0:
        raise ValueError("source material is empty")
    offsets = [d.source_offset for d in slice_grains(source, sample_rate=sample_rate)]
    n = round(duration_s * sample_rate)
    out = np.zeros(n)
    for event in schedule_grains(timeline, n, sample_rate, frame_rate_hz):
        out[event.start : event.start + event.length] += render_grain(source, offsets, event)
    return AudioBuffer(samples=soft_clip(out), sample_rate=sample_rate)


def _hit_seed(event: TriggerEvent) -> int:
    # Velocity is deliberately left out: the same hit at a different
    # strength must reuse the same noise so scaling stays linear.
    t_us = int(round(event.t_ms * 1000.0))
    return ((t_us & 0xFFFFFFFFFF) << 8) | ((event.lane & 0xF) << 4) | (event.pitch_class & 0xF)


def _render_hit(event: TriggerEvent, n: int, sample_rate: int) -> np.ndarray:
    t = np.arange(n) / sample_rate
    env = np.exp(-t / HIT_TAU_S)
    freq = HIT_BASE_HZ * 2.0 ** (event.pitch_class / 3.0)
    high = freq * np.sqrt(2.0)
    if high >= sample_rate / 2:
        raise ValueError("sample_rate too low for the percussion voice")
    tone = np.sin(2.0 * np.pi * freq * t)
    rng = np.random.default_rng(_hit_seed(event))
    noise = rng.standard_normal(n)
    sos = signal.butter(2, [freq / np.sqrt(2.0), high], btype="bandpass", fs=sample_rate, output="sos")
    band = signal.sosfilt(sos, noise)
    peak = np.max(np.abs(band))
    if peak > 0:
        band = band / peak
    return (event.velocity / 127.0) * env * (0.5 * tone + 0.5 * band)


def render_percussion(
    events: Sequence[TriggerEvent],
    duration_s: float,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
    limit: bool = True,
) -> AudioBuffer:
    """Place one decaying tone-plus-noise hit per trigger event.

    Hits superpose linearly; pass limit=False to skip the final soft
    limiter and observe the raw sum.
    """
    last = -np.inf
    for event in events:
        if event.t_ms < last:
            raise ValueError("events must be sorted by time")
        last = event.t_ms
    n = round(duration_s * sample_rate)
    out = np.zeros(n)
    hit_len = round(HIT_LENGTH_S * sample_rate)
    for event in events:
        start = round(event.t_ms / 1000.0 * sample_rate)
        if start >= n or start < 0:
            continue
        length = min(hit_len, n - start)
        out[start : start + length] += _render_hit(event, length, sample_rate)
    if limit:
        out = soft_clip(out)
    return AudioBuffer(samples=out, sample_rate=sample_rate)

"""Mono audio buffers and 16-bit PCM WAV files.

The writer emits the canonical 44-byte RIFF/WAVE header by hand so the
layout is bit-exact and testable against independent size arithmetic.
"""
from __future__ import annotations

import struct
import wave
from dataclasses import dataclass, field

import numpy as np

DEFAULT_SAMPLE_RATE = 44100


@dataclass
class AudioBuffer:
    samples: np.ndarray
    sample_rate: int = DEFAULT_SAMPLE_RATE
    channels: int = 1

    def __post_init__(self) -> None:
        if self.channels != 1:
            raise ValueError("only mono buffers are supported")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        self.samples = np.asarray(self.samples, dtype=np.float64)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate

    def peak(self) -> float:
        return float(np.max(np.abs(self.samples))) if len(self.samples) else 0.0


def write_wav(buffer: AudioBuffer, path: str) -> None:
    """Write 16-bit PCM mono, little-endian, canonical 44-byte header."""
    clipped = np.clip(buffer.samples, -1.0, 1.0)
    pcm = np.rint(clipped * 32767.0).astype("<i2")
    data = pcm.tobytes()
    rate = buffer.sample_rate
    header = b"RIFF"
    header += struct.pack("<I", 36 + len(data))
    header += b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, rate, rate * 2, 2, 16)
    header += b"data" + struct.pack("<I", len(data))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data)


def read_wav(path: str) -> AudioBuffer:
    """Read a 16-bit PCM WAV; multichannel input keeps channel 0."""
    with wave.open(path, "rb") as fh:
        if fh.getsampwidth() != 2:
            raise ValueError(f"{path}: expected 16-bit PCM")
        rate = fh.getframerate()
        channels = fh.getnchannels()
        raw = fh.readframes(fh.getnframes())
    pcm = np.frombuffer(raw, dtype="<i2")
    if channels > 1:
        pcm = pcm[::channels]
    return AudioBuffer(samples=pcm.astype(np.float64) / 32767.0, sample_rate=rate)

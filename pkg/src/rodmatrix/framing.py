"""Serial wire format for surface frames.

Layout: [sync 0xFF][seq][144 position bytes][checksum], 147 bytes.  Every
payload byte is 7-bit, so the sync byte is the only byte with the high
bit set and a receiver can re-lock statelessly anywhere in the stream.
The checksum is (seq + sum of positions) mod 128.

147 bytes at 30 Hz fits the 57.6 kbaud 8N1 budget (5760 bytes/s) with
headroom; link_budget() does that arithmetic.
"""
from __future__ import annotations

from dataclasses import dataclass

SYNC = 0xFF
N_RODS = 144
FRAME_LEN = 147  # sync + seq + 144 positions + checksum


@dataclass(frozen=True)
class SurfaceFrame:
    """One 30 Hz snapshot of all 144 rod counts plus a sequence number.

    Positions are row-major (index = row*12 + col), each in [0,127];
    seq wraps mod 128.  Both constraints keep the high bit clear for
    the wire format.
    """

    seq: int
    positions: tuple[int, ...]

    def validate(self) -> None:
        if not 0 <= self.seq <= 127:
            raise ValueError(f"seq {self.seq} outside [0,127]")
        if len(self.positions) != N_RODS:
            raise ValueError(f"expected {N_RODS} positions, got {len(self.positions)}")
        for i, v in enumerate(self.positions):
            if not 0 <= v <= 127:
                raise ValueError(f"position[{i}] = {v} outside [0,127]")


@dataclass
class CodecTallies:
    """Decoder diagnostics: nothing here increments on a clean stream."""

    bad_checksum: int = 0
    truncated: int = 0
    resync_count: int = 0

    def total(self) -> int:
        return self.bad_checksum + self.truncated + self.resync_count

    def as_dict(self) -> dict[str, int]:
        return {
            "bad_checksum": self.bad_checksum,
            "truncated": self.truncated,
            "resync_count": self.resync_count,
        }


@dataclass(frozen=True)
class LinkStats:
    bytes_per_second: float
    max_fps: float
    utilization_at_30hz: float


def checksum(seq: int, positions) -> int:
    return (seq + sum(positions)) & 0x7F


def encode_frame(frame: SurfaceFrame) -> bytes:
    """Serialize a frame to its 147-byte wire form."""
    frame.validate()
    body = bytes([frame.seq, *frame.positions])
    return bytes([SYNC]) + body + bytes([checksum(frame.seq, frame.positions)])


class StreamDecoder:
    """Incremental frame scanner; safe to feed arbitrary corrupt bytes.

    Hunts for the sync byte, requires the 146 bytes after it to be 7-bit
    clean, then checks the checksum.  One resync is tallied per run of
    discarded bytes, a bad checksum drops exactly that frame, and a
    partial frame at the end of a capture counts as truncated on close().
    """

    def __init__(self) -> None:
        self.tallies = CodecTallies()
        self._buf = bytearray()
        self._discarding = False

    def feed(self, data: bytes) -> list[SurfaceFrame]:
        buf = self._buf
        buf.extend(data)
        frames: list[SurfaceFrame] = []
        i = 0
        n = len(buf)
        while i < n:
            if buf[i] != SYNC:
                j = buf.find(SYNC, i)
                self._discarding = True
                if j < 0:
                    i = n
                    break
                i = j
                continue
            if self._discarding:
                self.tallies.resync_count += 1
                self._discarding = False
            if n - i < FRAME_LEN:
                break  # partial frame: hold until more bytes arrive
            body = bytes(buf[i + 1 : i + FRAME_LEN])
            high = _first_high_bit(body)
            if high >= 0:
                # High bit inside the body: false sync or clobbered frame.
                # Rescan from the offender, which may be the true sync.
                self._discarding = True
                i = i + 1 + high
                continue
            if body[-1] == (body[0] + sum(body[1:-1])) & 0x7F:
                frames.append(SurfaceFrame(seq=body[0], positions=tuple(body[1:-1])))
            else:
                self.tallies.bad_checksum += 1
            i += FRAME_LEN
        del buf[:i]
        return frames

    def close(self) -> None:
        """End of capture: account for whatever is still buffered."""
        if self._buf:
            self.tallies.truncated += 1  # buffer only ever holds a partial frame
            self._buf.clear()
        elif self._discarding:
            self.tallies.resync_count += 1
        self._discarding = False


def decode_stream(data: bytes) -> tuple[list[SurfaceFrame], CodecTallies]:
    """One-shot decode of a complete capture."""
    dec = StreamDecoder()
    frames = dec.feed(bytes(data))
    dec.close()
    return frames, dec.tallies


def _first_high_bit(body: bytes) -> int:
    if max(body) < 0x80:
        return -1
    for k, b in enumerate(body):
        if b & 0x80:
            return k
    return -1  # pragma: no cover


def link_budget(baud: float, frame_len: int = FRAME_LEN) -> LinkStats:
    """Throughput arithmetic for an 8N1 serial line (10 line bits per byte)."""
    if baud <= 0:
        raise ValueError("baud must be positive")
    if frame_len <= 0:
        raise ValueError("frame_len must be positive")
    bps = baud / 10.0
    return LinkStats(
        bytes_per_second=bps,
        max_fps=bps / frame_len,
        utilization_at_30hz=30.0 * frame_len / bps,
    )

"""OSC 1.0 codec and UDP latency harness for remote operation.

Two message types, both over UDP:

  /matrix/frame  ,ib  <seq int32> <blob of 144 position bytes>   (172 bytes)
  /matrix/ping   ,ih  <probe id int32> <send time int64, microseconds> (32 bytes)

Frames ride in a blob rather than 144 int32 arguments, which keeps the
packet at 172 bytes and byte-orders the payload identically to the
serial link.  Decoding is strict: a decoded packet always re-encodes to
the identical bytes.
"""
from __future__ import annotations

import socket
import statistics
import struct
import time
from dataclasses import dataclass

from .framing import N_RODS, SurfaceFrame

FRAME_ADDRESS = "/matrix/frame"
PING_ADDRESS = "/matrix/ping"
DEFAULT_OSC_PORT = 9000

FRAME_PACKET_LEN = 172
PING_PACKET_LEN = 32

_FRAME_HEADER = FRAME_ADDRESS.encode() + b"\x00" * 3 + b",ib\x00"  # 16 + 4
_PING_HEADER = PING_ADDRESS.encode() + b"\x00" * 4 + b",ih\x00"  # 16 + 4


class OscDecodeError(ValueError):
    pass


class EndpointUnreachable(RuntimeError):
    pass


def pad_string(s: str) -> bytes:
    """OSC string: UTF-8 bytes, null-terminated, padded to a 4-byte boundary."""
    raw = s.encode() + b"\x00"
    return raw + b"\x00" * (-len(raw) % 4)


def encode_osc_frame(frame: SurfaceFrame) -> bytes:
    frame.validate()
    return (
        _FRAME_HEADER
        + struct.pack(">i", frame.seq)
        + struct.pack(">i", N_RODS)
        + bytes(frame.positions)
    )


def decode_osc_frame(packet: bytes) -> SurfaceFrame:
    """Strict inverse of encode_osc_frame."""
    address = _read_address(packet)
    if address != FRAME_ADDRESS:
        raise OscDecodeError(f"unknown address: {address!r}")
    if len(packet) < 24:
        raise OscDecodeError("malformed packet: too short for tags and arguments")
    if packet[:20] != _FRAME_HEADER:
        raise OscDecodeError("malformed packet: bad padding or type tags")
    seq = struct.unpack(">i", packet[20:24])[0]
    blob_size = struct.unpack(">i", packet[24:28])[0] if len(packet) >= 28 else -1
    if blob_size < 0:
        raise OscDecodeError("malformed packet: missing blob size")
    if blob_size > len(packet) - 28:
        raise OscDecodeError("truncated blob: size field exceeds packet")
    if blob_size != N_RODS:
        raise OscDecodeError(f"malformed packet: blob size {blob_size} != {N_RODS}")
    if len(packet) != FRAME_PACKET_LEN:
        raise OscDecodeError("malformed packet: trailing bytes after blob")
    if not 0 <= seq <= 127:
        raise OscDecodeError(f"malformed packet: seq {seq} outside [0,127]")
    positions = tuple(packet[28:28 + N_RODS])
    if max(positions) > 127:
        raise OscDecodeError("malformed packet: position byte has high bit set")
    return SurfaceFrame(seq=seq, positions=positions)


def encode_osc_ping(probe_id: int, timestamp_us: int) -> bytes:
    return _PING_HEADER + struct.pack(">iq", probe_id, timestamp_us)


def decode_osc_ping(packet: bytes) -> tuple[int, int]:
    address = _read_address(packet)
    if address != PING_ADDRESS:
        raise OscDecodeError(f"unknown address: {address!r}")
    if len(packet) != PING_PACKET_LEN or packet[:20] != _PING_HEADER:
        raise OscDecodeError("malformed packet: bad ping layout")
    return struct.unpack(">iq", packet[20:32])


def _read_address(packet: bytes) -> str:
    end = packet.find(b"\x00")
    if end <= 0:
        raise OscDecodeError("malformed packet: no address string")
    try:
        return packet[:end].decode()
    except UnicodeDecodeError as exc:
        raise OscDecodeError("malformed packet: address not UTF-8") from exc


@dataclass(frozen=True)
class LatencyStats:
    median_ms: float
    p95_ms: float
    max_ms: float
    sent: int
    received: int
    lost: int

    def as_dict(self) -> dict[str, float | int]:
        return {
            "median_ms": self.median_ms,
            "p95_ms": self.p95_ms,
            "max_ms": self.max_ms,
            "sent": self.sent,
            "received": self.received,
            "lost": self.lost,
        }


def measure_latency(
    host: str,
    port: int,
    n_probes: int,
    timeout_s: float = 1.0,
) -> LatencyStats:
    """Round-trip UDP pings against an echo peer; order statistics in ms.

    Lost probes are excluded from the statistics and counted.  Raises
    EndpointUnreachable when nothing comes back at all.
    """
    if n_probes < 1:
        raise ValueError("n_probes must be >= 1")
    rtts_ms: list[float] = []
    lost = 0
    with socket.socket(socket.AF_INET, socket.SOCK_DGRAM) as sock:
        for i in range(n_probes):
            packet = encode_osc_ping(i, time.time_ns() // 1000)
            t0 = time.perf_counter()
            try:
                sock.sendto(packet, (host, port))
            except OSError as exc:
                raise EndpointUnreachable(f"endpoint unreachable: {exc}") from exc
            deadline = t0 + timeout_s
            while True:
                remaining = deadline - time.perf_counter()
                if remaining <= 0:
                    lost += 1
                    break
                sock.settimeout(remaining)
                try:
                    data, _ = sock.recvfrom(2048)
                except socket.timeout:
                    lost += 1
                    break
                except OSError as exc:
                    raise EndpointUnreachable(f"endpoint unreachable: {exc}") from exc
                try:
                    probe_id, _ = decode_osc_ping(data)
                except OscDecodeError:
                    continue  # stray packet; keep waiting for ours
                if probe_id == i:
                    rtts_ms.append((time.perf_counter() - t0) * 1000.0)
                    break
                # A late echo of an earlier probe: ignore, keep waiting.
    if not rtts_ms:
        raise EndpointUnreachable(f"endpoint unreachable: no response from {host}:{port}")
    ordered = sorted(rtts_ms)
    rank95 = max(0, -(-len(ordered) * 95 // 100) - 1)  # nearest-rank p95
    return LatencyStats(
        median_ms=statistics.median(ordered),
        p95_ms=ordered[rank95],
        max_ms=ordered[-1],
        sent=n_probes,
        received=len(rtts_ms),
        lost=lost,
    )

"""OSC codec golden bytes, strict decoding, and the UDP latency probe."""
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rodmatrix.framing import SurfaceFrame
from rodmatrix.osc import (
    FRAME_PACKET_LEN,
    PING_PACKET_LEN,
    EndpointUnreachable,
    OscDecodeError,
    decode_osc_frame,
    decode_osc_ping,
    encode_osc_frame,
    encode_osc_ping,
    measure_latency,
    pad_string,
)

ZERO_FRAME = SurfaceFrame(seq=0, positions=(0,) * 144)


def golden_zero_packet() -> bytes:
    # Assembled by hand from OSC 1.0 rules: address null-terminated and
    # padded to 4, tag string likewise, big-endian int32 argument, blob
    # with a big-endian int32 size prefix.
    return (
        b"/matrix/frame\x00\x00\x00"
        + b",ib\x00"
        + (0).to_bytes(4, "big")
        + (144).to_bytes(4, "big")
        + bytes(144)
    )


def test_all_zero_frame_golden_packet():
    packet = encode_osc_frame(ZERO_FRAME)
    golden = golden_zero_packet()
    assert len(golden) == 172
    assert packet == golden
    assert packet[:13] == b"/matrix/frame"
    assert packet[13:16] == b"\x00\x00\x00"


def test_packet_length_constant_matches():
    assert FRAME_PACKET_LEN == 172
    assert len(encode_osc_frame(ZERO_FRAME)) == FRAME_PACKET_LEN


def test_round_trip_all_full():
    frame = SurfaceFrame(seq=127, positions=(127,) * 144)
    assert decode_osc_frame(encode_osc_frame(frame)) == frame


def test_truncated_packet_reports_truncated_blob():
    packet = encode_osc_frame(ZERO_FRAME)[:100]
    with pytest.raises(OscDecodeError, match="truncated blob"):
        decode_osc_frame(packet)


def test_unknown_address_rejected():
    packet = pad_string("/other") + b",ib\x00" + bytes(152)
    with pytest.raises(OscDecodeError, match="unknown address"):
        decode_osc_frame(packet)


def test_trailing_bytes_rejected():
    packet = encode_osc_frame(ZERO_FRAME) + b"\x00"
    with pytest.raises(OscDecodeError, match="malformed packet"):
        decode_osc_frame(packet)


def test_bad_tag_string_rejected():
    packet = bytearray(encode_osc_frame(ZERO_FRAME))
    packet[17] = ord("f")  # ",ib" -> ",fb"
    with pytest.raises(OscDecodeError, match="malformed packet"):
        decode_osc_frame(bytes(packet))


def test_decoded_packet_reencodes_byte_identically():
    rnd = random.Random(5)
    for _ in range(50):
        frame = SurfaceFrame(
            seq=rnd.randrange(128),
            positions=tuple(rnd.randrange(128) for _ in range(144)),
        )
        packet = encode_osc_frame(frame)
        assert encode_osc_frame(decode_osc_frame(packet)) == packet


@given(
    seq=st.integers(min_value=0, max_value=127),
    positions=st.lists(
        st.integers(min_value=0, max_value=127), min_size=144, max_size=144
    ),
)
def test_round_trip_property(seq, positions):
    frame = SurfaceFrame(seq=seq, positions=tuple(positions))
    assert decode_osc_frame(encode_osc_frame(frame)) == frame


def test_ping_round_trip_and_length():
    packet = encode_osc_ping(7, 1_700_000_000_123_456)
    assert len(packet) == PING_PACKET_LEN == 32
    assert decode_osc_ping(packet) == (7, 1_700_000_000_123_456)


def test_ping_rejects_frame_packet():
    with pytest.raises(OscDecodeError, match="unknown address"):
        decode_osc_ping(encode_osc_frame(ZERO_FRAME))


def test_loopback_latency_under_desk_target(udp_echo):
    echo = udp_echo()
    stats = measure_latency("127.0.0.1", echo.port, n_probes=20)
    assert stats.received == 20
    assert stats.lost == 0
    assert stats.median_ms < 50.0
    assert stats.median_ms <= stats.p95_ms <= stats.max_ms


def test_single_probe_median_equals_max(udp_echo):
    echo = udp_echo()
    stats = measure_latency("127.0.0.1", echo.port, n_probes=1)
    assert stats.median_ms == stats.max_ms == stats.p95_ms


def test_unreachable_endpoint_raises():
    # Nothing listens here; all probes time out.
    sock_port = 1  # reserved port, no listener in the sandbox
    with pytest.raises(EndpointUnreachable, match="unreachable"):
        measure_latency("127.0.0.1", sock_port, n_probes=2, timeout_s=0.2)


def test_zero_probes_is_usage_error():
    with pytest.raises(ValueError):
        measure_latency("127.0.0.1", 9000, n_probes=0)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])

"""Serial codec: byte-exact round trips, corruption handling, link budget."""
import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rodmatrix.framing import (
    FRAME_LEN,
    SYNC,
    CodecTallies,
    StreamDecoder,
    SurfaceFrame,
    checksum,
    decode_stream,
    encode_frame,
    link_budget,
)


def random_frame(rnd: random.Random, seq: int | None = None) -> SurfaceFrame:
    return SurfaceFrame(
        seq=rnd.randrange(128) if seq is None else seq,
        positions=tuple(rnd.randrange(128) for _ in range(144)),
    )


def test_encode_all_zero_frame_is_sync_plus_zeros():
    wire = encode_frame(SurfaceFrame(seq=0, positions=(0,) * 144))
    assert wire == bytes([SYNC]) + bytes(146)
    assert len(wire) == FRAME_LEN


def test_checksum_first_rod_full_seq_one_wraps_to_zero():
    # (1 + 127) mod 128 = 0
    frame = SurfaceFrame(seq=1, positions=(127,) + (0,) * 143)
    wire = encode_frame(frame)
    assert wire[-1] == 0
    assert checksum(1, frame.positions) == 0


def test_checksum_all_positions_full():
    # 144*127 = 18288; 18288 mod 128 = 112
    frame = SurfaceFrame(seq=0, positions=(127,) * 144)
    assert encode_frame(frame)[-1] == 112


def test_only_sync_has_high_bit():
    rnd = random.Random(7)
    wire = encode_frame(random_frame(rnd))
    assert wire[0] == SYNC
    assert all(b < 0x80 for b in wire[1:])


def test_encode_rejects_invariant_violations():
    with pytest.raises(ValueError):
        encode_frame(SurfaceFrame(seq=128, positions=(0,) * 144))
    with pytest.raises(ValueError):
        encode_frame(SurfaceFrame(seq=0, positions=(0,) * 143))
    with pytest.raises(ValueError):
        encode_frame(SurfaceFrame(seq=0, positions=(200,) + (0,) * 143))


def test_round_trip_thousand_random_frames():
    rnd = random.Random(42)
    frames = [random_frame(rnd, seq=i % 128) for i in range(1000)]
    stream = b"".join(encode_frame(f) for f in frames)
    got, tallies = decode_stream(stream)
    assert got == frames
    assert tallies.total() == 0


def test_empty_stream():
    frames, tallies = decode_stream(b"")
    assert frames == []
    assert tallies.total() == 0


def test_single_payload_byte_alteration_rejected_with_bad_checksum():
    rnd = random.Random(3)
    frames = [random_frame(rnd) for _ in range(3)]
    stream = bytearray(b"".join(encode_frame(f) for f in frames))
    # Corrupt one position byte of the middle frame, staying 7-bit.
    pos = FRAME_LEN + 40
    stream[pos] = (stream[pos] + 1) & 0x7F
    got, tallies = decode_stream(bytes(stream))
    assert got == [frames[0], frames[2]]
    assert tallies.bad_checksum == 1
    assert tallies.resync_count == 0


def test_checksum_soundness_over_all_seven_bit_pairs():
    # Any single-byte change within the 7-bit payload space shifts the sum
    # by a nonzero amount mod 128, so it can never cancel.
    for a in range(128):
        for b in range(128):
            if a != b:
                assert (b - a) % 128 != 0


def test_stream_starting_mid_frame_resyncs_once():
    rnd = random.Random(11)
    frames = [random_frame(rnd) for _ in range(4)]
    stream = b"".join(encode_frame(f) for f in frames)
    got, tallies = decode_stream(stream[60:])  # drop the head of frame 0
    assert got == frames[1:]
    assert tallies.resync_count == 1


def test_garbage_runs_between_frames_are_skipped_and_counted():
    rnd = random.Random(13)
    frames = [random_frame(rnd) for _ in range(64)]
    junk = bytes(rnd.randrange(128) for _ in range(17))  # 7-bit noise
    stream = junk.join(encode_frame(f) for f in frames)
    got, tallies = decode_stream(stream)
    assert got == frames
    assert tallies.resync_count == 63
    assert tallies.bad_checksum == 0


def test_corruption_to_high_bit_byte_loses_only_that_frame():
    rnd = random.Random(17)
    frames = [random_frame(rnd) for _ in range(3)]
    stream = bytearray(b"".join(encode_frame(f) for f in frames))
    stream[FRAME_LEN + 50] = 0xFF  # fake sync inside frame 1
    got, tallies = decode_stream(bytes(stream))
    assert got == [frames[0], frames[2]]
    assert tallies.bad_checksum + tallies.resync_count >= 1


def test_truncated_tail_is_tallied():
    rnd = random.Random(19)
    wire = encode_frame(random_frame(rnd))
    got, tallies = decode_stream(wire + wire[:30])
    assert len(got) == 1
    assert tallies.truncated == 1


def test_incremental_decoder_matches_batch_byte_by_byte():
    rnd = random.Random(23)
    frames = [random_frame(rnd) for _ in range(10)]
    stream = bytearray(b"".join(encode_frame(f) for f in frames))
    stream[200] ^= 0x01  # one corrupt byte somewhere in frame 1
    batch_frames, batch_tallies = decode_stream(bytes(stream))

    dec = StreamDecoder()
    inc_frames = []
    for b in bytes(stream):
        inc_frames.extend(dec.feed(bytes([b])))
    dec.close()
    assert inc_frames == batch_frames
    assert dec.tallies.as_dict() == batch_tallies.as_dict()


def test_link_budget_at_paper_rate():
    stats = link_budget(57600, 147)
    assert stats.bytes_per_second == 5760.0
    assert math.isclose(stats.max_fps, 39.1836734693877, rel_tol=1e-12)
    assert math.isclose(stats.utilization_at_30hz, 0.765625, rel_tol=1e-12)
    assert stats.max_fps >= 30.0


def test_link_budget_thirty_hz_ceiling():
    assert link_budget(57600, 192).max_fps == 30.0


def test_link_budget_rejects_nonpositive():
    with pytest.raises(ValueError):
        link_budget(0)
    with pytest.raises(ValueError):
        link_budget(57600, 0)


@given(
    seq=st.integers(min_value=0, max_value=127),
    positions=st.lists(
        st.integers(min_value=0, max_value=127), min_size=144, max_size=144
    ),
)
def test_round_trip_property(seq, positions):
    frame = SurfaceFrame(seq=seq, positions=tuple(positions))
    got, tallies = decode_stream(encode_frame(frame))
    assert got == [frame]
    assert tallies.total() == 0


@given(
    offset=st.integers(min_value=1, max_value=146),
    value=st.integers(min_value=0, max_value=255),
)
def test_any_single_byte_payload_corruption_is_detected(offset, value):
    frame = SurfaceFrame(seq=9, positions=tuple(i % 128 for i in range(144)))
    wire = bytearray(encode_frame(frame))
    if wire[offset] == value:
        value = (value + 1) & 0xFF
    wire[offset] = value
    got, tallies = decode_stream(bytes(wire))
    assert frame not in got
    assert tallies.total() >= 1


if __name__ == "__main__":
    pytest.main([__file__, "-v"])

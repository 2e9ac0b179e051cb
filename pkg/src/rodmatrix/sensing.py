"""Optical quadrature sensing chain for the rod surface.

Each rod carries a striped mask that modulates two offset infrared
receivers, so motion shows up as a 2-bit Gray-coded phase signal.  A
state machine classifies each phase transition as a direction step and
a bank of saturating 7-bit counters integrates the steps into positions.
"""
from __future__ import annotations

from typing import Iterable

# Gray cycle in mechanical order: pressing a rod walks 00 -> 01 -> 11 -> 10 -> 00.
# Phase values are the raw 2-bit sensor reads (bit1 = channel a, bit0 = channel b).
PHASES = (0b00, 0b01, 0b11, 0b10)

# Step classifications. Plain ints so the per-transition fold stays cheap.
STEP_NONE = 0
STEP_FORWARD = 1
STEP_BACKWARD = -1
STEP_INVALID = 2  # both bits flipped in one sample: direction unknowable

COUNTER_MIN = 0
COUNTER_MAX = 127  # 7-bit counter, saturating at both ends

_CYCLE_INDEX = {p: i for i, p in enumerate(PHASES)}


def _transition_table() -> tuple[int, ...]:
    # 16 entries indexed by (prev << 2) | next. Anything that is not
    # identity or a single step along the cycle flips both bits.
    table = [STEP_INVALID] * 16
    for i, p in enumerate(PHASES):
        table[(p << 2) | p] = STEP_NONE
        table[(p << 2) | PHASES[(i + 1) & 3]] = STEP_FORWARD
        table[(p << 2) | PHASES[(i - 1) & 3]] = STEP_BACKWARD
    return tuple(table)


_STEP_TABLE = _transition_table()


def decode_transition(prev: int, new: int) -> int:
    """Classify one phase transition as a step.

    Returns STEP_FORWARD, STEP_BACKWARD, STEP_NONE, or STEP_INVALID.
    """
    return _STEP_TABLE[((prev & 3) << 2) | (new & 3)]


def apply_step(counter: int, step: int) -> int:
    """Advance a saturating 7-bit position counter by one decoded step.

    Invalid steps leave the counter untouched; the caller tallies them.
    """
    if step == STEP_FORWARD:
        return counter + 1 if counter < COUNTER_MAX else COUNTER_MAX
    if step == STEP_BACKWARD:
        return counter - 1 if counter > COUNTER_MIN else COUNTER_MIN
    return counter


def encode_motion(prev_count: int, new_count: int, start_phase: int) -> bytes:
    """Phase stream produced by a rod moving from one count to another.

    One count of travel is one single-bit Gray transition; the returned
    bytes are successive phase reads, |new - prev| of them.
    """
    if not COUNTER_MIN <= prev_count <= COUNTER_MAX:
        raise ValueError(f"prev_count {prev_count} outside [0,127]")
    if not COUNTER_MIN <= new_count <= COUNTER_MAX:
        raise ValueError(f"new_count {new_count} outside [0,127]")
    idx = _CYCLE_INDEX.get(start_phase & 3)
    if idx is None:  # pragma: no cover - all 2-bit values are valid phases
        raise ValueError(f"invalid phase {start_phase}")
    steps = new_count - prev_count
    out = bytearray()
    if steps >= 0:
        for _ in range(steps):
            idx = (idx + 1) & 3
            out.append(PHASES[idx])
    else:
        for _ in range(-steps):
            idx = (idx - 1) & 3
            out.append(PHASES[idx])
    return bytes(out)


def track(stream: Iterable[int], counter: int = 0, phase: int = 0b00) -> tuple[int, int]:
    """Fold decode_transition/apply_step over a phase stream.

    Returns (final counter, number of invalid transitions).  Starts from
    counter 0 and phase 00 by default, the boot state of the surface.
    Only bits 1:0 of each stream byte are read, matching the diagnostic
    capture format.
    """
    invalid = 0
    phase &= 3
    for raw in stream:
        new = raw & 3
        step = decode_transition(phase, new)
        if step == STEP_INVALID:
            invalid += 1
        else:
            counter = apply_step(counter, step)
        phase = new
    return counter, invalid

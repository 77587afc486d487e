"""ADS-B packet chip sequences and delayed observation-window vectors.

A mode-S extended squitter is modelled at chip level: a fixed 16-chip
preamble followed by 112 payload bits, each Manchester-encoded into a
(pulse, gap) chip pair at 2 Msample/s, i.e. 240 chips per packet. A packet
entering an observation window of maximum integer delay M is zero-padded
to length 240 + M.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Fixed mode-S preamble, one chip per half-microsecond sample.
PREAMBLE = np.array([1, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0], dtype=np.int8)

PAYLOAD_BITS = 112
DATA_CHIPS = 2 * PAYLOAD_BITS          # 224
PACKET_CHIPS = len(PREAMBLE) + DATA_CHIPS  # 240
ONES_PER_PACKET = int(PREAMBLE.sum()) + PAYLOAD_BITS  # 116
ZEROS_PER_PACKET = PACKET_CHIPS - ONES_PER_PACKET     # 124


@dataclass(frozen=True)
class DelayedWindow:
    """One packet placed inside a window of length 240 + M.

    x is the 0/1 chip vector [0]*m + packet + [0]*(M-m).
    """

    x: np.ndarray
    m: int
    M: int

    def __post_init__(self):
        if len(self.x) != PACKET_CHIPS + self.M:
            raise ValueError("window length must be 240 + M")


def _check_payload(payload) -> np.ndarray:
    payload = np.asarray(payload)
    if payload.shape != (PAYLOAD_BITS,):
        raise ValueError(f"payload must have exactly {PAYLOAD_BITS} bits, got shape {payload.shape}")
    if not np.isin(payload, (0, 1)).all():
        raise ValueError("payload bits must be 0 or 1")
    return payload.astype(np.int8)


def encode_manchester(payload) -> np.ndarray:
    """Encode 112 payload bits into 224 chips.

    Bit 1 maps to the chip pair (1, 0) and bit 0 to (0, 1), so the output
    always contains exactly 112 ones regardless of payload content.
    """
    bits = _check_payload(payload)
    chips = np.empty(DATA_CHIPS, dtype=np.int8)
    chips[0::2] = bits
    chips[1::2] = 1 - bits
    return chips


def build_packet(payload) -> np.ndarray:
    """Return the full 240-chip packet: preamble followed by encoded data."""
    return np.concatenate([PREAMBLE, encode_manchester(payload)])


def apply_delay(packet, m: int, M: int) -> DelayedWindow:
    """Zero-pad a packet into a window of length 240 + M with delay m chips."""
    packet = np.asarray(packet, dtype=np.int8)
    if packet.shape != (PACKET_CHIPS,):
        raise ValueError(f"packet must have {PACKET_CHIPS} chips")
    if M < 0 or not 0 <= m <= M:
        raise ValueError(f"delay m={m} outside [0, {M}]")
    x = np.concatenate([np.zeros(m, np.int8), packet, np.zeros(M - m, np.int8)])
    return DelayedWindow(x=x, m=int(m), M=int(M))


def random_payload(rng: np.random.Generator) -> np.ndarray:
    """Draw a uniformly random 112-bit payload."""
    return rng.integers(0, 2, size=PAYLOAD_BITS, dtype=np.int8)


def random_window(rng: np.random.Generator, M: int) -> DelayedWindow:
    """Random payload, random integer delay uniform on {0, ..., M}."""
    m = int(rng.integers(0, M + 1))
    return apply_delay(build_packet(random_payload(rng)), m, M)

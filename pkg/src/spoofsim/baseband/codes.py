"""L1 C/A Gold codes from the G1/G2 shift registers."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import UnknownPrn

CODE_LENGTH = 1023
CHIP_RATE = 1.023e6

# G2 output tap pairs (1-based stages) per PRN, phase-assignment table of the interface standard
G2_TAPS = {
    1: (2, 6), 2: (3, 7), 3: (4, 8), 4: (5, 9), 5: (1, 9), 6: (2, 10), 7: (1, 8), 8: (2, 9),
    9: (3, 10), 10: (2, 3), 11: (3, 4), 12: (5, 6), 13: (6, 7), 14: (7, 8), 15: (8, 9),
    16: (9, 10), 17: (1, 4), 18: (2, 5), 19: (3, 6), 20: (4, 7), 21: (5, 8), 22: (6, 9),
    23: (1, 3), 24: (4, 6), 25: (5, 7), 26: (6, 8), 27: (7, 9), 28: (8, 10), 29: (1, 6),
    30: (2, 7), 31: (3, 8), 32: (4, 9),
}
G1_FEEDBACK = (3, 10)
G2_FEEDBACK = (2, 3, 6, 8, 9, 10)


@dataclass(frozen=True)
class CaCode:
    prn: int
    chips: np.ndarray  # uint8 0/1, length 1023

    def bipolar(self) -> np.ndarray:
        """Chips mapped 0 -> +1, 1 -> -1."""
        return 1 - 2 * self.chips.astype(np.int8)

    def first_chips_octal(self, n: int = 10) -> str:
        value = 0
        for c in self.chips[:n]:
            value = (value << 1) | int(c)
        return format(value, "o")


def _shift_register(feedback, outputs, length=CODE_LENGTH):
    reg = [1] * 10
    out = np.empty(length, dtype=np.uint8)
    for i in range(length):
        bit = 0
        for stage in outputs:
            bit ^= reg[stage - 1]
        out[i] = bit
        fb = 0
        for stage in feedback:
            fb ^= reg[stage - 1]
        reg = [fb] + reg[:-1]
    return out


@lru_cache(maxsize=None)
def _chips(prn: int) -> np.ndarray:
    g1 = _shift_register(G1_FEEDBACK, (10,))
    g2 = _shift_register(G2_FEEDBACK, G2_TAPS[prn])
    chips = g1 ^ g2
    chips.setflags(write=False)
    return chips


def ca_code(prn: int) -> CaCode:
    if prn not in G2_TAPS:
        raise UnknownPrn(f"PRN {prn} has no C/A code assignment (1..32)")
    return CaCode(prn, _chips(prn))


def sampled_code(prn: int, sample_rate: float, n_samples: int, code_phase: float = 0.0,
                 chip_rate: float = CHIP_RATE) -> np.ndarray:
    """Bipolar replica sampled at ``sample_rate``, starting at chip ``code_phase``."""
    bip = ca_code(prn).bipolar()
    idx = np.floor(code_phase + np.arange(n_samples) * (chip_rate / sample_rate)).astype(np.int64)
    return bip[idx % CODE_LENGTH]

"""LNAV navigation message: subframe packing and word parity.

Words are 30-bit integers with bit 1 (first transmitted) as the MSB.
Stored words are the transmitted form, i.e. data bits already
complemented when the previous word's D30 is 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import numpy as np

from ..errors import FieldOverflow
from ..orbits import GPS_PI
from ..rinex import EphemerisRecord, IonoParameters

PREAMBLE = 0b10001011
BIT_RATE = 50
BITS_PER_WORD = 30
WORDS_PER_SUBFRAME = 10
BITS_PER_SUBFRAME = BITS_PER_WORD * WORDS_PER_SUBFRAME
SUBFRAME_SECONDS = 6
TOW_COUNT_MODULUS = 100800

# data bit positions (1-based) feeding parity bits D25..D30, and which of D29*/D30* joins
_PARITY_TABLE = (
    (29, (1, 2, 3, 5, 6, 10, 11, 12, 13, 14, 17, 18, 20, 23)),
    (30, (2, 3, 4, 6, 7, 11, 12, 13, 14, 15, 18, 19, 21, 24)),
    (29, (1, 3, 4, 5, 7, 8, 12, 13, 14, 15, 16, 19, 20, 22)),
    (30, (2, 4, 5, 6, 8, 9, 13, 14, 15, 16, 17, 20, 21, 23)),
    (30, (1, 3, 5, 6, 7, 9, 10, 14, 15, 16, 17, 18, 21, 22, 24)),
    (29, (3, 5, 6, 8, 9, 10, 11, 13, 15, 19, 22, 23, 24)),
)
_PARITY_MASKS = tuple((star, sum(1 << (24 - b) for b in bits)) for star, bits in _PARITY_TABLE)


def _popparity(x: int) -> int:
    return bin(x).count("1") & 1


def parity_bits(data24: int, d29s: int, d30s: int) -> int:
    """Six parity bits for source data ``data24`` given the previous word's D29/D30."""
    p = 0
    for star, mask in _PARITY_MASKS:
        bit = _popparity(data24 & mask) ^ (d29s if star == 29 else d30s)
        p = (p << 1) | bit
    return p


def encode_word(data24: int, d29s: int, d30s: int, solve_last: bool = False) -> int:
    """Build the transmitted 30-bit word.

    With ``solve_last`` the two trailing data bits (23, 24) are chosen so
    that the word ends with D29 = D30 = 0, as required for HOW and word 10.
    """
    data24 &= 0xFFFFFF
    if solve_last:
        data24 &= ~0b11
        if parity_bits(data24, d29s, d30s) & 0b10:  # D29 depends on d24 but not d23
            data24 |= 0b01
        if parity_bits(data24, d29s, d30s) & 0b01:  # D30 depends on d23
            data24 |= 0b10
    tx = data24 ^ (0xFFFFFF if d30s else 0)
    return (tx << 6) | parity_bits(data24, d29s, d30s)


def check_word(word: int, d29s: int, d30s: int) -> bool:
    tx = word >> 6
    data = tx ^ (0xFFFFFF if d30s else 0)
    return parity_bits(data, d29s, d30s) == (word & 0x3F)


def _unsigned(name: str, value: float, bits: int, scale: float) -> int:
    q = int(round(value / scale))
    if not 0 <= q < (1 << bits):
        raise FieldOverflow(name, value)
    return q


def _signed(name: str, value: float, bits: int, scale: float) -> int:
    q = int(round(value / scale))
    lim = 1 << (bits - 1)
    if not -lim <= q < lim:
        raise FieldOverflow(name, value)
    return q & ((1 << bits) - 1)


# field name -> (bits, scale, signed, semicircles)
FIELD_SPECS = {
    "tgd": (8, 2.0 ** -31, True, False),
    "toc": (16, 2.0 ** 4, False, False),
    "af2": (8, 2.0 ** -55, True, False),
    "af1": (16, 2.0 ** -43, True, False),
    "af0": (22, 2.0 ** -31, True, False),
    "crs": (16, 2.0 ** -5, True, False),
    "delta_n": (16, 2.0 ** -43, True, True),
    "m0": (32, 2.0 ** -31, True, True),
    "cuc": (16, 2.0 ** -29, True, False),
    "e": (32, 2.0 ** -33, False, False),
    "cus": (16, 2.0 ** -29, True, False),
    "sqrt_a": (32, 2.0 ** -19, False, False),
    "toe": (16, 2.0 ** 4, False, False),
    "cic": (16, 2.0 ** -29, True, False),
    "omega0": (32, 2.0 ** -31, True, True),
    "cis": (16, 2.0 ** -29, True, False),
    "i0": (32, 2.0 ** -31, True, True),
    "crc": (16, 2.0 ** -5, True, False),
    "omega": (32, 2.0 ** -31, True, True),
    "omega_dot": (24, 2.0 ** -43, True, True),
    "idot": (14, 2.0 ** -43, True, True),
}


def _q(eph_values: dict, name: str) -> int:
    bits, scale, signed, semi = FIELD_SPECS[name]
    v = eph_values[name]
    if semi:
        v = v / GPS_PI
    return (_signed if signed else _unsigned)(name, v, bits, scale)


def _ura_index(accuracy_m: float) -> int:
    edges = (2.4, 3.4, 4.85, 6.85, 9.65, 13.65, 24.0, 48.0, 96.0, 192.0, 384.0, 768.0, 1536.0,
             3072.0, 6144.0)
    for i, edge in enumerate(edges):
        if accuracy_m <= edge:
            return i
    return 15


def _ephemeris_data(eph: EphemerisRecord) -> Tuple[List[int], List[int], List[int]]:
    """24-bit data fields of words 3..10 for subframes 1, 2 and 3."""
    v = {name: getattr(eph, name) for name in FIELD_SPECS if name != "toc"}
    v["toc"] = eph.toc.sow
    q = {name: _q(v, name) for name in FIELD_SPECS}
    if not 0 <= eph.iodc < 1024:
        raise FieldOverflow("iodc", eph.iodc)
    if not 0 <= eph.iode < 256:
        raise FieldOverflow("iode", eph.iode)
    if not 0 <= eph.health < 64:
        raise FieldOverflow("health", eph.health)
    wn = eph.week % 1024
    ura = _ura_index(eph.sv_accuracy)
    code_l2 = int(eph.codes_l2) & 0b11

    sf1 = [
        (wn << 14) | (code_l2 << 12) | (ura << 8) | (eph.health << 2) | (eph.iodc >> 8),
        (int(eph.l2p_flag) & 1) << 23,
        0,
        0,
        q["tgd"],
        ((eph.iodc & 0xFF) << 16) | q["toc"],
        (q["af2"] << 16) | q["af1"],
        q["af0"] << 2,
    ]
    fit_flag = 1 if eph.fit_interval > 4 else 0
    sf2 = [
        (eph.iode << 16) | q["crs"],
        (q["delta_n"] << 8) | (q["m0"] >> 24),
        q["m0"] & 0xFFFFFF,
        (q["cuc"] << 8) | (q["e"] >> 24),
        q["e"] & 0xFFFFFF,
        (q["cus"] << 8) | (q["sqrt_a"] >> 24),
        q["sqrt_a"] & 0xFFFFFF,
        (q["toe"] << 8) | (fit_flag << 7),
    ]
    sf3 = [
        (q["cic"] << 8) | (q["omega0"] >> 24),
        q["omega0"] & 0xFFFFFF,
        (q["cis"] << 8) | (q["i0"] >> 24),
        q["i0"] & 0xFFFFFF,
        (q["crc"] << 8) | (q["omega"] >> 24),
        q["omega"] & 0xFFFFFF,
        q["omega_dot"],
        (eph.iode << 16) | (q["idot"] << 2),
    ]
    return sf1, sf2, sf3


_FILLER = 0xAAAAAA  # alternating ones and zeros


def _page_data(subframe_id: int, page: int, iono: Optional[IonoParameters]) -> List[int]:
    """Words 3..10 of a subframe 4/5 page: dummy-SV filler, or iono on SF4 page 18."""
    if subframe_id == 4 and page == 18 and iono is not None:
        a = [_signed("alpha0", iono.alpha[0], 8, 2.0 ** -30),
             _signed("alpha1", iono.alpha[1], 8, 2.0 ** -27),
             _signed("alpha2", iono.alpha[2], 8, 2.0 ** -24),
             _signed("alpha3", iono.alpha[3], 8, 2.0 ** -24)]
        b = [_signed("beta0", iono.beta[0], 8, 2.0 ** 11),
             _signed("beta1", iono.beta[1], 8, 2.0 ** 14),
             _signed("beta2", iono.beta[2], 8, 2.0 ** 16),
             _signed("beta3", iono.beta[3], 8, 2.0 ** 16)]
        head = (0b01 << 22) | (56 << 16)
        return [head | (a[0] << 8) | a[1],
                (a[2] << 16) | (a[3] << 8) | b[0],
                (b[1] << 16) | (b[2] << 8) | b[3],
                0, 0, 0, 0, 0]
    head = (0b01 << 22) | (0 << 16)  # data ID 01, SV ID 0 = dummy
    return [head | (_FILLER & 0xFFFF)] + [_FILLER] * 6 + [_FILLER & ~0b11]


@dataclass(frozen=True)
class LnavFrame:
    """Five consecutive 6 s subframes; ``tow`` is the TOW count of the first."""
    tow: int
    subframes: Tuple[Tuple[int, ...], ...]
    iode: int
    iodc: int

    def bits(self) -> np.ndarray:
        words = [w for sf in self.subframes for w in sf]
        return words_to_bits(words)


def words_to_bits(words) -> np.ndarray:
    out = np.empty(len(words) * BITS_PER_WORD, dtype=np.uint8)
    shifts = np.arange(BITS_PER_WORD - 1, -1, -1)
    for i, w in enumerate(words):
        out[i * BITS_PER_WORD:(i + 1) * BITS_PER_WORD] = (w >> shifts) & 1
    return out


def subframe_words(data: List[int], tow_start: int, subframe_id: int) -> Tuple[int, ...]:
    """Encode one subframe starting at seconds-of-week ``tow_start``.

    ``data`` holds the 24-bit source fields of words 3..10. Word 10 (and the
    HOW) end in D29 = D30 = 0, so every subframe starts from D29* = D30* = 0.
    """
    tlm = PREAMBLE << 16
    next_count = ((tow_start // SUBFRAME_SECONDS) + 1) % TOW_COUNT_MODULUS
    how = (next_count << 7) | (subframe_id << 2)
    words = []
    d29 = d30 = 0
    for idx, src in enumerate([tlm, how] + list(data)):
        w = encode_word(src, d29, d30, solve_last=idx in (1, 9))
        words.append(w)
        d29, d30 = (w >> 1) & 1, w & 1
    return tuple(words)


def build_lnav(eph: EphemerisRecord, iono: Optional[IonoParameters], start_tow: int) -> Iterator[LnavFrame]:
    """Endless LNAV stream starting at ``start_tow`` (a multiple of 6 s)."""
    if start_tow % SUBFRAME_SECONDS:
        raise ValueError(f"start_tow {start_tow} is not on a 6 s subframe boundary")
    sf123 = _ephemeris_data(eph)
    tow = int(start_tow)
    while True:
        subframes = []
        frame_tow = tow
        for _ in range(5):
            sow = tow % 604800
            sid = (sow // SUBFRAME_SECONDS) % 5 + 1
            if sid <= 3:
                data = sf123[sid - 1]
            else:
                page = (sow // 30) % 25 + 1
                data = _page_data(sid, page, iono)
            subframes.append(subframe_words(data, sow, sid))
            tow += SUBFRAME_SECONDS
        yield LnavFrame(frame_tow // SUBFRAME_SECONDS % TOW_COUNT_MODULUS, tuple(subframes),
                        eph.iode, eph.iodc)


def nav_bits(eph: EphemerisRecord, iono: Optional[IonoParameters], start_tow: int, n_subframes: int) -> np.ndarray:
    """Transmitted bit sequence (0/1) of ``n_subframes`` subframes from ``start_tow``."""
    frames = build_lnav(eph, iono, start_tow)
    out = []
    need = n_subframes
    while need > 0:
        frame = next(frames)
        take = min(5, need)
        out.extend(w for sf in frame.subframes[:take] for w in sf)
        need -= take
    return words_to_bits(out)

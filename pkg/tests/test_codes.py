import time

import numpy as np
import pytest

from spoofsim.baseband.codes import CODE_LENGTH, ca_code, sampled_code
from spoofsim.errors import UnknownPrn

# G2 delays (chips) and first-10-chip octal values, from the interface standard's code table
G2_DELAY = [5, 6, 7, 8, 17, 18, 139, 140, 141, 251, 252, 254, 255, 256, 257, 258, 469, 470, 471, 472,
            473, 474, 509, 512, 513, 514, 515, 516, 859, 860, 861, 862]
FIRST_TEN_OCTAL = [1440, 1620, 1710, 1744, 1133, 1455, 1131, 1454, 1626, 1504, 1642, 1750, 1764, 1772,
                   1775, 1776, 1156, 1467, 1633, 1715, 1746, 1763, 1063, 1706, 1743, 1761, 1770, 1774,
                   1127, 1453, 1625, 1712]


def _mls(poly_taps):
    """Maximal-length sequence from stage 10 of an all-ones Fibonacci register (bit-packed)."""
    state = 0x3FF
    out = []
    for _ in range(CODE_LENGTH):
        out.append(state & 1)          # stage 10 lives in bit 0
        fb = 0
        for tap in poly_taps:
            fb ^= (state >> (10 - tap)) & 1
        state = (state >> 1) | (fb << 9)
    return np.array(out, dtype=np.uint8)


def oracle_code(prn):
    g1 = _mls((3, 10))
    g2 = _mls((2, 3, 6, 8, 9, 10))
    return g1 ^ np.roll(g2, G2_DELAY[prn - 1])


@pytest.mark.parametrize("prn", range(1, 33))
def test_matches_delay_form_oracle(prn):
    assert np.array_equal(ca_code(prn).chips, oracle_code(prn))


@pytest.mark.parametrize("prn", range(1, 33))
def test_first_ten_chips_table(prn):
    assert ca_code(prn).first_chips_octal() == str(FIRST_TEN_OCTAL[prn - 1])


def test_prn1_octal_1440():
    assert ca_code(1).first_chips_octal() == "1440"


def _circular_xcorr(a, b):
    return np.real(np.fft.ifft(np.fft.fft(a) * np.conj(np.fft.fft(b)))).round().astype(int)


def test_balance_period_and_autocorrelation():
    for prn in range(1, 33):
        c = ca_code(prn)
        assert c.chips.size == 1023 and int(c.chips.sum()) == 512
        regen = sampled_code(prn, 1.023e6, 1024)
        assert regen[1023] == regen[0]
        ac = _circular_xcorr(c.bipolar().astype(float), c.bipolar().astype(float))
        assert ac[0] == 1023
        assert set(np.unique(ac[1:])) <= {-65, -1, 63}


def test_prn1_prn2_cross_correlation_brute_force():
    a = ca_code(1).bipolar().astype(int)
    b = ca_code(2).bipolar().astype(int)
    vals = {int(np.dot(a, np.roll(b, k))) for k in range(1023)}
    assert vals <= {-65, -1, 63}


def test_unknown_prn():
    with pytest.raises(UnknownPrn):
        ca_code(33)
    with pytest.raises(UnknownPrn):
        ca_code(0)


def test_sampled_code_phase():
    fs = 2.6e6
    base = sampled_code(5, fs, 5000)
    shifted = sampled_code(5, fs, 5000, code_phase=100.0)
    spc = fs / 1.023e6
    k = int(np.ceil(100 * spc))
    assert np.array_equal(shifted[:50], sampled_code(5, fs, 50, 100.0))
    assert shifted[0] == ca_code(5).bipolar()[100]
    assert base[k] == ca_code(5).bipolar()[int(np.floor(k / spc))]


def test_suite_runtime():
    t = time.perf_counter()
    for prn in range(1, 33):
        oracle_code(prn)
    assert time.perf_counter() - t < 10

import dataclasses
import warnings

import numpy as np
import pytest

from conftest import T0, TOKYO
from spoofsim.baseband import synth
from spoofsim.baseband.codes import CHIP_RATE
from spoofsim.baseband.iqfile import read_iq, sample_count, write_iq
from spoofsim.baseband.lnav import BITS_PER_SUBFRAME
from spoofsim.baseband.report import ScenarioReport
from spoofsim.baseband.synth import SynthesisConfig, Synthesizer, code_phase_from_pseudorange, synthesize
from spoofsim.errors import ClippedOutput, IoFailure, TooFewSatellites
from spoofsim.geodesy import geodetic_to_ecef
from spoofsim.gpstime import GpsTime
from spoofsim.orbits import C, L1_FREQ, pseudorange
from spoofsim.receiver import periodogram
from spoofsim.trajectory import static_scenario


def test_write_iq_8bit_layout(tmp_path):
    p = tmp_path / "a.bin"
    assert write_iq(np.array([[3, -2]]), p, 8) == 2
    assert p.read_bytes() == bytes([0x03, 0xFE])


def test_write_iq_16bit_layout(tmp_path):
    p = tmp_path / "a.bin"
    assert write_iq(np.array([[258, 0]]), p, 16) == 4
    assert p.read_bytes()[:2] == bytes([0x02, 0x01])


def test_write_iq_16bit_size(tmp_path):
    p = tmp_path / "a.bin"
    assert write_iq([np.zeros((7, 2), int), np.ones((5, 2), int)], p, 16) == 48
    assert sample_count(p, 16) == 12
    x = read_iq(p, 16)
    assert x[-1] == 1 + 1j


def test_write_iq_range_and_io(tmp_path):
    with pytest.raises(ValueError):
        write_iq(np.array([[200, 0]]), tmp_path / "a.bin", 8)
    with pytest.raises(IoFailure):
        write_iq(np.zeros((1, 2), int), tmp_path / "missing" / "a.bin", 8)


def test_config_invariants():
    with pytest.raises(ValueError):
        SynthesisConfig(sample_rate=2.0e6)
    with pytest.raises(ValueError):
        SynthesisConfig(bit_depth=12)


def test_two_second_size(static_run, tmp_path):
    syn, iq, rep = static_run
    assert iq.shape == (5_200_000, 2) and iq.dtype == np.int8
    assert write_iq(iq, tmp_path / "s.bin", 8) == 2 * 2_600_000 * 2
    assert len(rep.channels) == 10 and rep.prns == sorted(rep.prns)


def test_report_roundtrip(static_run):
    _, _, rep = static_run
    again = ScenarioReport.from_text(rep.to_text())
    assert again == rep


def test_deterministic_across_workers(records, iono):
    sc = static_scenario(TOKYO, T0, 0.3)
    a, _ = synthesize(sc, records, iono, SynthesisConfig(seed=4))
    b, _ = synthesize(sc, records, iono, SynthesisConfig(seed=4, workers=3))
    c, _ = synthesize(sc, records, iono, SynthesisConfig(seed=5))
    assert a.tobytes() == b.tobytes()
    assert a.tobytes() != c.tobytes()


def test_window_matches_stream(records, iono):
    syn = Synthesizer(static_scenario(TOKYO, T0, 0.5), records, iono, SynthesisConfig())
    full = np.concatenate(list(syn.chunks()))
    first, blk = syn.window(0.25, 0.1)
    assert np.array_equal(full[first:first + len(blk)], blk)


def test_start_snaps_to_subframe(records, iono):
    sc = static_scenario(TOKYO, GpsTime(2149, 475201.5), 0.2)
    syn = Synthesizer(sc, records, iono, SynthesisConfig())
    rep = syn.report()
    assert rep.start.sow == 475206 and rep.snap_seconds == pytest.approx(4.5)


def test_too_few_satellites(records, iono):
    with pytest.raises(TooFewSatellites):
        Synthesizer(static_scenario(TOKYO, T0, 0.2), records, iono, SynthesisConfig(elevation_mask=80))


def test_report_code_phase_matches_independent_pseudorange(static_run, records, iono):
    syn, _, rep = static_run
    user = geodetic_to_ecef(TOKYO)
    for ch, sc in zip(rep.channels, syn.channels):
        d = pseudorange(sc.eph, user, rep.start, iono)
        assert ch.pseudorange_m == pytest.approx(d.pseudorange, abs=1e-6)
        assert ch.code_phase == pytest.approx(code_phase_from_pseudorange(d.pseudorange), abs=1e-6)


def test_code_carrier_coherence_over_one_second(records, iono):
    sc = static_scenario(TOKYO, T0, 2.0)
    syn = Synthesizer(sc, records, iono, SynthesisConfig(noise=False))
    fs = syn.config.sample_rate
    user = geodetic_to_ecef(TOKYO)
    for ch in syn.channels:
        s0, s1 = syn.state(ch, int(0.3 * fs)), syn.state(ch, int(1.3 * fs))
        wrapped = (s1.code_phase - s0.code_phase + 511.5) % 1023 - 511.5
        d_code = 1000 * 1023 + wrapped       # 1 s holds 1000 whole code periods
        pr0 = pseudorange(ch.eph, user, T0 + 0.3, iono).pseudorange
        pr1 = pseudorange(ch.eph, user, T0 + 1.3, iono).pseudorange
        assert abs((1.0 - d_code / CHIP_RATE) - (pr1 - pr0) / C) < 1e-9


def test_constant_envelope(records, iono):
    cfg = SynthesisConfig(noise=False, prns=[17], bit_depth=16)
    iq, rep = synthesize(static_scenario(TOKYO, T0, 1.0), records, iono, cfg)
    p = (iq.astype(float) ** 2).sum(axis=1).reshape(10, -1).mean(axis=1)
    assert np.ptp(p) / p.mean() < 0.01


def test_main_lobe_nulls(records, iono):
    # ten samples per chip so sidelobe aliasing does not fill the nulls
    cfg = SynthesisConfig(noise=False, prns=[17], bit_depth=16, sample_rate=10 * CHIP_RATE)
    iq, rep = synthesize(static_scenario(TOKYO, T0, 0.2), records, iono, cfg)
    x = iq[:, 0] + 1j * iq[:, 1]
    f, p = periodogram(x, rep.sample_rate, 10230)
    centre = p[np.abs(f) < 20e3].mean()
    for null in (-CHIP_RATE, CHIP_RATE):
        assert p[np.abs(f - null) < 1.5e3].min() < 1e-3 * centre
    # sinc^2 main lobe: about 0.4 of the centre level half way to the null
    assert 0.2 < p[np.abs(f - 0.5 * CHIP_RATE) < 20e3].mean() / centre < 0.7


def test_ppm_scales_carrier_and_code(records, iono):
    sc = static_scenario(TOKYO, T0, 0.3)
    a = Synthesizer(sc, records, iono, SynthesisConfig(prns=[17])).report()
    b = Synthesizer(sc, records, iono, SynthesisConfig(prns=[17], ppm_error=20)).report()
    assert b.channels[0].doppler_hz - a.channels[0].doppler_hz == pytest.approx(31508.4, abs=0.1)


def test_channel_state_invariants(static_run):
    syn, _, _ = static_run
    for ch in syn.channels:
        s = syn.state(ch, 1000)
        assert 0 <= s.code_phase < 1023 and 0 <= s.carrier_phase < 1 and abs(s.doppler) <= 10_000
        assert abs(CHIP_RATE * (1 + s.doppler / L1_FREQ) - CHIP_RATE) <= 10 * syn.config.scale


def test_nav_bits_gate_code_at_subframe_boundary(static_run):
    syn, _, rep = static_run
    ch = syn.channels[0]
    # nav stream starts one subframe early; its second subframe carries the snapped epoch
    hdr = ch.bits[BITS_PER_SUBFRAME:BITS_PER_SUBFRAME + 8]
    assert "".join(map(str, hdr)) == "10001011"
    s = syn.state(ch, 0)
    assert s.nav_cursor == BITS_PER_SUBFRAME - 4   # ~70 ms of flight time before the boundary


def test_clip_warning(records, iono, monkeypatch):
    monkeypatch.setitem(synth.TARGET_RMS, 8, 120.0)
    syn = Synthesizer(static_scenario(TOKYO, T0, 0.2), records, iono, SynthesisConfig())
    with pytest.warns(ClippedOutput):
        list(syn.chunks())
    assert syn.report().clipped_fraction > 1e-3
    assert syn.report().warnings


def test_gain_offsets_reported(records, iono):
    syn = Synthesizer(static_scenario(TOKYO, T0, 0.2), records, iono, SynthesisConfig(gain_db={17: -6.0}))
    ch = syn.report().channel(17)
    assert ch.gain_db == -6.0 and ch.amplitude == pytest.approx(256 * 10 ** (-6 / 20))

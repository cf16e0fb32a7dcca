"""The nine acceptance criteria, one test each, each reporting a PASS/FAIL line."""
import contextlib
import dataclasses
import io
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE, NAV_PATH, T0, TOKYO
from test_codes import oracle_code
from test_lnav import STEPS, _subframes, decode_ephemeris, decode_stream
from spoofsim.baseband.codes import ca_code
from spoofsim.baseband.iqfile import to_complex, write_iq
from spoofsim.baseband.lnav import nav_bits
from spoofsim.baseband.synth import SynthesisConfig, Synthesizer, synthesize
from spoofsim.cli import main
from spoofsim.geodesy import EcefPosition, GeodeticPosition, llh_to_xyz, xyz_to_llh
from spoofsim.gpstime import GpsTime
from spoofsim.matrix import loop_waypoints, run_matrix
from spoofsim.orbits import C, L1_WAVELENGTH, kepler_solve, pseudorange, sat_state
from spoofsim.receiver import AcqConfig, acquire, fine_doppler, verify_scenario
from spoofsim.trajectory import static_scenario, waypoint_scenario


@contextlib.contextmanager
def criterion(n, title):
    line = f"FAIL criterion {n}: {title}"
    try:
        yield
        line = f"PASS criterion {n}: {title}"
    finally:
        ACCEPTANCE[n] = line
        print(line)


def _xcorr(a, b):
    return np.real(np.fft.ifft(np.fft.fft(a) * np.conj(np.fft.fft(b)))).round().astype(int)


def test_criterion_1_code_suite():
    with criterion(1, "C/A code suite"):
        t = time.perf_counter()
        for prn in range(1, 33):
            c = ca_code(prn)
            assert np.array_equal(c.chips, oracle_code(prn))
            assert c.chips.size == 1023 and int(c.chips.sum()) == 512
            b = c.bipolar().astype(float)
            assert _xcorr(b, b)[0] == 1023
        cross = _xcorr(ca_code(1).bipolar().astype(float), ca_code(2).bipolar().astype(float))
        assert set(np.unique(cross)) <= {-65, -1, 63}
        assert ca_code(1).first_chips_octal() == "1440"
        assert time.perf_counter() - t < 10


def test_criterion_2_geodesy_roundtrip():
    with criterion(2, "geodetic round trip"):
        t = time.perf_counter()
        rng = np.random.default_rng(2)
        lat = np.degrees(np.arcsin(rng.uniform(-1, 1, 10_000)))
        lon = rng.uniform(-180, 180, 10_000)
        alt = rng.uniform(-1000, 25_000_000, 10_000)
        xyz = np.array(llh_to_xyz(lat, lon, alt))
        back = np.array(llh_to_xyz(*xyz_to_llh(*xyz)))
        assert np.max(np.linalg.norm(xyz - back, axis=0)) < 1e-6
        assert time.perf_counter() - t < 5


def test_criterion_3_orbits(records):
    with criterion(3, "orbits"):
        rng = np.random.default_rng(3)
        m = rng.uniform(-np.pi, np.pi, 1_000_000)
        e = rng.uniform(0.0, 0.1, 1_000_000)
        big = kepler_solve(m, e)
        assert np.max(np.abs(big - e * np.sin(big) - m)) < 1e-14
        for rec in records:
            for dt in (-7000.0, 0.0, 1234.5, 7000.0):
                t = rec.toe_total + dt
                fd = (np.asarray(sat_state(rec, t + 0.5).pos) - np.asarray(sat_state(rec, t - 0.5).pos))
                assert np.max(np.abs(fd - np.asarray(sat_state(rec, t).vel))) < 1e-3
                assert 2.0e7 <= sat_state(rec, t).pos.norm() <= 3.0e7


def test_criterion_4_lnav(records, iono):
    with criterion(4, "LNAV round trip and parity"):
        for rec in records:
            start = int(rec.toe) - int(rec.toe) % 30
            src, good = decode_stream(nav_bits(rec, iono, start, 3))
            assert good == 30
            got = decode_ephemeris(*_subframes(src, 3))
            for name, step in STEPS.items():
                want = rec.toc.sow if name == "toc" else getattr(rec, name)
                assert abs(got[name] - want) <= step, (rec.prn, name)
            assert got["iode"] == rec.iode and got["iodc"] == rec.iodc
        _, good = decode_stream(nav_bits(records[0], iono, 475200, 125))
        assert good == 1250


@pytest.fixture(scope="module")
def timed_run(records, iono, tmp_path_factory):
    d = tmp_path_factory.mktemp("acc")
    t = time.perf_counter()
    syn = Synthesizer(static_scenario(TOKYO, T0, 2.0), records, iono, SynthesisConfig())
    write_iq(syn.chunks(), d / "a.iq", 8)
    rep = syn.report()
    iq = np.fromfile(d / "a.iq", np.int8).reshape(-1, 2)
    ver = verify_scenario(to_complex(iq), rep)
    elapsed = time.perf_counter() - t
    return d, rep, ver, elapsed


def test_criterion_5_end_to_end_static(records, iono, timed_run):
    with criterion(5, "end-to-end static verification and determinism"):
        d, rep, ver, elapsed = timed_run
        assert (rep.sample_rate, rep.bit_depth, rep.n_samples) == (2.6e6, 8, 5_200_000)
        assert len(rep.channels) >= 6
        for row in ver.rows:
            assert row.detected and row.code_error <= 0.5 and row.doppler_error <= 100, row
        assert ver.passed and elapsed < 180
        sc = static_scenario(TOKYO, T0, 2.0)
        write_iq(Synthesizer(sc, records, iono, SynthesisConfig()).chunks(), d / "b.iq", 8)
        write_iq(Synthesizer(sc, records, iono, SynthesisConfig(workers=4)).chunks(), d / "c.iq", 8)
        a = (d / "a.iq").read_bytes()
        assert a == (d / "b.iq").read_bytes() == (d / "c.iq").read_bytes()


def test_criterion_6_cn0_calibration(timed_run):
    with criterion(6, "C/N0 calibration"):
        _, _, ver, _ = timed_run
        assert all(37 <= r.cn0 <= 58 for r in ver.rows), [(r.prn, r.cn0) for r in ver.rows]


def test_criterion_7_dynamic_doppler(records, iono):
    with criterion(7, "dynamic Doppler over 10 s"):
        leg = loop_waypoints(TOKYO, 619.2)[:2]          # one straight leg of exactly 24.0 s
        sc = waypoint_scenario(leg, 25.8, T0)
        assert sc.duration >= 10.6
        syn = Synthesizer(sc, records, iono, SynthesisConfig(), duration=11.0)
        fs = syn.config.sample_rate
        vel = sc.velocities()
        assert np.allclose(np.linalg.norm(vel[:100], axis=1), 25.8, atol=1e-6)
        measured = {}
        for tw in (0.0, 10.0):
            s0, blk = syn.window(tw, 0.6)
            x = to_complex(blk)
            off = int(round(tw * fs)) - s0
            for ch in syn.channels:
                a = acquire(x, ch.prn, fs, start=off)
                assert a.detected
                measured.setdefault(ch.prn, []).append(
                    fine_doppler(x, ch.prn, fs, a.code_phase, a.doppler, n_ms=500, start=off))
        for ch in syn.channels:
            pred = []
            for tw in (0.0, 10.0):
                tc = tw + 0.25                            # middle of the 500 ms estimate
                j = int(tc / 0.1)
                p = sc.positions[j] + vel[j] * (tc - j * 0.1)
                d = pseudorange(ch.eph, EcefPosition.of(p), T0.total + tc, iono, user_vel=vel[j])
                pred.append(-(d.range_rate - C * d.clock_drift) / L1_WAVELENGTH)
            dm = measured[ch.prn][1] - measured[ch.prn][0]
            assert abs(dm - (pred[1] - pred[0])) <= 2.0, ch.prn


def test_criterion_8_ppm_mechanism(records, iono):
    with criterion(8, "oscillator ppm mechanism"):
        sc = static_scenario(TOKYO, T0, 0.3)
        prns = [17, 19, 28]
        runs = {}
        for ppm in (0.0, 0.5, 20.0):
            iq, rep = synthesize(sc, records, iono, SynthesisConfig(prns=prns, ppm_error=ppm), duration=0.3)
            runs[ppm] = (to_complex(iq), rep)
        fs = 2.6e6
        wide = AcqConfig(doppler_span=40_000)
        for prn in prns:
            def measure(ppm, cfg=AcqConfig()):
                x = runs[ppm][0]
                a = acquire(x, prn, fs, cfg)
                return a, fine_doppler(x, prn, fs, a.code_phase, a.doppler, n_ms=250)
            base, f0 = measure(0.0)
            assert base.detected
            assert not acquire(runs[20.0][0], prn, fs).detected
            wide_res, f20 = measure(20.0, wide)
            assert wide_res.detected
            assert f20 - f0 == pytest.approx(31_508.0, abs=150)
            half, f05 = measure(0.5)
            assert half.detected and abs(half.doppler) <= 5000
            assert f05 - f0 == pytest.approx(787.7, abs=20)


def _cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    return main([str(a) for a in argv], out, err), out.getvalue()


def test_criterion_9_cli_contract(records, iono, tmp_path):
    with criterion(9, "CLI exit codes, brdc names, analogue grid"):
        for date, name in (("2022-06-10", "brdc1610.22n"), ("2022-01-01", "brdc0010.22n"),
                           ("2024-12-31", "brdc3660.24n")):
            assert _cli("doy", date) == (0, name + "\n")
        loc = "35.7,139.7,50"
        out = tmp_path / "g.iq"
        assert _cli("generate", "--ephemeris", NAV_PATH, "--location", loc, "--duration", 0.5,
                    "--output", out)[0] == 0
        assert _cli("verify", out)[0] == 0
        raw = bytearray(out.read_bytes())
        n = len(raw) // 100
        raw[:n] = (np.frombuffer(bytes(raw[:n]), np.uint8)
                   ^ np.random.default_rng(9).integers(1, 256, n, dtype=np.uint8)).tobytes()
        out.write_bytes(bytes(raw))
        assert _cli("verify", out)[0] == 5
        bad = tmp_path / "bad.21n"
        bad.write_text(NAV_PATH.read_text().replace(".370000000000D+02", ".37XX00000000D+02", 1))
        assert _cli("plan", "--ephemeris", bad, "--location", loc)[0] == 2
        late = GpsTime(2149, 482400 + 5 * 3600).isoformat()
        assert _cli("generate", "--ephemeris", NAV_PATH, "--location", loc, "--start", late,
                    "--output", tmp_path / "late.iq")[0] == 3
        assert _cli("generate", "--ephemeris", NAV_PATH, "--location", loc, "--duration", 0.2,
                    "--output", tmp_path / "no" / "x.iq")[0] == 4
        grid = run_matrix(records, iono, TOKYO, T0, duration=0.3)
        assert len(grid.cells) == 4 and all(c.ok for c in grid.cells.values())
        assert grid.cell("static", "stationary").time_to_detect <= grid.cell("dynamic", "moving").time_to_detect

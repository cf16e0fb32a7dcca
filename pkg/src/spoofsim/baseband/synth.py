"""L1 C/A baseband synthesis: per-channel code/carrier/nav generation and integer mixing."""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence

import numpy as np

from ..errors import BelowHorizon, ClippedOutput, NoEphemeris, TooFewSatellites
from ..geodesy import EcefPosition
from ..gpstime import GpsTime
from ..orbits import C, L1_FREQ, pseudorange, visible
from ..rinex import EphemerisRecord, IonoParameters, select_ephemeris
from ..trajectory import STEP, Scenario
from .codes import CHIP_RATE, CODE_LENGTH, ca_code
from .lnav import BIT_RATE, SUBFRAME_SECONDS, nav_bits
from .report import ChannelReport, ScenarioReport

BASE_AMPLITUDE = 256          # accumulator counts of one 0 dB channel
DEFAULT_CN0 = 47.5            # dBHz the default noise floor is calibrated to
CLIP_WARN_FRACTION = 1e-3
TARGET_RMS = {8: 30.0, 16: 2000.0}
MIN_SAMPLE_RATE = 2.2e6
MIN_SATELLITES = 4
# nav stream starts one subframe before the snapped start so the first
# transmit epochs (start - ~70 ms) already have data
NAV_LEAD = SUBFRAME_SECONDS


@dataclass
class SynthesisConfig:
    sample_rate: float = 2.6e6
    bit_depth: int = 8
    ppm_error: float = 0.0
    noise: bool = True
    noise_amplitude: Optional[float] = None   # sigma per component, accumulator counts
    elevation_mask: float = 10.0
    gain_db: Dict[int, float] = field(default_factory=dict)
    seed: int = 0
    workers: int = 1
    iono: bool = True
    tropo: bool = True
    max_channels: int = 12
    interference_db: Optional[float] = None   # extra white noise relative to the floor
    prns: Optional[Sequence[int]] = None      # restrict the channel set

    def __post_init__(self):
        if self.sample_rate < MIN_SAMPLE_RATE:
            raise ValueError(f"sample_rate {self.sample_rate:g} Hz is below {MIN_SAMPLE_RATE:g} Hz")
        if self.bit_depth not in (8, 16):
            raise ValueError(f"bit_depth must be 8 or 16, got {self.bit_depth}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @property
    def scale(self) -> float:
        """Oscillator time-scale factor."""
        return 1.0 + self.ppm_error * 1e-6

    def sigma(self) -> float:
        if not self.noise:
            return 0.0
        if self.noise_amplitude is not None:
            base = float(self.noise_amplitude)
        else:
            base = BASE_AMPLITUDE * math.sqrt(self.sample_rate / (2.0 * 10 ** (DEFAULT_CN0 / 10)))
        if self.interference_db is not None:
            base *= math.sqrt(1.0 + 10 ** (self.interference_db / 10))
        return base

    def echo(self) -> Dict[str, str]:
        gains = ",".join(f"{p}={g!r}" for p, g in sorted(self.gain_db.items()))
        return {
            "sample_rate": repr(self.sample_rate), "bit_depth": str(self.bit_depth),
            "ppm_error": repr(self.ppm_error), "noise": "on" if self.noise else "off",
            "elevation_mask": repr(self.elevation_mask), "gain_db": gains or "-",
            "seed": str(self.seed), "iono": "on" if self.iono else "off",
            "tropo": "on" if self.tropo else "off", "max_channels": str(self.max_channels),
            "interference_db": "-" if self.interference_db is None else repr(self.interference_db),
        }


@dataclass
class ChannelState:
    prn: int
    code_phase: float      # chips
    carrier_phase: float   # cycles
    doppler: float         # Hz
    nav_cursor: int        # bit index into the channel's nav stream
    amplitude: float


def code_phase_from_pseudorange(pr_m: float) -> float:
    """Chip of the incoming code at reception epoch 0 (whole-millisecond ambiguity removed)."""
    return float((-pr_m / C * CHIP_RATE) % CODE_LENGTH)


def snap_start(t: GpsTime) -> GpsTime:
    whole = math.ceil(round(t.total, 9) / SUBFRAME_SECONDS) * SUBFRAME_SECONDS
    return GpsTime.from_total(whole)


class _Channel:
    def __init__(self, eph: EphemerisRecord, amplitude: float, knots_tau: np.ndarray,
                 knots_el: np.ndarray, bits: np.ndarray):
        self.eph = eph
        self.prn = eph.prn
        self.amplitude = amplitude
        self.tau = knots_tau
        self.el = knots_el
        self.bits = bits
        self.code = ca_code(eph.prn).bipolar().astype(np.int8)
        self.phase0 = (-L1_FREQ * knots_tau[0]) % 1.0


class Synthesizer:
    """Deterministic chunked generator of quantized I/Q samples."""

    def __init__(self, scenario: Scenario, ephemerides: Sequence[EphemerisRecord],
                 iono: Optional[IonoParameters] = None, config: Optional[SynthesisConfig] = None,
                 duration: Optional[float] = None):
        self.config = config or SynthesisConfig()
        self.scenario = scenario
        self.records = list(ephemerides)
        self.iono = iono if self.config.iono else None
        self.requested_start = scenario.start
        self.start = snap_start(scenario.start)
        self.duration = float(duration if duration is not None else scenario.duration)
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        fs = self.config.sample_rate
        self.n_samples = int(round(self.duration * fs))
        self.n_knots = int(math.ceil(self.duration / STEP)) + 2
        self.warnings: List[str] = []
        self._positions = self._knot_positions()
        self.channels = self._setup_channels()
        self.sigma = self.config.sigma()
        self.divisor = self._divisor()
        self.clipped = 0

    # geometry

    def _knot_positions(self) -> np.ndarray:
        # the scenario grid is already at the knot cadence; hold the last position past its end
        idx = np.minimum(np.arange(self.n_knots), len(self.scenario.times) - 1)
        return self.scenario.positions[idx]

    def _eph_at(self, eph: EphemerisRecord, t: float) -> EphemerisRecord:
        if abs(t - eph.toe_total) <= 7200.0:
            return eph
        try:
            return select_ephemeris(self.records, eph.prn, t)
        except NoEphemeris:
            return eph

    def _setup_channels(self) -> List[_Channel]:
        cfg = self.config
        t0 = self.start.total
        user0 = EcefPosition.of(self._positions[0])
        vis = visible(self.records, user0, t0, cfg.elevation_mask)
        if cfg.prns is not None:
            vis = [v for v in vis if v[0].prn in set(cfg.prns)]
        if len(vis) < MIN_SATELLITES and cfg.prns is None:
            raise TooFewSatellites(f"{len(vis)} satellites above {cfg.elevation_mask:g} deg at "
                                   f"{self.start.isoformat()} (need {MIN_SATELLITES})")
        if not vis:
            raise TooFewSatellites("no requested satellite is visible")
        chosen = sorted(vis[:cfg.max_channels], key=lambda v: v[0].prn)
        knot_t = t0 + np.arange(self.n_knots) * STEP
        n_sub = int(math.ceil((self.duration + NAV_LEAD) / SUBFRAME_SECONDS)) + 1
        chans = []
        for eph, _ in chosen:
            tau = np.empty(self.n_knots)
            el = np.empty(self.n_knots)
            for j, tj in enumerate(knot_t):
                e = self._eph_at(eph, tj)
                d = pseudorange(e, EcefPosition.of(self._positions[j]), tj, self.iono, tropo=cfg.tropo,
                                check_horizon=False)
                tau[j] = d.pseudorange / C
                el[j] = d.elevation
            amp = BASE_AMPLITUDE * 10 ** (cfg.gain_db.get(eph.prn, 0.0) / 20)
            bits = nav_bits(eph, self.iono, int(round(self.start.sow)) - NAV_LEAD, n_sub)
            chans.append(_Channel(eph, amp, tau, el, bits))
        return chans

    def _divisor(self) -> int:
        power = self.sigma ** 2 + sum(ch.amplitude ** 2 / 2 for ch in self.channels)
        return max(1, int(round(math.sqrt(power) / TARGET_RMS[self.config.bit_depth])))

    # per-channel expectations

    def doppler(self, ch: _Channel, j: int = 0) -> float:
        """Carrier offset the receiver sees over knot interval j."""
        k = self.config.scale
        rate = (ch.tau[j + 1] - ch.tau[j]) / STEP
        return float((k - 1.0) * L1_FREQ - L1_FREQ * k * rate)

    def state(self, ch: _Channel, n: int) -> ChannelState:
        k = self.config.scale
        fs = self.config.sample_rate
        t = k * n / fs
        tau = float(np.interp(t, self._knot_times(), ch.tau))
        r = t - tau + NAV_LEAD
        j = min(int(t / STEP), self.n_knots - 2)
        phase = ((k - 1.0) * L1_FREQ * n / fs - L1_FREQ * (tau - ch.tau[0]) + ch.phase0) % 1.0
        return ChannelState(ch.prn, (r * CHIP_RATE) % CODE_LENGTH, phase, self.doppler(ch, j),
                            int(math.floor(r * BIT_RATE)), ch.amplitude)

    def _knot_times(self) -> np.ndarray:
        return np.arange(self.n_knots) * STEP

    # sample generation

    def _channel_block(self, ch: _Channel, n0: int, n1: int) -> Optional[np.ndarray]:
        cfg = self.config
        fs = cfg.sample_rate
        k = cfg.scale
        nn = np.arange(n0, n1, dtype=np.float64)
        t = nn * (k / fs)
        j = np.minimum((t / STEP).astype(np.int64), self.n_knots - 2)
        if np.all(ch.el[j] < 0):
            return None
        tau = np.interp(t, self._knot_times(), ch.tau)
        r = t - tau + NAV_LEAD
        chips = np.floor(r * CHIP_RATE).astype(np.int64) % CODE_LENGTH
        bit_idx = np.floor(r * BIT_RATE).astype(np.int64)
        sym = ch.code[chips] * (1 - 2 * ch.bits[bit_idx].astype(np.int8))
        phase = (k - 1.0) * L1_FREQ * (nn / fs) - L1_FREQ * (tau - ch.tau[0]) + ch.phase0
        phase = 2.0 * np.pi * (phase - np.floor(phase))
        amp = ch.amplitude * sym * (ch.el[j] >= 0)
        out = np.empty((n1 - n0, 2), dtype=np.int64)
        out[:, 0] = np.rint(amp * np.cos(phase))
        out[:, 1] = np.rint(amp * np.sin(phase))
        return out

    def chunk_bounds(self, chunk_seconds: float = STEP):
        step = max(1, int(round(chunk_seconds * self.config.sample_rate)))
        return [(a, min(a + step, self.n_samples)) for a in range(0, self.n_samples, step)]

    def _mix(self, idx: int, n0: int, n1: int, pool) -> np.ndarray:
        acc = np.zeros((n1 - n0, 2), dtype=np.int64)
        if pool is None:
            blocks = [self._channel_block(ch, n0, n1) for ch in self.channels]
        else:
            blocks = list(pool.map(lambda ch: self._channel_block(ch, n0, n1), self.channels))
        for blk in blocks:  # ascending PRN
            if blk is not None:
                acc += blk
        if self.sigma > 0:
            rng = np.random.default_rng([self.config.seed, idx])
            acc += np.rint(rng.normal(0.0, self.sigma, size=acc.shape)).astype(np.int64)
        d = self.divisor
        q = np.floor_divide(acc + d // 2, d)
        lim = 2 ** (self.config.bit_depth - 1)
        over = (q < -lim) | (q > lim - 1)
        self.clipped += int(np.count_nonzero(over))
        return np.clip(q, -lim, lim - 1).astype(np.int8 if self.config.bit_depth == 8 else np.int16)

    def window(self, t0: float, seconds: float):
        """Samples of the chunks covering [t0, t0 + seconds); returns (first sample index, block).

        Identical to the same range of the full stream, since noise is seeded per chunk.
        """
        bounds = self.chunk_bounds()
        fs = self.config.sample_rate
        a, b = int(t0 * fs), int(math.ceil((t0 + seconds) * fs))
        picked = [(i, lo, hi) for i, (lo, hi) in enumerate(bounds) if hi > a and lo < b]
        if not picked:
            raise ValueError("window lies outside the stream")
        blocks = [self._mix(i, lo, hi, None) for i, lo, hi in picked]
        return picked[0][1], np.concatenate(blocks)

    def chunks(self) -> Iterator[np.ndarray]:
        self.clipped = 0
        bounds = self.chunk_bounds()
        if self.config.workers > 1:
            with ThreadPoolExecutor(self.config.workers) as pool:
                for i, (a, b) in enumerate(bounds):
                    yield self._mix(i, a, b, pool)
        else:
            for i, (a, b) in enumerate(bounds):
                yield self._mix(i, a, b, None)
        frac = self.clipped / max(1, 2 * self.n_samples)
        if frac > CLIP_WARN_FRACTION:
            msg = f"quantizer saturated on {100 * frac:.3f} % of samples"
            self.warnings.append(msg)
            warnings.warn(msg, ClippedOutput, stacklevel=2)

    def report(self) -> ScenarioReport:
        chans = []
        for ch in self.channels:
            chans.append(ChannelReport(
                prn=ch.prn, pseudorange_m=float(ch.tau[0] * C), doppler_hz=self.doppler(ch, 0),
                code_phase=code_phase_from_pseudorange(ch.tau[0] * C),
                gain_db=float(self.config.gain_db.get(ch.prn, 0.0)), amplitude=ch.amplitude,
                elevation=float(ch.el[0]), azimuth=float(self._azimuth(ch)), iode=ch.eph.iode))
        return ScenarioReport(
            mode=self.scenario.mode, start=self.start, requested_start=self.requested_start,
            duration=self.duration, sample_rate=self.config.sample_rate, bit_depth=self.config.bit_depth,
            n_samples=self.n_samples, ppm_error=self.config.ppm_error, noise=self.config.noise,
            noise_amplitude=self.sigma, scale_divisor=self.divisor, seed=self.config.seed,
            channels=chans, warnings=list(self.warnings), config=self.config.echo(),
            clipped_fraction=self.clipped / max(1, 2 * self.n_samples))

    def _azimuth(self, ch: _Channel) -> float:
        try:
            d = pseudorange(ch.eph, EcefPosition.of(self._positions[0]), self.start.total, None,
                            tropo=False, check_horizon=False)
        except BelowHorizon:
            return float("nan")
        return d.azimuth


def synthesize(scenario: Scenario, ephemerides, iono=None, config: Optional[SynthesisConfig] = None,
               duration: Optional[float] = None):
    """Full in-memory synthesis; returns ((n, 2) int array, ScenarioReport)."""
    syn = Synthesizer(scenario, ephemerides, iono, config, duration)
    blocks = list(syn.chunks())
    iq = np.concatenate(blocks) if blocks else np.zeros((0, 2), dtype=np.int8)
    return iq, syn.report()


def generate_file(scenario: Scenario, ephemerides, path, iono=None, config: Optional[SynthesisConfig] = None,
                  duration: Optional[float] = None):
    """Stream samples to ``path``; returns (bytes written, ScenarioReport)."""
    from .iqfile import write_iq
    syn = Synthesizer(scenario, ephemerides, iono, config, duration)
    nbytes = write_iq(syn.chunks(), path, syn.config.bit_depth)
    return nbytes, syn.report()

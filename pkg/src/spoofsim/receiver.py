"""Software acquisition oracle used to check generated sample files against their reports."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np
from scipy import signal as _signal

from .baseband.codes import CHIP_RATE, CODE_LENGTH, ca_code, sampled_code
from .baseband.report import ScenarioReport
from .errors import InsufficientData, ReportMismatch, StreamTooShort
from .orbits import L1_FREQ

CN0_MIN, CN0_MAX = 10.0, 60.0


@dataclass(frozen=True)
class AcqConfig:
    doppler_span: float = 5000.0
    doppler_step: float = 250.0
    coherent_ms: int = 1
    noncoherent_sums: int = 5
    threshold: float = 2.5
    doppler_center: float = 0.0
    cn0_ms: int = 100


@dataclass
class AcquisitionResult:
    prn: int
    detected: bool
    code_phase: float
    doppler: float
    peak_metric: float
    cn0: float = float("nan")


def _samples_per_ms(fs: float) -> int:
    return int(round(fs / 1000.0))


def _parabola(ym, y0, yp) -> float:
    den = ym - 2.0 * y0 + yp
    if den >= 0:
        return 0.0
    return float(np.clip(0.5 * (ym - yp) / den, -0.5, 0.5))


def acquire(iq: np.ndarray, prn: int, fs: float, config: AcqConfig = AcqConfig(),
            start: int = 0) -> AcquisitionResult:
    """Parallel code-phase search over the Doppler grid.

    ``code_phase`` is the incoming code's chip at sample ``start``. The
    detection metric is the peak cell over the strongest cell of the same
    Doppler row lying more than one chip away from it.
    """
    n_ms = _samples_per_ms(fs)
    n = int(round(fs * config.coherent_ms / 1000.0))
    need = n * config.noncoherent_sums + n_ms
    if len(iq) - start < need:
        raise StreamTooShort(f"need {need} samples from {start}, have {len(iq) - start}")
    x = np.asarray(iq[start:start + n * config.noncoherent_sums], dtype=np.complex128)
    rep = np.conj(np.fft.fft(sampled_code(prn, fs, n)))
    half = math.floor(config.doppler_span / config.doppler_step + 1e-9)
    dopplers = config.doppler_center + config.doppler_step * np.arange(-half, half + 1)
    t = np.arange(x.size) / fs
    wiped = x[None, :] * np.exp(-2j * np.pi * dopplers[:, None] * t[None, :])
    blocks = wiped.reshape(len(dopplers), config.noncoherent_sums, n)
    corr = np.fft.ifft(np.fft.fft(blocks, axis=2) * rep[None, None, :], axis=2)
    power = np.sum(np.abs(corr) ** 2, axis=1)

    i, s = np.unravel_index(int(np.argmax(power)), power.shape)
    row = power[i]
    spc = fs / CHIP_RATE
    d = np.abs(np.arange(n) - s)
    d = np.minimum(d, n - d)
    second = row[d > spc + 1].max()
    metric = float(row[s] / second) if second > 0 else float("inf")

    ds = _parabola(row[(s - 1) % n], row[s], row[(s + 1) % n])
    code_phase = float((-(s + ds) / spc) % CODE_LENGTH)
    dd = 0.0
    if 0 < i < len(dopplers) - 1:
        dd = _parabola(power[i - 1, s], power[i, s], power[i + 1, s])
    doppler = float(dopplers[i] + dd * config.doppler_step)
    detected = metric >= config.threshold

    cn0 = float("nan")
    if detected:
        avail = (len(iq) - start) // n_ms - 1
        n_out = min(config.cn0_ms, avail)
        if n_out >= 10:
            cn0 = estimate_cn0(prompt_outputs(iq, prn, fs, code_phase, doppler, n_out, start))
    return AcquisitionResult(prn, detected, code_phase, doppler, metric, cn0)


def _epochs(fs, code_phase, doppler, n_ms, start, length):
    rate = CHIP_RATE * (1.0 + doppler / L1_FREQ) / fs      # chips per sample
    first = ((CODE_LENGTH - code_phase) % CODE_LENGTH) / rate
    period = CODE_LENGTH / rate
    edges = np.round(first + period * np.arange(n_ms + 1)).astype(np.int64)
    if edges[-1] > length - start:
        raise InsufficientData(f"{n_ms} ms of prompt outputs need {edges[-1]} samples")
    return rate, edges


def prompt_outputs(iq: np.ndarray, prn: int, fs: float, code_phase: float, doppler: float,
                   n_ms: int, start: int = 0) -> np.ndarray:
    """Successive 1 ms coherent correlations aligned to code epochs (carrier wiped at ``doppler``)."""
    rate, edges = _epochs(fs, code_phase, doppler, n_ms, start, len(iq))
    k = np.arange(edges[0], edges[-1])
    chips = np.floor(code_phase + k * rate).astype(np.int64) % CODE_LENGTH
    code = ca_code(prn).bipolar()[chips]
    x = np.asarray(iq[start + edges[0]:start + edges[-1]], dtype=np.complex128)
    prod = x * code * np.exp(-2j * np.pi * doppler * k / fs)
    return np.add.reduceat(prod, edges[:-1] - edges[0])


def estimate_cn0(outputs, t_coh: float = 1e-3) -> float:
    """Moment (M2M4) C/N0 estimate in dBHz from coherent correlator outputs."""
    p = np.asarray(outputs)
    if p.size < 10:
        raise InsufficientData(f"{p.size} correlator outputs, need at least 10")
    p2 = np.abs(p) ** 2
    m2, m4 = p2.mean(), (p2 ** 2).mean()
    pd = math.sqrt(max(2.0 * m2 * m2 - m4, 0.0))
    pn = m2 - pd
    if pd <= 0:
        return CN0_MIN
    if pn <= 0:
        return CN0_MAX
    return float(np.clip(10.0 * math.log10(pd / (pn * t_coh)), CN0_MIN, CN0_MAX))


def fine_doppler(iq: np.ndarray, prn: int, fs: float, code_phase: float, doppler: float,
                 n_ms: int = 500, start: int = 0, lags=(1, 5, 20)) -> float:
    """Refine a Doppler estimate from phase rotation between squared prompt outputs.

    Squaring removes data-bit signs; each lag L has an unambiguous range of
    +-1/(4 L T), so lags must grow gradually from a coarse start.
    """
    rate, edges = _epochs(fs, code_phase, doppler, n_ms, start, len(iq))
    p = prompt_outputs(iq, prn, fs, code_phase, doppler, n_ms, start)
    t_blk = edges[:-1] / fs
    spacing = CODE_LENGTH / rate / fs
    f = doppler
    for lag in lags:
        if lag >= len(p):
            break
        z = np.sum((p[lag:] * np.conj(p[:-lag])) ** 2)
        df = float(np.angle(z)) / (4.0 * np.pi * lag * spacing)
        f += df
        p = p * np.exp(-2j * np.pi * df * t_blk)
    return f


def time_to_detect(iq: np.ndarray, prn: int, fs: float, config: AcqConfig = AcqConfig(),
                   max_seconds: Optional[float] = None):
    """Signal seconds consumed until the first detecting window, or None."""
    window = int(round(fs * config.coherent_ms / 1000.0)) * config.noncoherent_sums
    n_ms = _samples_per_ms(fs)
    limit = len(iq) if max_seconds is None else min(len(iq), int(max_seconds * fs))
    start = 0
    last = None
    while start + window + n_ms <= limit:
        last = acquire(iq, prn, fs, replace(config, cn0_ms=0), start)
        if last.detected:
            return (start + window) / fs, last
        start += window
    return None, last


def periodogram(iq: np.ndarray, fs: float, nfft: int = 1024):
    """Averaged power spectrum, frequencies centred on zero."""
    f, p = _signal.welch(np.asarray(iq, dtype=np.complex128), fs=fs, nperseg=nfft,
                         return_onesided=False, detrend=False)
    order = np.argsort(f)
    return f[order], p[order]


@dataclass
class PrnVerification:
    prn: int
    expected_code_phase: float
    measured_code_phase: float
    expected_doppler: float
    measured_doppler: float
    cn0: float
    peak_metric: float
    detected: bool
    time_to_detect: Optional[float]
    passed: bool

    @property
    def code_error(self) -> float:
        d = (self.measured_code_phase - self.expected_code_phase) % CODE_LENGTH
        return min(d, CODE_LENGTH - d)

    @property
    def doppler_error(self) -> float:
        return abs(self.measured_doppler - self.expected_doppler)


@dataclass
class VerificationReport:
    rows: List[PrnVerification] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.rows) and all(r.passed for r in self.rows)

    @property
    def detected_count(self) -> int:
        return sum(r.detected for r in self.rows)

    def row(self, prn: int) -> PrnVerification:
        for r in self.rows:
            if r.prn == prn:
                return r
        raise KeyError(prn)

    def to_text(self) -> str:
        lines = ["PRN  det  code_exp  code_meas  code_err  dop_exp    dop_meas   dop_err  cn0    metric  "
                 "detect_s  result"]
        for r in self.rows:
            ttd = "-" if r.time_to_detect is None else f"{r.time_to_detect:.3f}"
            cn0 = "-" if math.isnan(r.cn0) else f"{r.cn0:5.1f}"
            lines.append(
                f"{r.prn:3d}  {'yes' if r.detected else 'no ':3s}  {r.expected_code_phase:8.2f}  "
                f"{r.measured_code_phase:9.2f}  {r.code_error:8.3f}  {r.expected_doppler:9.1f}  "
                f"{r.measured_doppler:9.1f}  {r.doppler_error:7.1f}  {cn0:>5s}  {r.peak_metric:6.2f}  "
                f"{ttd:>8s}  {'PASS' if r.passed else 'FAIL'}")
        lines.append(f"detected {self.detected_count}/{len(self.rows)}; "
                     f"verdict {'PASS' if self.passed else 'FAIL'}")
        lines.append("detect_s is signal consumed by the software oracle until detection; "
                     "it is not a handset time to first fix")
        return "\n".join(lines) + "\n"


def verify_scenario(iq: np.ndarray, report: ScenarioReport, config: AcqConfig = AcqConfig(),
                    code_tol: float = 0.5, doppler_tol: float = 100.0, detect_limit: float = 1.0,
                    workers: int = 1) -> VerificationReport:
    """Acquire every channel of ``report`` at the stream start and compare with its truth."""
    if len(iq) != report.n_samples:
        raise ReportMismatch(f"file holds {len(iq)} samples, report says {report.n_samples}")
    fs = report.sample_rate

    def one(ch):
        res = acquire(iq, ch.prn, fs, config)
        ttd = 0.0
        if res.detected:
            ttd = config.noncoherent_sums * config.coherent_ms / 1000.0
        else:
            ttd, _ = time_to_detect(iq, ch.prn, fs, config, detect_limit)
        row = PrnVerification(ch.prn, ch.code_phase, res.code_phase, ch.doppler_hz, res.doppler,
                              res.cn0, res.peak_metric, res.detected, ttd, False)
        row.passed = bool(res.detected and row.code_error <= code_tol and row.doppler_error <= doppler_tol)
        return row

    chans = sorted(report.channels, key=lambda c: c.prn)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(one, chans))
    else:
        rows = [one(c) for c in chans]
    return VerificationReport(rows)

"""Spoofed-signal x receiver-motion grid, reported as a software analogue of a phone test table."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .baseband.iqfile import to_complex
from .baseband.synth import SynthesisConfig, synthesize
from .geodesy import GeodeticPosition, enu_matrix, geodetic_to_ecef, xyz_to_llh
from .gpstime import GpsTime
from .orbits import L1_WAVELENGTH
from .receiver import AcqConfig, acquire, estimate_cn0, prompt_outputs, time_to_detect
from .trajectory import static_scenario, waypoint_scenario

SIGNALS = ("static", "dynamic")
RECEIVERS = ("stationary", "moving")
DYNAMIC_SPEED = 25.8
RECEIVER_SPEED = 1.0          # m/s walking pace of the handset
LOOP_SIDE = 200.0
LABEL = "software analogue"


@dataclass
class CellResult:
    signal: str
    receiver: str
    detected: int = 0
    total: int = 0
    time_to_detect: Optional[float] = None
    cn0: float = float("nan")
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None and self.total > 0 and self.detected == self.total

    def text(self) -> str:
        if self.error is not None:
            return f"ERR({self.error})"
        ttd = "-" if self.time_to_detect is None else f"{self.time_to_detect:.3f} s"
        mark = "S" if self.ok else "F"
        return f"{mark}({ttd}, {self.cn0:.1f} dBHz, {self.detected}/{self.total})"


@dataclass
class MatrixReport:
    signals: Sequence[str]
    receivers: Sequence[str]
    cells: Dict[Tuple[str, str], CellResult] = field(default_factory=dict)

    def cell(self, signal: str, receiver: str) -> CellResult:
        return self.cells[(signal, receiver)]

    def to_text(self) -> str:
        width = max(34, *(len(c.text()) for c in self.cells.values()))
        head = f"{'spoofed signal':16s}" + "".join(f"  {r:{width}s}" for r in self.receivers)
        lines = [f"Detection grid ({LABEL}; times are oracle time-to-detect, not handset TTFF)",
                 head, "-" * len(head)]
        for s in self.signals:
            lines.append(f"{s:16s}" + "".join(f"  {self.cell(s, r).text():{width}s}" for r in self.receivers))
        lines.append("S = every synthesized PRN detected; cell shows worst time-to-detect, mean C/N0, "
                     "detected/total")
        return "\n".join(lines) + "\n"


def loop_waypoints(center: GeodeticPosition, side: float = LOOP_SIDE) -> List[GeodeticPosition]:
    """Closed square loop of side ``side`` metres centred on ``center``."""
    rot = enu_matrix(center.lat, center.lon)
    c = np.asarray(geodetic_to_ecef(center))
    h = side / 2
    out = []
    for e, n in ((-h, -h), (h, -h), (h, h), (-h, h), (-h, -h)):
        lat, lon, alt = xyz_to_llh(*(c + rot.T @ np.array([e, n, 0.0])))
        out.append(GeodeticPosition(float(lat), float(lon), float(alt)))
    return out


def _receiver_motion(x: np.ndarray, fs: float, speed: float) -> np.ndarray:
    # handset walking along one satellite-independent direction: a common carrier rotation
    f = speed / L1_WAVELENGTH
    return x * np.exp(2j * np.pi * f * np.arange(x.size) / fs).astype(np.complex64)


def run_cell(signal: str, receiver: str, records, iono, location: GeodeticPosition, start: GpsTime,
             duration: float, config: SynthesisConfig, acq: AcqConfig = AcqConfig(),
             detect_limit: float = 1.0) -> CellResult:
    cell = CellResult(signal, receiver)
    if signal == "static":
        sc = static_scenario(location, start, duration)
    else:
        sc = waypoint_scenario(loop_waypoints(location), DYNAMIC_SPEED, start)
    iq, rep = synthesize(sc, records, iono, config, duration=duration)
    x = to_complex(iq)
    if receiver == "moving":
        x = _receiver_motion(x, rep.sample_rate, RECEIVER_SPEED)
    worst = 0.0
    cn0s = []
    for ch in rep.channels:
        cell.total += 1
        ttd, res = time_to_detect(x, ch.prn, rep.sample_rate, acq, detect_limit)
        if ttd is None:
            worst = math.inf
            continue
        cell.detected += 1
        worst = max(worst, ttd)
        start_idx = int(round((ttd - acq.noncoherent_sums * acq.coherent_ms / 1000) * rep.sample_rate))
        n_ms = min(acq.cn0_ms, (len(x) - start_idx) // int(round(rep.sample_rate / 1000)) - 1)
        if n_ms >= 10:
            cn0s.append(estimate_cn0(prompt_outputs(x, ch.prn, rep.sample_rate, res.code_phase,
                                                    res.doppler, n_ms, start_idx)))
    cell.time_to_detect = None if math.isinf(worst) or cell.detected == 0 else worst
    if cn0s:
        cell.cn0 = float(np.mean(cn0s))
    return cell


def run_matrix(records, iono, location: GeodeticPosition, start: GpsTime, duration: float = 1.0,
               config: Optional[SynthesisConfig] = None, signals=SIGNALS, receivers=RECEIVERS,
               acq: AcqConfig = AcqConfig()) -> MatrixReport:
    """Run every cell; a failing cell is recorded and the grid still completes."""
    config = config or SynthesisConfig()
    report = MatrixReport(list(signals), list(receivers))
    for s in signals:
        for r in receivers:
            try:
                report.cells[(s, r)] = run_cell(s, r, records, iono, location, start, duration, config, acq)
            except Exception as exc:  # noqa: BLE001 - the grid completes regardless
                report.cells[(s, r)] = CellResult(s, r, error=f"{type(exc).__name__}: {exc}")
    return report

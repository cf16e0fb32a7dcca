"""ScenarioReport: human-readable summary plus a key = value data section."""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Dict, List, Optional

from ..errors import ReportMismatch
from ..gpstime import GpsTime

FORMAT_TAG = "spoofsim-report-1"


@dataclass
class ChannelReport:
    prn: int
    pseudorange_m: float
    doppler_hz: float
    code_phase: float
    gain_db: float
    amplitude: float = 0.0
    elevation: float = 0.0
    azimuth: float = 0.0
    iode: int = 0

    def encode(self) -> str:
        return " ".join(f"{f.name}={getattr(self, f.name)!r}" for f in fields(self))

    @classmethod
    def decode(cls, text: str) -> "ChannelReport":
        kv = dict(item.split("=", 1) for item in text.split())
        types = {f.name: f.type for f in fields(cls)}
        out = {}
        for name, raw in kv.items():
            if name not in types:
                continue
            out[name] = int(raw) if types[name] in ("int", int) else float(raw)
        return cls(**out)


@dataclass
class ScenarioReport:
    mode: str
    start: GpsTime
    requested_start: GpsTime
    duration: float
    sample_rate: float
    bit_depth: int
    n_samples: int
    ppm_error: float
    noise: bool
    noise_amplitude: float
    scale_divisor: int
    seed: int
    channels: List[ChannelReport] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    config: Dict[str, str] = field(default_factory=dict)
    clipped_fraction: float = 0.0

    @property
    def snap_seconds(self) -> float:
        return self.start.total - self.requested_start.total

    @property
    def prns(self) -> List[int]:
        return [c.prn for c in self.channels]

    def channel(self, prn: int) -> ChannelReport:
        for c in self.channels:
            if c.prn == prn:
                return c
        raise KeyError(prn)

    def to_text(self) -> str:
        lines = [
            "spoofsim scenario report",
            "========================",
            f"mode            {self.mode}",
            f"start (GPS)     {self.start.isoformat()}  week {self.start.week} sow {self.start.sow:.3f}",
            f"requested       {self.requested_start.isoformat()}  (snapped +{self.snap_seconds:.3f} s "
            "to the next subframe boundary)",
            f"duration        {self.duration:.1f} s, {self.n_samples} samples at {self.sample_rate:.0f} Hz, "
            f"{self.bit_depth}-bit I/Q",
            f"oscillator      {self.ppm_error:+.3f} ppm",
            f"noise           {'on' if self.noise else 'off'} (sigma {self.noise_amplitude:.1f} counts, "
            f"seed {self.seed})",
            f"clipped         {100 * self.clipped_fraction:.4f} % of samples",
            "",
            "  PRN   elev    azim    pseudorange_m    doppler_hz  code_phase  gain_db",
        ]
        for c in self.channels:
            lines.append(f"  {c.prn:3d}  {c.elevation:5.1f}  {c.azimuth:6.1f}  {c.pseudorange_m:15.3f}  "
                         f"{c.doppler_hz:12.3f}  {c.code_phase:10.4f}  {c.gain_db:7.2f}")
        for w in self.warnings:
            lines.append(f"warning: {w}")
        lines += ["", "[data]", f"format = {FORMAT_TAG}"]
        data = {
            "mode": self.mode,
            "start_week": self.start.week,
            "start_sow": repr(self.start.sow),
            "requested_week": self.requested_start.week,
            "requested_sow": repr(self.requested_start.sow),
            "duration": repr(self.duration),
            "sample_rate": repr(self.sample_rate),
            "bit_depth": self.bit_depth,
            "n_samples": self.n_samples,
            "ppm_error": repr(self.ppm_error),
            "noise": "on" if self.noise else "off",
            "noise_amplitude": repr(self.noise_amplitude),
            "scale_divisor": self.scale_divisor,
            "seed": self.seed,
            "clipped_fraction": repr(self.clipped_fraction),
        }
        lines += [f"{k} = {v}" for k, v in data.items()]
        lines += [f"config.{k} = {v}" for k, v in self.config.items()]
        lines += [f"channel = {c.encode()}" for c in self.channels]
        lines += [f"warning = {w}" for w in self.warnings]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ScenarioReport":
        body = text.split("\n[data]\n", 1)
        if len(body) != 2:
            raise ReportMismatch("report has no [data] section")
        kv: Dict[str, str] = {}
        channels, warns, config = [], [], {}
        for lineno, line in enumerate(body[1].splitlines(), 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            if "=" not in line:
                raise ReportMismatch(f"bad report line {line!r}", line=lineno)
            key, value = (s.strip() for s in line.split("=", 1))
            if key == "channel":
                channels.append(ChannelReport.decode(value))
            elif key == "warning":
                warns.append(value)
            elif key.startswith("config."):
                config[key[7:]] = value
            else:
                kv[key] = value
        if kv.get("format") != FORMAT_TAG:
            raise ReportMismatch(f"unknown report format {kv.get('format')!r}")
        try:
            return cls(
                mode=kv["mode"],
                start=GpsTime(int(kv["start_week"]), float(kv["start_sow"])),
                requested_start=GpsTime(int(kv["requested_week"]), float(kv["requested_sow"])),
                duration=float(kv["duration"]),
                sample_rate=float(kv["sample_rate"]),
                bit_depth=int(kv["bit_depth"]),
                n_samples=int(kv["n_samples"]),
                ppm_error=float(kv["ppm_error"]),
                noise=kv["noise"] == "on",
                noise_amplitude=float(kv["noise_amplitude"]),
                scale_divisor=int(kv["scale_divisor"]),
                seed=int(kv["seed"]),
                channels=channels,
                warnings=warns,
                config=config,
                clipped_fraction=float(kv.get("clipped_fraction", 0.0)),
            )
        except (KeyError, ValueError) as exc:
            raise ReportMismatch(f"incomplete report data section: {exc}") from None


def load_report(path) -> ScenarioReport:
    with open(path, "r", encoding="utf-8") as fh:
        return ScenarioReport.from_text(fh.read())


def expected_code_phase(report: ScenarioReport, ch: ChannelReport) -> Optional[float]:
    from .synth import code_phase_from_pseudorange
    return code_phase_from_pseudorange(ch.pseudorange_m)

"""Command-line front end: generate, plan, verify, doy and matrix.

Times are given as ``YYYY-MM-DDThh:mm:ssZ`` and read as GPS time
directly; no leap-second table is applied.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import sys
import warnings
from pathlib import Path
from typing import Dict, List, Optional

from .baseband.iqfile import read_iq, sample_count
from .baseband.report import load_report
from .baseband.synth import SynthesisConfig
from .errors import (FieldOverflow, InputError, IoFailure, NoEphemeris, ReportMismatch, SpoofsimError,
                     StaleEphemeris, TooFewSatellites)
from .geodesy import GeodeticPosition, geodetic_to_ecef
from .gpstime import GpsTime
from .matrix import run_matrix
from .orbits import L1_WAVELENGTH, visible
from .receiver import AcqConfig, verify_scenario
from .rinex import VALIDITY_WINDOW, brdc_filename, read_rinex_nav
from .trajectory import (csv_scenario, parse_motion_csv, read_gga_stream, read_waypoints, scenario_from_gga,
                         static_scenario, waypoint_scenario)

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_IO, EXIT_VERIFY = 0, 2, 3, 4, 5
MAX_DURATION = 2 * VALIDITY_WINDOW
DEFAULT_STATIC_DURATION = 10.0


class UsageError(InputError):
    pass


def read_config(path) -> Dict[str, str]:
    """Flat ``key = value`` file; '#' starts a comment."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read config {path}: {exc.strerror or exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"expected key=value, got {raw.strip()!r}", line=lineno, source=str(path))
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _gain(text: str):
    prn, _, db = text.partition("=")
    try:
        return int(prn), float(db)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected PRN=DB, got {text!r}") from None


def _on_off(text: str) -> bool:
    t = text.strip().lower()
    if t in ("on", "true", "1", "yes"):
        return True
    if t in ("off", "false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected on/off, got {text!r}")


def _location(text: str) -> GeodeticPosition:
    try:
        return GeodeticPosition.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _time(text: str) -> GpsTime:
    try:
        return GpsTime.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_ephemeris(p):
    p.add_argument("--ephemeris", required=True, metavar="PATH", help="RINEX 2 GPS navigation file (brdc)")
    p.add_argument("--start", type=_time, default=None, metavar="TIME",
                   help="GPS time YYYY-MM-DDThh:mm:ssZ (no leap seconds); default: earliest toe in the file")
    p.add_argument("--elevation-mask", type=float, default=10.0, metavar="DEG", help="elevation mask")


def _add_synthesis(p):
    p.add_argument("--sample-rate", type=float, default=2.6e6, metavar="HZ", help="output sample rate")
    p.add_argument("--bits", type=int, choices=(8, 16), default=8, help="signed I/Q sample width")
    p.add_argument("--ppm", type=float, default=0.0, metavar="F", help="oscillator error in parts per million")
    p.add_argument("--noise", type=_on_off, default=True, metavar="{on|off}", help="additive white noise floor")
    p.add_argument("--seed", type=int, default=0, metavar="N", help="noise generator seed")
    p.add_argument("--gain-db", type=_gain, action="append", default=None, metavar="PRN=DB",
                   help="per-PRN gain offset, repeatable")
    p.add_argument("--workers", type=int, default=1, metavar="N", help="parallel channel workers")


def build_parser():
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="spoofsim", formatter_class=fmt,
                                     description="GPS L1 C/A baseband generator and software verification "
                                                 "oracle. Times are GPS time, no leap seconds.")
    parser.add_argument("--config", metavar="PATH", default=None,
                        help="key=value defaults file; command-line flags take precedence")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", formatter_class=fmt, help="write an I/Q file and its scenario report")
    _add_ephemeris(g)
    src = g.add_mutually_exclusive_group()
    src.add_argument("--location", type=_location, default=None, metavar="LAT,LON,ALT",
                     help="static receiver position (degrees, metres)")
    src.add_argument("--nmea", default=None, metavar="PATH", help="NMEA GGA trajectory")
    src.add_argument("--motion-csv", default=None, metavar="PATH", help="t,x,y,z ECEF rows at 0.1 s")
    src.add_argument("--waypoints", default=None, metavar="PATH", help="lat,lon,alt per line, driven at --speed")
    g.add_argument("--speed", type=float, default=None, metavar="MPS", help="waypoint speed")
    g.add_argument("--duration", type=float, default=None, metavar="S",
                   help=f"seconds of signal (default {DEFAULT_STATIC_DURATION:g} for static, trajectory length "
                        "otherwise)")
    _add_synthesis(g)
    g.add_argument("--output", required=True, metavar="PATH", help="I/Q output; the report goes to PATH.report")

    p = sub.add_parser("plan", formatter_class=fmt, help="visibility table for a location and epoch")
    _add_ephemeris(p)
    p.add_argument("--location", type=_location, required=True, metavar="LAT,LON,ALT", help="receiver position")

    v = sub.add_parser("verify", formatter_class=fmt, help="acquire a generated file and check it against its report")
    v.add_argument("iq", metavar="IQ_PATH", help="generated I/Q file")
    v.add_argument("--report", default=None, metavar="PATH", help="scenario report (default IQ_PATH.report)")
    v.add_argument("--doppler-span", type=float, default=5000.0, metavar="HZ", help="+- Doppler search span")
    v.add_argument("--doppler-step", type=float, default=250.0, metavar="HZ", help="Doppler bin width")
    v.add_argument("--threshold", type=float, default=2.5, help="peak metric detection threshold")
    v.add_argument("--noncoherent-sums", type=int, default=5, metavar="N", help="1 ms blocks summed")
    v.add_argument("--code-tol", type=float, default=0.5, metavar="CHIPS", help="code phase tolerance")
    v.add_argument("--doppler-tol", type=float, default=100.0, metavar="HZ", help="Doppler tolerance")
    v.add_argument("--workers", type=int, default=1, metavar="N", help="parallel acquisitions")

    d = sub.add_parser("doy", formatter_class=fmt, help="print the brdc file name for a date")
    d.add_argument("date", metavar="YYYY-MM-DD", help="calendar date")

    m = sub.add_parser("matrix", formatter_class=fmt,
                       help="static/dynamic signal x stationary/moving receiver grid (software analogue)")
    _add_ephemeris(m)
    m.add_argument("--location", type=_location, required=True, metavar="LAT,LON,ALT", help="centre of the scenario")
    m.add_argument("--duration", type=float, default=1.0, metavar="S", help="seconds per cell")
    m.add_argument("--interference-db", type=float, default=None, metavar="DB",
                   help="extra noise power relative to the floor (models a live-signal environment); off by default")
    _add_synthesis(m)
    return parser, {"generate": g, "plan": p, "verify": v, "doy": d, "matrix": m}


def parse_args(argv: Optional[List[str]] = None):
    """Parse with precedence: flags > config file > built-in defaults."""
    parser, subs = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    pre.add_argument("command", nargs="?")
    early, _ = pre.parse_known_args(argv)
    cfg = {}
    if early.config and early.command in subs:
        cfg = read_config(early.config)
        sp = subs[early.command]
        actions = {a.dest: a for a in sp._actions if a.dest != "help"}
        defaults = {}
        for key, raw in cfg.items():
            if key not in actions:
                raise UsageError(f"unknown key {key!r} for {early.command}", source=early.config)
            act = actions[key]
            try:
                val = act.type(raw) if act.type else raw
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"{key}: {exc}", source=early.config) from None
            defaults[key] = [val] if isinstance(act, argparse._AppendAction) else val
            act.required = False
        sp.set_defaults(**defaults)
    args = parser.parse_args(argv)
    args.config_values = cfg
    return args


def _load_ephemeris(path):
    iono, records = read_rinex_nav(path)
    if not records:
        raise InputError("no ephemeris records", source=str(path))
    return iono, records


def _start(args, records) -> GpsTime:
    if args.start is not None:
        return args.start
    return GpsTime.from_total(min(r.toe_total for r in records))


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc.strerror or exc}") from exc


def _scenario(args, start):
    given = sum(x is not None for x in (args.location, args.nmea, args.motion_csv, args.waypoints))
    if given != 1:
        raise UsageError("give exactly one of --location, --nmea, --motion-csv, --waypoints")
    try:
        if args.location is not None:
            return static_scenario(args.location, start, args.duration or DEFAULT_STATIC_DURATION)
        if args.nmea is not None:
            return scenario_from_gga(read_gga_stream(_read_text(args.nmea).splitlines()), start)
        if args.motion_csv is not None:
            return csv_scenario(parse_motion_csv(_read_text(args.motion_csv)), start)
        if args.speed is None:
            raise UsageError("--waypoints needs --speed")
        return waypoint_scenario(read_waypoints(_read_text(args.waypoints)), args.speed, start)
    except InputError as exc:
        if exc.source is None:
            src = args.nmea or args.motion_csv or args.waypoints
            raise type(exc)(exc.message, line=exc.line, source=src) from None
        raise


def _synthesis_config(args, **extra) -> SynthesisConfig:
    return SynthesisConfig(sample_rate=args.sample_rate, bit_depth=args.bits, ppm_error=args.ppm,
                           noise=args.noise, seed=args.seed, elevation_mask=args.elevation_mask,
                           gain_db=dict(args.gain_db or []), workers=args.workers, **extra)


def cmd_generate(args, out=sys.stdout) -> int:
    iono, records = _load_ephemeris(args.ephemeris)
    start = _start(args, records)
    scenario = _scenario(args, start)
    duration = args.duration if args.duration is not None else scenario.duration
    if not 0 < duration <= MAX_DURATION:
        raise UsageError(f"duration must be in (0, {MAX_DURATION:.0f}] s, got {duration:g}")
    cfg = _synthesis_config(args)
    if iono is None:
        warnings.warn("ephemeris header has no ionospheric coefficients; iono delay disabled", stacklevel=1)
    from .baseband.synth import Synthesizer
    from .baseband.iqfile import write_iq
    syn = Synthesizer(scenario, records, iono, cfg, duration)
    nbytes = write_iq(syn.chunks(), args.output, cfg.bit_depth)
    report = syn.report()
    report.config.update({"ephemeris": str(args.ephemeris), "source": _source_text(args),
                          "output": str(args.output)})
    for k, v in getattr(args, "config_values", {}).items():
        report.config.setdefault(f"file.{k}", v)
    rpath = f"{args.output}.report"
    try:
        Path(rpath).write_text(report.to_text(), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {rpath}: {exc.strerror or exc}") from exc
    print(f"wrote {nbytes} bytes to {args.output} ({report.n_samples} samples, "
          f"{len(report.channels)} channels, start {report.start.isoformat()})", file=out)
    print(f"report: {rpath}", file=out)
    return EXIT_OK


def _source_text(args) -> str:
    if args.location is not None:
        g = args.location
        return f"static {g.lat!r},{g.lon!r},{g.alt!r}"
    if args.nmea:
        return f"nmea {args.nmea}"
    if args.motion_csv:
        return f"motion-csv {args.motion_csv}"
    return f"waypoints {args.waypoints} at {args.speed} m/s"


def plan_rows(records, location: GeodeticPosition, t: GpsTime, mask: float):
    user = geodetic_to_ecef(location)
    rows = []
    for eph, d in visible(records, user, t, mask):
        doppler = -(d.range_rate - d.clock_drift * 299792458.0) / L1_WAVELENGTH
        rows.append((eph.prn, d.elevation, d.azimuth, doppler))
    return rows


def cmd_plan(args, out=sys.stdout) -> int:
    _, records = _load_ephemeris(args.ephemeris)
    t = _start(args, records)
    rows = plan_rows(records, args.location, t, args.elevation_mask)
    print(f"visibility at {t.isoformat()} (GPS) from {args.location.lat:.6f},{args.location.lon:.6f},"
          f"{args.location.alt:.1f}; mask {args.elevation_mask:g} deg", file=out)
    print(" PRN   elev_deg   azim_deg   doppler_hz", file=out)
    for prn, el, az, dop in rows:
        print(f" {prn:3d}   {el:8.2f}   {az:8.2f}   {dop:10.1f}", file=out)
    feasible = len(rows) >= 4
    print(f"{len(rows)} satellites: {'feasible' if feasible else 'INFEASIBLE (need at least 4)'}", file=out)
    return EXIT_OK if feasible else EXIT_INFEASIBLE


def cmd_verify(args, out=sys.stdout) -> int:
    rpath = args.report or f"{args.iq}.report"
    try:
        report = load_report(rpath)
    except OSError as exc:
        raise IoFailure(f"cannot read {rpath}: {exc.strerror or exc}") from exc
    if not Path(args.iq).exists():
        raise IoFailure(f"cannot read {args.iq}: no such file")
    n = sample_count(args.iq, report.bit_depth)
    if n != report.n_samples:
        raise ReportMismatch(f"{args.iq} holds {n} samples, report says {report.n_samples}", source=rpath)
    iq = read_iq(args.iq, report.bit_depth)
    acq = AcqConfig(doppler_span=args.doppler_span, doppler_step=args.doppler_step, threshold=args.threshold,
                    noncoherent_sums=args.noncoherent_sums)
    result = verify_scenario(iq, report, acq, args.code_tol, args.doppler_tol, workers=args.workers)
    print(result.to_text(), end="", file=out)
    return EXIT_OK if result.passed else EXIT_VERIFY


def cmd_doy(args, out=sys.stdout) -> int:
    try:
        date = _dt.date.fromisoformat(args.date)
    except ValueError:
        raise UsageError(f"expected YYYY-MM-DD, got {args.date!r}") from None
    print(brdc_filename(date), file=out)
    return EXIT_OK


def cmd_matrix(args, out=sys.stdout) -> int:
    iono, records = _load_ephemeris(args.ephemeris)
    start = _start(args, records)
    cfg = _synthesis_config(args, interference_db=args.interference_db)
    report = run_matrix(records, iono, args.location, start, args.duration, cfg)
    print(report.to_text(), end="", file=out)
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "plan": cmd_plan, "verify": cmd_verify, "doy": cmd_doy,
            "matrix": cmd_matrix}


def main(argv: Optional[List[str]] = None, out=sys.stdout, err=sys.stderr) -> int:
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args, out)
    except SystemExit as exc:  # argparse usage errors
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    except (TooFewSatellites, NoEphemeris, StaleEphemeris) as exc:
        print(f"spoofsim: infeasible scenario: {exc}", file=err)
        return EXIT_INFEASIBLE
    except (IoFailure, OSError) as exc:
        print(f"spoofsim: I/O error: {exc}", file=err)
        return EXIT_IO
    except (InputError, FieldOverflow, ValueError) as exc:
        print(f"spoofsim: input error: {exc}", file=err)
        return EXIT_INPUT
    except SpoofsimError as exc:
        print(f"spoofsim: {exc}", file=err)
        return EXIT_INPUT


def main_entry():
    sys.exit(main())

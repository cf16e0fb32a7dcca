"""Exception hierarchy shared by every spoofsim module."""


class SpoofsimError(Exception):
    """Base class for all errors raised by spoofsim."""


class InputError(SpoofsimError):
    """Bad or unparseable input data. Maps to CLI exit code 2."""

    def __init__(self, message, line=None, source=None):
        self.message = message
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}"
        if line is not None:
            where += f"{':' if where else 'line '}{line}"
        super().__init__(f"{where}: {message}" if where else message)


# rinex
class UnsupportedVersion(InputError):
    pass


class MalformedHeader(InputError):
    pass


class MalformedRecord(InputError):
    pass


class NoEphemeris(SpoofsimError):
    pass


class Unhealthy(NoEphemeris):
    """Only unhealthy records cover the requested epoch."""


# geodesy
class DegenerateInput(SpoofsimError, ValueError):
    pass


# trajectory
class BadChecksum(InputError):
    pass


class NotGga(InputError):
    """A valid NMEA sentence of another type; callers normally skip it."""


class MalformedField(InputError):
    pass


class NonUniformCadence(InputError):
    pass


class MalformedRow(InputError):
    pass


class DegeneratePath(InputError):
    pass


class NonMonotonicTime(InputError):
    pass


class InsufficientFixes(InputError):
    pass


class TrajectoryError(InputError):
    """A trajectory violates the cadence or speed invariants."""


# orbits
class NoConvergence(SpoofsimError, ArithmeticError):
    pass


class StaleEphemeris(SpoofsimError):
    pass


class MissingIono(SpoofsimError):
    pass


class BelowHorizon(SpoofsimError):
    pass


# baseband
class UnknownPrn(SpoofsimError, ValueError):
    pass


class FieldOverflow(SpoofsimError, OverflowError):
    def __init__(self, field, value):
        self.field = field
        self.value = value
        super().__init__(f"{field}={value!r} does not fit its LNAV bit allocation")


class TooFewSatellites(SpoofsimError):
    pass


class IoFailure(SpoofsimError, OSError):
    pass


# receiver oracle
class StreamTooShort(SpoofsimError, ValueError):
    pass


class InsufficientData(SpoofsimError, ValueError):
    pass


class ReportMismatch(InputError):
    pass


class ClippedOutput(UserWarning):
    """Quantizer saturated on more than 0.1% of samples."""

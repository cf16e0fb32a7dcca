from pathlib import Path

import pytest

from spoofsim.baseband.synth import SynthesisConfig, Synthesizer
from spoofsim.geodesy import GeodeticPosition
from spoofsim.gpstime import GpsTime
from spoofsim.rinex import read_rinex_nav
from spoofsim.trajectory import static_scenario

FIXTURES = Path(__file__).parent / "fixtures"
NAV_PATH = FIXTURES / "brdc0780.21n"
TOKYO = GeodeticPosition(35.7, 139.7, 50.0)
T0 = GpsTime(2149, 475200.0)   # toe of the first ephemeris set in the fixture


@pytest.fixture(scope="session")
def nav():
    return read_rinex_nav(NAV_PATH)


@pytest.fixture(scope="session")
def records(nav):
    return nav[1]


@pytest.fixture(scope="session")
def iono(nav):
    return nav[0]


@pytest.fixture(scope="session")
def static_run(records, iono):
    """2 s Tokyo static scenario at default settings: (Synthesizer, iq, report)."""
    import numpy as np
    syn = Synthesizer(static_scenario(TOKYO, T0, 2.0), records, iono, SynthesisConfig())
    iq = np.concatenate(list(syn.chunks()))
    return syn, iq, syn.report()


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])

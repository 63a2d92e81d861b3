import pytest

from tlalign.alignment import InterferometerGeometry, VibrationSpec
from tlalign.beamphysics import ClusterBeam, GratingLaser

D = 133e-9

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def beam():
    return ClusterBeam.from_amu(1e5, 100.0, velocity_sigma=10.0)


@pytest.fixture
def laser():
    return GratingLaser()


@pytest.fixture
def geometry():
    return InterferometerGeometry()


@pytest.fixture
def quiet():
    return VibrationSpec()


@pytest.fixture
def record_criterion():
    """Record one acceptance line; the summary is printed at the end of the run."""

    def record(number, description, passed, detail=""):
        status = "PASS" if passed else "FAIL"
        ACCEPTANCE_LINES.append(f"[{status}] criterion {number}: {description} {detail}".rstrip())
        assert passed, f"criterion {number} failed: {description} {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import numpy as np
import pytest

from bitlink import channel, constellation, shaping

ACCEPTANCE_LINES = []


def record_criterion(label, ok, detail):
    """Collect one acceptance verdict; printed in the terminal summary."""
    verdict = "PASS" if ok else "FAIL"
    ACCEPTANCE_LINES.append(f"{verdict} {label}: {detail}")
    assert ok, f"{label}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def qam16():
    return constellation.build_uniform_qam(16)


@pytest.fixture(scope="session")
def qam32():
    return constellation.build_uniform_qam(32)


@pytest.fixture(scope="session")
def qam64():
    return constellation.build_uniform_qam(64)


@pytest.fixture(scope="session")
def qam128():
    return constellation.build_uniform_qam(128)


@pytest.fixture(scope="session")
def ps64():
    return constellation.build_shaped_qam64(shaping.find_mb_nu(1.6).prior)


@pytest.fixture(scope="session")
def qam16_model(qam16):
    return channel.build_dmc(qam16, 12.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20260822)
